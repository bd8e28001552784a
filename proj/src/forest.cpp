#include "prf/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "prf/error.hpp"
#include "prf/random.hpp"

namespace prf {

namespace {

inline constexpr const char* kForestFormat = "prf-forest/1";

std::vector<double> row_features(std::span<const FeatureSubset> subsets, std::uint64_t row) {
    std::vector<double> x(subsets.size());
    for (std::size_t j = 0; j < subsets.size(); ++j) x[j] = subsets[j].entries[row].value;
    return x;
}

/// Accuracy of one tree over explicit (features, target) rows.
template <typename RowFn>
TreeAccuracy accuracy_over(const DecisionTree& t, const OobSet& oob, RowFn&& row) {
    TreeAccuracy acc;
    acc.evaluated = oob.row_indexes.size();
    if (oob.row_indexes.empty()) {
        acc.empty = true;
        return acc;
    }
    if (!t.target.regression) {
        std::uint64_t correct = 0;
        for (auto i : oob.row_indexes) {
            auto [x, y] = row(i);
            if (t.predict(x) == y) ++correct;
        }
        acc.value = static_cast<double>(correct) / static_cast<double>(oob.row_indexes.size());
        return acc;
    }
    double sse = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
    for (auto i : oob.row_indexes) {
        auto [x, y] = row(i);
        const double e = t.predict(x) - y;
        sse += e * e;
        sum += y;
        sumsq += y * y;
    }
    const double n = static_cast<double>(oob.row_indexes.size());
    const double sst = sumsq - sum * sum / n;
    if (sst <= 0.0) {
        acc.value = sse == 0.0 ? 1.0 : 0.0;
    } else {
        acc.value = std::clamp(1.0 - sse / sst, 0.0, 1.0);
    }
    return acc;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::size_t winning_class(std::span<const double> tally) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < tally.size(); ++c) {
        if (tally[c] > tally[best]) best = c;
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Training

Forest train(const Schema& schema, std::span<const FeatureSubset> subsets, const DsiTable& dsi,
             const Hyperparams& h_in, const TrainOptions& options) {
    const Hyperparams h = h_in.resolved(schema.num_columns());
    if (subsets.size() != schema.num_inputs()) throw InvalidArgument("subset count does not match schema");
    const std::uint64_t n = subsets.front().entries.size();
    if (dsi.num_rows() != n) throw InvalidArgument("DSI table row count does not match the data");
    if (dsi.num_trees() != h.k_trees) throw InvalidArgument("DSI table tree count does not match k_trees");

    const TargetInfo target = TargetInfo::of(schema);
    Forest f;
    f.schema = schema;
    f.hyperparams = h;
    f.num_rows = n;
    f.dsi_digest = dsi.digest();
    f.trees.resize(h.k_trees);

    parallel_for(h.k_trees, options.threads, [&](std::size_t i) {
        const auto sample = dsi.row(i);
        auto tree = train_tree(sample, subsets, target, h, derive_seed(h.seed, Stream::kFeatureSelection, i), i);
        const auto acc = accuracy_over(tree, oob_indices(dsi, i), [&](std::uint64_t r) {
            return std::pair{row_features(subsets, r), subsets.front().entries[r].target};
        });
        tree.oob_accuracy = acc.value;
        tree.oob_size = acc.evaluated;
        f.trees[i] = std::move(tree);
    });
    return f;
}

Forest train(const Dataset& d, const Hyperparams& h_in, const TrainOptions& options) {
    if (d.num_rows() == 0) throw InvalidArgument("cannot train on an empty dataset");
    const Hyperparams h = h_in.resolved(d.num_columns());
    const auto subsets = vertical_partition(d);
    const auto dsi = DsiTable::build(d.num_rows(), h.k_trees, h.seed);
    return train(d.schema(), subsets, dsi, h, options);
}

TreeAccuracy tree_accuracy(const DecisionTree& t, const OobSet& oob, const Dataset& d) {
    for (auto i : oob.row_indexes) {
        if (i >= d.num_rows()) throw InvalidArgument("OOB row index out of range");
    }
    return accuracy_over(t, oob, [&](std::uint64_t r) {
        auto x = d.features(r);
        return std::pair{std::vector<double>(x.begin(), x.end()), d.target(r)};
    });
}

void reweight(Forest& f, const Dataset& d) {
    if (d.num_rows() != f.num_rows) throw InvalidArgument("dataset row count does not match the forest");
    const auto dsi = f.dsi();
    for (std::size_t i = 0; i < f.trees.size(); ++i) {
        const auto acc = tree_accuracy(f.trees[i], oob_indices(dsi, i), d);
        f.trees[i].oob_accuracy = acc.value;
        f.trees[i].oob_size = acc.evaluated;
    }
}

std::vector<double> Forest::weights() const {
    std::vector<double> w;
    w.reserve(trees.size());
    for (const auto& t : trees) w.push_back(t.oob_size == 0 ? 0.0 : t.oob_accuracy);
    return w;
}

DsiTable Forest::dsi() const {
    auto t = DsiTable::build(num_rows, trees.size(), hyperparams.seed);
    if (!dsi_digest.empty() && t.digest() != dsi_digest) {
        throw InvalidArgument("rebuilt DSI table does not match the forest's digest");
    }
    return t;
}

// ---------------------------------------------------------------------------
// Prediction

RegressionMode regression_mode_from_string(const std::string& text) {
    if (text == "normalized") return RegressionMode::kNormalized;
    if (text == "paper-literal") return RegressionMode::kPaperLiteral;
    throw InvalidArgument("unknown regression mode '" + text + "'");
}

PredictionReport predict_classification(const Forest& f, std::span<const std::vector<double>> samples) {
    if (f.regression()) throw SchemaMismatch("classification requested on a regression forest");
    const auto classes = f.schema.num_classes();
    const auto inputs = f.schema.num_inputs();
    const auto w = f.weights();
    PredictionReport report;
    report.outputs.reserve(samples.size());
    report.tallies.reserve(samples.size());
    for (const auto& x : samples) {
        if (x.size() != inputs) {
            throw SchemaMismatch("sample has " + std::to_string(x.size()) + " features, model expects " +
                                 std::to_string(inputs));
        }
        std::vector<double> tally(classes, 0.0);
        for (std::size_t i = 0; i < f.trees.size(); ++i) {
            const auto c = static_cast<std::size_t>(f.trees[i].predict(x));
            if (c < classes) tally[c] += w[i];
        }
        report.outputs.push_back(static_cast<double>(winning_class(tally)));
        report.tallies.push_back(std::move(tally));
    }
    return report;
}

PredictionReport predict_regression(const Forest& f, std::span<const std::vector<double>> samples,
                                    RegressionMode mode) {
    if (!f.regression()) throw SchemaMismatch("regression requested on a classification forest");
    const auto inputs = f.schema.num_inputs();
    const auto w = f.weights();
    double weight_sum = 0.0;
    for (double v : w) weight_sum += v;
    const double k = static_cast<double>(f.trees.size());
    PredictionReport report;
    for (const auto& x : samples) {
        if (x.size() != inputs) {
            throw SchemaMismatch("sample has " + std::to_string(x.size()) + " features, model expects " +
                                 std::to_string(inputs));
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < f.trees.size(); ++i) acc += w[i] * f.trees[i].predict(x);
        if (mode == RegressionMode::kPaperLiteral) {
            report.outputs.push_back(acc / k);
        } else {
            report.outputs.push_back(weight_sum > 0.0 ? acc / weight_sum : 0.0);
        }
    }
    return report;
}

PredictionReport predict(const Forest& f, std::span<const std::vector<double>> samples, RegressionMode mode) {
    return f.regression() ? predict_regression(f, samples, mode) : predict_classification(f, samples);
}

double oob_error(const Forest& f, const Dataset& d, const DsiTable& t, OobAudit* audit) {
    if (t.num_trees() != f.trees.size() || t.num_rows() != d.num_rows()) {
        throw InvalidArgument("DSI table shape does not match forest and dataset");
    }
    if (!f.dsi_digest.empty() && t.digest() != f.dsi_digest) {
        throw InvalidArgument("DSI table is not the one the forest was trained on");
    }
    const auto w = f.weights();
    const auto classes = f.schema.num_classes();
    const auto n = d.num_rows();
    std::vector<std::vector<double>> tallies(f.regression() ? 0 : n, std::vector<double>(classes, 0.0));
    std::vector<double> wsum(n, 0.0), wpred(n, 0.0);
    std::vector<std::uint64_t> votes(n, 0);
    for (std::size_t i = 0; i < f.trees.size(); ++i) {
        for (auto r : oob_indices(t, i).row_indexes) {
            const auto x = d.features(r);
            const double p = f.trees[i].predict(x);
            ++votes[r];
            if (audit) audit->votes.emplace_back(i, r);
            if (f.regression()) {
                wsum[r] += w[i];
                wpred[r] += w[i] * p;
            } else if (static_cast<std::size_t>(p) < classes) {
                tallies[r][static_cast<std::size_t>(p)] += w[i];
            }
        }
    }
    std::uint64_t counted = 0;
    double loss = 0.0;
    for (std::uint64_t r = 0; r < n; ++r) {
        if (votes[r] == 0) continue;
        ++counted;
        if (f.regression()) {
            const double pred = wsum[r] > 0.0 ? wpred[r] / wsum[r] : 0.0;
            const double e = pred - d.target(r);
            loss += e * e;
        } else if (static_cast<double>(winning_class(tallies[r])) != d.target(r)) {
            loss += 1.0;
        }
    }
    if (counted == 0) throw InvalidArgument("OOB error undefined: no row has an out-of-bag vote");
    return loss / static_cast<double>(counted);
}

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json Forest::to_json() const {
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& t : trees) jt.push_back(t.to_json());
    return {{"format", kForestFormat},
            {"task", regression() ? "regression" : "classification"},
            {"schema", schema.to_json()},
            {"hyperparams", hyperparams.to_json()},
            {"num_rows", num_rows},
            {"dsi_digest", dsi_digest},
            {"trees", std::move(jt)}};
}

Forest Forest::from_json(const nlohmann::json& j) {
    Forest f;
    try {
        if (j.at("format").get<std::string>() != kForestFormat) {
            throw InvalidArgument("unsupported model format '" + j.at("format").get<std::string>() + "'");
        }
        f.schema = Schema::from_json(j.at("schema"));
        f.hyperparams = Hyperparams::from_json(j.at("hyperparams"));
        f.num_rows = j.at("num_rows").get<std::uint64_t>();
        f.dsi_digest = j.at("dsi_digest").get<std::string>();
        const auto target = TargetInfo::of(f.schema);
        for (const auto& jt : j.at("trees")) f.trees.push_back(DecisionTree::from_json(jt, target));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed model JSON: ") + e.what());
    }
    if (f.trees.empty()) throw InvalidArgument("model has no trees");
    for (const auto& t : f.trees) {
        if (t.oob_accuracy < 0.0 || t.oob_accuracy > 1.0) throw InvalidArgument("tree weight outside [0, 1]");
    }
    return f;
}

}  // namespace prf
