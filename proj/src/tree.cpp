#include "prf/tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "prf/error.hpp"

namespace prf {

// ---------------------------------------------------------------------------
// Label distributions and entropy

LabelDistribution LabelDistribution::from_counts(std::vector<std::uint64_t> counts) {
    LabelDistribution d;
    d.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    d.counts = std::move(counts);
    return d;
}

void LabelDistribution::add(std::size_t label, std::uint64_t n) {
    if (label >= counts.size()) counts.resize(label + 1, 0);
    counts[label] += n;
    total += n;
}

std::size_t LabelDistribution::majority() const {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c;
    }
    return best;
}

std::size_t LabelDistribution::distinct() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
}

namespace {

double entropy_of_counts(std::span<const std::uint64_t> counts, std::uint64_t total) {
    if (total == 0) return 0.0;
    const double n = static_cast<double>(total);
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

/// Running statistics of target values: class counts or moments.
class TargetStats {
public:
    explicit TargetStats(const TargetInfo& target)
        : regression_(target.regression), counts_(target.regression ? 0 : target.num_classes, 0) {}

    void add(double y, std::uint64_t times = 1) {
        n_ += times;
        if (regression_) {
            sum_ += y * static_cast<double>(times);
            sumsq_ += y * y * static_cast<double>(times);
        } else {
            const auto label = static_cast<std::size_t>(y);
            if (label >= counts_.size()) counts_.resize(label + 1, 0);
            counts_[label] += times;
        }
    }

    TargetStats minus(const TargetStats& other) const {
        TargetStats r = *this;
        r.n_ -= other.n_;
        r.sum_ -= other.sum_;
        r.sumsq_ -= other.sumsq_;
        for (std::size_t c = 0; c < other.counts_.size(); ++c) r.counts_[c] -= other.counts_[c];
        return r;
    }

    std::uint64_t size() const { return n_; }

    double impurity() const {
        if (n_ == 0) return 0.0;
        if (!regression_) return entropy_of_counts(counts_, n_);
        const double n = static_cast<double>(n_);
        const double mean = sum_ / n;
        return std::max(0.0, sumsq_ / n - mean * mean);
    }

private:
    bool regression_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t n_ = 0;
    double sum_ = 0.0;
    double sumsq_ = 0.0;
};

double proportion_entropy(std::span<const std::uint64_t> sizes, std::uint64_t total) {
    return entropy_of_counts(sizes, total);
}

void require_rows(RowSpan rows) {
    if (rows.empty()) throw InvalidArgument("active row set is empty");
}

const SubsetEntry& entry_at(const FeatureSubset& fs, std::uint64_t row) {
    if (row >= fs.entries.size()) throw InvalidArgument("row index out of range for feature subset");
    return fs.entries[row];
}

std::map<std::int64_t, TargetStats> partition(const FeatureSubset& fs, RowSpan rows, const SplitRule& rule,
                                              const TargetInfo& target) {
    if (rule.feature_index != fs.feature_index) {
        throw InvalidArgument("split rule references feature " + std::to_string(rule.feature_index) +
                              " but subset holds feature " + std::to_string(fs.feature_index));
    }
    std::map<std::int64_t, TargetStats> parts;
    for (auto r : rows) {
        const auto& e = entry_at(fs, r);
        parts.try_emplace(rule.branch_of(e.value), target).first->second.add(e.target);
    }
    return parts;
}

}  // namespace

double entropy(const LabelDistribution& dist) { return entropy_of_counts(dist.counts, dist.total); }

// ---------------------------------------------------------------------------
// Split rules and per-feature gain ratio

SplitRule SplitRule::multiway(std::size_t feature, std::vector<std::int64_t> values) {
    SplitRule r;
    r.kind = SplitKind::kMultiway;
    r.feature_index = feature;
    r.values = std::move(values);
    return r;
}

SplitRule SplitRule::threshold(std::size_t feature, double cut) {
    SplitRule r;
    r.kind = SplitKind::kThreshold;
    r.feature_index = feature;
    r.cut = cut;
    return r;
}

std::int64_t SplitRule::branch_of(double value) const {
    if (kind == SplitKind::kThreshold) return value <= cut ? 0 : 1;
    return static_cast<std::int64_t>(std::llround(value));
}

double target_impurity(const FeatureSubset& fs, RowSpan rows, const TargetInfo& target) {
    TargetStats all(target);
    for (auto r : rows) all.add(entry_at(fs, r).target);
    return all.impurity();
}

double feature_entropy(const FeatureSubset& fs, RowSpan rows, const SplitRule& rule, const TargetInfo& target) {
    require_rows(rows);
    const auto parts = partition(fs, rows, rule, target);
    const double n = static_cast<double>(rows.size());
    double h = 0.0;
    for (const auto& [label, stats] : parts) h += static_cast<double>(stats.size()) / n * stats.impurity();
    return h;
}

double split_info(const FeatureSubset& fs, RowSpan rows, const SplitRule& rule) {
    if (rows.empty()) return 0.0;
    if (rule.feature_index != fs.feature_index) {
        throw InvalidArgument("split rule does not reference the subset's feature");
    }
    std::map<std::int64_t, std::uint64_t> sizes;
    for (auto r : rows) ++sizes[rule.branch_of(entry_at(fs, r).value)];
    std::vector<std::uint64_t> counts;
    for (const auto& [label, c] : sizes) counts.push_back(c);
    return proportion_entropy(counts, rows.size());
}

namespace {

GainRatioResult degenerate_result(std::size_t feature, double h_target, SplitRule rule) {
    GainRatioResult r;
    r.feature_index = feature;
    r.entropy_target = h_target;
    r.entropy_feature = h_target;
    r.best_partition = std::move(rule);
    r.degenerate = true;
    return r;
}

GainRatioResult categorical_gain_ratio(const FeatureSubset& fs, RowSpan rows, const TargetInfo& target,
                                       std::size_t min_leaf) {
    TargetStats all(target);
    std::map<std::int64_t, TargetStats> parts;
    for (auto r : rows) {
        const auto& e = entry_at(fs, r);
        all.add(e.target);
        parts.try_emplace(static_cast<std::int64_t>(std::llround(e.value)), target).first->second.add(e.target);
    }
    const double h_target = all.impurity();
    std::vector<std::int64_t> values;
    std::vector<std::uint64_t> sizes;
    bool too_small = false;
    for (const auto& [v, s] : parts) {
        values.push_back(v);
        sizes.push_back(s.size());
        too_small = too_small || s.size() < min_leaf;
    }
    auto rule = SplitRule::multiway(fs.feature_index, values);
    if (values.size() < 2 || too_small) return degenerate_result(fs.feature_index, h_target, std::move(rule));

    const double n = static_cast<double>(rows.size());
    double h_feature = 0.0;
    for (const auto& [v, s] : parts) h_feature += static_cast<double>(s.size()) / n * s.impurity();

    GainRatioResult r;
    r.feature_index = fs.feature_index;
    r.entropy_target = h_target;
    r.entropy_feature = h_feature;
    r.split_info = proportion_entropy(sizes, rows.size());
    r.info_gain = h_target - h_feature;
    r.gain_ratio = r.split_info > 0.0 ? r.info_gain / r.split_info : 0.0;
    r.best_partition = std::move(rule);
    return r;
}

GainRatioResult continuous_gain_ratio(const FeatureSubset& fs, RowSpan rows, const TargetInfo& target,
                                      std::size_t min_leaf) {
    std::vector<std::pair<double, double>> points;
    points.reserve(rows.size());
    TargetStats all(target);
    for (auto r : rows) {
        const auto& e = entry_at(fs, r);
        points.emplace_back(e.value, e.target);
        all.add(e.target);
    }
    std::sort(points.begin(), points.end());
    const double h_target = all.impurity();
    const std::uint64_t n = points.size();
    const double nd = static_cast<double>(n);

    std::optional<GainRatioResult> best;
    TargetStats left(target);
    for (std::uint64_t i = 0; i + 1 < n; ++i) {
        left.add(points[i].second);
        const double lo = points[i].first;
        const double hi = points[i + 1].first;
        if (!(lo < hi)) continue;
        const std::uint64_t nl = i + 1;
        const std::uint64_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const TargetStats right = all.minus(left);
        const double h_feature = static_cast<double>(nl) / nd * left.impurity() +
                                 static_cast<double>(nr) / nd * right.impurity();
        const std::uint64_t sizes[2] = {nl, nr};
        const double si = proportion_entropy(sizes, n);
        const double gain = h_target - h_feature;
        const double gr = si > 0.0 ? gain / si : 0.0;
        if (!best || gr > best->gain_ratio + kGainEpsilon) {
            double cut = lo + (hi - lo) / 2.0;
            if (!(cut < hi)) cut = lo;
            GainRatioResult r;
            r.feature_index = fs.feature_index;
            r.entropy_target = h_target;
            r.entropy_feature = h_feature;
            r.split_info = si;
            r.info_gain = gain;
            r.gain_ratio = gr;
            r.best_partition = SplitRule::threshold(fs.feature_index, cut);
            best = std::move(r);
        }
    }
    if (!best) {
        const double cut = n > 0 ? points.front().first : 0.0;
        return degenerate_result(fs.feature_index, h_target, SplitRule::threshold(fs.feature_index, cut));
    }
    return *best;
}

}  // namespace

GainRatioResult gain_ratio(const FeatureSubset& fs, RowSpan rows, const TargetInfo& target,
                           std::size_t min_leaf) {
    require_rows(rows);
    min_leaf = std::max<std::size_t>(min_leaf, 1);
    if (fs.kind == FeatureKind::kCategorical) return categorical_gain_ratio(fs, rows, target, min_leaf);
    return continuous_gain_ratio(fs, rows, target, min_leaf);
}

// ---------------------------------------------------------------------------
// Variable importance and dimension reduction

std::vector<double> variable_importance(std::span<const GainRatioResult> results) {
    if (results.empty()) throw InvalidArgument("variable importance needs at least one feature");
    double sum = 0.0;
    for (const auto& r : results) sum += std::max(0.0, r.gain_ratio);
    std::vector<double> vi(results.size());
    if (!(sum > 0.0)) {
        std::fill(vi.begin(), vi.end(), 1.0 / static_cast<double>(results.size()));
        return vi;
    }
    for (std::size_t i = 0; i < results.size(); ++i) vi[i] = std::max(0.0, results[i].gain_ratio) / sum;
    return vi;
}

std::vector<std::size_t> dimension_reduce(std::span<const GainRatioResult> results, std::size_t m_selected,
                                          std::size_t k_top, Rng& rng) {
    if (m_selected > results.size()) {
        throw InvalidArgument("cannot select " + std::to_string(m_selected) + " of " +
                              std::to_string(results.size()) + " features");
    }
    if (k_top > m_selected) throw InvalidArgument("k_top exceeds m_selected");
    const auto vi = variable_importance(results);
    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (vi[a] != vi[b]) return vi[a] > vi[b];
        return results[a].feature_index < results[b].feature_index;
    });

    std::vector<std::size_t> selected;
    selected.reserve(m_selected);
    for (std::size_t i = 0; i < k_top; ++i) selected.push_back(results[order[i]].feature_index);

    std::vector<std::size_t> pool;
    for (std::size_t i = k_top; i < order.size(); ++i) pool.push_back(results[order[i]].feature_index);
    std::sort(pool.begin(), pool.end());
    for (std::size_t c = 0; c < m_selected - k_top; ++c) {
        const auto pick = c + uniform_below(rng, pool.size() - c);
        std::swap(pool[c], pool[pick]);
        selected.push_back(pool[c]);
    }
    return selected;
}

std::vector<std::size_t> dimension_reduce(std::span<const GainRatioResult> results, const Hyperparams& h,
                                          Rng& rng) {
    return dimension_reduce(results, h.m_selected, h.k_top, rng);
}

// ---------------------------------------------------------------------------
// Hyperparameters

Hyperparams Hyperparams::resolved(std::size_t num_columns) const {
    if (num_columns < 2) throw InvalidArgument("need at least one input feature");
    Hyperparams h = *this;
    const std::size_t inputs = num_columns - 1;
    if (h.m_selected == 0) {
        const auto log2_ceil = static_cast<std::size_t>(std::bit_width(num_columns - 1));
        h.m_selected = std::min(inputs, log2_ceil + 1);
    }
    if (h.k_top == 0) {
        const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(h.m_selected))));
        h.k_top = h.m_selected > 1 ? std::min(root, h.m_selected - 1) : 1;
    }
    h.validate(num_columns);
    return h;
}

void Hyperparams::validate(std::size_t num_columns) const {
    const std::size_t inputs = num_columns == 0 ? 0 : num_columns - 1;
    if (k_trees < 1) throw InvalidArgument("k_trees must be >= 1");
    if (max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
    if (min_samples_split < 2) throw InvalidArgument("min_samples_split must be >= 2");
    if (min_leaf_size < 1) throw InvalidArgument("min_leaf_size must be >= 1");
    if (m_selected < 1 || m_selected > inputs) {
        throw InvalidArgument("m_selected must be in [1, " + std::to_string(inputs) + "], got " +
                              std::to_string(m_selected));
    }
    if (k_top < 1 || k_top > m_selected) {
        throw InvalidArgument("k_top must be in [1, m_selected], got " + std::to_string(k_top));
    }
}

nlohmann::json Hyperparams::to_json() const {
    return {{"k_trees", k_trees},
            {"m_selected", m_selected},
            {"k_top", k_top},
            {"max_depth", max_depth},
            {"min_samples_split", min_samples_split},
            {"min_leaf_size", min_leaf_size},
            {"seed", seed}};
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
    Hyperparams h;
    h.k_trees = j.value("k_trees", h.k_trees);
    h.m_selected = j.value("m_selected", h.m_selected);
    h.k_top = j.value("k_top", h.k_top);
    h.max_depth = j.value("max_depth", h.max_depth);
    h.min_samples_split = j.value("min_samples_split", h.min_samples_split);
    h.min_leaf_size = j.value("min_leaf_size", h.min_leaf_size);
    h.seed = j.value("seed", h.seed);
    return h;
}

// ---------------------------------------------------------------------------
// Tree structure

const TreeNode& DecisionTree::leaf_for(std::span<const double> features) const {
    if (nodes.empty()) throw InvalidArgument("empty tree");
    const TreeNode* node = &nodes[0];
    while (!node->leaf) {
        if (node->rule.feature_index >= features.size()) {
            throw InvalidArgument("sample has " + std::to_string(features.size()) +
                                  " features, tree needs feature " + std::to_string(node->rule.feature_index));
        }
        const double v = features[node->rule.feature_index];
        if (!std::isfinite(v)) throw InvalidArgument("sample holds a non-finite value");
        const auto label = node->rule.branch_of(v);
        auto it = std::find_if(node->children.begin(), node->children.end(),
                               [&](const Branch& b) { return b.label == label; });
        if (it == node->children.end()) {
            it = std::find_if(node->children.begin(), node->children.end(),
                              [&](const Branch& b) { return b.label == node->majority_branch; });
        }
        node = &nodes.at(it->child);
    }
    return *node;
}

double DecisionTree::predict(std::span<const double> features) const {
    const auto& leaf = leaf_for(features);
    return target.regression ? leaf.value : static_cast<double>(leaf.distribution.majority());
}

std::size_t DecisionTree::internal_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return !n.leaf; }));
}

std::size_t DecisionTree::leaf_count() const { return nodes.size() - internal_count(); }

std::size_t DecisionTree::depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

nlohmann::json DecisionTree::to_json() const {
    nlohmann::json jn = nlohmann::json::array();
    for (const auto& n : nodes) {
        nlohmann::json j;
        j["leaf"] = n.leaf;
        j["rows"] = n.num_rows;
        j["depth"] = n.depth;
        j["evaluated"] = n.evaluated;
        if (target.regression) {
            j["value"] = n.value;
        } else {
            j["counts"] = n.distribution.counts;
        }
        if (!n.leaf) {
            j["feature"] = n.rule.feature_index;
            if (n.rule.kind == SplitKind::kMultiway) {
                j["split"] = "multiway";
                j["values"] = n.rule.values;
            } else {
                j["split"] = "threshold";
                j["cut"] = n.rule.cut;
            }
            j["gain_ratio"] = n.gain_ratio;
            j["majority"] = n.majority_branch;
            nlohmann::json children = nlohmann::json::array();
            for (const auto& b : n.children) children.push_back({b.label, b.child});
            j["children"] = std::move(children);
        }
        jn.push_back(std::move(j));
    }
    return {{"index", tree_index},
            {"features", selected_features},
            {"oob_accuracy", oob_accuracy},
            {"oob_size", oob_size},
            {"nodes", std::move(jn)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j, const TargetInfo& target) {
    DecisionTree t;
    t.target = target;
    try {
        t.tree_index = j.at("index").get<std::size_t>();
        t.selected_features = j.at("features").get<std::vector<std::size_t>>();
        t.oob_accuracy = j.at("oob_accuracy").get<double>();
        t.oob_size = j.value("oob_size", std::uint64_t{0});
        for (const auto& jn : j.at("nodes")) {
            TreeNode n;
            n.leaf = jn.at("leaf").get<bool>();
            n.num_rows = jn.at("rows").get<std::uint64_t>();
            n.depth = jn.at("depth").get<std::size_t>();
            n.evaluated = jn.at("evaluated").get<bool>();
            if (target.regression) {
                n.value = jn.at("value").get<double>();
            } else {
                n.distribution = LabelDistribution::from_counts(jn.at("counts").get<std::vector<std::uint64_t>>());
            }
            if (!n.leaf) {
                const auto feature = jn.at("feature").get<std::size_t>();
                if (jn.at("split").get<std::string>() == "multiway") {
                    n.rule = SplitRule::multiway(feature, jn.at("values").get<std::vector<std::int64_t>>());
                } else {
                    n.rule = SplitRule::threshold(feature, jn.at("cut").get<double>());
                }
                n.gain_ratio = jn.at("gain_ratio").get<double>();
                n.majority_branch = jn.at("majority").get<std::int64_t>();
                for (const auto& b : jn.at("children")) {
                    n.children.push_back({b.at(0).get<std::int64_t>(), b.at(1).get<std::size_t>()});
                }
            }
            t.nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed tree JSON: ") + e.what());
    }
    if (t.nodes.empty()) throw InvalidArgument("tree JSON has no nodes");
    for (const auto& n : t.nodes) {
        if (n.leaf) continue;
        if (n.children.size() < 2) throw InvalidArgument("internal node with fewer than 2 children");
        for (const auto& b : n.children) {
            if (b.child >= t.nodes.size()) throw InvalidArgument("child index out of range");
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Induction

namespace {

class TreeGrower {
public:
    TreeGrower(std::span<const FeatureSubset> subsets, const TargetInfo& target, const Hyperparams& h)
        : subsets_(subsets), target_(target), h_(h) {}

    DecisionTree grow(std::span<const std::uint64_t> sample, std::uint64_t feature_seed, std::size_t index) {
        std::vector<std::uint64_t> rows(sample.begin(), sample.end());
        std::sort(rows.begin(), rows.end());

        // Feature selection once per tree, over every input feature.
        std::vector<GainRatioResult> all;
        all.reserve(subsets_.size());
        for (const auto& fs : subsets_) all.push_back(gain_ratio(fs, rows, target_, h_.min_leaf_size));
        Rng rng(feature_seed);
        auto selected = dimension_reduce(all, h_, rng);

        tree_.tree_index = index;
        tree_.target = target_;
        tree_.selected_features = selected;
        std::vector<std::size_t> usable = selected;
        std::sort(usable.begin(), usable.end());
        std::vector<GainRatioResult> root_results;
        for (auto f : usable) root_results.push_back(all[f]);
        grow_node(std::move(rows), 0, std::move(usable), &root_results);
        return std::move(tree_);
    }

private:
    std::size_t grow_node(std::vector<std::uint64_t> rows, std::size_t depth, std::vector<std::size_t> usable,
                          const std::vector<GainRatioResult>* precomputed) {
        const std::size_t id = tree_.nodes.size();
        tree_.nodes.emplace_back();
        {
            TreeNode& node = tree_.nodes[id];
            node.depth = depth;
            node.num_rows = rows.size();
            fill_target_summary(node, rows);
        }
        const bool root = precomputed != nullptr;
        const bool stop = is_pure(tree_.nodes[id]) || rows.size() < h_.min_samples_split ||
                          depth >= h_.max_depth || usable.empty();
        if (stop) {
            tree_.nodes[id].evaluated = root;
            return id;
        }
        tree_.nodes[id].evaluated = true;

        std::vector<GainRatioResult> results;
        if (root) {
            results = *precomputed;
        } else {
            for (auto f : usable) results.push_back(gain_ratio(subsets_[f], rows, target_, h_.min_leaf_size));
        }
        const GainRatioResult* best = nullptr;
        for (const auto& r : results) {
            if (r.degenerate || !(r.info_gain > kGainEpsilon) || !(r.gain_ratio > 0.0)) continue;
            if (best == nullptr || r.gain_ratio > best->gain_ratio + kGainEpsilon) best = &r;
        }
        if (best == nullptr) return id;

        const SplitRule rule = best->best_partition;
        const double gr = best->gain_ratio;
        const auto& fs = subsets_[rule.feature_index];
        std::map<std::int64_t, std::vector<std::uint64_t>> parts;
        for (auto r : rows) parts[rule.branch_of(fs.entries[r].value)].push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        std::int64_t majority = parts.begin()->first;
        std::size_t majority_size = 0;
        for (const auto& [label, part] : parts) {
            if (part.size() > majority_size) {
                majority = label;
                majority_size = part.size();
            }
        }
        std::vector<std::size_t> child_usable = usable;
        if (rule.kind == SplitKind::kMultiway) {
            std::erase(child_usable, rule.feature_index);
        }
        std::vector<Branch> children;
        for (auto& [label, part] : parts) {
            const auto child = grow_node(std::move(part), depth + 1, child_usable, nullptr);
            children.push_back({label, child});
        }
        TreeNode& node = tree_.nodes[id];
        node.leaf = false;
        node.rule = rule;
        node.gain_ratio = gr;
        node.children = std::move(children);
        node.majority_branch = majority;
        return id;
    }

    void fill_target_summary(TreeNode& node, const std::vector<std::uint64_t>& rows) {
        const auto& entries = subsets_.front().entries;
        if (target_.regression) {
            double sum = 0.0;
            for (auto r : rows) sum += entries[r].target;
            node.value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
            double lo = rows.empty() ? 0.0 : entries[rows.front()].target;
            double hi = lo;
            for (auto r : rows) {
                lo = std::min(lo, entries[r].target);
                hi = std::max(hi, entries[r].target);
            }
            node.distribution = {};
            node.distribution.total = rows.size();
            pure_regression_ = lo == hi;
        } else {
            node.distribution = LabelDistribution(target_.num_classes);
            for (auto r : rows) node.distribution.add(static_cast<std::size_t>(entries[r].target));
        }
    }

    bool is_pure(const TreeNode& node) const {
        if (target_.regression) return pure_regression_;
        return node.distribution.distinct() <= 1;
    }

    std::span<const FeatureSubset> subsets_;
    TargetInfo target_;
    Hyperparams h_;
    DecisionTree tree_;
    bool pure_regression_ = false;
};

}  // namespace

DecisionTree train_tree(std::span<const std::uint64_t> sample, std::span<const FeatureSubset> subsets,
                        const TargetInfo& target, const Hyperparams& h, std::uint64_t feature_seed,
                        std::size_t tree_index) {
    if (sample.empty()) throw InvalidArgument("bootstrap sample is empty");
    if (subsets.empty()) throw InvalidArgument("no feature subsets");
    for (std::size_t j = 0; j < subsets.size(); ++j) {
        if (subsets[j].feature_index != j) throw InvalidArgument("feature subsets must be in index order");
        if (subsets[j].entries.size() != subsets.front().entries.size()) {
            throw InvalidArgument("feature subsets disagree on row count");
        }
    }
    const std::uint64_t n = subsets.front().entries.size();
    for (auto r : sample) {
        if (r >= n) throw InvalidArgument("sampled row index out of range");
    }
    h.validate(subsets.size() + 1);
    return TreeGrower(subsets, target, h).grow(sample, feature_seed, tree_index);
}

}  // namespace prf
