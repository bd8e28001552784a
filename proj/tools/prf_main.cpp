// prf: train, predict, simulate and report from the command line.
//
// Exit codes: 0 ok, 1 other failure, 2 usage error or missing input path,
// 3 schema mismatch, 4 cluster capacity shortfall.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "prf/cluster_sim.hpp"
#include "prf/dataset.hpp"
#include "prf/error.hpp"
#include "prf/forest.hpp"
#include "prf/random.hpp"
#include "prf/sampling.hpp"
#include "prf/tree.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kSchemaMismatch = 3, kCapacity = 4 };

struct MissingPath : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw MissingPath(std::string(what) + " path not given");
    if (!fs::is_regular_file(path)) throw MissingPath(std::string(what) + " not found: " + path);
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string hash_text(const std::string& s) {
    prf::Fnv1a h;
    h.update(s.data(), s.size());
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << h.digest();
    return hex.str();
}

/// Seed plus a digest of everything that determines the output except
/// file locations.
struct Stamp {
    std::uint64_t seed = 0;
    std::string digest;

    static Stamp of(std::uint64_t seed, const json& config) { return {seed, hash_text(config.dump())}; }
    json to_json() const { return {{"seed", seed}, {"config_digest", digest}}; }
    std::string csv_line() const { return "# seed=" + std::to_string(seed) + " config_digest=" + digest + "\n"; }
};

fs::path output_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary);
    if (!o) throw prf::Error("cannot write " + p.string());
    o << text;
    if (!o) throw prf::Error("failed writing " + p.string());
}

prf::Forest load_model(const std::string& path) {
    require_file(path, "model file");
    json j;
    try {
        j = json::parse(read_bytes(path));
    } catch (const json::exception& e) {
        throw prf::InvalidArgument("model file " + path + " is not valid JSON: " + e.what());
    }
    return prf::Forest::from_json(j);
}

struct Options {
    std::string data, schema, model, out, cluster;
    std::optional<std::size_t> trees, m, k_top, max_depth;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string regression_mode = "normalized";
};

// ---------------------------------------------------------------------------

int cmd_train(const Options& o) {
    require_file(o.schema, "schema file");
    require_file(o.data, "data file");
    auto schema = prf::Schema::load(o.schema);
    auto data = prf::load_csv(o.data, schema);

    prf::Hyperparams h;
    if (o.trees) h.k_trees = *o.trees;
    if (o.m) h.m_selected = *o.m;
    if (o.k_top) h.k_top = *o.k_top;
    if (o.max_depth) h.max_depth = *o.max_depth;
    if (o.seed) h.seed = *o.seed;
    h = h.resolved(data.num_columns());

    const Stamp stamp = Stamp::of(h.seed, {{"command", "train"},
                                           {"hyperparams", h.to_json()},
                                           {"schema", hash_text(schema.to_json().dump())},
                                           {"data", hash_text(read_bytes(o.data))}});
    spdlog::info("training {} trees on {} rows x {} columns (m={}, k_top={}, seed={})", h.k_trees,
                 data.num_rows(), data.num_columns(), h.m_selected, h.k_top, h.seed);

    const auto start = std::chrono::steady_clock::now();
    auto forest = prf::train(data, h, {o.threads});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::optional<double> oob;
    try {
        oob = prf::oob_error(forest, data, forest.dsi());
    } catch (const prf::InvalidArgument& e) {
        spdlog::warn("{}", e.what());
    }

    const auto subsets = prf::vertical_partition(data);
    std::vector<std::uint64_t> rows(data.num_rows());
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<prf::GainRatioResult> gr;
    const auto target = prf::TargetInfo::of(data.schema());
    for (const auto& s : subsets) gr.push_back(prf::gain_ratio(s, rows, target, h.min_leaf_size));
    const auto vi = prf::variable_importance(gr);

    const fs::path dir = output_dir(o.out);
    const fs::path model_path = o.model.empty() ? dir / "model.json" : fs::path(o.model);
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());

    json model = forest.to_json();
    model["run"] = stamp.to_json();
    write_text(model_path, model.dump(1) + "\n");

    json trees = json::array();
    std::size_t empty_oob = 0;
    for (const auto& t : forest.trees) {
        trees.push_back({{"index", t.tree_index},
                         {"ca", t.oob_accuracy},
                         {"oob_size", t.oob_size},
                         {"features", t.selected_features},
                         {"nodes", t.nodes.size()},
                         {"depth", t.depth()}});
        empty_oob += t.oob_size == 0;
    }
    json importance = json::array();
    for (std::size_t j = 0; j < vi.size(); ++j)
        importance.push_back({{"feature", data.schema().column(j).name},
                              {"gain_ratio", gr[j].gain_ratio},
                              {"vi", vi[j]}});
    json metrics{{"run", stamp.to_json()},
                 {"task", forest.regression() ? "regression" : "classification"},
                 {"oob_error", oob ? json(*oob) : json(nullptr)},
                 {"oob_error_kind", forest.regression() ? "mse" : "misclassification_rate"},
                 {"hyperparams", h.to_json()},
                 {"trees", trees},
                 {"empty_oob_trees", empty_oob},
                 {"variable_importance", importance},
                 {"wall_time_sec", wall}};
    write_text(dir / "metrics.json", metrics.dump(2) + "\n");

    std::cout << "model: " << model_path.string() << "\n"
              << "metrics: " << (dir / "metrics.json").string() << "\n"
              << "oob_error: " << (oob ? std::to_string(*oob) : std::string("undefined")) << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

bool blank_file(const std::string& bytes) {
    return bytes.find_first_not_of(" \t\r\n") == std::string::npos;
}

int cmd_predict(const Options& o) {
    auto forest = load_model(o.model);
    require_file(o.data, "sample file");
    const auto mode = prf::regression_mode_from_string(o.regression_mode);
    const std::string bytes = read_bytes(o.data);

    prf::SampleSet samples;
    if (!blank_file(bytes)) {
        if (o.schema.size()) {
            require_file(o.schema, "schema file");
            auto given = prf::Schema::load(o.schema);
            if (given.num_columns() != forest.schema.num_columns())
                throw prf::SchemaMismatch("schema " + o.schema + " does not match the model's columns");
            for (std::size_t c = 0; c < given.num_columns(); ++c)
                if (given.column(c).name != forest.schema.column(c).name ||
                    given.column(c).kind != forest.schema.column(c).kind)
                    throw prf::SchemaMismatch("schema column '" + given.column(c).name +
                                              "' does not match the model");
        }
        samples = prf::load_samples(o.data, forest.schema);
    }

    const Stamp stamp = Stamp::of(forest.hyperparams.seed, {{"command", "predict"},
                                                            {"model", hash_text(read_bytes(o.model))},
                                                            {"samples", hash_text(bytes)},
                                                            {"regression_mode", o.regression_mode}});
    auto report = prf::predict(forest, samples.features, mode);

    std::ostringstream csv;
    csv << std::setprecision(17) << stamp.csv_line();
    const auto& labels = forest.schema.class_labels();
    if (forest.regression()) {
        csv << "row,prediction\n";
        for (std::size_t i = 0; i < report.outputs.size(); ++i) csv << i << ',' << report.outputs[i] << '\n';
    } else {
        csv << "row,prediction";
        for (const auto& l : labels) csv << ",tally_" << l;
        csv << '\n';
        for (std::size_t i = 0; i < report.outputs.size(); ++i) {
            csv << i << ',' << labels.at(static_cast<std::size_t>(report.outputs[i]));
            for (double t : report.tallies[i]) csv << ',' << t;
            csv << '\n';
        }
    }
    const fs::path dir = output_dir(o.out);
    write_text(dir / "predictions.csv", csv.str());

    std::cout << "predictions: " << (dir / "predictions.csv").string() << " (" << report.outputs.size()
              << " rows)\n";
    if (samples.targets && !samples.targets->empty()) {
        double loss = 0.0;
        for (std::size_t i = 0; i < report.outputs.size(); ++i) {
            const double e = report.outputs[i] - (*samples.targets)[i];
            loss += forest.regression() ? e * e : (e != 0.0 ? 1.0 : 0.0);
        }
        loss /= static_cast<double>(report.outputs.size());
        std::cout << (forest.regression() ? "mse: " : "error_rate: ") << loss << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o) {
    auto forest = load_model(o.model);
    require_file(o.cluster, "cluster file");
    auto config = prf::sim::ClusterConfig::load(o.cluster);
    const Stamp stamp = Stamp::of(forest.hyperparams.seed, {{"command", "simulate"},
                                                            {"model", hash_text(read_bytes(o.model))},
                                                            {"cluster", hash_text(read_bytes(o.cluster))}});

    auto sim = prf::sim::simulate(forest, config.nodes, config.cost);
    const auto& ledger = sim.result.ledger;
    const fs::path dir = output_dir(o.out);

    {
        std::ostringstream trace;
        json header{{"event", "header"}};
        header.update(stamp.to_json());
        trace << header.dump() << '\n';
        sim.result.trace.write_jsonl(trace);
        write_text(dir / "trace.jsonl", trace.str());
    }

    std::size_t gr = 0, ns = 0;
    for (const auto& d : sim.dags) {
        gr += d.count(prf::sim::TaskKind::kGainRatio);
        ns += d.count(prf::sim::TaskKind::kNodeSplit);
    }
    json ledger_json{{"run", stamp.to_json()},
                     {"ledger", ledger.to_json()},
                     {"cost_model", config.cost.to_json()},
                     {"allocation", sim.allocation.plan.to_json()},
                     {"tasks", {{"gain_ratio", gr}, {"node_split", ns}, {"trees", sim.dags.size()}}}};
    write_text(dir / "ledger.json", ledger_json.dump(2) + "\n");

    const std::uint64_t n = forest.num_rows;
    const std::uint64_t m = forest.schema.num_columns();
    std::set<std::uint64_t> ks(config.volume_tree_counts.begin(), config.volume_tree_counts.end());
    ks.insert(forest.trees.size());
    std::ostringstream vol;
    vol << stamp.csv_line() << "k,strategy,data_cells,index_cells,total_cells\n";
    for (auto k : ks) {
        for (auto s : {prf::sim::VolumeStrategy::kHorizontalCopy, prf::sim::VolumeStrategy::kPrfMultiplex}) {
            auto v = prf::sim::data_volume(n, m, k, s);
            vol << k << ',' << prf::sim::to_string(s) << ',' << v.data_cells << ',' << v.index_cells << ','
                << v.total() << '\n';
        }
    }
    write_text(dir / "volume.csv", vol.str());

    // Scaling sweep on identical nodes just large enough for the subsets.
    const auto extents = prf::sim::extents_for(n, forest.schema.num_inputs());
    std::uint64_t total = 0;
    for (const auto& e : extents) total += e.bytes;
    std::vector<std::pair<std::string, double>> times;
    std::optional<double> standalone;
    for (auto count : config.node_counts) {
        std::vector<prf::sim::TreeTrace> traces;
        for (const auto& t : forest.trees) traces.push_back(prf::sim::trace_of(t, forest.schema));
        auto run = prf::sim::simulate(traces, extents, prf::sim::balanced_cluster(count, total), config.cost);
        times.emplace_back(std::to_string(count), run.result.ledger.makespan);
        spdlog::debug("{} nodes: makespan {:.6f}s", count, run.result.ledger.makespan);
    }
    {
        auto one = prf::sim::simulate(forest, prf::sim::balanced_cluster(1, total), config.cost);
        standalone = one.result.ledger.makespan;
    }
    auto rows = prf::sim::speedup_report(times, *standalone);
    std::ostringstream sp;
    sp << std::setprecision(17) << stamp.csv_line() << "nodes,makespan_sec,normalized_time,speedup\n";
    for (const auto& r : rows) sp << r.scenario << ',' << r.makespan << ',' << r.normalized_time << ',' << r.speedup << '\n';
    write_text(dir / "speedup.csv", sp.str());

    std::cout << "trace: " << (dir / "trace.jsonl").string() << "\n"
              << "ledger: " << (dir / "ledger.json").string() << "\n"
              << "makespan_sec: " << ledger.makespan << "\n"
              << "comm_bytes_training: " << ledger.comm_bytes_training << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_report(const Options& o) {
    auto forest = load_model(o.model);
    json report{{"task", forest.regression() ? "regression" : "classification"},
                {"trees", forest.trees.size()},
                {"hyperparams", forest.hyperparams.to_json()},
                {"num_rows", forest.num_rows},
                {"dsi_digest", forest.dsi_digest}};
    json inputs = json::array();
    for (std::size_t j = 0; j < forest.schema.num_inputs(); ++j) inputs.push_back(forest.schema.column(j).name);
    report["features"] = inputs;
    report["target"] = forest.schema.target().name;

    std::size_t nodes = 0, leaves = 0, deepest = 0, empty = 0;
    double weight_sum = 0.0;
    std::vector<std::size_t> used(forest.schema.num_inputs(), 0);
    for (const auto& t : forest.trees) {
        nodes += t.nodes.size();
        leaves += t.leaf_count();
        deepest = std::max(deepest, t.depth());
        empty += t.oob_size == 0;
        weight_sum += t.oob_size == 0 ? 0.0 : t.oob_accuracy;
        for (auto f : t.selected_features) ++used.at(f);
    }
    report["nodes_total"] = nodes;
    report["leaves_total"] = leaves;
    report["max_depth_reached"] = deepest;
    report["empty_oob_trees"] = empty;
    report["mean_weight"] = weight_sum / static_cast<double>(forest.trees.size());
    report["feature_selection_counts"] = used;

    std::string data_hash;
    if (!o.data.empty()) {
        require_file(o.data, "data file");
        auto data = prf::load_csv(o.data, forest.schema);
        if (data.num_rows() != forest.num_rows)
            throw prf::SchemaMismatch("data has " + std::to_string(data.num_rows()) + " rows, model was trained on " +
                                      std::to_string(forest.num_rows));
        report["oob_error"] = prf::oob_error(forest, data, forest.dsi());
        data_hash = hash_text(read_bytes(o.data));
    }
    const Stamp stamp = Stamp::of(forest.hyperparams.seed, {{"command", "report"},
                                                            {"model", hash_text(read_bytes(o.model))},
                                                            {"data", data_hash}});
    report["run"] = stamp.to_json();

    const fs::path dir = output_dir(o.out);
    write_text(dir / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return kOk;
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("prf");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("PRF_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Random forest training, prediction and cluster simulation"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Output directory (default: .)"); };

    auto* train = app.add_subcommand("train", "Train a forest and write model and metrics");
    train->add_option("--data", o.data, "Training CSV")->required();
    train->add_option("--schema", o.schema, "Schema JSON")->required();
    train->add_option("--model", o.model, "Model path (default: <out>/model.json)");
    train->add_option("--trees", o.trees, "Number of trees");
    train->add_option("--m", o.m, "Features selected per tree");
    train->add_option("--k-top", o.k_top, "Top features always kept");
    train->add_option("--max-depth", o.max_depth, "Maximum tree depth");
    train->add_option("--seed", o.seed, "Random seed");
    train->add_option("--threads", o.threads, "Worker threads (0: all cores)");
    add_common(train);

    auto* predict = app.add_subcommand("predict", "Predict samples with a trained forest");
    predict->add_option("--model", o.model, "Model JSON")->required();
    predict->add_option("--data", o.data, "Sample CSV")->required();
    predict->add_option("--schema", o.schema, "Optional schema to check against the model");
    predict->add_option("--regression-mode", o.regression_mode, "normalized | paper-literal")
        ->check(CLI::IsMember({"normalized", "paper-literal"}));
    add_common(predict);

    auto* simulate = app.add_subcommand("simulate", "Simulate cluster training of a forest");
    simulate->add_option("--model", o.model, "Model JSON")->required();
    simulate->add_option("--cluster", o.cluster, "Cluster description JSON")->required();
    add_common(simulate);

    auto* report = app.add_subcommand("report", "Summarize a trained forest");
    report->add_option("--model", o.model, "Model JSON")->required();
    report->add_option("--data", o.data, "Training CSV, to recompute the OOB error");
    add_common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train) return cmd_train(o);
        if (*predict) return cmd_predict(o);
        if (*simulate) return cmd_simulate(o);
        if (*report) return cmd_report(o);
    } catch (const MissingPath& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const prf::SchemaMismatch& e) {
        std::cerr << "error: schema mismatch: " << e.what() << "\n";
        return kSchemaMismatch;
    } catch (const prf::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCapacity;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
