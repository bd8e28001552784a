#pragma once

// Deterministic, single-threaded model of training on a cluster: feature
// subsets are statically placed on slave nodes, every tree's training is
// unrolled into a staged task DAG, and a discrete-event loop plays the DAGs
// on the modeled nodes while counting bytes and simulated seconds.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prf/dataset.hpp"
#include "prf/forest.hpp"
#include "prf/tree.hpp"

namespace prf::sim {

/// Node id used for the master in trace events.
inline constexpr std::int64_t kMasterNode = -1;

struct HostedSubset {
    std::size_t subset = 0;
    bool full = true;
    std::uint64_t row_begin = 0;
    std::uint64_t row_end = 0;
    std::uint64_t bytes = 0;
};

struct SlaveNode {
    std::int64_t node_id = 0;
    std::uint64_t capacity_bytes = 0;
    std::uint64_t available_bytes = 0;
    std::string rack_tag;
    unsigned slots = 1;
    std::vector<HostedSubset> hosted;

    static SlaveNode make(std::int64_t id, std::uint64_t capacity, std::string rack = "", unsigned slots = 1);
};

/// Placement order: rack tag, then node id.
std::vector<SlaveNode> sorted_by_rack(std::vector<SlaveNode> nodes);

/// Subset larger than (a), equal to (b), or smaller than (c) the first
/// available node's free space.
enum class Scenario : std::uint8_t { kA, kB, kC };
const char* to_string(Scenario s);

struct Fragment {
    std::int64_t node_id = 0;
    std::uint64_t row_begin = 0;
    std::uint64_t row_end = 0;
    std::uint64_t bytes = 0;
};

struct Placement {
    std::size_t subset = 0;
    Scenario scenario = Scenario::kC;
    std::uint64_t rows = 0;
    std::uint64_t bytes = 0;
    std::vector<Fragment> fragments;  // one entry unless scenario a

    std::vector<std::int64_t> hosts() const;
};

/// Which nodes hold which subset (indexed by subset id).
struct AllocationPlan {
    std::vector<Placement> entries;

    const Placement& at(std::size_t subset) const;
    bool hosts(std::size_t subset, std::int64_t node) const;
    std::uint64_t total_bytes() const;
    nlohmann::json to_json() const;
};

struct SubsetExtent {
    std::size_t subset = 0;
    std::uint64_t rows = 0;
    std::uint64_t bytes = 0;
};

std::vector<SubsetExtent> extents_of(std::span<const FeatureSubset> subsets);
/// Extents of the M-1 subsets of an N-row table, without materializing it.
std::vector<SubsetExtent> extents_for(std::uint64_t num_rows, std::size_t num_inputs);

struct Allocation {
    AllocationPlan plan;
    std::vector<SlaveNode> nodes;  // in placement order, capacities updated
};

/// Places subsets in index order on nodes in rack order: whole on the first
/// node with free space if it fits there, otherwise split into contiguous
/// row ranges filling consecutive nodes. Throws CapacityError naming the
/// first subset that cannot be placed.
Allocation allocate(std::span<const SubsetExtent> subsets, std::vector<SlaveNode> nodes);
Allocation allocate(std::span<const FeatureSubset> subsets, std::vector<SlaveNode> nodes);

/// n identical nodes whose capacities together just hold `total_bytes`.
std::vector<SlaveNode> balanced_cluster(std::size_t n, std::uint64_t total_bytes, unsigned slots = 1);

// ---------------------------------------------------------------------------
// Training traces and task DAGs

struct TraceNode {
    std::vector<std::int64_t> path;  // branch labels from the root
    std::size_t depth = 0;
    std::uint64_t rows = 0;
    bool evaluated = false;
    std::vector<std::size_t> candidates;  // features still usable here
    std::optional<std::size_t> split_feature;
    std::vector<std::size_t> children;  // indexes into TreeTrace::nodes
};

/// What training did for one tree, plus what the simulator needs to size
/// statistics messages.
struct TreeTrace {
    std::size_t tree_index = 0;
    std::vector<std::size_t> selected_features;
    std::vector<TraceNode> nodes;  // nodes[0] is the root
    std::vector<FeatureKind> feature_kinds;
    std::vector<std::size_t> vocabulary_sizes;  // 0 for continuous features
    std::size_t label_bins = 2;                 // classes, or 3 moments for regression
    std::uint64_t num_rows = 0;
};

TreeTrace trace_of(const DecisionTree& tree, const Schema& schema);

enum class TaskKind : std::uint8_t { kGainRatio, kNodeSplit };
enum class Locality : std::uint8_t { kNodeLocal, kAny };
const char* to_string(TaskKind k);
const char* to_string(Locality l);

struct SimTask {
    std::uint64_t id = 0;  // (tree_index << 32) | position in the DAG
    TaskKind kind = TaskKind::kGainRatio;
    std::size_t tree_index = 0;
    std::optional<std::size_t> feature;  // gain-ratio tasks only
    std::vector<std::int64_t> node_path;
    Locality locality = Locality::kNodeLocal;
    std::vector<std::uint64_t> deps;
    std::uint64_t est_rows = 0;
    std::size_t stage = 1;
    std::uint64_t stat_bins = 0;  // distinct feature values a partial result covers
};

struct TaskDag {
    std::size_t tree_index = 0;
    std::vector<SimTask> tasks;                  // topological order
    std::vector<std::vector<std::uint64_t>> stages;  // stages[s] holds stage s+1
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;  // (dependency, dependent)
    std::size_t label_bins = 2;
    std::uint64_t num_rows = 0;
    std::size_t num_inputs = 0;

    const SimTask& task(std::uint64_t id) const;
    std::size_t count(TaskKind kind) const;
};

/// One stage per tree level holding evaluated nodes: a gain-ratio task per
/// (node, candidate feature) and a node-split task per node. Throws
/// InvalidArgument on an inconsistent trace, prf::Error if a candidate
/// feature is not in the plan.
TaskDag build_dag(const TreeTrace& trace, const AllocationPlan& plan);

// ---------------------------------------------------------------------------
// Scheduling

struct CostModel {
    double alpha_sec_per_row = 1e-6;
    double bandwidth_bytes_per_sec = 1e9;  // infinity: transfers are free
    double launch_overhead_sec = 1e-3;
    std::uint64_t result_record_bytes = 64;
    std::uint64_t stat_cell_bytes = 8;

    /// Default costs with free transfers.
    static CostModel zero_comm();
    double transfer_time(std::uint64_t bytes) const;

    nlohmann::json to_json() const;
    static CostModel from_json(const nlohmann::json& j);
};

enum class EventKind : std::uint8_t { kDispatch, kFinish, kTransfer };

enum class TransferKind : std::uint8_t {
    kAllocation,     // master -> slave, subset placement and DSI table
    kResultRecord,   // gain-ratio result -> node-split task
    kFragmentStats,  // partition statistics between fragment hosts
    kFeatureData,    // raw feature rows between slaves
};
const char* to_string(EventKind k);
const char* to_string(TransferKind k);

struct TraceEvent {
    EventKind event = EventKind::kDispatch;
    double time = 0.0;
    std::int64_t node = 0;        // executing node, or destination of a transfer
    std::int64_t src = 0;         // transfers only
    std::uint64_t task = 0;       // logical SimTask id
    std::uint64_t job = 0;        // physical job index within the schedule
    std::string label;            // e.g. "GR", "GR-frag", "GR-merge", "NS"
    std::uint64_t bytes = 0;
    TransferKind transfer = TransferKind::kResultRecord;
    std::optional<std::size_t> subset;
    double duration = 0.0;        // finish events only

    nlohmann::json to_json() const;
};

struct ScheduleTrace {
    std::vector<TraceEvent> events;
    void write_jsonl(std::ostream& out) const;
};

struct CostLedger {
    std::uint64_t data_volume_cells = 0;
    std::uint64_t comm_bytes_allocation = 0;
    std::uint64_t comm_bytes_training = 0;
    std::uint64_t comm_bytes_result_records = 0;
    std::uint64_t comm_bytes_fragment_stats = 0;
    std::uint64_t comm_bytes_feature_data = 0;
    std::map<std::int64_t, double> busy_time;  // simulated seconds occupied, per node
    double makespan = 0.0;
    std::uint64_t jobs_run = 0;
    std::uint64_t starvation_polls = 0;

    nlohmann::json to_json() const;
};

struct ScheduleResult {
    ScheduleTrace trace;
    CostLedger ledger;
};

/// Plays every DAG on the nodes. Gain-ratio work runs only where its subset
/// lives (fragmented subsets run one partial task per fragment and merge the
/// statistics on the lowest-id host); node-split tasks go FIFO to the first
/// free node. Ties are broken by (ready time, job index).
ScheduleResult schedule(std::span<const TaskDag> dags, const AllocationPlan& plan,
                        std::span<const SlaveNode> nodes, const CostModel& cost);

/// Recomputes byte, busy-time and makespan totals from trace events alone.
CostLedger replay_ledger(const ScheduleTrace& trace);

// ---------------------------------------------------------------------------
// Analytic counters

enum class VolumeStrategy : std::uint8_t { kHorizontalCopy, kPrfMultiplex };
const char* to_string(VolumeStrategy s);

struct DataVolume {
    std::uint64_t data_cells = 0;   // copies of the table / feature subsets
    std::uint64_t index_cells = 0;  // DSI table (multiplexed strategy only)
    std::uint64_t total() const { return data_cells + index_cells; }
};

/// Horizontal copying stores N*M cells per tree; the multiplexed layout
/// stores 2N(M-1) subset cells once plus k*N sample indexes.
DataVolume data_volume(std::uint64_t n, std::uint64_t m, std::uint64_t k, VolumeStrategy strategy);

struct SpeedupRow {
    std::string scenario;
    double makespan = 0.0;
    double normalized_time = 0.0;  // makespan / standalone
    double speedup = 0.0;          // standalone / makespan
};

/// Normalizes each makespan by the standalone one and reports the speedup.
std::vector<SpeedupRow> speedup_report(std::span<const std::pair<std::string, double>> times, double standalone);

// ---------------------------------------------------------------------------
// Whole-forest convenience

struct ClusterConfig {
    std::vector<SlaveNode> nodes;
    CostModel cost;
    std::vector<std::size_t> node_counts;            // scaling sweep
    std::vector<std::uint64_t> volume_tree_counts;  // volume table

    static ClusterConfig from_json(const nlohmann::json& j);
    static ClusterConfig load(const std::filesystem::path& path);
};

struct Simulation {
    Allocation allocation;
    std::vector<TaskDag> dags;
    ScheduleResult result;
};

/// Allocates the forest's feature subsets on `nodes`, builds one DAG per
/// tree and schedules them.
Simulation simulate(const Forest& forest, std::vector<SlaveNode> nodes, const CostModel& cost);
Simulation simulate(std::span<const TreeTrace> traces, std::span<const SubsetExtent> subsets,
                    std::vector<SlaveNode> nodes, const CostModel& cost);

}  // namespace prf::sim
