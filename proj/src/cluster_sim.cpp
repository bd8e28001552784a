#include "prf/cluster_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include "prf/error.hpp"

namespace prf::sim {

using nlohmann::json;

SlaveNode SlaveNode::make(std::int64_t id, std::uint64_t capacity, std::string rack, unsigned slots) {
    SlaveNode n;
    n.node_id = id;
    n.capacity_bytes = capacity;
    n.available_bytes = capacity;
    n.rack_tag = std::move(rack);
    n.slots = slots;
    return n;
}

std::vector<SlaveNode> sorted_by_rack(std::vector<SlaveNode> nodes) {
    std::stable_sort(nodes.begin(), nodes.end(), [](const SlaveNode& a, const SlaveNode& b) {
        if (a.rack_tag != b.rack_tag) return a.rack_tag < b.rack_tag;
        return a.node_id < b.node_id;
    });
    return nodes;
}

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::kA: return "a";
        case Scenario::kB: return "b";
        case Scenario::kC: return "c";
    }
    return "?";
}

std::vector<std::int64_t> Placement::hosts() const {
    std::vector<std::int64_t> out;
    for (const auto& f : fragments) out.push_back(f.node_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const Placement& AllocationPlan::at(std::size_t subset) const {
    if (subset >= entries.size() || entries[subset].subset != subset)
        throw Error("feature subset " + std::to_string(subset) + " is not hosted");
    return entries[subset];
}

bool AllocationPlan::hosts(std::size_t subset, std::int64_t node) const {
    if (subset >= entries.size()) return false;
    for (const auto& f : entries[subset].fragments)
        if (f.node_id == node) return true;
    return false;
}

std::uint64_t AllocationPlan::total_bytes() const {
    std::uint64_t total = 0;
    for (const auto& p : entries)
        for (const auto& f : p.fragments) total += f.bytes;
    return total;
}

json AllocationPlan::to_json() const {
    json out = json::array();
    for (const auto& p : entries) {
        json frags = json::array();
        for (const auto& f : p.fragments)
            frags.push_back({{"node", f.node_id}, {"row_begin", f.row_begin}, {"row_end", f.row_end},
                             {"bytes", f.bytes}});
        out.push_back({{"subset", p.subset}, {"scenario", to_string(p.scenario)}, {"rows", p.rows},
                       {"bytes", p.bytes}, {"fragments", std::move(frags)}});
    }
    return out;
}

std::vector<SubsetExtent> extents_of(std::span<const FeatureSubset> subsets) {
    std::vector<SubsetExtent> out;
    out.reserve(subsets.size());
    for (std::size_t j = 0; j < subsets.size(); ++j)
        out.push_back({j, subsets[j].entries.size(), subsets[j].size_bytes()});
    return out;
}

std::vector<SubsetExtent> extents_for(std::uint64_t num_rows, std::size_t num_inputs) {
    std::vector<SubsetExtent> out;
    for (std::size_t j = 0; j < num_inputs; ++j) out.push_back({j, num_rows, subset_size_bytes(num_rows)});
    return out;
}

namespace {

// Row boundary matching byte offset `b` of a subset of `bytes` bytes and `rows` rows.
std::uint64_t row_at(std::uint64_t b, std::uint64_t bytes, std::uint64_t rows) {
    if (bytes == 0) return 0;
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(b) * rows / bytes);
}

}  // namespace

Allocation allocate(std::span<const SubsetExtent> subsets, std::vector<SlaveNode> nodes) {
    Allocation out;
    out.nodes = sorted_by_rack(std::move(nodes));
    auto& ns = out.nodes;
    for (const auto& n : ns)
        if (n.available_bytes > n.capacity_bytes)
            throw InvalidArgument("node " + std::to_string(n.node_id) + " has more free space than capacity");

    std::vector<SubsetExtent> order(subsets.begin(), subsets.end());
    std::stable_sort(order.begin(), order.end(), [](auto& a, auto& b) { return a.subset < b.subset; });
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i].subset != i) throw InvalidArgument("subset ids must be 0..n-1 without gaps");

    auto shortfall = [](const SubsetExtent& s) {
        return CapacityError("insufficient cluster capacity: feature subset " + std::to_string(s.subset) + " (" +
                             std::to_string(s.bytes) + " bytes) cannot be placed");
    };

    for (const auto& s : order) {
        Placement p;
        p.subset = s.subset;
        p.rows = s.rows;
        p.bytes = s.bytes;

        std::size_t first = 0;
        while (first < ns.size() && ns[first].available_bytes == 0) ++first;
        if (first == ns.size()) throw shortfall(s);

        auto& head = ns[first];
        if (s.bytes <= head.available_bytes) {
            p.scenario = s.bytes == head.available_bytes ? Scenario::kB : Scenario::kC;
            head.available_bytes -= s.bytes;
            head.hosted.push_back({s.subset, true, 0, s.rows, s.bytes});
            p.fragments.push_back({head.node_id, 0, s.rows, s.bytes});
        } else {
            p.scenario = Scenario::kA;
            std::uint64_t offset = 0;
            std::vector<std::pair<std::size_t, Fragment>> pieces;
            for (std::size_t i = first; i < ns.size() && offset < s.bytes; ++i) {
                std::uint64_t take = std::min(ns[i].available_bytes, s.bytes - offset);
                if (take == 0) continue;
                Fragment f{ns[i].node_id, row_at(offset, s.bytes, s.rows), row_at(offset + take, s.bytes, s.rows),
                           take};
                pieces.emplace_back(i, f);
                offset += take;
            }
            if (offset < s.bytes) throw shortfall(s);
            for (auto& [i, f] : pieces) {
                ns[i].available_bytes -= f.bytes;
                ns[i].hosted.push_back({s.subset, false, f.row_begin, f.row_end, f.bytes});
                p.fragments.push_back(f);
            }
        }
        out.plan.entries.push_back(std::move(p));
    }
    return out;
}

Allocation allocate(std::span<const FeatureSubset> subsets, std::vector<SlaveNode> nodes) {
    auto ext = extents_of(subsets);
    return allocate(std::span<const SubsetExtent>(ext), std::move(nodes));
}

std::vector<SlaveNode> balanced_cluster(std::size_t n, std::uint64_t total_bytes, unsigned slots) {
    if (n == 0) throw InvalidArgument("cluster needs at least one node");
    std::uint64_t cap = (total_bytes + n - 1) / n;
    std::vector<SlaveNode> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(SlaveNode::make(static_cast<std::int64_t>(i), cap, "r0", slots));
    return out;
}

// ---------------------------------------------------------------------------

TreeTrace trace_of(const DecisionTree& tree, const Schema& schema) {
    TreeTrace t;
    t.tree_index = tree.tree_index;
    t.selected_features = tree.selected_features;
    std::sort(t.selected_features.begin(), t.selected_features.end());
    for (std::size_t j = 0; j < schema.num_inputs(); ++j) {
        const auto& c = schema.column(j);
        t.feature_kinds.push_back(c.kind);
        t.vocabulary_sizes.push_back(c.kind == FeatureKind::kCategorical ? c.values.size() : 0);
    }
    t.label_bins = schema.is_regression() ? 3 : schema.num_classes();
    if (tree.nodes.empty()) return t;
    t.num_rows = tree.nodes[0].num_rows;

    t.nodes.resize(tree.nodes.size());
    std::vector<std::size_t> stack{0};
    t.nodes[0].candidates = t.selected_features;
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        const auto& src = tree.nodes[i];
        auto& dst = t.nodes[i];
        dst.depth = src.depth;
        dst.rows = src.num_rows;
        dst.evaluated = src.evaluated;
        if (src.leaf) continue;
        std::size_t f = src.rule.feature_index;
        dst.split_feature = f;
        std::vector<std::size_t> next = dst.candidates;
        if (f < t.feature_kinds.size() && t.feature_kinds[f] == FeatureKind::kCategorical)
            next.erase(std::remove(next.begin(), next.end(), f), next.end());
        for (const auto& b : src.children) {
            dst.children.push_back(b.child);
            auto& c = t.nodes.at(b.child);
            c.path = dst.path;
            c.path.push_back(b.label);
            c.candidates = next;
            stack.push_back(b.child);
        }
    }
    return t;
}

const char* to_string(TaskKind k) { return k == TaskKind::kGainRatio ? "T_GR" : "T_NS"; }
const char* to_string(Locality l) { return l == Locality::kNodeLocal ? "NODE_LOCAL" : "ANY"; }

const SimTask& TaskDag::task(std::uint64_t id) const {
    std::uint64_t pos = id & 0xffffffffu;
    if ((id >> 32) != tree_index || pos >= tasks.size()) throw InvalidArgument("no task " + std::to_string(id));
    return tasks[pos];
}

std::size_t TaskDag::count(TaskKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(tasks.begin(), tasks.end(), [&](const SimTask& t) { return t.kind == kind; }));
}

TaskDag build_dag(const TreeTrace& trace, const AllocationPlan& plan) {
    TaskDag dag;
    dag.tree_index = trace.tree_index;
    dag.label_bins = trace.label_bins;
    dag.num_rows = trace.num_rows;
    dag.num_inputs = trace.feature_kinds.size();
    if (trace.nodes.empty()) throw InvalidArgument("trace has no root");
    if (!trace.nodes[0].evaluated) throw InvalidArgument("root must be evaluated");

    auto next_id = [&] { return (static_cast<std::uint64_t>(trace.tree_index) << 32) | dag.tasks.size(); };

    // Breadth-first so tasks come out stage by stage.
    std::vector<std::size_t> order{0};
    std::vector<std::optional<std::uint64_t>> split_task(trace.nodes.size());
    std::vector<int> parent(trace.nodes.size(), -1);
    for (std::size_t q = 0; q < order.size(); ++q) {
        std::size_t i = order[q];
        const auto& n = trace.nodes[i];
        if (!n.evaluated) {
            if (!n.children.empty()) throw InvalidArgument("unevaluated node has children");
            continue;
        }
        if (n.split_feature && n.children.empty()) throw InvalidArgument("split node has no children");
        std::vector<std::uint64_t> upstream;
        if (parent[i] >= 0) upstream.push_back(*split_task[static_cast<std::size_t>(parent[i])]);

        std::size_t stage = n.depth + 1;
        if (dag.stages.size() < stage) dag.stages.resize(stage);

        std::vector<std::uint64_t> grs;
        for (std::size_t f : n.candidates) {
            if (f >= trace.feature_kinds.size()) throw InvalidArgument("candidate feature out of range");
            const auto& placement = plan.at(f);
            if (placement.fragments.empty()) throw Error("feature subset " + std::to_string(f) + " is not hosted");
            SimTask t;
            t.id = next_id();
            t.kind = TaskKind::kGainRatio;
            t.tree_index = trace.tree_index;
            t.feature = f;
            t.node_path = n.path;
            t.locality = Locality::kNodeLocal;
            t.deps = upstream;
            t.est_rows = n.rows;
            t.stage = stage;
            t.stat_bins = trace.feature_kinds[f] == FeatureKind::kCategorical
                              ? std::min<std::uint64_t>(trace.vocabulary_sizes[f], n.rows)
                              : n.rows;
            for (auto d : upstream) dag.edges.emplace_back(d, t.id);
            grs.push_back(t.id);
            dag.stages[stage - 1].push_back(t.id);
            dag.tasks.push_back(std::move(t));
        }
        SimTask ns;
        ns.id = next_id();
        ns.kind = TaskKind::kNodeSplit;
        ns.tree_index = trace.tree_index;
        ns.node_path = n.path;
        ns.locality = Locality::kAny;
        ns.deps = grs.empty() ? upstream : grs;
        ns.est_rows = n.rows;
        ns.stage = stage;
        for (auto d : ns.deps) dag.edges.emplace_back(d, ns.id);
        split_task[i] = ns.id;
        dag.stages[stage - 1].push_back(ns.id);
        dag.tasks.push_back(std::move(ns));

        for (std::size_t c : n.children) {
            if (c >= trace.nodes.size() || c == 0) throw InvalidArgument("bad child index");
            if (trace.nodes[c].depth != n.depth + 1) throw InvalidArgument("child depth mismatch");
            parent[c] = static_cast<int>(i);
            order.push_back(c);
        }
    }
    return dag;
}

// ---------------------------------------------------------------------------

CostModel CostModel::zero_comm() {
    CostModel c;
    c.bandwidth_bytes_per_sec = std::numeric_limits<double>::infinity();
    return c;
}

double CostModel::transfer_time(std::uint64_t bytes) const {
    if (bytes == 0 || std::isinf(bandwidth_bytes_per_sec)) return 0.0;
    return static_cast<double>(bytes) / bandwidth_bytes_per_sec;
}

json CostModel::to_json() const {
    json bw = std::isinf(bandwidth_bytes_per_sec) ? json("inf") : json(bandwidth_bytes_per_sec);
    return {{"alpha_sec_per_row", alpha_sec_per_row},
            {"bandwidth_bytes_per_sec", bw},
            {"launch_overhead_sec", launch_overhead_sec},
            {"result_record_bytes", result_record_bytes},
            {"stat_cell_bytes", stat_cell_bytes}};
}

CostModel CostModel::from_json(const json& j) {
    CostModel c;
    c.alpha_sec_per_row = j.value("alpha_sec_per_row", c.alpha_sec_per_row);
    if (j.contains("bandwidth_bytes_per_sec")) {
        const auto& bw = j.at("bandwidth_bytes_per_sec");
        if (bw.is_string()) {
            if (bw.get<std::string>() != "inf") throw InvalidArgument("bandwidth must be a number or \"inf\"");
            c.bandwidth_bytes_per_sec = std::numeric_limits<double>::infinity();
        } else {
            c.bandwidth_bytes_per_sec = bw.get<double>();
        }
    }
    c.launch_overhead_sec = j.value("launch_overhead_sec", c.launch_overhead_sec);
    c.result_record_bytes = j.value("result_record_bytes", c.result_record_bytes);
    c.stat_cell_bytes = j.value("stat_cell_bytes", c.stat_cell_bytes);
    if (!(c.alpha_sec_per_row >= 0) || !(c.bandwidth_bytes_per_sec > 0) || !(c.launch_overhead_sec >= 0))
        throw InvalidArgument("cost model values must be non-negative, bandwidth positive");
    return c;
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::kDispatch: return "dispatch";
        case EventKind::kFinish: return "finish";
        case EventKind::kTransfer: return "transfer";
    }
    return "?";
}

const char* to_string(TransferKind k) {
    switch (k) {
        case TransferKind::kAllocation: return "allocation";
        case TransferKind::kResultRecord: return "result_record";
        case TransferKind::kFragmentStats: return "fragment_stats";
        case TransferKind::kFeatureData: return "feature_data";
    }
    return "?";
}

json TraceEvent::to_json() const {
    json j{{"event", to_string(event)}, {"time", time}, {"node", node}};
    if (event == EventKind::kTransfer) {
        j["src"] = src;
        j["bytes"] = bytes;
        j["kind"] = to_string(transfer);
    } else {
        j["task"] = task;
        j["job"] = job;
        j["label"] = label;
    }
    if (subset) j["subset"] = *subset;
    if (event == EventKind::kFinish) j["duration"] = duration;
    return j;
}

void ScheduleTrace::write_jsonl(std::ostream& out) const {
    for (const auto& e : events) out << e.to_json().dump() << '\n';
}

json CostLedger::to_json() const {
    json busy = json::object();
    for (const auto& [node, t] : busy_time) busy[std::to_string(node)] = t;
    return {{"data_volume_cells", data_volume_cells},
            {"comm_bytes_allocation", comm_bytes_allocation},
            {"comm_bytes_training", comm_bytes_training},
            {"comm_bytes_result_records", comm_bytes_result_records},
            {"comm_bytes_fragment_stats", comm_bytes_fragment_stats},
            {"comm_bytes_feature_data", comm_bytes_feature_data},
            {"busy_time", busy},
            {"makespan", makespan},
            {"jobs_run", jobs_run},
            {"starvation_polls", starvation_polls}};
}

namespace {

void count_transfer(CostLedger& l, TransferKind kind, std::uint64_t bytes) {
    switch (kind) {
        case TransferKind::kAllocation: l.comm_bytes_allocation += bytes; return;
        case TransferKind::kResultRecord: l.comm_bytes_result_records += bytes; break;
        case TransferKind::kFragmentStats: l.comm_bytes_fragment_stats += bytes; break;
        case TransferKind::kFeatureData: l.comm_bytes_feature_data += bytes; break;
    }
    l.comm_bytes_training += bytes;
}

struct Job {
    std::uint64_t task = 0;
    std::string label;
    std::optional<std::int64_t> pinned;
    std::optional<std::size_t> subset;
    std::uint64_t rows = 0;      // rows scanned
    std::uint64_t merge_bins = 0;  // merge jobs: statistics bins combined
    std::uint64_t out_bytes = 0;   // shipped to each dependent on another node
    TransferKind out_kind = TransferKind::kResultRecord;
    std::vector<std::size_t> deps;
    std::vector<std::size_t> dependents;
    std::size_t waiting = 0;
    double ready = 0.0;
    std::int64_t node = 0;
    double start = 0.0;
    double finish = 0.0;
    bool done = false;
};

using Queue = std::set<std::pair<double, std::size_t>>;

}  // namespace

ScheduleResult schedule(std::span<const TaskDag> dags, const AllocationPlan& plan, std::span<const SlaveNode> nodes,
                        const CostModel& cost) {
    ScheduleResult res;
    auto& ev = res.trace.events;
    auto& led = res.ledger;
    if (nodes.empty()) throw InvalidArgument("cluster has no nodes");

    std::vector<SlaveNode> order = sorted_by_rack(std::vector<SlaveNode>(nodes.begin(), nodes.end()));
    std::unordered_map<std::int64_t, std::size_t> pos_of;
    for (std::size_t p = 0; p < order.size(); ++p) {
        if (order[p].slots == 0) throw InvalidArgument("node " + std::to_string(order[p].node_id) + " has no slots");
        if (!pos_of.emplace(order[p].node_id, p).second)
            throw InvalidArgument("duplicate node id " + std::to_string(order[p].node_id));
        led.busy_time[order[p].node_id] = 0.0;
    }

    // Static placement shipped by the master before any job runs: subset
    // bytes to each host and the DSI table to every node holding data.
    if (!dags.empty()) {
        std::uint64_t n = dags.front().num_rows;
        std::uint64_t width = n <= std::numeric_limits<std::uint32_t>::max() ? 4 : 8;
        std::uint64_t dsi_bytes = n * dags.size() * width;
        std::set<std::int64_t> holders;
        for (const auto& p : plan.entries)
            for (const auto& f : p.fragments) {
                if (!pos_of.count(f.node_id))
                    throw InvalidArgument("plan uses unknown node " + std::to_string(f.node_id));
                TraceEvent e;
                e.event = EventKind::kTransfer;
                e.src = kMasterNode;
                e.node = f.node_id;
                e.bytes = f.bytes;
                e.transfer = TransferKind::kAllocation;
                e.subset = p.subset;
                ev.push_back(e);
                count_transfer(led, e.transfer, e.bytes);
                holders.insert(f.node_id);
            }
        for (auto h : holders) {
            TraceEvent e;
            e.event = EventKind::kTransfer;
            e.src = kMasterNode;
            e.node = h;
            e.bytes = dsi_bytes;
            e.transfer = TransferKind::kAllocation;
            ev.push_back(e);
            count_transfer(led, e.transfer, e.bytes);
        }
        led.data_volume_cells = data_volume(n, dags.front().num_inputs + 1, dags.size(),
                                            VolumeStrategy::kPrfMultiplex).total();
    }

    // Expand logical tasks into physical jobs.
    std::vector<Job> jobs;
    std::unordered_map<std::uint64_t, std::size_t> result_job;  // logical id -> job carrying its output
    auto link = [&](std::size_t from, std::size_t to) {
        jobs[to].deps.push_back(from);
        jobs[from].dependents.push_back(to);
    };
    for (const auto& dag : dags) {
        for (const auto& t : dag.tasks) {
            std::vector<std::size_t> upstream;
            for (auto d : t.deps) {
                auto it = result_job.find(d);
                if (it == result_job.end()) throw InvalidArgument("task dependency out of order");
                upstream.push_back(it->second);
            }
            if (t.kind == TaskKind::kNodeSplit) {
                Job j;
                j.task = t.id;
                j.label = "NS";
                j.rows = t.est_rows;
                j.out_bytes = 0;  // split decisions are not charged
                jobs.push_back(std::move(j));
                std::size_t me = jobs.size() - 1;
                for (auto u : upstream) link(u, me);
                result_job[t.id] = me;
                continue;
            }
            const auto& pl = plan.at(*t.feature);
            std::uint64_t record = cost.result_record_bytes;
            if (pl.fragments.size() == 1) {
                Job j;
                j.task = t.id;
                j.label = "GR";
                j.pinned = pl.fragments[0].node_id;
                j.subset = *t.feature;
                j.rows = t.est_rows;
                j.out_bytes = record;
                jobs.push_back(std::move(j));
                std::size_t me = jobs.size() - 1;
                for (auto u : upstream) link(u, me);
                result_job[t.id] = me;
                continue;
            }
            // Fragmented subset: partial statistics per fragment, merged on the lowest-id host.
            std::int64_t merge_host = pl.hosts().front();
            std::vector<std::size_t> parts;
            std::uint64_t merged_bins = 0;
            for (const auto& f : pl.fragments) {
                Job j;
                j.task = t.id;
                j.label = "GR-frag";
                j.pinned = f.node_id;
                j.subset = *t.feature;
                // Bootstrap rows of this node spread over the subset in proportion to its rows.
                j.rows = pl.rows == 0 ? 0
                                      : static_cast<std::uint64_t>(static_cast<unsigned __int128>(t.est_rows) *
                                                                   (f.row_end - f.row_begin) / pl.rows);
                // A fragment reports only the bins its own rows touch.
                std::uint64_t bins = std::min(t.stat_bins, j.rows);
                merged_bins += bins;
                j.out_bytes = bins * dag.label_bins * cost.stat_cell_bytes;
                j.out_kind = TransferKind::kFragmentStats;
                jobs.push_back(std::move(j));
                std::size_t me = jobs.size() - 1;
                for (auto u : upstream) link(u, me);
                parts.push_back(me);
            }
            Job m;
            m.task = t.id;
            m.label = "GR-merge";
            m.pinned = merge_host;
            m.subset = *t.feature;
            m.merge_bins = merged_bins;
            m.out_bytes = record;
            jobs.push_back(std::move(m));
            std::size_t me = jobs.size() - 1;
            for (auto p : parts) link(p, me);
            result_job[t.id] = me;
        }
    }

    std::vector<Queue> local(order.size());
    Queue shared;
    auto enqueue = [&](std::size_t j) {
        auto& job = jobs[j];
        if (job.pinned) {
            auto it = pos_of.find(*job.pinned);
            if (it == pos_of.end()) throw InvalidArgument("job pinned to unknown node " + std::to_string(*job.pinned));
            local[it->second].emplace(job.ready, j);
        } else {
            shared.emplace(job.ready, j);
        }
    };
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        jobs[j].waiting = jobs[j].deps.size();
        if (jobs[j].waiting == 0) enqueue(j);
    }

    std::vector<unsigned> free_slots(order.size());
    for (std::size_t p = 0; p < order.size(); ++p) free_slots[p] = order[p].slots;
    Queue running;  // (finish time, job)
    double now = 0.0;

    auto dispatch = [&](std::size_t j, std::size_t p) {
        auto& job = jobs[j];
        job.node = order[p].node_id;
        --free_slots[p];
        TraceEvent d;
        d.event = EventKind::kDispatch;
        d.time = now;
        d.node = job.node;
        d.task = job.task;
        d.job = j;
        d.label = job.label;
        d.subset = job.subset;
        ev.push_back(d);

        // Inputs produced elsewhere travel in parallel; wait for the slowest sender.
        std::map<std::int64_t, std::uint64_t> inbound;
        for (auto dep : job.deps) {
            const auto& src = jobs[dep];
            if (src.node == job.node || src.out_bytes == 0) continue;
            TraceEvent t;
            t.event = EventKind::kTransfer;
            t.time = now;
            t.src = src.node;
            t.node = job.node;
            t.task = src.task;
            t.job = dep;
            t.bytes = src.out_bytes;
            t.transfer = src.out_kind;
            t.subset = src.subset;
            ev.push_back(t);
            count_transfer(led, t.transfer, t.bytes);
            inbound[src.node] += src.out_bytes;
        }
        double wait = 0.0;
        for (const auto& [node, bytes] : inbound) wait = std::max(wait, cost.transfer_time(bytes));
        double work = job.label == "GR-merge" ? static_cast<double>(job.merge_bins) : static_cast<double>(job.rows);
        double duration = cost.launch_overhead_sec + cost.alpha_sec_per_row * work + wait;
        job.start = now;
        job.finish = now + duration;
        running.emplace(job.finish, j);
    };

    std::size_t completed = 0;
    while (true) {
        for (std::size_t p = 0; p < order.size(); ++p) {
            while (free_slots[p] > 0) {
                Queue* best = nullptr;
                if (!local[p].empty()) best = &local[p];
                if (!shared.empty() && (!best || *shared.begin() < *best->begin())) best = &shared;
                if (!best) {
                    ++led.starvation_polls;
                    break;
                }
                std::size_t j = best->begin()->second;
                best->erase(best->begin());
                dispatch(j, p);
            }
        }
        if (running.empty()) break;
        now = running.begin()->first;
        while (!running.empty() && running.begin()->first == now) {
            std::size_t j = running.begin()->second;
            running.erase(running.begin());
            auto& job = jobs[j];
            job.done = true;
            ++completed;
            TraceEvent f;
            f.event = EventKind::kFinish;
            f.time = now;
            f.node = job.node;
            f.task = job.task;
            f.job = j;
            f.label = job.label;
            f.subset = job.subset;
            f.duration = now - job.start;
            ev.push_back(f);
            led.busy_time[job.node] += f.duration;
            led.makespan = std::max(led.makespan, now);
            ++led.jobs_run;
            ++free_slots[pos_of.at(job.node)];
            for (auto d : job.dependents) {
                if (--jobs[d].waiting == 0) {
                    jobs[d].ready = now;
                    enqueue(d);
                }
            }
        }
    }
    if (completed != jobs.size()) throw Error("schedule stalled with unfinished jobs");
    return res;
}

CostLedger replay_ledger(const ScheduleTrace& trace) {
    CostLedger l;
    for (const auto& e : trace.events) {
        switch (e.event) {
            case EventKind::kTransfer: count_transfer(l, e.transfer, e.bytes); break;
            case EventKind::kFinish:
                l.busy_time[e.node] += e.duration;
                l.makespan = std::max(l.makespan, e.time);
                ++l.jobs_run;
                break;
            case EventKind::kDispatch: l.busy_time.try_emplace(e.node, 0.0); break;
        }
    }
    return l;
}

// ---------------------------------------------------------------------------

const char* to_string(VolumeStrategy s) {
    return s == VolumeStrategy::kHorizontalCopy ? "horizontal" : "prf";
}

DataVolume data_volume(std::uint64_t n, std::uint64_t m, std::uint64_t k, VolumeStrategy strategy) {
    DataVolume v;
    if (strategy == VolumeStrategy::kHorizontalCopy) {
        v.data_cells = n * m * k;
    } else {
        v.data_cells = m == 0 ? 0 : 2 * n * (m - 1);
        v.index_cells = k * n;
    }
    return v;
}

std::vector<SpeedupRow> speedup_report(std::span<const std::pair<std::string, double>> times, double standalone) {
    if (!(standalone > 0)) throw InvalidArgument("standalone makespan must be positive");
    std::vector<SpeedupRow> out;
    for (const auto& [name, t] : times) {
        if (!(t > 0)) throw InvalidArgument("makespan for " + name + " must be positive");
        out.push_back({name, t, t / standalone, standalone / t});
    }
    return out;
}

// ---------------------------------------------------------------------------

ClusterConfig ClusterConfig::from_json(const json& j) {
    ClusterConfig c;
    if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty())
        throw InvalidArgument("cluster config needs a non-empty \"nodes\" array");
    for (const auto& n : j.at("nodes")) {
        auto node = SlaveNode::make(n.at("id").get<std::int64_t>(), n.at("capacity_bytes").get<std::uint64_t>(),
                                    n.value("rack", std::string{}), n.value("slots", 1u));
        if (node.slots == 0) throw InvalidArgument("node slots must be positive");
        c.nodes.push_back(std::move(node));
    }
    if (j.contains("cost_model")) c.cost = CostModel::from_json(j.at("cost_model"));
    c.node_counts = j.value("node_counts", std::vector<std::size_t>{1, 2, 4, 8});
    c.volume_tree_counts = j.value("volume_tree_counts", std::vector<std::uint64_t>{1, 10, 100, 500});
    for (auto n : c.node_counts)
        if (n == 0) throw InvalidArgument("node_counts entries must be positive");
    return c;
}

ClusterConfig ClusterConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open cluster config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidArgument("cluster config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

Simulation simulate(std::span<const TreeTrace> traces, std::span<const SubsetExtent> subsets,
                    std::vector<SlaveNode> nodes, const CostModel& cost) {
    Simulation s;
    s.allocation = allocate(subsets, std::move(nodes));
    for (const auto& t : traces) s.dags.push_back(build_dag(t, s.allocation.plan));
    s.result = schedule(s.dags, s.allocation.plan, s.allocation.nodes, cost);
    return s;
}

Simulation simulate(const Forest& forest, std::vector<SlaveNode> nodes, const CostModel& cost) {
    std::vector<TreeTrace> traces;
    for (const auto& t : forest.trees) traces.push_back(trace_of(t, forest.schema));
    auto ext = extents_for(forest.num_rows, forest.schema.num_inputs());
    return simulate(traces, ext, std::move(nodes), cost);
}

}  // namespace prf::sim
