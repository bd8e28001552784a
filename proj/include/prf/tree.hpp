#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "prf/dataset.hpp"
#include "prf/random.hpp"

namespace prf {

/// Differences below this are treated as ties; gains below it as zero.
inline constexpr double kGainEpsilon = 1e-12;

/// Class counts over a (multi)set of rows.
struct LabelDistribution {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    LabelDistribution() = default;
    explicit LabelDistribution(std::size_t num_classes) : counts(num_classes, 0) {}
    static LabelDistribution from_counts(std::vector<std::uint64_t> counts);

    void add(std::size_t label, std::uint64_t n = 1);
    /// Most frequent class; ties go to the lowest class index.
    std::size_t majority() const;
    std::size_t distinct() const;
    bool operator==(const LabelDistribution&) const = default;
};

/// Shannon entropy in bits; 0 for an empty distribution.
double entropy(const LabelDistribution& dist);

enum class SplitKind : std::uint8_t { kMultiway, kThreshold };

/// How a node routes samples. Multiway rules branch on the category code
/// itself; threshold rules send value <= cut to branch 0 and the rest to 1.
struct SplitRule {
    SplitKind kind = SplitKind::kMultiway;
    std::size_t feature_index = 0;
    std::vector<std::int64_t> values;  // multiway: category codes with a child
    double cut = 0.0;                  // threshold only

    static SplitRule multiway(std::size_t feature, std::vector<std::int64_t> values);
    static SplitRule threshold(std::size_t feature, double cut);

    std::int64_t branch_of(double value) const;
    bool operator==(const SplitRule&) const = default;
};

/// Target semantics for impurity: class entropy, or variance for regression.
struct TargetInfo {
    bool regression = false;
    std::size_t num_classes = 0;

    static TargetInfo of(const Schema& schema) { return {schema.is_regression(), schema.num_classes()}; }
};

/// Outcome of evaluating one feature at one node. For regression targets
/// the entropy fields hold variances (the impurity used there).
struct GainRatioResult {
    std::size_t feature_index = 0;
    double entropy_target = 0.0;
    double entropy_feature = 0.0;
    double split_info = 0.0;
    double info_gain = 0.0;
    double gain_ratio = 0.0;
    SplitRule best_partition;
    /// Single partition over the rows: gain ratio forced to 0 and the
    /// feature is unusable at this node.
    bool degenerate = false;
};

/// Rows are a multiset: a bootstrap row drawn twice appears twice.
using RowSpan = std::span<const std::uint64_t>;

double target_impurity(const FeatureSubset& fs, RowSpan rows, const TargetInfo& target);
/// Weighted impurity of the partitions induced by `rule` over `rows`.
double feature_entropy(const FeatureSubset& fs, RowSpan rows, const SplitRule& rule, const TargetInfo& target);
/// Entropy of the partition proportions induced by `rule`.
double split_info(const FeatureSubset& fs, RowSpan rows, const SplitRule& rule);
/// Best split of `fs` over `rows`: the full multiway partition for a
/// categorical feature, the best midpoint threshold for a continuous one.
/// Candidates leaving a partition with fewer than `min_leaf` rows are skipped.
GainRatioResult gain_ratio(const FeatureSubset& fs, RowSpan rows, const TargetInfo& target,
                           std::size_t min_leaf = 1);

/// Share of each feature's gain ratio in their sum; uniform if all are 0.
std::vector<double> variable_importance(std::span<const GainRatioResult> results);

struct Hyperparams {
    std::size_t k_trees = 100;
    std::size_t m_selected = 0;  // 0: ceil(log2 M) + 1, capped at M-1
    std::size_t k_top = 0;       // 0: ceil(sqrt(m_selected))
    std::size_t max_depth = 32;
    std::size_t min_samples_split = 2;
    std::size_t min_leaf_size = 1;
    std::uint64_t seed = 42;

    /// Fills the automatic values for a table with `num_columns` columns
    /// (target included) and validates the result.
    Hyperparams resolved(std::size_t num_columns) const;
    void validate(std::size_t num_columns) const;

    nlohmann::json to_json() const;
    static Hyperparams from_json(const nlohmann::json& j);
    bool operator==(const Hyperparams&) const = default;
};

/// Top `k_top` features by importance (descending, ties by lower index)
/// followed by `m_selected - k_top` others drawn without replacement.
std::vector<std::size_t> dimension_reduce(std::span<const GainRatioResult> results, std::size_t m_selected,
                                          std::size_t k_top, Rng& rng);
std::vector<std::size_t> dimension_reduce(std::span<const GainRatioResult> results, const Hyperparams& h,
                                          Rng& rng);

struct Branch {
    std::int64_t label;
    std::size_t child;
    bool operator==(const Branch&) const = default;
};

struct TreeNode {
    bool leaf = true;
    SplitRule rule;             // internal only
    double gain_ratio = 0.0;    // of the chosen rule
    std::vector<Branch> children;
    std::int64_t majority_branch = 0;  // receives unseen categories

    LabelDistribution distribution;  // classification
    double value = 0.0;              // regression: mean target
    std::uint64_t num_rows = 0;
    std::size_t depth = 0;
    /// Gain ratios were computed here. False for leaves cut off by purity,
    /// depth, size or exhausted features before any evaluation.
    bool evaluated = false;

    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::vector<std::size_t> selected_features;
    double oob_accuracy = 0.0;
    std::uint64_t oob_size = 0;
    std::size_t tree_index = 0;
    TargetInfo target;

    /// Class index or regression value.
    double predict(std::span<const double> features) const;
    const TreeNode& leaf_for(std::span<const double> features) const;

    std::size_t internal_count() const;
    std::size_t leaf_count() const;
    std::size_t depth() const;

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j, const TargetInfo& target);
    bool operator==(const DecisionTree& o) const {
        return nodes == o.nodes && selected_features == o.selected_features &&
               oob_accuracy == o.oob_accuracy && oob_size == o.oob_size && tree_index == o.tree_index;
    }
};

/// Grows one tree on the bootstrap multiset `sample` (row indexes into the
/// subsets). Feature selection runs once at the root with the generator
/// seeded by `feature_seed`.
DecisionTree train_tree(std::span<const std::uint64_t> sample, std::span<const FeatureSubset> subsets,
                        const TargetInfo& target, const Hyperparams& h, std::uint64_t feature_seed,
                        std::size_t tree_index = 0);

}  // namespace prf
