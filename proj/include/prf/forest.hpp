#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prf/dataset.hpp"
#include "prf/sampling.hpp"
#include "prf/tree.hpp"

namespace prf {

/// k trees, each weighted by its out-of-bag accuracy.
struct Forest {
    Schema schema;
    Hyperparams hyperparams;  // resolved
    std::vector<DecisionTree> trees;
    std::uint64_t num_rows = 0;  // training rows, for rebuilding the DSI table
    std::string dsi_digest;

    bool regression() const { return schema.is_regression(); }
    std::vector<double> weights() const;

    /// The bootstrap table the forest was trained on.
    DsiTable dsi() const;

    nlohmann::json to_json() const;
    static Forest from_json(const nlohmann::json& j);
    bool operator==(const Forest& o) const = default;
};

struct TrainOptions {
    /// Worker threads for tree-level parallelism; 0 picks the hardware count.
    unsigned threads = 0;
};

/// Builds the DSI table and feature subsets, grows k trees and sets each
/// tree's weight from its OOB set. Output does not depend on `threads`.
Forest train(const Dataset& d, const Hyperparams& h, const TrainOptions& options = {});

/// Same, on an already partitioned table and bootstrap table.
Forest train(const Schema& schema, std::span<const FeatureSubset> subsets, const DsiTable& dsi,
             const Hyperparams& h, const TrainOptions& options = {});

struct TreeAccuracy {
    double value = 0.0;
    std::uint64_t evaluated = 0;
    /// OOB set was empty; value is 0 and the tree carries no vote.
    bool empty = false;
};

/// Classification: fraction of OOB rows predicted correctly. Regression:
/// coefficient of determination over the OOB rows, clipped to [0, 1].
TreeAccuracy tree_accuracy(const DecisionTree& t, const OobSet& oob, const Dataset& d);

/// Recomputes every tree's weight against `d` using the forest's DSI table.
void reweight(Forest& f, const Dataset& d);

enum class RegressionMode { kNormalized, kPaperLiteral };
RegressionMode regression_mode_from_string(const std::string& text);

struct PredictionReport {
    /// Class index (classification) or value (regression) per sample.
    std::vector<double> outputs;
    /// Per sample, per class: sum of weights of trees voting for it.
    std::vector<std::vector<double>> tallies;
    std::optional<double> oob_error;
};

PredictionReport predict_classification(const Forest& f, std::span<const std::vector<double>> samples);
PredictionReport predict_regression(const Forest& f, std::span<const std::vector<double>> samples,
                                    RegressionMode mode = RegressionMode::kNormalized);
/// Dispatches on the forest's target kind.
PredictionReport predict(const Forest& f, std::span<const std::vector<double>> samples,
                         RegressionMode mode = RegressionMode::kNormalized);

/// Records every (tree, row) vote cast while computing the OOB error.
struct OobAudit {
    std::vector<std::pair<std::size_t, std::uint64_t>> votes;
};

/// Misclassification rate (classification) or mean squared error
/// (regression) of weighted votes from trees whose OOB set holds the row,
/// over rows with at least one such tree. Throws if no row qualifies.
double oob_error(const Forest& f, const Dataset& d, const DsiTable& t, OobAudit* audit = nullptr);

}  // namespace prf
