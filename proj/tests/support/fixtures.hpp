#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracle/brute.hpp"
#include "prf/dataset.hpp"
#include "prf/forest.hpp"
#include "prf/tree.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return PRF_TEST_DATA_DIR; }

inline prf::Dataset play_tennis() {
    auto schema = prf::Schema::load(data_dir() / "play_tennis.schema.json");
    return prf::load_csv(data_dir() / "play_tennis.csv", schema);
}

inline prf::FeatureDescriptor categorical(std::string name, std::size_t values) {
    prf::FeatureDescriptor d;
    d.name = std::move(name);
    d.kind = prf::FeatureKind::kCategorical;
    for (std::size_t v = 0; v < values; ++v) d.values.push_back("v" + std::to_string(v));
    return d;
}

inline prf::FeatureDescriptor continuous(std::string name) {
    prf::FeatureDescriptor d;
    d.name = std::move(name);
    d.kind = prf::FeatureKind::kContinuous;
    return d;
}

inline prf::FeatureDescriptor classes(std::size_t n) {
    auto d = categorical("label", n);
    for (std::size_t c = 0; c < n; ++c) d.values[c] = "c" + std::to_string(c);
    return d;
}

/// Small random classification table; labels depend on the first features
/// with some noise so splits are informative but not trivial.
inline prf::Dataset random_table(std::uint64_t seed, std::size_t max_rows = 64, std::size_t max_features = 6,
                                 bool allow_continuous = true) {
    std::mt19937_64 g(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
    };
    const std::size_t rows = pick(8, max_rows);
    const std::size_t features = pick(1, max_features);
    const std::size_t num_classes = pick(2, 3);
    std::vector<prf::FeatureDescriptor> inputs;
    std::vector<std::size_t> arity;
    for (std::size_t j = 0; j < features; ++j) {
        if (allow_continuous && pick(0, 3) == 0) {
            inputs.push_back(continuous("f" + std::to_string(j)));
            arity.push_back(0);
        } else {
            arity.push_back(pick(2, 4));
            inputs.push_back(categorical("f" + std::to_string(j), arity.back()));
        }
    }
    prf::Schema schema(inputs, classes(num_classes));
    std::vector<double> cells;
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<double> x;
        for (std::size_t j = 0; j < features; ++j) {
            if (arity[j] == 0) {
                x.push_back(static_cast<double>(pick(0, 9)) / 2.0);
            } else {
                x.push_back(static_cast<double>(pick(0, arity[j] - 1)));
            }
        }
        std::size_t label = static_cast<std::size_t>(x[0] + (features > 1 ? x[1] : 0.0)) % num_classes;
        if (pick(0, 4) == 0) label = pick(0, num_classes - 1);
        cells.insert(cells.end(), x.begin(), x.end());
        cells.push_back(static_cast<double>(label));
    }
    return prf::Dataset(schema, cells);
}

/// Continuous features, binary label from a noisy linear rule.
inline prf::Dataset noisy_linear(std::uint64_t seed, std::size_t rows, std::size_t features = 6,
                                 double flip = 0.15) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<prf::FeatureDescriptor> inputs;
    for (std::size_t j = 0; j < features; ++j) inputs.push_back(continuous("x" + std::to_string(j)));
    prf::Schema schema(inputs, classes(2));
    std::vector<double> cells;
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < features; ++j) {
            double v = std::round(u(g) * 1000.0) / 1000.0;
            cells.push_back(v);
            if (j < 3) s += v;
        }
        double label = s > 1.5 ? 1.0 : 0.0;
        if (u(g) < flip) label = 1.0 - label;
        cells.push_back(label);
    }
    return prf::Dataset(schema, cells);
}

inline oracle::Table to_oracle(const prf::Dataset& d) {
    oracle::Table t;
    for (std::size_t i = 0; i < d.num_rows(); ++i) {
        auto x = d.features(i);
        t.x.emplace_back(x.begin(), x.end());
        t.y.push_back(d.target(i));
    }
    for (std::size_t j = 0; j < d.schema().num_inputs(); ++j)
        t.categorical.push_back(d.schema().column(j).kind == prf::FeatureKind::kCategorical);
    return t;
}

/// Leaf-only tree always predicting `label`.
inline prf::DecisionTree constant_tree(std::size_t label, std::size_t num_classes, double weight,
                                       std::size_t index = 0) {
    prf::DecisionTree t;
    t.target = {false, num_classes};
    t.tree_index = index;
    prf::TreeNode leaf;
    leaf.distribution = prf::LabelDistribution(num_classes);
    leaf.distribution.add(label, 1);
    leaf.num_rows = 1;
    leaf.evaluated = true;
    t.nodes.push_back(leaf);
    t.selected_features = {0};
    t.oob_accuracy = weight;
    t.oob_size = 1;
    return t;
}

inline prf::Forest forest_of(std::vector<prf::DecisionTree> trees, std::size_t num_classes,
                             std::size_t num_inputs = 1) {
    prf::Forest f;
    std::vector<prf::FeatureDescriptor> inputs;
    for (std::size_t j = 0; j < num_inputs; ++j) inputs.push_back(categorical("f" + std::to_string(j), 3));
    f.schema = prf::Schema(inputs, classes(num_classes));
    f.hyperparams.k_trees = trees.size();
    f.trees = std::move(trees);
    return f;
}

}  // namespace fixtures
