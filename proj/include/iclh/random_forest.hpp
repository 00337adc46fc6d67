#pragma once

#include <cstddef>
#include <vector>

#include "iclh/rng.hpp"

namespace iclh::forest {

struct ForestConfig {
    int n_trees = 100;
    int max_depth = -1; // -1 = unlimited
    int min_leaf = 1;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int n_threads = 1; // > 1 fits trees with OpenMP; results identical either way
};

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;     // leaf prediction
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(const std::vector<double>& x) const;
};

struct Forest {
    std::vector<Tree> trees;
};

// Bagged regression trees; axis-aligned squared-error splits over a random
// subset of ceil(sqrt(d)) features per node.
Forest random_forest_fit(const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y, const ForestConfig& config);

double random_forest_predict(const Forest& forest, const std::vector<double>& x);

} // namespace iclh::forest
