#include "iclh/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "iclh/errors.hpp"

namespace iclh::forest {

double Tree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

namespace {

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<double>& y;
    const ForestConfig& cfg;
    Rng rng;
    Tree tree;
    std::size_t n_features;
    std::size_t mtry;

    TreeBuilder(const std::vector<std::vector<double>>& X_, const std::vector<double>& y_,
                const ForestConfig& cfg_, std::uint64_t seed)
        : X(X_), y(y_), cfg(cfg_), rng(seed) {
        n_features = X.front().size();
        mtry = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(n_features))));
    }

    int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            sum += y[idx[i]];
            sum2 += y[idx[i]] * y[idx[i]];
        }
        std::size_t n = end - begin;
        double mean = sum / static_cast<double>(n);
        double sse = sum2 - sum * mean;

        auto leaf = [&]() {
            TreeNode node;
            node.value = mean;
            tree.nodes.push_back(node);
            return static_cast<int>(tree.nodes.size() - 1);
        };

        if (n <= static_cast<std::size_t>(std::max(1, cfg.min_leaf)) || sse <= 1e-12 ||
            (cfg.max_depth >= 0 && depth >= cfg.max_depth))
            return leaf();

        // candidate features for this node
        std::vector<std::size_t> feats(n_features);
        std::iota(feats.begin(), feats.end(), 0);
        for (std::size_t k = 0; k < mtry; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, n_features - 1);
            std::swap(feats[k], feats[pick(rng)]);
        }

        double best_gain = 0.0;
        std::size_t best_feat = 0;
        double best_thr = 0.0;
        std::vector<std::size_t> order(idx.begin() + static_cast<long>(begin),
                                       idx.begin() + static_cast<long>(end));
        for (std::size_t k = 0; k < mtry; ++k) {
            std::size_t f = feats[k];
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return X[a][f] < X[b][f];
            });
            double left_sum = 0.0, left_sum2 = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                double yi = y[order[i]];
                left_sum += yi;
                left_sum2 += yi * yi;
                if (X[order[i]][f] == X[order[i + 1]][f]) continue;
                std::size_t nl = i + 1, nr = n - nl;
                if (nl < static_cast<std::size_t>(cfg.min_leaf) ||
                    nr < static_cast<std::size_t>(cfg.min_leaf))
                    continue;
                double right_sum = sum - left_sum;
                double sse_l = left_sum2 - left_sum * left_sum / static_cast<double>(nl);
                double right_sum2 = sum2 - left_sum2;
                double sse_r = right_sum2 - right_sum * right_sum / static_cast<double>(nr);
                double gain = sse - sse_l - sse_r;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feat = f;
                    best_thr = 0.5 * (X[order[i]][f] + X[order[i + 1]][f]);
                }
            }
        }
        if (best_gain <= 0.0) return leaf();

        auto mid_it = std::partition(idx.begin() + static_cast<long>(begin),
                                     idx.begin() + static_cast<long>(end),
                                     [&](std::size_t i) { return X[i][best_feat] <= best_thr; });
        std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
        if (mid == begin || mid == end) return leaf();

        TreeNode node;
        node.feature = static_cast<int>(best_feat);
        node.threshold = best_thr;
        tree.nodes.push_back(node);
        int me = static_cast<int>(tree.nodes.size() - 1);
        int left = build(idx, begin, mid, depth + 1);
        int right = build(idx, mid, end, depth + 1);
        tree.nodes[static_cast<std::size_t>(me)].left = left;
        tree.nodes[static_cast<std::size_t>(me)].right = right;
        return me;
    }
};

Tree fit_one_tree(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                  const ForestConfig& cfg, std::uint64_t seed) {
    TreeBuilder builder(X, y, cfg, seed);
    std::vector<std::size_t> idx;
    std::size_t n = X.size();
    if (cfg.bootstrap) {
        idx.resize(n);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < n; ++i) idx[i] = pick(builder.rng);
    } else {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
    }
    builder.build(idx, 0, idx.size(), 0);
    return std::move(builder.tree);
}

} // namespace

Forest random_forest_fit(const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y, const ForestConfig& config) {
    if (X.empty() || X.size() != y.size())
        throw ContractError("random_forest_fit: need at least one training point");
    if (config.n_trees < 1) throw ContractError("random_forest_fit: n_trees must be >= 1");

    Forest forest;
    forest.trees.resize(static_cast<std::size_t>(config.n_trees));
    // per-tree seeds keep the fit identical regardless of thread count
    std::vector<std::uint64_t> seeds(forest.trees.size());
    for (std::size_t t = 0; t < seeds.size(); ++t)
        seeds[t] = derive_seed(config.seed, 0x7265666f72657374ULL, t);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, config.n_threads))
#endif
    for (long long t = 0; t < static_cast<long long>(forest.trees.size()); ++t)
        forest.trees[static_cast<std::size_t>(t)] =
            fit_one_tree(X, y, config, seeds[static_cast<std::size_t>(t)]);
    return forest;
}

double random_forest_predict(const Forest& forest, const std::vector<double>& x) {
    if (forest.trees.empty()) throw ContractError("random_forest_predict: empty forest");
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(x);
    return sum / static_cast<double>(forest.trees.size());
}

} // namespace iclh::forest
