#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "iclh/random_forest.hpp"
#include "iclh/rng.hpp"

using namespace iclh;

namespace {

void make_linear_data(Rng& rng, int n, int d, std::vector<std::vector<double>>& X,
                      std::vector<double>& y, double noise_sd) {
    std::normal_distribution<double> normal(0.0, 1.0);
    X.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
    y.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = normal(rng);
        y[static_cast<std::size_t>(i)] =
            2.0 * X[static_cast<std::size_t>(i)][0] - X[static_cast<std::size_t>(i)][1] +
            noise_sd * normal(rng);
    }
}

} // namespace

TEST_SUITE("forest") {

TEST_CASE("constant target is reproduced exactly") {
    std::vector<std::vector<double>> X{{0.0}, {1.0}, {2.0}, {3.0}};
    std::vector<double> y{5.0, 5.0, 5.0, 5.0};
    forest::ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 1;
    auto f = forest::random_forest_fit(X, y, cfg);
    for (const auto& row : X)
        CHECK(forest::random_forest_predict(f, row) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("single deep tree without bootstrap interpolates distinct points") {
    std::vector<std::vector<double>> X{{0.0}, {1.0}, {2.0}, {3.0}, {4.0}};
    std::vector<double> y{1.0, -2.0, 4.0, 0.5, 3.0};
    forest::ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    cfg.seed = 2;
    auto f = forest::random_forest_fit(X, y, cfg);
    for (std::size_t i = 0; i < X.size(); ++i)
        CHECK(forest::random_forest_predict(f, X[i]) == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("same seed gives identical forests; threads do not change results") {
    Rng rng(41);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    make_linear_data(rng, 120, 5, X, y, 0.5);
    forest::ForestConfig cfg;
    cfg.n_trees = 64;
    cfg.seed = 7;
    cfg.n_threads = 1;
    auto serial = forest::random_forest_fit(X, y, cfg);
    cfg.n_threads = 4;
    auto parallel = forest::random_forest_fit(X, y, cfg);
    auto again = forest::random_forest_fit(X, y, cfg);
    for (const auto& row : X) {
        double a = forest::random_forest_predict(serial, row);
        CHECK(a == forest::random_forest_predict(parallel, row));
        CHECK(a == forest::random_forest_predict(again, row));
    }
    cfg.seed = 8;
    auto other = forest::random_forest_fit(X, y, cfg);
    bool any_different = false;
    for (const auto& row : X)
        if (forest::random_forest_predict(other, row) !=
            forest::random_forest_predict(serial, row))
            any_different = true;
    CHECK(any_different);
}

TEST_CASE("forest prediction is the mean over trees") {
    Rng rng(42);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    make_linear_data(rng, 60, 3, X, y, 0.3);
    forest::ForestConfig cfg;
    cfg.n_trees = 16;
    cfg.seed = 3;
    auto f = forest::random_forest_fit(X, y, cfg);
    std::vector<double> q{0.2, -0.4, 1.1};
    double acc = 0.0;
    for (const auto& tree : f.trees) acc += tree.predict(q);
    CHECK(forest::random_forest_predict(f, q) ==
          doctest::Approx(acc / static_cast<double>(f.trees.size())).epsilon(1e-12));
}

TEST_CASE("forest beats the mean baseline on held-out linear data") {
    Rng rng(43);
    std::vector<std::vector<double>> X, Xt;
    std::vector<double> y, yt;
    make_linear_data(rng, 400, 5, X, y, 0.2);
    make_linear_data(rng, 200, 5, Xt, yt, 0.2);
    forest::ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.seed = 4;
    auto f = forest::random_forest_fit(X, y, cfg);
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= static_cast<double>(y.size());
    double mse_forest = 0.0, mse_mean = 0.0;
    for (std::size_t i = 0; i < Xt.size(); ++i) {
        double p = forest::random_forest_predict(f, Xt[i]);
        mse_forest += (p - yt[i]) * (p - yt[i]);
        mse_mean += (mean_y - yt[i]) * (mean_y - yt[i]);
    }
    CHECK(mse_forest < 0.5 * mse_mean);
}

TEST_CASE("depth and leaf-size limits are honored") {
    Rng rng(44);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    make_linear_data(rng, 100, 2, X, y, 0.1);
    forest::ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    cfg.max_depth = 0; // a single leaf
    cfg.seed = 5;
    auto stump = forest::random_forest_fit(X, y, cfg);
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= static_cast<double>(y.size());
    CHECK(forest::random_forest_predict(stump, X[0]) ==
          doctest::Approx(mean_y).epsilon(1e-12));
}

} // TEST_SUITE
