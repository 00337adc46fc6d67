// Timings for the serial reference path against the OpenMP path on the two
// hot kernels: whole-simulation batches and random-forest fitting.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "iclh/config.hpp"
#include "iclh/parallel.hpp"
#include "iclh/random_forest.hpp"
#include "iclh/rng.hpp"
#include "iclh/runner.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn) {
    auto t0 = Clock::now();
    fn();
    auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void bench_simulations(int workers, int n_sims) {
    iclh::config::RunConfig cfg;
    cfg.experiment = iclh::config::Experiment::bandit;
    cfg.trials_per_task = 10;
    cfg.max_tokens = 8;
    cfg.n_simulations = n_sims;
    cfg.scripted_params.kind = iclh::scripted::AgentKind::kalman_thompson;
    cfg.workers = workers;
    cfg.master_seed = 7;
    iclh::runner::Runner runner(cfg);
    double ms = time_ms([&] {
        iclh::parallel::parallel_for(n_sims, workers,
                                     [&](long s) { (void)runner.run_simulation(static_cast<int>(s)); });
    });
    std::printf("bandit simulations  workers=%d  n=%d  %.1f ms\n", workers, n_sims, ms);
}

void bench_forest(int threads) {
    const int n = 800, d = 5;
    iclh::Rng rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> X(n, std::vector<double>(d));
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = normal(rng);
        y[static_cast<std::size_t>(i)] = X[static_cast<std::size_t>(i)][0] * 2.0 + normal(rng);
    }
    iclh::forest::ForestConfig fc;
    fc.n_trees = 200;
    fc.seed = 11;
    fc.n_threads = threads;
    double ms = time_ms([&] { (void)iclh::forest::random_forest_fit(X, y, fc); });
    std::printf("random forest fit   threads=%d  trees=%d  %.1f ms\n", threads, fc.n_trees, ms);
}

} // namespace

int main() {
    for (int w : {1, 4}) bench_simulations(w, 16);
    for (int t : {1, 4}) bench_forest(t);
    return 0;
}
