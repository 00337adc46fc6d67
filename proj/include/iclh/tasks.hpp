#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "iclh/rng.hpp"

namespace iclh::tasks {

// --- one-dimensional function learning ---------------------------------

struct FunctionTaskParams {
    double slope_mean = -2.0;
    double slope_sd = 1.0;
    double intercept_mean = -100.0;
    double intercept_sd = 1.0;
    double noise_sd = 1.0;
    double input_low = 0.0;
    double input_high = 100.0;
    int trials_per_task = 5;

    void validate() const;
};

struct FunctionTask {
    double slope = 0.0;
    double intercept = 0.0;
    FunctionTaskParams params;

    double value_at(double x) const { return slope * x + intercept; }
};

FunctionTask sample_function_task(Rng& rng, const FunctionTaskParams& params);

struct FunctionTrial {
    double x = 0.0;
    double y = 0.0;
};

// Inputs are drawn uniformly and rounded to whole numbers so that the value
// shown in the prompt and the value used for scoring are the same quantity.
FunctionTrial gen_function_trial(const FunctionTask& task, Rng& rng);

// --- two-armed bandits --------------------------------------------------

struct BanditTaskParams {
    double mean_sd = 8.0;               // N(0, sqrt(64))
    double reward_noise_sd = 5.656854249492381; // N(0, sqrt(32))
    int trials_per_task = 10;
    static constexpr int n_arms = 2;

    void validate() const;
};

// 24 permitted machine letters (I and U excluded).
const std::string& bandit_letter_alphabet();

struct BanditTask {
    std::array<double, 2> arm_means{};
    std::array<char, 2> letters{};
    BanditTaskParams params;
};

BanditTask sample_bandit_task(Rng& rng, const BanditTaskParams& params);

// Reward rounded to one decimal place, the precision shown in the prompt.
double bandit_reward(const BanditTask& task, int arm, Rng& rng);

// --- real-world regression ----------------------------------------------

struct Dataset {
    std::string name;
    std::vector<std::vector<double>> features; // rows x cols
    std::vector<double> targets;
    std::vector<std::string> column_names;     // feature columns only

    std::size_t rows() const { return features.size(); }
    std::size_t cols() const { return features.empty() ? 0 : features.front().size(); }
};

// Delimited text, header row, final column is the target; rows with any
// non-numeric or missing cell are dropped.
Dataset load_dataset(const std::string& path);

// Top-k columns by the univariate-regression F statistic against the target,
// ties broken by lower column index. Constant columns score F = 0.
std::vector<std::size_t> select_features_f_value(const Dataset& dataset, std::size_t k = 5);

// Affine per-column map of every feature column and the target onto [-1, 1].
Dataset normalize_minus1_1(const Dataset& dataset);

struct RegressionEpisode {
    struct TaskDraw {
        std::string dataset_name;
        std::size_t dataset_index = 0;
        std::vector<std::size_t> feature_indices; // always size 5
        std::vector<std::size_t> row_indices;     // distinct rows
    };
    std::vector<TaskDraw> tasks;
    int points_per_task = 5;
    static constexpr int feature_count = 5;
};

RegressionEpisode sample_regression_episode(const std::vector<Dataset>& datasets, Rng& rng,
                                            int n_tasks = 5, int points_per_task = 5);

// Full ingestion pipeline for one file: load, F-select 5 features, keep only
// those columns, normalize features and target to [-1, 1]. Throws IngestError
// when the dataset is ineligible.
Dataset prepare_dataset(const std::string& path);

} // namespace iclh::tasks
