#include "iclh/tasks.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <numeric>
#include <sstream>

#include "iclh/errors.hpp"

namespace iclh::tasks {

void FunctionTaskParams::validate() const {
    if (slope_sd < 0.0) throw ContractError("slope_sd must be >= 0");
    if (intercept_sd < 0.0) throw ContractError("intercept_sd must be >= 0");
    if (noise_sd < 0.0) throw ContractError("noise_sd must be >= 0");
    if (!(input_low < input_high)) throw ContractError("input_low must be < input_high");
    if (trials_per_task < 1) throw ContractError("trials_per_task must be >= 1");
}

FunctionTask sample_function_task(Rng& rng, const FunctionTaskParams& params) {
    params.validate();
    FunctionTask task;
    task.params = params;
    std::normal_distribution<double> slope_dist(params.slope_mean, std::max(params.slope_sd, 0.0));
    std::normal_distribution<double> icept_dist(params.intercept_mean, std::max(params.intercept_sd, 0.0));
    task.slope = params.slope_sd == 0.0 ? params.slope_mean : slope_dist(rng);
    task.intercept = params.intercept_sd == 0.0 ? params.intercept_mean : icept_dist(rng);
    return task;
}

FunctionTrial gen_function_trial(const FunctionTask& task, Rng& rng) {
    const auto& p = task.params;
    std::uniform_real_distribution<double> x_dist(p.input_low, p.input_high);
    FunctionTrial trial;
    trial.x = std::round(x_dist(rng));
    double noise = 0.0;
    if (p.noise_sd > 0.0) {
        std::normal_distribution<double> n(0.0, p.noise_sd);
        noise = n(rng);
    }
    trial.y = task.value_at(trial.x) + noise;
    return trial;
}

void BanditTaskParams::validate() const {
    if (mean_sd <= 0.0) throw ContractError("mean_sd must be > 0");
    if (reward_noise_sd < 0.0) throw ContractError("reward_noise_sd must be >= 0");
    if (trials_per_task < 1) throw ContractError("trials_per_task must be >= 1");
}

const std::string& bandit_letter_alphabet() {
    static const std::string letters = "ABCDEFGHJKLMNOPQRSTVWXYZ"; // no I, no U
    return letters;
}

BanditTask sample_bandit_task(Rng& rng, const BanditTaskParams& params) {
    params.validate();
    BanditTask task;
    task.params = params;
    std::normal_distribution<double> mean_dist(0.0, params.mean_sd);
    task.arm_means[0] = mean_dist(rng);
    task.arm_means[1] = mean_dist(rng);
    const std::string& alpha = bandit_letter_alphabet();
    std::uniform_int_distribution<std::size_t> first(0, alpha.size() - 1);
    std::size_t i = first(rng);
    std::uniform_int_distribution<std::size_t> second(0, alpha.size() - 2);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    task.letters[0] = alpha[i];
    task.letters[1] = alpha[j];
    return task;
}

double bandit_reward(const BanditTask& task, int arm, Rng& rng) {
    if (arm < 0 || arm >= BanditTaskParams::n_arms)
        throw ContractError("bandit_reward: arm index out of range");
    double r = task.arm_means[static_cast<std::size_t>(arm)];
    if (task.params.reward_noise_sd > 0.0) {
        std::normal_distribution<double> n(0.0, task.params.reward_noise_sd);
        r += n(rng);
    }
    return std::round(r * 10.0) / 10.0;
}

namespace {

bool parse_cell(const std::string& cell, double& out) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') return false;
    if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        // trim
        std::size_t b = cell.find_first_not_of(" \t\r");
        std::size_t e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open dataset file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IngestError("empty dataset file: " + path);
    auto names = split_csv_line(header);
    if (names.size() < 2)
        throw IngestError("dataset needs at least one feature column and a target: " + path);

    Dataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    ds.column_names.assign(names.begin(), names.end() - 1);
    const std::size_t ncols = names.size();

    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != ncols) continue; // malformed row, treat as missing data
        std::vector<double> row(ncols);
        bool ok = true;
        for (std::size_t c = 0; c < ncols && ok; ++c) ok = parse_cell(cells[c], row[c]);
        if (!ok) continue;
        ds.features.emplace_back(row.begin(), row.end() - 1);
        ds.targets.push_back(row.back());
    }
    if (ds.features.empty())
        throw IngestError("no numeric rows survived ingestion: " + path);
    return ds;
}

std::vector<std::size_t> select_features_f_value(const Dataset& dataset, std::size_t k) {
    if (dataset.cols() < k)
        throw IngestError("dataset " + dataset.name + " has fewer than " + std::to_string(k) +
                          " features");
    const std::size_t n = dataset.rows();
    if (n < 3) throw ContractError("select_features_f_value needs at least 3 rows");

    double ty_mean = std::accumulate(dataset.targets.begin(), dataset.targets.end(), 0.0) /
                     static_cast<double>(n);
    double syy = 0.0;
    for (double y : dataset.targets) syy += (y - ty_mean) * (y - ty_mean);

    std::vector<double> f(dataset.cols(), 0.0);
    for (std::size_t j = 0; j < dataset.cols(); ++j) {
        double xm = 0.0;
        for (std::size_t i = 0; i < n; ++i) xm += dataset.features[i][j];
        xm /= static_cast<double>(n);
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dx = dataset.features[i][j] - xm;
            sxx += dx * dx;
            sxy += dx * (dataset.targets[i] - ty_mean);
        }
        if (sxx <= 0.0 || syy <= 0.0) {
            f[j] = 0.0; // constant column
            continue;
        }
        double r2 = (sxy * sxy) / (sxx * syy);
        if (r2 >= 1.0) {
            f[j] = std::numeric_limits<double>::infinity();
        } else {
            f[j] = (static_cast<double>(n) - 2.0) * r2 / (1.0 - r2);
        }
    }

    std::vector<std::size_t> idx(dataset.cols());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Dataset normalize_minus1_1(const Dataset& dataset) {
    Dataset out = dataset;
    const std::size_t n = dataset.rows();
    auto affine = [&](auto get, auto set, const std::string& what) {
        double lo = get(0), hi = get(0);
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, get(i));
            hi = std::max(hi, get(i));
        }
        if (!(hi > lo))
            throw IngestError("constant column in dataset " + dataset.name + ": " + what);
        double scale = 2.0 / (hi - lo);
        for (std::size_t i = 0; i < n; ++i) set(i, (get(i) - lo) * scale - 1.0);
    };
    for (std::size_t j = 0; j < dataset.cols(); ++j) {
        affine([&](std::size_t i) { return dataset.features[i][j]; },
               [&](std::size_t i, double v) { out.features[i][j] = v; },
               j < dataset.column_names.size() ? dataset.column_names[j] : std::to_string(j));
    }
    affine([&](std::size_t i) { return dataset.targets[i]; },
           [&](std::size_t i, double v) { out.targets[i] = v; }, "target");
    return out;
}

RegressionEpisode sample_regression_episode(const std::vector<Dataset>& datasets, Rng& rng,
                                            int n_tasks, int points_per_task) {
    std::vector<std::size_t> eligible;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        if (datasets[d].cols() >= RegressionEpisode::feature_count &&
            datasets[d].rows() >= static_cast<std::size_t>(points_per_task))
            eligible.push_back(d);
    }
    if (eligible.size() < static_cast<std::size_t>(n_tasks))
        throw IngestError("need at least " + std::to_string(n_tasks) +
                          " eligible datasets, have " + std::to_string(eligible.size()));

    std::shuffle(eligible.begin(), eligible.end(), rng);
    RegressionEpisode ep;
    ep.points_per_task = points_per_task;
    for (int t = 0; t < n_tasks; ++t) {
        const Dataset& ds = datasets[eligible[static_cast<std::size_t>(t)]];
        RegressionEpisode::TaskDraw draw;
        draw.dataset_name = ds.name;
        draw.dataset_index = eligible[static_cast<std::size_t>(t)];
        draw.feature_indices = select_features_f_value(ds, RegressionEpisode::feature_count);
        std::vector<std::size_t> rows(ds.rows());
        std::iota(rows.begin(), rows.end(), 0);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(static_cast<std::size_t>(points_per_task));
        draw.row_indices = rows;
        ep.tasks.push_back(std::move(draw));
    }
    return ep;
}

Dataset prepare_dataset(const std::string& path) {
    Dataset raw = load_dataset(path);
    auto keep = select_features_f_value(raw, RegressionEpisode::feature_count);
    Dataset sub;
    sub.name = raw.name;
    for (std::size_t j : keep) sub.column_names.push_back(raw.column_names[j]);
    sub.targets = raw.targets;
    sub.features.reserve(raw.rows());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        std::vector<double> row;
        row.reserve(keep.size());
        for (std::size_t j : keep) row.push_back(raw.features[i][j]);
        sub.features.push_back(std::move(row));
    }
    return normalize_minus1_1(sub);
}

} // namespace iclh::tasks
