#include "iclh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "iclh/analysis.hpp"
#include "iclh/errors.hpp"
#include "iclh/records.hpp"
#include "iclh/runner.hpp"

namespace iclh::report {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct RunData {
    std::string experiment;
    json config;
    std::vector<records::TrialRecord> records;
    std::vector<json> priors;
};

RunData load_run(const std::filesystem::path& run_dir) {
    auto manifest = records::read_manifest(run_dir / "manifest.json");
    RunData data;
    data.config = manifest.config_snapshot;
    data.experiment = data.config.at("experiment").get<std::string>();
    data.records = records::read_records(run_dir / "records.jsonl");
    auto priors_path = run_dir / "priors.jsonl";
    if (std::filesystem::exists(priors_path)) data.priors = records::read_jsonl(priors_path);
    return data;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw StoreError("cannot write " + path.string());
    return out;
}

// mean of the per-trial score per (agent, task, trial); the score is regret
// for bandits and squared error otherwise
struct Cell {
    double sum = 0.0;
    double sum_sq = 0.0;
    long n = 0;
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double ci95() const {
        if (n < 2) return 0.0;
        double m = mean();
        double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return 1.96 * std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    }
};

using CurveMap = std::map<std::string, std::map<std::pair<int, int>, Cell>>;

CurveMap build_curves(const RunData& data) {
    CurveMap curves;
    for (const auto& r : data.records) {
        if (!r.loss) continue;
        auto& cell = curves[r.agent][{r.task, r.trial}];
        cell.sum += *r.loss;
        cell.sum_sq += *r.loss * *r.loss;
        cell.n += 1;
    }
    return curves;
}

std::vector<analysis::BanditTrialObs> bandit_obs(const RunData& data) {
    std::vector<analysis::BanditTrialObs> obs;
    for (const auto& r : data.records) {
        if (r.agent != runner::kSubjectAgent || !r.choice || !r.reward) continue;
        obs.push_back({r.simulation, r.task, r.trial, *r.choice, *r.reward, r.valid});
    }
    return obs;
}

analysis::KalmanParams kalman_params(const json& config) {
    analysis::KalmanParams p;
    if (config.contains("bandit_task")) {
        double mean_sd = config["bandit_task"].value("mean_sd", 8.0);
        double noise_sd = config["bandit_task"].value("reward_noise_sd", std::sqrt(32.0));
        p.prior_variance = mean_sd * mean_sd;
        p.obs_variance = noise_sd * noise_sd;
    }
    return p;
}

// per-trial score of the subject regressed on task and trial number
analysis::RegressionFit effect_fit(const RunData& data, bool use_reward) {
    std::vector<double> ys;
    std::vector<std::array<double, 2>> xs;
    for (const auto& r : data.records) {
        if (r.agent != runner::kSubjectAgent || !r.valid) continue;
        double y;
        if (use_reward) {
            if (!r.reward) continue;
            y = *r.reward;
        } else {
            if (!r.loss) continue;
            y = *r.loss;
        }
        ys.push_back(y);
        xs.push_back({static_cast<double>(r.task), static_cast<double>(r.trial)});
    }
    if (ys.size() < 4) throw FitError("too few valid trials for the effect regression");
    Eigen::MatrixXd X(static_cast<long>(ys.size()), 2);
    Eigen::VectorXd y(static_cast<long>(ys.size()));
    for (std::size_t i = 0; i < ys.size(); ++i) {
        X(static_cast<long>(i), 0) = xs[i][0];
        X(static_cast<long>(i), 1) = xs[i][1];
        y(static_cast<long>(i)) = ys[i];
    }
    bool standardize = true;
    if (data.config.contains("analysis"))
        standardize = data.config["analysis"].value("standardize", true);
    return analysis::ols_fit(X, y, {"task", "trial"}, standardize);
}

void write_fit_csv(std::ofstream& out, const analysis::RegressionFit& fit,
                   const std::string& statistic_name) {
    out << "coefficient,beta,se," << statistic_name << ",p,ci95\n";
    for (long i = 0; i < fit.beta.size(); ++i)
        out << fit.names[static_cast<std::size_t>(i)] << ',' << fmt(fit.beta(i)) << ','
            << fmt(fit.standard_errors(i)) << ',' << fmt(fit.statistics(i)) << ','
            << fmt(fit.p_values(i)) << ',' << fmt(fit.ci95_halfwidth(i)) << '\n';
}

// ---------------------------------------------------------------- figures

class Svg {
  public:
    Svg(int width, int height) : width_(width), height_(height) {
        body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
              << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
              << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double w = 1.0) {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
              << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
              << fmt(w) << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& color) {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
              << "\" height=\"" << fmt(h) << "\" fill=\"" << color << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& color) {
        body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r)
              << "\" fill=\"" << color << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start") {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s)
              << "</text>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
              << "points=\"";
        for (const auto& [x, y] : pts) body_ << fmt(x) << ',' << fmt(y) << ' ';
        body_ << "\"/>\n";
    }
    void save(const std::filesystem::path& path) {
        auto out = open_out(path);
        out << body_.str() << "</svg>\n";
    }

  private:
    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out += c;
        }
        return out;
    }
    int width_, height_;
    std::ostringstream body_;
};

const std::vector<std::string> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b"};

struct Frame {
    double left = 60, right = 560, top = 30, bottom = 330;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    double px(double x) const { return left + (x - xmin) / (xmax - xmin) * (right - left); }
    double py(double y) const { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); }
};

void draw_axes(Svg& svg, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    svg.line(f.left, f.bottom, f.right, f.bottom, "#000000");
    svg.line(f.left, f.bottom, f.left, f.top, "#000000");
    svg.text((f.left + f.right) / 2, f.bottom + 34, xlabel, 12, "middle");
    svg.text(f.left - 44, f.top - 10, ylabel, 12, "start");
    for (int i = 0; i <= 4; ++i) {
        double y = f.ymin + (f.ymax - f.ymin) * i / 4.0;
        svg.line(f.left - 4, f.py(y), f.left, f.py(y), "#000000");
        svg.text(f.left - 8, f.py(y) + 4, fmt(y), 10, "end");
    }
}

void figure_curves(const RunData& data, const CurveMap& curves,
                   const std::filesystem::path& path) {
    Svg svg(640, 400);
    svg.text(320, 18, "mean " + std::string(data.experiment == "bandit" ? "regret" : "squared error") +
                          " by trial", 14, "middle");
    Frame f;
    double ymax = 1e-9;
    int max_idx = 1;
    std::map<std::string, std::vector<std::pair<int, double>>> series;
    for (const auto& [agent, cells] : curves) {
        std::map<int, int> task_trials;
        for (const auto& [key, _] : cells) task_trials[key.first] =
            std::max(task_trials[key.first], key.second);
        int per_task = 0;
        for (const auto& [_, m] : task_trials) per_task = std::max(per_task, m);
        for (const auto& [key, cell] : cells) {
            int idx = (key.first - 1) * per_task + key.second;
            series[agent].push_back({idx, cell.mean()});
            ymax = std::max(ymax, cell.mean());
            max_idx = std::max(max_idx, idx);
        }
    }
    f.xmin = 1;
    f.xmax = std::max(2, max_idx);
    f.ymin = 0;
    f.ymax = ymax * 1.05;
    draw_axes(svg, f, "trial (across tasks)", "score");
    int ci = 0;
    for (auto& [agent, pts] : series) {
        std::sort(pts.begin(), pts.end());
        std::vector<std::pair<double, double>> poly;
        for (const auto& [idx, v] : pts) poly.push_back({f.px(idx), f.py(v)});
        const std::string& color = kPalette[static_cast<std::size_t>(ci) % kPalette.size()];
        svg.polyline(poly, color);
        svg.text(f.right - 150, f.top + 16 + 16 * ci, agent, 11);
        svg.rect(f.right - 166, f.top + 8 + 16 * ci, 10, 10, color);
        ++ci;
    }
    svg.save(path);
}

void figure_task_means(const RunData& data, const CurveMap& curves,
                       const std::filesystem::path& path) {
    std::map<std::string, std::map<int, Cell>> by_task;
    int max_task = 1;
    double ymax = 1e-9;
    for (const auto& [agent, cells] : curves)
        for (const auto& [key, cell] : cells) {
            auto& dst = by_task[agent][key.first];
            dst.sum += cell.sum;
            dst.n += cell.n;
            max_task = std::max(max_task, key.first);
        }
    for (const auto& [agent, tasks] : by_task)
        for (const auto& [t, cell] : tasks) ymax = std::max(ymax, cell.mean());

    Svg svg(640, 400);
    svg.text(320, 18, "mean " + std::string(data.experiment == "bandit" ? "regret" : "squared error") +
                          " by task", 14, "middle");
    Frame f;
    f.xmin = 0.5;
    f.xmax = max_task + 0.5;
    f.ymin = 0;
    f.ymax = ymax * 1.05;
    draw_axes(svg, f, "task", "score");
    int n_agents = static_cast<int>(by_task.size());
    double group = (f.right - f.left) / max_task;
    double bar = group * 0.8 / std::max(1, n_agents);
    int ci = 0;
    for (const auto& [agent, tasks] : by_task) {
        const std::string& color = kPalette[static_cast<std::size_t>(ci) % kPalette.size()];
        for (const auto& [t, cell] : tasks) {
            double x0 = f.px(t) - group * 0.4 + bar * ci;
            svg.rect(x0, f.py(cell.mean()), bar * 0.9, f.bottom - f.py(cell.mean()), color);
        }
        svg.text(f.right - 150, f.top + 16 + 16 * ci, agent, 11);
        svg.rect(f.right - 166, f.top + 8 + 16 * ci, 10, 10, color);
        ++ci;
    }
    for (int t = 1; t <= max_task; ++t) svg.text(f.px(t), f.bottom + 16, std::to_string(t), 11, "middle");
    svg.save(path);
}

void figure_fit_bars(const analysis::RegressionFit& fit, const std::string& title,
                     const std::filesystem::path& path) {
    Svg svg(640, 400);
    svg.text(320, 18, title, 14, "middle");
    Frame f;
    long n = fit.beta.size();
    f.xmin = 0.5;
    f.xmax = static_cast<double>(n) + 0.5;
    double lo = 0.0, hi = 0.0;
    for (long i = 0; i < n; ++i) {
        lo = std::min(lo, fit.beta(i) - fit.ci95_halfwidth(i));
        hi = std::max(hi, fit.beta(i) + fit.ci95_halfwidth(i));
    }
    double pad = std::max(1e-9, (hi - lo) * 0.1);
    f.ymin = lo - pad;
    f.ymax = hi + pad;
    draw_axes(svg, f, "", "coefficient");
    svg.line(f.left, f.py(0.0), f.right, f.py(0.0), "#888888");
    for (long i = 0; i < n; ++i) {
        double x = static_cast<double>(i) + 1.0;
        double top = std::max(fit.beta(i), 0.0), bot = std::min(fit.beta(i), 0.0);
        svg.rect(f.px(x) - 14, f.py(top), 28, std::max(1.0, f.py(bot) - f.py(top)),
                 kPalette[static_cast<std::size_t>(i) % kPalette.size()]);
        svg.line(f.px(x), f.py(fit.beta(i) - fit.ci95_halfwidth(i)), f.px(x),
                 f.py(fit.beta(i) + fit.ci95_halfwidth(i)), "#000000", 1.5);
        svg.text(f.px(x), f.bottom + 16 + 12 * (i % 2), fit.names[static_cast<std::size_t>(i)],
                 9, "middle");
    }
    svg.save(path);
}

void figure_priors(const RunData& data, const std::filesystem::path& path) {
    Svg svg(640, 400);
    svg.text(320, 18, "elicited priors by task", 14, "middle");
    Frame f;
    int max_task = 1;
    std::map<int, Cell> primary, secondary;
    const bool is_function = data.experiment == "function";
    for (const auto& p : data.priors) {
        int t = p.value("task", 1);
        max_task = std::max(max_task, t);
        if (is_function) {
            primary[t].sum += p.value("slope", 0.0);
            primary[t].n += 1;
            secondary[t].sum += p.value("intercept", 0.0);
            secondary[t].n += 1;
        } else {
            primary[t].sum += p.value("mean", 0.0);
            primary[t].n += 1;
            secondary[t].sum += p.value("sd", 0.0);
            secondary[t].n += 1;
        }
    }
    double lo = 0.0, hi = 0.0;
    for (const auto& m : {primary, secondary})
        for (const auto& [t, cell] : m) {
            lo = std::min(lo, cell.mean());
            hi = std::max(hi, cell.mean());
        }
    double pad = std::max(1e-9, (hi - lo) * 0.1);
    Frame fr;
    fr.xmin = 0.5;
    fr.xmax = max_task + 0.5;
    fr.ymin = lo - pad;
    fr.ymax = hi + pad;
    draw_axes(svg, fr, "task", "estimate");
    auto draw = [&](const std::map<int, Cell>& m, const std::string& color,
                    const std::string& label, int row) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [t, cell] : m) {
            pts.push_back({fr.px(t), fr.py(cell.mean())});
            svg.circle(fr.px(t), fr.py(cell.mean()), 3, color);
        }
        svg.polyline(pts, color);
        svg.rect(fr.right - 166, fr.top + 8 + 16 * row, 10, 10, color);
        svg.text(fr.right - 150, fr.top + 16 + 16 * row, label, 11);
    };
    draw(primary, kPalette[0], is_function ? "slope" : "mean", 0);
    draw(secondary, kPalette[1], is_function ? "intercept" : "sd", 1);
    for (int t = 1; t <= max_task; ++t)
        svg.text(fr.px(t), fr.bottom + 16, std::to_string(t), 11, "middle");
    svg.save(path);
}

} // namespace

AnalysisSummary analyze_run(const std::filesystem::path& run_dir,
                            const std::filesystem::path& out_dir) {
    RunData data = load_run(run_dir);
    std::filesystem::create_directories(out_dir);
    AnalysisSummary summary;
    summary.experiment = data.experiment;
    summary.n_records = static_cast<long>(data.records.size());
    for (const auto& r : data.records)
        if (!r.valid) ++summary.n_invalid;

    {
        auto path = out_dir / "curves.csv";
        auto out = open_out(path);
        // mean_score is regret for bandits and MSE otherwise; rmse is left
        // empty where the score is not a squared error
        out << "agent,task,trial,mean_score,rmse,ci95,n\n";
        bool squared = data.experiment != "bandit";
        for (const auto& [agent, cells] : build_curves(data))
            for (const auto& [key, cell] : cells)
                out << agent << ',' << key.first << ',' << key.second << ','
                    << fmt(cell.mean()) << ','
                    << (squared ? fmt(std::sqrt(std::max(0.0, cell.mean()))) : std::string())
                    << ',' << fmt(cell.ci95()) << ',' << cell.n << '\n';
        summary.written.push_back(path);
    }

    {
        auto path = out_dir / "effects.csv";
        auto out = open_out(path);
        write_fit_csv(out, effect_fit(data, data.experiment == "bandit"), "t");
        summary.written.push_back(path);
    }

    if (data.experiment == "bandit") {
        auto fit = analysis::fit_strategy_regression(bandit_obs(data),
                                                     kalman_params(data.config));
        auto path = out_dir / "strategy.csv";
        auto out = open_out(path);
        write_fit_csv(out, fit, "z");
        summary.written.push_back(path);
    }

    if (data.experiment == "regression") {
        std::vector<analysis::PredictionRecord> preds;
        for (const auto& r : data.records) {
            if (r.agent != runner::kSubjectAgent) continue;
            analysis::PredictionRecord p;
            p.task = r.task;
            p.trial = r.trial;
            p.valid = r.valid && r.prediction.has_value();
            if (r.prediction) p.prediction = *r.prediction;
            if (r.target) p.target = *r.target;
            preds.push_back(p);
        }
        auto metrics = analysis::error_metrics(preds);
        auto path = out_dir / "extremes.csv";
        auto out = open_out(path);
        out << "trial,extreme_rate\n";
        for (const auto& [trial, rate] : metrics.extreme_rate_by_trial)
            out << trial << ',' << fmt(rate) << '\n';
        summary.written.push_back(path);
    }

    if (!data.priors.empty()) {
        auto path = out_dir / "priors.csv";
        auto out = open_out(path);
        std::set<std::string> keys;
        for (const auto& p : data.priors)
            for (const auto& [k, _] : p.items()) keys.insert(k);
        bool first = true;
        for (const auto& k : keys) {
            out << (first ? "" : ",") << k;
            first = false;
        }
        out << '\n';
        for (const auto& p : data.priors) {
            first = true;
            for (const auto& k : keys) {
                out << (first ? "" : ",");
                first = false;
                if (!p.contains(k)) continue;
                const auto& v = p.at(k);
                if (v.is_string()) out << v.get<std::string>();
                else if (v.is_number_integer()) out << v.get<long>();
                else if (v.is_number()) out << fmt(v.get<double>());
                else out << v.dump();
            }
            out << '\n';
        }
        summary.written.push_back(path);
    }
    return summary;
}

ReportSummary render_report(const std::filesystem::path& run_dir,
                            const std::filesystem::path& out_dir) {
    RunData data = load_run(run_dir);
    std::filesystem::create_directories(out_dir);
    ReportSummary summary;
    auto curves = build_curves(data);

    figure_curves(data, curves, out_dir / "curves.svg");
    summary.figures.push_back(out_dir / "curves.svg");

    figure_task_means(data, curves, out_dir / "task_means.svg");
    summary.figures.push_back(out_dir / "task_means.svg");

    try {
        auto fit = effect_fit(data, data.experiment == "bandit");
        figure_fit_bars(fit,
                        data.experiment == "bandit" ? "reward effects" : "error effects",
                        out_dir / "effects.svg");
        summary.figures.push_back(out_dir / "effects.svg");
    } catch (const FitError& e) {
        summary.notices.push_back(std::string("effects panel skipped: ") + e.what());
    }

    if (data.experiment == "bandit") {
        try {
            auto fit = analysis::fit_strategy_regression(bandit_obs(data),
                                                         kalman_params(data.config));
            figure_fit_bars(fit, "strategy decomposition", out_dir / "strategy.svg");
            summary.figures.push_back(out_dir / "strategy.svg");
        } catch (const FitError& e) {
            summary.notices.push_back(std::string("strategy panel skipped: ") + e.what());
        }
    } else {
        summary.notices.push_back("strategy panel skipped: bandit runs only");
    }

    if (!data.priors.empty()) {
        figure_priors(data, out_dir / "priors.svg");
        summary.figures.push_back(out_dir / "priors.svg");
    } else {
        summary.notices.push_back("priors panel skipped: no probe samples recorded");
    }
    return summary;
}

} // namespace iclh::report
