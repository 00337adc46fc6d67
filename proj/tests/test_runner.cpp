#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "iclh/analysis.hpp"
#include "iclh/errors.hpp"
#include "iclh/runner.hpp"

using namespace iclh;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("iclh_runner_" + tag);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

config::RunConfig bandit_config(const fs::path& out, int sims) {
    config::RunConfig cfg;
    cfg.experiment = config::Experiment::bandit;
    cfg.trials_per_task = 10;
    cfg.max_tokens = 8;
    cfg.n_simulations = sims;
    cfg.master_seed = 42;
    cfg.output_dir = out.string();
    cfg.scripted_params.kind = scripted::AgentKind::kalman_thompson;
    return cfg;
}

fs::path make_datasets(const std::string& tag, int n_files) {
    auto dir = fresh_dir("data_" + tag);
    fs::create_directories(dir);
    Rng rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int d = 0; d < n_files; ++d) {
        std::ofstream out(dir / ("ds" + std::to_string(d) + ".csv"));
        out << "f0,f1,f2,f3,f4,f5,target\n";
        for (int i = 0; i < 25; ++i) {
            double y = 0.0;
            for (int j = 0; j < 6; ++j) {
                double v = normal(rng);
                out << v << ',';
                y += (j % 2 ? 0.5 : 1.5) * v;
            }
            out << y << '\n';
        }
    }
    return dir;
}

} // namespace

TEST_SUITE("runner") {

TEST_CASE("identical seeds give byte-identical record logs") {
    auto dir_a = fresh_dir("det_a");
    auto dir_b = fresh_dir("det_b");
    auto cfg = bandit_config(dir_a, 4);
    runner::Runner(cfg).run();
    cfg.output_dir = dir_b.string();
    runner::Runner(cfg).run();
    CHECK(slurp(dir_a / "records.jsonl") == slurp(dir_b / "records.jsonl"));
}

TEST_CASE("worker count does not change the record log") {
    auto dir_a = fresh_dir("par_a");
    auto dir_b = fresh_dir("par_b");
    auto cfg = bandit_config(dir_a, 6);
    cfg.workers = 1;
    runner::Runner(cfg).run();
    cfg.output_dir = dir_b.string();
    cfg.workers = 4;
    runner::Runner(cfg).run();
    CHECK(slurp(dir_a / "records.jsonl") == slurp(dir_b / "records.jsonl"));
}

TEST_CASE("interrupted runs resume to the same bytes") {
    auto dir_full = fresh_dir("res_full");
    auto dir_split = fresh_dir("res_split");
    auto cfg = bandit_config(dir_full, 5);
    auto full = runner::Runner(cfg).run();
    CHECK(full.completed == 5);

    cfg.output_dir = dir_split.string();
    auto first = runner::Runner(cfg).run(2);
    CHECK(first.completed == 2);
    auto second = runner::Runner(cfg).run();
    CHECK(second.skipped == 2);
    CHECK(second.completed == 3);
    CHECK(slurp(dir_full / "records.jsonl") == slurp(dir_split / "records.jsonl"));

    auto idle = runner::Runner(cfg).run();
    CHECK(idle.completed == 0);
    CHECK(idle.skipped == 5);
}

TEST_CASE("bandit runs produce full co-simulated record sets") {
    auto dir = fresh_dir("bandit_counts");
    auto cfg = bandit_config(dir, 3);
    runner::Runner(cfg).run();
    auto recs = records::read_records(dir / "records.jsonl");
    // subject + greedy + ucb per trial
    CHECK(recs.size() == 3u * 5u * 10u * 3u);
    long subject = 0;
    for (const auto& r : recs) {
        if (r.agent == runner::kSubjectAgent) {
            ++subject;
            CHECK(r.valid);
            CHECK(r.choice.has_value());
            CHECK(r.reward.has_value());
            CHECK(r.loss.has_value());
            CHECK(*r.loss >= 0.0);
        }
    }
    CHECK(subject == 3 * 5 * 10);
}

TEST_CASE("subject bandit records replay through the strategy design") {
    auto dir = fresh_dir("replay");
    auto cfg = bandit_config(dir, 3);
    runner::Runner(cfg).run();
    std::vector<analysis::BanditTrialObs> obs;
    for (const auto& r : records::read_records(dir / "records.jsonl"))
        if (r.agent == runner::kSubjectAgent)
            obs.push_back({r.simulation, r.task, r.trial, *r.choice, *r.reward, r.valid});
    analysis::KalmanParams params;
    auto rows = analysis::build_probit_design(obs, params); // throws if misordered
    CHECK(rows.size() == obs.size());
}

TEST_CASE("a locked run directory refuses a second runner") {
    auto dir = fresh_dir("locked");
    auto cfg = bandit_config(dir, 2);
    records::RunStore hold(dir);
    CHECK_THROWS_AS(runner::Runner(cfg).run(), StoreError);
}

TEST_CASE("function runs score against noise-free targets") {
    auto dir = fresh_dir("function");
    config::RunConfig cfg;
    cfg.experiment = config::Experiment::function;
    cfg.n_simulations = 3;
    cfg.master_seed = 9;
    cfg.output_dir = dir.string();
    cfg.scripted_params.kind = scripted::AgentKind::blr_mean;
    auto result = runner::Runner(cfg).run();
    CHECK(result.completed == 3);
    CHECK(result.invalid_trials == 0);
    auto recs = records::read_records(dir / "records.jsonl");
    CHECK(recs.size() == 3u * 5u * 5u * 3u); // subject + two blr baselines
    for (const auto& r : recs) {
        CHECK(r.target.has_value());
        CHECK(r.prediction.has_value());
        CHECK(*r.loss == doctest::Approx((*r.prediction - *r.target) *
                                         (*r.prediction - *r.target))
                             .epsilon(1e-9));
    }
}

TEST_CASE("invalid completions are flagged but do not halt the episode") {
    auto dir = fresh_dir("invalid");
    config::RunConfig cfg;
    cfg.experiment = config::Experiment::function;
    cfg.n_simulations = 1;
    cfg.master_seed = 10;
    cfg.output_dir = dir.string();
    cfg.scripted_params.kind = scripted::AgentKind::constant;
    cfg.scripted_params.constant_text = "no answer";
    auto result = runner::Runner(cfg).run();
    CHECK(result.completed == 1);
    CHECK(result.invalid_trials == 25);
    auto recs = records::read_records(dir / "records.jsonl");
    for (const auto& r : recs)
        if (r.agent == runner::kSubjectAgent) {
            CHECK(!r.valid);
            CHECK(!r.prediction.has_value());
        }
}

TEST_CASE("regression runs use prepared datasets end to end") {
    auto data = make_datasets("reg", 6);
    auto dir = fresh_dir("regression");
    config::RunConfig cfg;
    cfg.experiment = config::Experiment::regression;
    cfg.n_simulations = 2;
    cfg.master_seed = 12;
    cfg.output_dir = dir.string();
    cfg.datasets_dir = data.string();
    cfg.scripted_params.kind = scripted::AgentKind::blr_mean;
    cfg.forest_config.n_trees = 10;
    runner::Runner runner_obj(cfg);
    CHECK(runner_obj.datasets().size() == 6);
    for (const auto& ds : runner_obj.datasets()) CHECK(ds.cols() == 5);
    auto result = runner_obj.run();
    CHECK(result.completed == 2);
    auto recs = records::read_records(dir / "records.jsonl");
    CHECK(recs.size() == 2u * 5u * 5u * 3u); // subject + blr + forest
    for (const auto& r : recs) {
        CHECK(r.target.has_value());
        CHECK(*r.target >= -1.0);
        CHECK(*r.target <= 1.0);
        if (r.agent == runner::kSubjectAgent) CHECK(r.valid);
    }
}

TEST_CASE("prior probes are recorded per task") {
    auto dir = fresh_dir("probes");
    auto cfg = bandit_config(dir, 2);
    cfg.prior_probes = true;
    runner::Runner(cfg).run();
    auto priors = records::read_jsonl(dir / "priors.jsonl");
    CHECK(priors.size() == 2u * 5u);
    for (const auto& p : priors) {
        CHECK(p.contains("mean"));
        CHECK(p.contains("sd"));
        CHECK(p.at("task").get<int>() >= 1);
        CHECK(p.at("task").get<int>() <= 5);
    }
}

TEST_CASE("regression needs enough eligible datasets") {
    auto data = make_datasets("few", 3);
    config::RunConfig cfg;
    cfg.experiment = config::Experiment::regression;
    cfg.n_simulations = 1;
    cfg.output_dir = fresh_dir("reg_few").string();
    cfg.datasets_dir = data.string();
    CHECK_THROWS_AS(runner::Runner{cfg}, ConfigError);
}

} // TEST_SUITE
