#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace iclh::records {

// One row per (agent, task, trial); the unit behind every figure.
struct TrialRecord {
    int simulation = 0;
    std::string agent = "subject";
    int task = 1;  // 1-based
    int trial = 1; // 1-based
    nlohmann::json input;
    std::string raw_completion;
    std::optional<double> prediction;
    std::optional<int> choice; // canonical arm index
    std::optional<double> target;
    std::optional<double> reward;
    std::optional<double> loss; // squared error or regret
    bool valid = true;
    std::string transcript; // content-addressed transcript filename

    nlohmann::json to_json() const;
    static TrialRecord from_json(const nlohmann::json& j);
};

struct Transcript {
    std::string experiment; // function | bandit | regression | prior_probe
    std::string prompt_text;
    std::string completion_text;
    std::optional<double> parsed_number;
    std::optional<int> parsed_choice;
    std::string timestamp_utc;
};

// FNV-1a over prompt and completion; used as the transcript filename.
std::string content_hash(const std::string& prompt, const std::string& completion);

std::string utc_now_iso8601();

struct RunManifest {
    nlohmann::json config_snapshot;
    std::string code_version;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> simulation_seeds;
    std::set<int> completed_simulations;
    long record_count = 0;
    long invalid_trials = 0;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

// Append-only record log plus an atomically updated manifest. One store per
// run directory; a lock file refuses concurrent writers.
class RunStore {
  public:
    explicit RunStore(std::filesystem::path dir, bool save_transcripts = true);
    ~RunStore();

    RunStore(const RunStore&) = delete;
    RunStore& operator=(const RunStore&) = delete;

    // Starts a fresh manifest or resumes an existing one; on resume the
    // config snapshot and seeds must match and trailing records from
    // incomplete simulations are dropped.
    void initialize(const nlohmann::json& config_snapshot, std::uint64_t master_seed,
                    const std::vector<std::uint64_t>& simulation_seeds);

    bool is_resumed() const { return resumed_; }
    bool simulation_complete(int sim) const;
    const RunManifest& manifest() const { return manifest_; }

    // Records of one finished simulation, written in one append; the manifest
    // marks the simulation complete only after the records are on disk.
    void append_simulation(int sim, const std::vector<TrialRecord>& records,
                           const std::vector<nlohmann::json>& prior_samples,
                           const std::vector<Transcript>& transcripts);

    std::filesystem::path dir() const { return dir_; }
    std::filesystem::path records_path() const { return dir_ / "records.jsonl"; }
    std::filesystem::path priors_path() const { return dir_ / "priors.jsonl"; }
    std::filesystem::path manifest_path() const { return dir_ / "manifest.json"; }

  private:
    std::filesystem::path dir_;
    bool save_transcripts_;
    bool resumed_ = false;
    bool locked_ = false;
    RunManifest manifest_;

    void acquire_lock();
    void write_manifest() const;
    void compact_records();
};

std::vector<TrialRecord> read_records(const std::filesystem::path& records_path);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& manifest_path);

extern const std::string kCodeVersion;

} // namespace iclh::records
