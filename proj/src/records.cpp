#include "iclh/records.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "iclh/errors.hpp"

namespace iclh::records {

using nlohmann::json;

const std::string kCodeVersion = "iclh 0.1.0";

nlohmann::json TrialRecord::to_json() const {
    json j;
    j["sim"] = simulation;
    j["agent"] = agent;
    j["task"] = task;
    j["trial"] = trial;
    j["input"] = input;
    j["raw"] = raw_completion;
    j["pred"] = prediction ? json(*prediction) : json(nullptr);
    j["choice"] = choice ? json(*choice) : json(nullptr);
    j["target"] = target ? json(*target) : json(nullptr);
    j["reward"] = reward ? json(*reward) : json(nullptr);
    j["loss"] = loss ? json(*loss) : json(nullptr);
    j["valid"] = valid;
    j["transcript"] = transcript;
    return j;
}

TrialRecord TrialRecord::from_json(const nlohmann::json& j) {
    TrialRecord r;
    r.simulation = j.at("sim").get<int>();
    r.agent = j.at("agent").get<std::string>();
    r.task = j.at("task").get<int>();
    r.trial = j.at("trial").get<int>();
    r.input = j.at("input");
    r.raw_completion = j.at("raw").get<std::string>();
    if (!j.at("pred").is_null()) r.prediction = j.at("pred").get<double>();
    if (!j.at("choice").is_null()) r.choice = j.at("choice").get<int>();
    if (!j.at("target").is_null()) r.target = j.at("target").get<double>();
    if (!j.at("reward").is_null()) r.reward = j.at("reward").get<double>();
    if (!j.at("loss").is_null()) r.loss = j.at("loss").get<double>();
    r.valid = j.at("valid").get<bool>();
    r.transcript = j.at("transcript").get<std::string>();
    return r;
}

std::string content_hash(const std::string& prompt, const std::string& completion) {
    auto fnv = [](std::uint64_t h, const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    };
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv(h, prompt);
    h ^= 0x1e; // separator
    h *= 0x100000001b3ULL;
    h = fnv(h, completion);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    json j;
    j["config"] = config_snapshot;
    j["code_version"] = code_version;
    j["master_seed"] = master_seed;
    j["simulation_seeds"] = simulation_seeds;
    j["completed_simulations"] = completed_simulations;
    j["record_count"] = record_count;
    j["invalid_trials"] = invalid_trials;
    return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.config_snapshot = j.at("config");
    m.code_version = j.at("code_version").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.simulation_seeds = j.at("simulation_seeds").get<std::vector<std::uint64_t>>();
    auto completed = j.at("completed_simulations").get<std::vector<int>>();
    m.completed_simulations.insert(completed.begin(), completed.end());
    m.record_count = j.at("record_count").get<long>();
    m.invalid_trials = j.at("invalid_trials").get<long>();
    return m;
}

RunStore::RunStore(std::filesystem::path dir, bool save_transcripts)
    : dir_(std::move(dir)), save_transcripts_(save_transcripts) {
    std::filesystem::create_directories(dir_);
    std::filesystem::create_directories(dir_ / "transcripts");
    acquire_lock();
}

RunStore::~RunStore() {
    if (locked_) {
        std::error_code ec;
        std::filesystem::remove(dir_ / "lock", ec);
    }
}

void RunStore::acquire_lock() {
    auto lock_path = dir_ / "lock";
    // O_EXCL semantics via fopen "x": exactly one writer per run directory
    std::FILE* f = std::fopen(lock_path.string().c_str(), "wx");
    if (!f)
        throw StoreError("run directory is locked by another process: " + dir_.string());
    std::fputs(utc_now_iso8601().c_str(), f);
    std::fclose(f);
    locked_ = true;
}

void RunStore::write_manifest() const {
    auto tmp = manifest_path();
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << manifest_.to_json().dump(2) << "\n";
        if (!out) throw StoreError("cannot write manifest: " + tmp.string());
    }
    std::filesystem::rename(tmp, manifest_path());
}

void RunStore::compact_records() {
    // drop trailing records of simulations the manifest never marked complete
    for (auto path : {records_path(), priors_path()}) {
        if (!std::filesystem::exists(path)) continue;
        auto lines = read_jsonl(path);
        auto tmp = path;
        tmp += ".tmp";
        std::ofstream out(tmp);
        long kept = 0;
        for (const auto& j : lines) {
            int sim = j.at("sim").get<int>();
            if (manifest_.completed_simulations.count(sim) == 0) continue;
            out << j.dump() << "\n";
            ++kept;
        }
        out.close();
        std::filesystem::rename(tmp, path);
        (void)kept;
    }
}

void RunStore::initialize(const nlohmann::json& config_snapshot, std::uint64_t master_seed,
                          const std::vector<std::uint64_t>& simulation_seeds) {
    if (std::filesystem::exists(manifest_path())) {
        json j;
        try {
            std::ifstream in(manifest_path());
            in >> j;
            manifest_ = RunManifest::from_json(j);
        } catch (const std::exception& e) {
            throw StoreError("corrupt manifest, refusing to resume: " + std::string(e.what()));
        }
        if (manifest_.master_seed != master_seed ||
            manifest_.simulation_seeds != simulation_seeds ||
            manifest_.config_snapshot != config_snapshot)
            throw StoreError("manifest does not match the requested run configuration");
        resumed_ = true;
        compact_records();
        return;
    }
    manifest_.config_snapshot = config_snapshot;
    manifest_.code_version = kCodeVersion;
    manifest_.master_seed = master_seed;
    manifest_.simulation_seeds = simulation_seeds;
    write_manifest();
}

bool RunStore::simulation_complete(int sim) const {
    return manifest_.completed_simulations.count(sim) > 0;
}

void RunStore::append_simulation(int sim, const std::vector<TrialRecord>& records,
                                 const std::vector<nlohmann::json>& prior_samples,
                                 const std::vector<Transcript>& transcripts) {
    if (simulation_complete(sim))
        throw StoreError("simulation already recorded: " + std::to_string(sim));

    if (save_transcripts_) {
        for (const auto& tr : transcripts) {
            auto name = content_hash(tr.prompt_text, tr.completion_text) + ".json";
            auto path = dir_ / "transcripts" / name;
            if (std::filesystem::exists(path)) continue;
            json j;
            j["experiment"] = tr.experiment;
            j["prompt"] = tr.prompt_text;
            j["completion"] = tr.completion_text;
            j["parsed_number"] = tr.parsed_number ? json(*tr.parsed_number) : json(nullptr);
            j["parsed_choice"] = tr.parsed_choice ? json(*tr.parsed_choice) : json(nullptr);
            j["timestamp"] = tr.timestamp_utc;
            std::ofstream out(path);
            out << j.dump(2) << "\n";
        }
    }

    {
        std::ofstream out(records_path(), std::ios::app);
        for (const auto& rec : records) out << rec.to_json().dump() << "\n";
        out.flush();
        if (!out) throw StoreError("cannot append records");
    }
    if (!prior_samples.empty()) {
        std::ofstream out(priors_path(), std::ios::app);
        for (const auto& j : prior_samples) out << j.dump() << "\n";
    }

    manifest_.completed_simulations.insert(sim);
    manifest_.record_count += static_cast<long>(records.size());
    for (const auto& rec : records)
        if (!rec.valid) ++manifest_.invalid_trials;
    write_manifest();
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StoreError("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
    }
    return out;
}

std::vector<TrialRecord> read_records(const std::filesystem::path& records_path) {
    std::vector<TrialRecord> out;
    for (const auto& j : read_jsonl(records_path)) out.push_back(TrialRecord::from_json(j));
    return out;
}

RunManifest read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw StoreError("cannot open " + manifest_path.string());
    json j;
    in >> j;
    return RunManifest::from_json(j);
}

} // namespace iclh::records
