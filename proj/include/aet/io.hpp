#pragma once

#include "aet/scenario.hpp"
#include "aet/trial.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace aet {

inline constexpr const char* kVersion = "0.1.0";

Method parse_method(const std::string& name); // cutoff | fk | fkbma
std::string method_name(Method method);
std::string decision_name(TrialDecision decision);

// One experiment: what to run plus every tunable the engine exposes.
// Mirrors the JSON config file one to one (see configs/default.json).
struct RunConfig {
    std::string scenario = "4";
    Method method = Method::FK;
    int replications = 200;
    std::uint64_t seed = 1;
    TrialConfig trial; // carries prior, sampler, and cutoff settings
    void validate() const; // throws ConfigError
};

// Parsing rejects unknown keys and type mismatches, naming the offending
// field; absent fields keep their defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);
// Canonical serialization: fixed field order, two-space indent.
std::string serialize_run_config(const RunConfig& config);
// Stable FNV-1a digest of the canonical serialization.
std::uint64_t config_digest(const RunConfig& config);

// CSV with a fixed schema: every row must match the header arity.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& file, std::vector<std::string> header);
    void row(std::span<const std::string> cells); // throws ConfigError on arity mismatch
    void row(std::initializer_list<std::string> cells);

    static std::string cell(double v); // shortest round-trip decimal form
    static std::string cell(int v);

private:
    std::ofstream out_;
    std::size_t arity_;
};

// Reproducibility sidecar written next to every command's outputs.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const RunConfig& config);

std::string trial_result_json(const RunConfig& config, const TrialResult& result);
void write_trial_result(const std::filesystem::path& file, const RunConfig& config,
                        const TrialResult& result);

// Per-replication audit, one JSON object per line.
void write_audit(const std::filesystem::path& file, std::span<const ReplicationRecord> records);

// One aggregated operating-characteristics row per (scenario, method) cell.
struct StudyRow {
    std::string scenario;
    Method method = Method::FK;
    double lambda_terms = 3.0;
    double lambda_knots = 3.0;
    OperatingCharacteristics oc;
};
void write_study_csv(const std::filesystem::path& file, std::span<const StudyRow> rows);

} // namespace aet
