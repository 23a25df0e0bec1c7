#include "aet/io.hpp"

#include "aet/error.hpp"

#include <json.hpp>

#include <charconv>
#include <sstream>
#include <utility>

namespace aet {

using Json = nlohmann::ordered_json;

Method parse_method(const std::string& name) {
    if (name == "cutoff") return Method::Cutoff;
    if (name == "fk") return Method::FK;
    if (name == "fkbma") return Method::FKBMA;
    throw ConfigError("unknown method '" + name + "' (expected cutoff, fk, or fkbma)");
}

std::string method_name(Method method) {
    switch (method) {
    case Method::Cutoff: return "cutoff";
    case Method::FK: return "fk";
    case Method::FKBMA: return "fkbma";
    }
    throw ConfigError("method_name: invalid method value");
}

std::string decision_name(TrialDecision decision) {
    switch (decision) {
    case TrialDecision::Efficacy: return "efficacy";
    case TrialDecision::Futility: return "futility";
    case TrialDecision::NoEffect: return "no_effect";
    }
    throw ConfigError("decision_name: invalid decision value");
}

void RunConfig::validate() const {
    ScenarioSpec::by_id(scenario); // throws with the offending id
    if (replications < 1) throw ConfigError("replications: must be >= 1");
    trial.validate();
}

namespace {

[[noreturn]] void bad_field(const std::string& path, const char* expected) {
    throw ConfigError("config field '" + path + "': expected " + std::string(expected));
}

void read(const Json& v, const std::string& path, double& slot) {
    if (!v.is_number()) bad_field(path, "a number");
    slot = v.get<double>();
}

void read(const Json& v, const std::string& path, int& slot) {
    if (!v.is_number_integer()) bad_field(path, "an integer");
    slot = v.get<int>();
}

void read(const Json& v, const std::string& path, std::uint64_t& slot) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0))
        bad_field(path, "a non-negative integer");
    slot = v.get<std::uint64_t>();
}

void read(const Json& v, const std::string& path, bool& slot) {
    if (!v.is_boolean()) bad_field(path, "a boolean");
    slot = v.get<bool>();
}

void read(const Json& v, const std::string& path, std::string& slot) {
    if (!v.is_string()) bad_field(path, "a string");
    slot = v.get<std::string>();
}

void read(const Json& v, const std::string& path, std::vector<int>& slot) {
    if (!v.is_array()) bad_field(path, "an array of integers");
    slot.clear();
    for (const auto& e : v) {
        if (!e.is_number_integer()) bad_field(path, "an array of integers");
        slot.push_back(e.get<int>());
    }
}

void read(const Json& v, const std::string& path, std::vector<double>& slot) {
    if (!v.is_array()) bad_field(path, "an array of numbers");
    slot.clear();
    for (const auto& e : v) {
        if (!e.is_number()) bad_field(path, "an array of numbers");
        slot.push_back(e.get<double>());
    }
}

void read(const Json& v, const std::string& path, Method& slot) {
    std::string name;
    read(v, path, name);
    try {
        slot = parse_method(name);
    } catch (const ConfigError& e) {
        throw ConfigError("config field '" + path + "': " + e.what());
    }
}

template <typename Fn>
void walk_object(const Json& obj, const std::string& prefix, Fn&& apply) {
    if (!obj.is_object()) bad_field(prefix.empty() ? "<root>" : prefix, "an object");
    for (const auto& [key, value] : obj.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!apply(key, value, path))
            throw ConfigError("config field '" + path + "': unknown field");
    }
}

void apply_prior(const Json& obj, const std::string& prefix, PriorSpec& p) {
    walk_object(obj, prefix, [&](const std::string& key, const Json& v, const std::string& path) {
        if (key == "coef_variance") read(v, path, p.coef_variance);
        else if (key == "sigma_shape") read(v, path, p.sigma_shape);
        else if (key == "sigma_scale") read(v, path, p.sigma_scale);
        else if (key == "lambda_terms") read(v, path, p.lambda_terms);
        else if (key == "lambda_knots") read(v, path, p.lambda_knots);
        else return false;
        return true;
    });
}

void apply_sampler(const Json& obj, const std::string& prefix, SamplerConfig& s) {
    walk_object(obj, prefix, [&](const std::string& key, const Json& v, const std::string& path) {
        if (key == "n_samples") read(v, path, s.n_samples);
        else if (key == "burn_in") read(v, path, s.burn_in);
        else if (key == "thin") read(v, path, s.thin);
        else if (key == "chains") read(v, path, s.chains);
        else if (key == "proposal_variance") read(v, path, s.proposal_variance);
        else if (key == "collapsed") read(v, path, s.collapsed);
        else if (key == "knots_per_term") read(v, path, s.knots_per_term);
        else return false;
        return true;
    });
}

void apply_trial(const Json& obj, const std::string& prefix, TrialConfig& t) {
    walk_object(obj, prefix, [&](const std::string& key, const Json& v, const std::string& path) {
        if (key == "n_max") read(v, path, t.n_max);
        else if (key == "interim_at") read(v, path, t.interim_at);
        else if (key == "b1") read(v, path, t.b1);
        else if (key == "b2") read(v, path, t.b2);
        else if (key == "alpha") read(v, path, t.alpha);
        else if (key == "prevalence_lo") read(v, path, t.prevalence_lo);
        else if (key == "prevalence_hi") read(v, path, t.prevalence_hi);
        else if (key == "randomization") read(v, path, t.randomization);
        else if (key == "futility_at_b2") read(v, path, t.futility_at_b2);
        else return false;
        return true;
    });
}

void apply_cutoff(const Json& obj, const std::string& prefix, CutoffSpec& c) {
    walk_object(obj, prefix, [&](const std::string& key, const Json& v, const std::string& path) {
        if (key == "thresholds") read(v, path, c.thresholds);
        else return false;
        return true;
    });
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    RunConfig c;
    walk_object(root, "", [&](const std::string& key, const Json& v, const std::string& path) {
        if (key == "scenario") read(v, path, c.scenario);
        else if (key == "method") read(v, path, c.method);
        else if (key == "replications") read(v, path, c.replications);
        else if (key == "seed") read(v, path, c.seed);
        else if (key == "trial") apply_trial(v, path, c.trial);
        else if (key == "prior") apply_prior(v, path, c.trial.prior);
        else if (key == "sampler") apply_sampler(v, path, c.trial.sampler);
        else if (key == "cutoff") apply_cutoff(v, path, c.trial.cutoff);
        else return false;
        return true;
    });
    return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_run_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
}

namespace {

Json config_json(const RunConfig& c) {
    Json j;
    j["scenario"] = c.scenario;
    j["method"] = method_name(c.method);
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    Json trial;
    trial["n_max"] = c.trial.n_max;
    trial["interim_at"] = c.trial.interim_at;
    trial["b1"] = c.trial.b1;
    trial["b2"] = c.trial.b2;
    trial["alpha"] = c.trial.alpha;
    trial["prevalence_lo"] = c.trial.prevalence_lo;
    trial["prevalence_hi"] = c.trial.prevalence_hi;
    trial["randomization"] = c.trial.randomization;
    trial["futility_at_b2"] = c.trial.futility_at_b2;
    j["trial"] = std::move(trial);
    Json prior;
    prior["coef_variance"] = c.trial.prior.coef_variance;
    prior["sigma_shape"] = c.trial.prior.sigma_shape;
    prior["sigma_scale"] = c.trial.prior.sigma_scale;
    prior["lambda_terms"] = c.trial.prior.lambda_terms;
    prior["lambda_knots"] = c.trial.prior.lambda_knots;
    j["prior"] = std::move(prior);
    Json sampler;
    sampler["n_samples"] = c.trial.sampler.n_samples;
    sampler["burn_in"] = c.trial.sampler.burn_in;
    sampler["thin"] = c.trial.sampler.thin;
    sampler["chains"] = c.trial.sampler.chains;
    sampler["proposal_variance"] = c.trial.sampler.proposal_variance;
    sampler["collapsed"] = c.trial.sampler.collapsed;
    sampler["knots_per_term"] = c.trial.sampler.knots_per_term;
    j["sampler"] = std::move(sampler);
    Json cutoff;
    cutoff["thresholds"] = c.trial.cutoff.thresholds;
    j["cutoff"] = std::move(cutoff);
    return j;
}

} // namespace

std::string serialize_run_config(const RunConfig& config) {
    return config_json(config).dump(2) + "\n";
}

std::uint64_t config_digest(const RunConfig& config) {
    const std::string text = serialize_run_config(config);
    std::uint64_t hash = 14695981039346656037ULL;
    for (const unsigned char byte : text) {
        hash ^= byte;
        hash *= 1099511628211ULL;
    }
    return hash;
}

CsvWriter::CsvWriter(const std::filesystem::path& file, std::vector<std::string> header)
    : out_(file), arity_(header.size()) {
    if (!out_) throw ConfigError("cannot write " + file.string());
    if (header.empty()) throw ConfigError("csv schema must have at least one column");
    row(header);
}

namespace {

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string quoted = "\"";
    for (const char ch : cell) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

} // namespace

void CsvWriter::row(std::span<const std::string> cells) {
    if (cells.size() != arity_)
        throw ConfigError("csv row arity " + std::to_string(cells.size()) +
                          " does not match the schema arity " + std::to_string(arity_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out_ << ',';
        out_ << csv_escape(cells[i]);
    }
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<std::string> cells) {
    row(std::span<const std::string>(cells.begin(), cells.size()));
}

std::string CsvWriter::cell(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw ConfigError("csv cell: unformattable number");
    return std::string(buf, end);
}

std::string CsvWriter::cell(int v) { return std::to_string(v); }

namespace {

std::string hex_digest(std::uint64_t digest) {
    char buf[17];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), digest, 16);
    (void)ec;
    return std::string(buf, end);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << text;
}

} // namespace

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const RunConfig& config) {
    Json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["config_digest"] = hex_digest(config_digest(config));
    manifest["config"] = config_json(config);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string trial_result_json(const RunConfig& config, const TrialResult& result) {
    Json j;
    j["scenario"] = config.scenario;
    j["method"] = method_name(config.method);
    j["seed"] = config.seed;
    j["decision"] = decision_name(result.decision);
    j["stopped_early"] = result.stopped_early;
    j["aborted"] = result.aborted;
    j["n_enrolled"] = result.n_enrolled;
    j["p_eff_history"] = result.p_eff_history;
    j["subspace"]["prevalence"] = result.subspace.prevalence;
    j["subspace"]["widened"] = result.subspace.widened;
    j["selected_variables"] = std::vector<int>(result.selected_variables.begin(),
                                               result.selected_variables.end());
    return j.dump(2) + "\n";
}

void write_trial_result(const std::filesystem::path& file, const RunConfig& config,
                        const TrialResult& result) {
    write_text(file, trial_result_json(config, result));
}

void write_audit(const std::filesystem::path& file, std::span<const ReplicationRecord> records) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    for (const ReplicationRecord& rec : records) {
        Json j;
        j["replication"] = rec.replication;
        j["seed"] = rec.seed;
        j["decision"] = decision_name(rec.decision);
        j["stopped_early"] = rec.stopped_early;
        j["aborted"] = rec.aborted;
        j["n_enrolled"] = rec.n_enrolled;
        j["accuracy"] = rec.accuracy;
        j["exact_detection"] = rec.exact_detection;
        j["inclusive_detection"] = rec.inclusive_detection;
        j["p_eff_history"] = rec.p_eff_history;
        j["selected_variables"] =
            std::vector<int>(rec.selected_variables.begin(), rec.selected_variables.end());
        out << j.dump() << '\n';
    }
}

void write_study_csv(const std::filesystem::path& file, std::span<const StudyRow> rows) {
    CsvWriter csv(file, {"scenario", "method", "lambda_terms", "lambda_knots", "replications",
                         "flagged", "efficacy_rate", "accuracy", "edr", "idr", "expected_n"});
    for (const StudyRow& r : rows) {
        csv.row({r.scenario, method_name(r.method), CsvWriter::cell(r.lambda_terms),
                 CsvWriter::cell(r.lambda_knots), CsvWriter::cell(r.oc.replications),
                 CsvWriter::cell(r.oc.flagged), CsvWriter::cell(r.oc.efficacy_rate),
                 CsvWriter::cell(r.oc.accuracy), CsvWriter::cell(r.oc.edr),
                 CsvWriter::cell(r.oc.idr), CsvWriter::cell(r.oc.expected_n)});
    }
}

} // namespace aet
