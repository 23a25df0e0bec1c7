#include "aet/scenario.hpp"

#include "aet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace aet {

TruncatedTSpec hb_law() { return {5.0, 50.0, 15.0, 0.0, 265.0}; }
TruncatedTSpec dhr_law() { return {5.0, 3.0, 8.0, 2.0, 20.0}; }
TruncatedNormalSpec vcb_law() {
    return {20.0, 13.0, 0.0, std::numeric_limits<double>::infinity()};
}

namespace {

constexpr std::uint64_t kReferenceSeed = 0x5ca1ab1e0ddba11ULL;
constexpr int kReferenceDraws = 100000;

Ecdf build_reference(int biomarker) {
    RandomStream rng(mix_seed(kReferenceSeed, static_cast<std::uint64_t>(biomarker)));
    std::vector<double> sample(kReferenceDraws);
    const TruncatedTSpec law = biomarker == 0 ? hb_law() : dhr_law();
    for (double& v : sample) v = sample_truncated_t(law, rng);
    return Ecdf(std::move(sample));
}

double inv_logit(double u) { return 1.0 / (1.0 + std::exp(-u)); }

} // namespace

const Ecdf& reference_cdf(int biomarker) {
    if (biomarker != 0 && biomarker != 1)
        throw ConfigError("reference_cdf: biomarker index must be 0 or 1");
    static const Ecdf hb = build_reference(0);
    static const Ecdf dhr = build_reference(1);
    return biomarker == 0 ? hb : dhr;
}

ScenarioSpec ScenarioSpec::by_id(const std::string& id) {
    ScenarioSpec s;
    s.id = id;
    if (id == "1") {
        // null: no effect anywhere
    } else if (id == "2") {
        s.predictive_variables = {1, 2};
        s.true_delta = 5.0;
        s.true_prevalence = 0.18;
    } else if (id == "3") {
        s.predictive_variables = {1};
        s.true_delta = 5.0;
        s.true_prevalence = 0.52;
    } else if (id == "4") {
        s.predictive_variables = {1};
        s.true_delta = 5.0;
        s.true_prevalence = 0.58;
    } else if (id == "5") {
        s.predictive_variables = {1};
        s.true_delta = 5.1;
        s.true_prevalence = 0.73;
    } else if (id == "6") {
        s.predictive_variables = {2};
        s.true_delta = 5.0;
        s.true_prevalence = 0.54;
    } else if (id == "7") {
        s.predictive_variables = {2};
        s.true_delta = 7.5;
        s.true_prevalence = 0.15;
    } else if (id == "8") {
        s.predictive_variables = {2};
        s.true_delta = 5.3;
        s.true_prevalence = 0.45;
    } else if (id == "A1") {
        s.dim = 3; // null with the extra candidate biomarker
    } else if (id == "A2") {
        s.dim = 3; // scenario-4 surface; VCB is inert
        s.predictive_variables = {1};
        s.true_delta = 5.0;
        s.true_prevalence = 0.58;
    } else {
        throw ConfigError("unknown scenario id '" + id + "' (expected 1-8, A1, or A2)");
    }
    return s;
}

double ScenarioSpec::true_gamma(const BioVec& x) const {
    if (id == "1" || id == "A1") return 0.0;
    if (id == "2") return (x[0] > 60.0 && x[1] > 8.0) ? 5.0 : 0.0;
    if (id == "3") return (x[0] > 30.0 && x[0] < 100.0) ? 5.0 : 0.0;
    if (id == "4" || id == "A2") {
        const double f = reference_cdf(0)(x[0]);
        return inv_logit(30.0 * (f - 0.5)) * 6.5 - 0.5;
    }
    if (id == "5") {
        const double f = reference_cdf(0)(x[0]);
        const double rise = f <= 0.5 ? inv_logit(30.0 * (f - 0.2)) : inv_logit(-30.0 * (f - 0.8));
        return rise * 7.5 - 1.0;
    }
    if (id == "6") return x[1] > 8.0 ? 5.0 : 0.0;
    if (id == "7") return x[1] > 12.0 ? 7.5 : 0.0;
    if (id == "8") {
        const double f = reference_cdf(1)(x[1]);
        const double dip = f <= 0.5 ? inv_logit(-100.0 * (f - 0.2)) : inv_logit(100.0 * (f - 0.8));
        return dip * 6.5 - 0.5;
    }
    throw ConfigError("true_gamma: scenario '" + id + "' has no surface");
}

BioVec sample_biomarkers(int dim, RandomStream& rng) {
    BioVec x{0.0, 0.0, 0.0};
    x[0] = sample_truncated_t(hb_law(), rng);
    x[1] = sample_truncated_t(dhr_law(), rng);
    if (dim >= 3) x[2] = sample_truncated_normal(vcb_law(), rng);
    return x;
}

namespace {

PatientRecord finish_patient(const BioVec& x, const ScenarioSpec& scenario, RandomStream& rng) {
    PatientRecord r;
    r.x = x;
    r.treated = rng.bernoulli(0.5) ? 1 : 0;
    r.y = scenario.mean_outcome(x, r.treated) + rng.normal(0.0, scenario.noise_sd);
    return r;
}

constexpr int kStarvationWindow = 10000;
constexpr int kStarvationFloor = 10; // 1e-3 of the window

} // namespace

std::vector<PatientRecord> generate_patients(int n, const ScenarioSpec& scenario,
                                             const SubspaceEstimate* subspace,
                                             RandomStream& rng) {
    std::vector<PatientRecord> out;
    if (n <= 0) return out;
    out.reserve(static_cast<std::size_t>(n));
    if (subspace == nullptr || subspace->widened) {
        for (int i = 0; i < n; ++i)
            out.push_back(finish_patient(sample_biomarkers(scenario.dim, rng), scenario, rng));
        return out;
    }
    // Enriched accrual: screen candidates in blocks so membership runs over
    // the posterior draws once per block instead of once per candidate.
    int window_candidates = 0;
    int window_accepted = 0;
    std::vector<BioVec> block(256);
    while (static_cast<int>(out.size()) < n) {
        for (BioVec& x : block) x = sample_biomarkers(scenario.dim, rng);
        const std::vector<char> member = subspace->members(block);
        for (std::size_t i = 0; i < block.size() && static_cast<int>(out.size()) < n; ++i) {
            ++window_candidates;
            if (member[i]) {
                ++window_accepted;
                out.push_back(finish_patient(block[i], scenario, rng));
            }
            if (window_candidates >= kStarvationWindow) {
                if (window_accepted < kStarvationFloor) return out; // starved
                window_candidates = 0;
                window_accepted = 0;
            }
        }
    }
    return out;
}

std::vector<BioVec> external_test_set(const ScenarioSpec& scenario, std::uint64_t seed, int n) {
    RandomStream rng(seed);
    std::vector<BioVec> cohort(static_cast<std::size_t>(n));
    for (BioVec& x : cohort) x = sample_biomarkers(scenario.dim, rng);
    return cohort;
}

double external_accuracy(const TrialResult& result, std::span<const BioVec> external,
                         const ScenarioSpec& scenario) {
    if (external.empty()) throw ConfigError("external_accuracy: empty evaluation cohort");
    const std::vector<char> treat = recommend_all(external, result);
    std::size_t optimal = 0;
    for (std::size_t i = 0; i < external.size(); ++i) {
        const bool should_treat = scenario.true_gamma(external[i]) > 0.0;
        if (static_cast<bool>(treat[i]) == should_treat) ++optimal;
    }
    return static_cast<double>(optimal) / static_cast<double>(external.size());
}

DetectionFlags detection_flags(const std::set<std::uint8_t>& selected,
                               const std::set<std::uint8_t>& truth) {
    DetectionFlags flags;
    flags.exact = selected == truth;
    flags.inclusive = std::includes(selected.begin(), selected.end(), truth.begin(), truth.end());
    return flags;
}

StudyResult run_study(const TrialConfig& config, const ScenarioSpec& scenario, int replications,
                      std::uint64_t base_seed) {
    config.validate();
    if (replications < 1) throw ConfigError("run_study: replications must be >= 1");

    const std::vector<BioVec> external = external_test_set(scenario, mix_seed(base_seed, 0));

    StudyResult result;
    result.records.reserve(static_cast<std::size_t>(replications));
    int completed = 0;
    int efficacy = 0;
    int exact = 0;
    int inclusive = 0;
    long long enrolled = 0;
    double accuracy_sum = 0.0;

    for (int rep = 0; rep < replications; ++rep) {
        ReplicationRecord rec;
        rec.replication = rep;
        rec.seed = mix_seed(base_seed, static_cast<std::uint64_t>(1 + rep));
        RandomStream rng(rec.seed);
        ScenarioSource source(scenario);
        const TrialResult trial = run_trial(config, source, rng);

        rec.decision = trial.decision;
        rec.stopped_early = trial.stopped_early;
        rec.aborted = trial.aborted;
        rec.n_enrolled = trial.n_enrolled;
        rec.p_eff_history = trial.p_eff_history;
        rec.selected_variables = trial.selected_variables;
        if (trial.aborted) {
            ++result.summary.flagged;
            result.records.push_back(std::move(rec));
            continue;
        }

        rec.accuracy = external_accuracy(trial, external, scenario);
        const DetectionFlags det =
            detection_flags(trial.selected_variables, scenario.predictive_variables);
        rec.exact_detection = det.exact;
        rec.inclusive_detection = det.inclusive;

        ++completed;
        if (trial.decision == TrialDecision::Efficacy) ++efficacy;
        if (det.exact) ++exact;
        if (det.inclusive) ++inclusive;
        enrolled += trial.n_enrolled;
        accuracy_sum += rec.accuracy;
        result.records.push_back(std::move(rec));
    }

    result.summary.replications = completed;
    if (completed > 0) {
        const double denom = completed;
        result.summary.efficacy_rate = efficacy / denom;
        result.summary.accuracy = accuracy_sum / denom;
        result.summary.edr = exact / denom;
        result.summary.idr = inclusive / denom;
        result.summary.expected_n = static_cast<double>(enrolled) / denom;
    }
    return result;
}

} // namespace aet
