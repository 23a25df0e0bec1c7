#pragma once

#include "aet/empirical.hpp"
#include "aet/patient.hpp"
#include "aet/rng.hpp"
#include "aet/stats_dist.hpp"
#include "aet/trial.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace aet {

// Generating laws for the candidate biomarkers.
TruncatedTSpec hb_law();       // x1: t(5), scale 50, shift 15, support [0, 265]
TruncatedTSpec dhr_law();      // x2: t(5), scale 3, shift 8, support [2, 20]
TruncatedNormalSpec vcb_law(); // x3: N(20, 13^2) left-truncated at 0

// Frozen empirical CDF of biomarker j (0 = HB, 1 = dHR), built once from a
// 100,000-draw reference sample under a fixed internal seed. Scenario
// surfaces defined through the marginal CDF always evaluate against these,
// so the truth is deterministic across runs.
const Ecdf& reference_cdf(int biomarker);

// Ground truth for one simulation scenario: the treatment-effect surface,
// the prognostic main effect, and the tabulated summaries the fidelity
// checks compare against. Ids "1".."8" are the two-biomarker scenarios;
// "A1" and "A2" add VCB as an inert third candidate biomarker.
struct ScenarioSpec {
    std::string id;
    int dim = 2;
    std::set<std::uint8_t> predictive_variables; // term masks; products are their own entries
    double true_delta = 0.0;      // mean effect over the effective subspace
    double true_prevalence = 0.0; // effective-subspace mass
    double noise_sd = 8.4;

    static ScenarioSpec by_id(const std::string& id); // throws ConfigError

    double true_gamma(const BioVec& x) const;
    double prognostic(const BioVec& x) const { return x[0] >= 60.0 ? 3.0 : 0.0; }
    double mean_outcome(const BioVec& x, int treated) const {
        return prognostic(x) + (treated ? true_gamma(x) : 0.0);
    }
};

BioVec sample_biomarkers(int dim, RandomStream& rng);

// n patients from the scenario's generative model: biomarkers from the laws
// above, the optional subspace filter applied before randomization, then
// T ~ Bernoulli(1/2) and noise only for accepted candidates. The batch comes
// back short only when filter acceptance collapses below 1e-3 over a
// 10,000-candidate window (starvation).
std::vector<PatientRecord> generate_patients(int n, const ScenarioSpec& scenario,
                                             const SubspaceEstimate* subspace, RandomStream& rng);

// Accrual stream for run_trial backed by generate_patients.
class ScenarioSource : public PatientSource {
public:
    explicit ScenarioSource(ScenarioSpec scenario) : scenario_(std::move(scenario)) {}
    int dim() const override { return scenario_.dim; }
    std::vector<PatientRecord> enroll(int n, const SubspaceEstimate* subspace,
                                      RandomStream& rng) override {
        return generate_patients(n, scenario_, subspace, rng);
    }

private:
    ScenarioSpec scenario_;
};

// Fixed external evaluation cohort (biomarkers only), drawn once per study.
std::vector<BioVec> external_test_set(const ScenarioSpec& scenario, std::uint64_t seed,
                                      int n = 10000);

// Fraction of the external cohort whose recommendation matches the optimal
// action, treat iff true_gamma(x) > 0.
double external_accuracy(const TrialResult& result, std::span<const BioVec> external,
                         const ScenarioSpec& scenario);

// Exact detection: selected == truth. Inclusive detection: truth ⊆ selected.
struct DetectionFlags {
    bool exact = false;
    bool inclusive = false;
};
DetectionFlags detection_flags(const std::set<std::uint8_t>& selected,
                               const std::set<std::uint8_t>& truth);

// One replication's audit record.
struct ReplicationRecord {
    int replication = 0;
    std::uint64_t seed = 0;
    TrialDecision decision = TrialDecision::NoEffect;
    bool stopped_early = false;
    bool aborted = false;
    int n_enrolled = 0;
    double accuracy = 0.0;
    bool exact_detection = false;
    bool inclusive_detection = false;
    std::vector<double> p_eff_history;
    std::set<std::uint8_t> selected_variables;
};

struct OperatingCharacteristics {
    double efficacy_rate = 0.0; // power, or the false-positive rate when gamma == 0
    double accuracy = 0.0;
    double edr = 0.0;
    double idr = 0.0;
    double expected_n = 0.0;
    int replications = 0; // completed replications behind the averages
    int flagged = 0;      // starved-enrichment replications, excluded above
};

struct StudyResult {
    OperatingCharacteristics summary;
    std::vector<ReplicationRecord> records; // completed and flagged alike
};

// Replicated trial study. Replication r runs on seed mix_seed(base_seed, 1+r)
// and the external cohort on mix_seed(base_seed, 0), so results do not depend
// on how replications are scheduled.
StudyResult run_study(const TrialConfig& config, const ScenarioSpec& scenario, int replications,
                      std::uint64_t base_seed);

} // namespace aet
