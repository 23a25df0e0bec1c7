#pragma once

#include "aet/posterior_fit.hpp"
#include "aet/rjmcmc.hpp"

#include <memory>
#include <set>
#include <span>
#include <vector>

namespace aet {

enum class Method { Cutoff, FK, FKBMA };

struct TrialConfig {
    int n_max = 500;
    std::vector<int> interim_at{300};
    double b1 = 0.98;            // efficacy stop: p_eff >= b1
    double b2 = 0.8;             // futility stop: p_eff <= 1 - b2
    double alpha = 0.05;         // subspace membership level
    double prevalence_lo = 0.05; // widen outside the open interval
    double prevalence_hi = 0.95;
    Method method = Method::FK;
    double randomization = 0.5;
    // Alternate futility reading (p_eff < b2 instead of <= 1 - b2).
    bool futility_at_b2 = false;
    PriorSpec prior{};
    SamplerConfig sampler{};
    CutoffSpec cutoff{};
    void validate() const; // throws ConfigError
};

// Model-based effective subspace: x is a member when the simultaneous
// (1 - alpha) lower credible bound of gamma is positive at x. The bound's
// multiplier is calibrated once, on the reference sample, from the joint
// posterior draws (largest standardized downward excursion), so membership
// carries a multiplicity adjustment over the whole biomarker space instead
// of a pointwise tail probability; new points reuse the frozen multiplier.
// When the member fraction of the reference sample falls outside the
// prevalence bounds, the subspace widens to the whole population.
struct SubspaceEstimate {
    std::shared_ptr<const PosteriorFit> fit;
    double alpha = 0.05;
    double threshold = 0.0; // simultaneous-band multiplier fixed at estimation
    double prevalence = 0.0;
    bool widened = false;
    std::vector<char> reference_member; // aligned with the reference points

    bool contains(const BioVec& x) const;
    std::vector<char> members(std::span<const BioVec> points) const;
};

SubspaceEstimate effective_subspace(std::shared_ptr<const PosteriorFit> fit,
                                    std::span<const BioVec> reference, const TrialConfig& config);

// Fraction of draws whose mean gamma over the member reference points is
// positive (all reference points when widened).
double posterior_efficacy_prob(const SubspaceEstimate& subspace,
                               std::span<const BioVec> reference);

enum class InterimDecision { Continue, StopEfficacy, StopFutility };
InterimDecision interim_decision(double p_eff, const TrialConfig& config);

enum class TrialDecision { Efficacy, Futility, NoEffect };

struct TrialResult {
    TrialDecision decision = TrialDecision::NoEffect;
    bool stopped_early = false;
    bool aborted = false; // enrichment starved; only n_enrolled is meaningful
    int n_enrolled = 0;
    SubspaceEstimate subspace; // from the fit that fixed the decision
    std::set<std::uint8_t> selected_variables; // FK-BMA: pruned predictive terms, by term mask
    std::vector<double> p_eff_history; // one entry per completed analysis
};

// Supplies patients for one replication. `subspace` is the enrichment filter
// (null for unrestricted accrual, including the widened case). May return
// fewer than `n` records only when the filter's acceptance rate collapses
// below 1e-3 over a 10,000-candidate window.
class PatientSource {
public:
    virtual ~PatientSource() = default;
    virtual int dim() const = 0;
    virtual std::vector<PatientRecord> enroll(int n, const SubspaceEstimate* subspace,
                                              RandomStream& rng) = 0;
};

// Fits the configured model to the current data (consumes rng).
std::shared_ptr<const PosteriorFit> fit_model(const TrialConfig& config, const Dataset& data,
                                              RandomStream& rng);

// Full adaptive trial: enroll to each interim, fit, decide, enrich on
// Continue; at n_max the final call is Efficacy iff p_eff >= b1 else NoEffect.
TrialResult run_trial(const TrialConfig& config, PatientSource& source, RandomStream& rng);

// Post-trial rule: treat only under an efficacy decision, and only inside the
// final subspace (everyone when widened).
bool recommend(const BioVec& x, const TrialResult& result);
std::vector<char> recommend_all(std::span<const BioVec> points, const TrialResult& result);

} // namespace aet
