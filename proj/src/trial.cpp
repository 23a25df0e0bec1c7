#include "aet/trial.hpp"

#include "aet/error.hpp"

#include <algorithm>
#include <cassert>

namespace aet {

void TrialConfig::validate() const {
    if (n_max < 1) throw ConfigError("trial.n_max must be >= 1");
    if (interim_at.empty()) throw ConfigError("trial.interim_at must list at least one analysis");
    int prev = 0;
    for (const int t : interim_at) {
        if (t <= prev) throw ConfigError("trial.interim_at must be strictly increasing and > 0");
        if (t >= n_max) throw ConfigError("trial.interim_at entries must be < n_max");
        prev = t;
    }
    if (!(b1 > 0.0 && b1 < 1.0)) throw ConfigError("trial.b1 must be in (0,1)");
    if (!(b2 > 0.0 && b2 < 1.0)) throw ConfigError("trial.b2 must be in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("trial.alpha must be in (0,1)");
    if (!(prevalence_lo > 0.0 && prevalence_hi < 1.0 && prevalence_lo < prevalence_hi))
        throw ConfigError("trial.prevalence bounds must satisfy 0 < lo < hi < 1");
    if (!(randomization > 0.0 && randomization < 1.0))
        throw ConfigError("trial.randomization must be in (0,1)");
    prior.validate();
    sampler.validate();
}

bool SubspaceEstimate::contains(const BioVec& x) const {
    if (widened) return true;
    return members(std::span<const BioVec>(&x, 1))[0] != 0;
}

std::vector<char> SubspaceEstimate::members(std::span<const BioVec> points) const {
    if (widened) return std::vector<char>(points.size(), 1);
    assert(fit != nullptr);
    const PosteriorFit::GammaMoments m = fit->gamma_moments(points);
    std::vector<char> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Eigen::Index j = static_cast<Eigen::Index>(i);
        out[i] = m.mean[j] - threshold * m.sd[j] > 0.0 ? 1 : 0;
    }
    return out;
}

SubspaceEstimate effective_subspace(std::shared_ptr<const PosteriorFit> fit,
                                    std::span<const BioVec> reference,
                                    const TrialConfig& config) {
    if (reference.empty()) throw ConfigError("effective subspace needs a nonempty reference");
    SubspaceEstimate sub;
    sub.fit = std::move(fit);
    sub.alpha = config.alpha;
    const PosteriorFit::GammaBand band = sub.fit->simultaneous_band(reference, config.alpha);
    sub.threshold = band.multiplier;
    sub.reference_member.resize(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const Eigen::Index j = static_cast<Eigen::Index>(i);
        sub.reference_member[i] =
            band.moments.mean[j] - sub.threshold * band.moments.sd[j] > 0.0 ? 1 : 0;
    }
    int hits = 0;
    for (const char m : sub.reference_member) hits += m;
    sub.prevalence = static_cast<double>(hits) / static_cast<double>(reference.size());
    if (!(sub.prevalence > config.prevalence_lo && sub.prevalence < config.prevalence_hi)) {
        sub.widened = true;
        std::fill(sub.reference_member.begin(), sub.reference_member.end(), 1);
    }
    return sub;
}

double posterior_efficacy_prob(const SubspaceEstimate& subspace,
                               std::span<const BioVec> reference) {
    assert(subspace.reference_member.size() == reference.size());
    std::vector<BioVec> members;
    members.reserve(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i)
        if (subspace.widened || subspace.reference_member[i]) members.push_back(reference[i]);
    assert(!members.empty()); // widening guarantees a nonempty analysis set
    return subspace.fit->prob_positive_mean(members);
}

InterimDecision interim_decision(double p_eff, const TrialConfig& config) {
    if (p_eff >= config.b1) return InterimDecision::StopEfficacy;
    const bool futile = config.futility_at_b2 ? p_eff < config.b2 : p_eff <= 1.0 - config.b2;
    return futile ? InterimDecision::StopFutility : InterimDecision::Continue;
}

std::shared_ptr<const PosteriorFit> fit_model(const TrialConfig& config, const Dataset& data,
                                              RandomStream& rng) {
    if (config.method == Method::Cutoff) {
        const int draws = config.sampler.chains * config.sampler.n_samples;
        return std::make_shared<CutoffFit>(
            CutoffFit::fit(data, config.cutoff, config.prior, draws, rng));
    }
    SamplerConfig sc = config.sampler;
    sc.mode = config.method == Method::FK ? SamplerMode::FK : SamplerMode::FKBMA;
    return std::make_shared<SplineFit>(SplineFit::fit(data, config.prior, sc, rng));
}

namespace {

std::set<std::uint8_t> selected_variables(const PosteriorFit& fit) {
    // Each surviving predictive term counts as its own selected variable: a
    // product term is a distinct biomarker, not a stand-in for its factors.
    return prune(fit.inclusion_probabilities());
}

} // namespace

TrialResult run_trial(const TrialConfig& config, PatientSource& source, RandomStream& rng) {
    config.validate();
    TrialResult result;
    std::vector<PatientRecord> enrolled;
    std::vector<BioVec> reference;
    SubspaceEstimate subspace;
    bool enriching = false;

    std::vector<int> stages = config.interim_at;
    stages.push_back(config.n_max);

    for (std::size_t stage = 0; stage < stages.size(); ++stage) {
        const int need = stages[stage] - static_cast<int>(enrolled.size());
        const std::vector<PatientRecord> batch =
            source.enroll(need, enriching ? &subspace : nullptr, rng);
        for (const auto& p : batch) {
            enrolled.push_back(p);
            reference.push_back(p.x);
        }
        result.n_enrolled = static_cast<int>(enrolled.size());
        if (static_cast<int>(batch.size()) < need) {
            result.aborted = true; // enrichment starved; no decision possible
            return result;
        }

        const Dataset data = Dataset::from_records(enrolled, source.dim());
        std::shared_ptr<const PosteriorFit> fit = fit_model(config, data, rng);
        subspace = effective_subspace(fit, reference, config);
        const double p_eff = posterior_efficacy_prob(subspace, reference);
        result.p_eff_history.push_back(p_eff);

        const bool final_stage = stage + 1 == stages.size();
        if (final_stage) {
            result.decision =
                p_eff >= config.b1 ? TrialDecision::Efficacy : TrialDecision::NoEffect;
        } else {
            switch (interim_decision(p_eff, config)) {
            case InterimDecision::StopEfficacy:
                result.decision = TrialDecision::Efficacy;
                result.stopped_early = true;
                break;
            case InterimDecision::StopFutility:
                result.decision = TrialDecision::Futility;
                result.stopped_early = true;
                break;
            case InterimDecision::Continue:
                enriching = !subspace.widened;
                continue;
            }
        }

        result.subspace = subspace;
        if (config.method == Method::FKBMA) result.selected_variables = selected_variables(*fit);
        return result;
    }
    return result; // unreachable: the final stage always decides
}

bool recommend(const BioVec& x, const TrialResult& result) {
    if (result.decision != TrialDecision::Efficacy) return false;
    return result.subspace.widened || result.subspace.contains(x);
}

std::vector<char> recommend_all(std::span<const BioVec> points, const TrialResult& result) {
    if (result.decision != TrialDecision::Efficacy) return std::vector<char>(points.size(), 0);
    return result.subspace.members(points);
}

} // namespace aet
