#pragma once

#include "aet/model_structure.hpp"
#include "aet/posterior_fit.hpp"
#include "aet/regression_core.hpp"

#include <map>
#include <memory>
#include <set>
#include <vector>

namespace aet {

enum class SamplerMode { FK, FKBMA };

struct SamplerConfig {
    int n_samples = 2000;
    int burn_in = 5000;
    int thin = 5;
    int chains = 4;
    double proposal_variance = 0.1;
    SamplerMode mode = SamplerMode::FK;
    // Collapsed sampler (coefficients integrated out) is the default; the
    // non-collapsed variant keeps a persistent coefficient state updated by a
    // random walk with the configured proposal variance.
    bool collapsed = true;
    // Disabling structure moves freezes knots/terms; used to cross-check the
    // sampler against the closed-form conjugate posterior.
    bool structure_moves = true;
    int knots_per_term = 5;
    void validate() const; // throws ConfigError
};

struct SplineDraw {
    ModelStructure structure;
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
    int chain = 0;
};

struct PosteriorDraws {
    std::vector<SplineDraw> draws; // chain-major, retention order within chain
    std::vector<CandidateKnots> knots;
    int dim = 2;
    int chains = 1;
    SamplerMode mode = SamplerMode::FK;
    int per_chain() const { return chains > 0 ? static_cast<int>(draws.size()) / chains : 0; }
};

// Collapsed-model computations shared by the sampler and its tests: log
// marginal likelihoods with cached basis/Gram blocks, structure priors, and
// the move acceptance ratios. One kernel serves all chains of one fit.
class SamplerKernel {
public:
    SamplerKernel(const Dataset& data, std::vector<CandidateKnots> knots, const PriorSpec& prior,
                  SamplerMode mode);

    int n_terms() const { return static_cast<int>(knots_.size()); }
    int dim() const { return dim_; }
    const std::vector<CandidateKnots>& knots() const { return knots_; }
    SamplerMode mode() const { return mode_; }

    // Log marginal likelihood of y under a structure (beta, sigma2 integrated
    // out); memoized per structure.
    double log_marginal(const ModelStructure& s);

    // Log prior of the structure: per-part knot priors, plus the term-count
    // prior (normalized over hierarchy-feasible activity patterns) in
    // FK-BMA mode.
    double structure_log_prior(const ModelStructure& s) const;

    // Deterministic part of the Metropolis-Hastings log acceptance ratio for
    // an explicit knot move on one spline part (birth/death/relocate inferred
    // from the mask change). Fills *to_out with the destination structure.
    double knot_move_log_ratio(const ModelStructure& from, int term, bool f_part, KnotState to,
                               ModelStructure* to_out);

    // Same for a term-activity move: adds the part if inactive (using
    // mask_for_add as its knot state), removes it otherwise.
    double term_move_log_ratio(const ModelStructure& from, int term, bool f_part,
                               KnotState mask_for_add, ModelStructure* to_out);

    // One random move of each family; returns whether the proposal was
    // accepted (false when no move is feasible).
    bool try_knot_move(ModelStructure& s, RandomStream& rng);
    bool try_term_move(ModelStructure& s, RandomStream& rng);

    // Exact draw from the conjugate conditional (beta, sigma2) | structure.
    CoefficientState draw_coefficients(const ModelStructure& s, RandomStream& rng);

    // Non-collapsed updates: random-walk Metropolis on beta and the
    // inverse-gamma Gibbs draw for sigma2.
    bool random_walk_update(const ModelStructure& s, CoefficientState& coef, double proposal_sd,
                            RandomStream& rng);
    void gibbs_sigma2(const ModelStructure& s, CoefficientState& coef, RandomStream& rng);

    // Move-menu introspection (sizes drive the proposal probabilities).
    std::vector<std::pair<int, bool>> movable_parts(const ModelStructure& s) const;
    std::vector<std::tuple<int, bool, bool>> term_menu(const ModelStructure& s) const; // (term, f, add)

private:
    struct Block { // cached basis columns of one (term, knot-mask) pair
        Eigen::MatrixXd b;    // n x cols
        Eigen::VectorXd bty;  // B^T y
        Eigen::VectorXd btty; // B^T (T o y)
    };
    struct Eval { // conjugate posterior factorization for one structure
        Eigen::MatrixXd a; // X^T X + I/v, lower triangle valid
        Eigen::LLT<Eigen::MatrixXd> llt;
        Eigen::VectorXd xty;
        Eigen::VectorXd mean;
        double shape = 0.0;
        double scale = 0.0;
        double log_marginal = 0.0;
        int p = 0;
    };

    const Block& block(int term, std::uint32_t mask);
    const Eigen::MatrixXd& gram(std::uint32_t key_i, bool w_i, std::uint32_t key_j, bool w_j);
    void evaluate(const ModelStructure& s, Eval& out);
    double knot_log_prior(const KnotState& state, int candidates) const;
    double term_count_log_prior(int m) const;

    Eigen::VectorXd y_;
    Eigen::VectorXd treat_;
    Eigen::MatrixXd covariates_; // n x n_terms, term product columns
    std::vector<CandidateKnots> knots_;
    PriorSpec prior_;
    SamplerMode mode_;
    int dim_ = 2;
    int n_ = 0;
    double yty_ = 0.0;
    std::vector<double> feasible_count_log_; // log N(m) over feasible activity patterns

    std::map<std::uint32_t, Block> blocks_;
    std::map<std::uint64_t, Eigen::MatrixXd> grams_;
    std::map<StructureKey, double> log_marginal_cache_;
};

// Runs `config.chains` independent chains and merges retained draws.
// Consumes one value from rng; chain streams are derived from it.
PosteriorDraws run_sampler(const Dataset& data, std::vector<CandidateKnots> knots,
                           const PriorSpec& prior, const SamplerConfig& config, RandomStream& rng);

// Posterior fit backed by rjMCMC draws; gamma evaluation groups draws by
// structure so each group is a dense matrix product.
class SplineFit : public PosteriorFit {
public:
    // Builds candidate knots from the data (knots_per_term quantiles of each
    // term covariate) and runs the sampler.
    static SplineFit fit(const Dataset& data, const PriorSpec& prior, const SamplerConfig& config,
                         RandomStream& rng);
    static SplineFit from_draws(PosteriorDraws draws);

    int n_draws() const override { return static_cast<int>(data_.draws.size()); }
    int n_chains() const override { return data_.chains; }
    void gamma_block(std::span<const BioVec> points, int first, int last,
                     Eigen::MatrixXd& out) const override;
    std::map<std::uint8_t, double> inclusion_probabilities() const override;

    const PosteriorDraws& draws() const { return data_; }

private:
    struct Group {
        ModelStructure structure;
        ColumnLayout layout;
        std::vector<int> draw_ids; // ascending
    };
    PosteriorDraws data_;
    std::vector<Group> groups_;
};

// Predictive variables retained after pruning low-inclusion terms (>= rule).
std::set<std::uint8_t> prune(const std::map<std::uint8_t, double>& inclusion,
                             double threshold = 0.10);

// points x n_draws matrix of gamma draws (assembled from bounded blocks).
Eigen::MatrixXd gamma_surface(const PosteriorFit& fit, std::span<const BioVec> points);

} // namespace aet
