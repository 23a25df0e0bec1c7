#pragma once

#include "aet/patient.hpp"
#include "aet/spline_basis.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aet {

// Spline terms in canonical order: single biomarkers, then pairwise products,
// then the triple product. Each term is identified by the bit mask of the
// biomarkers entering its product covariate.
//   dim 2 -> {x1, x2, x1*x2}
//   dim 3 -> {x1, x2, x3, x1*x2, x1*x3, x2*x3, x1*x2*x3}
std::vector<std::uint8_t> canonical_terms(int dim);

// canonical_terms is a bijection dim -> term count (1->1, 2->3, 3->7).
int dim_for_term_count(std::size_t n_terms);

// Product of the biomarker coordinates selected by the term's bit mask.
double term_value(const BioVec& x, std::uint8_t term_mask);

// Covariate column for a term over a whole dataset.
Eigen::VectorXd term_column(const Dataset& data, std::uint8_t term_mask);

// Per-term state: a prognostic spline h and a predictive (treatment-
// interaction) spline f, each with its own active-knot set over the shared
// candidate grid of the term's covariate.
struct TermState {
    bool h_active = false;
    bool f_active = false;
    KnotState h_knots{};
    KnotState f_knots{};
    bool operator==(const TermState&) const = default;
};

struct ModelStructure {
    std::vector<TermState> terms; // aligned to canonical_terms(dim)

    static ModelStructure empty(int n_terms) { return {std::vector<TermState>(n_terms)}; }
    // All h and f terms active, no knots.
    static ModelStructure saturated(int n_terms);

    // Number of active spline terms m (h and f counted separately).
    int active_count() const;

    // A predictive term requires its prognostic partner: f_j => h_j.
    bool hierarchy_ok() const;

    bool operator==(const ModelStructure&) const = default;
};

// Dense order-preserving identifier for grouping posterior draws that share a
// structure. 16 bits per term-part is ample for <= 31 candidate knots.
struct StructureKey {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
    auto operator<=>(const StructureKey&) const = default;
};
StructureKey structure_key(const ModelStructure& s);

// Column layout of the regression design implied by a structure:
// [intercept][h blocks in term order][treatment][f blocks in term order].
struct ColumnLayout {
    std::vector<int> h_offset; // -1 when inactive
    std::vector<int> f_offset;
    int treatment_col = 0;
    int total = 0;
};
ColumnLayout column_layout(const ModelStructure& s);

Eigen::MatrixXd design_matrix(const Dataset& data, const ModelStructure& s,
                              std::span<const CandidateKnots> knots);

// Treatment-effect surface gamma(x) = phi + sum of active f splines at x.
double gamma_at(const BioVec& x, const ModelStructure& s, std::span<const CandidateKnots> knots,
                const Eigen::VectorXd& beta);

} // namespace aet
