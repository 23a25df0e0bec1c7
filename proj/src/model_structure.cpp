#include "aet/model_structure.hpp"

#include "aet/error.hpp"

#include <bit>
#include <cassert>

namespace aet {

Dataset Dataset::from_records(const std::vector<PatientRecord>& records, int dim) {
    Dataset d;
    const auto n = static_cast<Eigen::Index>(records.size());
    d.y.resize(n);
    d.treat.resize(n);
    d.x.resize(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        d.y[i] = r.y;
        d.treat[i] = static_cast<double>(r.treated);
        for (int j = 0; j < dim; ++j) d.x(i, j) = r.x[static_cast<std::size_t>(j)];
    }
    return d;
}

std::vector<BioVec> Dataset::points() const {
    std::vector<BioVec> pts(static_cast<std::size_t>(n()), BioVec{0.0, 0.0, 0.0});
    for (int i = 0; i < n(); ++i)
        for (int j = 0; j < dim(); ++j)
            pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
    return pts;
}

std::vector<std::uint8_t> canonical_terms(int dim) {
    if (dim < 1 || dim > 3) throw ConfigError("canonical_terms: dim must be 1, 2, or 3");
    std::vector<std::uint8_t> terms;
    for (int width = 1; width <= dim; ++width)
        for (std::uint8_t m = 1; m < (1u << dim); ++m)
            if (std::popcount(m) == width) terms.push_back(m);
    return terms;
}

int dim_for_term_count(std::size_t n_terms) {
    switch (n_terms) {
    case 1: return 1;
    case 3: return 2;
    case 7: return 3;
    default: throw ConfigError("dim_for_term_count: term list size must be 1, 3, or 7");
    }
}

double term_value(const BioVec& x, std::uint8_t term_mask) {
    double v = 1.0;
    for (int j = 0; j < 3; ++j)
        if ((term_mask >> j) & 1u) v *= x[static_cast<std::size_t>(j)];
    return v;
}

Eigen::VectorXd term_column(const Dataset& data, std::uint8_t term_mask) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(data.n());
    for (int j = 0; j < data.dim(); ++j)
        if ((term_mask >> j) & 1u) col.array() *= data.x.col(j).array();
    return col;
}

ModelStructure ModelStructure::saturated(int n_terms) {
    ModelStructure s = empty(n_terms);
    for (auto& t : s.terms) t.h_active = t.f_active = true;
    return s;
}

int ModelStructure::active_count() const {
    int m = 0;
    for (const auto& t : terms) m += static_cast<int>(t.h_active) + static_cast<int>(t.f_active);
    return m;
}

bool ModelStructure::hierarchy_ok() const {
    for (const auto& t : terms)
        if (t.f_active && !t.h_active) return false;
    return true;
}

StructureKey structure_key(const ModelStructure& s) {
    assert(s.terms.size() <= 8);
    StructureKey k;
    std::uint64_t* words = &k.a;
    int slot = 0;
    for (const auto& t : s.terms) {
        // 32 bits per term: [h_active|f_active|h mask (15)|f mask (15)]
        const std::uint64_t packed = (static_cast<std::uint64_t>(t.h_active) << 31) |
                                     (static_cast<std::uint64_t>(t.f_active) << 30) |
                                     (static_cast<std::uint64_t>(t.h_knots.mask & 0x7FFFu) << 15) |
                                     static_cast<std::uint64_t>(t.f_knots.mask & 0x7FFFu);
        words[slot / 2] |= packed << (32 * (slot % 2));
        ++slot;
    }
    return k;
}

ColumnLayout column_layout(const ModelStructure& s) {
    ColumnLayout lay;
    lay.h_offset.assign(s.terms.size(), -1);
    lay.f_offset.assign(s.terms.size(), -1);
    int col = 1; // intercept at 0
    for (std::size_t t = 0; t < s.terms.size(); ++t)
        if (s.terms[t].h_active) {
            lay.h_offset[t] = col;
            col += basis_columns(s.terms[t].h_knots);
        }
    lay.treatment_col = col++;
    for (std::size_t t = 0; t < s.terms.size(); ++t)
        if (s.terms[t].f_active) {
            lay.f_offset[t] = col;
            col += basis_columns(s.terms[t].f_knots);
        }
    lay.total = col;
    return lay;
}

Eigen::MatrixXd design_matrix(const Dataset& data, const ModelStructure& s,
                              std::span<const CandidateKnots> knots) {
    const ColumnLayout lay = column_layout(s);
    Eigen::MatrixXd X(data.n(), lay.total);
    X.col(0).setOnes();
    X.col(lay.treatment_col) = data.treat;
    const std::vector<std::uint8_t> terms = canonical_terms(data.dim());
    for (std::size_t t = 0; t < s.terms.size(); ++t) {
        if (!s.terms[t].h_active && !s.terms[t].f_active) continue;
        const Eigen::VectorXd cov = term_column(data, terms[t]);
        const std::span<const double> xs(cov.data(), static_cast<std::size_t>(cov.size()));
        if (s.terms[t].h_active) {
            const Eigen::MatrixXd B = basis_matrix(xs, knots[t], s.terms[t].h_knots);
            X.middleCols(lay.h_offset[t], B.cols()) = B;
        }
        if (s.terms[t].f_active) {
            const Eigen::MatrixXd B = basis_matrix(xs, knots[t], s.terms[t].f_knots);
            X.middleCols(lay.f_offset[t], B.cols()) = B.array().colwise() * data.treat.array();
        }
    }
    return X;
}

double gamma_at(const BioVec& x, const ModelStructure& s, std::span<const CandidateKnots> knots,
                const Eigen::VectorXd& beta) {
    const ColumnLayout lay = column_layout(s);
    assert(beta.size() == lay.total);
    double g = beta[lay.treatment_col];
    const std::vector<std::uint8_t> terms = canonical_terms(dim_for_term_count(s.terms.size()));
    double buf[33];
    for (std::size_t t = 0; t < s.terms.size(); ++t) {
        if (!s.terms[t].f_active) continue;
        const double v = term_value(x, terms[t]);
        basis_eval(v, knots[t], s.terms[t].f_knots, buf);
        const int cols = basis_columns(s.terms[t].f_knots);
        for (int c = 0; c < cols; ++c) g += beta[lay.f_offset[t] + c] * buf[c];
    }
    return g;
}

} // namespace aet
