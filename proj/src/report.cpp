#include "aet/report.hpp"

#include "aet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <utility>

namespace aet {

using Json = nlohmann::ordered_json;

SurfaceSummary surface_summary(const PosteriorFit& fit, std::vector<BioVec> points,
                               double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("surface_summary: alpha must lie in (0, 1)");
    const int n = static_cast<int>(points.size());
    const int draws = fit.n_draws();
    SurfaceSummary s;
    s.points = std::move(points);
    s.mean.resize(n);
    s.lo.resize(n);
    s.hi.resize(n);
    s.prob_positive.resize(n);
    if (n == 0) return s;

    Eigen::MatrixXd gamma;
    fit.gamma_block(s.points, 0, draws, gamma);
    std::vector<double> row(static_cast<std::size_t>(draws));
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < draws; ++d) row[static_cast<std::size_t>(d)] = gamma(i, d);
        std::sort(row.begin(), row.end());
        s.mean[i] = gamma.row(i).mean();
        s.lo[i] = empirical_quantile(row, alpha / 2.0);
        s.hi[i] = empirical_quantile(row, 1.0 - alpha / 2.0);
        s.prob_positive[i] =
            static_cast<double>(std::lower_bound(row.begin(), row.end(), 0.0) - row.begin());
        s.prob_positive[i] = 1.0 - s.prob_positive[i] / draws;
    }
    return s;
}

CrossingInterval band_crossing(const SurfaceSummary& curve, int axis) {
    CrossingInterval interval;
    for (int i = 0; i < curve.hi.size(); ++i) {
        if (curve.hi[i] > 0.0) {
            interval.lo = curve.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)];
            break;
        }
    }
    for (int i = 0; i < curve.lo.size(); ++i) {
        if (curve.lo[i] > 0.0) {
            interval.hi = curve.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)];
            break;
        }
    }
    return interval;
}

namespace {

double nan_min(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
    return std::min(a, b);
}

double nan_max(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
    return std::max(a, b);
}

} // namespace

IllustrationResult run_illustration(std::uint64_t seed) {
    ScenarioSpec scenario = ScenarioSpec::by_id("4");
    scenario.noise_sd = 5.0;

    RandomStream rng(seed);
    const std::vector<PatientRecord> patients = generate_patients(500, scenario, nullptr, rng);
    const Dataset data = Dataset::from_records(patients, scenario.dim);

    const PriorSpec prior;
    SamplerConfig sampler; // reporting strength: 2000 / 5000 / 5 / 4
    // Model averaging, so terms the data do not support are pruned from the
    // fitted surface: the display levels of the second biomarker then probe
    // whether spurious structure leaks into the effect estimate.
    sampler.mode = SamplerMode::FKBMA;
    auto fit = std::make_shared<SplineFit>(SplineFit::fit(data, prior, sampler, rng));

    IllustrationResult r;
    r.fit = fit;
    for (double x = 10.0; x <= 90.0 + 1e-9; x += 0.5) r.hb_grid.push_back(x);
    for (std::size_t level = 0; level < r.dhr_levels.size(); ++level) {
        std::vector<BioVec> pts;
        pts.reserve(r.hb_grid.size());
        for (const double x : r.hb_grid) pts.push_back({x, r.dhr_levels[level], 0.0});
        r.curves[level] = surface_summary(*fit, std::move(pts));
        r.crossing[level] = band_crossing(r.curves[level], 0);
    }
    r.crossing_union.lo = nan_min(r.crossing[0].lo, r.crossing[1].lo);
    r.crossing_union.hi = nan_max(r.crossing[0].hi, r.crossing[1].hi);
    r.max_curve_gap = (r.curves[0].mean - r.curves[1].mean).cwiseAbs().maxCoeff();

    r.trace_patterns = {BioVec{20.0, 5.0, 0.0}, BioVec{20.0, 15.0, 0.0}, BioVec{80.0, 5.0, 0.0},
                        BioVec{80.0, 15.0, 0.0}};
    for (std::size_t i = 0; i < r.trace_patterns.size(); ++i)
        r.rhat[i] = split_rhat(trace_series(*fit, r.trace_patterns[i]));
    r.traces = trace_rows(*fit, r.trace_patterns);
    return r;
}

void write_curves_csv(const std::filesystem::path& file, const IllustrationResult& example) {
    CsvWriter csv(file, {"hb", "dhr", "mean", "lo", "hi", "prob_positive"});
    for (std::size_t level = 0; level < example.dhr_levels.size(); ++level) {
        const SurfaceSummary& curve = example.curves[level];
        for (int i = 0; i < curve.mean.size(); ++i) {
            csv.row({CsvWriter::cell(curve.points[static_cast<std::size_t>(i)][0]),
                     CsvWriter::cell(example.dhr_levels[level]), CsvWriter::cell(curve.mean[i]),
                     CsvWriter::cell(curve.lo[i]), CsvWriter::cell(curve.hi[i]),
                     CsvWriter::cell(curve.prob_positive[i])});
        }
    }
}

void write_traces_csv(const std::filesystem::path& file, std::span<const BioVec> patterns,
                      std::span<const TraceRow> traces) {
    CsvWriter csv(file, {"pattern", "hb", "dhr", "chain", "iteration", "gamma"});
    for (const TraceRow& t : traces) {
        const BioVec& x = patterns[static_cast<std::size_t>(t.pattern)];
        csv.row({CsvWriter::cell(t.pattern), CsvWriter::cell(x[0]), CsvWriter::cell(x[1]),
                 CsvWriter::cell(t.chain), CsvWriter::cell(t.iteration),
                 CsvWriter::cell(t.gamma)});
    }
}

void write_illustration_json(const std::filesystem::path& file,
                             const IllustrationResult& example) {
    Json j;
    j["dhr_levels"] = example.dhr_levels;
    Json crossings = Json::array();
    for (std::size_t level = 0; level < example.dhr_levels.size(); ++level) {
        Json c;
        c["dhr"] = example.dhr_levels[level];
        c["lo"] = example.crossing[level].lo;
        c["hi"] = example.crossing[level].hi;
        crossings.push_back(std::move(c));
    }
    j["crossing"] = std::move(crossings);
    j["crossing_union"]["lo"] = example.crossing_union.lo;
    j["crossing_union"]["hi"] = example.crossing_union.hi;
    j["max_curve_gap"] = example.max_curve_gap;
    Json rhats = Json::array();
    for (std::size_t i = 0; i < example.trace_patterns.size(); ++i) {
        Json r;
        r["hb"] = example.trace_patterns[i][0];
        r["dhr"] = example.trace_patterns[i][1];
        r["value"] = example.rhat[i];
        rhats.push_back(std::move(r));
    }
    j["rhat"] = std::move(rhats);

    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

void write_surface_csv(const std::filesystem::path& file, const SurfaceSummary& surface) {
    CsvWriter csv(file, {"hb", "dhr", "vcb", "mean", "lo", "hi", "prob_positive"});
    for (int i = 0; i < surface.mean.size(); ++i) {
        const BioVec& x = surface.points[static_cast<std::size_t>(i)];
        csv.row({CsvWriter::cell(x[0]), CsvWriter::cell(x[1]), CsvWriter::cell(x[2]),
                 CsvWriter::cell(surface.mean[i]), CsvWriter::cell(surface.lo[i]),
                 CsvWriter::cell(surface.hi[i]), CsvWriter::cell(surface.prob_positive[i])});
    }
}

std::vector<BioVec> surface_grid(int dim) {
    const double vcb = dim >= 3 ? truncated_normal_mean(vcb_law()) : 0.0;
    std::vector<BioVec> grid;
    for (double hb = 0.0; hb <= 265.0 + 1e-9; hb += 5.0)
        for (double dhr = 2.0; dhr <= 20.0 + 1e-9; dhr += 2.0) grid.push_back({hb, dhr, vcb});
    return grid;
}

} // namespace aet
