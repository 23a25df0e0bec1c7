#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace aet {

// Biomarker coordinates; slot 2 is unused when only two biomarkers are active.
using BioVec = std::array<double, 3>;

// One enrolled (or candidate) patient. Outcome is stored as negative systolic
// blood pressure so that positive treatment effects are reductions.
struct PatientRecord {
    double y = 0.0;
    int treated = 0;
    BioVec x{0.0, 0.0, 0.0};
};

// Column view of a patient list used by the fitting code.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXd treat;
    Eigen::MatrixXd x; // n rows, dim columns

    int n() const { return static_cast<int>(y.size()); }
    int dim() const { return static_cast<int>(x.cols()); }

    static Dataset from_records(const std::vector<PatientRecord>& records, int dim);
    std::vector<BioVec> points() const;
};

} // namespace aet
