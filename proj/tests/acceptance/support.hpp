#pragma once

#include "aet/io.hpp"
#include "aet/scenario.hpp"

#include <string>
#include <utility>
#include <vector>

namespace acc {

// One base seed pins every stochastic acceptance check; per-cell seeds are
// derived from it so results do not depend on execution order.
inline constexpr std::uint64_t kBaseSeed = 20260816ULL;

std::uint64_t cell_seed(const std::string& scenario, aet::Method method);

// Operating characteristics of one simulation cell, memoized on disk so
// criteria sharing a cell (and interrupted runs) do not recompute it.
struct CellSpec {
    std::string scenario;
    aet::Method method = aet::Method::FK;
    int replications = 200;
    double lambda_terms = 3.0;
};
aet::OperatingCharacteristics cell_oc(const CellSpec& spec);

// A criterion prints exactly one summary line and registers every sub-check
// with the test harness.
class Criterion {
public:
    Criterion(int id, std::string label) : id_(id), label_(std::move(label)) {}

    void check(bool pass, const std::string& detail);
    bool passed() const { return pass_; }
    void finish(); // prints the line and asserts each sub-check

private:
    int id_;
    std::string label_;
    bool pass_ = true;
    std::vector<std::pair<bool, std::string>> checks_;
};

std::string fmt(double value, int digits = 3);

} // namespace acc
