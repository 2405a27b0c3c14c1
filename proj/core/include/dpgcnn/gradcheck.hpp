#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpgcnn/tape.hpp"

namespace dpgcnn {

/// Scalar loss built on a fresh tape from the current parameter values.
using LossFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
    double step = 1e-6;
    /// Lower bound on the denominator of the relative error, so tensors whose
    /// true gradient vanishes are judged by absolute error.
    double floor = 1e-4;
};

/// Per parameter: ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
/// with central differences. Parameter values are restored afterwards.
std::vector<double> gradient_errors(const LossFn& loss, std::span<Parameter* const> params,
                                    GradCheckOptions options = {});

struct GradCheckResult {
    std::string name;
    std::size_t cases = 0;
    double max_rel_error = 0.0;
    double threshold = 0.0;
    bool passed() const noexcept { return max_rel_error < threshold; }
};

struct GradCheckReport {
    std::vector<GradCheckResult> results;
    bool passed() const;
    /// Results sorted by decreasing error.
    std::vector<GradCheckResult> worst(std::size_t count) const;
};

nlohmann::json to_json(const GradCheckReport& report);

/// The suites below retry a failing case once with step 1e-8 and keep the
/// smaller error, so a step that straddles a kink does not count as a fault.
///
/// Every differentiable op on `cases` random instances, threshold 1e-5. With
/// `inject_fault` a deliberately wrong op is included.
GradCheckReport gradcheck_ops(std::size_t cases, std::uint64_t seed, bool inject_fault = false);

/// GAT, dual, primal, polynomial and dense layers, threshold 1e-4.
GradCheckReport gradcheck_layers(std::size_t cases, std::uint64_t seed, bool inject_fault = false);

/// End-to-end vertex and link models on 10-vertex graphs, threshold 1e-4.
GradCheckReport gradcheck_model(std::size_t cases, std::uint64_t seed, bool inject_fault = false);

/// x^2 with a backward that returns 3x; exists to prove the harness fails.
Var faulty_square(Var x);

}  // namespace dpgcnn
