#pragma once

#include <cstdint>
#include <optional>

#include "tomolab/linalg.hpp"
#include "tomolab/measurement.hpp"

namespace tomolab {

// Denominator convention for the projected estimator: divide by all copies
// (Bottom outcomes contribute zero terms) or by the count of vector outcomes.
// TotalCopies matches the displayed averaging rule; VectorCount is kept for
// sensitivity studies.
enum class ProjectedDenominator { TotalCopies, VectorCount };

struct EstimatorReport {
    HermitianMatrix estimate;
    std::int64_t copies_used;
    int subspace_rank;
    std::int64_t bottom_count;
    std::optional<double> predicted_bound;
};

// Linear inversion estimate H_n = (1/n) sum_i ((d+1)|v_i><v_i| - I) over
// spherical-measurement outcomes. Unbiased for rho; trace 1 by construction;
// generally not PSD.
EstimatorReport h_n(const Transcript& outcomes, int d);

// Projected variant: averages ((r+1)|v_i><v_i| - P) over vector outcomes,
// with Bottom outcomes contributing zero. Unbiased for P rho P.
EstimatorReport h_n_projected(const Transcript& outcomes, const SubspaceBasis& basis,
                              ProjectedDenominator denom = ProjectedDenominator::TotalCopies);

// Theoretical operator-norm error level C * max(x, sqrt(x)) with
// x = (d + log(1/delta)) / n.
double predicted_error_bound(int d, std::int64_t n, double delta, double c);

// Projected refinement C * max(x, sqrt(alpha x)); alpha = tr(P rho P).
double predicted_projected_bound(double alpha, int d, std::int64_t n, double delta, double c);

}  // namespace tomolab
