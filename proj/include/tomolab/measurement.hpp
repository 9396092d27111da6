#pragma once

#include <cstdint>
#include <vector>

#include "tomolab/linalg.hpp"
#include "tomolab/rng.hpp"

namespace tomolab {

enum class OutcomeKind { Vector, Bottom };

// One measurement result: either a unit vector from a rank-1 element, or the
// Bottom marker for the complement element of a projected measurement.
// subspace_rank records the rank of the subspace measured against (the full
// dimension for the plain spherical measurement).
struct MeasurementOutcome {
    OutcomeKind kind;
    Vector vector;
    int subspace_rank = 0;
};

struct Transcript {
    std::vector<MeasurementOutcome> outcomes;

    std::size_t size() const { return outcomes.size(); }
};

// Samples outcomes of the continuous spherical measurement {d |v><v| dv}.
// The outcome law has density d <v|rho|v> against Haar measure on the unit
// sphere. Sampling is exact and rejection-free:
//
//   1. eigendecompose rho = sum_i lambda_i |u_i><u_i| (once, in the ctor),
//   2. pick a component i with probability lambda_i,
//   3. draw the overlap s = |<u_i|v>|^2 from Beta(2, d-1), the size-biased
//      version of the Haar overlap law Beta(1, d-1),
//   4. give the overlap a uniform phase and fill the orthogonal complement
//      of u_i with a Haar direction carrying the remaining mass 1 - s.
//
// Mixing over i with weights lambda_i recovers the density d <v|rho|v>.
// Validated in tests against an independent rejection sampler with envelope
// d * lambda_max.
class UniformPovmSampler {
public:
    explicit UniformPovmSampler(const DensityMatrix& rho);

    int dim() const { return static_cast<int>(basis_.rows()); }
    Vector sample(RngStream& rng) const;

private:
    Matrix basis_;          // eigenvectors of rho, columns
    std::vector<double> cdf_;  // cumulative eigenvalue weights
};

// Samples the projected measurement {I - P} union {r |v><v| dv over span(P)}
// where P is the projector of `basis` and r its rank. Factorizes exactly:
// Bottom with probability 1 - tr(P rho P), otherwise a spherical-measurement
// draw from the compressed state B^dag rho B / tr(P rho P) mapped back by B.
class ProjectedPovmSampler {
public:
    ProjectedPovmSampler(const DensityMatrix& rho, const SubspaceBasis& basis);

    double alpha() const { return alpha_; }  // tr(P rho P)
    MeasurementOutcome sample(RngStream& rng) const;

private:
    Matrix columns_;
    double alpha_;
    int rank_;
    // Present only when alpha is nonnegligible.
    std::vector<UniformPovmSampler> compressed_;
};

MeasurementOutcome sample_uniform_povm(const DensityMatrix& rho, RngStream& rng);
MeasurementOutcome sample_projected_povm(const DensityMatrix& rho, const SubspaceBasis& basis,
                                         RngStream& rng);

struct MomentCheckResult {
    double estimate;
    double std_error;
};

// Monte Carlo estimate of E[(d+1)^k |<u|v>|^{2k}] over spherical-measurement
// outcomes v of rho. Requires 1 <= k <= 8 and samples >= 1000.
MomentCheckResult moment_check(int k, const DensityMatrix& rho, const Vector& u,
                               std::int64_t samples, RngStream& rng);

// Closed-form moment references. For v measured on the pure state |u><u|:
//   E[(d+1)^k |<u|v>|^{2k}] = (d+1)^k d (k+1)! (d-1)! / (k+d)!
// and for v measured on I/d (plain Haar outcome):
//   E[(d+1)^k |<u|v>|^{2k}] = (d+1)^k k! (d-1)! / (d-1+k)!.
double exact_moment_pure(int d, int k);
double exact_moment_mixed(int d, int k);

}  // namespace tomolab
