#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tomolab/linalg.hpp"
#include "tomolab/measurement.hpp"
#include "tomolab/rng.hpp"
#include "tomolab/states.hpp"

namespace tomolab {

// Documentation default for the neighborhood constant. Experiments override
// it to 10 so that epsilon <= sigma / C is satisfiable with a visible radius
// at sigma = 1/100.
inline const double kNeighborhoodProofConstant = std::exp(20.0);

// Sorted trace-zero eigenvalue vector: lambda_1 >= ... >= lambda_d, sum 0
// within 1e-12.
class EigenSimplexPoint {
public:
    explicit EigenSimplexPoint(RealVector values);

    int dim() const { return static_cast<int>(v_.size()); }
    const RealVector& values() const { return v_; }

private:
    RealVector v_;
};

// Isotropic neighborhood of a state: operator-norm cap C eps / d and
// trace-norm cap C eps around the center.
struct NeighborhoodParams {
    double epsilon;
    double c = kNeighborhoodProofConstant;

    double op_cap(int d) const { return c * epsilon / d; }
    double trace_cap() const { return c * epsilon; }
};

// Orthonormal basis (Frobenius inner product) of the traceless real
// symmetric d x d matrices: scaled off-diagonal pairs plus Helmert-style
// diagonal contrasts. Dimension d (d + 1) / 2 - 1.
class SymmetricTracelessBasis {
public:
    explicit SymmetricTracelessBasis(int d);

    int matrix_dim() const { return d_; }
    int size() const { return size_; }
    RealMatrix assemble(const RealVector& coords) const;
    RealVector coordinates(const RealMatrix& a) const;

private:
    int d_;
    int size_;
};

// Sum over outcomes of log(<v|rho|v> / <v|rho0|v>). Throws on Bottom
// outcomes and on zero denominators.
double transcript_likelihood_ratio(const DensityMatrix& rho, const DensityMatrix& rho0,
                                   const Transcript& x);

// One state uniform over the neighborhood of rho0, by rejection from the
// Frobenius ball of radius C eps (which contains the trace-norm cap).
// Requires a real symmetric center; throws after 1e7 rejected proposals.
DensityMatrix sample_isotropic_neighborhood(const DensityMatrix& rho0,
                                            const NeighborhoodParams& params, RngStream& rng);

// Batch sampler for neighborhood perturbations. A pilot run measures the
// rejection acceptance rate; when it is too small for rejection to be viable
// (high dimension), sampling switches to a hit-and-run walk over the same
// body with analytic chord endpoints, burn-in 50 per degree of freedom and
// thinning 8 per degree of freedom.
class IsotropicNeighborhoodSampler {
public:
    IsotropicNeighborhoodSampler(const DensityMatrix& rho0, const NeighborhoodParams& params,
                                 RngStream& rng);

    // The next perturbation delta = rho - rho0 (real symmetric, traceless).
    RealMatrix next_delta(RngStream& rng);

    bool uses_mcmc() const { return mcmc_; }
    double pilot_acceptance() const { return pilot_acceptance_; }

private:
    void hit_and_run_step(RngStream& rng);

    RealMatrix rho0_;
    double op_cap_;
    double trace_cap_;
    bool psd_guard_;
    SymmetricTracelessBasis basis_;
    bool mcmc_ = false;
    double pilot_acceptance_ = 0.0;
    std::vector<RealMatrix> stash_;
    std::size_t stash_cursor_ = 0;
    std::int64_t thin_steps_ = 0;
    RealMatrix current_;
    RealMatrix current_evecs_;
    RealVector current_evals_;
};

struct TiltResult {
    double estimate;   // mean per-step log likelihood ratio over the neighborhood
    double std_error;  // across neighborhood samples (steps within a sample are summed)
    double bound;      // -C^2 eps^2 / d
};

// Monte Carlo estimate of the per-measurement posterior tilt
// E_{rho ~ neighborhood} (1/n) sum_i log(<v_i|rho|v_i> / <v_i|rho0|v_i>).
TiltResult tilt_per_measurement(const DensityMatrix& rho0, const Transcript& x,
                                const NeighborhoodParams& params, std::int64_t mc_samples,
                                RngStream& rng);

// Same, against caller-supplied perturbations (reused across transcripts).
TiltResult tilt_with_samples(const DensityMatrix& rho0, const Transcript& x,
                             const NeighborhoodParams& params,
                             const std::vector<RealMatrix>& deltas);

// Uniform draw from the trace-norm unit ball of traceless real symmetric
// matrices, by rejection from the enclosing Frobenius unit ball.
HermitianMatrix uniform_ball_sample(int d, RngStream& rng);

// f(lambda) = product over i < j of (lambda_i - lambda_j) inside the
// trace-norm simplex, 0 outside.
double eigen_density_f(const EigenSimplexPoint& lambda);

// Membership tests: Delta is the sorted trace-zero simplex with trace norm
// at most 1; Delta' additionally caps entries at 1/d; Gamma is the box of
// width 1/d^4 around the staircase (d - 2i + 1) / d^2.
bool in_delta(const EigenSimplexPoint& lambda);
bool in_delta_prime(const EigenSimplexPoint& lambda);
bool in_gamma(const EigenSimplexPoint& lambda);

// Uniform draws from Delta (rejection in free coordinates) and from Gamma.
EigenSimplexPoint sample_delta_point(int d, RngStream& rng);
EigenSimplexPoint sample_gamma_point(int d, RngStream& rng);

struct DensityCheck {
    double f_value;
    double bound;
    bool pass;
};

double gamma_density_bound(int d);  // 1 / ((2e)^{d^2/2} d^{d(d-1)/2})
double delta_density_bound(int d);  // e^{2 d^2} / d^{d(d-1)/2}

// f(lambda) >= gamma_density_bound(d) for lambda in Gamma; throws otherwise.
DensityCheck check_gamma_lower(const EigenSimplexPoint& lambda);
// f(lambda) <= delta_density_bound(d) for lambda in Delta; throws otherwise.
DensityCheck check_delta_upper(const EigenSimplexPoint& lambda);

struct McEstimate {
    double estimate;
    double std_error;
};

// Fraction of uniform_ball_sample draws with operator norm at most 1/d.
McEstimate volume_ratio_mc(int d, std::int64_t samples, RngStream& rng);

// Descriptive coordinate-volume fractions of Delta and Gamma inside their
// bounding boxes.
McEstimate delta_volume_fraction(int d, std::int64_t samples, RngStream& rng);
McEstimate gamma_volume_fraction(int d, std::int64_t samples, RngStream& rng);

struct MuRatioResult {
    double max_log_ratio;
    double bound;  // 4 d^2
    bool pass;
};

// Max absolute log-density gap over sampled pairs of hard-prior states.
MuRatioResult mu_ratio_extremes(const HardPriorParams& params, std::int64_t samples,
                                RngStream& rng);

}  // namespace tomolab
