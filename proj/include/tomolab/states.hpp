#pragma once

#include <vector>

#include "tomolab/linalg.hpp"
#include "tomolab/rng.hpp"

namespace tomolab {

// Trace-centered sample from the Gaussian orthogonal ensemble at scale
// Var(G_ij) = 1/d off the diagonal. Centering removes (tr G / d) I, so the
// matrix is exactly traceless; off-diagonal variances are unchanged and the
// diagonal variance drops from 2/d to (2/d)(1 - 1/d).
struct GoeStarSample {
    int dim;
    RealMatrix matrix;
};

// Parameters of the near-maximally-mixed prior: states (1/d)(I + sigma G)
// with G trace-centered GOE conditioned on op norm at most op_cutoff. States
// within good_cutoff * sigma / d of I/d in operator norm form the good set.
struct HardPriorParams {
    int dim;
    double prior_sigma = 0.01;
    double op_cutoff = 4.0;
    double good_cutoff = 3.0;
};

// Unit vector distributed by Haar measure on the complex unit sphere.
Vector haar_pure(int d, RngStream& rng);

// Haar-distributed unitary matrix (QR of a complex Ginibre matrix with the
// phase convention fixed from the R diagonal).
Matrix haar_unitary(int d, RngStream& rng);

// Haar-conjugated diagonal state with the given spectrum. The spectrum may be
// shorter than d (zero-padded). An all-equal spectrum returns I/d exactly.
DensityMatrix random_state(int d, const std::vector<double>& spectrum, RngStream& rng);

GoeStarSample goe_star_sample(int d, RngStream& rng);

// Draws (1/d)(I + sigma G) by rejection on the op-norm cutoff. Throws after
// 10^6 rejected proposals (unreachable at the default parameters).
DensityMatrix hard_prior_sample(const HardPriorParams& params, RngStream& rng);

// Membership in the good set: ||rho - I/d||_op <= good_cutoff * sigma / d.
bool is_good(const DensityMatrix& rho, const HardPriorParams& params);

// Log-density difference log mu(rho) - log mu(rho_prime) of the prior above,
// evaluated through the Gaussian exponent (d^3 / (4 sigma^2)) ||rho - I/d||_F^2.
double hard_prior_log_density_gap(const DensityMatrix& rho, const DensityMatrix& rho_prime,
                                  const HardPriorParams& params);

}  // namespace tomolab
