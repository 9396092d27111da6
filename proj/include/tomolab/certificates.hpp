#pragma once

#include "tomolab/linalg.hpp"

namespace tomolab {

// Finite-difference check of the Hessian lower bound for f(X) = tr sqrt(X):
// the quadratic form of the Hessian at A in direction B is bounded below by
// -1/4 tr(B A^{-3/2} B).
//
//   lhs = (f(A + hB) - 2 f(A) + f(A - hB)) / h^2
//   rhs = -1/4 tr(B A^{-3/2} B)
//
// pass iff lhs >= rhs - tolerance with tolerance = 1e-4 (1 + ||B||_F^2),
// which absorbs the O(h^2) truncation error of the central difference.
struct HessianCheck {
    double lhs;
    double rhs;
    double tolerance;
    bool pass;
};

// Requires h in [1e-5, 1e-3] and min eig of A at least 10 h, so that A +- hB
// stays comfortably positive for directions with ||B||_op up to ~10.
HessianCheck hessian_lower_bound_check(const HermitianMatrix& a, const HermitianMatrix& b,
                                       double h);

// Certificate for the block square-root trace bound. Given the PSD block
// matrix A = [[M, E], [E^T, N]] with spectra M in [c1 I, 4 c1 I], N in
// [c2 I, 2 c1 I], ||E||_op <= sqrt(c1 c2) and c2 <= c1 / 10, it constructs
//
//   X = sum_{i>=1} (-1)^{i-1} (M + (c1 - c2) I)^{-i} K (N - (c1 + c2) I)^{i-1},
//   K = M^{1/2} E N^{1/2},
//
// which solves the Sylvester equation (M - c2 I) X + X (N - c2 I) = K. With
// B = [[M - c2 I, X], [X^T, N - c2 I]] and S = A_diag^{1/2} A A_diag^{1/2}
// (that is, [[M^2, K], [K^T, N^2]]), the certificate is S >= B^2, which
// yields tr sqrt(S) >= tr(B) = tr(A) - c2 (d1 + d2).
struct SqrtCertificate {
    RealMatrix x;
    int terms;
    bool converged;
    double sylvester_residual;  // ||(M - c2 I) X + X (N - c2 I) - K||_op
    double min_eig_gap;         // min eig of S - B^2
    double trace_gap;           // tr sqrt(S) - (tr(A) - c2 (d1 + d2))
    bool pass;
};

// Validates the admissibility preconditions above, then sums the series until
// the next term drops below 1e-14 in operator norm (the terms decay
// geometrically with ratio at most c1 / (2 c1 - c2)). Throws on precondition
// violations and if the series has not converged after 1e4 terms. pass iff
// sylvester_residual <= 1e-10, min_eig_gap >= -1e-8 and trace_gap >= -1e-8.
SqrtCertificate off_diag_certificate(const RealMatrix& m, const RealMatrix& n,
                                     const RealMatrix& e, double c1, double c2);

}  // namespace tomolab
