#include "tomolab/certificates.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace tomolab {

namespace {

constexpr double kSeriesTailTol = 1e-14;
constexpr int kSeriesTermCap = 10000;
constexpr double kAdmissibilitySlack = 1e-12;

double tr_sqrt_clip(const Matrix& a) {
    RealVector eigs = hermitian_eigenvalues_desc(a);
    double total = 0.0;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        total += std::sqrt(std::max(eigs(i), 0.0));
    }
    return total;
}

double real_op_norm(const RealMatrix& a) {
    return Eigen::JacobiSVD<RealMatrix>(a).singularValues()(0);
}

}  // namespace

HessianCheck hessian_lower_bound_check(const HermitianMatrix& a, const HermitianMatrix& b,
                                       double h) {
    require(a.dim() == b.dim(), "hessian check: dimension mismatch between A and B");
    require(h >= 1e-5 && h <= 1e-3, "hessian check: step h outside [1e-5, 1e-3]");

    RealVector a_eigs;
    Matrix a_vecs;
    hermitian_eigensystem_desc(a.raw(), a_eigs, a_vecs);
    require(a_eigs(a_eigs.size() - 1) >= 10.0 * h,
            "hessian check: A must be positive definite with min eigenvalue >= 10 h");

    const Matrix& am = a.raw();
    const Matrix& bm = b.raw();
    const double f_plus = tr_sqrt_clip(am + h * bm);
    const double f_mid = tr_sqrt_clip(am);
    const double f_minus = tr_sqrt_clip(am - h * bm);

    // tr(B A^{-3/2} B) in the eigenbasis of A: sum over |B~_ij|^2 lambda_j^{-3/2}.
    const Matrix b_tilde = a_vecs.adjoint() * bm * a_vecs;
    double quad = 0.0;
    for (Eigen::Index i = 0; i < b_tilde.rows(); ++i) {
        for (Eigen::Index j = 0; j < b_tilde.cols(); ++j) {
            quad += std::norm(b_tilde(i, j)) * std::pow(a_eigs(j), -1.5);
        }
    }

    HessianCheck result;
    result.lhs = (f_plus - 2.0 * f_mid + f_minus) / (h * h);
    result.rhs = -0.25 * quad;
    result.tolerance = 1e-4 * (1.0 + b.frobenius() * b.frobenius());
    result.pass = result.lhs >= result.rhs - result.tolerance;
    return result;
}

SqrtCertificate off_diag_certificate(const RealMatrix& m, const RealMatrix& n,
                                     const RealMatrix& e, double c1, double c2) {
    const Eigen::Index d1 = m.rows();
    const Eigen::Index d2 = n.rows();
    require(d1 >= 1 && m.cols() == d1, "certificate: M must be square and nonempty");
    require(d2 >= 1 && n.cols() == d2, "certificate: N must be square and nonempty");
    require(e.rows() == d1 && e.cols() == d2, "certificate: E must be d1 x d2");
    require(c1 > 0.0 && c2 > 0.0, "certificate: c1 and c2 must be positive");
    require(c2 <= c1 / 10.0 + kAdmissibilitySlack, "certificate: requires c2 <= c1 / 10");
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= kHermitianTol,
            "certificate: M must be symmetric");
    require((n - n.transpose()).cwiseAbs().maxCoeff() <= kHermitianTol,
            "certificate: N must be symmetric");

    const RealMatrix ms = 0.5 * (m + m.transpose());
    const RealMatrix ns = 0.5 * (n + n.transpose());

    Eigen::SelfAdjointEigenSolver<RealMatrix> em(ms);
    require(em.eigenvalues()(0) >= c1 - kAdmissibilitySlack &&
                em.eigenvalues()(d1 - 1) <= 4.0 * c1 + kAdmissibilitySlack,
            "certificate: spectrum of M must lie in [c1, 4 c1]");
    Eigen::SelfAdjointEigenSolver<RealMatrix> en(ns);
    require(en.eigenvalues()(0) >= c2 - kAdmissibilitySlack &&
                en.eigenvalues()(d2 - 1) <= 2.0 * c1 + kAdmissibilitySlack,
            "certificate: spectrum of N must lie in [c2, 2 c1]");
    require(real_op_norm(e) <= std::sqrt(c1 * c2) + kAdmissibilitySlack,
            "certificate: ||E||_op must not exceed sqrt(c1 c2)");

    RealMatrix a(d1 + d2, d1 + d2);
    a.topLeftCorner(d1, d1) = ms;
    a.topRightCorner(d1, d2) = e;
    a.bottomLeftCorner(d2, d1) = e.transpose();
    a.bottomRightCorner(d2, d2) = ns;
    Eigen::SelfAdjointEigenSolver<RealMatrix> ea(a);
    require(ea.eigenvalues()(0) >= -kAdmissibilitySlack, "certificate: A must be PSD");

    const RealMatrix k = em.operatorSqrt() * e * en.operatorSqrt();

    // Shifted blocks for the series. m_minus is SPD (min eigenvalue at least
    // 2 c1 - c2) while ||n_plus||_op <= c1, so the term norms decay
    // geometrically with ratio at most c1 / (2 c1 - c2) < 1.
    const RealMatrix m_minus = ms + (c1 - c2) * RealMatrix::Identity(d1, d1);
    const RealMatrix n_plus = ns - (c1 + c2) * RealMatrix::Identity(d2, d2);
    Eigen::LLT<RealMatrix> m_minus_llt(m_minus);
    require(m_minus_llt.info() == Eigen::Success,
            "certificate: shifted M block is not positive definite");

    SqrtCertificate result;
    RealMatrix term = m_minus_llt.solve(k);
    result.x = term;
    result.terms = 1;
    while (real_op_norm(term) >= kSeriesTailTol) {
        if (result.terms >= kSeriesTermCap) {
            throw std::runtime_error("certificate: series did not converge within 1e4 terms");
        }
        term = -m_minus_llt.solve(term * n_plus);
        result.x += term;
        ++result.terms;
    }
    result.converged = true;

    const RealMatrix m_c2 = ms - c2 * RealMatrix::Identity(d1, d1);
    const RealMatrix n_c2 = ns - c2 * RealMatrix::Identity(d2, d2);
    result.sylvester_residual = real_op_norm(m_c2 * result.x + result.x * n_c2 - k);

    RealMatrix bb(d1 + d2, d1 + d2);
    bb.topLeftCorner(d1, d1) = m_c2;
    bb.topRightCorner(d1, d2) = result.x;
    bb.bottomLeftCorner(d2, d1) = result.x.transpose();
    bb.bottomRightCorner(d2, d2) = n_c2;

    RealMatrix s(d1 + d2, d1 + d2);
    s.topLeftCorner(d1, d1) = ms * ms;
    s.topRightCorner(d1, d2) = k;
    s.bottomLeftCorner(d2, d1) = k.transpose();
    s.bottomRightCorner(d2, d2) = ns * ns;
    s = RealMatrix(0.5 * (s + s.transpose()));

    const RealMatrix gap = 0.5 * ((s - bb * bb) + (s - bb * bb).transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> eg(gap);
    result.min_eig_gap = eg.eigenvalues()(0);

    Eigen::SelfAdjointEigenSolver<RealMatrix> es(s);
    double tr_sqrt_s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        tr_sqrt_s += std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    }
    result.trace_gap = tr_sqrt_s - (a.trace() - c2 * static_cast<double>(d1 + d2));

    result.pass = result.sylvester_residual <= 1e-10 && result.min_eig_gap >= -1e-8 &&
                  result.trace_gap >= -1e-8;
    return result;
}

}  // namespace tomolab
