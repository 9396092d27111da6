#include "tomolab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace tomolab {

Matrix hermitized(const Matrix& m) {
    return 0.5 * (m + m.adjoint().eval());
}

HermitianMatrix::HermitianMatrix(Matrix entries) {
    require(entries.rows() == entries.cols() && entries.rows() >= 1,
            "HermitianMatrix: entries must be square and nonempty");
    const double asym = (entries - entries.adjoint().eval()).cwiseAbs().maxCoeff();
    require(asym <= kHermitianTol, "HermitianMatrix: entries differ from conjugate transpose");
    m_ = hermitized(entries);
    real_ = m_.imag().cwiseAbs().maxCoeff() <= 1e-12;
}

DensityMatrix::DensityMatrix(HermitianMatrix base) : base_(std::move(base)) {
    const double tr = base_.trace_real();
    require(std::abs(tr - 1.0) <= kTraceOneTol, "DensityMatrix: trace must be 1");
    const RealVector evals = hermitian_eigenvalues_desc(base_.raw());
    require(evals(evals.size() - 1) >= -kPsdEigenvalueTol,
            "DensityMatrix: negative eigenvalue beyond tolerance");
}

DensityMatrix DensityMatrix::maximally_mixed(int d) {
    require(d >= 1, "maximally_mixed: dimension must be positive");
    Matrix m = Matrix::Identity(d, d) / static_cast<double>(d);
    return DensityMatrix(HermitianMatrix(std::move(m)));
}

ClassicalDistribution::ClassicalDistribution(std::vector<double> probabilities)
    : p_(std::move(probabilities)) {
    require(!p_.empty(), "ClassicalDistribution: empty probability vector");
    double sum = 0.0;
    for (double& v : p_) {
        require(v >= -1e-15, "ClassicalDistribution: negative probability");
        v = std::max(v, 0.0);
        sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12, "ClassicalDistribution: probabilities must sum to 1");
}

SubspaceBasis::SubspaceBasis(int ambient_dim, Matrix columns)
    : ambient_(ambient_dim), cols_(std::move(columns)) {
    require(ambient_ >= 1, "SubspaceBasis: ambient dimension must be positive");
    require(cols_.rows() == ambient_, "SubspaceBasis: column length mismatch");
    require(cols_.cols() <= ambient_, "SubspaceBasis: rank exceeds ambient dimension");
    if (cols_.cols() > 0) {
        const Matrix gram = cols_.adjoint() * cols_;
        const double err =
            (gram - Matrix::Identity(cols_.cols(), cols_.cols())).cwiseAbs().maxCoeff();
        require(err <= kOrthonormalTol, "SubspaceBasis: columns not orthonormal");
    }
}

SubspaceBasis SubspaceBasis::identity(int d) {
    return SubspaceBasis(d, Matrix::Identity(d, d));
}

RealVector hermitian_eigenvalues_desc(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().reverse();
}

void hermitian_eigensystem_desc(const Matrix& m, RealVector& eigenvalues, Matrix& eigenvectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    eigenvalues = solver.eigenvalues().reverse();
    eigenvectors = solver.eigenvectors().rowwise().reverse();
}

double op_norm_raw(const Matrix& m) {
    const RealVector evals = hermitian_eigenvalues_desc(m);
    return std::max(std::abs(evals(0)), std::abs(evals(evals.size() - 1)));
}

double trace_norm_raw(const Matrix& m) {
    return hermitian_eigenvalues_desc(m).cwiseAbs().sum();
}

EigenDecomposition eig_hermitian(const HermitianMatrix& a) {
    RealVector evals;
    Matrix evecs;
    hermitian_eigensystem_desc(a.raw(), evals, evecs);
    return {std::move(evals), SubspaceBasis(a.dim(), std::move(evecs))};
}

HermitianMatrix sqrt_psd(const HermitianMatrix& a) {
    RealVector evals;
    Matrix evecs;
    hermitian_eigensystem_desc(a.raw(), evals, evecs);
    const double scale = 1.0 + a.frobenius();
    if (evals(evals.size() - 1) < -kClipThreshold * scale) {
        throw std::invalid_argument("sqrt_psd: matrix is not PSD");
    }
    RealVector roots = evals.cwiseMax(0.0).cwiseSqrt();
    Matrix result = evecs * roots.asDiagonal() * evecs.adjoint();
    return HermitianMatrix(hermitized(result));
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    require(rho.dim() == sigma.dim(), "fidelity: dimension mismatch");
    const HermitianMatrix root = sqrt_psd(rho.base());
    const Matrix inner = hermitized(root.raw() * sigma.raw() * root.raw());
    const RealVector evals = hermitian_eigenvalues_desc(inner);
    double tr = 0.0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        tr += std::sqrt(std::max(evals(i), 0.0));
    }
    const double f = tr * tr;
    return std::clamp(f, 0.0, 1.0);
}

double bhattacharyya(const ClassicalDistribution& p, const ClassicalDistribution& q) {
    require(p.size() == q.size(), "bhattacharyya: length mismatch");
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        bc += std::sqrt(p[i] * q[i]);
    }
    return bc;
}

double chi_squared(const ClassicalDistribution& ptilde, const ClassicalDistribution& p) {
    require(ptilde.size() == p.size(), "chi_squared: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double diff = ptilde[i] - p[i];
        if (ptilde[i] <= 0.0) {
            if (std::abs(diff) > 0.0) {
                throw std::invalid_argument("chi_squared: zero denominator with nonzero mass");
            }
            continue;
        }
        total += diff * diff / ptilde[i];
    }
    return total;
}

double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    const double f = fidelity(rho, sigma);
    return std::sqrt(std::max(2.0 * (1.0 - std::sqrt(f)), 0.0));
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    require(rho.dim() == sigma.dim(), "trace_distance: dimension mismatch");
    return trace_norm_raw(rho.raw() - sigma.raw());
}

double op_norm(const HermitianMatrix& a) {
    return op_norm_raw(a.raw());
}

DensityMatrix mix_with_identity(const DensityMatrix& rho, double gamma) {
    require(gamma >= 0.0 && gamma <= 1.0, "mix_with_identity: gamma out of [0,1]");
    const int d = rho.dim();
    Matrix m = (1.0 - gamma) * rho.raw() + (gamma / d) * Matrix::Identity(d, d);
    return DensityMatrix(HermitianMatrix(std::move(m)));
}

DensityMatrix psd_clip_normalize(const HermitianMatrix& h) {
    RealVector evals;
    Matrix evecs;
    hermitian_eigensystem_desc(h.raw(), evals, evecs);
    RealVector clipped = evals.cwiseMax(0.0);
    const double mass = clipped.sum();
    if (mass <= 0.0) {
        throw std::runtime_error("psd_clip_normalize: no positive part to normalize");
    }
    clipped /= mass;
    Matrix m = evecs * clipped.asDiagonal() * evecs.adjoint();
    return DensityMatrix(HermitianMatrix(hermitized(m)));
}

}  // namespace tomolab
