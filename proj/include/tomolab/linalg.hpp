#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tomolab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Tolerances. Except where a caller supplies its own scale, matrix checks are
// taken relative to (1 + Frobenius norm) so they behave uniformly across
// magnitudes.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdEigenvalueTol = 1e-9;
inline constexpr double kTraceOneTol = 1e-9;
inline constexpr double kOrthonormalTol = 1e-10;
// Eigenvalues above -kClipThreshold are treated as rounding noise and clipped
// to zero; anything below it is rejected as genuinely invalid input.
inline constexpr double kClipThreshold = 1e-6;

inline void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

// Averages a matrix with its adjoint. The result is exactly Hermitian in
// floating point (entry (i,j) and conj of entry (j,i) are the same sum).
Matrix hermitized(const Matrix& m);

// Square complex matrix validated to equal its conjugate transpose within
// kHermitianTol (max-abs entrywise), then stored in exactly Hermitian form.
// A realness tag records whether all imaginary parts vanish, which the
// random-matrix lab uses to count degrees of freedom.
class HermitianMatrix {
public:
    explicit HermitianMatrix(Matrix entries);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& raw() const { return m_; }
    bool is_real() const { return real_; }
    double trace_real() const { return m_.trace().real(); }
    double frobenius() const { return m_.norm(); }

private:
    Matrix m_;
    bool real_;
};

// Hermitian, PSD within kPsdEigenvalueTol, trace 1 within kTraceOneTol.
class DensityMatrix {
public:
    explicit DensityMatrix(HermitianMatrix base);

    int dim() const { return base_.dim(); }
    const HermitianMatrix& base() const { return base_; }
    const Matrix& raw() const { return base_.raw(); }
    bool is_real() const { return base_.is_real(); }

    static DensityMatrix maximally_mixed(int d);

private:
    HermitianMatrix base_;
};

// Probability vector: nonnegative, sums to 1 within 1e-12.
class ClassicalDistribution {
public:
    explicit ClassicalDistribution(std::vector<double> probabilities);

    std::size_t size() const { return p_.size(); }
    const std::vector<double>& probabilities() const { return p_; }
    double operator[](std::size_t i) const { return p_[i]; }

private:
    std::vector<double> p_;
};

// d x r matrix with orthonormal columns; its outer product is the projector
// onto the spanned subspace. Rank 0 is allowed (empty span).
class SubspaceBasis {
public:
    SubspaceBasis(int ambient_dim, Matrix columns);

    static SubspaceBasis identity(int d);

    int ambient_dim() const { return ambient_; }
    int rank() const { return static_cast<int>(cols_.cols()); }
    const Matrix& columns() const { return cols_; }
    Matrix projector() const { return cols_ * cols_.adjoint(); }

private:
    int ambient_;
    Matrix cols_;
};

struct EigenDecomposition {
    RealVector eigenvalues;   // sorted descending
    SubspaceBasis eigenvectors;
};

// Full eigendecomposition with eigenvalues sorted descending.
EigenDecomposition eig_hermitian(const HermitianMatrix& a);

// Principal square root of a PSD matrix. Eigenvalues in
// [-kClipThreshold, 0) are clipped to zero; smaller ones raise an error.
HermitianMatrix sqrt_psd(const HermitianMatrix& a);

// F(rho, sigma) = tr(sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// Sum of sqrt(p_i q_i).
double bhattacharyya(const ClassicalDistribution& p, const ClassicalDistribution& q);

// Sum of (ptilde_i - p_i)^2 / ptilde_i. Note the denominator is the FIRST
// argument, which is not the most common convention; see README.
double chi_squared(const ClassicalDistribution& ptilde, const ClassicalDistribution& p);

// sqrt(2 (1 - sqrt(F))); a metric on states.
double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// Unnormalized trace norm of the difference: sum of singular values, with
// maximum value 2 for states. No 1/2 factor; see README.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// Largest absolute eigenvalue.
double op_norm(const HermitianMatrix& a);

// (1 - gamma) rho + gamma I/d.
DensityMatrix mix_with_identity(const DensityMatrix& rho, double gamma);

// Clips negative eigenvalues to zero and renormalizes the trace to 1,
// projecting a raw estimate onto valid states. Errors if no positive part.
DensityMatrix psd_clip_normalize(const HermitianMatrix& h);

// Helpers on raw matrices for hot paths; callers must pass Hermitian input.
RealVector hermitian_eigenvalues_desc(const Matrix& m);
void hermitian_eigensystem_desc(const Matrix& m, RealVector& eigenvalues, Matrix& eigenvectors);
double op_norm_raw(const Matrix& m);
double trace_norm_raw(const Matrix& m);

}  // namespace tomolab
