#include "tomolab/states.hpp"

#include <algorithm>
#include <cmath>

namespace tomolab {

Vector haar_pure(int d, RngStream& rng) {
    require(d >= 1, "haar_pure: dimension must be positive");
    Vector v(d);
    while (true) {
        for (int i = 0; i < d; ++i) {
            v(i) = rng.normal_complex();
        }
        const double n = v.norm();
        if (n > 1e-150) {
            return v / n;
        }
    }
}

Matrix haar_unitary(int d, RngStream& rng) {
    require(d >= 1, "haar_unitary: dimension must be positive");
    Matrix g(d, d);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            g(i, j) = rng.normal_complex();
        }
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Multiplying each column by the phase of the matching R diagonal entry
    // makes the distribution exactly Haar rather than QR-convention-dependent.
    for (int j = 0; j < d; ++j) {
        const Complex rjj = r(j, j);
        const double a = std::abs(rjj);
        if (a > 0.0) q.col(j) *= rjj / a;
    }
    return q;
}

DensityMatrix random_state(int d, const std::vector<double>& spectrum, RngStream& rng) {
    require(d >= 1, "random_state: dimension must be positive");
    require(!spectrum.empty() && static_cast<int>(spectrum.size()) <= d,
            "random_state: spectrum length must be in [1, d]");
    RealVector lam = RealVector::Zero(d);
    double sum = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        require(spectrum[i] >= -1e-15, "random_state: negative spectrum entry");
        lam(static_cast<Eigen::Index>(i)) = std::max(spectrum[i], 0.0);
        sum += lam(static_cast<Eigen::Index>(i));
    }
    require(std::abs(sum - 1.0) <= 1e-12, "random_state: spectrum must sum to 1");

    if (lam.maxCoeff() - lam.minCoeff() <= 1e-15) {
        // All eigenvalues equal: the state is rotation invariant, so skip the
        // conjugation and return the exact diagonal matrix.
        return DensityMatrix(HermitianMatrix(Matrix(lam.cast<Complex>().asDiagonal())));
    }
    const Matrix u = haar_unitary(d, rng);
    Matrix m = u * lam.cast<Complex>().asDiagonal() * u.adjoint();
    return DensityMatrix(HermitianMatrix(hermitized(m)));
}

GoeStarSample goe_star_sample(int d, RngStream& rng) {
    require(d >= 2, "goe_star_sample: dimension must be at least 2");
    RealMatrix g(d, d);
    const double off_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const double diag_scale = std::sqrt(2.0 / static_cast<double>(d));
    for (int i = 0; i < d; ++i) {
        g(i, i) = diag_scale * rng.normal();
        for (int j = i + 1; j < d; ++j) {
            const double x = off_scale * rng.normal();
            g(i, j) = x;
            g(j, i) = x;
        }
    }
    const double mean_diag = g.trace() / d;
    for (int i = 0; i < d; ++i) {
        g(i, i) -= mean_diag;
    }
    return {d, std::move(g)};
}

DensityMatrix hard_prior_sample(const HardPriorParams& params, RngStream& rng) {
    require(params.dim >= 2, "hard_prior_sample: dimension must be at least 2");
    require(params.good_cutoff > 0.0 && params.good_cutoff < params.op_cutoff,
            "hard_prior_sample: cutoffs must satisfy 0 < good < op");
    const int d = params.dim;
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        const GoeStarSample g = goe_star_sample(d, rng);
        const Matrix gc = g.matrix.cast<Complex>();
        if (op_norm_raw(gc) > params.op_cutoff) {
            continue;
        }
        Matrix m = (Matrix::Identity(d, d) + params.prior_sigma * gc) / static_cast<double>(d);
        return DensityMatrix(HermitianMatrix(std::move(m)));
    }
    throw std::runtime_error("hard_prior_sample: rejection loop exceeded 10^6 iterations");
}

bool is_good(const DensityMatrix& rho, const HardPriorParams& params) {
    const int d = rho.dim();
    require(d == params.dim, "is_good: dimension mismatch");
    const Matrix delta = rho.raw() - Matrix::Identity(d, d) / static_cast<double>(d);
    return op_norm_raw(delta) <= params.good_cutoff * params.prior_sigma / d;
}

double hard_prior_log_density_gap(const DensityMatrix& rho, const DensityMatrix& rho_prime,
                                  const HardPriorParams& params) {
    const int d = params.dim;
    require(rho.dim() == d && rho_prime.dim() == d, "hard_prior_log_density_gap: dimension mismatch");
    const Matrix center = Matrix::Identity(d, d) / static_cast<double>(d);
    const double f2 = (rho.raw() - center).squaredNorm();
    const double f2p = (rho_prime.raw() - center).squaredNorm();
    const double scale =
        std::pow(static_cast<double>(d), 3) / (4.0 * params.prior_sigma * params.prior_sigma);
    return -scale * (f2 - f2p);
}

}  // namespace tomolab
