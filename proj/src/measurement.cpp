#include "tomolab/measurement.hpp"

#include <algorithm>
#include <cmath>

namespace tomolab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Renormalizes clipped eigenvalue weights into a cumulative table.
std::vector<double> weight_cdf(const RealVector& eigenvalues) {
    std::vector<double> cdf(static_cast<std::size_t>(eigenvalues.size()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        total += std::max(eigenvalues(i), 0.0);
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        acc += std::max(eigenvalues(i), 0.0) / total;
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    cdf.back() = 1.0;
    return cdf;
}

std::size_t pick_index(const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                             static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

UniformPovmSampler::UniformPovmSampler(const DensityMatrix& rho) {
    RealVector evals;
    hermitian_eigensystem_desc(rho.raw(), evals, basis_);
    cdf_ = weight_cdf(evals);
}

Vector UniformPovmSampler::sample(RngStream& rng) const {
    const int d = dim();
    const std::size_t i = pick_index(cdf_, rng.uniform());

    if (d == 1) {
        const double theta = kTwoPi * rng.uniform();
        return basis_.col(0) * Complex(std::cos(theta), std::sin(theta));
    }

    // Overlap s ~ Beta(2, d-1) via two Gamma variates built from exponentials.
    const double x = rng.exponential() + rng.exponential();
    double y = 0.0;
    for (int j = 0; j < d - 1; ++j) {
        y += rng.exponential();
    }
    const double s = x / (x + y);
    const double theta = kTwoPi * rng.uniform();

    // Haar direction in the orthogonal complement of the picked eigenvector.
    const auto u = basis_.col(static_cast<Eigen::Index>(i));
    Vector w(d);
    double nrm = 0.0;
    do {
        for (int j = 0; j < d; ++j) {
            w(j) = rng.normal_complex();
        }
        w -= u * (u.dot(w));
        nrm = w.norm();
    } while (nrm < 1e-12);
    w /= nrm;

    Vector v = std::sqrt(s) * Complex(std::cos(theta), std::sin(theta)) * u +
               std::sqrt(1.0 - s) * w;
    return v / v.norm();
}

ProjectedPovmSampler::ProjectedPovmSampler(const DensityMatrix& rho, const SubspaceBasis& basis) {
    require(basis.ambient_dim() == rho.dim(), "ProjectedPovmSampler: dimension mismatch");
    require(basis.rank() >= 1, "ProjectedPovmSampler: rank-0 subspace");
    columns_ = basis.columns();
    rank_ = basis.rank();
    Matrix compressed = hermitized(columns_.adjoint() * rho.raw() * columns_);
    alpha_ = std::clamp(compressed.trace().real(), 0.0, 1.0);
    if (alpha_ > 1e-15) {
        compressed_.emplace_back(psd_clip_normalize(HermitianMatrix(compressed / alpha_)));
    }
}

MeasurementOutcome ProjectedPovmSampler::sample(RngStream& rng) const {
    if (rng.uniform() < 1.0 - alpha_ || compressed_.empty()) {
        return {OutcomeKind::Bottom, Vector(), rank_};
    }
    Vector inner = compressed_.front().sample(rng);
    Vector v = columns_ * inner;
    v /= v.norm();
    return {OutcomeKind::Vector, std::move(v), rank_};
}

MeasurementOutcome sample_uniform_povm(const DensityMatrix& rho, RngStream& rng) {
    UniformPovmSampler sampler(rho);
    return {OutcomeKind::Vector, sampler.sample(rng), rho.dim()};
}

MeasurementOutcome sample_projected_povm(const DensityMatrix& rho, const SubspaceBasis& basis,
                                         RngStream& rng) {
    ProjectedPovmSampler sampler(rho, basis);
    return sampler.sample(rng);
}

MomentCheckResult moment_check(int k, const DensityMatrix& rho, const Vector& u,
                               std::int64_t samples, RngStream& rng) {
    require(k >= 1 && k <= 8, "moment_check: k must be in [1, 8]");
    require(samples >= 1000, "moment_check: need at least 1000 samples");
    require(u.size() == rho.dim(), "moment_check: vector dimension mismatch");
    const double dp1 = static_cast<double>(rho.dim()) + 1.0;

    UniformPovmSampler sampler(rho);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const Vector v = sampler.sample(rng);
        const double overlap = std::norm(u.dot(v));
        const double value = std::pow(dp1 * overlap, k);
        const double delta = value - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (value - mean);
    }
    const double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples))};
}

double exact_moment_pure(int d, int k) {
    require(d >= 1 && k >= 1, "exact_moment_pure: invalid arguments");
    // (d+1)^k * d * (k+1)! * (d-1)! / (k+d)! computed through lgamma.
    const double lg = std::log(static_cast<double>(d)) + std::lgamma(k + 2.0) +
                      std::lgamma(static_cast<double>(d)) - std::lgamma(static_cast<double>(k + d + 1));
    return std::pow(d + 1.0, k) * std::exp(lg);
}

double exact_moment_mixed(int d, int k) {
    require(d >= 1 && k >= 1, "exact_moment_mixed: invalid arguments");
    // (d+1)^k * k! * (d-1)! / (d-1+k)! computed through lgamma.
    const double lg = std::lgamma(k + 1.0) + std::lgamma(static_cast<double>(d)) -
                      std::lgamma(static_cast<double>(d + k));
    return std::pow(d + 1.0, k) * std::exp(lg);
}

}  // namespace tomolab
