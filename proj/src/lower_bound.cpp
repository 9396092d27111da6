#include "tomolab/lower_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace tomolab {

namespace {

constexpr std::int64_t kRejectionCap = 10000000;
constexpr std::int64_t kCheapRejectionCap = 100000000;
constexpr int kPilotProposals = 2000;
constexpr int kPilotMinAccepts = 5;
constexpr int kBurnInPerDof = 50;
constexpr int kThinPerDof = 8;

RealVector sym_eigenvalues(const RealMatrix& a) {
    return Eigen::SelfAdjointEigenSolver<RealMatrix>(a, Eigen::EigenvaluesOnly).eigenvalues();
}

double eig_op_norm(const RealVector& ascending) {
    return std::max(std::abs(ascending(0)), std::abs(ascending(ascending.size() - 1)));
}

double eig_trace_norm(const RealVector& eigs) { return eigs.cwiseAbs().sum(); }

// Uniform draw from the Frobenius ball of the given radius in the traceless
// symmetric space: random direction times radius * u^(1/m).
RealMatrix frobenius_ball_draw(const SymmetricTracelessBasis& basis, double radius,
                               RngStream& rng) {
    const int m = basis.size();
    RealVector z(m);
    double norm = 0.0;
    do {
        for (int i = 0; i < m; ++i) z(i) = rng.normal();
        norm = z.norm();
    } while (norm < 1e-150);
    const double r = radius * std::pow(rng.uniform(), 1.0 / m);
    return basis.assemble((r / norm) * z);
}

bool neighborhood_accepts(const RealMatrix& center, bool psd_check, double op_cap,
                          double trace_cap, const RealMatrix& delta) {
    const RealVector eigs = sym_eigenvalues(delta);
    if (eig_op_norm(eigs) > op_cap) return false;
    if (eig_trace_norm(eigs) > trace_cap) return false;
    if (psd_check && sym_eigenvalues(center + delta)(0) < 0.0) return false;
    return true;
}

}  // namespace

EigenSimplexPoint::EigenSimplexPoint(RealVector values) : v_(std::move(values)) {
    require(v_.size() >= 1, "simplex point: must have at least one entry");
    for (Eigen::Index i = 0; i + 1 < v_.size(); ++i) {
        require(v_(i) >= v_(i + 1), "simplex point: entries must be sorted descending");
    }
    require(std::abs(v_.sum()) <= 1e-12, "simplex point: entries must sum to zero");
}

SymmetricTracelessBasis::SymmetricTracelessBasis(int d) : d_(d), size_(d * (d + 1) / 2 - 1) {
    require(d >= 2, "traceless basis: dimension must be at least 2");
}

RealMatrix SymmetricTracelessBasis::assemble(const RealVector& coords) const {
    require(coords.size() == size_, "traceless basis: coordinate count mismatch");
    RealMatrix a = RealMatrix::Zero(d_, d_);
    int idx = 0;
    for (int i = 0; i < d_; ++i) {
        for (int j = i + 1; j < d_; ++j) {
            a(i, j) = a(j, i) = coords(idx++) * (1.0 / std::numbers::sqrt2);
        }
    }
    for (int k = 1; k < d_; ++k) {
        const double scale = coords(idx++) / std::sqrt(static_cast<double>(k) * (k + 1));
        for (int t = 0; t < k; ++t) a(t, t) += scale;
        a(k, k) -= scale * k;
    }
    return a;
}

RealVector SymmetricTracelessBasis::coordinates(const RealMatrix& a) const {
    require(a.rows() == d_ && a.cols() == d_, "traceless basis: matrix dimension mismatch");
    RealVector coords(size_);
    int idx = 0;
    for (int i = 0; i < d_; ++i) {
        for (int j = i + 1; j < d_; ++j) {
            coords(idx++) = (a(i, j) + a(j, i)) * (1.0 / std::numbers::sqrt2);
        }
    }
    for (int k = 1; k < d_; ++k) {
        double head = 0.0;
        for (int t = 0; t < k; ++t) head += a(t, t);
        coords(idx++) = (head - k * a(k, k)) / std::sqrt(static_cast<double>(k) * (k + 1));
    }
    return coords;
}

double transcript_likelihood_ratio(const DensityMatrix& rho, const DensityMatrix& rho0,
                                   const Transcript& x) {
    require(rho.dim() == rho0.dim(), "likelihood ratio: state dimensions differ");
    double total = 0.0;
    for (const MeasurementOutcome& o : x.outcomes) {
        require(o.kind == OutcomeKind::Vector,
                "likelihood ratio: transcript contains a Bottom outcome");
        require(o.vector.size() == rho.dim(), "likelihood ratio: outcome dimension mismatch");
        const double num = std::max((o.vector.adjoint() * rho.raw() * o.vector).value().real(), 0.0);
        const double den = (o.vector.adjoint() * rho0.raw() * o.vector).value().real();
        if (den <= 0.0) {
            throw std::runtime_error("likelihood ratio: zero denominator under the center state");
        }
        total += std::log(num / den);
    }
    return total;
}

DensityMatrix sample_isotropic_neighborhood(const DensityMatrix& rho0,
                                            const NeighborhoodParams& params, RngStream& rng) {
    require(params.epsilon >= 0.0, "neighborhood sampler: epsilon must be nonnegative");
    require(params.c > 0.0, "neighborhood sampler: C must be positive");
    require(rho0.is_real(), "neighborhood sampler: center state must be real symmetric");
    const int d = rho0.dim();
    if (d == 1) return rho0;
    const RealMatrix center = rho0.raw().real();
    const double op_cap = params.op_cap(d);
    const bool psd_check = sym_eigenvalues(center)(0) <= op_cap;
    const SymmetricTracelessBasis basis(d);
    for (std::int64_t attempt = 0; attempt < kRejectionCap; ++attempt) {
        RealMatrix delta = frobenius_ball_draw(basis, params.trace_cap(), rng);
        if (neighborhood_accepts(center, psd_check, op_cap, params.trace_cap(), delta)) {
            return DensityMatrix(HermitianMatrix(rho0.raw() + delta.cast<Complex>()));
        }
    }
    throw std::runtime_error("neighborhood sampler: rejection failed after 1e7 proposals");
}

IsotropicNeighborhoodSampler::IsotropicNeighborhoodSampler(const DensityMatrix& rho0,
                                                           const NeighborhoodParams& params,
                                                           RngStream& rng)
    : op_cap_(params.op_cap(rho0.dim())), trace_cap_(params.trace_cap()), basis_(rho0.dim()) {
    require(params.epsilon >= 0.0, "neighborhood sampler: epsilon must be nonnegative");
    require(params.c > 0.0, "neighborhood sampler: C must be positive");
    require(rho0.is_real(), "neighborhood sampler: center state must be real symmetric");
    rho0_ = rho0.raw().real();
    psd_guard_ = sym_eigenvalues(rho0_)(0) <= op_cap_;
    thin_steps_ = static_cast<std::int64_t>(kThinPerDof) * basis_.size();

    int accepts = 0;
    for (int i = 0; i < kPilotProposals; ++i) {
        RealMatrix delta = frobenius_ball_draw(basis_, trace_cap_, rng);
        if (neighborhood_accepts(rho0_, psd_guard_, op_cap_, trace_cap_, delta)) {
            ++accepts;
            stash_.push_back(std::move(delta));
        }
    }
    pilot_acceptance_ = static_cast<double>(accepts) / kPilotProposals;
    mcmc_ = accepts < kPilotMinAccepts;
    if (mcmc_) {
        stash_.clear();
        const int d = basis_.matrix_dim();
        current_ = RealMatrix::Zero(d, d);
        current_evecs_ = RealMatrix::Identity(d, d);
        current_evals_ = RealVector::Zero(d);
        const std::int64_t burn = static_cast<std::int64_t>(kBurnInPerDof) * basis_.size();
        for (std::int64_t i = 0; i < burn; ++i) hit_and_run_step(rng);
    }
}

void IsotropicNeighborhoodSampler::hit_and_run_step(RngStream& rng) {
    const int d = basis_.matrix_dim();
    const int m = basis_.size();
    RealVector z(m);
    double norm = 0.0;
    do {
        for (int i = 0; i < m; ++i) z(i) = rng.normal();
        norm = z.norm();
    } while (norm < 1e-150);
    const RealMatrix dir = basis_.assemble(z / norm);

    // Chord endpoints along dir. The operator-norm cap splits into the two
    // one-sided constraints a I - (delta + t dir) >= 0 and
    // a I + delta + t dir >= 0; each reduces, in the eigenbasis of delta, to
    // eigenvalue bounds of a scaled direction matrix. The trace-norm cap is
    // implied (trace norm <= d * op norm = trace cap) and only rechecked on
    // the candidate.
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    const RealMatrix dir_rot = current_evecs_.transpose() * dir * current_evecs_;

    const RealVector s_minus = (op_cap_ - current_evals_.array()).rsqrt().matrix();
    RealMatrix q = s_minus.asDiagonal() * dir_rot * s_minus.asDiagonal();
    RealVector mu = sym_eigenvalues(0.5 * (q + q.transpose()));
    if (mu(d - 1) > 0.0) t_hi = std::min(t_hi, 1.0 / mu(d - 1));
    if (mu(0) < 0.0) t_lo = std::max(t_lo, 1.0 / mu(0));

    const RealVector s_plus = (op_cap_ + current_evals_.array()).rsqrt().matrix();
    q = s_plus.asDiagonal() * dir_rot * s_plus.asDiagonal();
    mu = sym_eigenvalues(0.5 * (q + q.transpose()));
    if (mu(0) < 0.0) t_hi = std::min(t_hi, -1.0 / mu(0));
    if (mu(d - 1) > 0.0) t_lo = std::max(t_lo, -1.0 / mu(d - 1));

    if (psd_guard_) {
        Eigen::SelfAdjointEigenSolver<RealMatrix> ep(rho0_ + current_);
        const RealVector s_psd = ep.eigenvalues().array().rsqrt().matrix();
        const RealMatrix dir_psd = ep.eigenvectors().transpose() * dir * ep.eigenvectors();
        q = s_psd.asDiagonal() * dir_psd * s_psd.asDiagonal();
        mu = sym_eigenvalues(0.5 * (q + q.transpose()));
        if (mu(0) < 0.0) t_hi = std::min(t_hi, -1.0 / mu(0));
        if (mu(d - 1) > 0.0) t_lo = std::max(t_lo, -1.0 / mu(d - 1));
    }

    if (!(t_lo < t_hi) || !std::isfinite(t_lo) || !std::isfinite(t_hi)) return;

    for (int attempt = 0; attempt < 60; ++attempt) {
        const double t = t_lo + rng.uniform() * (t_hi - t_lo);
        RealMatrix cand = current_ + t * dir;
        cand = RealMatrix(0.5 * (cand + cand.transpose()));
        cand -= (cand.trace() / d) * RealMatrix::Identity(d, d);
        Eigen::SelfAdjointEigenSolver<RealMatrix> ec(cand);
        bool ok = eig_op_norm(ec.eigenvalues()) < op_cap_ &&
                  eig_trace_norm(ec.eigenvalues()) <= trace_cap_;
        if (ok && psd_guard_) ok = sym_eigenvalues(rho0_ + cand)(0) > 0.0;
        if (ok) {
            current_ = cand;
            current_evecs_ = ec.eigenvectors();
            current_evals_ = ec.eigenvalues();
            return;
        }
        // Rounding pushed the endpoint marginally outside; shrink the chord
        // toward the current interior point and redraw.
        t_lo *= 0.5;
        t_hi *= 0.5;
    }
}

RealMatrix IsotropicNeighborhoodSampler::next_delta(RngStream& rng) {
    if (!mcmc_) {
        if (stash_cursor_ < stash_.size()) return stash_[stash_cursor_++];
        for (std::int64_t attempt = 0; attempt < kRejectionCap; ++attempt) {
            RealMatrix delta = frobenius_ball_draw(basis_, trace_cap_, rng);
            if (neighborhood_accepts(rho0_, psd_guard_, op_cap_, trace_cap_, delta)) {
                return delta;
            }
        }
        throw std::runtime_error("neighborhood sampler: rejection failed after 1e7 proposals");
    }
    for (std::int64_t i = 0; i < thin_steps_; ++i) hit_and_run_step(rng);
    return current_;
}

TiltResult tilt_per_measurement(const DensityMatrix& rho0, const Transcript& x,
                                const NeighborhoodParams& params, std::int64_t mc_samples,
                                RngStream& rng) {
    require(mc_samples >= 1, "tilt: mc_samples must be positive");
    IsotropicNeighborhoodSampler sampler(rho0, params, rng);
    std::vector<RealMatrix> deltas;
    deltas.reserve(static_cast<std::size_t>(mc_samples));
    for (std::int64_t i = 0; i < mc_samples; ++i) deltas.push_back(sampler.next_delta(rng));
    return tilt_with_samples(rho0, x, params, deltas);
}

TiltResult tilt_with_samples(const DensityMatrix& rho0, const Transcript& x,
                             const NeighborhoodParams& params,
                             const std::vector<RealMatrix>& deltas) {
    require(!x.outcomes.empty(), "tilt: transcript is empty");
    require(!deltas.empty(), "tilt: need at least one neighborhood sample");
    const int d = rho0.dim();
    const auto len = static_cast<Eigen::Index>(x.size());

    // Split outcome vectors into real stacks: for real symmetric delta,
    // <v|delta|v> = vr' delta vr + vi' delta vi.
    RealMatrix vr(d, len);
    RealMatrix vi(d, len);
    RealVector den(len);
    for (Eigen::Index i = 0; i < len; ++i) {
        const MeasurementOutcome& o = x.outcomes[static_cast<std::size_t>(i)];
        require(o.kind == OutcomeKind::Vector, "tilt: transcript contains a Bottom outcome");
        require(o.vector.size() == d, "tilt: outcome dimension mismatch");
        vr.col(i) = o.vector.real();
        vi.col(i) = o.vector.imag();
        den(i) = (o.vector.adjoint() * rho0.raw() * o.vector).value().real();
        if (den(i) <= 0.0) {
            throw std::runtime_error("tilt: outcome has zero probability under the center state");
        }
    }

    double mean = 0.0;
    double m2 = 0.0;
    std::int64_t k = 0;
    for (const RealMatrix& delta : deltas) {
        require(delta.rows() == d && delta.cols() == d, "tilt: perturbation dimension mismatch");
        const RealMatrix pr = delta * vr;
        const RealMatrix pi = delta * vi;
        double total = 0.0;
        for (Eigen::Index i = 0; i < len; ++i) {
            const double quad = vr.col(i).dot(pr.col(i)) + vi.col(i).dot(pi.col(i));
            total += std::log1p(quad / den(i));
        }
        const double value = total / static_cast<double>(len);
        ++k;
        const double d1 = value - mean;
        mean += d1 / static_cast<double>(k);
        m2 += d1 * (value - mean);
    }

    TiltResult result;
    result.estimate = mean;
    result.std_error =
        k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
    result.bound = -params.c * params.c * params.epsilon * params.epsilon / d;
    return result;
}

HermitianMatrix uniform_ball_sample(int d, RngStream& rng) {
    require(d >= 2, "ball sampler: dimension must be at least 2");
    const SymmetricTracelessBasis basis(d);
    for (std::int64_t attempt = 0; attempt < kRejectionCap; ++attempt) {
        RealMatrix a = frobenius_ball_draw(basis, 1.0, rng);
        if (eig_trace_norm(sym_eigenvalues(a)) <= 1.0) return HermitianMatrix(a.cast<Complex>());
    }
    throw std::runtime_error("ball sampler: rejection failed after 1e7 proposals");
}

double eigen_density_f(const EigenSimplexPoint& lambda) {
    if (!in_delta(lambda)) return 0.0;
    const RealVector& v = lambda.values();
    double f = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        for (Eigen::Index j = i + 1; j < v.size(); ++j) f *= v(i) - v(j);
    }
    return f;
}

bool in_delta(const EigenSimplexPoint& lambda) { return lambda.values().cwiseAbs().sum() <= 1.0; }

bool in_delta_prime(const EigenSimplexPoint& lambda) {
    return in_delta(lambda) &&
           lambda.values().cwiseAbs().maxCoeff() <= 1.0 / static_cast<double>(lambda.dim());
}

bool in_gamma(const EigenSimplexPoint& lambda) {
    const int d = lambda.dim();
    const double dd = static_cast<double>(d);
    const double box = 1.0 / (dd * dd * dd * dd) + 1e-15;
    for (int i = 0; i < d; ++i) {
        const double center = (dd - 2.0 * i - 1.0) / (dd * dd);
        if (std::abs(lambda.values()(i) - center) > box) return false;
    }
    return true;
}

EigenSimplexPoint sample_delta_point(int d, RngStream& rng) {
    require(d >= 1, "delta sampler: dimension must be positive");
    for (std::int64_t attempt = 0; attempt < kCheapRejectionCap; ++attempt) {
        RealVector lam(d);
        double sum = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            lam(i) = rng.uniform() - 0.5;
            sum += lam(i);
        }
        lam(d - 1) = -sum;
        if (lam.cwiseAbs().sum() > 1.0) continue;
        std::sort(lam.data(), lam.data() + d, std::greater<double>());
        return EigenSimplexPoint(std::move(lam));
    }
    throw std::runtime_error("delta sampler: rejection failed after 1e8 proposals");
}

EigenSimplexPoint sample_gamma_point(int d, RngStream& rng) {
    require(d >= 1, "gamma sampler: dimension must be positive");
    const double dd = static_cast<double>(d);
    for (std::int64_t attempt = 0; attempt < kCheapRejectionCap; ++attempt) {
        RealVector u(d);
        double sum = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            u(i) = 2.0 * rng.uniform() - 1.0;
            sum += u(i);
        }
        u(d - 1) = -sum;
        if (std::abs(u(d - 1)) > 1.0) continue;
        RealVector lam(d);
        for (int i = 0; i < d; ++i) {
            lam(i) = (dd - 2.0 * i - 1.0) / (dd * dd) + u(i) / (dd * dd * dd * dd);
        }
        lam.array() -= lam.mean();
        return EigenSimplexPoint(std::move(lam));
    }
    throw std::runtime_error("gamma sampler: rejection failed after 1e8 proposals");
}

double gamma_density_bound(int d) {
    require(d >= 1, "density bound: dimension must be positive");
    const double dd = static_cast<double>(d);
    return std::exp(-0.5 * dd * dd * (std::log(2.0) + 1.0) - 0.5 * dd * (dd - 1.0) * std::log(dd));
}

double delta_density_bound(int d) {
    require(d >= 1, "density bound: dimension must be positive");
    const double dd = static_cast<double>(d);
    return std::exp(2.0 * dd * dd - 0.5 * dd * (dd - 1.0) * std::log(dd));
}

DensityCheck check_gamma_lower(const EigenSimplexPoint& lambda) {
    require(in_gamma(lambda), "density check: point is not a member of Gamma");
    DensityCheck result{eigen_density_f(lambda), gamma_density_bound(lambda.dim()), false};
    result.pass = result.f_value >= result.bound;
    return result;
}

DensityCheck check_delta_upper(const EigenSimplexPoint& lambda) {
    require(in_delta(lambda), "density check: point is not a member of Delta");
    DensityCheck result{eigen_density_f(lambda), delta_density_bound(lambda.dim()), false};
    result.pass = result.f_value <= result.bound;
    return result;
}

McEstimate volume_ratio_mc(int d, std::int64_t samples, RngStream& rng) {
    require(d >= 2, "volume ratio: dimension must be at least 2");
    require(samples >= 1000, "volume ratio: need at least 1e3 samples");
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const HermitianMatrix s = uniform_ball_sample(d, rng);
        if (op_norm(s) <= 1.0 / static_cast<double>(d)) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

McEstimate delta_volume_fraction(int d, std::int64_t samples, RngStream& rng) {
    require(d >= 1, "volume fraction: dimension must be positive");
    require(samples >= 1000, "volume fraction: need at least 1e3 samples");
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        double sum = 0.0;
        double tn = 0.0;
        for (int j = 0; j + 1 < d; ++j) {
            const double x = rng.uniform() - 0.5;
            sum += x;
            tn += std::abs(x);
        }
        if (tn + std::abs(sum) <= 1.0) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

McEstimate gamma_volume_fraction(int d, std::int64_t samples, RngStream& rng) {
    require(d >= 1, "volume fraction: dimension must be positive");
    require(samples >= 1000, "volume fraction: need at least 1e3 samples");
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        double sum = 0.0;
        for (int j = 0; j + 1 < d; ++j) sum += 2.0 * rng.uniform() - 1.0;
        if (std::abs(sum) <= 1.0) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

MuRatioResult mu_ratio_extremes(const HardPriorParams& params, std::int64_t samples,
                                RngStream& rng) {
    require(samples >= 1, "mu ratio: need at least one pair");
    double worst = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const DensityMatrix rho = hard_prior_sample(params, rng);
        const DensityMatrix rho_prime = hard_prior_sample(params, rng);
        worst = std::max(worst, std::abs(hard_prior_log_density_gap(rho, rho_prime, params)));
    }
    const double bound = 4.0 * static_cast<double>(params.dim) * static_cast<double>(params.dim);
    return {worst, bound, worst <= bound};
}

}  // namespace tomolab
