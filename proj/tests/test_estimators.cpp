#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tomolab/estimators.hpp"
#include "tomolab/linalg.hpp"
#include "tomolab/measurement.hpp"
#include "tomolab/rng.hpp"
#include "tomolab/states.hpp"

using namespace tomolab;

namespace {

Transcript uniform_transcript(const DensityMatrix& rho, std::int64_t n, RngStream& rng) {
    const UniformPovmSampler sampler(rho);
    Transcript t;
    t.outcomes.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        t.outcomes.push_back({OutcomeKind::Vector, sampler.sample(rng), rho.dim()});
    return t;
}

}  // namespace

TEST_CASE("h_n on a single basis outcome is exact") {
    Vector e1 = Vector::Zero(2);
    e1(0) = 1.0;
    Transcript t;
    t.outcomes.push_back({OutcomeKind::Vector, e1, 2});
    const EstimatorReport report = h_n(t, 2);
    // (d+1)|e1><e1| - I = diag(2, -1).
    CHECK(report.estimate.raw()(0, 0).real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(report.estimate.raw()(1, 1).real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(report.estimate.raw()(0, 1)) < 1e-14);
    CHECK(report.copies_used == 1);
    CHECK(report.subspace_rank == 2);
    CHECK(report.bottom_count == 0);
}

TEST_CASE("h_n always has unit trace") {
    RngStream rng(401);
    for (int d : {2, 5}) {
        const DensityMatrix rho = DensityMatrix::maximally_mixed(d);
        const Transcript t = uniform_transcript(rho, 257, rng);
        const EstimatorReport report = h_n(t, d);
        CHECK(report.estimate.trace_real() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("h_n rejects empty and Bottom-bearing transcripts") {
    Transcript empty;
    CHECK_THROWS_AS(h_n(empty, 2), std::invalid_argument);
    Transcript with_bottom;
    with_bottom.outcomes.push_back({OutcomeKind::Bottom, Vector(), 2});
    CHECK_THROWS_AS(h_n(with_bottom, 2), std::invalid_argument);
}

TEST_CASE("h_n concentrates around the true state") {
    RngStream rng(409);
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.75;
    m(1, 1) = 0.25;
    const DensityMatrix rho{HermitianMatrix(m)};
    const std::int64_t n = 100000;
    const Transcript t = uniform_transcript(rho, n, rng);
    const EstimatorReport report = h_n(t, 2);
    CHECK((report.estimate.raw() - rho.raw()).norm() < 0.02);
}

TEST_CASE("h_n_projected reduces to h_n when the subspace is everything") {
    RngStream rng(419);
    const DensityMatrix rho = random_state(3, {0.5, 0.3, 0.2}, rng);
    const Transcript t = uniform_transcript(rho, 500, rng);
    const EstimatorReport plain = h_n(t, 3);
    const EstimatorReport projected = h_n_projected(t, SubspaceBasis::identity(3));
    CHECK((plain.estimate.raw() - projected.estimate.raw()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(projected.bottom_count == 0);
}

TEST_CASE("h_n_projected is zero on an all-Bottom transcript") {
    Transcript t;
    for (int i = 0; i < 10; ++i) t.outcomes.push_back({OutcomeKind::Bottom, Vector(), 1});
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    const EstimatorReport report = h_n_projected(t, SubspaceBasis(2, e1));
    CHECK(report.estimate.frobenius() == 0.0);
    CHECK(report.bottom_count == 10);
    CHECK(report.copies_used == 10);
}

TEST_CASE("h_n_projected concentrates around the compressed state") {
    RngStream rng(421);
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.75;
    m(1, 1) = 0.25;
    const DensityMatrix rho{HermitianMatrix(m)};
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    const SubspaceBasis basis(2, e1);
    const ProjectedPovmSampler sampler(rho, basis);
    Transcript t;
    const std::int64_t n = 100000;
    for (std::int64_t i = 0; i < n; ++i) t.outcomes.push_back(sampler.sample(rng));
    const EstimatorReport report = h_n_projected(t, basis);
    Matrix target = Matrix::Zero(2, 2);
    target(0, 0) = 0.75;
    CHECK((report.estimate.raw() - target).norm() < 0.02);
    // Denominator sensitivity: VectorCount rescales by n / #vectors exactly.
    const EstimatorReport by_vectors =
        h_n_projected(t, basis, ProjectedDenominator::VectorCount);
    const double ratio = static_cast<double>(n) / static_cast<double>(n - report.bottom_count);
    CHECK((by_vectors.estimate.raw() - ratio * report.estimate.raw()).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("h_n_projected rejects outcomes outside the subspace") {
    Vector e2 = Vector::Zero(2);
    e2(1) = 1.0;
    Transcript t;
    t.outcomes.push_back({OutcomeKind::Vector, e2, 1});
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    CHECK_THROWS_AS(h_n_projected(t, SubspaceBasis(2, e1)), std::invalid_argument);
}

TEST_CASE("predicted_error_bound examples and shape") {
    // d=8, delta=e^-8: x = (8+8)/n; at n=1600, x = 0.01 and the sqrt branch
    // gives exactly 0.1.
    const double delta = std::exp(-8.0);
    CHECK(predicted_error_bound(8, 1600, delta, 1.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(predicted_error_bound(8, 1600, delta, 2.5) == doctest::Approx(0.25).epsilon(1e-12));

    // Below one effective sample per parameter the linear branch takes over:
    // x >= 1 iff n <= d + log(1/delta) = 16.
    CHECK(predicted_error_bound(8, 4, delta, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(predicted_error_bound(8, 16, delta, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

    // Monotone nonincreasing in n.
    double prev = predicted_error_bound(8, 1, 0.05, 1.0);
    for (std::int64_t n : {2, 4, 8, 100, 10000, 1000000}) {
        const double cur = predicted_error_bound(8, n, 0.05, 1.0);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }

    CHECK_THROWS_AS(predicted_error_bound(8, 0, 0.05, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(predicted_error_bound(8, 100, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(predicted_error_bound(8, 100, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("predicted_projected_bound examples") {
    const double delta = std::exp(-8.0);
    // alpha = 1 recovers the plain bound; alpha = 1/4 halves the sqrt branch.
    CHECK(predicted_projected_bound(1.0, 8, 1600, delta, 1.0) ==
          doctest::Approx(predicted_error_bound(8, 1600, delta, 1.0)).epsilon(1e-14));
    CHECK(predicted_projected_bound(0.25, 8, 1600, delta, 1.0) ==
          doctest::Approx(0.05).epsilon(1e-12));
    // alpha = 0 leaves only the linear term.
    CHECK(predicted_projected_bound(0.0, 8, 1600, delta, 1.0) ==
          doctest::Approx(0.01).epsilon(1e-12));
    CHECK_THROWS_AS(predicted_projected_bound(-0.1, 8, 1600, delta, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(predicted_projected_bound(1.1, 8, 1600, delta, 1.0), std::invalid_argument);
}
