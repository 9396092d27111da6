#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tomolab/linalg.hpp"
#include "tomolab/measurement.hpp"
#include "tomolab/rng.hpp"
#include "tomolab/states.hpp"

using namespace tomolab;

namespace {

// Independent route to the spherical-measurement law: propose Haar vectors
// and accept with probability <v|rho|v> / lambda_max (envelope d lambda_max
// over the target density d <v|rho|v>).
Vector rejection_sample(const DensityMatrix& rho, double lambda_max, RngStream& rng) {
    const int d = rho.dim();
    for (;;) {
        const Vector v = haar_pure(d, rng);
        const double p = (v.adjoint() * rho.raw() * v)(0, 0).real();
        if (rng.uniform() * lambda_max <= p) return v;
    }
}

double ks_two_sample(std::vector<double>& a, std::vector<double>& b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double stat = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        stat = std::max(stat, std::abs(i / na - j / nb));
    }
    return stat;
}

}  // namespace

TEST_CASE("uniform sampler yields unit vectors; d=1 is the unique state") {
    RngStream rng(301);
    const DensityMatrix rho = random_state(3, {0.6, 0.3, 0.1}, rng);
    const UniformPovmSampler sampler(rho);
    for (int i = 0; i < 200; ++i) {
        const Vector v = sampler.sample(rng);
        REQUIRE(v.size() == 3);
        REQUIRE(std::abs(v.norm() - 1.0) < 1e-12);
    }

    const DensityMatrix one = DensityMatrix::maximally_mixed(1);
    const MeasurementOutcome o = sample_uniform_povm(one, rng);
    CHECK(o.kind == OutcomeKind::Vector);
    CHECK(std::abs(std::abs(o.vector(0)) - 1.0) < 1e-12);
    CHECK(o.subspace_rank == 1);
}

TEST_CASE("uniform sampler agrees with the rejection oracle (two-sample KS)") {
    // Compare the law of |<w, v>|^2 for a fixed generic probe under the exact
    // sampler vs independent rejection sampling, at d = 3 and d = 4.
    RngStream rng(307);
    for (int d : {3, 4}) {
        std::vector<double> spec(d);
        double sum = 0.0;
        for (double& s : spec) sum += (s = rng.exponential());
        for (double& s : spec) s /= sum;
        std::sort(spec.rbegin(), spec.rend());
        const DensityMatrix rho = random_state(d, spec, rng);
        const Vector w = haar_pure(d, rng);

        const UniformPovmSampler sampler(rho);
        const double lambda_max = hermitian_eigenvalues_desc(rho.raw())(0);
        const int n = 3000;
        std::vector<double> exact, rejected;
        for (int i = 0; i < n; ++i) {
            exact.push_back(std::norm(w.dot(sampler.sample(rng))));
            rejected.push_back(std::norm(w.dot(rejection_sample(rho, lambda_max, rng))));
        }
        const double stat = ks_two_sample(exact, rejected);
        const double critical = 1.6276236307187293 * std::sqrt(2.0 / n);  // alpha = 0.01
        CHECK(stat < critical);
    }
}

TEST_CASE("uniform sampler first moments match closed forms") {
    RngStream rng(311);
    const int d = 4, n = 20000;

    // rho = |u><u|: |<u,v>|^2 ~ Beta(2, d-1), mean 2/(d+1).
    const Vector u = haar_pure(d, rng);
    const DensityMatrix pure(HermitianMatrix(hermitized(u * u.adjoint())));
    const UniformPovmSampler pure_sampler(pure);
    double mean_pure = 0.0;
    for (int i = 0; i < n; ++i) mean_pure += std::norm(u.dot(pure_sampler.sample(rng)));
    mean_pure /= n;
    // Beta(2,3) has sd ~ 0.16; 4 sigma of the MC mean is ~ 0.0046.
    CHECK(std::abs(mean_pure - 2.0 / (d + 1)) < 0.005);

    // rho = I/d: outcome is Haar, |<u,v>|^2 has mean 1/d.
    const UniformPovmSampler mixed_sampler(DensityMatrix::maximally_mixed(d));
    double mean_mixed = 0.0;
    for (int i = 0; i < n; ++i) mean_mixed += std::norm(u.dot(mixed_sampler.sample(rng)));
    mean_mixed /= n;
    CHECK(std::abs(mean_mixed - 1.0 / d) < 0.006);
}

TEST_CASE("unbiasedness kernel: (d+1)|v><v| - I averages to rho") {
    // The per-sample Frobenius second moment is d^2 + d - 1 - tr(rho^2), so
    // the plain 4/sqrt(n) band is roomy at d=2 and the dimension-scaled
    // 4d/sqrt(n) band is roomy at every d; check one of each.
    RngStream rng(313);
    const std::int64_t n = 20000;
    {
        const int d = 2;
        const DensityMatrix rho = random_state(d, {0.75, 0.25}, rng);
        const UniformPovmSampler sampler(rho);
        Matrix acc = Matrix::Zero(d, d);
        for (std::int64_t i = 0; i < n; ++i) {
            const Vector v = sampler.sample(rng);
            acc += (d + 1.0) * (v * v.adjoint()) - Matrix::Identity(d, d);
        }
        acc /= static_cast<double>(n);
        CHECK((acc - rho.raw()).norm() <= 4.0 / std::sqrt(static_cast<double>(n)));
    }
    {
        const int d = 4;
        const DensityMatrix rho = random_state(d, {0.4, 0.3, 0.2, 0.1}, rng);
        const UniformPovmSampler sampler(rho);
        Matrix acc = Matrix::Zero(d, d);
        for (std::int64_t i = 0; i < n; ++i) {
            const Vector v = sampler.sample(rng);
            acc += (d + 1.0) * (v * v.adjoint()) - Matrix::Identity(d, d);
        }
        acc /= static_cast<double>(n);
        CHECK((acc - rho.raw()).norm() <= 4.0 * d / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("projected sampler: factorization cases") {
    RngStream rng(317);

    // Pi = I never yields Bottom.
    const DensityMatrix rho2 = random_state(2, {0.75, 0.25}, rng);
    const ProjectedPovmSampler full(rho2, SubspaceBasis::identity(2));
    CHECK(full.alpha() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 500; ++i) REQUIRE(full.sample(rng).kind == OutcomeKind::Vector);

    // Pi orthogonal to supp(rho) always yields Bottom.
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    Matrix e2 = Matrix::Zero(2, 1);
    e2(1, 0) = 1.0;
    const DensityMatrix pure1(HermitianMatrix(Matrix(e1 * e1.adjoint())));
    const ProjectedPovmSampler ortho(pure1, SubspaceBasis(2, e2));
    CHECK(ortho.alpha() == doctest::Approx(0.0).epsilon(1e-12));
    for (int i = 0; i < 200; ++i) {
        const MeasurementOutcome o = ortho.sample(rng);
        REQUIRE(o.kind == OutcomeKind::Bottom);
        REQUIRE(o.subspace_rank == 1);
    }

    // Rank 0 basis is rejected.
    CHECK_THROWS_AS(ProjectedPovmSampler(rho2, SubspaceBasis(2, Matrix::Zero(2, 0))),
                    std::invalid_argument);
}

TEST_CASE("projected sampler: d=2 diagonal example") {
    // rho = diag(3/4, 1/4), Pi = |0><0|: Bottom probability 1/4 and the
    // vector outcome is e1 up to phase.
    RngStream rng(331);
    Matrix d2 = Matrix::Zero(2, 2);
    d2(0, 0) = 0.75;
    d2(1, 1) = 0.25;
    const DensityMatrix rho{HermitianMatrix(d2)};
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    const ProjectedPovmSampler sampler(rho, SubspaceBasis(2, e1));
    CHECK(sampler.alpha() == doctest::Approx(0.75).epsilon(1e-12));

    const int n = 10000;
    int bottoms = 0;
    for (int i = 0; i < n; ++i) {
        const MeasurementOutcome o = sampler.sample(rng);
        if (o.kind == OutcomeKind::Bottom) {
            ++bottoms;
        } else {
            REQUIRE(std::abs(std::abs(o.vector(0)) - 1.0) < 1e-12);
            REQUIRE(std::abs(o.vector(1)) < 1e-12);
        }
    }
    const double p = 0.25;
    const double band = 4.0 * std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(bottoms / static_cast<double>(n) - p) <= band);
}

TEST_CASE("projected sampler: outcomes stay in the subspace; mean reproduces the compression") {
    RngStream rng(337);
    const int d = 4, r = 2;
    const DensityMatrix rho = random_state(d, {0.4, 0.3, 0.2, 0.1}, rng);
    // Random rank-2 subspace from a Haar unitary's leading columns.
    const Matrix q = haar_unitary(d, rng).leftCols(r);
    const SubspaceBasis basis(d, q);
    const Matrix proj = basis.projector();
    const Matrix compressed = proj * rho.raw() * proj;

    const ProjectedPovmSampler sampler(rho, basis);
    CHECK(sampler.alpha() ==
          doctest::Approx((q.adjoint() * rho.raw() * q).trace().real()).epsilon(1e-12));

    const std::int64_t n = 20000;
    Matrix acc = Matrix::Zero(d, d);
    std::int64_t bottoms = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const MeasurementOutcome o = sampler.sample(rng);
        if (o.kind == OutcomeKind::Bottom) {
            ++bottoms;
            continue;
        }
        REQUIRE(o.subspace_rank == r);
        REQUIRE(((Matrix::Identity(d, d) - proj) * o.vector).norm() < 1e-10);
        acc += (r + 1.0) * (o.vector * o.vector.adjoint()) - proj;
    }
    acc /= static_cast<double>(n);
    CHECK((acc - compressed).norm() <= 4.0 / std::sqrt(static_cast<double>(n)));

    const double p_bottom = 1.0 - sampler.alpha();
    const double band = 4.0 * std::sqrt(p_bottom * (1 - p_bottom) / static_cast<double>(n));
    CHECK(std::abs(bottoms / static_cast<double>(n) - p_bottom) <= band);
}

TEST_CASE("moment_check matches the closed forms and the universal cap") {
    RngStream rng(347);
    const int d = 4;
    const std::int64_t samples = 20000;
    const Vector u = haar_pure(d, rng);
    const DensityMatrix pure(HermitianMatrix(hermitized(u * u.adjoint())));
    const DensityMatrix mixed = DensityMatrix::maximally_mixed(d);

    for (int k = 1; k <= 4; ++k) {
        const MomentCheckResult on_pure = moment_check(k, pure, u, samples, rng);
        CHECK(std::abs(on_pure.estimate - exact_moment_pure(d, k)) <= 3.0 * on_pure.std_error);
        CHECK(on_pure.estimate <= std::pow(k + 1.0, k + 1.0) + 3.0 * on_pure.std_error);

        const MomentCheckResult on_mixed = moment_check(k, mixed, u, samples, rng);
        CHECK(std::abs(on_mixed.estimate - exact_moment_mixed(d, k)) <= 3.0 * on_mixed.std_error);
        CHECK(on_mixed.estimate <= std::pow(k + 1.0, k + 1.0) + 3.0 * on_mixed.std_error);
    }

    CHECK_THROWS_AS(moment_check(0, mixed, u, samples, rng), std::invalid_argument);
    CHECK_THROWS_AS(moment_check(9, mixed, u, samples, rng), std::invalid_argument);
    CHECK_THROWS_AS(moment_check(1, mixed, u, 999, rng), std::invalid_argument);
}

TEST_CASE("exact moment tables") {
    // Reference values from the python oracle (Beta-moment and factorial
    // routes agree to 1e-10 there).
    const double pure[3][4] = {{2.0, 4.5, 10.800000000000001, 27.0},
                               {2.0, 5.0, 14.285714285714286, 44.642857142857146},
                               {2.0, 5.4000000000000004, 17.672727272727272, 66.272727272727266}};
    const double mixed[3][4] = {{1.5, 3.0, 6.75, 16.199999999999999},
                                {1.25, 2.5, 6.25, 17.857142857142858},
                                {1.125, 2.25, 6.0750000000000002, 19.881818181818183}};
    const int dims[3] = {2, 4, 8};
    for (int i = 0; i < 3; ++i) {
        for (int k = 1; k <= 4; ++k) {
            CHECK(exact_moment_pure(dims[i], k) ==
                  doctest::Approx(pure[i][k - 1]).epsilon(1e-12));
            CHECK(exact_moment_mixed(dims[i], k) ==
                  doctest::Approx(mixed[i][k - 1]).epsilon(1e-12));
        }
    }
}

TEST_CASE("sampler clips tiny negative eigenvalues before sampling") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 0.5 + 5e-11;
    m(1, 1) = 0.5 + 5e-11;
    m(2, 2) = -1e-10;
    const DensityMatrix rho{HermitianMatrix(m)};
    RngStream rng(349);
    const UniformPovmSampler sampler(rho);
    for (int i = 0; i < 100; ++i) {
        const Vector v = sampler.sample(rng);
        REQUIRE(std::abs(v.norm() - 1.0) < 1e-12);
    }
}
