#include "tomolab/estimators.hpp"

#include <cmath>

namespace tomolab {

EstimatorReport h_n(const Transcript& outcomes, int d) {
    const std::int64_t n = static_cast<std::int64_t>(outcomes.size());
    require(n >= 1, "h_n: empty transcript");
    Matrix sum = Matrix::Zero(d, d);
    for (const MeasurementOutcome& o : outcomes.outcomes) {
        require(o.kind == OutcomeKind::Vector, "h_n: Bottom outcome in transcript");
        require(o.vector.size() == d, "h_n: outcome dimension mismatch");
        sum.selfadjointView<Eigen::Lower>().rankUpdate(o.vector, 1.0);
    }
    sum = Matrix(sum.selfadjointView<Eigen::Lower>());
    Matrix est = ((d + 1.0) / static_cast<double>(n)) * sum - Matrix::Identity(d, d);
    return {HermitianMatrix(hermitized(est)), n, d, 0, std::nullopt};
}

EstimatorReport h_n_projected(const Transcript& outcomes, const SubspaceBasis& basis,
                              ProjectedDenominator denom) {
    const std::int64_t n = static_cast<std::int64_t>(outcomes.size());
    require(n >= 1, "h_n_projected: empty transcript");
    const int d = basis.ambient_dim();
    const int r = basis.rank();
    const Matrix& b = basis.columns();

    Matrix sum = Matrix::Zero(r, r);
    std::int64_t vectors = 0;
    for (const MeasurementOutcome& o : outcomes.outcomes) {
        if (o.kind == OutcomeKind::Bottom) continue;
        require(o.vector.size() == d, "h_n_projected: outcome dimension mismatch");
        Vector compressed = b.adjoint() * o.vector;
        require(std::abs(compressed.norm() - 1.0) <= 1e-8,
                "h_n_projected: outcome vector outside the subspace");
        sum.selfadjointView<Eigen::Lower>().rankUpdate(compressed, 1.0);
        ++vectors;
    }
    const std::int64_t bottoms = n - vectors;

    Matrix est = Matrix::Zero(d, d);
    if (vectors > 0) {
        sum = Matrix(sum.selfadjointView<Eigen::Lower>());
        const double divisor =
            static_cast<double>(denom == ProjectedDenominator::TotalCopies ? n : vectors);
        Matrix compressed_est =
            ((r + 1.0) * sum - static_cast<double>(vectors) * Matrix::Identity(r, r)) / divisor;
        est = b * compressed_est * b.adjoint();
    }
    return {HermitianMatrix(hermitized(est)), n, r, bottoms, std::nullopt};
}

double predicted_error_bound(int d, std::int64_t n, double delta, double c) {
    require(d >= 1 && n >= 1, "predicted_error_bound: d and n must be positive");
    require(delta > 0.0 && delta < 1.0, "predicted_error_bound: delta out of (0,1)");
    const double x = (d + std::log(1.0 / delta)) / static_cast<double>(n);
    return c * std::max(x, std::sqrt(x));
}

double predicted_projected_bound(double alpha, int d, std::int64_t n, double delta, double c) {
    require(alpha >= 0.0 && alpha <= 1.0, "predicted_projected_bound: alpha out of [0,1]");
    require(d >= 1 && n >= 1, "predicted_projected_bound: d and n must be positive");
    require(delta > 0.0 && delta < 1.0, "predicted_projected_bound: delta out of (0,1)");
    const double x = (d + std::log(1.0 / delta)) / static_cast<double>(n);
    return c * std::max(x, std::sqrt(alpha * x));
}

}  // namespace tomolab
