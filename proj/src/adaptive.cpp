#include "tomolab/adaptive.hpp"

#include <cmath>

namespace tomolab {

namespace {

// Comparisons against dyadic thresholds get a small absolute slack so that
// quantities which sit exactly on a bound (an eigenvalue equal to its
// threshold, say) are not failed by the last bit of rounding.
constexpr double kDiagnosticSlack = 1e-12;

}  // namespace

SimulatedOracle::SimulatedOracle(DensityMatrix truth, std::int64_t budget, RngStream rng)
    : truth_(std::move(truth)), budget_(budget), rng_(rng) {}

Transcript SimulatedOracle::measure(const SubspaceBasis& basis, std::int64_t copies) {
    require(basis.ambient_dim() == truth_.dim(), "SimulatedOracle: basis dimension mismatch");
    require(copies >= 0, "SimulatedOracle: negative copy count");
    if (used_ + copies > budget_) {
        throw std::runtime_error("SimulatedOracle: measurement budget exhausted");
    }
    used_ += copies;

    Transcript result;
    result.outcomes.reserve(static_cast<std::size_t>(copies));
    if (basis.rank() == 0) {
        for (std::int64_t i = 0; i < copies; ++i) {
            result.outcomes.push_back({OutcomeKind::Bottom, Vector(), 0});
        }
    } else {
        ProjectedPovmSampler sampler(truth_, basis);
        for (std::int64_t i = 0; i < copies; ++i) {
            result.outcomes.push_back(sampler.sample(rng_));
        }
    }
    log_.outcomes.insert(log_.outcomes.end(), result.outcomes.begin(), result.outcomes.end());
    return result;
}

int round_count(int r, double gamma) {
    require(r >= 1, "round_count: rank must be positive");
    require(gamma > 0.0 && gamma < 1.0, "round_count: gamma out of (0,1)");
    const int t = static_cast<int>(std::ceil(std::log2(static_cast<double>(r) / gamma))) + 4;
    return std::max(t, 5);
}

AdaptiveEstimate run_adaptive(MeasurementOracle& oracle, int d, int r, double gamma, double delta,
                              std::int64_t n, const AdaptiveOptions& options) {
    require(d >= 1, "run_adaptive: dimension must be positive");
    require(r >= 1 && r <= d, "run_adaptive: rank hint out of [1, d]");
    require(delta > 0.0 && delta < 1.0, "run_adaptive: delta out of (0,1)");
    const int t = round_count(r, gamma);
    require(n >= t, "run_adaptive: need at least one copy per round");
    const std::int64_t per_round = n / t;

    BandDecomposition decomposition{d, {}, SubspaceBasis::identity(d)};
    decomposition.rounds.reserve(static_cast<std::size_t>(t));
    SubspaceBasis current = SubspaceBasis::identity(d);

    for (int j = 1; j <= t; ++j) {
        const double threshold = std::ldexp(1.0, -j);
        const int rj = current.rank();
        const Transcript outcomes = oracle.measure(current, per_round);

        if (rj == 0) {
            decomposition.rounds.push_back({threshold, current,
                                            SubspaceBasis(d, Matrix(d, 0)), RealVector(0),
                                            Matrix(0, 0), per_round, per_round});
            continue;
        }

        // Raw estimate of the compressed state in current coordinates.
        Matrix sum = Matrix::Zero(rj, rj);
        std::int64_t vectors = 0;
        for (const MeasurementOutcome& o : outcomes.outcomes) {
            if (o.kind == OutcomeKind::Bottom) continue;
            Vector compressed = current.columns().adjoint() * o.vector;
            sum.selfadjointView<Eigen::Lower>().rankUpdate(compressed, 1.0);
            ++vectors;
        }
        sum = Matrix(sum.selfadjointView<Eigen::Lower>());
        const double divisor = static_cast<double>(
            options.denominator == ProjectedDenominator::TotalCopies ? per_round
                                                                     : std::max<std::int64_t>(vectors, 1));
        Matrix sigma = hermitized(
            ((rj + 1.0) * sum - static_cast<double>(vectors) * Matrix::Identity(rj, rj)) / divisor);

        RealVector evals;
        Matrix evecs;
        hermitian_eigensystem_desc(sigma, evals, evecs);
        int selected = 0;
        while (selected < rj && evals(selected) >= threshold) {
            ++selected;
        }

        Matrix band_cols = current.columns() * evecs.leftCols(selected);
        Matrix rest_cols = current.columns() * evecs.rightCols(rj - selected);
        SubspaceBasis band(d, std::move(band_cols));
        decomposition.rounds.push_back({threshold, current, band, evals.head(selected),
                                        std::move(sigma), per_round,
                                        per_round - vectors});
        current = SubspaceBasis(d, std::move(rest_cols));
    }
    decomposition.residual_basis = current;

    DensityMatrix state = assemble_estimate(decomposition);
    if (options.mix_final_state) {
        state = mix_with_identity(state, gamma);
    }
    return {std::move(state), std::move(decomposition), per_round, gamma, r};
}

DensityMatrix assemble_estimate(const BandDecomposition& decomposition) {
    const int d = decomposition.dim;
    Matrix assembled = Matrix::Zero(d, d);
    for (const BandRound& round : decomposition.rounds) {
        if (round.band_basis.rank() == 0) continue;
        assembled += round.band_basis.columns() *
                     round.block_eigenvalues.cast<Complex>().asDiagonal() *
                     round.band_basis.columns().adjoint();
    }
    return psd_clip_normalize(HermitianMatrix(hermitized(assembled)));
}

DensityMatrix nonadaptive_baseline(MeasurementOracle& oracle, int d, std::int64_t n,
                                   double delta) {
    require(n >= 1, "nonadaptive_baseline: need at least one copy");
    require(delta > 0.0 && delta < 1.0, "nonadaptive_baseline: delta out of (0,1)");
    const Transcript outcomes = oracle.measure(SubspaceBasis::identity(d), n);
    const EstimatorReport report = h_n(outcomes, d);
    return psd_clip_normalize(report.estimate);
}

DiagnosticsReport diagnostics_check(const DensityMatrix& rho_true,
                                    const AdaptiveEstimate& estimate) {
    const BandDecomposition& decomposition = estimate.decomposition;
    require(rho_true.dim() == decomposition.dim, "diagnostics_check: dimension mismatch");
    const int t = static_cast<int>(decomposition.rounds.size());

    DiagnosticsReport report;
    report.rounds.reserve(decomposition.rounds.size());
    bool all = true;
    for (int j = 1; j <= t; ++j) {
        const BandRound& round = decomposition.rounds[static_cast<std::size_t>(j - 1)];
        RoundDiagnostics diag{};
        diag.round = j;
        diag.threshold = round.threshold;

        const Matrix compressed_true = hermitized(round.gamma_basis.columns().adjoint() *
                                                  rho_true.raw() * round.gamma_basis.columns());
        const bool empty = round.gamma_basis.rank() == 0;
        diag.gamma_rho_op = empty ? 0.0 : op_norm_raw(compressed_true);
        diag.band_cap = diag.gamma_rho_op <= 2.0 * round.threshold + kDiagnosticSlack;

        diag.sigma_op = empty ? 0.0 : op_norm_raw(round.sigma_compressed);
        diag.sigma_cap = diag.sigma_op <= 4.0 * round.threshold + kDiagnosticSlack;

        diag.band_rank = round.band_basis.rank();
        diag.rank_ok = diag.band_rank <= estimate.rank_hint;

        if (diag.band_rank > 0) {
            const Matrix band_true = hermitized(round.band_basis.columns().adjoint() *
                                                rho_true.raw() * round.band_basis.columns());
            const RealVector evals = hermitian_eigenvalues_desc(band_true);
            diag.band_min_eig = evals(evals.size() - 1);
            diag.band_floor = diag.band_min_eig >= 0.5 * round.threshold - kDiagnosticSlack;
        } else {
            diag.band_min_eig = 0.0;
            diag.band_floor = true;
        }

        diag.gamma_j = empty ? 0.0 : op_norm_raw(round.sigma_compressed - compressed_true);
        diag.gamma_j_ratio = diag.gamma_j * std::exp2(0.5 * (j + t));
        diag.alpha_j = empty ? 0.0 : compressed_true.trace().real();

        all = all && diag.band_cap && diag.sigma_cap && diag.band_floor && diag.rank_ok;
        report.rounds.push_back(diag);
    }

    const SubspaceBasis& residual = decomposition.residual_basis;
    report.residual_mass =
        residual.rank() == 0
            ? 0.0
            : (residual.columns().adjoint() * rho_true.raw() * residual.columns()).trace().real();
    report.residual_ok = report.residual_mass <= 0.5 * estimate.gamma_target + kDiagnosticSlack;
    report.all_pass = all && report.residual_ok;
    return report;
}

}  // namespace tomolab
