#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tomolab/estimators.hpp"
#include "tomolab/linalg.hpp"
#include "tomolab/measurement.hpp"
#include "tomolab/rng.hpp"
#include "tomolab/states.hpp"

namespace tomolab {

// One eigenvalue band extracted by the multi-round estimator. gamma_basis
// spans the subspace still under consideration at the start of the round;
// band_basis spans the eigenvectors of the round's raw estimate whose
// eigenvalues reached the threshold. sigma_compressed stores that raw
// estimate in gamma_basis coordinates.
struct BandRound {
    double threshold;
    SubspaceBasis gamma_basis;
    SubspaceBasis band_basis;
    RealVector block_eigenvalues;
    Matrix sigma_compressed;
    std::int64_t copies;
    std::int64_t bottom_count;
};

// Ordered bands plus the residual subspace left after the last round. Band
// bases are mutually orthogonal and orthogonal to the residual by
// construction (each round splits the previous subspace).
struct BandDecomposition {
    int dim;
    std::vector<BandRound> rounds;
    SubspaceBasis residual_basis;
};

struct AdaptiveEstimate {
    DensityMatrix state;
    BandDecomposition decomposition;
    std::int64_t copies_per_round;
    double gamma_target;
    int rank_hint;
};

// Source of projected-measurement outcomes against a caller-chosen subspace,
// with budget accounting. In simulation it wraps a hidden true state.
class MeasurementOracle {
public:
    virtual ~MeasurementOracle() = default;

    // Yields `copies` outcomes measured against `basis`. A rank-0 basis is
    // legal: the measurement degenerates to the single complement element, so
    // every copy is consumed and reported as Bottom.
    virtual Transcript measure(const SubspaceBasis& basis, std::int64_t copies) = 0;

    virtual std::int64_t copies_used() const = 0;
    virtual std::int64_t budget() const = 0;
};

class SimulatedOracle : public MeasurementOracle {
public:
    SimulatedOracle(DensityMatrix truth, std::int64_t budget, RngStream rng);

    Transcript measure(const SubspaceBasis& basis, std::int64_t copies) override;
    std::int64_t copies_used() const override { return used_; }
    std::int64_t budget() const override { return budget_; }

    // Every outcome handed out so far, in order.
    const Transcript& log() const { return log_; }

private:
    DensityMatrix truth_;
    std::int64_t budget_;
    std::int64_t used_ = 0;
    RngStream rng_;
    Transcript log_;
};

struct AdaptiveOptions {
    // Mix the final state toward I/d by the target infidelity (off by
    // default; floors the smallest eigenvalue for downstream likelihoods).
    bool mix_final_state = false;
    ProjectedDenominator denominator = ProjectedDenominator::TotalCopies;
};

// Number of rounds t = max(ceil(log2(r / gamma)) + 4, 5).
int round_count(int r, double gamma);

// Multi-round band estimator: round j measures floor(n/t) copies against the
// remaining subspace, estimates the compressed state, peels off eigenvectors
// with eigenvalue at least 2^-j, and recurses on the complement. The final
// state is the assembled block-diagonal estimate, clipped and normalized.
AdaptiveEstimate run_adaptive(MeasurementOracle& oracle, int d, int r, double gamma, double delta,
                              std::int64_t n, const AdaptiveOptions& options = {});

// sum_j P_j sigma_j P_j, clipped to PSD and normalized to trace 1.
DensityMatrix assemble_estimate(const BandDecomposition& decomposition);

// Plain full-space estimate from n spherical-measurement copies, clipped and
// normalized. The nonadaptive comparison arm.
DensityMatrix nonadaptive_baseline(MeasurementOracle& oracle, int d, std::int64_t n, double delta);

// Per-round checks evaluated against the true state (simulation only):
//   band_cap:    ||G_j rho G_j||_op <= 2^-(j-1)
//   sigma_cap:   ||sigma_j||_op    <= 2^-(j-2)
//   band_floor:  min eig of B_j^dag rho B_j >= 2^-(j+1)   (vacuous at rank 0)
//   rank:        rank(P_j) <= r
// plus the residual check tr(G_{t+1} rho G_{t+1}) <= gamma / 2. gamma_j is
// the op-norm estimation error of round j; its rescaling by 2^((j+t)/2) is
// reported but not asserted (the hidden constant is unknown).
struct RoundDiagnostics {
    int round;
    double threshold;
    double gamma_rho_op;
    bool band_cap;
    double sigma_op;
    bool sigma_cap;
    double band_min_eig;
    bool band_floor;
    int band_rank;
    bool rank_ok;
    double gamma_j;
    double gamma_j_ratio;
    double alpha_j;
};

struct DiagnosticsReport {
    std::vector<RoundDiagnostics> rounds;
    double residual_mass;
    bool residual_ok;
    bool all_pass;
};

DiagnosticsReport diagnostics_check(const DensityMatrix& rho_true, const AdaptiveEstimate& estimate);

}  // namespace tomolab
