#pragma once

// Inefficient photodetection: stochastic master equation for the conditional
// density matrix, Bernoulli thinning of pure-state emission records, and the
// detection-statistics helpers.

#include "fermimon/density_matrix.hpp"
#include "fermimon/observables.hpp"
#include "fermimon/rng.hpp"
#include "fermimon/trajectory.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace fermimon {

/// G[A]rho = A rho A^dagger / Tr[A rho A^dagger] - rho
CMatrix superop_G(const SparseOperator& A, const DensityMatrix& rho);
/// H[A]rho = A rho + rho A^dagger - Tr[A rho + rho A^dagger] rho
CMatrix superop_H(const SparseOperator& A, const DensityMatrix& rho);
/// D[A]rho = A rho A^dagger - (A^dagger A rho + rho A^dagger A) / 2
CMatrix superop_D(const SparseOperator& A, const DensityMatrix& rho);

/// Deterministic part of the conditional evolution at efficiency eta, in linear
/// (trace non-preserving) form:
///   L(rho) = -i (H_eff rho - rho H_eff^dagger) + (1 - eta) sum_m c_m rho c_m^dagger.
class SmeGenerator {
public:
    SmeGenerator(const SparseOperator& H0, std::vector<SparseOperator> channels, double efficiency);

    CMatrix apply(const CMatrix& rho) const;
    /// One RK4 step of the linear flow followed by trace normalization and hermitization.
    void rk4(DensityMatrix& rho, double dt) const;

    const std::vector<SparseOperator>& channels() const noexcept { return channels_; }
    double efficiency() const noexcept { return eta_; }
    double hamiltonian_norm() const noexcept { return h_norm_; }
    double decay_norm() const noexcept { return c_norm_; }

private:
    SparseOperator generator_;  ///< -i H_eff
    std::vector<SparseOperator> channels_;
    double eta_;
    double h_norm_;
    double c_norm_;
};

struct SmeStep {
    int dN = 0;
    int channel = -1;
};

/// One Ito step: deterministic update over dt, then a detection with
/// probability eta Tr[c rho c^dagger] dt (per channel) applies rho -> c rho c^dagger / Tr.
/// Throws StepSizeError if dt ||H0|| > 1e-2 or dt eta Tr[c rho c^dagger] > 1e-2.
SmeStep step_sme(DensityMatrix& rho, const SmeGenerator& gen, double dt, Rng& rng);

struct SmeOptions {
    double t_max = 10.0;
    double snapshot_dt = 0.05;
    double dt = 0.0;  ///< 0 picks the largest step allowed by the preconditions
};

struct SmeProblem {
    std::shared_ptr<const FockBasis> basis;
    SparseOperator hamiltonian;
    std::vector<SparseOperator> channels;
    std::shared_ptr<const ObservableSet> observables;
    DensityMatrix initial;
    double efficiency = 1.0;
};

/// Step size used by run_sme for the given options.
double sme_step_size(const SmeGenerator& gen, const SmeOptions& opts);

/// Conditional density-matrix record; `purity` holds Tr[rho^2] per snapshot.
TrajectoryRecord run_sme(const SmeProblem& problem, const SmeOptions& opts, std::uint64_t master_seed,
                         std::size_t index = 0);

/// Same evolution with detections forced at the given times instead of sampled.
TrajectoryRecord run_sme_driven(const SmeProblem& problem, const SmeOptions& opts,
                                const std::vector<JumpEvent>& schedule);

/// Final density matrix of a run (for ensemble comparisons).
DensityMatrix sme_final_state(const SmeProblem& problem, const SmeOptions& opts, std::uint64_t master_seed,
                              std::size_t index = 0);

struct DetectionStats {
    long emitted = 0;   ///< N_e
    long detected = 0;  ///< N_ph
    double efficiency = 1.0;

    double expected_mean() const { return efficiency * static_cast<double>(emitted); }
    double expected_variance() const { return efficiency * (1.0 - efficiency) * static_cast<double>(emitted); }
    /// sqrt(eta / (1 - eta)) sqrt(N_e); infinite at eta = 1.
    double snr() const;
};

struct ThinnedRun {
    TrajectoryRecord record;
    DetectionStats stats;
};

/// Pure-state unraveling with every emission counted and each one detected
/// independently with probability eta.
ThinnedRun thinning_mode(const TrajectoryProblem& problem, const EvolutionOptions& opts, double efficiency,
                         std::uint64_t master_seed, std::size_t index = 0);

/// Redraws the detection flags of an existing record and rebuilds N_ph(t).
TrajectoryRecord thin_record(const TrajectoryRecord& record, double efficiency, Rng& rng);

/// J / (gamma N^2) clamped to [0, 1].
double min_efficiency(double J, double gamma, double atoms);

}  // namespace fermimon
