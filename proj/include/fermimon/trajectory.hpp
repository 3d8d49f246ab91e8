#pragma once

// Quantum-jump trajectories. Between jumps the state follows
// d|psi>/dt = -i H_eff |psi>, H_eff = H0 - (i/2) sum_m c_m^dagger c_m, so that
// d<psi|psi>/dt = -<C> with C = sum_m c_m^dagger c_m.

#include "fermimon/fock.hpp"
#include "fermimon/observables.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fermimon {

enum class Integrator {
    Krylov,        ///< adaptive Arnoldi exponential
    DormandPrince  ///< adaptive Runge-Kutta 5(4)
};

std::string to_string(Integrator m);
Integrator integrator_from_string(const std::string& s);

struct EvolutionOptions {
    double t_max = 10.0;
    double snapshot_dt = 0.05;
    double rtol = 1e-8;       ///< local error relative to the state norm
    double jump_tol = 1e-10;  ///< |norm^2 - r| at a located jump
    double initial_step = 1e-2;
    double min_step = 1e-12;
    Integrator integrator = Integrator::Krylov;
    std::optional<long> max_jumps;  ///< stop once this many emissions occurred
};

/// Adaptive propagation of d|psi>/dt = -i H_eff |psi>.
class Propagator {
public:
    Propagator(const SparseOperator& H0, const std::vector<SparseOperator>& channels, double rtol = 1e-8,
               double min_step = 1e-12, double initial_step = 1e-2, Integrator method = Integrator::Krylov);

    /// C = sum_m c_m^dagger c_m
    const SparseOperator& decay() const noexcept { return decay_; }
    Integrator method() const noexcept { return method_; }

    /// Deterministic evolution of an (unnormalized) state over dt.
    void advance(CVector& psi, double dt);

    struct JumpSearch {
        bool jumped = false;
        double elapsed = 0.0;
    };

    /// Evolves until ||psi||^2 drops to r or `horizon` elapses, whichever is first.
    JumpSearch advance_to_threshold(CVector& psi, double r, double horizon, double tol = 1e-10);

private:
    // Runge-Kutta route
    double step(const CVector& x, double h, CVector& out);
    double accepted_step(CVector& psi, double h_max, CVector& next, double& h);
    double locate(const CVector& start, double h, double r, double tol, CVector& out);
    void rk_advance(CVector& psi, double dt);
    JumpSearch rk_threshold(CVector& psi, double r, double horizon, double tol);

    // Krylov route
    void arnoldi(const CVector& psi, double h_target, double r);
    double krylov_error(double h) const;
    double krylov_span(double h_want) const;
    CVector krylov_coefficients(double tau) const;
    void krylov_assemble(const CVector& y, CVector& out) const;
    void krylov_advance(CVector& psi, double dt);
    JumpSearch krylov_threshold(CVector& psi, double r, double horizon, double tol);

    SparseOperator generator_;  ///< -i H_eff
    SparseOperator decay_;
    Integrator method_;
    double rtol_;
    double min_step_;
    double hint_;
    double scale_ = 0.0;
    std::vector<CVector> k_;

    std::vector<CVector> basis_;
    CMatrix hess_;
    int m_ = 0;
    double beta_ = 0.0;
    bool exact_ = false;
};

/// exp(-i H_eff dt) |psi> via the adaptive integrator.
StateVector evolve_nonhermitian(const StateVector& psi, const SparseOperator& H0,
                                const std::vector<SparseOperator>& jumps, double dt, double tol = 1e-8,
                                Integrator method = Integrator::Krylov);

struct JumpOutcome {
    bool jumped = false;
    double time = 0.0;  ///< t_jump, or t_max when no jump occurred
    StateVector state;  ///< unnormalized state at that time
};

/// Propagates from a normalized state until its squared norm reaches r (0 <= r < 1).
JumpOutcome propagate_to_jump(const StateVector& psi, const SparseOperator& H0,
                              const std::vector<SparseOperator>& jumps, double r, double t_max,
                              const EvolutionOptions& opts = {});

/// c|psi> / ||c|psi>||; throws DarkStateError when ||c|psi>|| <= 1e-14 ||psi||.
StateVector apply_jump(const StateVector& psi, const SparseOperator& c);

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::size_t index = 0;
    std::vector<std::string> columns;  ///< observable columns (after t, norm2, N_ph)
    std::vector<double> times;
    std::vector<double> norm2;  ///< squared norm of the unnormalized state since the last jump
    std::vector<long> photocount;
    std::vector<std::vector<double>> rows;
    std::vector<double> purity;  ///< density-matrix engines only

    std::vector<double> jump_times;
    std::vector<int> jump_channels;
    std::vector<bool> detected;
    bool truncated = false;  ///< stopped early at max_jumps

    long emissions() const { return static_cast<long>(jump_times.size()); }
    long detections() const;
    /// Column index of an observable; throws std::out_of_range when absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> series(const std::string& name) const;
};

struct TrajectoryProblem {
    std::shared_ptr<const FockBasis> basis;
    SparseOperator hamiltonian;
    std::vector<SparseOperator> channels;
    std::shared_ptr<const ObservableSet> observables;  ///< may be null
    StateVector initial;
};

struct JumpEvent {
    double time = 0.0;
    int channel = 0;
};

/// One unraveling. Emissions are detected independently with probability
/// `efficiency`; N_ph counts detected ones.
TrajectoryRecord run_trajectory(const TrajectoryProblem& problem, const EvolutionOptions& opts,
                                std::uint64_t master_seed, std::size_t index, double efficiency = 1.0);

/// Deterministic evolution with jumps forced at the given (ascending) times.
TrajectoryRecord run_driven_trajectory(const TrajectoryProblem& problem, const EvolutionOptions& opts,
                                       const std::vector<JumpEvent>& schedule);

/// Runs trajectories 0..count-1 on a worker pool; results ordered by index.
std::vector<TrajectoryRecord> run_ensemble(const TrajectoryProblem& problem, const EvolutionOptions& opts,
                                           std::uint64_t master_seed, std::size_t count, double efficiency = 1.0,
                                           unsigned threads = 0);

/// Snapshot grid 0, dt, 2 dt, ... up to t_max (t_max appended when off-grid).
std::vector<double> snapshot_grid(double t_max, double dt);

}  // namespace fermimon
