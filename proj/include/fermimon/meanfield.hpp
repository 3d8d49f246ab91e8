#pragma once

// Stochastic mean-field dynamics of spinless free fermions monitored through a
// jump operator c = g (u N + v X), g^2 = 2 gamma, with X = sum_j (-1)^j n_j =
// sum_k f+_k f_{k+Q}. Momenta pair up as (k, k+Q); a pair holding one particle
// behaves as a two-level system and the state is closed as a product over pairs,
// described by n_k, n_{k+Q} and alpha_k = <f+_k f_{k+Q}>. Pairs holding zero or
// two particles are inert.
//
// Per active pair p = (a, b) with x_p = 2 Re alpha_p, Xbar = sum_p x_p and
// kappa_p = 2 g^2 v (u N + v (Xbar - x_p)):
//   dn_a/dt    = -kappa_p Re(alpha_p) (1 - 2 n_a),   dn_b/dt = -dn_a/dt
//   dalpha/dt  = i (e_a - e_b) alpha_p - kappa_p (1/2 - 2 alpha_p Re alpha_p)
//   dlog|psi|^2/dt = -g^2 [(u N + v Xbar)^2 + v^2 sum_p (1 - x_p^2)]

#include "fermimon/hubbard.hpp"
#include "fermimon/optics.hpp"
#include "fermimon/trajectory.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fermimon {

struct MeanFieldState {
    std::vector<double> n;    ///< n_k on the full grid k_m, m = 0..L-1
    std::vector<cplx> alpha;  ///< alpha_k for m < L/2 (partner m + L/2)
    double time = 0.0;
    double log_norm = 0.0;    ///< log of the squared norm since the last jump
    bool fractional = false;  ///< a degenerate shell was filled fractionally
};

/// n_k = 1 on the N lowest -2J cos k levels of the grid; a partially filled
/// degenerate shell gets equal fractional occupation (flagged).
MeanFieldState init_fermi_sea(int sites, int particles, Boundary boundary = Boundary::Antiperiodic);

struct MeanFieldParams {
    int sites = 100;
    int particles = 50;
    double J = 1.0;
    double gamma = 0.05;
    Boundary boundary = Boundary::Antiperiodic;
    Profile profile;  ///< per-site coefficients; must equal u + v (-1)^j
};

class MeanFieldModel {
public:
    explicit MeanFieldModel(MeanFieldParams p);

    const MeanFieldParams& params() const noexcept { return p_; }
    double u() const noexcept { return u_; }
    double v() const noexcept { return v_; }
    const std::vector<double>& energies() const noexcept { return eps_; }

    /// Fermi sea for these parameters; throws ConfigError when a fractional
    /// shell would split a (k, k+Q) pair.
    MeanFieldState initial_state() const;

    struct Derivative {
        std::vector<double> dn;
        std::vector<cplx> dalpha;
        double dlog = 0.0;
    };
    Derivative derivative(const MeanFieldState& s) const;

    /// One RK4 step of the no-jump evolution (including the log-norm).
    void drift(MeanFieldState& s, double dt) const;
    /// <c+ O c> / <c+ c> for every pair variable; resets the log-norm.
    void jump_update(MeanFieldState& s) const;

    /// <c+ c> under the closure.
    double rate(const MeanFieldState& s) const;
    /// <N_odd> = N/2 - sum_p Re alpha_p
    double odd_occupation(const MeanFieldState& s) const;
    /// Largest violation of 0 <= n <= 1 and |alpha|^2 <= n_a (1 - n_b) + n_b (1 - n_a).
    double closure_violation(const MeanFieldState& s) const;
    /// Whether pair p holds exactly one particle.
    bool active(const MeanFieldState& s, std::size_t pair) const;

private:
    MeanFieldParams p_;
    double u_ = 0.0;
    double v_ = 0.0;
    double g2_ = 0.0;
    std::vector<double> eps_;
};

struct MeanFieldOptions {
    double t_max = 20.0;
    double dt = 1e-3;
    double snapshot_dt = 0.05;
    std::vector<double> k_snapshot_times;  ///< times at which n_k is recorded
    double jump_tol = 1e-10;               ///< on the log-norm at a located jump
    double closure_slack = 1e-6;
};

struct MeanFieldRecord {
    TrajectoryRecord trace;  ///< columns: N_odd, log_norm, rate
    std::vector<double> k_times;
    std::vector<std::vector<double>> k_snapshots;  ///< n_k at each k_time
    std::vector<double> pair_sums;                 ///< n_k + n_{k+Q} at t = 0
    double max_pair_drift = 0.0;
    bool closure_breakdown = false;
    std::string breakdown_report;
};

MeanFieldRecord run_meanfield(const MeanFieldModel& model, const MeanFieldOptions& opts, std::uint64_t master_seed,
                              std::size_t index = 0);

}  // namespace fermimon
