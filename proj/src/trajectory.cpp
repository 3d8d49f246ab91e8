#include "fermimon/trajectory.hpp"

#include "fermimon/errors.hpp"
#include "fermimon/parallel.hpp"
#include "fermimon/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fermimon {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

SparseOperator decay_operator(std::size_t dim, const std::vector<SparseOperator>& channels) {
    SparseOperator C = SparseOperator::zero(dim);
    for (const auto& c : channels) {
        if (c.dimension() != dim) throw std::invalid_argument("jump operator dimension does not match H0");
        C = C + c.adjoint() * c;
    }
    return C;
}

constexpr int kKrylovMax = 40;
constexpr int kKrylovCheck = 4;

}  // namespace

std::string to_string(Integrator m) { return m == Integrator::Krylov ? "krylov" : "dormand-prince"; }

Integrator integrator_from_string(const std::string& s) {
    if (s == "krylov") return Integrator::Krylov;
    if (s == "dormand-prince") return Integrator::DormandPrince;
    throw std::invalid_argument("unknown integrator '" + s + "'");
}

Propagator::Propagator(const SparseOperator& H0, const std::vector<SparseOperator>& channels, double rtol,
                       double min_step, double initial_step, Integrator method)
    : decay_(decay_operator(H0.dimension(), channels)),
      method_(method),
      rtol_(rtol),
      min_step_(min_step),
      hint_(initial_step),
      k_(7) {
    if (!(rtol > 0.0)) throw std::invalid_argument("integration tolerance must be positive");
    generator_ = cplx(0.0, -1.0) * H0 + cplx(-0.5, 0.0) * decay_;
    scale_ = generator_.norm_bound();
}

double Propagator::step(const CVector& x, double h, CVector& out) {
    auto& k = k_;
    generator_.apply(x, k[0]);
    generator_.apply(x + h * (a21 * k[0]), k[1]);
    generator_.apply(x + h * (a31 * k[0] + a32 * k[1]), k[2]);
    generator_.apply(x + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]), k[3]);
    generator_.apply(x + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]), k[4]);
    generator_.apply(x + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]), k[5]);
    out = x + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
    generator_.apply(out, k[6]);
    const double err = (h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6])).norm();
    const double scale = rtol_ * x.norm();
    return scale > 0.0 ? err / scale : 0.0;
}

double Propagator::accepted_step(CVector& psi, double h_max, CVector& next, double& h) {
    const bool clamped = h_max < hint_;
    h = clamped ? h_max : hint_;
    for (;;) {
        const double err = step(psi, h, next);
        const double factor = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        if (err <= 1.0) {
            if (!clamped || factor < 1.0) hint_ = std::max(h * factor, min_step_);
            return err;
        }
        h *= factor;
        if (h < min_step_) {
            throw StiffnessError("step size fell below " + std::to_string(min_step_) + " in the non-Hermitian propagation");
        }
    }
}

double Propagator::locate(const CVector& start, double h, double r, double tol, CVector& out) {
    double lo = 0.0;
    double hi = h;
    const double f_lo = start.squaredNorm() - r;
    const double f_hi = out.squaredNorm() - r;
    double tau = (f_lo - f_hi) > 0.0 ? h * f_lo / (f_lo - f_hi) : 0.5 * h;
    CVector y;
    CVector cy;
    for (int iter = 0; iter < 200; ++iter) {
        step(start, tau, y);
        const double f = y.squaredNorm() - r;
        if (std::abs(f) <= tol) {
            out = y;
            return tau;
        }
        (f > 0.0 ? lo : hi) = tau;
        decay_.apply(y, cy);
        const double fp = -y.dot(cy).real();
        const double newton = fp < 0.0 ? tau - f / fp : -1.0;
        tau = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
        if (hi - lo <= 1e-15 * h) break;
    }
    step(start, tau, y);
    if (std::abs(y.squaredNorm() - r) > tol) {
        throw ConvergenceError("jump-time search did not reach the norm tolerance");
    }
    out = y;
    return tau;
}

void Propagator::rk_advance(CVector& psi, double dt) {
    double elapsed = 0.0;
    CVector next;
    while (dt - elapsed > 0.0) {
        const double remaining = dt - elapsed;
        double h = 0.0;
        accepted_step(psi, remaining, next, h);
        psi.swap(next);
        elapsed = (h >= remaining) ? dt : elapsed + h;
    }
}

Propagator::JumpSearch Propagator::rk_threshold(CVector& psi, double r, double horizon, double tol) {
    double elapsed = 0.0;
    CVector next;
    while (horizon - elapsed > 0.0) {
        const double remaining = horizon - elapsed;
        double h = 0.0;
        accepted_step(psi, remaining, next, h);
        if (next.squaredNorm() <= r) {
            const double tau = locate(psi, h, r, tol, next);
            psi.swap(next);
            return {true, elapsed + tau};
        }
        psi.swap(next);
        elapsed = (h >= remaining) ? horizon : elapsed + h;
    }
    return {false, horizon};
}

// Arnoldi basis of K_m(A, psi), A = -i H_eff, grown until the error estimate
// for a step reaching h_target (or the expected norm crossing of r) passes.
void Propagator::arnoldi(const CVector& psi, double h_target, double r) {
    const int m_max = static_cast<int>(std::min<Eigen::Index>(kKrylovMax, psi.size()));
    beta_ = psi.norm();
    if (basis_.size() < static_cast<std::size_t>(m_max + 1)) basis_.resize(static_cast<std::size_t>(m_max + 1));
    hess_.setZero(m_max + 1, m_max);
    basis_[0] = psi / beta_;
    exact_ = false;
    m_ = 0;
    CVector w;
    for (int j = 0; j < m_max; ++j) {
        generator_.apply(basis_[static_cast<std::size_t>(j)], w);
        // Gram-Schmidt, repeated when cancellation is severe.
        double before = w.norm();
        double hn = before;
        for (int pass = 0; pass < 3; ++pass) {
            for (int i = 0; i <= j; ++i) {
                const CVector& v = basis_[static_cast<std::size_t>(i)];
                const cplx hij = v.dot(w);
                hess_(i, j) += hij;
                w -= hij * v;
            }
            hn = w.norm();
            if (hn > 0.7 * before) break;
            before = hn;
        }
        hess_(j + 1, j) = hn;
        m_ = j + 1;
        if (hn <= 1e-13 * scale_) {
            exact_ = true;
            break;
        }
        basis_[static_cast<std::size_t>(j + 1)] = w / hn;
        if (m_ == m_max || m_ % kKrylovCheck != 0) continue;
        double target = h_target;
        if (r >= 0.0) {
            const double n2 = krylov_coefficients(h_target).squaredNorm() * beta_ * beta_;
            if (n2 < r && n2 > 0.0) {
                const double kappa = std::log(beta_ * beta_ / n2) / h_target;
                target = std::min(h_target, 1.2 * std::log(beta_ * beta_ / r) / kappa);
            }
        }
        if (krylov_error(target) <= rtol_) break;
    }
}

// First term of the Arnoldi error expansion,
// h_{m+1,m} h |e_m^T phi_1(h H_m) e_1|, relative to the norm of psi.
double Propagator::krylov_error(double h) const {
    if (exact_) return 0.0;
    CMatrix X = CMatrix::Zero(m_ + 1, m_ + 1);
    X.topLeftCorner(m_, m_) = h * hess_.topLeftCorner(m_, m_);
    X(0, m_) = 1.0;
    const CMatrix E = X.exp();
    return std::abs(hess_(m_, m_ - 1)) * h * std::abs(E(m_ - 1, m_));
}

double Propagator::krylov_span(double h_want) const {
    double h = h_want;
    for (int it = 0; it < 60; ++it) {
        const double err = krylov_error(h);
        if (err <= rtol_) return h;
        h *= std::clamp(0.9 * std::pow(rtol_ / err, 1.0 / (m_ + 1)), 0.2, 0.95);
        if (h < min_step_) break;
    }
    throw StiffnessError("step size fell below " + std::to_string(min_step_) + " in the non-Hermitian propagation");
}

CVector Propagator::krylov_coefficients(double tau) const {
    const CMatrix H = tau * hess_.topLeftCorner(m_, m_);
    return H.exp().col(0);
}

void Propagator::krylov_assemble(const CVector& y, CVector& out) const {
    out = (beta_ * y(0)) * basis_[0];
    for (int i = 1; i < m_; ++i) out += (beta_ * y(i)) * basis_[static_cast<std::size_t>(i)];
}

void Propagator::krylov_advance(CVector& psi, double dt) {
    double elapsed = 0.0;
    while (dt - elapsed > 0.0) {
        if (psi.squaredNorm() == 0.0) return;
        const double remaining = dt - elapsed;
        arnoldi(psi, remaining, -1.0);
        const double h = krylov_span(remaining);
        krylov_assemble(krylov_coefficients(h), psi);
        elapsed = (h >= remaining) ? dt : elapsed + h;
    }
}

Propagator::JumpSearch Propagator::krylov_threshold(CVector& psi, double r, double horizon, double tol) {
    double elapsed = 0.0;
    while (horizon - elapsed > 0.0) {
        const double remaining = horizon - elapsed;
        arnoldi(psi, remaining, r);
        const double h = krylov_span(remaining);
        CVector y = krylov_coefficients(h);
        const double b2 = beta_ * beta_;
        if (b2 * y.squaredNorm() > r) {
            krylov_assemble(y, psi);
            elapsed = (h >= remaining) ? horizon : elapsed + h;
            continue;
        }
        // f(tau) = beta^2 |y(tau)|^2 - r, f' = 2 beta^2 Re y^dagger H_m y
        const CMatrix Hm = hess_.topLeftCorner(m_, m_);
        double lo = 0.0;
        double hi = h;
        const double f_lo = b2 - r;
        const double f_hi = b2 * y.squaredNorm() - r;
        double tau = (f_lo - f_hi) > 0.0 ? h * f_lo / (f_lo - f_hi) : 0.5 * h;
        bool found = false;
        for (int iter = 0; iter < 200; ++iter) {
            y = krylov_coefficients(tau);
            const double f = b2 * y.squaredNorm() - r;
            if (std::abs(f) <= tol) {
                found = true;
                break;
            }
            (f > 0.0 ? lo : hi) = tau;
            const double fp = 2.0 * b2 * y.dot(Hm * y).real();
            const double newton = fp < 0.0 ? tau - f / fp : -1.0;
            tau = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
            if (hi - lo <= 1e-15 * h) break;
        }
        if (!found) {
            y = krylov_coefficients(tau);
            if (std::abs(b2 * y.squaredNorm() - r) > tol) {
                throw ConvergenceError("jump-time search did not reach the norm tolerance");
            }
        }
        krylov_assemble(y, psi);
        return {true, elapsed + tau};
    }
    return {false, horizon};
}

void Propagator::advance(CVector& psi, double dt) {
    if (method_ == Integrator::Krylov) krylov_advance(psi, dt);
    else rk_advance(psi, dt);
}

Propagator::JumpSearch Propagator::advance_to_threshold(CVector& psi, double r, double horizon, double tol) {
    if (psi.squaredNorm() <= r) return {true, 0.0};
    return method_ == Integrator::Krylov ? krylov_threshold(psi, r, horizon, tol) : rk_threshold(psi, r, horizon, tol);
}

StateVector evolve_nonhermitian(const StateVector& psi, const SparseOperator& H0,
                                const std::vector<SparseOperator>& jumps, double dt, double tol,
                                Integrator method) {
    if (psi.dimension() != H0.dimension()) throw std::invalid_argument("state/operator dimension mismatch");
    if (!(dt > 0.0)) throw std::invalid_argument("evolution time must be positive");
    Propagator prop(H0, jumps, tol, 1e-12, 1e-2, method);
    CVector v = psi.amplitudes();
    prop.advance(v, dt);
    return StateVector(std::move(v));
}

JumpOutcome propagate_to_jump(const StateVector& psi, const SparseOperator& H0,
                              const std::vector<SparseOperator>& jumps, double r, double t_max,
                              const EvolutionOptions& opts) {
    if (psi.dimension() != H0.dimension()) throw std::invalid_argument("state/operator dimension mismatch");
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("jump threshold r must lie in [0, 1)");
    Propagator prop(H0, jumps, opts.rtol, opts.min_step, opts.initial_step, opts.integrator);
    CVector v = psi.amplitudes();
    const auto res = prop.advance_to_threshold(v, r, t_max, opts.jump_tol);
    return {res.jumped, res.jumped ? res.elapsed : t_max, StateVector(std::move(v))};
}

StateVector apply_jump(const StateVector& psi, const SparseOperator& c) {
    CVector v = c.apply(psi.amplitudes());
    const double n = v.norm();
    if (n <= 1e-14 * std::sqrt(psi.norm2())) {
        throw DarkStateError("jump applied to a state annihilated by the jump operator");
    }
    return StateVector(v / n);
}

long TrajectoryRecord::detections() const {
    return static_cast<long>(std::count(detected.begin(), detected.end(), true));
}

std::size_t TrajectoryRecord::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("record has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> TrajectoryRecord::series(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
}

std::vector<double> snapshot_grid(double t_max, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("snapshot cadence must be positive");
    if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be non-negative");
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor(t_max / dt + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(std::min(static_cast<double>(i) * dt, t_max));
    if (grid.back() < t_max - 1e-12) grid.push_back(t_max);
    return grid;
}

namespace {

void check_problem(const TrajectoryProblem& p) {
    if (!p.basis) throw std::invalid_argument("trajectory problem has no basis");
    const std::size_t n = p.basis->size();
    if (p.hamiltonian.dimension() != n) throw std::invalid_argument("Hamiltonian does not match the basis");
    if (p.initial.dimension() != n) throw std::invalid_argument("initial state does not match the basis");
    if (!(p.initial.norm2() > 0.0)) throw std::invalid_argument("initial state is zero");
    for (const auto& c : p.channels) {
        if (c.dimension() != n) throw std::invalid_argument("jump operator does not match the basis");
    }
}

struct Recorder {
    const TrajectoryProblem& problem;
    TrajectoryRecord& record;

    void snapshot(double t, const CVector& psi, long nph) const {
        record.times.push_back(t);
        record.norm2.push_back(psi.squaredNorm());
        record.photocount.push_back(nph);
        if (problem.observables) record.rows.push_back(problem.observables->evaluate(StateVector(psi)));
        else record.rows.emplace_back();
    }
};

}  // namespace

TrajectoryRecord run_trajectory(const TrajectoryProblem& problem, const EvolutionOptions& opts,
                                std::uint64_t master_seed, std::size_t index, double efficiency) {
    check_problem(problem);
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");

    TrajectoryRecord rec;
    rec.seed = master_seed;
    rec.index = index;
    if (problem.observables) rec.columns = problem.observables->columns();
    const Recorder recorder{problem, rec};

    Propagator prop(problem.hamiltonian, problem.channels, opts.rtol, opts.min_step, opts.initial_step, opts.integrator);
    Rng jumps(master_seed, index, StreamPurpose::Jumps);
    Rng detect(master_seed, index, StreamPurpose::Detection);

    const auto grid = snapshot_grid(opts.t_max, opts.snapshot_dt);
    CVector psi = problem.initial.amplitudes() / std::sqrt(problem.initial.norm2());
    long nph = 0;
    double t = 0.0;
    recorder.snapshot(0.0, psi, nph);
    std::size_t g = 1;
    double r = jumps.uniform();
    std::vector<double> weights(problem.channels.size());

    while (g < grid.size()) {
        Propagator::JumpSearch res;
        if (problem.channels.empty()) prop.advance(psi, grid[g] - t);
        else res = prop.advance_to_threshold(psi, r, grid[g] - t, opts.jump_tol);
        if (!res.jumped) {
            t = grid[g];
            recorder.snapshot(t, psi, nph);
            ++g;
            continue;
        }
        t += res.elapsed;
        std::size_t m = 0;
        if (problem.channels.size() > 1) {
            double total = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                weights[i] = problem.channels[i].apply(psi).squaredNorm();
                total += weights[i];
            }
            double u = jumps.uniform() * total;
            while (m + 1 < weights.size() && u >= weights[m]) u -= weights[m++];
        }
        psi = apply_jump(StateVector(psi), problem.channels[m]).amplitudes();
        const bool seen = detect.uniform() < efficiency;
        rec.jump_times.push_back(t);
        rec.jump_channels.push_back(static_cast<int>(m));
        rec.detected.push_back(seen);
        if (seen) ++nph;
        r = jumps.uniform();
        if (opts.max_jumps && rec.emissions() >= *opts.max_jumps) {
            rec.truncated = true;
            recorder.snapshot(t, psi, nph);
            break;
        }
    }
    return rec;
}

TrajectoryRecord run_driven_trajectory(const TrajectoryProblem& problem, const EvolutionOptions& opts,
                                       const std::vector<JumpEvent>& schedule) {
    check_problem(problem);
    TrajectoryRecord rec;
    if (problem.observables) rec.columns = problem.observables->columns();
    const Recorder recorder{problem, rec};
    Propagator prop(problem.hamiltonian, problem.channels, opts.rtol, opts.min_step, opts.initial_step, opts.integrator);

    const auto grid = snapshot_grid(opts.t_max, opts.snapshot_dt);
    CVector psi = problem.initial.amplitudes() / std::sqrt(problem.initial.norm2());
    long nph = 0;
    double t = 0.0;
    std::size_t e = 0;
    if (!schedule.empty() && schedule.front().time <= 0.0) {
        throw std::invalid_argument("driven jump times must be positive");
    }
    recorder.snapshot(0.0, psi, nph);
    for (std::size_t g = 1; g < grid.size(); ++g) {
        while (e < schedule.size() && schedule[e].time <= grid[g]) {
            const auto& ev = schedule[e++];
            if (ev.channel < 0 || static_cast<std::size_t>(ev.channel) >= problem.channels.size()) {
                throw std::invalid_argument("driven jump names an unknown channel");
            }
            if (ev.time < t) throw std::invalid_argument("driven jump times must be ascending");
            if (ev.time > t) prop.advance(psi, ev.time - t);
            t = ev.time;
            psi = apply_jump(StateVector(psi), problem.channels[static_cast<std::size_t>(ev.channel)]).amplitudes();
            rec.jump_times.push_back(t);
            rec.jump_channels.push_back(ev.channel);
            rec.detected.push_back(true);
            ++nph;
        }
        if (grid[g] > t) prop.advance(psi, grid[g] - t);
        t = grid[g];
        recorder.snapshot(t, psi, nph);
    }
    return rec;
}

std::vector<TrajectoryRecord> run_ensemble(const TrajectoryProblem& problem, const EvolutionOptions& opts,
                                           std::uint64_t master_seed, std::size_t count, double efficiency,
                                           unsigned threads) {
    std::vector<TrajectoryRecord> out(count);
    parallel_for(count, threads,
                 [&](std::size_t i) { out[i] = run_trajectory(problem, opts, master_seed, i, efficiency); });
    return out;
}

}  // namespace fermimon
