#include "fermimon/meanfield.hpp"

#include "fermimon/errors.hpp"
#include "fermimon/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace fermimon {

MeanFieldState init_fermi_sea(int sites, int particles, Boundary boundary) {
    if (sites <= 0) throw ConfigError("mean-field chain needs a positive site count");
    if (particles < 0 || particles > sites) throw ConfigError("mean-field particle count must lie in [0, L]");
    const auto k = momentum_grid(sites, boundary);
    std::vector<double> e(k.size());
    for (std::size_t m = 0; m < k.size(); ++m) e[m] = -2.0 * std::cos(k[m]);
    std::vector<std::size_t> order(k.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });

    MeanFieldState s;
    s.n.assign(k.size(), 0.0);
    s.alpha.assign(k.size() / 2, cplx(0.0));
    int left = particles;
    for (std::size_t i = 0; i < order.size() && left > 0;) {
        std::size_t j = i;
        while (j < order.size() && std::abs(e[order[j]] - e[order[i]]) < 1e-12) ++j;
        const auto shell = static_cast<int>(j - i);
        const double fill = left >= shell ? 1.0 : static_cast<double>(left) / shell;
        if (left < shell) s.fractional = true;
        for (std::size_t q = i; q < j; ++q) s.n[order[q]] = fill;
        left -= std::min(left, shell);
        i = j;
    }
    return s;
}

MeanFieldModel::MeanFieldModel(MeanFieldParams p) : p_(std::move(p)) {
    const int L = p_.sites;
    if (L < 2 || L % 2 != 0) throw ConfigError("mean-field solver needs an even number of sites");
    if (p_.boundary == Boundary::Open) throw ConfigError("mean-field solver needs a periodic or antiperiodic chain");
    if (p_.particles < 0 || p_.particles > L) throw ConfigError("mean-field particle count must lie in [0, L]");
    if (p_.gamma < 0.0) throw ConfigError("measurement strength gamma must be >= 0");
    if (p_.profile.size() != static_cast<std::size_t>(L)) {
        throw ConfigError("mean-field profile length does not match the chain");
    }
    u_ = 0.5 * (p_.profile[0].real() + p_.profile[1].real());
    v_ = 0.5 * (p_.profile[0].real() - p_.profile[1].real());
    for (int j = 0; j < L; ++j) {
        const cplx expect = u_ + ((j % 2 == 0) ? v_ : -v_);
        if (std::abs(p_.profile[static_cast<std::size_t>(j)] - expect) > 1e-12) {
            throw ConfigError("mean-field solver supports only profiles u + v (-1)^j (momentum support {0, Q})");
        }
    }
    g2_ = 2.0 * p_.gamma;
    const auto k = momentum_grid(L, p_.boundary);
    for (double kk : k) eps_.push_back(-2.0 * p_.J * std::cos(kk));
}

MeanFieldState MeanFieldModel::initial_state() const {
    MeanFieldState s = init_fermi_sea(p_.sites, p_.particles, p_.boundary);
    const std::size_t half = s.alpha.size();
    for (std::size_t q = 0; q < half; ++q) {
        const double sum = s.n[q] + s.n[q + half];
        if (std::abs(sum - std::round(sum)) > 1e-12) {
            throw ConfigError("Fermi sea has a fractionally filled shell that splits a (k, k+Q) pair; "
                              "choose a filling with a closed shell or switch the boundary");
        }
    }
    return s;
}

bool MeanFieldModel::active(const MeanFieldState& s, std::size_t pair) const {
    const std::size_t half = s.alpha.size();
    return std::abs(s.n[pair] + s.n[pair + half] - 1.0) < 1e-6;
}

namespace {

struct PairSums {
    double xbar = 0.0;  ///< sum over active pairs of 2 Re alpha
    double var = 0.0;   ///< sum over active pairs of 1 - x^2
};

}  // namespace

MeanFieldModel::Derivative MeanFieldModel::derivative(const MeanFieldState& s) const {
    const std::size_t half = s.alpha.size();
    const double N = p_.particles;
    PairSums ps;
    for (std::size_t q = 0; q < half; ++q) {
        if (!active(s, q)) continue;
        const double x = 2.0 * s.alpha[q].real();
        ps.xbar += x;
        ps.var += 1.0 - x * x;
    }
    Derivative d;
    d.dn.assign(s.n.size(), 0.0);
    d.dalpha.assign(half, cplx(0.0));
    for (std::size_t q = 0; q < half; ++q) {
        const cplx a = s.alpha[q];
        const cplx rot = cplx(0.0, eps_[q] - eps_[q + half]) * a;
        if (!active(s, q)) {
            d.dalpha[q] = rot;
            continue;
        }
        const double x = 2.0 * a.real();
        const double kappa = 2.0 * g2_ * v_ * (u_ * N + v_ * (ps.xbar - x));
        d.dn[q] = -kappa * a.real() * (1.0 - 2.0 * s.n[q]);
        d.dn[q + half] = -d.dn[q];
        d.dalpha[q] = rot - kappa * (0.5 - 2.0 * a * a.real());
    }
    const double mean = u_ * N + v_ * ps.xbar;
    d.dlog = -g2_ * (mean * mean + v_ * v_ * ps.var);
    return d;
}

void MeanFieldModel::drift(MeanFieldState& s, double dt) const {
    auto shifted = [](const MeanFieldState& base, const Derivative& d, double h) {
        MeanFieldState out = base;
        for (std::size_t i = 0; i < out.n.size(); ++i) out.n[i] += h * d.dn[i];
        for (std::size_t i = 0; i < out.alpha.size(); ++i) out.alpha[i] += h * d.dalpha[i];
        out.log_norm += h * d.dlog;
        return out;
    };
    const Derivative k1 = derivative(s);
    const Derivative k2 = derivative(shifted(s, k1, 0.5 * dt));
    const Derivative k3 = derivative(shifted(s, k2, 0.5 * dt));
    const Derivative k4 = derivative(shifted(s, k3, dt));
    const std::size_t half = s.alpha.size();
    for (std::size_t q = 0; q < half; ++q) {
        const double dn = (dt / 6.0) * (k1.dn[q] + 2.0 * k2.dn[q] + 2.0 * k3.dn[q] + k4.dn[q]);
        s.n[q] += dn;
        s.n[q + half] -= dn;
        s.alpha[q] += (dt / 6.0) * (k1.dalpha[q] + 2.0 * k2.dalpha[q] + 2.0 * k3.dalpha[q] + k4.dalpha[q]);
    }
    s.log_norm += (dt / 6.0) * (k1.dlog + 2.0 * k2.dlog + 2.0 * k3.dlog + k4.dlog);
    s.time += dt;
}

double MeanFieldModel::rate(const MeanFieldState& s) const {
    return -derivative(s).dlog;
}

void MeanFieldModel::jump_update(MeanFieldState& s) const {
    const double lambda = rate(s);
    if (!(lambda > 1e-12)) throw DarkStateError("mean-field jump with vanishing photon rate");
    const std::size_t half = s.alpha.size();
    const double N = p_.particles;
    PairSums ps;
    for (std::size_t q = 0; q < half; ++q) {
        if (!active(s, q)) continue;
        const double x = 2.0 * s.alpha[q].real();
        ps.xbar += x;
        ps.var += 1.0 - x * x;
    }
    const double v = v_;
    for (std::size_t q = 0; q < half; ++q) {
        if (!active(s, q)) continue;
        const double na = s.n[q];
        const double nb = s.n[q + half];
        const cplx a = s.alpha[q];
        const double x = 2.0 * a.real();
        const double A1 = u_ * N + v * (ps.xbar - x);
        const double A2 = A1 * A1 + v * v * (ps.var - (1.0 - x * x));
        const double D = A2 + 2.0 * v * A1 * x + v * v;
        const double na_new = (A2 * na + v * A1 * x + v * v * nb) / D;
        s.n[q + half] = (na + nb) - na_new;
        s.n[q] = na_new;
        s.alpha[q] = (A2 * a + v * A1 + v * v * std::conj(a)) / D;
    }
    s.log_norm = 0.0;
}

double MeanFieldModel::odd_occupation(const MeanFieldState& s) const {
    double acc = 0.5 * p_.particles;
    for (const auto& a : s.alpha) acc -= a.real();
    return acc;
}

double MeanFieldModel::closure_violation(const MeanFieldState& s) const {
    const std::size_t half = s.alpha.size();
    double worst = 0.0;
    for (double n : s.n) worst = std::max({worst, -n, n - 1.0});
    for (std::size_t q = 0; q < half; ++q) {
        const double na = s.n[q];
        const double nb = s.n[q + half];
        const double bound = na * (1.0 - nb) + nb * (1.0 - na);
        worst = std::max(worst, std::norm(s.alpha[q]) - bound);
    }
    return worst;
}

MeanFieldRecord run_meanfield(const MeanFieldModel& model, const MeanFieldOptions& opts, std::uint64_t master_seed,
                              std::size_t index) {
    if (!(opts.dt > 0.0)) throw ConfigError("mean-field dt must be positive");
    MeanFieldRecord out;
    TrajectoryRecord& rec = out.trace;
    rec.seed = master_seed;
    rec.index = index;
    rec.columns = {"N_odd", "log_norm", "rate"};

    MeanFieldState s = model.initial_state();
    const std::size_t half = s.alpha.size();
    for (std::size_t q = 0; q < half; ++q) out.pair_sums.push_back(s.n[q] + s.n[q + half]);

    std::vector<double> k_times = opts.k_snapshot_times;
    std::sort(k_times.begin(), k_times.end());
    std::size_t next_k = 0;

    Rng rng(master_seed, index, StreamPurpose::Jumps);
    long nph = 0;
    auto snapshot = [&](double t) {
        rec.times.push_back(t);
        rec.norm2.push_back(std::exp(s.log_norm));
        rec.photocount.push_back(nph);
        rec.rows.push_back({model.odd_occupation(s), s.log_norm, model.rate(s)});
        for (std::size_t q = 0; q < half; ++q) {
            out.max_pair_drift = std::max(out.max_pair_drift, std::abs(s.n[q] + s.n[q + half] - out.pair_sums[q]));
        }
        while (next_k < k_times.size() && k_times[next_k] <= t + 1e-12) {
            out.k_times.push_back(t);
            out.k_snapshots.push_back(s.n);
            ++next_k;
        }
    };
    auto check_closure = [&](double t) {
        if (out.closure_breakdown) return;
        const double viol = model.closure_violation(s);
        if (viol <= opts.closure_slack) return;
        out.closure_breakdown = true;
        std::ostringstream os;
        os.precision(17);
        os << "closure positivity violated by " << viol << " at t=" << t << "\n";
        for (std::size_t q = 0; q < half; ++q) {
            os << q << ' ' << s.n[q] << ' ' << s.n[q + half] << ' ' << s.alpha[q].real() << ' '
               << s.alpha[q].imag() << "\n";
        }
        out.breakdown_report = os.str();
    };

    const auto grid = snapshot_grid(opts.t_max, opts.snapshot_dt);
    double t = 0.0;
    snapshot(0.0);
    std::size_t g = 1;
    double log_r = std::log(rng.uniform());
    while (g < grid.size()) {
        const double remaining = grid[g] - t;
        const double h = std::min(opts.dt, remaining);
        MeanFieldState trial = s;
        model.drift(trial, h);
        if (trial.log_norm <= log_r) {
            double lo = 0.0;
            double hi = h;
            MeanFieldState at = trial;
            double tau = h;
            for (int iter = 0; iter < 200; ++iter) {
                tau = 0.5 * (lo + hi);
                at = s;
                model.drift(at, tau);
                const double f = at.log_norm - log_r;
                if (std::abs(f) <= opts.jump_tol) break;
                (f > 0.0 ? lo : hi) = tau;
            }
            s = at;
            t += tau;
            model.jump_update(s);
            rec.jump_times.push_back(t);
            rec.jump_channels.push_back(0);
            rec.detected.push_back(true);
            ++nph;
            log_r = std::log(rng.uniform());
            check_closure(t);
            continue;
        }
        s = std::move(trial);
        if (h >= remaining) {
            t = grid[g];
            check_closure(t);
            snapshot(t);
            ++g;
        } else {
            t += h;
        }
    }
    return out;
}

}  // namespace fermimon
