#include "fermimon/sme.hpp"

#include "fermimon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fermimon {

namespace {

void check_dims(const SparseOperator& A, const DensityMatrix& rho) {
    if (A.dimension() != rho.dimension()) throw std::invalid_argument("operator/density-matrix dimension mismatch");
}

// A rho A^dagger for a general (not necessarily Hermitian) rho.
CMatrix sandwich(const SparseOperator& A, const CMatrix& rho) {
    const CMatrix right = A.matrix() * rho.adjoint();  // A rho^dagger = (rho A^dagger)^dagger
    return A.matrix() * right.adjoint();
}

}  // namespace

CMatrix superop_G(const SparseOperator& A, const DensityMatrix& rho) {
    check_dims(A, rho);
    const CMatrix s = sandwich(A, rho.matrix());
    const double tr = s.trace().real();
    if (!(tr > 1e-14)) throw DarkStateError("G superoperator applied with vanishing jump probability");
    return s / tr - rho.matrix();
}

CMatrix superop_H(const SparseOperator& A, const DensityMatrix& rho) {
    check_dims(A, rho);
    const CMatrix& r = rho.matrix();
    const CMatrix left = A.matrix() * r;
    const CMatrix x = left + (A.matrix() * r.adjoint()).adjoint();
    return x - x.trace() * r;
}

CMatrix superop_D(const SparseOperator& A, const DensityMatrix& rho) {
    check_dims(A, rho);
    const CMatrix& r = rho.matrix();
    const SparseOperator AdA = A.adjoint() * A;
    const CMatrix left = AdA.matrix() * r;
    const CMatrix right = (AdA.matrix() * r.adjoint()).adjoint();
    return sandwich(A, r) - 0.5 * (left + right);
}

SmeGenerator::SmeGenerator(const SparseOperator& H0, std::vector<SparseOperator> channels, double efficiency)
    : channels_(std::move(channels)), eta_(efficiency), h_norm_(H0.norm_bound()) {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");
    SparseOperator C = SparseOperator::zero(H0.dimension());
    for (const auto& c : channels_) {
        if (c.dimension() != H0.dimension()) throw std::invalid_argument("jump operator dimension does not match H0");
        C = C + c.adjoint() * c;
    }
    c_norm_ = C.norm_bound();
    generator_ = cplx(0.0, -1.0) * H0 + cplx(-0.5, 0.0) * C;
}

CMatrix SmeGenerator::apply(const CMatrix& rho) const {
    // rho is Hermitian on every RK stage, so rho K^dagger = (K rho)^dagger.
    const CMatrix x = generator_.matrix() * rho;
    CMatrix out = x + x.adjoint();
    if (eta_ < 1.0) {
        for (const auto& c : channels_) {
            const CMatrix cr = c.matrix() * rho;
            out.noalias() += (1.0 - eta_) * (c.matrix() * cr.adjoint());
        }
    }
    return out;
}

void SmeGenerator::rk4(DensityMatrix& rho, double dt) const {
    const CMatrix& r = rho.matrix();
    const CMatrix k1 = apply(r);
    const CMatrix k2 = apply(r + 0.5 * dt * k1);
    const CMatrix k3 = apply(r + 0.5 * dt * k2);
    const CMatrix k4 = apply(r + dt * k3);
    rho.matrix() = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho.hermitize();
    rho.normalize_trace();
}

namespace {

constexpr double kStepBound = 1e-2;

void apply_detection(DensityMatrix& rho, const SparseOperator& c) {
    CMatrix s = sandwich(c, rho.matrix());
    const double tr = s.trace().real();
    if (!(tr > 1e-14)) throw DarkStateError("detection applied with vanishing jump probability");
    rho = DensityMatrix(s / tr);
    rho.hermitize();
}

}  // namespace

SmeStep step_sme(DensityMatrix& rho, const SmeGenerator& gen, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("SME step must be positive");
    if (dt * gen.hamiltonian_norm() > kStepBound * (1.0 + 1e-12)) {
        throw StepSizeError("dt ||H0|| = " + std::to_string(dt * gen.hamiltonian_norm()) + " exceeds 1e-2");
    }
    const auto& chans = gen.channels();
    std::vector<double> p(chans.size(), 0.0);
    double total = 0.0;
    if (gen.efficiency() > 0.0) {
        for (std::size_t m = 0; m < chans.size(); ++m) {
            p[m] = gen.efficiency() * photocount_rate(rho, chans[m]) * dt;
            total += p[m];
        }
    }
    if (total > kStepBound * (1.0 + 1e-12)) {
        throw StepSizeError("detection probability per step " + std::to_string(total) + " exceeds 1e-2");
    }
    double u = rng.uniform();
    gen.rk4(rho, dt);
    if (u >= total) return {};
    std::size_t m = 0;
    while (m + 1 < p.size() && u >= p[m]) u -= p[m++];
    apply_detection(rho, chans[m]);
    return {1, static_cast<int>(m)};
}

double sme_step_size(const SmeGenerator& gen, const SmeOptions& opts) {
    if (opts.dt > 0.0) return opts.dt;
    const double scale = std::max({gen.hamiltonian_norm(), gen.decay_norm(), 1e-300});
    return std::min(kStepBound / scale, opts.snapshot_dt);
}

namespace {

struct SmeRun {
    TrajectoryRecord record;
    DensityMatrix final_state;
};

SmeRun sme_loop(const SmeProblem& problem, const SmeOptions& opts, Rng* rng, const std::vector<JumpEvent>* schedule) {
    if (!problem.basis) throw std::invalid_argument("SME problem has no basis");
    const std::size_t n = problem.basis->size();
    if (n > kDensityMatrixCapacity) {
        throw CapacityError("density-matrix engine sector too large", n, kDensityMatrixCapacity);
    }
    if (problem.initial.dimension() != n || problem.hamiltonian.dimension() != n) {
        throw std::invalid_argument("SME problem dimensions do not match the basis");
    }
    const SmeGenerator gen(problem.hamiltonian, problem.channels, problem.efficiency);
    const double dt = sme_step_size(gen, opts);

    SmeRun run{{}, problem.initial};
    DensityMatrix& rho = run.final_state;
    rho.hermitize();
    rho.normalize_trace();
    TrajectoryRecord& rec = run.record;
    if (problem.observables) rec.columns = problem.observables->columns();

    long nph = 0;
    auto snapshot = [&](double t) {
        rec.times.push_back(t);
        rec.norm2.push_back(rho.trace());
        rec.photocount.push_back(nph);
        rec.purity.push_back(rho.purity());
        if (problem.observables) rec.rows.push_back(problem.observables->evaluate(rho));
        else rec.rows.emplace_back();
    };
    // Integrates [t0, t1] with equal substeps no longer than dt.
    auto integrate = [&](double t0, double t1) {
        const double len = t1 - t0;
        if (!(len > 0.0)) return;
        const auto steps = static_cast<long>(std::ceil(len / dt - 1e-9));
        const double h = len / static_cast<double>(std::max(steps, 1L));
        for (long s = 0; s < std::max(steps, 1L); ++s) {
            if (rng) {
                const SmeStep st = step_sme(rho, gen, h, *rng);
                if (st.dN) {
                    const double tj = t0 + static_cast<double>(s + 1) * h;
                    rec.jump_times.push_back(tj);
                    rec.jump_channels.push_back(st.channel);
                    rec.detected.push_back(true);
                    ++nph;
                }
            } else {
                gen.rk4(rho, h);
            }
        }
    };

    const auto grid = snapshot_grid(opts.t_max, opts.snapshot_dt);
    double t = 0.0;
    std::size_t e = 0;
    snapshot(0.0);
    for (std::size_t g = 1; g < grid.size(); ++g) {
        while (schedule && e < schedule->size() && (*schedule)[e].time <= grid[g]) {
            const auto& ev = (*schedule)[e++];
            if (ev.channel < 0 || static_cast<std::size_t>(ev.channel) >= problem.channels.size()) {
                throw std::invalid_argument("driven detection names an unknown channel");
            }
            if (ev.time < t) throw std::invalid_argument("driven detection times must be ascending");
            integrate(t, ev.time);
            t = ev.time;
            apply_detection(rho, problem.channels[static_cast<std::size_t>(ev.channel)]);
            rec.jump_times.push_back(t);
            rec.jump_channels.push_back(ev.channel);
            rec.detected.push_back(true);
            ++nph;
        }
        integrate(t, grid[g]);
        t = grid[g];
        snapshot(t);
    }
    return run;
}

}  // namespace

TrajectoryRecord run_sme(const SmeProblem& problem, const SmeOptions& opts, std::uint64_t master_seed,
                         std::size_t index) {
    Rng rng(master_seed, index, StreamPurpose::Sme);
    auto run = sme_loop(problem, opts, &rng, nullptr);
    run.record.seed = master_seed;
    run.record.index = index;
    return std::move(run.record);
}

TrajectoryRecord run_sme_driven(const SmeProblem& problem, const SmeOptions& opts,
                                const std::vector<JumpEvent>& schedule) {
    return std::move(sme_loop(problem, opts, nullptr, &schedule).record);
}

DensityMatrix sme_final_state(const SmeProblem& problem, const SmeOptions& opts, std::uint64_t master_seed,
                              std::size_t index) {
    Rng rng(master_seed, index, StreamPurpose::Sme);
    return sme_loop(problem, opts, &rng, nullptr).final_state;
}

double DetectionStats::snr() const {
    if (efficiency >= 1.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(efficiency / (1.0 - efficiency)) * std::sqrt(static_cast<double>(emitted));
}

ThinnedRun thinning_mode(const TrajectoryProblem& problem, const EvolutionOptions& opts, double efficiency,
                         std::uint64_t master_seed, std::size_t index) {
    ThinnedRun out;
    out.record = run_trajectory(problem, opts, master_seed, index, efficiency);
    out.stats = {out.record.emissions(), out.record.detections(), efficiency};
    return out;
}

TrajectoryRecord thin_record(const TrajectoryRecord& record, double efficiency, Rng& rng) {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");
    TrajectoryRecord out = record;
    for (std::size_t j = 0; j < out.detected.size(); ++j) out.detected[j] = rng.uniform() < efficiency;
    std::size_t j = 0;
    long count = 0;
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        while (j < out.jump_times.size() && out.jump_times[j] <= out.times[k]) {
            if (out.detected[j]) ++count;
            ++j;
        }
        out.photocount[k] = count;
    }
    return out;
}

double min_efficiency(double J, double gamma, double atoms) {
    if (!(gamma > 0.0) || !(atoms > 0.0)) throw std::invalid_argument("min_efficiency needs gamma > 0 and N > 0");
    return std::clamp(J / (gamma * atoms * atoms), 0.0, 1.0);
}

}  // namespace fermimon
