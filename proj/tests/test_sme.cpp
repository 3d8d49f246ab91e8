#include "doctest.h"

#include "fermimon/errors.hpp"
#include "fermimon/hubbard.hpp"
#include "fermimon/optics.hpp"
#include "fermimon/sme.hpp"
#include "oracle.hpp"

#include <cmath>
#include <limits>

using namespace fermimon;

namespace {

SparseOperator staggered_channel(const FockBasis& b, double gamma) {
    return build_jump_operator(b, diffraction_profile(diffraction_minimum_geometry(b.sites())),
                               {Polarization::LinearY, gamma});
}

// Non-Hermitian channel: complex site weights.
SparseOperator complex_channel(const FockBasis& b) {
    JumpChannel ch{Polarization::Custom, 0.5};
    Profile w;
    for (int j = 0; j < b.sites(); ++j) w.push_back(std::polar(1.0, 0.7 * j + 0.2));
    ch.custom_profile = w;
    ch.spin_weights = {1.0, cplx(0.0, 0.5)};
    return build_jump_operator(b, Profile(static_cast<std::size_t>(b.sites()), 0.0), ch);
}

SmeProblem small_problem(double eta, double gamma = 0.5, int n_up = 2, int n_down = 2) {
    SmeProblem p;
    auto b = std::make_shared<const FockBasis>(4, n_up, n_down);
    p.basis = b;
    p.hamiltonian = build_hubbard(*b, {1.0, 2.0, Boundary::Open});
    p.channels = {staggered_channel(*b, gamma)};
    p.observables = std::make_shared<const ObservableSet>(
        b, Boundary::Open,
        std::vector<ObservableKind>{ObservableKind::Density, ObservableKind::StaggeredMagnetizationSquared,
                                    ObservableKind::StructureFactorQ, ObservableKind::PhotocountRate},
        p.channels);
    p.initial = DensityMatrix::pure(ground_state(p.hamiltonian).state);
    p.efficiency = eta;
    return p;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

}  // namespace

TEST_CASE("superoperators match their dense definitions") {
    const FockBasis b(3, 1, 1);
    const SparseOperator A = complex_channel(b);
    const DensityMatrix rho(oracle::random_density(b.size(), 5));
    const CMatrix a = A.dense();
    const CMatrix r = rho.matrix();
    const CMatrix s = a * r * a.adjoint();
    CHECK(oracle::max_abs(superop_G(A, rho) - (s / s.trace().real() - r)) < 1e-12);
    const CMatrix x = a * r + r * a.adjoint();
    CHECK(oracle::max_abs(superop_H(A, rho) - (x - x.trace() * r)) < 1e-12);
    const CMatrix ada = a.adjoint() * a;
    CHECK(oracle::max_abs(superop_D(A, rho) - (s - 0.5 * (ada * r + r * ada))) < 1e-12);
    CHECK(std::abs(superop_D(A, rho).trace()) < 1e-12);
    CHECK(std::abs(superop_G(A, rho).trace()) < 1e-12);
    CHECK(std::abs(superop_H(A, rho).trace()) < 1e-12);
}

TEST_CASE("superoperators on a two-level example") {
    // One particle on two sites, A = n_0, rho = |+><+|.
    const FockBasis b(2, 1, 0);
    const SparseOperator A = number_operator(b, 0, Spin::Up);
    const auto i0 = *b.index({parse_occupation("10"), 0});
    CVector plus = CVector::Constant(2, std::sqrt(0.5));
    const DensityMatrix rho = DensityMatrix::pure(StateVector(plus));
    CMatrix p0 = CMatrix::Zero(2, 2);
    p0(static_cast<Eigen::Index>(i0), static_cast<Eigen::Index>(i0)) = 1.0;
    CHECK(oracle::max_abs(superop_G(A, rho) - (p0 - rho.matrix())) < 1e-14);
    // D[n] removes the coherence at half its magnitude.
    const CMatrix d = superop_D(A, rho);
    CHECK(std::abs(d(0, 1) + 0.25) < 1e-14);
    CHECK(std::abs(d(0, 0)) < 1e-14);
    // H[n] rho = {n, rho} - 2 <n> rho
    const CMatrix h = superop_H(A, rho);
    CHECK(oracle::max_abs(h - (A.dense() * rho.matrix() + rho.matrix() * A.dense() - rho.matrix())) < 1e-14);
    // An eigenstate of A is a fixed point of G and D.
    const DensityMatrix e = DensityMatrix::pure(StateVector::basis_state(2, i0));
    CHECK(oracle::max_abs(superop_G(A, e)) < 1e-14);
    CHECK(oracle::max_abs(superop_D(A, e)) < 1e-14);
    const DensityMatrix dark = DensityMatrix::pure(StateVector::basis_state(2, 1 - i0));
    CHECK_THROWS_AS(superop_G(A, dark), DarkStateError);
}

TEST_CASE("linear generator equals the Lindblad and no-jump generators") {
    const FockBasis b(3, 2, 1);
    const SparseOperator h = build_hubbard(b, {1.0, 1.5, Boundary::Periodic});
    const std::vector<SparseOperator> cs{complex_channel(b), staggered_channel(b, 0.3)};
    const CMatrix rho = oracle::random_density(b.size(), 11);
    const SmeGenerator lind(h, cs, 0.0);
    const CMatrix L = oracle::lindblad_superop(h.dense(), {cs[0].dense(), cs[1].dense()});
    CHECK((vec(lind.apply(rho)) - L * vec(rho)).norm() < 1e-12);

    const SmeGenerator nojump(h, cs, 1.0);
    CMatrix heff = h.dense();
    for (const auto& c : cs) heff -= cplx(0.0, 0.5) * c.dense().adjoint() * c.dense();
    const CMatrix expect = cplx(0.0, -1.0) * (heff * rho - rho * heff.adjoint());
    CHECK(oracle::max_abs(nojump.apply(rho) - expect) < 1e-12);

    const SmeGenerator half(h, cs, 0.25);
    CMatrix mixed = expect;
    for (const auto& c : cs) mixed += 0.75 * c.dense() * rho * c.dense().adjoint();
    CHECK(oracle::max_abs(half.apply(rho) - mixed) < 1e-12);
    CHECK_THROWS_AS(SmeGenerator(h, cs, 1.5), std::invalid_argument);
}

TEST_CASE("eta = 0 follows the Lindblad master equation") {
    SmeProblem p = small_problem(0.0, 0.5, 1, 1);
    SmeOptions opts;
    opts.t_max = 1.0;
    opts.snapshot_dt = 0.25;
    const DensityMatrix out = sme_final_state(p, opts, 1);
    const CMatrix ref = oracle::lindblad_evolve(p.hamiltonian.dense(), {p.channels[0].dense()}, p.initial.matrix(), 1.0);
    CHECK(oracle::max_abs(out.matrix() - ref) < 1e-8);
    const auto rec = run_sme(p, opts, 1);
    CHECK(rec.emissions() == 0);
    CHECK(rec.photocount.back() == 0);
}

TEST_CASE("eta = 1 keeps a pure state pure") {
    SmeProblem p = small_problem(1.0);
    SmeOptions opts;
    opts.t_max = 3.0;
    const auto rec = run_sme(p, opts, 4);
    CHECK(rec.emissions() > 0);
    for (double pur : rec.purity) CHECK(std::abs(pur - 1.0) < 1e-8);
}

TEST_CASE("no coupling gives unitary evolution") {
    SmeProblem p = small_problem(0.3, 0.0);
    p.initial = DensityMatrix(oracle::random_density(p.basis->size(), 3));
    SmeOptions opts;
    opts.t_max = 2.0;
    const DensityMatrix out = sme_final_state(p, opts, 9);
    const CMatrix u = (cplx(0.0, -2.0) * p.hamiltonian.dense()).exp();
    CHECK(oracle::max_abs(out.matrix() - u * p.initial.matrix() * u.adjoint()) < 1e-8);
}

TEST_CASE("step preconditions") {
    SmeProblem p = small_problem(1.0, 2.0);
    const SmeGenerator gen(p.hamiltonian, p.channels, 1.0);
    DensityMatrix rho = p.initial;
    Rng rng(1);
    CHECK_THROWS_AS(step_sme(rho, gen, 1.0, rng), StepSizeError);
    SmeOptions opts;
    const double dt = sme_step_size(gen, opts);
    CHECK(dt * gen.hamiltonian_norm() <= 1e-2 + 1e-15);
    CHECK(dt * gen.decay_norm() <= 1e-2 + 1e-15);
    CHECK_NOTHROW(step_sme(rho, gen, dt, rng));
    opts.dt = 1e-4;
    CHECK(sme_step_size(gen, opts) == 1e-4);
}

TEST_CASE("eta = 1 matches the pure engine on a shared jump record") {
    SmeProblem sp = small_problem(1.0);
    TrajectoryProblem tp;
    tp.basis = sp.basis;
    tp.hamiltonian = sp.hamiltonian;
    tp.channels = sp.channels;
    tp.observables = sp.observables;
    tp.initial = ground_state(tp.hamiltonian).state;
    EvolutionOptions eo;
    eo.t_max = 3.0;
    eo.snapshot_dt = 0.1;
    const auto pure = run_trajectory(tp, eo, 17, 0);
    REQUIRE(pure.emissions() > 0);
    std::vector<JumpEvent> sched;
    for (std::size_t i = 0; i < pure.jump_times.size(); ++i) sched.push_back({pure.jump_times[i], pure.jump_channels[i]});
    SmeOptions so;
    so.t_max = 3.0;
    so.snapshot_dt = 0.1;
    const auto mixed = run_sme_driven(sp, so, sched);
    REQUIRE(mixed.rows.size() == pure.rows.size());
    CHECK(mixed.photocount == pure.photocount);
    double err = 0.0;
    for (std::size_t k = 0; k < pure.rows.size(); ++k) {
        for (std::size_t c = 0; c < pure.rows[k].size(); ++c) err = std::max(err, std::abs(mixed.rows[k][c] - pure.rows[k][c]));
    }
    CHECK(err < 1e-6);
    CHECK_THROWS_AS(run_sme_driven(sp, so, {{0.5, 2}}), std::invalid_argument);
}

TEST_CASE("invariant: trace, hermiticity and positivity") {
    for (double eta : {0.0, 0.4, 1.0}) {
        SmeProblem p = small_problem(eta);
        SmeOptions opts;
        opts.t_max = 2.0;
        const auto rec = run_sme(p, opts, 21);
        for (double tr : rec.norm2) CHECK(std::abs(tr - 1.0) < 1e-12);
        const DensityMatrix out = sme_final_state(p, opts, 21);
        CHECK(out.hermiticity_error() < 1e-12);
        CHECK(out.min_eigenvalue() > -1e-10);
        for (double pur : rec.purity) CHECK(pur <= 1.0 + 1e-10);
    }
}

TEST_CASE("invariant: purity does not grow without detection") {
    // Hermitian jump operators make the unmonitored channel unital.
    SmeProblem p = small_problem(0.0);
    SmeOptions opts;
    opts.t_max = 3.0;
    const auto rec = run_sme(p, opts, 2);
    for (std::size_t k = 1; k < rec.purity.size(); ++k) CHECK(rec.purity[k] <= rec.purity[k - 1] + 1e-12);
    CHECK(rec.purity.back() < rec.purity.front());
}

TEST_CASE("thinning limits") {
    auto b = std::make_shared<const FockBasis>(4, 2, 2);
    TrajectoryProblem p;
    p.basis = b;
    p.hamiltonian = build_hubbard(*b, {1.0, 0.0, Boundary::Open});
    p.channels = {staggered_channel(*b, 1.0)};
    p.initial = ground_state(p.hamiltonian).state;
    EvolutionOptions opts;
    opts.t_max = 5.0;
    const auto all = thinning_mode(p, opts, 1.0, 5);
    CHECK(all.stats.detected == all.stats.emitted);
    CHECK(all.stats.emitted > 0);
    CHECK(std::isinf(all.stats.snr()));
    const auto none = thinning_mode(p, opts, 0.0, 5);
    CHECK(none.stats.detected == 0);
    CHECK(none.stats.emitted == all.stats.emitted);
    CHECK(none.stats.snr() == 0.0);

    Rng rng(3);
    const auto thinned = thin_record(all.record, 0.5, rng);
    CHECK(thinned.jump_times == all.record.jump_times);
    CHECK(thinned.photocount.back() == thinned.detections());
    for (std::size_t k = 1; k < thinned.photocount.size(); ++k) CHECK(thinned.photocount[k] >= thinned.photocount[k - 1]);
    CHECK_THROWS_AS(thin_record(all.record, -0.1, rng), std::invalid_argument);
}

TEST_CASE("thinned counts are binomial") {
    TrajectoryRecord rec;
    rec.times = {0.0, 1.0};
    rec.photocount = {0, 0};
    for (int i = 0; i < 100; ++i) {
        rec.jump_times.push_back(0.005 * i);
        rec.jump_channels.push_back(0);
        rec.detected.push_back(true);
    }
    Rng rng(77);
    const int reps = 4000;
    double s = 0.0;
    double s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const double n = static_cast<double>(thin_record(rec, 0.3, rng).photocount.back());
        s += n;
        s2 += n * n;
    }
    const double mean = s / reps;
    const double var = s2 / reps - mean * mean;
    CHECK(std::abs(mean - 30.0) < 4.0 * std::sqrt(21.0 / reps));
    CHECK(std::abs(var - 21.0) < 4.0 * 21.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("detection statistics helpers") {
    CHECK(min_efficiency(1.0, 0.05, 50.0) == doctest::Approx(0.008).epsilon(1e-12));
    CHECK(min_efficiency(1.0, 1.0, 8.0) == doctest::Approx(1.0 / 64.0));
    CHECK(min_efficiency(1.0, 1.0, 1e6) < 1e-11);
    CHECK(min_efficiency(10.0, 0.01, 1.0) == 1.0);
    CHECK_THROWS_AS(min_efficiency(1.0, 0.0, 5.0), std::invalid_argument);
    const DetectionStats d{100, 50, 0.5};
    CHECK(d.expected_mean() == 50.0);
    CHECK(d.expected_variance() == 25.0);
    CHECK(d.snr() == doctest::Approx(10.0));
    const DetectionStats q{400, 0, 0.2};
    CHECK(q.snr() == doctest::Approx(std::sqrt(0.25) * 20.0));
}

TEST_CASE("density-matrix capacity") {
    SmeProblem p;
    p.basis = std::make_shared<const FockBasis>(10, 5, 5);
    CHECK_THROWS_AS(run_sme(p, {}, 1), CapacityError);
}
