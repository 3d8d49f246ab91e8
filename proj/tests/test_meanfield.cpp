#include "doctest.h"

#include "fermimon/errors.hpp"
#include "fermimon/meanfield.hpp"
#include "fermimon/observables.hpp"
#include "oracle.hpp"

#include <cmath>
#include <numbers>

using namespace fermimon;

namespace {

MeanFieldParams odd_sites_params(int L, int N, double gamma, Boundary bc = Boundary::Antiperiodic) {
    MeanFieldParams p;
    p.sites = L;
    p.particles = N;
    p.gamma = gamma;
    p.boundary = bc;
    p.profile = diffraction_profile(odd_sites_geometry(L));
    return p;
}

struct ExactChain {
    std::shared_ptr<const FockBasis> basis;
    SparseOperator h;
    SparseOperator c;
    SparseOperator n_odd;
    StateVector sea;
};

ExactChain exact_chain(int L, int N, double gamma) {
    ExactChain e;
    e.basis = std::make_shared<const FockBasis>(L, N, 0);
    e.h = build_hubbard(*e.basis, {1.0, 0.0, Boundary::Antiperiodic});
    e.c = build_jump_operator(*e.basis, diffraction_profile(odd_sites_geometry(L)), {Polarization::CircularL, gamma});
    e.n_odd = SparseOperator::zero(e.basis->size());
    for (int j = 1; j < L; j += 2) e.n_odd = e.n_odd + number_operator(*e.basis, j, Spin::Up);
    e.sea = ground_state(e.h).state;
    return e;
}

}  // namespace

TEST_CASE("Fermi sea initialization") {
    const MeanFieldState s = init_fermi_sea(8, 4, Boundary::Antiperiodic);
    CHECK(s.n == std::vector<double>{1, 1, 0, 0, 0, 0, 1, 1});
    CHECK(s.alpha.size() == 4);
    CHECK_FALSE(s.fractional);

    const MeanFieldState p = init_fermi_sea(4, 2, Boundary::Periodic);
    CHECK(p.fractional);
    CHECK(p.n == std::vector<double>{1, 0.5, 0, 0.5});

    CHECK_THROWS_AS(init_fermi_sea(8, 9), ConfigError);
    // Half a particle in k = +-pi/4 splits the (pi/4, 5 pi/4) pair.
    CHECK_THROWS_AS(MeanFieldModel(odd_sites_params(8, 2, 0.1, Boundary::Periodic)).initial_state(), ConfigError);
    CHECK_NOTHROW(MeanFieldModel(odd_sites_params(4, 2, 0.1, Boundary::Periodic)).initial_state());
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(MeanFieldModel(odd_sites_params(7, 3, 0.1)), ConfigError);
    CHECK_THROWS_AS(MeanFieldModel(odd_sites_params(8, 4, 0.1, Boundary::Open)), ConfigError);
    MeanFieldParams p = odd_sites_params(8, 4, 0.1);
    p.profile = diffraction_profile(period3_geometry(8));
    CHECK_THROWS_AS(MeanFieldModel{p}, ConfigError);
    p.profile.pop_back();
    CHECK_THROWS_AS(MeanFieldModel{p}, ConfigError);
    const MeanFieldModel m(odd_sites_params(8, 4, 0.1));
    CHECK(m.u() == doctest::Approx(0.5));
    CHECK(m.v() == doctest::Approx(-0.5));
    CHECK(m.energies()[0] == doctest::Approx(-2.0 * std::cos(std::numbers::pi / 8.0)));
}

TEST_CASE("free evolution rotates the pair coherences") {
    const MeanFieldModel m(odd_sites_params(8, 4, 0.0));
    MeanFieldState s = m.initial_state();
    s.alpha[0] = cplx(0.2, 0.1);
    const cplx a0 = s.alpha[0];
    const double de = m.energies()[0] - m.energies()[4];
    for (int i = 0; i < 1000; ++i) m.drift(s, 1e-3);
    CHECK(std::abs(s.alpha[0] - a0 * std::polar(1.0, de * 1.0)) < 1e-10);
    for (std::size_t q = 1; q < 4; ++q) CHECK(std::abs(s.alpha[q]) == 0.0);
    CHECK(s.n == std::vector<double>{1, 1, 0, 0, 0, 0, 1, 1});
    CHECK(s.log_norm == 0.0);
}

TEST_CASE("a single pair is a two-level system") {
    // L = 2: one pair (k = 0, pi). The closure is exact here.
    MeanFieldParams p;
    p.sites = 2;
    p.particles = 1;
    p.gamma = 0.35;
    p.boundary = Boundary::Periodic;
    p.profile = {0.8, 0.2};
    const MeanFieldModel m(p);
    const double u = 0.5;
    const double v = 0.3;
    const double g = std::sqrt(2.0 * p.gamma);
    CMatrix sx(2, 2);
    sx << 0.0, 1.0, 1.0, 0.0;
    const CMatrix c = g * (u * CMatrix::Identity(2, 2) + v * sx);
    CMatrix heff = CMatrix::Zero(2, 2);
    heff(0, 0) = m.energies()[0];
    heff(1, 1) = m.energies()[1];
    heff -= cplx(0.0, 0.5) * c.adjoint() * c;

    CVector psi(2);
    psi << cplx(0.6, 0.1), cplx(-0.3, 0.7);
    psi.normalize();
    MeanFieldState s;
    s.n = {std::norm(psi(0)), std::norm(psi(1))};
    s.alpha = {std::conj(psi(0)) * psi(1)};

    auto compare = [&](const CVector& x, const MeanFieldState& st, double tol) {
        const double n2 = x.squaredNorm();
        CHECK(std::abs(st.n[0] - std::norm(x(0)) / n2) < tol);
        CHECK(std::abs(st.n[1] - std::norm(x(1)) / n2) < tol);
        CHECK(std::abs(st.alpha[0] - std::conj(x(0)) * x(1) / n2) < tol);
    };

    const CVector kicked = c * psi;
    CHECK(m.rate(s) == doctest::Approx(kicked.squaredNorm()).epsilon(1e-12));
    MeanFieldState j = s;
    m.jump_update(j);
    compare(kicked, j, 1e-12);

    MeanFieldState d = s;
    for (int i = 0; i < 1000; ++i) m.drift(d, 1e-3);
    const CVector exact = (cplx(0.0, -1.0) * heff).exp() * psi;
    compare(exact, d, 1e-9);
    CHECK(d.log_norm == doctest::Approx(std::log(exact.squaredNorm())).epsilon(1e-9));
}

TEST_CASE("the first jump from the Fermi sea populates odd sites uniformly") {
    const MeanFieldModel m(odd_sites_params(16, 8, 0.5));
    MeanFieldState s = m.initial_state();
    const double before = m.odd_occupation(s);
    CHECK(before == doctest::Approx(4.0));
    m.jump_update(s);
    for (std::size_t q = 1; q < s.alpha.size(); ++q) CHECK(s.alpha[q].real() == doctest::Approx(s.alpha[0].real()));
    CHECK(s.alpha[0].real() < 0.0);
    CHECK(m.odd_occupation(s) > before);
    CHECK(s.log_norm == 0.0);
    CHECK(m.closure_violation(s) <= 1e-12);
}

TEST_CASE("initial photon rate equals the exact Fermi-sea value") {
    for (double gamma : {0.05, 1.0}) {
        const ExactChain e = exact_chain(8, 4, gamma);
        const double exact = expectation(e.c.adjoint() * e.c, e.sea).real();
        const MeanFieldModel m(odd_sites_params(8, 4, gamma));
        CHECK(m.rate(m.initial_state()) == doctest::Approx(exact).epsilon(1e-10));
        CHECK(m.odd_occupation(m.initial_state()) == doctest::Approx(expectation(e.n_odd, e.sea).real()).epsilon(1e-10));
    }
}

TEST_CASE("no-jump drift tracks the exact engine at short times") {
    const double gamma = 0.05;
    const ExactChain e = exact_chain(8, 4, gamma);
    const MeanFieldModel m(odd_sites_params(8, 4, gamma));
    MeanFieldState s = m.initial_state();
    const double n0 = m.odd_occupation(s);
    for (double t : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        while (s.time < t - 1e-12) m.drift(s, 1e-3);
        const StateVector x = evolve_nonhermitian(e.sea, e.h, {e.c}, t, 1e-11);
        const double exact = expectation(e.n_odd, x).real() / x.norm2();
        const double mf = m.odd_occupation(s);
        CHECK(std::abs((mf - n0) - (exact - n0)) <= 0.05 * std::abs(exact - n0));
        CHECK(std::exp(s.log_norm) == doctest::Approx(x.norm2()).epsilon(0.05));
    }
}

TEST_CASE("runs conserve pair sums and particle number") {
    const MeanFieldModel m(odd_sites_params(40, 20, 0.2));
    MeanFieldOptions o;
    o.t_max = 5.0;
    o.k_snapshot_times = {0.0, 2.5, 5.0};
    const MeanFieldRecord r = run_meanfield(m, o, 3, 0);
    CHECK(r.trace.emissions() > 0);
    CHECK(r.max_pair_drift < 1e-6);
    CHECK_FALSE(r.closure_breakdown);
    REQUIRE(r.k_snapshots.size() == 3);
    CHECK(r.k_times == std::vector<double>{0.0, 2.5, 5.0});
    for (const auto& nk : r.k_snapshots) {
        double total = 0.0;
        for (double n : nk) {
            CHECK(n >= -1e-9);
            CHECK(n <= 1.0 + 1e-9);
            total += n;
        }
        CHECK(total == doctest::Approx(20.0).epsilon(1e-9));
        for (std::size_t q = 0; q < 20; ++q) CHECK(std::abs(nk[q] + nk[q + 20] - r.pair_sums[q]) < 1e-6);
    }
    const auto odd = r.trace.series("N_odd");
    for (double x : odd) {
        CHECK(x >= -1e-9);
        CHECK(x <= 20.0 + 1e-9);
    }
    CHECK(r.trace.photocount.back() == r.trace.emissions());

    const MeanFieldRecord again = run_meanfield(m, o, 3, 0);
    CHECK(again.trace.jump_times == r.trace.jump_times);
    CHECK(again.trace.rows == r.trace.rows);
    const MeanFieldRecord other = run_meanfield(m, o, 3, 1);
    CHECK(other.trace.jump_times != r.trace.jump_times);
}

TEST_CASE("located jumps hit the sampled norm threshold") {
    // Between jumps the log-norm decays from zero; each jump resets it.
    const MeanFieldModel m(odd_sites_params(16, 8, 0.3));
    MeanFieldOptions o;
    o.t_max = 3.0;
    const MeanFieldRecord r = run_meanfield(m, o, 8, 0);
    const auto ln = r.trace.series("log_norm");
    for (std::size_t k = 0; k < ln.size(); ++k) CHECK(ln[k] <= 1e-15);
    for (std::size_t k = 1; k < r.trace.jump_times.size(); ++k) CHECK(r.trace.jump_times[k] > r.trace.jump_times[k - 1]);
    CHECK_THROWS_AS(run_meanfield(m, MeanFieldOptions{1.0, 0.0}, 1), ConfigError);
}
