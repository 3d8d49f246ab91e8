#include "doctest.h"

#include "fermimon/optics.hpp"
#include "oracle.hpp"

#include <cmath>
#include <numbers>

using namespace fermimon;

namespace {

constexpr double kPi = std::numbers::pi;

double profile_error(const Profile& p, const std::vector<double>& expect) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) e = std::max(e, std::abs(p[i] - cplx(expect[i], 0.0)));
    return e;
}

CMatrix dense_number(const FockBasis& b, int site, Spin s) { return number_operator(b, site, s).dense(); }

}  // namespace

TEST_CASE("named geometries reproduce their profiles") {
    const Profile dm = diffraction_profile(diffraction_minimum_geometry(8));
    CHECK(profile_error(dm, {1, -1, 1, -1, 1, -1, 1, -1}) < 1e-12);
    const Profile odd = diffraction_profile(odd_sites_geometry(8));
    CHECK(profile_error(odd, {0, 1, 0, 1, 0, 1, 0, 1}) < 1e-12);
    const Profile p3 = diffraction_profile(period3_geometry(9));
    CHECK(profile_error(p3, {1, 0.5, 0, 0.5, 1, 0.5, 0, 0.5, 1}) < 1e-12);
    CHECK(geometry_preset("odd-sites", 8) == odd_sites_geometry(8));
    CHECK_THROWS(geometry_preset("nope", 8));
    CHECK(geometry_preset_names().size() == 3);
}

TEST_CASE("traveling, standing and mixed beam products") {
    const double delta = 2.0 * kPi / 3.0;
    const MeasurementGeometry tt{Beam{BeamKind::Traveling, delta, 0.0}, Beam{BeamKind::Traveling, 0.0, 0.0}, 6};
    const Profile p = diffraction_profile(tt);
    for (int j = 0; j < 6; ++j) CHECK(std::abs(p[static_cast<std::size_t>(j)] - std::polar(1.0, delta * j)) < 1e-12);

    const MeasurementGeometry ss{Beam{BeamKind::Standing, 0.3, 0.2}, Beam{BeamKind::Standing, 0.7, -0.4}, 5};
    const Profile q = diffraction_profile(ss);
    for (int j = 0; j < 5; ++j) {
        CHECK(std::abs(q[static_cast<std::size_t>(j)] - std::cos(0.3 * j + 0.2) * std::cos(0.7 * j - 0.4)) < 1e-12);
    }

    const MeasurementGeometry ts{Beam{BeamKind::Traveling, 0.9, 0.0}, Beam{BeamKind::Standing, 0.5, 0.1}, 5};
    const Profile m = diffraction_profile(ts);
    for (int j = 0; j < 5; ++j) {
        CHECK(std::abs(m[static_cast<std::size_t>(j)] - std::polar(1.0, 0.9 * j) * std::cos(0.5 * j + 0.1)) < 1e-12);
    }
    const Beam b = Beam::from_angle(BeamKind::Traveling, kPi, kPi / 3.0);
    CHECK(b.kz_d == doctest::Approx(kPi / 2.0));
}

TEST_CASE("mode partitions") {
    const auto two = mode_partition(diffraction_profile(diffraction_minimum_geometry(8)));
    REQUIRE(two.size() == 2);
    CHECK(two[0].sites == std::vector<int>{0, 2, 4, 6});
    CHECK(two[1].sites == std::vector<int>{1, 3, 5, 7});

    const MeasurementGeometry tt{Beam{BeamKind::Traveling, 2.0 * kPi / 3.0, 0.0}, Beam{BeamKind::Traveling, 0.0, 0.0}, 6};
    const auto three = mode_partition(diffraction_profile(tt));
    REQUIRE(three.size() == 3);
    for (const auto& m : three) CHECK(m.sites.size() == 2);
    CHECK(three[0].sites == std::vector<int>{0, 3});

    const auto one = mode_partition(Profile(5, cplx(0.7, 0.0)));
    REQUIRE(one.size() == 1);
    CHECK(one[0].sites.size() == 5);

    CHECK(mode_partition(diffraction_profile(period3_geometry(8))).size() == 3);
}

TEST_CASE("Rayleigh coefficient") {
    const auto zero = rayleigh_coefficient({0.0, 1.0, 0.3, 2.0});
    CHECK(std::abs(zero.coefficient) == 0.0);
    CHECK(zero.gamma == 0.0);
    const auto resonant = rayleigh_coefficient({2.0, 3.0, 0.0, 4.0});
    CHECK(std::abs(resonant.coefficient) == doctest::Approx(2.0 * 3.0 / 4.0));
    CHECK(resonant.gamma == doctest::Approx(4.0 * 9.0 / 4.0));
    CHECK(resonant.bad_cavity_regime);
    const auto detuned = rayleigh_coefficient({1.0, 1.0, 1.0, 1.0});
    CHECK(std::norm(detuned.coefficient) == doctest::Approx(0.5));
    CHECK(detuned.gamma == doctest::Approx(0.5));
    CHECK_FALSE(detuned.bad_cavity_regime);
    CHECK_THROWS_AS(rayleigh_coefficient({1.0, 1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("polarization channels") {
    CHECK(polarization_from_string("circular-L") == Polarization::CircularL);
    CHECK(to_string(Polarization::LinearY) == "linear-y");
    CHECK_THROWS(polarization_from_string("diagonal"));
    JumpChannel ch;
    ch.polarization = Polarization::LinearY;
    CHECK(polarization_weights(ch) == std::pair<cplx, cplx>{1.0, -1.0});
    ch.polarization = Polarization::CircularR;
    CHECK(polarization_weights(ch) == std::pair<cplx, cplx>{0.0, 1.0});
    ch.polarization = Polarization::Custom;
    ch.spin_weights = {0.5, 2.0};
    CHECK(polarization_weights(ch) == std::pair<cplx, cplx>{0.5, 2.0});
}

TEST_CASE("staggered magnetization channel on the Neel state") {
    const FockBasis b(4, 2, 2);
    JumpChannel ch{Polarization::LinearY, 0.8};
    const SparseOperator c = build_jump_operator(b, diffraction_profile(diffraction_minimum_geometry(4)), ch);
    const auto k = *b.index({parse_occupation("1010"), parse_occupation("0101")});
    const CVector e = StateVector::basis_state(b.size(), k).amplitudes();
    const CVector ce = c.apply(e);
    CHECK(std::abs(ce(static_cast<Eigen::Index>(k)) - std::sqrt(1.6) * 4.0) < 1e-12);
    CHECK(std::abs((ce - ce(static_cast<Eigen::Index>(k)) * e).norm()) < 1e-14);
}

TEST_CASE("circular-L on odd sites measures odd spin-up atoms") {
    const FockBasis b(4, 2, 2);
    JumpChannel ch{Polarization::CircularL, 0.5};
    const SparseOperator c = build_jump_operator(b, diffraction_profile(odd_sites_geometry(4)), ch);
    const CMatrix expect = dense_number(b, 1, Spin::Up) + dense_number(b, 3, Spin::Up);
    CHECK(oracle::max_abs(c.dense() - expect) < 1e-14);
}

TEST_CASE("linear-x on a constant profile is proportional to N") {
    const FockBasis b(4, 2, 1);
    JumpChannel ch{Polarization::LinearX, 2.0};
    const SparseOperator c = build_jump_operator(b, Profile(4, 1.0), ch);
    const CMatrix expect = 2.0 * 3.0 * CMatrix::Identity(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
    CHECK(oracle::max_abs(c.dense() - expect) < 1e-13);
    CHECK_THROWS_AS(build_jump_operator(b, Profile(3, 1.0), ch), std::invalid_argument);
}

TEST_CASE("custom profile overrides the geometry") {
    const FockBasis b(3, 1, 1);
    JumpChannel ch{Polarization::Custom, 0.5};
    ch.custom_profile = Profile{0.2, -0.4, 1.0};
    ch.spin_weights = {1.0, 0.5};
    const SparseOperator c = build_jump_operator(b, Profile(3, 9.0), ch);
    CMatrix expect = CMatrix::Zero(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
    const double w[3] = {0.2, -0.4, 1.0};
    for (int i = 0; i < 3; ++i) expect += w[i] * (dense_number(b, i, Spin::Up) + 0.5 * dense_number(b, i, Spin::Down));
    CHECK(oracle::max_abs(c.dense() - expect) < 1e-14);
}

TEST_CASE("bond operators") {
    const FockBasis b2(2, 1, 0);
    const SparseOperator single = build_bond_operator(b2, Profile{1.0}, Spin::Up);
    const auto s10 = *b2.index({parse_occupation("10"), 0});
    const auto s01 = *b2.index({parse_occupation("01"), 0});
    const CVector out = single.apply(StateVector::basis_state(2, s10).amplitudes());
    CHECK(std::abs(out(static_cast<Eigen::Index>(s01)) - 1.0) < 1e-15);
    CHECK(std::abs(out(static_cast<Eigen::Index>(s10))) < 1e-15);

    const FockBasis b(4, 2, 1);
    CHECK(build_bond_operator(b, Profile(3, 0.0), Spin::Up).norm_bound() == 0.0);
    CHECK_THROWS_AS(build_bond_operator(b, Profile(2, 1.0), Spin::Up), std::invalid_argument);

    // Uniform ring bonds are the hopping itself and commute with it.
    const SparseOperator ring = build_bond_operator(b, Profile(4, 1.0), Spin::Up);
    const SparseOperator h = build_hubbard(b, {1.0, 0.0, Boundary::Periodic});
    CHECK(oracle::max_abs(ring.dense() * h.dense() - h.dense() * ring.dense()) < 1e-12);
    CHECK(ring.is_hermitian(1e-15));

    // A bond term in a jump channel.
    JumpChannel ch{Polarization::LinearX, 0.5};
    ch.include_bonds = true;
    ch.bond_profile = Profile(3, cplx(0.0, 0.3));
    const SparseOperator c = build_jump_operator(b, Profile(4, 0.0), ch);
    const CMatrix expect = build_bond_operator(b, ch.bond_profile, Spin::Up).dense()
                           + build_bond_operator(b, ch.bond_profile, Spin::Down).dense();
    CHECK(oracle::max_abs(c.dense() - expect) < 1e-14);
}

TEST_CASE("momentum profiles") {
    const Profile flat = momentum_profile(Profile(8, 1.0));
    CHECK(std::abs(flat[0] - 1.0) < 1e-14);
    for (std::size_t m = 1; m < 8; ++m) CHECK(std::abs(flat[m]) < 1e-14);

    const Profile odd = momentum_profile(diffraction_profile(odd_sites_geometry(8)));
    CHECK(std::abs(odd[0] - 0.5) < 1e-14);
    CHECK(std::abs(odd[4] + 0.5) < 1e-14);
    CHECK(std::abs(odd[0]) == doctest::Approx(std::abs(odd[4])));
    for (std::size_t m : {1, 2, 3, 5, 6, 7}) CHECK(std::abs(odd[m]) < 1e-14);

    const Profile stag = momentum_profile(diffraction_profile(diffraction_minimum_geometry(8)));
    CHECK(std::abs(stag[4] - 1.0) < 1e-14);
    for (std::size_t m : {0, 1, 2, 3, 5, 6, 7}) CHECK(std::abs(stag[m]) < 1e-14);
}
