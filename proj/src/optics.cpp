#include "fermimon/optics.hpp"

#include "fermimon/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fermimon {

namespace {

constexpr double kPi = std::numbers::pi;

double snap(double x) { return std::abs(x) < 1e-12 ? 0.0 : x; }

cplx beam_factor(const Beam& b, int j, bool conjugate) {
    const double arg = b.kz_d * j;
    if (b.kind == BeamKind::Standing) return std::cos(arg + b.phase);
    return std::polar(1.0, conjugate ? -arg : arg);
}

}  // namespace

Beam Beam::from_angle(BeamKind kind, double k_d, double theta, double phase) {
    return Beam{kind, k_d * std::cos(theta), phase};
}

MeasurementGeometry diffraction_minimum_geometry(int sites) {
    return {Beam::from_angle(BeamKind::Traveling, kPi, kPi / 2),
            Beam::from_angle(BeamKind::Traveling, kPi, 0.0), sites};
}

MeasurementGeometry odd_sites_geometry(int sites) {
    return {Beam{BeamKind::Standing, kPi / 2, kPi / 2}, Beam{BeamKind::Standing, kPi / 2, kPi / 2}, sites};
}

MeasurementGeometry period3_geometry(int sites) {
    return {Beam{BeamKind::Standing, kPi / 4, 0.0}, Beam{BeamKind::Standing, kPi / 4, 0.0}, sites};
}

const std::vector<std::string>& geometry_preset_names() {
    static const std::vector<std::string> names{"diffraction-minimum", "odd-sites", "period-3"};
    return names;
}

MeasurementGeometry geometry_preset(const std::string& name, int sites) {
    if (name == "diffraction-minimum") return diffraction_minimum_geometry(sites);
    if (name == "odd-sites") return odd_sites_geometry(sites);
    if (name == "period-3") return period3_geometry(sites);
    throw ConfigError("unknown geometry preset '" + name
                      + "' (expected diffraction-minimum, odd-sites or period-3)");
}

Profile diffraction_profile(const MeasurementGeometry& g) {
    if (g.sites <= 0) throw std::invalid_argument("geometry needs a positive site count");
    Profile out;
    out.reserve(static_cast<std::size_t>(g.sites));
    for (int j = 0; j < g.sites; ++j) {
        // u_1^*(r_j) u_0(r_j)
        const cplx v = beam_factor(g.probe, j, false) * beam_factor(g.cavity, j, true);
        out.emplace_back(snap(v.real()), snap(v.imag()));
    }
    return out;
}

std::vector<Mode> mode_partition(const Profile& profile, double tol) {
    std::vector<Mode> modes;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        bool placed = false;
        for (auto& m : modes) {
            if (std::abs(profile[i] - m.coefficient) <= tol) {
                m.sites.push_back(static_cast<int>(i));
                placed = true;
                break;
            }
        }
        if (!placed) modes.push_back({profile[i], {static_cast<int>(i)}});
    }
    return modes;
}

RayleighResult rayleigh_coefficient(const RayleighInputs& r) {
    if (!(r.kappa > 0.0)) throw std::invalid_argument("cavity decay rate kappa must be positive");
    const cplx c = cplx(0.0, r.coupling * r.amplitude) / cplx(-r.kappa, r.detuning);
    return {c, r.kappa * std::norm(c), r.kappa >= 10.0 * std::abs(r.detuning)};
}

std::string to_string(Polarization p) {
    switch (p) {
        case Polarization::CircularL: return "circular-L";
        case Polarization::CircularR: return "circular-R";
        case Polarization::LinearX: return "linear-x";
        case Polarization::LinearY: return "linear-y";
        case Polarization::Custom: return "custom";
    }
    return "custom";
}

Polarization polarization_from_string(const std::string& s) {
    if (s == "circular-L") return Polarization::CircularL;
    if (s == "circular-R") return Polarization::CircularR;
    if (s == "linear-x") return Polarization::LinearX;
    if (s == "linear-y") return Polarization::LinearY;
    if (s == "custom") return Polarization::Custom;
    throw ConfigError("unknown polarization '" + s
                      + "' (expected circular-L, circular-R, linear-x, linear-y or custom)");
}

std::pair<cplx, cplx> polarization_weights(const JumpChannel& ch) {
    switch (ch.polarization) {
        case Polarization::CircularL: return {1.0, 0.0};
        case Polarization::CircularR: return {0.0, 1.0};
        case Polarization::LinearX: return {1.0, 1.0};
        case Polarization::LinearY: return {1.0, -1.0};
        case Polarization::Custom: return ch.spin_weights;
    }
    return {1.0, 1.0};
}

SparseOperator build_bond_operator(const FockBasis& basis, const Profile& bond_profile, Spin spin) {
    const int L = basis.sites();
    const bool ring = bond_profile.size() == static_cast<std::size_t>(L) && L > 2;
    if (!ring && bond_profile.size() != static_cast<std::size_t>(L - 1)) {
        throw std::invalid_argument("bond profile length " + std::to_string(bond_profile.size())
                                    + " does not match " + std::to_string(L - 1) + " (open) or "
                                    + std::to_string(L) + " (ring) bonds");
    }
    std::vector<Term> terms;
    for (std::size_t b = 0; b < bond_profile.size(); ++b) {
        const int i = static_cast<int>(b);
        const int j = (i + 1) % L;
        terms.push_back({bond_profile[b], {create(i, spin), annihilate(j, spin)}});
        terms.push_back({std::conj(bond_profile[b]), {create(j, spin), annihilate(i, spin)}});
    }
    return build_operator(basis, terms);
}

SparseOperator build_jump_operator(const FockBasis& basis, const Profile& profile, const JumpChannel& ch) {
    if (ch.gamma < 0.0) throw std::invalid_argument("measurement strength gamma must be >= 0");
    const Profile& coeffs = ch.custom_profile ? *ch.custom_profile : profile;
    if (coeffs.size() != static_cast<std::size_t>(basis.sites())) {
        throw std::invalid_argument("profile length " + std::to_string(coeffs.size())
                                    + " does not match chain length " + std::to_string(basis.sites()));
    }
    const auto [w_up, w_down] = polarization_weights(ch);
    const double scale = std::sqrt(2.0 * ch.gamma);

    std::vector<Term> terms;
    for (int i = 0; i < basis.sites(); ++i) {
        const cplx J = coeffs[static_cast<std::size_t>(i)];
        if (w_up != cplx(0.0)) terms.push_back({scale * J * w_up, {create(i, Spin::Up), annihilate(i, Spin::Up)}});
        if (w_down != cplx(0.0)) {
            terms.push_back({scale * J * w_down, {create(i, Spin::Down), annihilate(i, Spin::Down)}});
        }
    }
    SparseOperator c = build_operator(basis, terms);
    if (ch.include_bonds) {
        if (ch.bond_profile.empty()) throw std::invalid_argument("include_bonds requires a bond profile");
        if (w_up != cplx(0.0)) c = c + (scale * w_up) * build_bond_operator(basis, ch.bond_profile, Spin::Up);
        if (w_down != cplx(0.0)) {
            c = c + (scale * w_down) * build_bond_operator(basis, ch.bond_profile, Spin::Down);
        }
    }
    return c;
}

Profile momentum_profile(const Profile& profile) {
    const auto L = profile.size();
    Profile out(L);
    for (std::size_t m = 0; m < L; ++m) {
        const double p = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(L);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < L; ++j) acc += profile[j] * std::polar(1.0, p * static_cast<double>(j));
        acc /= static_cast<double>(L);
        out[m] = {snap(acc.real()), snap(acc.imag())};
    }
    return out;
}

}  // namespace fermimon
