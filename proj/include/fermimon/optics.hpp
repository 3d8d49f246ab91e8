#pragma once

// Measurement geometry -> scattering coefficient profiles and jump operators.
//
// Site-parity convention: sites are indexed from 0, "odd sites" are 1, 3, 5, ...,
// and the diffraction-minimum profile (-1)^j is +1 on even indices.

#include "fermimon/fock.hpp"
#include "fermimon/hubbard.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fermimon {

using Profile = std::vector<cplx>;

enum class BeamKind { Traveling, Standing };

/// One light mode projected on the lattice axis: kz_d = |k| d cos(theta).
struct Beam {
    BeamKind kind = BeamKind::Traveling;
    double kz_d = 0.0;
    double phase = 0.0;  ///< standing-wave offset (ignored for traveling waves)

    static Beam from_angle(BeamKind kind, double k_d, double theta, double phase = 0.0);
    friend bool operator==(const Beam&, const Beam&) = default;
};

struct MeasurementGeometry {
    Beam probe;   ///< mode 0
    Beam cavity;  ///< mode 1
    int sites = 0;

    friend bool operator==(const MeasurementGeometry&, const MeasurementGeometry&) = default;
};

/// Named geometries: probe perpendicular to the chain with the cavity along it
/// (J_jj = (-1)^j), standing waves lighting odd sites only, and the
/// cos^2(pi j / 4) standing-wave scheme with three distinct coefficients.
MeasurementGeometry diffraction_minimum_geometry(int sites);
MeasurementGeometry odd_sites_geometry(int sites);
MeasurementGeometry period3_geometry(int sites);
MeasurementGeometry geometry_preset(const std::string& name, int sites);
const std::vector<std::string>& geometry_preset_names();

/// Per-site coefficients J_jj in the point-like-atom limit. Components below
/// 1e-12 in magnitude are snapped to zero.
Profile diffraction_profile(const MeasurementGeometry& g);

struct Mode {
    cplx coefficient;
    std::vector<int> sites;
};

/// Groups sites whose coefficients agree within `tol`; modes ordered by first site.
std::vector<Mode> mode_partition(const Profile& profile, double tol = 1e-9);

struct RayleighInputs {
    double coupling = 0.0;   ///< U_sigma
    double amplitude = 0.0;  ///< a_0 (probe coherent amplitude)
    double detuning = 0.0;   ///< cavity-probe detuning Delta_p
    double kappa = 1.0;      ///< cavity decay rate
};

struct RayleighResult {
    cplx coefficient;
    double gamma = 0.0;
    /// kappa >= 10 |Delta_p|; outside this regime the cavity dispersive response matters.
    bool bad_cavity_regime = true;
};

/// C = i U a0 / (i Delta_p - kappa), gamma = kappa |C|^2.
RayleighResult rayleigh_coefficient(const RayleighInputs& r);

enum class Polarization { CircularL, CircularR, LinearX, LinearY, Custom };

std::string to_string(Polarization p);
Polarization polarization_from_string(const std::string& s);

struct JumpChannel {
    Polarization polarization = Polarization::LinearX;
    double gamma = 0.0;
    /// Replaces the geometry profile when present (length L).
    std::optional<Profile> custom_profile;
    /// Spin weights (w_up, w_down) used by the Custom polarization.
    std::pair<cplx, cplx> spin_weights{1.0, 1.0};
    bool include_bonds = false;
    /// J_{i,i+1} coefficients for the bond term; length L-1 (open) or L (ring).
    Profile bond_profile;
};

/// Spin weights (w_up, w_down) of a polarization: L -> (1,0), R -> (0,1),
/// x -> (1,1), y -> (1,-1).
std::pair<cplx, cplx> polarization_weights(const JumpChannel& ch);

/// c = sqrt(2 gamma) * sum_i J_ii (w_up n_{i,up} + w_down n_{i,down}) [+ bond term].
/// The overall phase of the Rayleigh coefficient is dropped.
SparseOperator build_jump_operator(const FockBasis& basis, const Profile& profile, const JumpChannel& ch);

/// B_sigma = sum_b (J_b f+_i f_j + conj(J_b) f+_j f_i) over bonds b = (i, j = i+1 mod L).
SparseOperator build_bond_operator(const FockBasis& basis, const Profile& bond_profile, Spin spin);

/// A_p = (1/L) sum_j A_j e^{i p j} on the grid p = 2 pi m / L, m = 0..L-1, so that
/// sum_j A_j n_j = sum_{k,p} A_p f+_k f_{k+p} with f_k = L^{-1/2} sum_j e^{-ikj} f_j.
Profile momentum_profile(const Profile& profile);

}  // namespace fermimon
