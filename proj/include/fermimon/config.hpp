#pragma once

// Run configuration: JSON ingestion with strict key checking, defaults, and a
// round-trippable echo.

#include "fermimon/hubbard.hpp"
#include "fermimon/observables.hpp"
#include "fermimon/optics.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fermimon {

enum class RunMode { GroundState, Trajectory, Sme, Thinning, MeanField, DescribeGeometry };

std::string to_string(RunMode m);
RunMode mode_from_string(const std::string& s);

struct LatticeConfig {
    int sites = 8;
    int n_up = 4;
    int n_down = 4;
    Boundary boundary = Boundary::Open;
    friend bool operator==(const LatticeConfig&, const LatticeConfig&) = default;
};

struct GeometryConfig {
    std::optional<std::string> preset{"diffraction-minimum"};
    Beam probe;   ///< used when no preset is given
    Beam cavity;
    friend bool operator==(const GeometryConfig&, const GeometryConfig&) = default;
};

struct ChannelConfig {
    Polarization polarization = Polarization::LinearY;
    double gamma = 1.0;
    double efficiency = 1.0;
    std::optional<Profile> custom_profile;
    std::pair<cplx, cplx> spin_weights{1.0, 1.0};
    bool include_bonds = false;
    Profile bond_profile;
    friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

struct InitialStateConfig {
    std::string kind = "ground";  ///< ground | fock | file
    std::string up;               ///< fock: occupation strings, site 0 first
    std::string down;
    std::string path;             ///< file: JSON {"amplitudes": [[re, im], ...]}
    friend bool operator==(const InitialStateConfig&, const InitialStateConfig&) = default;
};

struct EvolutionConfig {
    double t_max = 10.0;
    double snapshot_dt = 0.05;
    double rtol = 1e-8;
    double jump_tol = 1e-10;
    double sme_dt = 0.0;  ///< 0 selects the step from the stability bounds
    double meanfield_dt = 1e-3;
    std::string integrator = "krylov";
    std::optional<long> max_jumps;
    std::vector<double> k_snapshot_times;
    friend bool operator==(const EvolutionConfig&, const EvolutionConfig&) = default;
};

struct EnsembleConfig {
    long trajectories = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;  ///< 0 uses every hardware thread
    friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

struct OutputConfig {
    std::string directory = "fermimon_out";
    bool emit_plot_data = false;
    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
    RunMode mode = RunMode::Trajectory;
    LatticeConfig lattice;
    double J = 1.0;
    double U = 0.0;
    GeometryConfig geometry;
    std::vector<ChannelConfig> channels{ChannelConfig{}};
    InitialStateConfig initial_state;
    EvolutionConfig evolution;
    std::vector<ObservableKind> observables;
    EnsembleConfig ensemble;
    OutputConfig output;

    HubbardParams hubbard() const { return {J, U, lattice.boundary}; }
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Observables recorded when the configuration does not list any.
std::vector<ObservableKind> default_observables(RunMode mode, Boundary boundary);

RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_string(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Full echo including materialized defaults; parse_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& c);

/// Cross-field checks (throws ConfigError). Called by the parsers.
void validate(const RunConfig& c);

MeasurementGeometry geometry_of(const RunConfig& c);
JumpChannel jump_channel_of(const ChannelConfig& ch);

}  // namespace fermimon
