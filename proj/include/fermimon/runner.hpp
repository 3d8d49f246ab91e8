#pragma once

// Builds models from a RunConfig and runs each mode into an artifact directory.

#include "fermimon/config.hpp"
#include "fermimon/meanfield.hpp"
#include "fermimon/sme.hpp"
#include "fermimon/trajectory.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fermimon {

struct Model {
    std::shared_ptr<const FockBasis> basis;
    SparseOperator hamiltonian;
    Profile profile;
    std::vector<SparseOperator> channels;
};

Model build_model(const RunConfig& c);
/// Ground state, Fock state or amplitudes loaded from file, per initial_state.
StateVector initial_state(const RunConfig& c, const Model& m);

EvolutionOptions evolution_options(const RunConfig& c);
TrajectoryProblem trajectory_problem(const RunConfig& c);
SmeProblem sme_problem(const RunConfig& c);
MeanFieldModel meanfield_model(const RunConfig& c);
MeanFieldOptions meanfield_options(const RunConfig& c);

/// index, re_J, im_J, mode, re_A, im_A (A_p at p = 2 pi index / L).
std::string describe_geometry_csv(const RunConfig& c);

struct RunResult {
    std::string directory;
    std::vector<std::string> files;
    long emissions = 0;
};

/// Runs the configured mode and writes its artifacts under output.directory.
RunResult run(const RunConfig& c);

}  // namespace fermimon
