#pragma once

#include "fermimon/fock.hpp"

#include <string>
#include <vector>

namespace fermimon {

enum class Boundary { Open, Periodic, Antiperiodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Nearest-neighbour bonds (i, j) of the chain; the closing bond (L-1, 0) is
/// present for periodic and antiperiodic closures when L > 2.
std::vector<std::pair<int, int>> chain_bonds(int sites, Boundary boundary);

struct HubbardParams {
    double J = 1.0;
    double U = 0.0;
    Boundary boundary = Boundary::Open;
};

/// H0 = -J sum_sigma sum_<ij> (f+_j f_i + h.c.) + U sum_i n_up n_down.
/// The antiperiodic closure flips the sign of the closing bond.
SparseOperator build_hubbard(const FockBasis& basis, const HubbardParams& p);

/// Hopping part with unit amplitude: -sum_sigma sum_<ij> (f+_j f_i + h.c.).
SparseOperator build_hopping(const FockBasis& basis, Boundary boundary);

struct GroundStateOptions {
    double tol = 1e-10;        ///< residual bound relative to ||H||
    double degeneracy_tol = 1e-9;  ///< relative gap below which levels count as degenerate
    int krylov_dim = 120;
    int max_restarts = 200;
    std::size_t dense_threshold = 600;  ///< below this dimension diagonalize densely
    int max_degeneracy = 8;
};

struct GroundState {
    double energy = 0.0;
    StateVector state;
    /// Number of levels within the degeneracy window (1 for a unique ground state).
    int degeneracy = 1;
    /// Gap to the first level outside the degenerate manifold (NaN if unknown).
    double gap = 0.0;
    double residual = 0.0;

    bool degenerate() const { return degeneracy > 1; }
};

/// Lowest eigenpair of a Hermitian operator. A degenerate manifold is reported and
/// represented by the equal-weight sum of its (phase-fixed) basis vectors.
GroundState ground_state(const SparseOperator& H, const GroundStateOptions& opts = {});

/// Single-particle spectrum -2J cos(pi m / (L+1)), m = 1..L, of the open chain, ascending.
std::vector<double> open_chain_levels(int sites, double J);

}  // namespace fermimon
