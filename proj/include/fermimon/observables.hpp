#pragma once

// Measured quantities. Fock-diagonal observables (densities, magnetizations,
// staggered magnetization, structure factor) are evaluated from basis-state
// probabilities; momentum observables from the one-body density matrix.
//
// Momentum convention: f_k = L^{-1/2} sum_j e^{-ikj} f_j on the grid
// k_m = 2 pi (m + theta) / L with theta = 0 (periodic) or 1/2 (antiperiodic),
// Q = pi, and k_m + Q = k_{m + L/2}.

#include "fermimon/density_matrix.hpp"
#include "fermimon/fock.hpp"
#include "fermimon/hubbard.hpp"

#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace fermimon {

inline constexpr double kQ = std::numbers::pi;

/// |amplitude|^2 / norm^2 per basis state.
Eigen::VectorXd probabilities(const StateVector& psi);
/// Real diagonal of rho (trace assumed 1).
Eigen::VectorXd probabilities(const DensityMatrix& rho);

struct LocalProfiles {
    std::vector<double> density;        ///< <rho_i>
    std::vector<double> magnetization;  ///< <m_i>
};

LocalProfiles local_profiles(const FockBasis& basis, const Eigen::VectorXd& probs);
LocalProfiles local_profiles(const FockBasis& basis, const StateVector& psi);

/// Eigenvalue of M_s = sum_i (-1)^i m_i on a basis state.
int staggered_magnetization(const BasisState& s, int sites);

/// P(mu) for every M_s eigenvalue mu present in the sector, ascending in mu.
std::vector<std::pair<int, double>> staggered_magnetization_distribution(const FockBasis& basis,
                                                                         const Eigen::VectorXd& probs);

/// Connected correlations C_ij = <m_i m_j> - <m_i><m_j>.
Eigen::MatrixXd magnetization_covariance(const FockBasis& basis, const Eigen::VectorXd& probs);

/// S(q) = (1/L) sum_ij e^{iq(i-j)} C_ij, including i = j.
double structure_factor(const FockBasis& basis, const Eigen::VectorXd& probs, double q);
double structure_factor(const Eigen::MatrixXd& covariance, double q);

/// G(j, l) = <f+_{j,spin} f_{l,spin}> for a (not necessarily normalized) state.
CMatrix one_body_density(const FockBasis& basis, const StateVector& psi, Spin spin);
CMatrix one_body_density(const FockBasis& basis, const DensityMatrix& rho, Spin spin);

/// Precomputed nonzero <t| f+_j f_l |s> (j != l) of one spin species, for
/// repeated one-body density evaluations on the same sector.
class OneBodyTable {
public:
    OneBodyTable(const FockBasis& basis, Spin spin);

    CMatrix density(const StateVector& psi) const;
    CMatrix density(const DensityMatrix& rho) const;

private:
    struct Hop {
        std::uint32_t target;
        std::uint32_t source;
        std::int8_t sign;
        std::uint8_t j;
        std::uint8_t l;
    };
    int sites_;
    std::vector<Hop> hops_;
    std::vector<std::uint32_t> occupation_;  ///< spin mask per basis state
};

/// k_m grid; throws ConfigError for open chains, where k is not a good label.
std::vector<double> momentum_grid(int sites, Boundary boundary);

/// n_k for every grid momentum.
std::vector<double> momentum_occupation(const CMatrix& G, Boundary boundary);
/// alpha_k = <f+_k f_{k+Q}> for every grid momentum (requires even L).
std::vector<cplx> order_parameter(const CMatrix& G, Boundary boundary);
/// <beta+_k beta_k> = (n_k + n_{k+Q})/2 + Re alpha_k for k in the reduced zone m < L/2.
std::vector<double> beta_occupations(const std::vector<double>& n, const std::vector<cplx>& alpha);

/// <c+ c> on the normalized state.
double photocount_rate(const StateVector& psi, const SparseOperator& c);
double photocount_rate(const DensityMatrix& rho, const SparseOperator& c);

/// Weighted site-number sum_i w_i rho_i evaluated per basis state.
Eigen::VectorXd diagonal_values(const FockBasis& basis, const std::vector<double>& site_weights,
                                double up_weight = 1.0, double down_weight = 1.0);

/// Mean and variance of a Fock-diagonal observable.
std::pair<double, double> diagonal_moments(const Eigen::VectorXd& values, const Eigen::VectorXd& probs);

enum class ObservableKind {
    Density,
    Magnetization,
    StaggeredMagnetization,
    StaggeredMagnetizationSquared,
    StaggeredDistribution,
    StructureFactorQ,
    StaggeredComponent,
    OddOccupation,
    OddOccupationVariance,
    MomentumOccupation,
    OrderParameter,
    BetaOccupation,
    PhotocountRate,
};

std::string to_string(ObservableKind k);
ObservableKind observable_from_string(const std::string& s);

/// Named selection of observables bound to one sector; produces one CSV row per snapshot.
class ObservableSet {
public:
    ObservableSet(std::shared_ptr<const FockBasis> basis, Boundary boundary, std::vector<ObservableKind> kinds,
                  std::vector<SparseOperator> channels = {});

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<ObservableKind>& kinds() const noexcept { return kinds_; }

    /// Evaluates on a state; the state is normalized internally.
    std::vector<double> evaluate(const StateVector& psi) const;
    std::vector<double> evaluate(const DensityMatrix& rho) const;

private:
    template <class State>
    std::vector<double> evaluate_impl(const State& state, const Eigen::VectorXd& probs) const;

    std::shared_ptr<const FockBasis> basis_;
    Boundary boundary_;
    std::vector<ObservableKind> kinds_;
    std::vector<SparseOperator> channels_;
    std::vector<int> ms_values_;
    Eigen::VectorXd odd_counts_;
    std::vector<Spin> momentum_spins_;
    std::vector<OneBodyTable> hop_tables_;
    std::vector<std::string> columns_;
};

}  // namespace fermimon
