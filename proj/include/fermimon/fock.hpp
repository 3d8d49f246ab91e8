#pragma once

// Fermionic Fock-space kernel for a 1D chain with two spin species.
//
// Mode ordering used for Jordan-Wigner signs: all spin-up modes (site 0..L-1)
// followed by all spin-down modes (site 0..L-1). Basis states within a sector
// are ordered lexicographically on the concatenated occupation strings
// up[0] up[1] ... up[L-1] down[0] ... down[L-1], with '0' < '1'.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fermimon {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr std::size_t kPureStateCapacity = 200000;
inline constexpr std::size_t kDensityMatrixCapacity = 10000;
inline constexpr int kMaxSites = 32;
inline constexpr int kMaxMeanFieldSites = 1 << 16;

enum class Spin { Up, Down };
enum class LadderKind { Create, Annihilate };

/// Occupation bit masks; bit i set means site i is occupied.
struct BasisState {
    std::uint32_t up = 0;
    std::uint32_t down = 0;

    friend bool operator==(const BasisState&, const BasisState&) = default;
};

/// Parses "1010" style strings (site 0 first) into a mask.
std::uint32_t parse_occupation(const std::string& bits);
std::string format_occupation(std::uint32_t mask, int sites);

struct Ladder {
    int site = 0;
    Spin spin = Spin::Up;
    LadderKind kind = LadderKind::Annihilate;
};

inline Ladder create(int site, Spin spin) { return {site, spin, LadderKind::Create}; }
inline Ladder annihilate(int site, Spin spin) { return {site, spin, LadderKind::Annihilate}; }

/// coefficient * ops[0] ops[1] ... ops[n-1]; the rightmost operator acts first.
struct Term {
    cplx coefficient{1.0, 0.0};
    std::vector<Ladder> ops;
};

/// Result of a single ladder operator: sign and the new state, or nothing if the
/// action vanishes (Pauli blocked or vacant).
std::optional<std::pair<int, BasisState>> apply_ladder(const BasisState& state, const Ladder& op);

class FockBasis {
public:
    FockBasis(int sites, int n_up, int n_down, std::size_t capacity = kPureStateCapacity);

    int sites() const noexcept { return sites_; }
    int n_up() const noexcept { return n_up_; }
    int n_down() const noexcept { return n_down_; }
    std::size_t size() const noexcept { return states_.size(); }

    const BasisState& state(std::size_t ordinal) const { return states_[ordinal]; }
    const std::vector<BasisState>& states() const noexcept { return states_; }

    /// Ordinal of a state, or nullopt if it lies outside this sector.
    std::optional<std::size_t> index(const BasisState& s) const;

    /// Exact sector dimension C(L, N_up) * C(L, N_down) without enumerating.
    static std::size_t dimension(int sites, int n_up, int n_down);

private:
    std::size_t rank(std::uint32_t mask, int particles) const;

    int sites_;
    int n_up_;
    int n_down_;
    std::size_t down_count_;
    std::vector<std::vector<std::size_t>> binom_;
    std::vector<BasisState> states_;
};

FockBasis build_basis(int sites, int n_up, int n_down, std::size_t capacity = kPureStateCapacity);

/// Complex sparse matrix over a sector. Assembled from coordinate triplets,
/// stored compressed (row-major) for fast application.
class SparseOperator {
public:
    using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

    SparseOperator() = default;
    explicit SparseOperator(Matrix m) : m_(std::move(m)) {}

    static SparseOperator identity(std::size_t dim);
    static SparseOperator zero(std::size_t dim);
    static SparseOperator diagonal(const Eigen::VectorXd& diag);

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    std::size_t nonzeros() const noexcept { return static_cast<std::size_t>(m_.nonZeros()); }
    const Matrix& matrix() const noexcept { return m_; }

    CVector apply(const CVector& v) const;
    void apply(const CVector& v, CVector& out) const;

    SparseOperator adjoint() const;
    /// Upper bound on the spectral norm: max absolute row sum.
    double norm_bound() const;
    bool is_hermitian(double tol = 0.0) const;
    bool is_diagonal() const;
    Eigen::VectorXcd diagonal_values() const;
    CMatrix dense() const;

    std::vector<Eigen::Triplet<cplx>> entries() const;

    friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator*(cplx s, const SparseOperator& a);
    friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);

private:
    Matrix m_;
};

/// Sums the terms into a sparse matrix over the basis. Throws SectorError if any
/// term changes (N_up, N_down), std::invalid_argument for out-of-range sites.
SparseOperator build_operator(const FockBasis& basis, const std::vector<Term>& terms);

/// Pure state over a sector with a cached squared norm.
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(CVector amplitudes);

    const CVector& amplitudes() const noexcept { return amps_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    double norm2() const noexcept { return norm2_; }

    void assign(CVector amplitudes);
    void normalize();
    StateVector normalized() const;

    static StateVector basis_state(std::size_t dim, std::size_t ordinal);

private:
    CVector amps_;
    double norm2_ = 0.0;
};

/// <psi|op|psi> without normalization.
cplx expectation(const SparseOperator& op, const StateVector& psi);

// Convenience builders for one-body operators.
SparseOperator number_operator(const FockBasis& basis, int site, Spin spin);
SparseOperator density_operator(const FockBasis& basis, int site);
SparseOperator magnetization_operator(const FockBasis& basis, int site);
SparseOperator total_number_operator(const FockBasis& basis, Spin spin);
/// sum_i w_i n_{i,spin}
SparseOperator weighted_number_operator(const FockBasis& basis, const std::vector<cplx>& weights,
                                        Spin spin);
/// Permutation swapping up and down occupations (with fermionic reordering sign).
SparseOperator spin_exchange_operator(const FockBasis& basis);
/// One-site cyclic translation c_{j} -> c_{j+1 mod L} (with fermionic reordering sign).
SparseOperator translation_operator(const FockBasis& basis);

}  // namespace fermimon
