#include "fermimon/fock.hpp"

#include "fermimon/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace fermimon {

namespace {

int popcount(std::uint32_t x) { return std::popcount(x); }

std::uint32_t& spin_mask(BasisState& s, Spin spin) { return spin == Spin::Up ? s.up : s.down; }

// Net particle change per spin species for a product of ladders.
std::pair<int, int> particle_change(const Term& term) {
    int up = 0;
    int down = 0;
    for (const auto& op : term.ops) {
        const int d = op.kind == LadderKind::Create ? 1 : -1;
        (op.spin == Spin::Up ? up : down) += d;
    }
    return {up, down};
}

// Masks with `ones` bits over `sites` sites, in lexicographic order of the
// string site0 site1 ... (site 0 most significant, '0' before '1').
std::vector<std::uint32_t> lexicographic_masks(int sites, int ones) {
    std::vector<std::uint32_t> out;
    if (ones == 0) {
        out.push_back(0);
        return out;
    }
    // Enumerate integers with `ones` bits in increasing order (Gosper), where the
    // integer's most significant bit (position sites-1) stands for site 0.
    const std::uint64_t limit = std::uint64_t{1} << sites;
    std::uint64_t v = (std::uint64_t{1} << ones) - 1;
    while (v < limit) {
        std::uint32_t mask = 0;
        for (int b = 0; b < sites; ++b) {
            if (v & (std::uint64_t{1} << b)) mask |= 1u << (sites - 1 - b);
        }
        out.push_back(mask);
        const std::uint64_t c = v & (~v + 1);
        const std::uint64_t r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    return out;
}

}  // namespace

std::uint32_t parse_occupation(const std::string& bits) {
    if (bits.size() > static_cast<std::size_t>(kMaxSites)) {
        throw std::invalid_argument("occupation string longer than " + std::to_string(kMaxSites));
    }
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') {
            mask |= 1u << i;
        } else if (bits[i] != '0') {
            throw std::invalid_argument("occupation string must contain only 0/1: " + bits);
        }
    }
    return mask;
}

std::string format_occupation(std::uint32_t mask, int sites) {
    std::string s(static_cast<std::size_t>(sites), '0');
    for (int i = 0; i < sites; ++i) {
        if (mask & (1u << i)) s[static_cast<std::size_t>(i)] = '1';
    }
    return s;
}

std::optional<std::pair<int, BasisState>> apply_ladder(const BasisState& state, const Ladder& op) {
    if (op.site < 0 || op.site >= kMaxSites) {
        throw std::invalid_argument("ladder site out of range: " + std::to_string(op.site));
    }
    const std::uint32_t bit = 1u << op.site;
    const std::uint32_t below = bit - 1u;
    const std::uint32_t target = op.spin == Spin::Up ? state.up : state.down;
    const bool occupied = (target & bit) != 0;
    if (occupied == (op.kind == LadderKind::Create)) return std::nullopt;

    int preceding = 0;
    if (op.spin == Spin::Up) {
        preceding = popcount(state.up & below);
    } else {
        preceding = popcount(state.up) + popcount(state.down & below);
    }
    BasisState out = state;
    spin_mask(out, op.spin) ^= bit;
    return std::make_pair((preceding % 2 == 0) ? 1 : -1, out);
}

// ---------------------------------------------------------------------------
// FockBasis

std::size_t FockBasis::dimension(int sites, int n_up, int n_down) {
    auto choose = [](int n, int k) {
        long double r = 1;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return static_cast<std::size_t>(std::llround(r));
    };
    return choose(sites, n_up) * choose(sites, n_down);
}

FockBasis::FockBasis(int sites, int n_up, int n_down, std::size_t capacity)
    : sites_(sites), n_up_(n_up), n_down_(n_down) {
    if (sites <= 0 || sites > kMaxSites) {
        throw std::invalid_argument("site count must be in 1.." + std::to_string(kMaxSites));
    }
    if (n_up < 0 || n_up > sites || n_down < 0 || n_down > sites) {
        throw std::invalid_argument("particle counts must satisfy 0 <= N <= L");
    }
    const std::size_t dim = dimension(sites, n_up, n_down);
    if (dim > capacity) {
        throw CapacityError("Fock sector L=" + std::to_string(sites) + " N_up="
                                + std::to_string(n_up) + " N_down=" + std::to_string(n_down)
                                + " exceeds the basis budget",
                            dim, capacity);
    }

    binom_.assign(static_cast<std::size_t>(sites) + 1,
                  std::vector<std::size_t>(static_cast<std::size_t>(sites) + 1, 0));
    for (int n = 0; n <= sites; ++n) {
        binom_[n][0] = 1;
        for (int k = 1; k <= n; ++k) binom_[n][k] = binom_[n - 1][k - 1] + (k <= n - 1 ? binom_[n - 1][k] : 0);
    }

    const auto ups = lexicographic_masks(sites, n_up);
    const auto downs = lexicographic_masks(sites, n_down);
    down_count_ = downs.size();
    states_.reserve(ups.size() * downs.size());
    for (auto u : ups) {
        for (auto d : downs) states_.push_back({u, d});
    }
}

std::size_t FockBasis::rank(std::uint32_t mask, int particles) const {
    // Strings sharing a prefix but carrying '0' where `mask` carries '1' come first.
    std::size_t r = 0;
    int remaining = particles;
    for (int i = 0; i < sites_ && remaining > 0; ++i) {
        if (mask & (1u << i)) {
            r += binom_[sites_ - i - 1][remaining];
            --remaining;
        }
    }
    return r;
}

std::optional<std::size_t> FockBasis::index(const BasisState& s) const {
    const std::uint32_t valid = sites_ == 32 ? 0xffffffffu : ((1u << sites_) - 1u);
    if ((s.up & ~valid) || (s.down & ~valid)) return std::nullopt;
    if (popcount(s.up) != n_up_ || popcount(s.down) != n_down_) return std::nullopt;
    return rank(s.up, n_up_) * down_count_ + rank(s.down, n_down_);
}

FockBasis build_basis(int sites, int n_up, int n_down, std::size_t capacity) {
    return FockBasis(sites, n_up, n_down, capacity);
}

// ---------------------------------------------------------------------------
// SparseOperator

SparseOperator SparseOperator::identity(std::size_t dim) {
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setIdentity();
    return SparseOperator(std::move(m));
}

SparseOperator SparseOperator::zero(std::size_t dim) {
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

SparseOperator SparseOperator::diagonal(const Eigen::VectorXd& diag) {
    const auto n = diag.size();
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (diag[i] != 0.0) trips.emplace_back(i, i, cplx(diag[i], 0.0));
    }
    Matrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

CVector SparseOperator::apply(const CVector& v) const {
    CVector out;
    apply(v, out);
    return out;
}

void SparseOperator::apply(const CVector& v, CVector& out) const {
    if (v.size() != m_.cols()) {
        throw std::invalid_argument("operator/state dimension mismatch: " + std::to_string(m_.cols())
                                    + " vs " + std::to_string(v.size()));
    }
    out.noalias() = m_ * v;
}

SparseOperator SparseOperator::adjoint() const {
    Matrix a = m_.adjoint();
    a.makeCompressed();
    return SparseOperator(std::move(a));
}

double SparseOperator::norm_bound() const {
    double best = 0.0;
    for (Eigen::Index r = 0; r < m_.outerSize(); ++r) {
        double row = 0.0;
        for (Matrix::InnerIterator it(m_, r); it; ++it) row += std::abs(it.value());
        best = std::max(best, row);
    }
    return best;
}

bool SparseOperator::is_hermitian(double tol) const {
    const Matrix diff = m_ - Matrix(m_.adjoint());
    for (Eigen::Index r = 0; r < diff.outerSize(); ++r) {
        for (Matrix::InnerIterator it(diff, r); it; ++it) {
            if (std::abs(it.value()) > tol) return false;
        }
    }
    return true;
}

bool SparseOperator::is_diagonal() const {
    for (Eigen::Index r = 0; r < m_.outerSize(); ++r) {
        for (Matrix::InnerIterator it(m_, r); it; ++it) {
            if (it.col() != r && it.value() != cplx(0.0)) return false;
        }
    }
    return true;
}

Eigen::VectorXcd SparseOperator::diagonal_values() const { return m_.diagonal(); }

CMatrix SparseOperator::dense() const { return CMatrix(m_); }

std::vector<Eigen::Triplet<cplx>> SparseOperator::entries() const {
    std::vector<Eigen::Triplet<cplx>> out;
    out.reserve(nonzeros());
    for (Eigen::Index r = 0; r < m_.outerSize(); ++r) {
        for (Matrix::InnerIterator it(m_, r); it; ++it) out.emplace_back(it.row(), it.col(), it.value());
    }
    return out;
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    SparseOperator::Matrix m = a.m_ + b.m_;
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    SparseOperator::Matrix m = a.m_ - b.m_;
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

SparseOperator operator*(cplx s, const SparseOperator& a) {
    SparseOperator::Matrix m = s * a.m_;
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    SparseOperator::Matrix m = (a.m_ * b.m_).pruned(0.0);
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

// ---------------------------------------------------------------------------
// Assembly

SparseOperator build_operator(const FockBasis& basis, const std::vector<Term>& terms) {
    for (const auto& term : terms) {
        for (const auto& op : term.ops) {
            if (op.site < 0 || op.site >= basis.sites()) {
                throw std::invalid_argument("ladder site " + std::to_string(op.site)
                                            + " outside chain of " + std::to_string(basis.sites()));
            }
        }
        const auto [du, dd] = particle_change(term);
        if (du != 0 || dd != 0) {
            throw SectorError("operator term changes the particle numbers (dN_up="
                              + std::to_string(du) + ", dN_down=" + std::to_string(dd) + ")");
        }
    }

    const auto dim = static_cast<Eigen::Index>(basis.size());
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(basis.size() * std::max<std::size_t>(terms.size() / 2, 1));

    for (Eigen::Index col = 0; col < dim; ++col) {
        const BasisState& start = basis.state(static_cast<std::size_t>(col));
        for (const auto& term : terms) {
            if (term.coefficient == cplx(0.0)) continue;
            BasisState s = start;
            int sign = 1;
            bool alive = true;
            for (auto it = term.ops.rbegin(); it != term.ops.rend(); ++it) {
                const auto res = apply_ladder(s, *it);
                if (!res) {
                    alive = false;
                    break;
                }
                sign *= res->first;
                s = res->second;
            }
            if (!alive) continue;
            const auto row = basis.index(s);
            if (!row) continue;
            trips.emplace_back(static_cast<Eigen::Index>(*row), col, term.coefficient * static_cast<double>(sign));
        }
    }

    SparseOperator::Matrix m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    m.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return v != cplx(0.0); });
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(CVector amplitudes) { assign(std::move(amplitudes)); }

void StateVector::assign(CVector amplitudes) {
    amps_ = std::move(amplitudes);
    norm2_ = amps_.squaredNorm();
}

void StateVector::normalize() {
    if (norm2_ <= 0.0) throw NumericalError("cannot normalize a zero state");
    amps_ /= std::sqrt(norm2_);
    norm2_ = amps_.squaredNorm();
}

StateVector StateVector::normalized() const {
    StateVector copy = *this;
    copy.normalize();
    return copy;
}

StateVector StateVector::basis_state(std::size_t dim, std::size_t ordinal) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(ordinal)] = 1.0;
    return StateVector(std::move(v));
}

cplx expectation(const SparseOperator& op, const StateVector& psi) {
    if (op.dimension() != psi.dimension()) {
        throw std::invalid_argument("expectation: operator dimension " + std::to_string(op.dimension())
                                    + " does not match state dimension "
                                    + std::to_string(psi.dimension()));
    }
    return psi.amplitudes().dot(op.apply(psi.amplitudes()));
}

// ---------------------------------------------------------------------------
// Common operators

SparseOperator number_operator(const FockBasis& basis, int site, Spin spin) {
    return build_operator(basis, {{1.0, {create(site, spin), annihilate(site, spin)}}});
}

SparseOperator density_operator(const FockBasis& basis, int site) {
    return build_operator(basis, {{1.0, {create(site, Spin::Up), annihilate(site, Spin::Up)}},
                                  {1.0, {create(site, Spin::Down), annihilate(site, Spin::Down)}}});
}

SparseOperator magnetization_operator(const FockBasis& basis, int site) {
    return build_operator(basis, {{1.0, {create(site, Spin::Up), annihilate(site, Spin::Up)}},
                                  {-1.0, {create(site, Spin::Down), annihilate(site, Spin::Down)}}});
}

SparseOperator total_number_operator(const FockBasis& basis, Spin spin) {
    return weighted_number_operator(basis, std::vector<cplx>(static_cast<std::size_t>(basis.sites()), 1.0), spin);
}

SparseOperator weighted_number_operator(const FockBasis& basis, const std::vector<cplx>& weights,
                                        Spin spin) {
    if (weights.size() != static_cast<std::size_t>(basis.sites())) {
        throw std::invalid_argument("weight profile length does not match the chain length");
    }
    std::vector<Term> terms;
    for (int i = 0; i < basis.sites(); ++i) {
        terms.push_back({weights[static_cast<std::size_t>(i)], {create(i, spin), annihilate(i, spin)}});
    }
    return build_operator(basis, terms);
}

SparseOperator spin_exchange_operator(const FockBasis& basis) {
    if (basis.n_up() != basis.n_down()) {
        throw SectorError("spin exchange maps the sector outside itself unless N_up == N_down");
    }
    // |U,D> -> (-1)^{N_up N_down} |D,U> after reordering the creators.
    const double sign = (basis.n_up() * basis.n_down()) % 2 == 0 ? 1.0 : -1.0;
    const auto dim = static_cast<Eigen::Index>(basis.size());
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(basis.size());
    for (Eigen::Index col = 0; col < dim; ++col) {
        const auto& s = basis.state(static_cast<std::size_t>(col));
        const auto row = basis.index({s.down, s.up});
        trips.emplace_back(static_cast<Eigen::Index>(*row), col, sign);
    }
    SparseOperator::Matrix m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

SparseOperator translation_operator(const FockBasis& basis) {
    const int L = basis.sites();
    const std::uint32_t last = 1u << (L - 1);
    const std::uint32_t valid = L == 32 ? 0xffffffffu : ((1u << L) - 1u);
    auto shift = [&](std::uint32_t mask, int n, double& sign) {
        std::uint32_t out = (mask << 1) & valid;
        if (mask & last) {
            out |= 1u;
            if ((n - 1) % 2 != 0) sign = -sign;
        }
        return out;
    };
    const auto dim = static_cast<Eigen::Index>(basis.size());
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(basis.size());
    for (Eigen::Index col = 0; col < dim; ++col) {
        const auto& s = basis.state(static_cast<std::size_t>(col));
        double sign = 1.0;
        const BasisState t{shift(s.up, basis.n_up(), sign), shift(s.down, basis.n_down(), sign)};
        trips.emplace_back(static_cast<Eigen::Index>(*basis.index(t)), col, sign);
    }
    SparseOperator::Matrix m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return SparseOperator(std::move(m));
}

}  // namespace fermimon
