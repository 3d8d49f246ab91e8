#include "fermimon/observables.hpp"

#include "fermimon/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace fermimon {

namespace {

int bit(std::uint32_t mask, int i) { return static_cast<int>((mask >> i) & 1u); }

std::uint32_t spin_mask(const BasisState& s, Spin spin) { return spin == Spin::Up ? s.up : s.down; }

const char* spin_tag(Spin s) { return s == Spin::Up ? "up" : "dn"; }

}  // namespace

Eigen::VectorXd probabilities(const StateVector& psi) {
    if (!(psi.norm2() > 0.0)) throw NumericalError("probabilities: zero state");
    return psi.amplitudes().cwiseAbs2() / psi.norm2();
}

Eigen::VectorXd probabilities(const DensityMatrix& rho) {
    Eigen::VectorXd p = rho.matrix().diagonal().real();
    const double t = p.sum();
    if (!(t > 0.0)) throw NumericalError("probabilities: density matrix has no weight");
    return p / t;
}

LocalProfiles local_profiles(const FockBasis& basis, const Eigen::VectorXd& probs) {
    const int L = basis.sites();
    LocalProfiles out{std::vector<double>(static_cast<std::size_t>(L), 0.0),
                      std::vector<double>(static_cast<std::size_t>(L), 0.0)};
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const double p = probs[static_cast<Eigen::Index>(k)];
        if (p == 0.0) continue;
        const auto& s = basis.state(k);
        for (int i = 0; i < L; ++i) {
            const int u = bit(s.up, i);
            const int d = bit(s.down, i);
            out.density[static_cast<std::size_t>(i)] += p * (u + d);
            out.magnetization[static_cast<std::size_t>(i)] += p * (u - d);
        }
    }
    return out;
}

LocalProfiles local_profiles(const FockBasis& basis, const StateVector& psi) {
    return local_profiles(basis, probabilities(psi));
}

int staggered_magnetization(const BasisState& s, int sites) {
    int ms = 0;
    for (int i = 0; i < sites; ++i) {
        const int m = bit(s.up, i) - bit(s.down, i);
        ms += (i % 2 == 0) ? m : -m;
    }
    return ms;
}

std::vector<std::pair<int, double>> staggered_magnetization_distribution(const FockBasis& basis,
                                                                         const Eigen::VectorXd& probs) {
    std::map<int, double> hist;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        hist[staggered_magnetization(basis.state(k), basis.sites())] += probs[static_cast<Eigen::Index>(k)];
    }
    return {hist.begin(), hist.end()};
}

Eigen::MatrixXd magnetization_covariance(const FockBasis& basis, const Eigen::VectorXd& probs) {
    const int L = basis.sites();
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(L, L);
    Eigen::VectorXd first = Eigen::VectorXd::Zero(L);
    Eigen::VectorXd m(L);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const double p = probs[static_cast<Eigen::Index>(k)];
        if (p == 0.0) continue;
        const auto& s = basis.state(k);
        for (int i = 0; i < L; ++i) m[i] = bit(s.up, i) - bit(s.down, i);
        first += p * m;
        second.noalias() += p * m * m.transpose();
    }
    return second - first * first.transpose();
}

double structure_factor(const Eigen::MatrixXd& covariance, double q) {
    const auto L = covariance.rows();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = 0; j < L; ++j) acc += std::cos(q * static_cast<double>(i - j)) * covariance(i, j);
    }
    return acc / static_cast<double>(L);
}

double structure_factor(const FockBasis& basis, const Eigen::VectorXd& probs, double q) {
    return structure_factor(magnetization_covariance(basis, probs), q);
}

namespace {

// Calls f(t, s, sign) for every nonzero <t| f+_j f_l |s> = sign, with (j, l) passed too.
template <class F>
void for_each_hop(const FockBasis& basis, Spin spin, F&& f) {
    const int L = basis.sites();
    for (std::size_t s = 0; s < basis.size(); ++s) {
        const BasisState& st = basis.state(s);
        const std::uint32_t occ = spin_mask(st, spin);
        for (int l = 0; l < L; ++l) {
            if (!bit(occ, l)) continue;
            const auto a = apply_ladder(st, annihilate(l, spin));
            for (int j = 0; j < L; ++j) {
                const auto c = apply_ladder(a->second, create(j, spin));
                if (!c) continue;
                const auto t = (j == l) ? std::optional<std::size_t>(s) : basis.index(c->second);
                f(*t, s, a->first * c->first, j, l);
            }
        }
    }
}

}  // namespace

CMatrix one_body_density(const FockBasis& basis, const StateVector& psi, Spin spin) {
    if (psi.dimension() != basis.size()) throw std::invalid_argument("one_body_density: dimension mismatch");
    const int L = basis.sites();
    CMatrix G = CMatrix::Zero(L, L);
    const CVector& a = psi.amplitudes();
    for_each_hop(basis, spin, [&](std::size_t t, std::size_t s, int sign, int j, int l) {
        G(j, l) += static_cast<double>(sign) * std::conj(a[static_cast<Eigen::Index>(t)])
                   * a[static_cast<Eigen::Index>(s)];
    });
    return G / psi.norm2();
}

CMatrix one_body_density(const FockBasis& basis, const DensityMatrix& rho, Spin spin) {
    if (rho.dimension() != basis.size()) throw std::invalid_argument("one_body_density: dimension mismatch");
    const int L = basis.sites();
    CMatrix G = CMatrix::Zero(L, L);
    const CMatrix& r = rho.matrix();
    // Tr[rho A] = sum rho(s, t) A(t, s)
    for_each_hop(basis, spin, [&](std::size_t t, std::size_t s, int sign, int j, int l) {
        G(j, l) += static_cast<double>(sign) * r(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
    });
    return G / rho.trace();
}

OneBodyTable::OneBodyTable(const FockBasis& basis, Spin spin) : sites_(basis.sites()) {
    if (basis.size() > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("OneBodyTable: basis too large");
    occupation_.reserve(basis.size());
    for (std::size_t s = 0; s < basis.size(); ++s) occupation_.push_back(spin_mask(basis.state(s), spin));
    for_each_hop(basis, spin, [&](std::size_t t, std::size_t s, int sign, int j, int l) {
        if (j != l) {
            hops_.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(s), static_cast<std::int8_t>(sign),
                             static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(l)});
        }
    });
}

CMatrix OneBodyTable::density(const StateVector& psi) const {
    if (psi.dimension() != occupation_.size()) throw std::invalid_argument("one_body_density: dimension mismatch");
    CMatrix G = CMatrix::Zero(sites_, sites_);
    const CVector& a = psi.amplitudes();
    for (std::size_t s = 0; s < occupation_.size(); ++s) {
        const double p = std::norm(a[static_cast<Eigen::Index>(s)]);
        for (std::uint32_t occ = occupation_[s]; occ; occ &= occ - 1) {
            const int j = std::countr_zero(occ);
            G(j, j) += p;
        }
    }
    for (const Hop& h : hops_) {
        G(h.j, h.l) += static_cast<double>(h.sign) * std::conj(a[h.target]) * a[h.source];
    }
    return G / psi.norm2();
}

CMatrix OneBodyTable::density(const DensityMatrix& rho) const {
    if (rho.dimension() != occupation_.size()) throw std::invalid_argument("one_body_density: dimension mismatch");
    CMatrix G = CMatrix::Zero(sites_, sites_);
    const CMatrix& r = rho.matrix();
    for (std::size_t s = 0; s < occupation_.size(); ++s) {
        const double p = r(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)).real();
        for (std::uint32_t occ = occupation_[s]; occ; occ &= occ - 1) {
            const int j = std::countr_zero(occ);
            G(j, j) += p;
        }
    }
    for (const Hop& h : hops_) G(h.j, h.l) += static_cast<double>(h.sign) * r(h.source, h.target);
    return G / rho.trace();
}

std::vector<double> momentum_grid(int sites, Boundary boundary) {
    if (boundary == Boundary::Open) {
        throw ConfigError("momentum observables need a periodic or antiperiodic boundary");
    }
    const double theta = boundary == Boundary::Antiperiodic ? 0.5 : 0.0;
    std::vector<double> k(static_cast<std::size_t>(sites));
    for (int m = 0; m < sites; ++m) k[static_cast<std::size_t>(m)] = 2.0 * kQ * (m + theta) / sites;
    return k;
}

std::vector<double> momentum_occupation(const CMatrix& G, Boundary boundary) {
    const auto L = static_cast<int>(G.rows());
    const auto ks = momentum_grid(L, boundary);
    std::vector<double> n(ks.size());
    for (std::size_t m = 0; m < ks.size(); ++m) {
        cplx acc = 0.0;
        for (int j = 0; j < L; ++j) {
            for (int l = 0; l < L; ++l) acc += std::polar(1.0, ks[m] * (j - l)) * G(j, l);
        }
        n[m] = acc.real() / L;
    }
    return n;
}

std::vector<cplx> order_parameter(const CMatrix& G, Boundary boundary) {
    const auto L = static_cast<int>(G.rows());
    if (L % 2 != 0) throw ConfigError("order parameter needs an even number of sites");
    const auto ks = momentum_grid(L, boundary);
    std::vector<cplx> alpha(ks.size());
    for (std::size_t m = 0; m < ks.size(); ++m) {
        cplx acc = 0.0;
        for (int j = 0; j < L; ++j) {
            for (int l = 0; l < L; ++l) {
                const double stagger = (l % 2 == 0) ? 1.0 : -1.0;
                acc += stagger * std::polar(1.0, ks[m] * (j - l)) * G(j, l);
            }
        }
        alpha[m] = acc / static_cast<double>(L);
    }
    return alpha;
}

std::vector<double> beta_occupations(const std::vector<double>& n, const std::vector<cplx>& alpha) {
    if (n.size() != alpha.size() || n.size() % 2 != 0) {
        throw std::invalid_argument("beta_occupations: need matching even-length n and alpha");
    }
    const std::size_t half = n.size() / 2;
    std::vector<double> b(half);
    for (std::size_t m = 0; m < half; ++m) b[m] = 0.5 * (n[m] + n[m + half]) + alpha[m].real();
    return b;
}

double photocount_rate(const StateVector& psi, const SparseOperator& c) {
    if (!(psi.norm2() > 0.0)) throw NumericalError("photocount_rate: zero state");
    return c.apply(psi.amplitudes()).squaredNorm() / psi.norm2();
}

double photocount_rate(const DensityMatrix& rho, const SparseOperator& c) {
    if (c.dimension() != rho.dimension()) throw std::invalid_argument("photocount_rate: dimension mismatch");
    // Tr[c rho c+] = sum_{r,k} (c rho)_{rk} conj(c_{rk})
    const CMatrix crho = c.matrix() * rho.matrix();
    const auto& m = c.matrix();
    double acc = 0.0;
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
            acc += (crho(r, it.col()) * std::conj(it.value())).real();
        }
    }
    return std::max(acc / rho.trace(), 0.0);
}

Eigen::VectorXd diagonal_values(const FockBasis& basis, const std::vector<double>& site_weights, double up_weight,
                                double down_weight) {
    if (site_weights.size() != static_cast<std::size_t>(basis.sites())) {
        throw std::invalid_argument("diagonal_values: weight length does not match the chain");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto& s = basis.state(k);
        double acc = 0.0;
        for (int i = 0; i < basis.sites(); ++i) {
            acc += site_weights[static_cast<std::size_t>(i)] * (up_weight * bit(s.up, i) + down_weight * bit(s.down, i));
        }
        v[static_cast<Eigen::Index>(k)] = acc;
    }
    return v;
}

std::pair<double, double> diagonal_moments(const Eigen::VectorXd& values, const Eigen::VectorXd& probs) {
    const double mean = values.dot(probs);
    const double second = values.cwiseAbs2().dot(probs);
    return {mean, std::max(second - mean * mean, 0.0)};
}

std::string to_string(ObservableKind k) {
    switch (k) {
        case ObservableKind::Density: return "density";
        case ObservableKind::Magnetization: return "magnetization";
        case ObservableKind::StaggeredMagnetization: return "staggered_magnetization";
        case ObservableKind::StaggeredMagnetizationSquared: return "staggered_magnetization_squared";
        case ObservableKind::StaggeredDistribution: return "staggered_distribution";
        case ObservableKind::StructureFactorQ: return "structure_factor";
        case ObservableKind::StaggeredComponent: return "staggered_component";
        case ObservableKind::OddOccupation: return "odd_occupation";
        case ObservableKind::OddOccupationVariance: return "odd_occupation_variance";
        case ObservableKind::MomentumOccupation: return "momentum_occupation";
        case ObservableKind::OrderParameter: return "order_parameter";
        case ObservableKind::BetaOccupation: return "beta_occupation";
        case ObservableKind::PhotocountRate: return "photocount_rate";
    }
    return "density";
}

ObservableKind observable_from_string(const std::string& s) {
    static const ObservableKind all[] = {
        ObservableKind::Density,           ObservableKind::Magnetization,
        ObservableKind::StaggeredMagnetization, ObservableKind::StaggeredMagnetizationSquared,
        ObservableKind::StaggeredDistribution,  ObservableKind::StructureFactorQ,
        ObservableKind::StaggeredComponent,     ObservableKind::OddOccupation,
        ObservableKind::OddOccupationVariance,  ObservableKind::MomentumOccupation,
        ObservableKind::OrderParameter,         ObservableKind::BetaOccupation,
        ObservableKind::PhotocountRate,
    };
    for (auto k : all) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown observable '" + s + "'");
}

ObservableSet::ObservableSet(std::shared_ptr<const FockBasis> basis, Boundary boundary,
                             std::vector<ObservableKind> kinds, std::vector<SparseOperator> channels)
    : basis_(std::move(basis)), boundary_(boundary), kinds_(std::move(kinds)), channels_(std::move(channels)) {
    if (!basis_) throw std::invalid_argument("ObservableSet needs a basis");
    const int L = basis_->sites();

    std::vector<double> odd(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) odd[static_cast<std::size_t>(i)] = i % 2;
    odd_counts_ = diagonal_values(*basis_, odd);

    for (std::size_t k = 0; k < basis_->size(); ++k) {
        ms_values_.push_back(staggered_magnetization(basis_->state(k), L));
    }
    std::vector<int> mus = ms_values_;
    std::sort(mus.begin(), mus.end());
    mus.erase(std::unique(mus.begin(), mus.end()), mus.end());

    if (basis_->n_up() > 0) momentum_spins_.push_back(Spin::Up);
    if (basis_->n_down() > 0) momentum_spins_.push_back(Spin::Down);
    if (momentum_spins_.empty()) momentum_spins_.push_back(Spin::Up);
    const bool momentum = std::any_of(kinds_.begin(), kinds_.end(), [](ObservableKind k) {
        return k == ObservableKind::MomentumOccupation || k == ObservableKind::OrderParameter
               || k == ObservableKind::BetaOccupation;
    });
    if (momentum) {
        for (Spin s : momentum_spins_) hop_tables_.emplace_back(*basis_, s);
    }

    for (auto kind : kinds_) {
        switch (kind) {
            case ObservableKind::Density:
                for (int i = 0; i < L; ++i) columns_.push_back("rho_" + std::to_string(i));
                break;
            case ObservableKind::Magnetization:
                for (int i = 0; i < L; ++i) columns_.push_back("m_" + std::to_string(i));
                break;
            case ObservableKind::StaggeredMagnetization: columns_.push_back("Ms"); break;
            case ObservableKind::StaggeredMagnetizationSquared: columns_.push_back("Ms2"); break;
            case ObservableKind::StaggeredDistribution:
                for (int mu : mus) columns_.push_back("P_Ms_" + std::to_string(mu));
                break;
            case ObservableKind::StructureFactorQ: columns_.push_back("S_Q"); break;
            case ObservableKind::StaggeredComponent: columns_.push_back("stag_m"); break;
            case ObservableKind::OddOccupation: columns_.push_back("N_odd"); break;
            case ObservableKind::OddOccupationVariance: columns_.push_back("var_N_odd"); break;
            case ObservableKind::MomentumOccupation:
                momentum_grid(L, boundary_);
                for (Spin s : momentum_spins_) {
                    for (int m = 0; m < L; ++m) columns_.push_back(std::string("n_") + spin_tag(s) + "_k" + std::to_string(m));
                }
                break;
            case ObservableKind::OrderParameter:
                momentum_grid(L, boundary_);
                if (L % 2 != 0) throw ConfigError("order parameter needs an even number of sites");
                for (Spin s : momentum_spins_) {
                    for (int m = 0; m < L / 2; ++m) {
                        columns_.push_back(std::string("re_alpha_") + spin_tag(s) + "_k" + std::to_string(m));
                        columns_.push_back(std::string("im_alpha_") + spin_tag(s) + "_k" + std::to_string(m));
                    }
                }
                break;
            case ObservableKind::BetaOccupation:
                momentum_grid(L, boundary_);
                if (L % 2 != 0) throw ConfigError("beta occupations need an even number of sites");
                for (Spin s : momentum_spins_) {
                    for (int m = 0; m < L / 2; ++m) columns_.push_back(std::string("beta_") + spin_tag(s) + "_k" + std::to_string(m));
                }
                break;
            case ObservableKind::PhotocountRate:
                columns_.push_back("rate");
                if (channels_.size() > 1) {
                    for (std::size_t c = 0; c < channels_.size(); ++c) columns_.push_back("rate_c" + std::to_string(c));
                }
                break;
        }
    }
}

template <class State>
std::vector<double> ObservableSet::evaluate_impl(const State& state, const Eigen::VectorXd& probs) const {
    const FockBasis& basis = *basis_;
    const int L = basis.sites();
    std::vector<double> row;
    row.reserve(columns_.size());

    std::optional<LocalProfiles> prof;
    auto profiles = [&]() -> const LocalProfiles& {
        if (!prof) prof = local_profiles(basis, probs);
        return *prof;
    };
    std::vector<std::pair<Spin, CMatrix>> Gs;
    auto density_matrices = [&]() -> const std::vector<std::pair<Spin, CMatrix>>& {
        if (Gs.empty()) {
            for (std::size_t i = 0; i < momentum_spins_.size(); ++i) {
                Gs.emplace_back(momentum_spins_[i], hop_tables_[i].density(state));
            }
        }
        return Gs;
    };

    for (auto kind : kinds_) {
        switch (kind) {
            case ObservableKind::Density:
                for (double v : profiles().density) row.push_back(v);
                break;
            case ObservableKind::Magnetization:
                for (double v : profiles().magnetization) row.push_back(v);
                break;
            case ObservableKind::StaggeredMagnetization:
            case ObservableKind::StaggeredMagnetizationSquared: {
                const bool squared = kind == ObservableKind::StaggeredMagnetizationSquared;
                double acc = 0.0;
                for (std::size_t k = 0; k < basis.size(); ++k) {
                    const double mu = ms_values_[k];
                    acc += probs[static_cast<Eigen::Index>(k)] * (squared ? mu * mu : mu);
                }
                row.push_back(acc);
                break;
            }
            case ObservableKind::StaggeredDistribution:
                for (const auto& [mu, p] : staggered_magnetization_distribution(basis, probs)) row.push_back(p);
                break;
            case ObservableKind::StructureFactorQ: row.push_back(structure_factor(basis, probs, kQ)); break;
            case ObservableKind::StaggeredComponent: {
                double acc = 0.0;
                const auto& m = profiles().magnetization;
                for (int i = 0; i < L; ++i) acc += (i % 2 == 0 ? 1.0 : -1.0) * m[static_cast<std::size_t>(i)];
                row.push_back(std::abs(acc) / L);
                break;
            }
            case ObservableKind::OddOccupation: row.push_back(diagonal_moments(odd_counts_, probs).first); break;
            case ObservableKind::OddOccupationVariance:
                row.push_back(diagonal_moments(odd_counts_, probs).second);
                break;
            case ObservableKind::MomentumOccupation:
                for (const auto& [s, G] : density_matrices()) {
                    for (double v : momentum_occupation(G, boundary_)) row.push_back(v);
                }
                break;
            case ObservableKind::OrderParameter:
                for (const auto& [s, G] : density_matrices()) {
                    const auto alpha = order_parameter(G, boundary_);
                    for (int m = 0; m < L / 2; ++m) {
                        row.push_back(alpha[static_cast<std::size_t>(m)].real());
                        row.push_back(alpha[static_cast<std::size_t>(m)].imag());
                    }
                }
                break;
            case ObservableKind::BetaOccupation:
                for (const auto& [s, G] : density_matrices()) {
                    for (double v : beta_occupations(momentum_occupation(G, boundary_), order_parameter(G, boundary_))) {
                        row.push_back(v);
                    }
                }
                break;
            case ObservableKind::PhotocountRate: {
                std::vector<double> rates;
                for (const auto& c : channels_) rates.push_back(photocount_rate(state, c));
                double total = 0.0;
                for (double r : rates) total += r;
                row.push_back(total);
                if (rates.size() > 1) row.insert(row.end(), rates.begin(), rates.end());
                break;
            }
        }
    }
    return row;
}

std::vector<double> ObservableSet::evaluate(const StateVector& psi) const {
    if (psi.dimension() != basis_->size()) throw std::invalid_argument("ObservableSet: state dimension mismatch");
    return evaluate_impl(psi, probabilities(psi));
}

std::vector<double> ObservableSet::evaluate(const DensityMatrix& rho) const {
    if (rho.dimension() != basis_->size()) throw std::invalid_argument("ObservableSet: state dimension mismatch");
    return evaluate_impl(rho, probabilities(rho));
}

}  // namespace fermimon
