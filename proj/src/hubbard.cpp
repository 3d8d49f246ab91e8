#include "fermimon/hubbard.hpp"

#include "fermimon/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fermimon {

std::string to_string(Boundary b) {
    switch (b) {
        case Boundary::Open: return "open";
        case Boundary::Periodic: return "periodic";
        case Boundary::Antiperiodic: return "antiperiodic";
    }
    return "open";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "open") return Boundary::Open;
    if (s == "periodic") return Boundary::Periodic;
    if (s == "antiperiodic") return Boundary::Antiperiodic;
    throw ConfigError("unknown boundary '" + s + "' (expected open, periodic or antiperiodic)");
}

std::vector<std::pair<int, int>> chain_bonds(int sites, Boundary boundary) {
    std::vector<std::pair<int, int>> bonds;
    for (int i = 0; i + 1 < sites; ++i) bonds.emplace_back(i, i + 1);
    if (boundary != Boundary::Open && sites > 2) bonds.emplace_back(sites - 1, 0);
    return bonds;
}

SparseOperator build_hopping(const FockBasis& basis, Boundary boundary) {
    std::vector<Term> terms;
    const int L = basis.sites();
    for (const auto& [i, j] : chain_bonds(L, boundary)) {
        const bool closing = (j == 0 && i == L - 1);
        const double amp = (closing && boundary == Boundary::Antiperiodic) ? 1.0 : -1.0;
        for (Spin s : {Spin::Up, Spin::Down}) {
            terms.push_back({amp, {create(j, s), annihilate(i, s)}});
            terms.push_back({amp, {create(i, s), annihilate(j, s)}});
        }
    }
    return build_operator(basis, terms);
}

SparseOperator build_hubbard(const FockBasis& basis, const HubbardParams& p) {
    std::vector<Term> terms;
    const int L = basis.sites();
    for (const auto& [i, j] : chain_bonds(L, p.boundary)) {
        const bool closing = (j == 0 && i == L - 1);
        const double amp = (closing && p.boundary == Boundary::Antiperiodic) ? p.J : -p.J;
        for (Spin s : {Spin::Up, Spin::Down}) {
            terms.push_back({amp, {create(j, s), annihilate(i, s)}});
            terms.push_back({amp, {create(i, s), annihilate(j, s)}});
        }
    }
    if (p.U != 0.0) {
        for (int i = 0; i < L; ++i) {
            terms.push_back({p.U, {create(i, Spin::Up), annihilate(i, Spin::Up), create(i, Spin::Down),
                                   annihilate(i, Spin::Down)}});
        }
    }
    return build_operator(basis, terms);
}

std::vector<double> open_chain_levels(int sites, double J) {
    std::vector<double> e;
    for (int m = 1; m <= sites; ++m) e.push_back(-2.0 * J * std::cos(std::numbers::pi * m / (sites + 1)));
    std::sort(e.begin(), e.end());
    return e;
}

namespace {

// Rotates v so that its largest-magnitude component (first on ties) is real positive.
void fix_phase(CVector& v) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > mag * (1.0 + 1e-12)) {
            mag = a;
            best = i;
        }
    }
    if (mag > 0.0) v *= std::conj(v[best]) / mag;
}

struct Eigenpair {
    double value;
    CVector vector;
    double residual;
};

// Restarted Lanczos with full reorthogonalization, kept orthogonal to `locked`.
Eigenpair lowest_lanczos(const SparseOperator& H, const std::vector<CVector>& locked, double hnorm,
                         const GroundStateOptions& opts, unsigned seed) {
    const auto n = static_cast<Eigen::Index>(H.dimension());
    const int m_max = static_cast<int>(std::min<Eigen::Index>(opts.krylov_dim, n - static_cast<Eigen::Index>(locked.size())));
    if (m_max <= 0) throw ConvergenceError("Lanczos: no space left after deflation");

    auto project_out = [&](CVector& v) {
        for (const auto& q : locked) v -= q * q.dot(v);
    };

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CVector start(n);
    for (Eigen::Index i = 0; i < n; ++i) start[i] = cplx(dist(gen), 0.5 * dist(gen));
    project_out(start);
    start.normalize();

    Eigenpair best{0.0, start, std::numeric_limits<double>::infinity()};
    for (int restart = 0; restart < opts.max_restarts; ++restart) {
        std::vector<CVector> V;
        V.reserve(static_cast<std::size_t>(m_max));
        std::vector<double> alpha;
        std::vector<double> beta;
        V.push_back(start);
        CVector w(n);
        for (int j = 0; j < m_max; ++j) {
            H.apply(V.back(), w);
            const double a = V.back().dot(w).real();
            alpha.push_back(a);
            // Full reorthogonalization (twice is enough).
            for (int pass = 0; pass < 2; ++pass) {
                project_out(w);
                for (const auto& q : V) w -= q * q.dot(w);
            }
            const double b = w.norm();
            if (j + 1 == m_max || b < 1e-14 * std::max(hnorm, 1.0)) break;
            beta.push_back(b);
            V.push_back(w / b);
        }
        const auto k = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::VectorXd y = es.eigenvectors().col(0);
        CVector x = CVector::Zero(n);
        for (Eigen::Index i = 0; i < k; ++i) x += y[i] * V[static_cast<std::size_t>(i)];
        project_out(x);
        x.normalize();
        CVector hx = H.apply(x);
        const double theta = x.dot(hx).real();
        const double res = (hx - theta * x).norm();
        best = {theta, x, res};
        if (res <= opts.tol * std::max(hnorm, 1e-300)) return best;
        start = x;
    }
    throw ConvergenceError("Lanczos ground-state search did not converge (residual "
                           + std::to_string(best.residual) + ")");
}

GroundState assemble(const std::vector<double>& values, std::vector<CVector> vectors, double next_value,
                     double residual) {
    GroundState gs;
    gs.energy = values.front();
    gs.degeneracy = static_cast<int>(values.size());
    gs.gap = next_value - values.back();
    gs.residual = residual;
    CVector sum = CVector::Zero(vectors.front().size());
    for (auto& v : vectors) {
        fix_phase(v);
        sum += v;
    }
    sum.normalize();
    gs.state = StateVector(std::move(sum));
    return gs;
}

}  // namespace

GroundState ground_state(const SparseOperator& H, const GroundStateOptions& opts) {
    const std::size_t n = H.dimension();
    if (n == 0) throw std::invalid_argument("ground_state: empty operator");
    if (!H.is_hermitian(1e-12 * std::max(1.0, H.norm_bound()))) {
        throw std::invalid_argument("ground_state: operator is not Hermitian");
    }
    const double hnorm = std::max(H.norm_bound(), 1e-300);
    const double window = opts.degeneracy_tol * hnorm;

    if (n <= opts.dense_threshold) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(H.dense());
        const auto& ev = es.eigenvalues();
        std::vector<double> values{ev[0]};
        std::vector<CVector> vectors{es.eigenvectors().col(0)};
        Eigen::Index i = 1;
        while (i < ev.size() && ev[i] - ev[0] < window) {
            values.push_back(ev[i]);
            vectors.emplace_back(es.eigenvectors().col(i));
            ++i;
        }
        const double next = i < ev.size() ? ev[i] : std::numeric_limits<double>::quiet_NaN();
        double res = 0.0;
        for (const auto& v : vectors) res = std::max(res, (H.apply(v) - ev[0] * v).norm());
        return assemble(values, std::move(vectors), next, res);
    }

    std::vector<double> values;
    std::vector<CVector> vectors;
    double residual = 0.0;
    double next = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level <= opts.max_degeneracy; ++level) {
        if (vectors.size() >= n) break;
        const Eigenpair p = lowest_lanczos(H, vectors, hnorm, opts, 0x5eedu + static_cast<unsigned>(level));
        if (!values.empty() && p.value - values.front() >= window) {
            next = p.value;
            break;
        }
        values.push_back(p.value);
        vectors.push_back(p.vector);
        residual = std::max(residual, p.residual);
    }
    return assemble(values, std::move(vectors), next, residual);
}

}  // namespace fermimon
