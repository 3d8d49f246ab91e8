#include "fermimon/density_matrix.hpp"

#include "fermimon/errors.hpp"

#include <Eigen/Eigenvalues>

namespace fermimon {

DensityMatrix::DensityMatrix(CMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density matrix must be square");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
    if (psi.dimension() > kDensityMatrixCapacity) {
        throw CapacityError("density matrix dimension exceeds the budget", psi.dimension(),
                            kDensityMatrixCapacity);
    }
    const CVector v = psi.amplitudes() / std::sqrt(psi.norm2());
    return DensityMatrix(v * v.adjoint());
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

double DensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
    const CMatrix h = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

void DensityMatrix::hermitize() {
    const CMatrix h = 0.5 * (rho_ + rho_.adjoint());
    rho_ = h;
}

void DensityMatrix::normalize_trace() {
    const double t = trace();
    if (!(t > 0.0)) throw NumericalError("density matrix trace is not positive");
    rho_ /= t;
}

cplx expectation(const SparseOperator& op, const DensityMatrix& rho) {
    if (op.dimension() != rho.dimension()) {
        throw std::invalid_argument("expectation: operator/density-matrix dimension mismatch");
    }
    // Tr[A rho] = sum_{r,c} A_rc rho_cr
    cplx acc = 0.0;
    const auto& m = op.matrix();
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
            acc += it.value() * rho.matrix()(it.col(), r);
        }
    }
    return acc;
}

}  // namespace fermimon
