#pragma once

#include "fermimon/fock.hpp"

namespace fermimon {

/// Mixed conditional state over a sector (dense, dimension capped by
/// kDensityMatrixCapacity).
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(CMatrix rho);

    static DensityMatrix pure(const StateVector& psi);

    const CMatrix& matrix() const noexcept { return rho_; }
    CMatrix& matrix() noexcept { return rho_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(rho_.rows()); }

    double trace() const { return rho_.trace().real(); }
    double purity() const;
    /// max |rho - rho^dagger|
    double hermiticity_error() const;
    double min_eigenvalue() const;

    void hermitize();
    void normalize_trace();

private:
    CMatrix rho_;
};

/// Tr[op rho]
cplx expectation(const SparseOperator& op, const DensityMatrix& rho);

}  // namespace fermimon
