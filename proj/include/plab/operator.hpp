#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "plab/coefficient.hpp"
#include "plab/equation.hpp"

namespace plab {

/// Graded difference operator alpha = sum_k mu_{a_k} o shift^k acting on
/// scalar sequences defined from a start offset. Class membership (monic,
/// invertible bottom, convergent, 1/nu decay) is queried from the
/// coefficients rather than stored.
class DifferenceOperator {
public:
    DifferenceOperator(std::vector<Coefficient> coeffs, long start_offset = 0);

    long degree() const { return static_cast<long>(coeffs_.size()) - 1; }
    long start_offset() const { return start_offset_; }
    const Coefficient& coeff(long k) const { return coeffs_.at(static_cast<size_t>(k)); }
    const std::vector<Coefficient>& coefficients() const { return coeffs_; }

    bool monic() const { return coeffs_.back().is_constant_one(); }
    bool convergent() const;
    bool inverse_nu_decay() const;
    /// a_0(nu) != 0 for all nu in [lo, hi) (sampled membership test for the
    /// invertible-bottom class).
    bool invertible_bottom(long lo, long hi) const;

    /// The shift operator (degree 1, a_0 = 0, a_1 = 1).
    static DifferenceOperator shift(long start_offset = 0);
    /// Constant-coefficient operator from an ascending polynomial.
    static DifferenceOperator from_polynomial(const std::vector<cplx>& poly,
                                              long start_offset = 0);
    static DifferenceOperator from_equation(const Equation& eq);
    /// Monic operators of degree >= 1 convert back to an equation.
    Equation to_equation() const;

private:
    std::vector<Coefficient> coeffs_;
    long start_offset_ = 0;
};

/// (alpha y)(nu) = sum_k a_k(nu) y(nu + k).
cplx apply(const DifferenceOperator& op, const Trajectory& y, long nu);
cplx apply(const DifferenceOperator& op, const std::function<cplx(long)>& y, long nu);

/// Composition beta o gamma (beta applied after gamma); coefficient of
/// shift^k at nu is sum_{r+s=k} b_r(nu) c_s(nu + r).
DifferenceOperator compose(const DifferenceOperator& beta, const DifferenceOperator& gamma);

/// Same coefficients with the start offset raised to mu.
DifferenceOperator restrict_operator(const DifferenceOperator& op, long mu);

/// Limit operator and P(alpha, z) = sum lim(a_k) z^k; requires all
/// coefficients convergent.
std::pair<DifferenceOperator, std::vector<cplx>> limit_operator_and_charpoly(
    const DifferenceOperator& op);

/// Right division: eta with compose(eta, beta) == alpha, solved coefficient
/// by coefficient (triangular since beta is monic). The low-order residual
/// is checked on [offset, offset + horizon]; above `tol` (relative) the
/// division is rejected as inexact.
DifferenceOperator divide_right(const DifferenceOperator& alpha, const DifferenceOperator& beta,
                                long horizon = 1000, double tol = 1e-9);

}  // namespace plab
