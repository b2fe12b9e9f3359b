#pragma once

#include <optional>
#include <vector>

#include "plab/coefficient.hpp"
#include "plab/types.hpp"

namespace plab {

/// The window (y(nu), ..., y(nu+n-1)) advanced by the companion matrices.
struct StateVector {
    long base_index = 0;
    Vec window;
};

/// A monic linear difference equation sum_{k=0}^{n} a_k(nu) y(nu+k) = 0 of
/// Poincare type: variable coefficients with declared limits, a_n == 1.
class Equation {
public:
    Equation(long order, std::vector<Coefficient> coefficients, long start_offset = 0);

    long order() const { return order_; }
    long start_offset() const { return start_offset_; }
    const Coefficient& coeff(long k) const { return coeffs_.at(static_cast<size_t>(k)); }
    const std::vector<Coefficient>& coefficients() const { return coeffs_; }

    /// Limit coefficients (a~_0, ..., a~_n); requires every coefficient to
    /// have a declared limit.
    std::vector<cplx> limits() const;

    bool all_exact() const;
    bool all_inverse_nu() const;

    /// sup (nu+1) * sum_k |a_k(nu) - a~_k|, i.e. the constant C_1 with
    /// h~(A(nu) - A~) <= C_1/(nu+1). Declared constants are summed when
    /// present, otherwise sampled.
    double coefficient_decay_constant(long sample_max = 10000) const;

    /// Equation restricted to indices >= mu (same rules, raised offset).
    Equation restricted(long mu) const;

private:
    long order_;
    std::vector<Coefficient> coeffs_;
    long start_offset_;
};

/// Companion matrix A(nu): ones on the superdiagonal, last row
/// (-a_0(nu), ..., -a_{n-1}(nu)); advances windows by Y(nu+1) = A(nu) Y(nu).
Mat companion_matrix(const Equation& eq, long nu);

/// Companion matrix of the limit coefficients.
Mat limit_companion(const Equation& eq);

StateVector step_forward(const Equation& eq, const StateVector& state);

/// Inverse step; requires a_0(nu-1) != 0 (throws NonInvertibleStepError).
StateVector step_backward(const Equation& eq, const StateVector& state);

/// A stored stretch of one solution. Values are kept in scaled form,
/// y(nu) = values[nu - start] * exp(log_scale[nu - start]), so trajectories
/// of strongly growing or decaying solutions stay representable.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(long start, std::vector<cplx> values);
    Trajectory(long start, std::vector<cplx> values, std::vector<double> log_scale);

    long start() const { return start_; }
    long size() const { return static_cast<long>(values_.size()); }
    long end() const { return start_ + size(); }  // one past the last index
    bool covers(long nu, long count = 1) const {
        return nu >= start_ && nu + count <= end();
    }

    /// y(nu); may overflow to inf for scaled trajectories far outside the
    /// double range (use log_abs for growth work).
    cplx value(long nu) const;

    /// ln |y(nu)|; -inf for exact zero.
    double log_abs(long nu) const;

    const std::vector<cplx>& raw_values() const { return values_; }
    double scale(long nu) const;

private:
    void check(long nu) const;

    long start_ = 0;
    std::vector<cplx> values_;
    std::vector<double> log_scale_;  // empty means identically zero scale
};

/// omega_{n,y}(nu) = max(|y(nu)|, ..., |y(nu+n-1)|).
double window_norm(const Trajectory& traj, long nu, long n);

/// ln omega_{n,y}(nu), safe for scaled trajectories; -inf for a zero window.
double log_window_norm(const Trajectory& traj, long nu, long n);

/// Iterate the recurrence from an initial window, renormalizing internally;
/// produces values for nu in [state.base_index, state.base_index + count).
Trajectory iterate(const Equation& eq, const StateVector& initial, long count);

/// Check that every length-(n+1) window of the trajectory satisfies the
/// recurrence to the given relative tolerance per step.
bool satisfies(const Equation& eq, const Trajectory& traj, double rel_tol = 1e-9);

}  // namespace plab
