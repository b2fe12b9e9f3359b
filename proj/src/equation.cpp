#include "plab/equation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plab {

Equation::Equation(long order, std::vector<Coefficient> coefficients, long start_offset)
    : order_(order), coeffs_(std::move(coefficients)), start_offset_(start_offset) {
    if (order_ < 1) throw ConfigError("equation order must be positive");
    if (start_offset_ < 0) throw ConfigError("start offset must be non-negative");
    if (coeffs_.size() != static_cast<size_t>(order_ + 1))
        throw ConfigError("expected order+1 coefficient sequences");
    if (!coeffs_.back().is_constant_one())
        throw ConfigError("equation must be monic: a_n(nu) == 1");
}

std::vector<cplx> Equation::limits() const {
    std::vector<cplx> out;
    out.reserve(coeffs_.size());
    for (const auto& c : coeffs_) out.push_back(c.limit());
    return out;
}

bool Equation::all_exact() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Coefficient& c) {
        return c.decay() == Coefficient::Decay::Exact;
    });
}

bool Equation::all_inverse_nu() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Coefficient& c) {
        return c.decay() != Coefficient::Decay::Vanishing;
    });
}

double Equation::coefficient_decay_constant(long sample_max) const {
    double total = 0;
    for (long k = 0; k < order_; ++k)
        total += coeffs_[static_cast<size_t>(k)].estimate_decay_constant(sample_max);
    return total;
}

Equation Equation::restricted(long mu) const {
    if (mu < start_offset_) throw RangeError("restriction below start offset");
    return Equation(order_, coeffs_, mu);
}

Mat companion_matrix(const Equation& eq, long nu) {
    if (nu < eq.start_offset() - 1)
        throw RangeError("companion index " + std::to_string(nu) + " below start offset");
    long n = eq.order();
    Mat a = Mat::Zero(n, n);
    for (long i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
    for (long k = 0; k < n; ++k) a(n - 1, k) = -eq.coeff(k)(nu);
    return a;
}

Mat limit_companion(const Equation& eq) {
    long n = eq.order();
    Mat a = Mat::Zero(n, n);
    for (long i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
    for (long k = 0; k < n; ++k) a(n - 1, k) = -eq.coeff(k).limit();
    return a;
}

StateVector step_forward(const Equation& eq, const StateVector& state) {
    long n = eq.order();
    long nu = state.base_index;
    cplx next = 0.0;
    for (long k = 0; k < n; ++k) next -= eq.coeff(k)(nu) * state.window[k];
    StateVector out;
    out.base_index = nu + 1;
    out.window = Vec(n);
    for (long i = 0; i + 1 < n; ++i) out.window[i] = state.window[i + 1];
    out.window[n - 1] = next;
    return out;
}

StateVector step_backward(const Equation& eq, const StateVector& state) {
    long n = eq.order();
    long nu = state.base_index - 1;
    cplx a0 = eq.coeff(0)(nu);
    if (a0 == cplx(0.0)) throw NonInvertibleStepError(nu);
    cplx acc = state.window[n - 1];  // a_n == 1 contribution y(nu+n)
    for (long k = 1; k < n; ++k) acc += eq.coeff(k)(nu) * state.window[k - 1];
    StateVector out;
    out.base_index = nu;
    out.window = Vec(n);
    out.window[0] = -acc / a0;
    for (long i = 1; i < n; ++i) out.window[i] = state.window[i - 1];
    return out;
}

Trajectory::Trajectory(long start, std::vector<cplx> values)
    : start_(start), values_(std::move(values)) {}

Trajectory::Trajectory(long start, std::vector<cplx> values, std::vector<double> log_scale)
    : start_(start), values_(std::move(values)), log_scale_(std::move(log_scale)) {
    if (!log_scale_.empty() && log_scale_.size() != values_.size())
        throw RangeError("log_scale length mismatch");
}

void Trajectory::check(long nu) const {
    if (!covers(nu))
        throw RangeError("trajectory index " + std::to_string(nu) + " outside stored range [" +
                         std::to_string(start_) + "," + std::to_string(end()) + ")");
}

cplx Trajectory::value(long nu) const {
    check(nu);
    size_t i = static_cast<size_t>(nu - start_);
    if (log_scale_.empty() || log_scale_[i] == 0.0) return values_[i];
    return values_[i] * std::exp(log_scale_[i]);
}

double Trajectory::scale(long nu) const {
    check(nu);
    return log_scale_.empty() ? 0.0 : log_scale_[static_cast<size_t>(nu - start_)];
}

double Trajectory::log_abs(long nu) const {
    check(nu);
    size_t i = static_cast<size_t>(nu - start_);
    double mag = std::abs(values_[i]);
    if (mag == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(mag) + (log_scale_.empty() ? 0.0 : log_scale_[i]);
}

double window_norm(const Trajectory& traj, long nu, long n) {
    if (!traj.covers(nu, n)) throw RangeError("window outside stored trajectory range");
    double m = 0;
    for (long i = 0; i < n; ++i) m = std::max(m, std::abs(traj.value(nu + i)));
    return m;
}

double log_window_norm(const Trajectory& traj, long nu, long n) {
    if (!traj.covers(nu, n)) throw RangeError("window outside stored trajectory range");
    double m = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) m = std::max(m, traj.log_abs(nu + i));
    return m;
}

Trajectory iterate(const Equation& eq, const StateVector& initial, long count) {
    long n = eq.order();
    if (initial.window.size() != n) throw RangeError("window length must equal equation order");
    if (count < n) count = n;

    // Rescale the sliding window whenever it leaves a safe magnitude band;
    // the recurrence is linear so a common factor is exact.
    constexpr double kHigh = 1e120;
    constexpr double kLow = 1e-120;

    std::vector<cplx> values;
    std::vector<double> scales;
    values.reserve(static_cast<size_t>(count));
    scales.reserve(static_cast<size_t>(count));

    Vec window = initial.window;
    double log_offset = 0.0;
    for (long i = 0; i < n; ++i) {
        values.push_back(window[i]);
        scales.push_back(0.0);
    }

    long nu = initial.base_index;
    long produced = n;
    while (produced < count) {
        cplx next = 0.0;
        for (long k = 0; k < n; ++k) next -= eq.coeff(k)(nu) * window[k];
        for (long i = 0; i + 1 < n; ++i) window[i] = window[i + 1];
        window[n - 1] = next;
        ++nu;
        values.push_back(next);
        scales.push_back(log_offset);
        ++produced;

        double mag = max_norm(window);
        if (mag > kHigh || (mag > 0 && mag < kLow)) {
            window /= mag;
            log_offset += std::log(mag);
        }
    }
    return Trajectory(initial.base_index, std::move(values), std::move(scales));
}

bool satisfies(const Equation& eq, const Trajectory& traj, double rel_tol) {
    long n = eq.order();
    for (long nu = traj.start(); nu + n < traj.end(); ++nu) {
        cplx acc = 0.0;
        double mag = 0.0;
        // Evaluate in the local scale of the window to stay finite.
        double ref = traj.scale(nu);
        for (long k = 0; k <= n; ++k) {
            cplx term = eq.coeff(k)(nu) * traj.raw_values()[static_cast<size_t>(nu + k - traj.start())] *
                        std::exp(traj.scale(nu + k) - ref);
            acc += term;
            mag = std::max(mag, std::abs(term));
        }
        if (std::abs(acc) > rel_tol * std::max(mag, 1e-300)) return false;
    }
    return true;
}

}  // namespace plab
