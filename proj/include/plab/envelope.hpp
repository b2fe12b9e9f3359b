#pragma once

#include <vector>

#include "plab/adapted_norm.hpp"
#include "plab/equation.hpp"
#include "plab/spectral.hpp"

namespace plab {

/// Closed-form upper bound for sum_{kappa=a}^{b} ln(1 + C/kappa):
/// ln(1+C/a) + b ln(1+C/b) - a ln(1+C/a) + C ln((b+C)/(a+C)).
double log_sum_bound(long a, long b, double c);

/// Doubling schedule a_0 = start < a_1 < ... < a_d = end with
/// a_i <= 2 a_{i-1}; d <= ln(end)/ln(2) + 1.
struct DyadicSchedule {
    std::vector<long> points;
    long start = 1;
    long end = 1;
    long segments() const { return static_cast<long>(points.size()) - 1; }
};

DyadicSchedule dyadic_schedule(long start, long end);

enum class TransferDirection { Forward, Inverse };

struct TransferSegment {
    long lo = 0;
    long hi = 0;             // product over indices [lo, hi)
    double epsilon = 1;      // lo^{-1/k}, the per-segment adapted-norm scale
    double log_hnorm = 0;    // ln h~ of the segment product
    double log_pnorm = 0;    // ln p~_{A~,eps} of the segment product
};

/// ln of per-segment operator norms of companion products, accumulated along
/// the dyadic schedule. log_norm = sum_i ln h~(P_i) bounds ln h~ of the full
/// product and is exactly additive across splits at schedule points.
struct LogTransferProduct {
    long from = 0;  // actual start (after any auto-raise for the inverse case)
    long to = 0;
    long requested_from = 0;
    TransferDirection direction = TransferDirection::Forward;
    double log_norm = 0;
    long scaling_events = 0;
    std::vector<TransferSegment> segments;
};

LogTransferProduct transfer_log_norm(const Equation& eq, long a, long b,
                                     TransferDirection direction);
LogTransferProduct transfer_log_norm(const Equation& eq, const CharacteristicProfile& profile,
                                     long a, long b, TransferDirection direction);

/// Start index required by the inverse-product estimates:
/// floor(max((2/rho_s)^k, 2 C_1 h~((A~)^{-1}))) + 1.
long inverse_transfer_min_offset(const Equation& eq, const CharacteristicProfile& profile);

enum class EnvelopeMode { PolyLog, Factorial, EpsilonGeometric };

/// Growth envelope shapes:
///   PolyLog            rho^nu * exp(a_const (nu^{1-1/k} + ln nu))
///   Factorial          (a_const / nu)^{nu/k}
///   EpsilonGeometric   exp(a_const) * (rho * exp(eps_sign * epsilon))^nu
struct GrowthEnvelope {
    double rho = 1;
    int k = 1;
    double a_const = 0;
    EnvelopeMode mode = EnvelopeMode::PolyLog;
    double epsilon = 0;
    int eps_sign = 1;
};

double log_envelope_value(const GrowthEnvelope& env, long nu);
double envelope_value(const GrowthEnvelope& env, long nu);

enum class FitSide { Upper, Lower };

struct EnvelopeShape {
    double rho = 1;
    int k = 1;
    EnvelopeMode mode = EnvelopeMode::PolyLog;
    double epsilon = 0;
};

struct FitResult {
    double a_const = 0;  // theorem-convention constant (upper: +A, lower: exp(-A))
    long binding_nu = 0;
};

/// Least constant A making the envelope bound the series on the declared
/// side over the whole range; exact at the binding index. The series is
/// given as ln(omega(nu)) for nu = nu_start, nu_start+1, ...
FitResult fit_envelope_constant(const std::vector<double>& log_series, long nu_start,
                                const EnvelopeShape& shape, FitSide side);

/// Envelope ready for evaluation from a fit (handles the sign conventions).
GrowthEnvelope make_envelope(const EnvelopeShape& shape, FitSide side, double a_const);

}  // namespace plab
