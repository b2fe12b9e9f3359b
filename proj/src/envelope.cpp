#include "plab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plab/errors.hpp"

namespace plab {

double log_sum_bound(long a, long b, double c) {
    if (a < 1 || b < a || c <= 0) throw ConfigError("log_sum_bound requires a>=1, b>=a, C>0");
    double ad = static_cast<double>(a);
    double bd = static_cast<double>(b);
    return std::log1p(c / ad) + bd * std::log1p(c / bd) - ad * std::log1p(c / ad) +
           c * std::log((bd + c) / (ad + c));
}

DyadicSchedule dyadic_schedule(long start, long end) {
    if (start < 1 || end < start) throw ConfigError("dyadic_schedule requires 1 <= start <= end");
    DyadicSchedule s;
    s.start = start;
    s.end = end;
    s.points.push_back(start);
    long cur = start;
    while (cur < end) {
        cur = std::min(2 * cur, end);
        s.points.push_back(cur);
    }
    return s;
}

long inverse_transfer_min_offset(const Equation& eq, const CharacteristicProfile& profile) {
    if (profile.zero_mult_max > 0)
        throw ClassError("inverse transfer products require k* = 0 (T(0) != 0)");
    if (profile.s() < 1) throw ClassError("empty modulus profile");
    double rho_s = profile.clusters.back().rho;
    int k = std::max(1, profile.k_global);
    double c1 = eq.coefficient_decay_constant();
    Mat limit_inv = limit_companion(eq).partialPivLu().solve(Mat::Identity(eq.order(), eq.order()));
    double bound = std::max(std::pow(2.0 / rho_s, k), 2.0 * c1 * max_row_sum_norm(limit_inv));
    return static_cast<long>(std::floor(bound)) + 1;
}

namespace {

constexpr double kRenormHigh = 1e30;
constexpr double kRenormLow = 1e-30;

struct SegmentAccumulator {
    Mat product;
    double log_scale = 0;
    long renorms = 0;

    explicit SegmentAccumulator(long n) : product(Mat::Identity(n, n)) {}

    void maybe_renorm() {
        double norm = max_row_sum_norm(product);
        if (norm > kRenormHigh || (norm > 0 && norm < kRenormLow)) {
            product /= norm;
            log_scale += std::log(norm);
            ++renorms;
        }
    }
};

}  // namespace

LogTransferProduct transfer_log_norm(const Equation& eq, const CharacteristicProfile& profile,
                                     long a, long b, TransferDirection direction) {
    long lo = std::max<long>(a, 1);
    LogTransferProduct out;
    out.requested_from = a;
    out.direction = direction;

    if (direction == TransferDirection::Inverse)
        lo = std::max(lo, inverse_transfer_min_offset(eq, profile));
    if (b <= lo)
        throw RangeError("transfer range empty after raising start to " + std::to_string(lo));
    out.from = lo;
    out.to = b;

    int k = std::max(1, profile.k_global);
    Mat limit = limit_companion(eq);
    long n = eq.order();

    DyadicSchedule schedule = dyadic_schedule(lo, b);
    for (long i = 0; i + 1 < static_cast<long>(schedule.points.size()); ++i) {
        long seg_lo = schedule.points[static_cast<size_t>(i)];
        long seg_hi = schedule.points[static_cast<size_t>(i + 1)];
        SegmentAccumulator acc(n);
        for (long kappa = seg_lo; kappa < seg_hi; ++kappa) {
            if (direction == TransferDirection::Forward) {
                acc.product = companion_matrix(eq, kappa) * acc.product;
            } else {
                Mat ak = companion_matrix(eq, kappa);
                if (eq.coeff(0)(kappa) == cplx(0.0)) throw NonInvertibleStepError(kappa);
                acc.product = acc.product * ak.partialPivLu().solve(Mat::Identity(n, n));
            }
            acc.maybe_renorm();
        }

        TransferSegment seg;
        seg.lo = seg_lo;
        seg.hi = seg_hi;
        seg.epsilon = std::pow(static_cast<double>(seg_lo), -1.0 / k);
        seg.log_hnorm = acc.log_scale + std::log(max_row_sum_norm(acc.product));
        AdaptedNorm pnorm = build_adapted_norm(limit, seg.epsilon);
        seg.log_pnorm = acc.log_scale + std::log(pnorm.induced(acc.product));
        out.segments.push_back(seg);
        out.log_norm += seg.log_hnorm;
        out.scaling_events += acc.renorms;
    }
    return out;
}

LogTransferProduct transfer_log_norm(const Equation& eq, long a, long b,
                                     TransferDirection direction) {
    return transfer_log_norm(eq, analyze_profile(eq), a, b, direction);
}

double log_envelope_value(const GrowthEnvelope& env, long nu) {
    if (nu < 1) throw RangeError("envelope defined for nu >= 1");
    double nud = static_cast<double>(nu);
    switch (env.mode) {
        case EnvelopeMode::PolyLog:
            return nud * std::log(env.rho) +
                   env.a_const * (std::pow(nud, 1.0 - 1.0 / env.k) + std::log(nud));
        case EnvelopeMode::Factorial:
            if (env.a_const <= 0)
                throw ConfigError("factorial envelope requires a positive constant");
            return (nud / env.k) * (std::log(env.a_const) - std::log(nud));
        case EnvelopeMode::EpsilonGeometric:
            return env.a_const + nud * (std::log(env.rho) + env.eps_sign * env.epsilon);
    }
    throw ConfigError("unknown envelope mode");
}

double envelope_value(const GrowthEnvelope& env, long nu) {
    return std::exp(log_envelope_value(env, nu));
}

FitResult fit_envelope_constant(const std::vector<double>& log_series, long nu_start,
                                const EnvelopeShape& shape, FitSide side) {
    if (nu_start < 1) throw RangeError("series must start at nu >= 1");
    if (log_series.empty()) throw DegenerateSeriesError("empty series");

    const double inf = std::numeric_limits<double>::infinity();
    FitResult fit;
    double best = -inf;
    bool found = false;

    for (size_t i = 0; i < log_series.size(); ++i) {
        long nu = nu_start + static_cast<long>(i);
        double nud = static_cast<double>(nu);
        double s = log_series[i];
        if (side == FitSide::Lower && s == -inf)
            throw DegenerateSeriesError("zero series value in lower-side fit at nu=" +
                                        std::to_string(nu));
        double candidate;
        switch (shape.mode) {
            case EnvelopeMode::PolyLog: {
                double denom = std::pow(nud, 1.0 - 1.0 / shape.k) + std::log(nud);
                double gap = s - nud * std::log(shape.rho);
                candidate = (side == FitSide::Upper ? gap : -gap) / denom;
                break;
            }
            case EnvelopeMode::Factorial: {
                // Binding A with (A/nu)^{nu/k} = series(nu).
                candidate = nud * std::exp(shape.k * s / nud);
                if (side == FitSide::Lower) candidate = -candidate;  // min tracked via max
                break;
            }
            case EnvelopeMode::EpsilonGeometric: {
                double up = s - nud * (std::log(shape.rho) + shape.epsilon);
                double down = nud * (std::log(shape.rho) - shape.epsilon) - s;
                candidate = side == FitSide::Upper ? up : down;
                break;
            }
            default:
                throw ConfigError("unknown envelope mode");
        }
        if (!std::isfinite(candidate)) continue;
        if (!found || candidate > best) {
            best = candidate;
            fit.binding_nu = nu;
            found = true;
        }
    }
    if (!found) throw DegenerateSeriesError("no finite fit point in series");
    if (shape.mode == EnvelopeMode::Factorial && side == FitSide::Lower) best = -best;
    fit.a_const = best;
    return fit;
}

GrowthEnvelope make_envelope(const EnvelopeShape& shape, FitSide side, double a_const) {
    GrowthEnvelope env;
    env.rho = shape.rho;
    env.k = shape.k;
    env.mode = shape.mode;
    env.epsilon = shape.epsilon;
    switch (shape.mode) {
        case EnvelopeMode::PolyLog:
            env.a_const = side == FitSide::Upper ? a_const : -a_const;
            break;
        case EnvelopeMode::Factorial:
            env.a_const = a_const;
            break;
        case EnvelopeMode::EpsilonGeometric:
            env.a_const = side == FitSide::Upper ? a_const : -a_const;
            env.eps_sign = side == FitSide::Upper ? 1 : -1;
            break;
    }
    return env;
}

}  // namespace plab
