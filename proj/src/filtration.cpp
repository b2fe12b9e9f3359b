#include "plab/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "plab/errors.hpp"
#include "plab/linalg.hpp"

namespace plab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int thread_cap() {
    const char* env = std::getenv("PLAB_THREADS");
    if (!env) return 1;
    int t = std::atoi(env);
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(t, 1, std::max(1, hw));
}

template <typename Fn>
void indexed_parallel(long count, Fn&& fn) {
    int threads = std::min<long>(thread_cap(), count);
    if (threads <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (long i = t; i < count; i += threads) fn(i);
        });
    for (auto& th : pool) th.join();
}

// ln omega_{n,y}(nu) - ln omega_{n,y}(m) for nu in [max(m,1), m + horizon],
// with the sample confined to filtration level theta.
struct SampleSeries {
    long nu_start = 1;
    std::vector<double> log_ratio;
    double log_omega_m = 0;
};

SampleSeries window_series(const Equation& eq, const FiltrationReport& report, long theta,
                           const Vec& window, long horizon) {
    long n = eq.order();
    long m = report.offset;
    Trajectory traj = confined_trajectory(eq, report, theta, window, horizon + n + 1);
    SampleSeries out;
    out.nu_start = std::max<long>(m, 1);
    out.log_omega_m = log_window_norm(traj, m, n);
    out.log_ratio.reserve(static_cast<size_t>(m + horizon - out.nu_start + 1));
    for (long nu = out.nu_start; nu <= m + horizon; ++nu)
        out.log_ratio.push_back(log_window_norm(traj, nu, n) - out.log_omega_m);
    return out;
}

// Pointwise ln |y(nu)| - ln omega(m); the zero-cluster bound is pointwise.
SampleSeries pointwise_series(const Equation& eq, const FiltrationReport& report, long theta,
                              const Vec& window, long horizon) {
    long n = eq.order();
    long m = report.offset;
    Trajectory traj = confined_trajectory(eq, report, theta, window, horizon + n + 1);
    SampleSeries out;
    out.nu_start = std::max<long>(m, 1);
    out.log_omega_m = log_window_norm(traj, m, n);
    for (long nu = out.nu_start; nu <= m + horizon; ++nu)
        out.log_ratio.push_back(traj.log_abs(nu) - out.log_omega_m);
    return out;
}

Vec unit_window(const Mat& basis, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec coeffs(basis.cols());
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = cplx(g(rng), g(rng));
    Vec w = basis * coeffs;
    double scale = max_norm(w);
    if (scale == 0) return w;
    return w / scale;
}

std::vector<double> half_of(const SampleSeries& s, long m, long horizon) {
    long hi = m + horizon / 2;
    long count = std::min<long>(static_cast<long>(s.log_ratio.size()),
                                std::max<long>(1, hi - s.nu_start + 1));
    return std::vector<double>(s.log_ratio.begin(), s.log_ratio.begin() + count);
}

// Two fits agree when they differ by under 10% of their magnitude; constants
// below 1/2 in size are compared against that floor instead, since a
// percentage of a near-zero fit is noise.
bool stable_fit(double full, double half) {
    if (!std::isfinite(full) || !std::isfinite(half)) return false;
    double scale = std::max({std::fabs(full), std::fabs(half), 0.5});
    return std::fabs(full - half) <= 0.10 * scale;
}

std::vector<std::pair<long, double>> margin_series(const SampleSeries& s,
                                                   const GrowthEnvelope& env, FitSide side) {
    std::vector<std::pair<long, double>> out;
    long len = static_cast<long>(s.log_ratio.size());
    long stride = std::max<long>(1, len / 128);
    for (long i = 0; i < len; i += stride) {
        long nu = s.nu_start + i;
        double e = log_envelope_value(env, nu);
        double v = s.log_ratio[static_cast<size_t>(i)];
        out.emplace_back(nu, side == FitSide::Upper ? e - v : v - e);
    }
    return out;
}

EnvelopeCheck fit_check(const std::string& name, const SampleSeries& s, long m, long horizon,
                        const EnvelopeShape& shape, FitSide side) {
    EnvelopeCheck check;
    check.name = name;
    bool all_zero = std::all_of(s.log_ratio.begin(), s.log_ratio.end(),
                                [](double v) { return v == -kInf; });
    if (all_zero) {
        check.ok = true;
        check.note = "zero solution sentinel, check skipped";
        return check;
    }
    try {
        FitResult full = fit_envelope_constant(s.log_ratio, s.nu_start, shape, side);
        FitResult half = fit_envelope_constant(half_of(s, m, horizon), s.nu_start, shape, side);
        check.fitted = full.a_const;
        check.fitted_half = half.a_const;
        check.binding_nu = full.binding_nu;
        check.ok = stable_fit(full.a_const, half.a_const);
        if (!check.ok) check.note = "fit drifts with horizon";
        check.margin = margin_series(s, make_envelope(shape, side, full.a_const), side);
    } catch (const DegenerateSeriesError&) {
        check.ok = true;
        check.note = "zero solution sentinel, check skipped";
    } catch (const Error& e) {
        check.ok = false;
        check.note = e.what();
    }
    return check;
}

void absorb(VerifyResults& results, std::vector<EnvelopeCheck>&& checks) {
    for (auto& c : checks) {
        if (!c.ok) results.violations.push_back(c.name + ": " + c.note);
        results.checks.push_back(std::move(c));
    }
}

// Backward inverse-product sweep from `hi` down to `m`. When `sink` is given
// it receives the frame at every index in [m, sink_hi].
Mat backward_sweep(const Equation& eq, long m, long hi, std::uint64_t seed,
                   std::vector<Mat>* sink = nullptr, long sink_hi = -1) {
    long n = eq.order();
    Mat frame = random_frame(n, n, seed);
    if (sink) sink->assign(static_cast<size_t>(sink_hi - m + 1), Mat());
    for (long kappa = hi - 1; kappa >= m; --kappa) {
        if (eq.coeff(0)(kappa) == cplx(0.0)) throw NonInvertibleStepError(kappa);
        Mat a = companion_matrix(eq, kappa);
        frame = orthonormalize(a.partialPivLu().solve(frame));
        if (sink && kappa <= sink_hi) (*sink)[static_cast<size_t>(kappa - m)] = frame;
    }
    return frame;
}

// Zero-cluster space as the numerical kernel of the forward transfer
// product, for equations whose a_0 vanishes identically.
Mat forward_kernel(const Equation& eq, long m, long dim) {
    long n = eq.order();
    Mat product = Mat::Identity(n, n);
    double gap = 0;
    for (long w = 0; w < 512 && gap < 1e8; ++w) {
        product = companion_matrix(eq, m + w) * product;
        double norm = max_row_sum_norm(product);
        if (norm > 0) product /= norm;
        if (w >= 8 && (w & 7) == 0) {
            Eigen::JacobiSVD<Mat> svd(product);
            double kept = svd.singularValues()(n - dim - 1);
            double dropped = svd.singularValues()(n - dim);
            gap = dropped > 0 ? kept / dropped : 1e300;
        }
    }
    Eigen::JacobiSVD<Mat> svd(product, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(dim);
}

}  // namespace

Mat FiltrationReport::level_at(long theta, long nu) const {
    long d = level_dims.at(static_cast<size_t>(theta - 1));
    if (frames.empty()) return levels.at(static_cast<size_t>(theta - 1));
    long idx = std::clamp<long>(nu - offset, 0, static_cast<long>(frames.size()) - 1);
    return frames[static_cast<size_t>(idx)].leftCols(d);
}

Trajectory confined_trajectory(const Equation& eq, const FiltrationReport& report, long theta,
                               const Vec& window_at_offset, long count) {
    long n = eq.order();
    if (window_at_offset.size() != n) throw RangeError("window length must equal equation order");
    long m = report.offset;
    long d = report.level_dims.at(static_cast<size_t>(theta - 1));
    bool project = theta > 1 && d < n && !report.frames.empty();

    constexpr double kHigh = 1e120;
    constexpr double kLow = 1e-120;

    std::vector<cplx> values;
    std::vector<double> scales;
    values.reserve(static_cast<size_t>(count));
    scales.reserve(static_cast<size_t>(count));

    Vec window = window_at_offset;
    double log_offset = 0.0;
    for (long i = 0; i < n && i < count; ++i) {
        values.push_back(window[i]);
        scales.push_back(0.0);
    }

    long nu = m;
    long produced = std::min<long>(n, count);
    while (produced < count) {
        cplx next = 0.0;
        for (long k = 0; k < n; ++k) next -= eq.coeff(k)(nu) * window[k];
        for (long i = 0; i + 1 < n; ++i) window[i] = window[i + 1];
        window[n - 1] = next;
        ++nu;
        if (project && nu - m < static_cast<long>(report.frames.size())) {
            const Mat l = report.frames[static_cast<size_t>(nu - m)].leftCols(d);
            window = l * (l.adjoint() * window);
        }
        values.push_back(window[n - 1]);
        scales.push_back(log_offset);
        ++produced;

        double mag = max_norm(window);
        if (mag > kHigh || (mag > 0 && mag < kLow)) {
            window /= mag;
            log_offset += std::log(mag);
        }
    }
    return Trajectory(m, std::move(values), std::move(scales));
}

GrowthEstimate growth_exponent(const Trajectory& traj, double tail_fraction) {
    if (traj.size() < 64) throw RangeError("growth exponent requires length >= 64");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw ConfigError("tail fraction must lie in (0, 1]");
    long len = traj.size();
    long t0 = traj.start() + static_cast<long>((1.0 - tail_fraction) * static_cast<double>(len));
    t0 = std::max<long>({t0, traj.start(), 1});

    GrowthEstimate est;
    double best = -kInf;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long finite = 0;
    long mid = t0 + (traj.end() - t0) / 2;
    double best_first = -kInf;
    double best_second = -kInf;
    for (long nu = t0; nu < traj.end(); ++nu) {
        double la = traj.log_abs(nu);
        if (!std::isfinite(la)) continue;
        double ratio = la / static_cast<double>(nu);
        best = std::max(best, ratio);
        if (nu < mid)
            best_first = std::max(best_first, ratio);
        else
            best_second = std::max(best_second, ratio);
        sx += static_cast<double>(nu);
        sy += la;
        sxx += static_cast<double>(nu) * static_cast<double>(nu);
        sxy += static_cast<double>(nu) * la;
        ++finite;
    }
    if (finite == 0) {
        est.flag = GrowthEstimate::Flag::ZeroSolution;
        return est;
    }
    est.value = std::exp(best);
    if (finite >= 2) {
        double denom = sxx - sx * sx / static_cast<double>(finite);
        if (denom > 0)
            est.regression = std::exp((sxy - sx * sy / static_cast<double>(finite)) / denom);
    }
    if (std::isfinite(best_first) && std::isfinite(best_second) &&
        std::exp(best_second) < 0.9 * std::exp(best_first))
        est.flag = GrowthEstimate::Flag::SuperExponentialDecay;
    return est;
}

FiltrationReport compute_filtration(const Equation& eq, const CharacteristicProfile& profile,
                                    long horizon, const FiltrationOptions& opts) {
    long n = eq.order();
    long s = profile.s();
    long m = eq.start_offset();
    FiltrationReport report;
    report.horizon = horizon;
    for (long theta = 1; theta <= s + 1; ++theta)
        report.level_dims.push_back(profile.level_dimension(theta));

    long warm = std::max<long>(64, horizon / 2);
    long last_zero = -1;
    bool all_zero = true;
    for (long kappa = m; kappa < m + horizon + warm; ++kappa) {
        if (eq.coeff(0)(kappa) == cplx(0.0))
            last_zero = kappa;
        else
            all_zero = false;
    }

    Mat frame;
    if (last_zero < 0 || (!all_zero && last_zero < m + horizon / 4)) {
        long base = last_zero < 0 ? m : last_zero + 1;
        report.offset = base;
        Mat b1 = backward_sweep(eq, base, base + horizon + warm, opts.seed, &report.frames,
                                base + horizon);
        Mat b2 = backward_sweep(eq, base, base + std::max<long>(horizon / 2, 64),
                                opts.seed ^ 0xc2b2ae3d27d4eb4fULL);
        for (long theta = 1; theta <= s + 1; ++theta) {
            long d = profile.level_dimension(theta);
            double angle =
                d == 0 ? 0.0 : largest_principal_angle(b1.leftCols(d), b2.leftCols(d));
            report.level_angles.push_back(angle);
            if (angle >= opts.angle_tol)
                throw NonConvergedError(
                    "filtration level " + std::to_string(theta) + " not converged", angle);
        }
        frame = b1;
    } else {
        // a_0 vanishes (nearly) everywhere: no inverse steps, so only the
        // zero cluster is recoverable, as the forward-product kernel.
        if (s > 1)
            throw NonConvergedError(
                "identically vanishing a_0 with more than one nonzero cluster", 1.0);
        report.offset = m;
        long dz = profile.zero_mult_sum;
        Mat kernel = forward_kernel(eq, m, dz);
        frame = Mat(n, n);
        frame.leftCols(dz) = kernel;
        Mat proj = Mat::Identity(n, n) - kernel * kernel.adjoint();
        Eigen::JacobiSVD<Mat> svd(proj, Eigen::ComputeThinU);
        frame.rightCols(n - dz) = svd.matrixU().leftCols(n - dz);
        report.level_angles.assign(static_cast<size_t>(s + 1), 0.0);
    }

    for (long theta = 1; theta <= s + 1; ++theta)
        report.levels.push_back(frame.leftCols(profile.level_dimension(theta)));
    for (long i = 1; i <= s + 1; ++i) {
        long hi = profile.level_dimension(i);
        long lo = i <= s ? profile.level_dimension(i + 1) : 0;
        report.complements.push_back(frame.middleCols(lo, hi - lo));
    }

    // Remark-1 exponent consistency on the complement pieces.
    long sample_len = std::max<long>(256, horizon);
    double tol = opts.exponent_tol.value_or(std::max(
        10.0 * profile.cluster_tolerance,
        (2.0 * std::log(static_cast<double>(std::max<long>(sample_len, 3))) + 10.0) /
            static_cast<double>(sample_len)));
    for (long i = 1; i <= s + 1; ++i) {
        std::vector<double> exps;
        const Mat& basis = report.complement(i);
        for (long j = 0; j < basis.cols(); ++j) {
            Trajectory traj = confined_trajectory(eq, report, i, basis.col(j), sample_len);
            GrowthEstimate g = growth_exponent(traj, 0.5);
            exps.push_back(g.value);
            if (i <= s) {
                double rho = profile.rho(i);
                if (std::fabs(g.value - rho) > tol * std::max(rho, 1e-6))
                    report.violations.push_back(
                        "complement " + std::to_string(i) + " column " + std::to_string(j) +
                        " growth exponent " + std::to_string(g.value) + " misses rho " +
                        std::to_string(rho));
            }
        }
        report.exponents.push_back(std::move(exps));
    }
    return report;
}

VerifyResults verify_theorem7(const Equation& eq, const CharacteristicProfile& profile,
                              const FiltrationReport& report, long horizon,
                              const FiltrationOptions& opts) {
    VerifyResults results;
    long m = report.offset;
    long s = profile.s();
    Equation work = eq.restricted(m);
    std::mt19937_64 rng(opts.seed ^ 0x7e7e7e7e);

    for (long theta = 1; theta <= s; ++theta) {
        double rho = profile.rho(theta);
        int k_theta = profile.clusters[static_cast<size_t>(theta - 1)].mult_max;
        EnvelopeShape shape{rho, k_theta, EnvelopeMode::PolyLog, 0.0};

        const Mat& comp = report.complement(theta);
        std::vector<Vec> lower_windows;
        for (int j = 0; j < opts.samples; ++j) lower_windows.push_back(unit_window(comp, rng));
        std::vector<EnvelopeCheck> lower_checks(lower_windows.size());
        indexed_parallel(static_cast<long>(lower_windows.size()), [&](long j) {
            SampleSeries series =
                window_series(work, report, theta, lower_windows[static_cast<size_t>(j)], horizon);
            lower_checks[static_cast<size_t>(j)] =
                fit_check("th7.za1.theta" + std::to_string(theta) + ".s" + std::to_string(j),
                          series, m, horizon, shape, FitSide::Lower);
        });
        double a_low = 0;
        for (const auto& c : lower_checks) a_low = std::max(a_low, c.fitted);
        absorb(results, std::move(lower_checks));

        const Mat& level = report.level(theta);
        std::vector<Vec> upper_windows;
        for (int j = 0; j < opts.samples; ++j) upper_windows.push_back(unit_window(level, rng));
        std::vector<EnvelopeCheck> upper_checks(upper_windows.size());
        indexed_parallel(static_cast<long>(upper_windows.size()), [&](long j) {
            SampleSeries series =
                window_series(work, report, theta, upper_windows[static_cast<size_t>(j)], horizon);
            upper_checks[static_cast<size_t>(j)] =
                fit_check("th7.za2.theta" + std::to_string(theta) + ".s" + std::to_string(j),
                          series, m, horizon, shape, FitSide::Upper);
        });
        absorb(results, std::move(upper_checks));

        // Empirical deficit standing in for the vanishing alpha(nu) of the
        // projected lower bound; reported, never asserted.
        {
            Vec w = unit_window(level, rng);
            Vec coeffs = comp.adjoint() * w;
            Vec projected = comp * coeffs;
            double omega_pi = max_norm(projected);
            SampleSeries series = window_series(work, report, theta, w, horizon);
            EnvelopeCheck check;
            check.name = "th7.za4.theta" + std::to_string(theta);
            check.fitted = a_low;
            check.ok = true;
            check.note = "empirical deficit series; alpha-hat(nu) -> 0 expected";
            long len = static_cast<long>(series.log_ratio.size());
            long stride = std::max<long>(1, len / 128);
            for (long i = 0; i < len; i += stride) {
                long nu = series.nu_start + i;
                double denom = std::pow(static_cast<double>(nu), 1.0 - 1.0 / k_theta) +
                               std::log(static_cast<double>(nu));
                double bound = std::exp(series.log_ratio[static_cast<size_t>(i)] -
                                        static_cast<double>(nu) * std::log(rho) + a_low * denom);
                check.margin.emplace_back(nu, std::max(0.0, omega_pi - bound));
            }
            results.checks.push_back(std::move(check));
        }
    }

    if (profile.zero_mult_sum > 0) {
        const Mat& zero = report.complement(s + 1);
        EnvelopeShape shape{0.0, std::max(1, profile.zero_mult_max), EnvelopeMode::Factorial, 0.0};
        std::vector<Vec> windows;
        for (int j = 0; j < opts.samples; ++j) windows.push_back(unit_window(zero, rng));
        std::vector<EnvelopeCheck> checks(windows.size());
        indexed_parallel(static_cast<long>(windows.size()), [&](long j) {
            SampleSeries series =
                pointwise_series(work, report, s + 1, windows[static_cast<size_t>(j)], horizon);
            checks[static_cast<size_t>(j)] = fit_check("th7.xza3.s" + std::to_string(j), series,
                                                       m, horizon, shape, FitSide::Upper);
        });
        absorb(results, std::move(checks));
    }
    return results;
}

VerifyResults verify_theorem8_10(const Equation& eq, const CharacteristicProfile& profile,
                                 const FiltrationReport& report, const SubspaceSpec& spec,
                                 long horizon, const FiltrationOptions& opts) {
    long s = profile.s();
    if (spec.theta < 1 || spec.theta > s) throw ConfigError("theta must lie in [1, s]");
    long m = report.offset;
    long n = eq.order();
    Equation work = eq.restricted(m);
    std::mt19937_64 rng(opts.seed ^ (0x1111 * static_cast<std::uint64_t>(spec.theta)));

    long star_dim = 0;
    for (long i = 1; i <= spec.theta; ++i) star_dim += report.complement(i).cols();
    Mat star(n, star_dim);
    {
        long at = 0;
        for (long i = 1; i <= spec.theta; ++i) {
            star.middleCols(at, report.complement(i).cols()) = report.complement(i);
            at += report.complement(i).cols();
        }
    }

    Mat basis;
    std::string kind_name;
    switch (spec.kind) {
        case SubspaceSpec::Kind::Star:
            basis = star;
            kind_name = "star";
            break;
        case SubspaceSpec::Kind::Graph: {
            const Mat& next = report.level(spec.theta + 1);
            Mat xi;
            if (spec.xi) {
                xi = *spec.xi;
                if (xi.rows() != next.cols() || xi.cols() != star_dim)
                    throw ConfigError("xi dimensions do not match the graph construction");
            } else {
                std::mt19937_64 xr(opts.seed ^ 0xabcdef);
                std::normal_distribution<double> g;
                xi = Mat(next.cols(), star_dim);
                for (long r = 0; r < xi.rows(); ++r)
                    for (long c = 0; c < xi.cols(); ++c)
                        xi(r, c) = spec.xi_scale * cplx(g(xr), g(xr));
            }
            basis = star + next * xi;
            kind_name = "graph";
            break;
        }
        case SubspaceSpec::Kind::Random: {
            long dim = spec.dim > 0 ? spec.dim : star_dim;
            if (dim > n) throw ConfigError("subspace dimension exceeds the order");
            basis = random_frame(n, dim, opts.seed ^ 0x5a5a5a5aULL);
            kind_name = "random";
            break;
        }
    }

    // Transversality to the next filtration level.
    {
        const Mat& next = report.level(spec.theta + 1);
        if (next.cols() > 0 && basis.cols() > 0) {
            double angle = smallest_principal_angle(orthonormalize(basis), next);
            if (angle <= 1e-8)
                throw InvalidSubspaceError("subspace intersects level " +
                                           std::to_string(spec.theta + 1) +
                                           " (principal angle " + std::to_string(angle) + ")");
        }
    }

    VerifyResults results;
    double rho = profile.rho(spec.theta);
    EnvelopeShape shape{rho, std::max(1, profile.k_global), EnvelopeMode::PolyLog, 0.0};
    std::vector<Vec> windows;
    for (int j = 0; j < opts.samples; ++j) windows.push_back(unit_window(basis, rng));
    std::vector<EnvelopeCheck> checks(windows.size());
    std::vector<double> drifts(windows.size());
    indexed_parallel(static_cast<long>(windows.size()), [&](long j) {
        SampleSeries series =
            window_series(work, report, 1, windows[static_cast<size_t>(j)], horizon);
        checks[static_cast<size_t>(j)] =
            fit_check("th10." + kind_name + ".theta" + std::to_string(spec.theta) + ".s" +
                          std::to_string(j),
                      series, m, horizon, shape, FitSide::Lower);
        // Drift of omega(nu) rho^-nu over the trailing half; for graph
        // subspaces this ratio settles as the fast part takes over.
        long len = static_cast<long>(series.log_ratio.size());
        double at_mid = series.log_ratio[static_cast<size_t>(len / 2)] -
                        static_cast<double>(series.nu_start + len / 2) * std::log(rho);
        double at_end = series.log_ratio.back() -
                        static_cast<double>(series.nu_start + len - 1) * std::log(rho);
        drifts[static_cast<size_t>(j)] = std::fabs(at_end - at_mid);
    });

    EnvelopeCheck summary;
    summary.name = "th10." + kind_name + ".theta" + std::to_string(spec.theta) + ".Astar";
    summary.fitted = -kInf;
    summary.fitted_half = -kInf;
    double worst_drift = 0;
    for (size_t j = 0; j < checks.size(); ++j) {
        summary.fitted = std::max(summary.fitted, checks[j].fitted);
        summary.fitted_half = std::max(summary.fitted_half, checks[j].fitted_half);
        worst_drift = std::max(worst_drift, drifts[j]);
    }
    summary.ok = stable_fit(summary.fitted, summary.fitted_half);
    summary.note = "uniform constant over " + std::to_string(checks.size()) +
                   " samples; max tail drift of omega*rho^-nu: " + std::to_string(worst_drift);
    if (!summary.ok) results.violations.push_back(summary.name + ": fit drifts with horizon");
    absorb(results, std::move(checks));
    results.checks.push_back(std::move(summary));
    return results;
}

VerifyResults verify_section5(const Equation& eq, const CharacteristicProfile& profile,
                              const FiltrationReport& report, double epsilon, long horizon,
                              const FiltrationOptions& opts) {
    if (!(epsilon > 0)) throw ConfigError("section-5 checks require epsilon > 0");
    VerifyResults results;
    long m = report.offset;
    long s = profile.s();
    Equation work = eq.restricted(m);
    std::mt19937_64 rng(opts.seed ^ 0x55555555);

    for (long theta = 1; theta <= s; ++theta) {
        double rho = profile.rho(theta);
        EnvelopeShape upper_shape{rho, 1, EnvelopeMode::EpsilonGeometric, epsilon};
        const Mat& level = report.level(theta);
        std::vector<Vec> windows;
        for (int j = 0; j < opts.samples; ++j) windows.push_back(unit_window(level, rng));
        std::vector<EnvelopeCheck> checks(windows.size());
        indexed_parallel(static_cast<long>(windows.size()), [&](long j) {
            SampleSeries series =
                window_series(work, report, theta, windows[static_cast<size_t>(j)], horizon);
            checks[static_cast<size_t>(j)] =
                fit_check("s5.yza2.theta" + std::to_string(theta) + ".s" + std::to_string(j),
                          series, m, horizon, upper_shape, FitSide::Upper);
        });
        absorb(results, std::move(checks));

        // Lower envelope on the fast star subspace.
        long star_dim = 0;
        for (long i = 1; i <= theta; ++i) star_dim += report.complement(i).cols();
        Mat star(eq.order(), star_dim);
        long at = 0;
        for (long i = 1; i <= theta; ++i) {
            star.middleCols(at, report.complement(i).cols()) = report.complement(i);
            at += report.complement(i).cols();
        }
        EnvelopeShape lower_shape{rho, 1, EnvelopeMode::EpsilonGeometric, epsilon};
        std::vector<Vec> lw;
        for (int j = 0; j < opts.samples; ++j) lw.push_back(unit_window(star, rng));
        std::vector<EnvelopeCheck> lchecks(lw.size());
        indexed_parallel(static_cast<long>(lw.size()), [&](long j) {
            SampleSeries series =
                window_series(work, report, 1, lw[static_cast<size_t>(j)], horizon);
            lchecks[static_cast<size_t>(j)] =
                fit_check("s5.xza5.theta" + std::to_string(theta) + ".s" + std::to_string(j),
                          series, m, horizon, lower_shape, FitSide::Lower);
        });
        absorb(results, std::move(lchecks));
    }

    if (profile.zero_mult_sum > 0) {
        // omega decays at least like e^{-eps nu}: geometric shape at e^-eps.
        EnvelopeShape shape{std::exp(-epsilon), 1, EnvelopeMode::EpsilonGeometric, 0.0};
        const Mat& zero = report.complement(s + 1);
        std::vector<Vec> windows;
        for (int j = 0; j < opts.samples; ++j) windows.push_back(unit_window(zero, rng));
        std::vector<EnvelopeCheck> checks(windows.size());
        indexed_parallel(static_cast<long>(windows.size()), [&](long j) {
            SampleSeries series =
                window_series(work, report, s + 1, windows[static_cast<size_t>(j)], horizon);
            checks[static_cast<size_t>(j)] = fit_check("s5.yza3.s" + std::to_string(j), series,
                                                       m, horizon, shape, FitSide::Upper);
        });
        absorb(results, std::move(checks));
    }

    // Final corollary: two-sided bound against h(X) over a basis of the
    // span of all nonzero-cluster complements.
    long r_dim = 0;
    for (long i = 1; i <= s; ++i) r_dim += report.complement(i).cols();
    if (r_dim > 0 && epsilon < 1.0) {
        Mat v(eq.order(), r_dim);
        long at = 0;
        for (long i = 1; i <= s; ++i) {
            v.middleCols(at, report.complement(i).cols()) = report.complement(i);
            at += report.complement(i).cols();
        }
        Mat vq = orthonormalize(v);
        long k3 = 1, k4 = s;
        for (long k = s; k >= 1; --k) {
            const Mat& lk = report.level(k);
            Mat resid = vq - lk * (lk.adjoint() * vq);
            if (resid.norm() < 1e-8 * std::sqrt(static_cast<double>(r_dim))) {
                k3 = k;
                break;
            }
        }
        for (long k = 1; k <= s; ++k) {
            const Mat& next = report.level(k + 1);
            if (next.cols() == 0 || smallest_principal_angle(vq, next) > 1e-8) {
                k4 = k;
                break;
            }
        }

        EnvelopeShape c3_shape{profile.rho(k3) + epsilon, 1, EnvelopeMode::EpsilonGeometric, 0.0};
        EnvelopeShape c4_shape{profile.rho(k4) * (1.0 - epsilon), 1,
                               EnvelopeMode::EpsilonGeometric, 0.0};
        std::normal_distribution<double> g;
        double c3 = -kInf, c3_half = -kInf, c4 = -kInf, c4_half = -kInf;
        for (int j = 0; j < opts.samples; ++j) {
            Vec x(r_dim);
            for (long i = 0; i < r_dim; ++i) x[i] = cplx(g(rng), g(rng));
            double h = max_norm(x);
            if (h == 0) continue;
            x /= h;
            Vec window = v * x;
            // Series relative to h(X) = 1 rather than omega(m).
            SampleSeries series = window_series(work, report, 1, window, horizon);
            for (auto& e : series.log_ratio) e += series.log_omega_m;
            FitResult up = fit_envelope_constant(series.log_ratio, series.nu_start, c3_shape,
                                                 FitSide::Upper);
            FitResult down = fit_envelope_constant(series.log_ratio, series.nu_start, c4_shape,
                                                   FitSide::Lower);
            FitResult up_h = fit_envelope_constant(half_of(series, m, horizon), series.nu_start,
                                                   c3_shape, FitSide::Upper);
            FitResult down_h = fit_envelope_constant(half_of(series, m, horizon),
                                                     series.nu_start, c4_shape, FitSide::Lower);
            c3 = std::max(c3, up.a_const);
            c3_half = std::max(c3_half, up_h.a_const);
            c4 = std::max(c4, down.a_const);
            c4_half = std::max(c4_half, down_h.a_const);
        }
        EnvelopeCheck cu;
        cu.name = "s5.corollary.C3";
        cu.fitted = c3;
        cu.fitted_half = c3_half;
        cu.ok = stable_fit(c3, c3_half);
        cu.note = "ln C3 at rho_k3 + eps, k3=" + std::to_string(k3);
        if (!cu.ok) results.violations.push_back(cu.name + ": fit drifts with horizon");
        results.checks.push_back(cu);
        EnvelopeCheck cl;
        cl.name = "s5.corollary.C4";
        cl.fitted = c4;
        cl.fitted_half = c4_half;
        cl.ok = stable_fit(c4, c4_half);
        cl.note = "ln(1/C4) at rho_k4 (1 - eps), k4=" + std::to_string(k4);
        if (!cl.ok) results.violations.push_back(cl.name + ": fit drifts with horizon");
        results.checks.push_back(cl);
    }
    return results;
}

}  // namespace plab
