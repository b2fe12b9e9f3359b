#include "plab/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <unordered_map>

#include "plab/errors.hpp"
#include "plab/linalg.hpp"

namespace plab {
namespace {

Mat advance_frame(const Equation& eq, Mat frame, long from, long steps) {
    for (long kappa = from; kappa < from + steps; ++kappa)
        frame = orthonormalize(companion_matrix(eq, kappa) * frame);
    return frame;
}

// Casorati solves shared by all coefficients of one annihilator.
struct CasoratiSolver {
    std::vector<Trajectory> basis;
    long p;
    double cond_gate;
    std::mutex mu;
    std::unordered_map<long, std::vector<cplx>> cache;

    std::vector<cplx> solve(long nu) {
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = cache.find(nu);
            if (it != cache.end()) return it->second;
        }
        Mat m(p, p);
        Vec rhs(p);
        for (long j = 0; j < p; ++j) {
            const Trajectory& y = basis[static_cast<size_t>(j)];
            if (!y.covers(nu, p + 1))
                throw RangeError("Casorati window outside basis trajectories at nu=" +
                                 std::to_string(nu));
            double row_scale = -std::numeric_limits<double>::infinity();
            for (long r = 0; r <= p; ++r) row_scale = std::max(row_scale, y.log_abs(nu + r));
            if (!std::isfinite(row_scale)) throw CasoratianDegenerateError(nu, 0.0);
            for (long r = 0; r <= p; ++r) {
                double la = y.log_abs(nu + r);
                cplx raw = y.raw_values()[static_cast<size_t>(nu + r - y.start())];
                double mag = std::abs(raw);
                cplx scaled = mag == 0.0 ? cplx(0.0) : (raw / mag) * std::exp(la - row_scale);
                if (r < p)
                    m(j, r) = scaled;
                else
                    rhs[j] = -scaled;
            }
        }
        Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double smin = svd.singularValues()(p - 1);
        double smax = svd.singularValues()(0);
        if (smin <= 0 || smax / smin > cond_gate)
            throw CasoratianDegenerateError(nu, smin > 0 ? smax / smin
                                                          : std::numeric_limits<double>::infinity());
        Vec b = svd.solve(rhs);
        std::vector<cplx> out(static_cast<size_t>(p));
        for (long r = 0; r < p; ++r) out[static_cast<size_t>(r)] = b[r];
        std::lock_guard<std::mutex> lock(mu);
        cache.emplace(nu, out);
        return out;
    }
};

// Least-squares fit b(nu) ~ b_inf + c/nu over the tail, returning b_inf.
cplx tail_limit_fit(const Coefficient& c, long lo, long hi) {
    // Normal equations for the 2-parameter complex linear model.
    double s11 = 0, s12 = 0, s22 = 0;
    cplx r1 = 0, r2 = 0;
    for (long nu = lo; nu < hi; ++nu) {
        double w = 1.0 / static_cast<double>(nu);
        cplx v = c(nu);
        s11 += 1.0;
        s12 += w;
        s22 += w * w;
        r1 += v;
        r2 += v * w;
    }
    double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-30) return r1 / s11;
    return (r1 * s22 - r2 * s12) / det;
}

DifferenceOperator with_declared_limits(const DifferenceOperator& op,
                                        const std::vector<cplx>& limits,
                                        Coefficient::Decay decay) {
    std::vector<Coefficient> coeffs;
    coeffs.reserve(static_cast<size_t>(op.degree()) + 1);
    for (long k = 0; k <= op.degree(); ++k) {
        if (op.coeff(k).decay() == Coefficient::Decay::Exact) {
            coeffs.push_back(op.coeff(k));
            continue;
        }
        Coefficient inner = op.coeff(k);
        coeffs.push_back(Coefficient::closure([inner](long nu) { return inner(nu); },
                                              limits.at(static_cast<size_t>(k)), decay));
    }
    return DifferenceOperator(std::move(coeffs), op.start_offset());
}

}  // namespace

SubspaceExtraction dominant_subspace_basis(const Equation& eq, long dim, long horizon,
                                           std::uint64_t seed, double angle_tol) {
    long n = eq.order();
    if (dim < 1 || dim > n) throw ConfigError("subspace dimension must be in [1, order]");

    Mat q1 = random_frame(n, dim, seed);
    Mat q2 = random_frame(n, dim, seed ^ 0x9e3779b97f4a7c15ULL);
    long pos = eq.start_offset();
    double angle = largest_principal_angle(q1, q2);

    constexpr long kChunk = 32;
    const long budget = std::max<long>(2048, horizon);
    while (angle >= angle_tol && pos - eq.start_offset() < budget) {
        q1 = advance_frame(eq, q1, pos, kChunk);
        q2 = advance_frame(eq, q2, pos, kChunk);
        pos += kChunk;
        angle = largest_principal_angle(q1, q2);
    }
    if (angle >= angle_tol)
        throw NonConvergedError("dominant subspace iteration stalled", angle);

    SubspaceExtraction out;
    out.basis = q1;
    out.offset = pos;
    out.convergence_angle = angle;
    long length = horizon + 4 * n + 4;
    for (long j = 0; j < dim; ++j) {
        StateVector sv;
        sv.base_index = pos;
        sv.window = q1.col(j);
        out.trajectories.push_back(iterate(eq, sv, length));
    }
    return out;
}

DifferenceOperator casoratian_annihilator(const std::vector<Trajectory>& basis, long offset,
                                          long horizon, double cond_gate) {
    if (basis.empty()) throw ConfigError("empty Casorati basis");
    long p = static_cast<long>(basis.size());
    for (const auto& y : basis)
        if (!y.covers(offset, p + 1))
            throw RangeError("basis trajectories do not cover the Casorati offset");

    auto solver = std::make_shared<CasoratiSolver>();
    solver->basis = basis;
    solver->p = p;
    solver->cond_gate = cond_gate;

    // Probe the working range once so degeneracies surface here, not later.
    solver->solve(offset);
    if (horizon > 1) solver->solve(offset + std::max<long>(1, horizon / 2));

    std::vector<Coefficient> coeffs;
    for (long r = 0; r < p; ++r) {
        coeffs.push_back(Coefficient::closure(
            [solver, r](long nu) { return solver->solve(nu)[static_cast<size_t>(r)]; },
            std::nullopt, Coefficient::Decay::Vanishing, std::nullopt, /*memoize=*/false));
    }
    coeffs.push_back(Coefficient::constant(1.0));
    return DifferenceOperator(std::move(coeffs), offset);
}

Factorization factorize(const Equation& eq, const CharacteristicProfile& profile, long horizon,
                        std::uint64_t seed) {
    if (profile.s() < 1)
        throw ClassError("factorization requires at least one nonzero modulus cluster");

    bool inverse_nu = eq.all_inverse_nu();
    auto run_at = [&](long m_start) {
        Factorization out;
        out.decay_fits_valid = inverse_nu;
        DifferenceOperator current = DifferenceOperator::from_equation(eq.restricted(m_start));
        long div_horizon = std::min<long>(1000, horizon);
        // Basis trajectories must cover every later evaluation: offsets rise
        // by at most one warmup budget per peel.
        long traj_horizon = horizon + (profile.s() + 1) * 2048 + 8 * eq.order();

        for (long i = 1; i <= profile.s(); ++i) {
            long e_i = profile.clusters[static_cast<size_t>(i - 1)].mult_sum;
            Equation eq_cur = current.to_equation();
            SubspaceExtraction ext = dominant_subspace_basis(
                eq_cur, e_i, traj_horizon, seed + static_cast<std::uint64_t>(i), 1e-6);

            DifferenceOperator raw =
                casoratian_annihilator(ext.trajectories, ext.offset, horizon);
            std::vector<cplx> target = profile.cluster_polynomial(i);
            Coefficient::Decay decay = inverse_nu ? Coefficient::Decay::InverseNu
                                                  : Coefficient::Decay::Vanishing;
            DifferenceOperator beta = with_declared_limits(raw, target, decay);

            FactorReport report;
            report.target_poly = target;
            long fit_lo = ext.offset + std::max<long>(horizon / 2, 8);
            long fit_hi = ext.offset + horizon;
            double limit_scale = 1.0;
            for (cplx t : target) limit_scale = std::max(limit_scale, std::abs(t));
            for (long r = 0; r < beta.degree(); ++r) {
                cplx recovered = tail_limit_fit(beta.coeff(r), fit_lo, fit_hi);
                report.recovered_limits.push_back(recovered);
                report.limit_error = std::max(
                    report.limit_error, std::abs(recovered - target[static_cast<size_t>(r)]));
                double fit = 0;
                for (long nu = fit_lo; nu < fit_hi; ++nu)
                    fit = std::max(fit, static_cast<double>(nu) *
                                            std::abs(beta.coeff(r)(nu) -
                                                     target[static_cast<size_t>(r)]));
                report.decay_fits.push_back(fit);
            }
            report.recovered_limits.push_back(1.0);
            if (report.limit_error > 0.1 * limit_scale)
                throw NonConvergedError("factor limits far from the cluster polynomial",
                                        report.limit_error);

            out.factors.push_back(beta);
            out.reports.push_back(report);
            current = divide_right(restrict_operator(current, ext.offset), beta, div_horizon);
        }

        long m_final = out.factors.back().start_offset();
        if (profile.zero_mult_sum > 0) {
            // The zero-cluster factor cannot be power-iterated (its kernel
            // decays factorially); it is the remaining division cofactor.
            FactorReport report;
            report.target_poly = profile.cluster_polynomial(profile.s() + 1);
            for (long r = 0; r < current.degree(); ++r) {
                cplx recovered =
                    tail_limit_fit(current.coeff(r), m_final + horizon / 2, m_final + horizon);
                report.recovered_limits.push_back(recovered);
                report.limit_error = std::max(report.limit_error, std::abs(recovered));
            }
            report.recovered_limits.push_back(1.0);
            out.factors.push_back(current);
            out.reports.push_back(report);
        }
        out.working_offset = m_final;

        // Composed-chain residual against the original coefficients.
        DifferenceOperator chain = out.factors.front();
        for (size_t i = 1; i < out.factors.size(); ++i)
            chain = compose(out.factors[i], chain);
        long res_hi = m_final + std::min<long>(horizon, 256);
        double worst = 0;
        for (long nu = m_final; nu < res_hi; ++nu) {
            double scale = 1.0;
            for (long k = 0; k <= eq.order(); ++k)
                scale = std::max(scale, std::abs(eq.coeff(k)(nu)));
            for (long k = 0; k <= eq.order(); ++k) {
                cplx want = eq.coeff(k)(nu);
                cplx got = k <= chain.degree() ? chain.coeff(k)(nu) : cplx(0.0);
                worst = std::max(worst, std::abs(want - got) / scale);
            }
        }
        out.residual = worst;
        return out;
    };

    long m_try = eq.start_offset();
    for (;;) {
        try {
            return run_at(m_try);
        } catch (const Error&) {
            long next = m_try == 0 ? 16 : m_try * 2;
            if (next > 10000) throw;
            m_try = next;
        }
    }
}

}  // namespace plab
