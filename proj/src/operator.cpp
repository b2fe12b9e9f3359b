#include "plab/operator.hpp"

#include <algorithm>
#include <cmath>

#include "plab/errors.hpp"

namespace plab {
namespace {

Coefficient::Decay combine_decay(Coefficient::Decay a, Coefficient::Decay b) {
    using D = Coefficient::Decay;
    if (a == D::Vanishing || b == D::Vanishing) return D::Vanishing;
    if (a == D::InverseNu || b == D::InverseNu) return D::InverseNu;
    return D::Exact;
}

}  // namespace

DifferenceOperator::DifferenceOperator(std::vector<Coefficient> coeffs, long start_offset)
    : coeffs_(std::move(coeffs)), start_offset_(start_offset) {
    if (coeffs_.empty()) throw ConfigError("operator needs at least one coefficient");
    if (coeffs_.back().is_constant_zero())
        throw ConfigError("top operator coefficient is identically zero");
}

bool DifferenceOperator::convergent() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const Coefficient& c) { return c.has_limit(); });
}

bool DifferenceOperator::inverse_nu_decay() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Coefficient& c) {
        return c.decay() != Coefficient::Decay::Vanishing;
    });
}

bool DifferenceOperator::invertible_bottom(long lo, long hi) const {
    for (long nu = lo; nu < hi; ++nu)
        if (coeffs_.front()(nu) == cplx(0.0)) return false;
    return true;
}

DifferenceOperator DifferenceOperator::shift(long start_offset) {
    return DifferenceOperator({Coefficient::constant(0.0), Coefficient::constant(1.0)},
                              start_offset);
}

DifferenceOperator DifferenceOperator::from_polynomial(const std::vector<cplx>& poly,
                                                       long start_offset) {
    std::vector<Coefficient> coeffs;
    coeffs.reserve(poly.size());
    for (cplx c : poly) coeffs.push_back(Coefficient::constant(c));
    return DifferenceOperator(std::move(coeffs), start_offset);
}

DifferenceOperator DifferenceOperator::from_equation(const Equation& eq) {
    return DifferenceOperator(eq.coefficients(), eq.start_offset());
}

Equation DifferenceOperator::to_equation() const {
    if (!monic()) throw ClassError("only monic operators define an equation");
    if (degree() < 1) throw ClassError("equation requires degree >= 1");
    return Equation(degree(), coeffs_, start_offset_);
}

cplx apply(const DifferenceOperator& op, const Trajectory& y, long nu) {
    if (!y.covers(nu, op.degree() + 1))
        throw RangeError("trajectory too short for operator application at nu=" +
                         std::to_string(nu));
    cplx acc = 0.0;
    for (long k = 0; k <= op.degree(); ++k) acc += op.coeff(k)(nu) * y.value(nu + k);
    return acc;
}

cplx apply(const DifferenceOperator& op, const std::function<cplx(long)>& y, long nu) {
    cplx acc = 0.0;
    for (long k = 0; k <= op.degree(); ++k) acc += op.coeff(k)(nu) * y(nu + k);
    return acc;
}

DifferenceOperator compose(const DifferenceOperator& beta, const DifferenceOperator& gamma) {
    long p = beta.degree();
    long q = gamma.degree();
    long offset = std::max(beta.start_offset(), gamma.start_offset());
    std::vector<Coefficient> coeffs;
    coeffs.reserve(static_cast<size_t>(p + q) + 1);
    for (long k = 0; k <= p + q; ++k) {
        std::vector<std::pair<Coefficient, std::pair<Coefficient, long>>> terms;
        bool exact_limit = true;
        cplx limit = 0.0;
        Coefficient::Decay decay = Coefficient::Decay::Exact;
        for (long r = std::max<long>(0, k - q); r <= std::min(k, p); ++r) {
            long s = k - r;
            const Coefficient& br = beta.coeff(r);
            const Coefficient& cs = gamma.coeff(s);
            terms.push_back({br, {cs, r}});
            if (br.has_limit() && cs.has_limit())
                limit += br.limit() * cs.limit();
            else
                exact_limit = false;
            decay = combine_decay(decay, combine_decay(br.decay(), cs.decay()));
        }
        auto rule = [terms](long nu) {
            cplx acc = 0.0;
            for (const auto& [br, shifted] : terms)
                acc += br(nu) * shifted.first(nu + shifted.second);
            return acc;
        };
        coeffs.push_back(Coefficient::closure(
            rule, exact_limit ? std::optional<cplx>(limit) : std::nullopt, decay,
            std::nullopt, /*memoize=*/true));
    }
    return DifferenceOperator(std::move(coeffs), offset);
}

DifferenceOperator restrict_operator(const DifferenceOperator& op, long mu) {
    if (mu < op.start_offset()) throw RangeError("restriction below operator start offset");
    return DifferenceOperator(op.coefficients(), mu);
}

std::pair<DifferenceOperator, std::vector<cplx>> limit_operator_and_charpoly(
    const DifferenceOperator& op) {
    if (!op.convergent()) throw ClassError("limit operator requires convergent coefficients");
    std::vector<cplx> poly;
    std::vector<Coefficient> coeffs;
    poly.reserve(static_cast<size_t>(op.degree()) + 1);
    for (long k = 0; k <= op.degree(); ++k) {
        poly.push_back(op.coeff(k).limit());
        coeffs.push_back(Coefficient::constant(poly.back()));
    }
    return {DifferenceOperator(std::move(coeffs), op.start_offset()), poly};
}

DifferenceOperator divide_right(const DifferenceOperator& alpha, const DifferenceOperator& beta,
                                long horizon, double tol) {
    if (!beta.monic()) throw ClassError("right division requires a monic divisor");
    long p = beta.degree();
    long q = alpha.degree() - p;
    if (q < 0) throw ClassError("divisor degree exceeds dividend degree");
    long offset = std::max(alpha.start_offset(), beta.start_offset());

    // Limits of the quotient come from polynomial division of the limit
    // polynomials when both operators converge.
    std::vector<std::optional<cplx>> limits(static_cast<size_t>(q) + 1);
    bool convergent = alpha.convergent() && beta.convergent();
    if (convergent) {
        std::vector<cplx> rem;
        rem.reserve(static_cast<size_t>(alpha.degree()) + 1);
        for (long k = 0; k <= alpha.degree(); ++k) rem.push_back(alpha.coeff(k).limit());
        for (long t = q; t >= 0; --t) {
            cplx c = rem[static_cast<size_t>(t + p)];
            limits[static_cast<size_t>(t)] = c;
            for (long r = 0; r <= p; ++r) rem[static_cast<size_t>(t + r)] -= c * beta.coeff(r).limit();
        }
    }
    Coefficient::Decay decay =
        (alpha.inverse_nu_decay() && beta.inverse_nu_decay()) ? Coefficient::Decay::InverseNu
                                                              : Coefficient::Decay::Vanishing;

    // u_t(nu) = a_{t+p}(nu) - sum_{s>t} u_s(nu) b_{t+p-s}(nu+s); triangular
    // because b_p == 1. Built top-down so each closure sees the ones above.
    // The top quotient coefficient is a_{p+q} itself, so a monic dividend
    // yields a monic quotient.
    std::vector<Coefficient> quotient(static_cast<size_t>(q) + 1);
    quotient[static_cast<size_t>(q)] = alpha.coeff(alpha.degree());
    for (long t = q - 1; t >= 0; --t) {
        std::vector<Coefficient> upper(quotient.begin() + t + 1, quotient.end());
        Coefficient a_top = alpha.coeff(t + p);
        std::vector<std::pair<Coefficient, long>> divisor_terms;  // (b_{t+p-s}, s)
        for (long s = t + 1; s <= q; ++s) {
            long idx = t + p - s;
            if (idx < 0 || idx > p) continue;
            divisor_terms.push_back({beta.coeff(idx), s});
        }
        auto rule = [a_top, upper, divisor_terms, t](long nu) {
            cplx acc = a_top(nu);
            for (const auto& [b, s] : divisor_terms)
                acc -= upper[static_cast<size_t>(s - t - 1)](nu) * b(nu + s);
            return acc;
        };
        quotient[static_cast<size_t>(t)] = Coefficient::closure(
            rule, convergent ? limits[static_cast<size_t>(t)] : std::nullopt, decay,
            std::nullopt, /*memoize=*/true);
    }
    DifferenceOperator eta(quotient, offset);

    // The coefficients below shift^p are determined by alpha already; their
    // mismatch is the division residual.
    double worst = 0;
    for (long nu = offset; nu < offset + horizon; ++nu) {
        double scale = 1.0;
        for (long k = 0; k <= alpha.degree(); ++k)
            scale = std::max(scale, std::abs(alpha.coeff(k)(nu)));
        for (long k = 0; k < p; ++k) {
            cplx acc = alpha.coeff(k)(nu);
            for (long s = 0; s <= std::min(k, q); ++s) {
                long idx = k - s;
                if (idx > p) continue;
                acc -= eta.coeff(s)(nu) * beta.coeff(idx)(nu + s);
            }
            worst = std::max(worst, std::abs(acc) / scale);
        }
        if (worst > tol) throw InexactDivisionError(worst, tol);
    }
    if (worst > tol) throw InexactDivisionError(worst, tol);
    return eta;
}

}  // namespace plab
