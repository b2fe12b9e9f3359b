#pragma once

// Shared builders for the test suites: canonical equations, planted Jordan
// matrices, random coefficient perturbations.

#include <cmath>
#include <random>
#include <vector>

#include "plab/equation.hpp"
#include "plab/linalg.hpp"
#include "plab/types.hpp"

namespace plab::testing {

inline const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

// y(nu+2) = y(nu+1) + y(nu)
inline Equation fibonacci() {
    return Equation(2,
                    {Coefficient::constant(-1.0), Coefficient::constant(-1.0),
                     Coefficient::constant(1.0)},
                    0);
}

// Monic constant-coefficient equation from ascending characteristic
// polynomial coefficients (a_k = poly[k]).
inline Equation constant_equation(const std::vector<cplx>& poly, long offset = 0) {
    std::vector<Coefficient> coeffs;
    for (cplx c : poly) coeffs.push_back(Coefficient::constant(c));
    return Equation(static_cast<long>(poly.size()) - 1, std::move(coeffs), offset);
}

// Monic polynomial with the given roots, ascending coefficients.
inline std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> coeffs{1.0};
    for (cplx r : roots) {
        coeffs.push_back(0.0);
        for (size_t j = coeffs.size(); j-- > 1;) coeffs[j] = coeffs[j - 1] - r * coeffs[j];
        coeffs[0] *= -r;
    }
    return coeffs;
}

// Coefficient a~ + c/(nu+1) as a rational rule.
inline Coefficient inverse_nu_coefficient(cplx limit, cplx c) {
    // (limit*(nu+1) + c) / (nu+1)
    return Coefficient::rational({limit + c, limit}, {1.0, 1.0});
}

// Constant-limit equation with O(1/nu) perturbations on every non-monic
// coefficient: a_k(nu) = poly[k] + pert[k]/(nu+1).
inline Equation perturbed_equation(const std::vector<cplx>& poly, const std::vector<cplx>& pert,
                                   long offset = 0) {
    std::vector<Coefficient> coeffs;
    for (size_t k = 0; k + 1 < poly.size(); ++k)
        coeffs.push_back(inverse_nu_coefficient(poly[k], pert[k]));
    coeffs.push_back(Coefficient::constant(1.0));
    return Equation(static_cast<long>(poly.size()) - 1, std::move(coeffs), offset);
}

// Jordan pattern with the given (eigenvalue, block size) list.
inline Mat jordan_pattern(const std::vector<std::pair<cplx, int>>& blocks) {
    long n = 0;
    for (const auto& b : blocks) n += b.second;
    Mat j = Mat::Zero(n, n);
    long at = 0;
    for (const auto& [lambda, size] : blocks) {
        for (int t = 0; t < size; ++t) {
            j(at + t, at + t) = lambda;
            if (t + 1 < size) j(at + t, at + t + 1) = 1.0;
        }
        at += size;
    }
    return j;
}

// Random similarity with controlled condition number: X = Q1 D Q2 with
// singular values spread up to cond_target.
inline Mat random_similarity(long n, double cond_target, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat q1 = random_frame(n, n, rng());
    Mat q2 = random_frame(n, n, rng());
    Mat d = Mat::Zero(n, n);
    for (long i = 0; i < n; ++i)
        d(i, i) = std::pow(cond_target, -u(rng));
    d(0, 0) = 1.0;
    return q1 * d * q2.adjoint();
}

inline Mat planted_jordan(const std::vector<std::pair<cplx, int>>& blocks, double cond_target,
                          std::mt19937_64& rng) {
    Mat j = jordan_pattern(blocks);
    Mat x = random_similarity(j.rows(), cond_target, rng);
    return x * j * x.inverse();
}

inline StateVector state(long nu, std::initializer_list<cplx> values) {
    StateVector sv;
    sv.base_index = nu;
    sv.window = Vec(static_cast<long>(values.size()));
    long i = 0;
    for (cplx v : values) sv.window[i++] = v;
    return sv;
}

}  // namespace plab::testing
