#pragma once

#include <cstdint>
#include <vector>

#include "plab/operator.hpp"
#include "plab/spectral.hpp"

namespace plab {

/// Orthonormal frame of the forward-dominant dim-dimensional solution slice,
/// living at `offset` (raised past the requested start until the two
/// independently seeded iterations agree), with the basis solutions iterated
/// out to offset + horizon.
struct SubspaceExtraction {
    Mat basis;  // n x dim, orthonormal windows at `offset`
    long offset = 0;
    double convergence_angle = 0;  // final angle between the two runs
    std::vector<Trajectory> trajectories;
};

SubspaceExtraction dominant_subspace_basis(const Equation& eq, long dim, long horizon,
                                           std::uint64_t seed = 0x5eed,
                                           double angle_tol = 1e-6);

/// Monic degree-p operator annihilating the given solutions: coefficients
/// solve the p x p Casorati system at each nu. Rows are rescaled per
/// solution; a scaled condition number above `cond_gate` raises
/// CasoratianDegenerateError.
DifferenceOperator casoratian_annihilator(const std::vector<Trajectory>& basis, long offset,
                                          long horizon, double cond_gate = 1e10);

struct FactorReport {
    std::vector<cplx> target_poly;        // T_i, ascending monic
    std::vector<cplx> recovered_limits;   // tail-fitted limits of the coefficients
    double limit_error = 0;               // max |recovered - target|
    std::vector<double> decay_fits;       // sup nu |b_r(nu) - b~_r| per coefficient
};

struct Factorization {
    std::vector<DifferenceOperator> factors;  // beta_1 first (applied first)
    std::vector<FactorReport> reports;
    long working_offset = 0;
    double residual = 0;  // composed-chain coefficient mismatch on the window
    bool decay_fits_valid = false;
};

/// Modulus-graded factorization: peel the fastest cluster with a Casoratian
/// annihilator of its dominant solution slice, divide, and recurse; the zero
/// cluster factor (if any) is the final division cofactor.
Factorization factorize(const Equation& eq, const CharacteristicProfile& profile, long horizon,
                        std::uint64_t seed = 0x5eed);

}  // namespace plab
