#pragma once

#include <string>
#include <vector>

#include "plab/equation.hpp"
#include "plab/types.hpp"

namespace plab {

struct Root {
    cplx value;
    int multiplicity = 1;
    double residual = 0;  // |T(value)| after multiplicity collapsing
};

struct ModulusCluster {
    double rho = 0;       // shared root modulus
    int mult_sum = 0;     // e_i
    int mult_max = 0;     // k_i
};

/// Roots of the characteristic polynomial grouped by modulus. Clusters are
/// ordered by strictly decreasing rho; roots with |lambda| below an absolute
/// 1e-12 form the zero cluster (rho_{s+1} = 0, multiplicity k*).
struct CharacteristicProfile {
    std::vector<cplx> poly_coeffs;  // ascending, monic
    std::vector<Root> roots;
    std::vector<ModulusCluster> clusters;  // the s nonzero clusters
    int zero_mult_sum = 0;                 // e_{s+1}
    int zero_mult_max = 0;                 // k* = k_{s+1}
    int k_global = 0;                      // max(k_1, ..., k_s)
    double cluster_tolerance = 1e-6;
    std::vector<std::string> warnings;

    long s() const { return static_cast<long>(clusters.size()); }
    long degree() const { return static_cast<long>(poly_coeffs.size()) - 1; }
    double rho(long i) const { return clusters.at(static_cast<size_t>(i - 1)).rho; }

    /// Coefficients (ascending, monic) of T_i(z), the factor collecting the
    /// roots of cluster i; i = s+1 addresses the zero cluster z^{k*}... z^{e}.
    std::vector<cplx> cluster_polynomial(long i) const;

    /// Dimension of the filtration level theta: sum of e_i for i >= theta.
    long level_dimension(long theta) const;
};

/// T(z) = sum a~_k z^k from the limit coefficients (ascending, monic).
std::vector<cplx> characteristic_polynomial(const Equation& eq);

/// All roots with multiplicities via Aberth-Ehrlich simultaneous iteration,
/// falling back to companion-matrix eigenvalues if the iteration stalls.
/// Roots closer than `merge_tol` (relative) are collapsed into one root of
/// higher multiplicity.
std::vector<Root> find_roots(const std::vector<cplx>& poly, double merge_tol = 1e-7);

/// Group roots into modulus clusters at relative gap `tol`.
CharacteristicProfile cluster_moduli(const std::vector<Root>& roots, double tol = 1e-6);

CharacteristicProfile analyze_profile(const Equation& eq, double tol = 1e-6);

}  // namespace plab
