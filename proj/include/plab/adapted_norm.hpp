#pragma once

#include <memory>
#include <vector>

#include "plab/types.hpp"

namespace plab {

struct JordanChain {
    cplx eigenvalue;
    int length = 1;
};

/// Numerically recovered generalized eigenstructure of a small matrix:
/// A ~ transform * B * transform^{-1} with B the exact Jordan pattern built
/// from the clustered eigenvalues and chain lengths.
struct JordanStructure {
    std::vector<JordanChain> chains;  // one entry per Jordan block
    Mat transform;                    // chain vectors as columns, grouped per block
    int max_block = 1;                // k, the largest block size
    double condition = 1;             // cond_2 of the transform
    double residual = 0;              // ||A*J - J*B|| / ||A|| (Frobenius)

    int algebraic_multiplicity(cplx lambda, double tol = 1e-7) const;
    int geometric_multiplicity(cplx lambda, double tol = 1e-7) const;
};

struct JordanOptions {
    double eigen_cluster_tol = 1e-7;  // relative eigenvalue merge tolerance
    double condition_gate = 1e10;     // IllConditionedStructureError above this
    int size_cap = 12;
};

JordanStructure jordan_structure(const Mat& a, const JordanOptions& opts = {});

/// Lemma-2 style norm p_{A,eps}(x) = h(S x) with S = D_eps * J^{-1}: the
/// Jordan basis rescaled chain-wise by powers of eps, so that the induced
/// operator norm of A is within sign(k-1)*eps of the spectral radius.
class AdaptedNorm {
public:
    double epsilon() const { return epsilon_; }
    int max_block() const { return max_block_; }
    double gamma_star() const { return gamma_star_; }
    double spectral_radius() const { return spectral_radius_; }
    double min_eigenvalue_modulus() const { return min_eigen_modulus_; }
    const Mat& matrix() const { return matrix_; }
    const Mat& transform() const { return transform_; }

    /// p_{A,eps}(x)
    double value(const Vec& x) const;

    /// Induced operator norm p~(M) = h~(S M S^{-1}).
    double induced(const Mat& m) const;

    /// Cached p~(A).
    double induced_of_matrix() const { return induced_of_matrix_; }

private:
    friend AdaptedNorm build_adapted_norm(const Mat&, double, const JordanOptions&);

    Mat matrix_;
    Mat transform_;   // S
    Mat transform_inverse_;
    double epsilon_ = 1;
    int max_block_ = 1;
    double gamma_star_ = 1;
    double spectral_radius_ = 0;
    double min_eigen_modulus_ = 0;
    double induced_of_matrix_ = 0;

    struct HighPrecision;
    std::shared_ptr<const HighPrecision> hp_;
};

AdaptedNorm build_adapted_norm(const Mat& a, double epsilon,
                               const JordanOptions& opts = {});

/// p~(A^{-1}) together with the enclosure check
/// ||A^{-1}||_sp <= p~(A^{-1}) <= (||A^{-1}||_sp^{-1} - sign(k-1) eps)^{-1}.
/// Throws SingularMatrixError / EnvelopeGapError when the preconditions fail.
double adapted_inverse_norm_bound(const AdaptedNorm& norm);

}  // namespace plab
