#pragma once

#include <cstdint>

#include "plab/types.hpp"

namespace plab {

/// Orthonormal n x p frame from a seeded complex Gaussian draw.
Mat random_frame(long n, long p, std::uint64_t seed);

/// Orthonormal basis with the same column span (thin Householder QR).
Mat orthonormalize(const Mat& f);

/// Largest principal angle between the column spans of two orthonormal
/// frames (radians).
double largest_principal_angle(const Mat& q1, const Mat& q2);

/// Smallest principal angle; zero iff the spans intersect.
double smallest_principal_angle(const Mat& q1, const Mat& q2);

}  // namespace plab
