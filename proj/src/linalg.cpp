#include "plab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace plab {

Mat random_frame(long n, long p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat f(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) f(i, j) = cplx(g(rng), g(rng));
    return orthonormalize(f);
}

Mat orthonormalize(const Mat& f) {
    Eigen::HouseholderQR<Mat> qr(f);
    return qr.householderQ() * Mat::Identity(f.rows(), f.cols());
}

namespace {

double angle_from_cos(double c) {
    c = std::clamp(c, -1.0, 1.0);
    // acos loses accuracy near 1; switch to the sine form there.
    if (c > 0.99) return std::sqrt(std::max(0.0, 2.0 * (1.0 - c)));
    return std::acos(c);
}

}  // namespace

double largest_principal_angle(const Mat& q1, const Mat& q2) {
    Eigen::JacobiSVD<Mat> svd(q1.adjoint() * q2);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    return angle_from_cos(smin);
}

double smallest_principal_angle(const Mat& q1, const Mat& q2) {
    Eigen::JacobiSVD<Mat> svd(q1.adjoint() * q2);
    double smax = svd.singularValues()(0);
    return angle_from_cos(smax);
}

}  // namespace plab
