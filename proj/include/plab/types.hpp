#pragma once

#include <Eigen/Dense>
#include <complex>

namespace plab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

// Max-norm h(x) = max_i |x_i| and the induced matrix norm (max row sum),
// the only vector/operator norm pair used by the growth estimates.
inline double max_norm(const Vec& x) {
    double m = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

inline double max_row_sum_norm(const Mat& a) {
    double m = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double row = 0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
        m = std::max(m, row);
    }
    return m;
}

}  // namespace plab
