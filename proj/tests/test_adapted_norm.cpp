#include <doctest.h>

#include <cmath>
#include <random>

#include "plab/adapted_norm.hpp"
#include "plab/errors.hpp"
#include "support.hpp"

using namespace plab;
using namespace plab::testing;

namespace {

Mat mat2(cplx a, cplx b, cplx c, cplx d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

// One full Lemma-2 check battery evaluated on random probes.
void check_lemma2(const Mat& a, double eps, std::mt19937_64& rng, double slack = 1e-10) {
    AdaptedNorm norm = build_adapted_norm(a, eps);
    long n = a.rows();
    int k = norm.max_block();
    double g = norm.gamma_star();
    double up = std::pow(std::max(1.0, 1.0 / eps), k - 1);
    double down = std::pow(std::max(1.0, eps), k - 1);
    double both = std::pow(std::max(eps, 1.0 / eps), k - 1);
    std::normal_distribution<double> gauss;

    for (int probe = 0; probe < 8; ++probe) {
        Vec x(n);
        for (long i = 0; i < n; ++i) x[i] = cplx(gauss(rng), gauss(rng));
        double p = norm.value(x);
        double h = max_norm(x);
        CHECK(p <= g * up * h * (1 + 1e-12) + slack);        // eq. ec
        CHECK(h <= g * down * p * (1 + 1e-12) + slack);      // eq. ed
        Mat matprobe(n, n);
        for (long r = 0; r < n; ++r)
            for (long c = 0; c < n; ++c) matprobe(r, c) = cplx(gauss(rng), gauss(rng));
        double pm = norm.induced(matprobe);
        double hm = max_row_sum_norm(matprobe);
        CHECK(pm <= g * g * both * hm * (1 + 1e-12) + slack);  // eq. ee
        CHECK(hm <= g * g * both * pm * (1 + 1e-12) + slack);  // eq. ef
    }

    // eq. eg
    double induced = norm.induced_of_matrix();
    double rho = norm.spectral_radius();
    double eps_term = k > 1 ? eps : 0.0;
    CHECK(induced >= rho - slack * std::max(1.0, rho));
    CHECK(induced <= rho + eps_term + slack * std::max(1.0, rho));

    // eq. ei whenever eq. eh holds
    double mu = norm.min_eigenvalue_modulus();
    if (mu > 1e-8 && mu > eps_term * (1 + 1e-9)) {
        double value = adapted_inverse_norm_bound(norm);
        CHECK(value >= 1.0 / mu - slack);
        double cap = k > 1 ? 1.0 / (mu - eps_term) : 1.0 / mu;
        CHECK(value <= cap + slack * std::max(1.0, cap));
    }
}

}  // namespace

TEST_CASE("jordan_structure on a diagonal matrix") {
    JordanStructure js = jordan_structure(mat2(2.0, 0.0, 0.0, 3.0));
    CHECK(js.max_block == 1);
    CHECK(js.chains.size() == 2);
    CHECK(js.algebraic_multiplicity(2.0) == 1);
    CHECK(js.algebraic_multiplicity(3.0) == 1);
    CHECK(js.residual <= 1e-12);
}

TEST_CASE("jordan_structure on an explicit Jordan block") {
    JordanStructure js = jordan_structure(mat2(1.0, 1.0, 0.0, 1.0));
    CHECK(js.max_block == 2);
    CHECK(js.chains.size() == 1);
    CHECK(js.algebraic_multiplicity(1.0) == 2);
    CHECK(js.geometric_multiplicity(1.0) == 1);
}

TEST_CASE("jordan_structure on the companion of (z-1)(z-2)") {
    Mat a = mat2(0.0, 1.0, -2.0, 3.0);
    JordanStructure js = jordan_structure(a);
    CHECK(js.max_block == 1);
    CHECK(js.algebraic_multiplicity(1.0) == 1);
    CHECK(js.algebraic_multiplicity(2.0) == 1);
}

TEST_CASE("jordan_structure respects the size cap") {
    JordanOptions opts;
    opts.size_cap = 3;
    CHECK_THROWS_AS(jordan_structure(Mat::Identity(4, 4), opts), ConfigError);
}

TEST_CASE("adapted norm of a single Jordan block is |lambda| + eps") {
    AdaptedNorm norm = build_adapted_norm(mat2(1.0, 1.0, 0.0, 1.0), 0.1);
    CHECK(norm.induced_of_matrix() == doctest::Approx(1.1).epsilon(1e-12));
    // Monotone in eps for a single block: p~(A) = |lambda| + eps exactly.
    for (double eps : {0.02, 0.3, 1.0, 2.5}) {
        AdaptedNorm ne = build_adapted_norm(mat2(1.0, 1.0, 0.0, 1.0), eps);
        CHECK(ne.induced_of_matrix() == doctest::Approx(1.0 + eps).epsilon(1e-12));
    }
}

TEST_CASE("adapted norm of a diagonal matrix hits the spectral radius") {
    for (double eps : {0.01, 0.5, 1.0, 3.0}) {
        AdaptedNorm norm = build_adapted_norm(mat2(2.0, 0.0, 0.0, 3.0), eps);
        CHECK(std::fabs(norm.induced_of_matrix() - 3.0) <= 1e-10);  // eq. fh
        CHECK(std::fabs(adapted_inverse_norm_bound(norm) - 0.5) <= 1e-10);  // eq. gj
    }
}

TEST_CASE("adapted norm of the identity") {
    AdaptedNorm norm = build_adapted_norm(Mat::Identity(3, 3), 1.0);
    CHECK(norm.induced_of_matrix() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverse bound for a Jordan block stays inside the bracket") {
    AdaptedNorm norm = build_adapted_norm(mat2(1.0, 1.0, 0.0, 1.0), 0.1);
    double v = adapted_inverse_norm_bound(norm);
    CHECK(v >= 1.0 - 1e-12);
    CHECK(v <= 1.0 / 0.9 + 1e-12);
}

TEST_CASE("singular matrix refuses an inverse bound") {
    AdaptedNorm norm = build_adapted_norm(mat2(0.0, 1.0, 0.0, 1.0), 0.5);
    CHECK_THROWS_AS(adapted_inverse_norm_bound(norm), SingularMatrixError);
}

TEST_CASE("envelope gap precondition is enforced") {
    // min |lambda| = 0.05 < eps = 0.1 with a genuine Jordan block
    Mat a = jordan_pattern({{cplx(0.05), 2}});
    AdaptedNorm norm = build_adapted_norm(a, 0.1);
    CHECK_THROWS_AS(adapted_inverse_norm_bound(norm), EnvelopeGapError);
}

TEST_CASE("Lemma 2 battery on planted Jordan structures") {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 2; n <= 6; ++n) {
        for (int trial = 0; trial < 25; ++trial) {
            // A mix of diagonalizable and defective plants; distinct block
            // eigenvalues kept apart so the planted structure is the answer.
            std::vector<std::pair<cplx, int>> blocks;
            auto fresh_lambda = [&] {
                for (;;) {
                    double r = 0.5 + 2.0 * u(rng);
                    double a = 2 * M_PI * u(rng);
                    cplx z = r * cplx(std::cos(a), std::sin(a));
                    bool clear = true;
                    for (const auto& b : blocks) clear &= std::abs(z - b.first) > 0.15;
                    if (clear) return z;
                }
            };
            int left = n;
            bool defective = trial % 2 == 0;
            while (left > 0) {
                int size = defective ? std::min<int>(left, 2 + static_cast<int>(u(rng) * 1.99))
                                     : 1;
                if (size > left) size = left;
                blocks.push_back({fresh_lambda(), size});
                defective = false;
                left -= size;
            }
            double cond = std::pow(10.0, 1.0 + 3.0 * u(rng));  // up to 1e4
            Mat a = planted_jordan(blocks, cond, rng);
            bool has_defect = false;
            for (const auto& b : blocks) has_defect |= b.second > 1;
            if (has_defect) {
                for (double eps : {0.5, 1.0, 2.0}) check_lemma2(a, eps, rng);
            } else {
                for (double eps : {0.01, 0.1, 1.0, 2.0}) check_lemma2(a, eps, rng);
            }
        }
    }
}

TEST_CASE("structure recovery identifies planted defective blocks") {
    std::mt19937_64 rng(99);
    Mat a = planted_jordan({{cplx(1.2, 0.3), 3}, {cplx(0.4), 1}}, 50.0, rng);
    JordanStructure js = jordan_structure(a);
    CHECK(js.max_block == 3);
    CHECK(js.algebraic_multiplicity(cplx(1.2, 0.3)) == 3);
    CHECK(js.geometric_multiplicity(cplx(1.2, 0.3)) == 1);
    CHECK(js.residual <= 1e-9);
}
