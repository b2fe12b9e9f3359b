#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "plab/errors.hpp"
#include "plab/spectral.hpp"
#include "support.hpp"

using namespace plab;
using namespace plab::testing;

namespace {

const Root* root_near(const std::vector<Root>& roots, cplx target, double tol = 1e-8) {
    for (const auto& r : roots)
        if (std::abs(r.value - target) <= tol * std::max(1.0, std::abs(target))) return &r;
    return nullptr;
}

}  // namespace

TEST_CASE("characteristic polynomial from limits") {
    CHECK(characteristic_polynomial(fibonacci()) ==
          std::vector<cplx>{cplx(-1.0), cplx(-1.0), cplx(1.0)});
    Equation eq(2,
                {Coefficient::constant(0.0), Coefficient::constant(-1.0),
                 Coefficient::constant(1.0)},
                0);
    CHECK(characteristic_polynomial(eq) == std::vector<cplx>{cplx(0.0), cplx(-1.0), cplx(1.0)});
    CHECK(characteristic_polynomial(constant_equation({2.0, -3.0, 1.0})) ==
          std::vector<cplx>{cplx(2.0), cplx(-3.0), cplx(1.0)});
}

TEST_CASE("find_roots on factored examples") {
    auto roots = find_roots({2.0, -3.0, 1.0});  // (z-1)(z-2)
    REQUIRE(roots.size() == 2);
    CHECK(root_near(roots, 2.0));
    CHECK(root_near(roots, 1.0));

    auto dbl = find_roots({1.0, -2.0, 1.0});  // (z-1)^2
    REQUIRE(dbl.size() == 1);
    CHECK(dbl[0].multiplicity == 2);
    CHECK(std::abs(dbl[0].value - cplx(1.0)) <= 1e-6);

    auto fib = find_roots({-1.0, -1.0, 1.0});
    REQUIRE(fib.size() == 2);
    CHECK(root_near(fib, cplx(kPhi)));
    CHECK(root_near(fib, cplx(1.0 - kPhi)));  // (1-sqrt5)/2 = -1/phi
}

TEST_CASE("cluster_moduli on separated roots") {
    auto profile = cluster_moduli(find_roots({2.0, -3.0, 1.0}), 1e-6);
    REQUIRE(profile.s() == 2);
    CHECK(profile.rho(1) == doctest::Approx(2.0));
    CHECK(profile.rho(2) == doctest::Approx(1.0));
    CHECK(profile.clusters[0].mult_sum == 1);
    CHECK(profile.clusters[1].mult_sum == 1);
    CHECK(profile.zero_mult_max == 0);
    CHECK(profile.k_global == 1);
}

TEST_CASE("cluster_moduli groups the Fibonacci pair") {
    auto profile = cluster_moduli(find_roots({-1.0, -1.0, 1.0}), 1e-6);
    REQUIRE(profile.s() == 2);
    CHECK(profile.rho(1) == doctest::Approx(kPhi));
    CHECK(profile.rho(2) == doctest::Approx(1.0 / kPhi));
}

TEST_CASE("zero roots form the zero cluster") {
    auto profile = cluster_moduli(find_roots({0.0, -1.0, 1.0}), 1e-6);  // z^2 - z
    REQUIRE(profile.s() == 1);
    CHECK(profile.rho(1) == doctest::Approx(1.0));
    CHECK(profile.zero_mult_sum == 1);
    CHECK(profile.zero_mult_max == 1);
    CHECK(profile.level_dimension(1) == 2);
    CHECK(profile.level_dimension(2) == 1);
}

TEST_CASE("conjugate pair shares one modulus cluster") {
    // roots i, -i, 2: |i| = |-i| = 1
    auto poly = poly_from_roots({cplx(0, 1), cplx(0, -1), cplx(2.0)});
    auto profile = cluster_moduli(find_roots(poly), 1e-6);
    REQUIRE(profile.s() == 2);
    CHECK(profile.clusters[0].mult_sum == 1);
    CHECK(profile.clusters[1].mult_sum == 2);
    CHECK(profile.clusters[1].mult_max == 1);
}

TEST_CASE("planted random roots are recovered") {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        long n = 2 + static_cast<long>(u(rng) * 6.99);
        // Moduli separated by at least 10%, random phases.
        std::vector<cplx> roots;
        double radius = 0.4 + u(rng);
        for (long i = 0; i < n; ++i) {
            double angle = 2.0 * M_PI * u(rng);
            roots.push_back(radius * cplx(std::cos(angle), std::sin(angle)));
            radius *= 1.1 + u(rng);
        }
        auto found = find_roots(poly_from_roots(roots));
        long total = 0;
        for (const auto& r : found) total += r.multiplicity;
        CHECK(total == n);
        for (cplx planted : roots) {
            const Root* hit = root_near(found, planted, 1e-8);
            CHECK(hit != nullptr);
        }
        auto profile = cluster_moduli(found, 1e-6);
        CHECK(profile.s() == n);  // all moduli distinct by construction
    }
}

TEST_CASE("multiplicity sum is conserved with multiple roots") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        cplx a(0.5 + u(rng), u(rng));
        cplx b = a * cplx(1.5 + u(rng), 0.1);
        auto poly = poly_from_roots({a, a, b, b});
        auto found = find_roots(poly);
        long total = 0;
        for (const auto& r : found) total += r.multiplicity;
        CHECK(total == 4);
        auto profile = cluster_moduli(found, 1e-6);
        long esum = profile.zero_mult_sum;
        for (const auto& c : profile.clusters) esum += c.mult_sum;
        CHECK(esum == 4);
    }
}

TEST_CASE("cluster_moduli is idempotent") {
    auto poly = poly_from_roots({cplx(2.0), cplx(0, 1.99), cplx(1.0), cplx(0.0)});
    auto profile = cluster_moduli(find_roots(poly), 1e-6);
    auto again = cluster_moduli(profile.roots, 1e-6);
    REQUIRE(again.s() == profile.s());
    for (long i = 1; i <= profile.s(); ++i) CHECK(again.rho(i) == doctest::Approx(profile.rho(i)));
    CHECK(again.zero_mult_sum == profile.zero_mult_sum);
}

TEST_CASE("near-boundary gap records a warning") {
    // two moduli 1.0 and 1 + 1.5e-6 with tol 1e-6: separate but within 2x
    auto poly = poly_from_roots({cplx(1.0), cplx(1.0 + 1.5e-6)});
    auto profile = cluster_moduli(find_roots(poly, 1e-9), 1e-6);
    CHECK(profile.s() == 2);
    CHECK(!profile.warnings.empty());
}

TEST_CASE("cluster polynomial collects the cluster roots") {
    auto poly = poly_from_roots({cplx(2.0), cplx(1.0), cplx(0.0)});
    auto profile = analyze_profile(constant_equation(poly));
    auto t1 = profile.cluster_polynomial(1);
    REQUIRE(t1.size() == 2);
    CHECK(std::abs(t1[0] - cplx(-2.0)) <= 1e-9);
    auto tz = profile.cluster_polynomial(profile.s() + 1);  // zero cluster: z
    REQUIRE(tz.size() == 2);
    CHECK(tz[0] == cplx(0.0));
    CHECK(tz[1] == cplx(1.0));
}

TEST_CASE("find_roots validates input") {
    CHECK_THROWS_AS(find_roots({1.0}), EvaluationError);
    CHECK_THROWS_AS(find_roots({1.0, 2.0}), EvaluationError);  // not monic
    CHECK_THROWS_AS(cluster_moduli({}, -1.0), ConfigError);
}
