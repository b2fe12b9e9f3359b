#include <doctest.h>

#include <cmath>
#include <random>

#include "plab/equation.hpp"
#include "plab/errors.hpp"
#include "support.hpp"

using namespace plab;
using namespace plab::testing;

TEST_CASE("companion matrix of the Fibonacci equation") {
    Equation eq = fibonacci();
    Mat a = companion_matrix(eq, 0);
    CHECK(a(0, 0) == cplx(0.0));
    CHECK(a(0, 1) == cplx(1.0));
    CHECK(a(1, 0) == cplx(1.0));
    CHECK(a(1, 1) == cplx(1.0));
    CHECK(limit_companion(eq) == a);
}

TEST_CASE("companion matrix with a variable coefficient") {
    // a_0(nu) = 1/(nu+1), a_1 = -1
    Equation eq(2,
                {Coefficient::rational({1.0}, {1.0, 1.0}), Coefficient::constant(-1.0),
                 Coefficient::constant(1.0)},
                0);
    Mat a = companion_matrix(eq, 1);
    CHECK(a(1, 0) == cplx(-0.5));
    CHECK(a(1, 1) == cplx(1.0));
    Mat lim = limit_companion(eq);
    CHECK(lim(1, 0) == cplx(0.0));
}

TEST_CASE("order-1 companion and limit") {
    Equation eq(1, {Coefficient::constant(-1.0), Coefficient::constant(1.0)}, 0);
    CHECK(companion_matrix(eq, 0)(0, 0) == cplx(1.0));
    // n=2, limits a~_0 = 2, a~_1 = -3 -> last row (-2, 3)
    Equation eq2 = constant_equation({2.0, -3.0, 1.0});
    Mat lim = limit_companion(eq2);
    CHECK(lim(1, 0) == cplx(-2.0));
    CHECK(lim(1, 1) == cplx(3.0));
}

TEST_CASE("companion index below start offset raises") {
    Equation eq = fibonacci().restricted(5);
    CHECK_THROWS_AS(companion_matrix(eq, 3), RangeError);
}

TEST_CASE("step_forward walks the Fibonacci sequence") {
    Equation eq = fibonacci();
    StateVector sv = state(0, {1.0, 1.0});
    sv = step_forward(eq, sv);
    CHECK(sv.base_index == 1);
    CHECK(sv.window[0] == cplx(1.0));
    CHECK(sv.window[1] == cplx(2.0));
    sv = step_forward(eq, sv);
    CHECK(sv.window[0] == cplx(2.0));
    CHECK(sv.window[1] == cplx(3.0));
}

TEST_CASE("step_forward on y(nu+1) = y(nu)/(nu+1) gives 1/nu!") {
    Equation eq(1,
                {Coefficient::rational({-1.0}, {1.0, 1.0}), Coefficient::constant(1.0)}, 0);
    StateVector sv = state(0, {1.0});
    sv = step_forward(eq, sv);
    CHECK(sv.window[0] == cplx(1.0));
    sv = step_forward(eq, sv);
    CHECK(sv.window[0] == cplx(0.5));
    // y(nu) = 1/nu! -- iterate and compare against the factorial oracle.
    Trajectory traj = iterate(eq, state(0, {1.0}), 12);
    double factorial = 1;
    for (long nu = 1; nu < 12; ++nu) {
        factorial *= nu;
        CHECK(std::abs(traj.value(nu) - cplx(1.0 / factorial)) <= 1e-15 / factorial);
    }
}

TEST_CASE("step_backward inverts step_forward") {
    Equation eq = fibonacci();
    StateVector sv = state(1, {1.0, 2.0});
    StateVector back = step_backward(eq, sv);
    CHECK(back.base_index == 0);
    CHECK(back.window[0] == cplx(1.0));
    CHECK(back.window[1] == cplx(1.0));

    StateVector start = state(4, {3.0, 5.0});
    StateVector round = step_backward(eq, step_forward(eq, start));
    CHECK(round.window[0] == cplx(3.0));
    CHECK(round.window[1] == cplx(5.0));
}

TEST_CASE("step_backward requires a nonzero a_0") {
    Equation eq = constant_equation({0.0, -1.0, 1.0});  // T = z^2 - z
    CHECK_THROWS_AS(step_backward(eq, state(3, {1.0, 1.0})), NonInvertibleStepError);
}

TEST_CASE("forward-backward round trip over 1000 steps") {
    // Roots e^{i} and e^{-i} on the unit circle keep the orbit bounded.
    Equation eq = constant_equation({1.0, -2.0 * std::cos(1.0), 1.0});
    StateVector sv = state(0, {0.3, -1.2});
    StateVector far = sv;
    for (int i = 0; i < 1000; ++i) far = step_forward(eq, far);
    for (int i = 0; i < 1000; ++i) far = step_backward(eq, far);
    CHECK(far.base_index == 0);
    CHECK(std::abs(far.window[0] - cplx(0.3)) <= 1e-10 * std::abs(cplx(0.3)));
    CHECK(std::abs(far.window[1] - cplx(-1.2)) <= 1e-10 * std::abs(cplx(-1.2)));
}

TEST_CASE("matrix path equals scalar path") {
    Equation eq(2,
                {Coefficient::rational({2.0, 1.0}, {3.0, 1.0}), Coefficient::constant(-1.5),
                 Coefficient::constant(1.0)},
                0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    StateVector sv = state(0, {cplx(g(rng), g(rng)), cplx(g(rng), g(rng))});
    for (long nu = 0; nu < 50; ++nu) {
        Vec via_matrix = companion_matrix(eq, nu) * sv.window;
        sv = step_forward(eq, sv);
        CHECK((via_matrix - sv.window).norm() <= 1e-12 * sv.window.norm());
    }
}

TEST_CASE("window_norm basics") {
    Trajectory fib(0, {1.0, 1.0, 2.0, 3.0, 5.0, 8.0});
    CHECK(window_norm(fib, 0, 2) == 1.0);
    CHECK(window_norm(fib, 3, 2) == 5.0);  // max(|y(3)|, |y(4)|)
    CHECK(window_norm(fib, 4, 2) == 8.0);
    Trajectory zero(0, {0.0, 0.0, 0.0});
    CHECK(window_norm(zero, 0, 2) == 0.0);
    CHECK_THROWS_AS(window_norm(fib, 5, 2), RangeError);
}

TEST_CASE("window_norm is homogeneous and subadditive") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::vector<cplx> a, b, sum, scaled;
    for (int i = 0; i < 16; ++i) {
        a.push_back(cplx(g(rng), g(rng)));
        b.push_back(cplx(g(rng), g(rng)));
        sum.push_back(a.back() + b.back());
        scaled.push_back(cplx(-2.5, 1.0) * a.back());
    }
    Trajectory ta(0, a), tb(0, b), ts(0, sum), tc(0, scaled);
    for (long nu = 0; nu + 4 <= 16; ++nu) {
        CHECK(window_norm(ts, nu, 4) <= window_norm(ta, nu, 4) + window_norm(tb, nu, 4) + 1e-12);
        CHECK(window_norm(tc, nu, 4) ==
              doctest::Approx(std::abs(cplx(-2.5, 1.0)) * window_norm(ta, nu, 4)));
    }
}

TEST_CASE("iterate survives strong growth via log scaling") {
    Equation eq = constant_equation(poly_from_roots({cplx(3.0), cplx(0.5)}));
    Trajectory traj = iterate(eq, state(0, {1.0, 3.0}), 2000);  // pure 3^nu start
    CHECK(traj.log_abs(1500) == doctest::Approx(1500.0 * std::log(3.0)).epsilon(1e-9));
    CHECK(std::isfinite(traj.log_abs(1999)));
}

TEST_CASE("satisfies checks the recurrence") {
    Equation eq = fibonacci();
    Trajectory good = iterate(eq, state(0, {1.0, 1.0}), 64);
    CHECK(satisfies(eq, good));
    Trajectory bad(0, {1.0, 1.0, 2.0, 3.0, 5.0, 9.0});
    CHECK(!satisfies(eq, bad));
}

TEST_CASE("equation validation") {
    CHECK_THROWS_AS(Equation(2, {Coefficient::constant(1.0)}, 0), ConfigError);
    CHECK_THROWS_AS(Equation(1,
                             {Coefficient::constant(1.0), Coefficient::constant(2.0)}, 0),
                    ConfigError);
    CHECK_THROWS_AS(fibonacci().restricted(-1), RangeError);
}
