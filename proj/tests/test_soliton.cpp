#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "calabi/errors.hpp"
#include "calabi/soliton.hpp"
#include "support.hpp"

using namespace calabi;

namespace {

// the raw shooting integral, int_0^inf ((m+1) - s) s^m (a+s)^n e^{-cs} ds
double raw_integral(const BundleConfig& c, double a, double cc) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double s) {
    if (cc * s > 600) return 0.0;
    return ((c.m + 1) - s) * std::pow(s, c.m) * std::pow(a + s, c.n) * std::exp(-cc * s);
  });
}

}  // namespace

TEST_CASE("shooting integral closed forms") {
  const auto c = testing::bundle();
  for (double x : {0.5, 1.0, 1.7, 3.0}) {
    CHECK(shooting_integral(c, 1.0, x) == doctest::Approx(1 / x - 2 / (x * x * x)).epsilon(1e-13));
    CHECK(shooting_integral(c, 2.0, x) ==
          doctest::Approx(2 / x - 1 / (x * x) - 2 / (x * x * x)).epsilon(1e-13));
  }
  CHECK(std::abs(shooting_integral(c, 1.0, std::sqrt(2.0))) < 1e-15);
}

TEST_CASE("shooting integral signs at the ends") {
  for (int m : {0, 1, 2}) {
    const auto c = testing::bundle(1, m, 2.0);
    CHECK(raw_integral(c, 1.0, 10.0) > 0);
    CHECK(raw_integral(c, 1.0, 0.05) < 0);
    CHECK(shooting_integral(c, 1.0, 10.0) == doctest::Approx(raw_integral(c, 1.0, 10.0)).epsilon(1e-9));
    CHECK(shooting_integral(c, 1.0, 0.05) == doctest::Approx(raw_integral(c, 1.0, 0.05)).epsilon(1e-9));
  }
}

TEST_CASE("exact soliton constants") {
  const auto c = testing::bundle();
  CHECK(std::abs(solve_c_star(c, 1.0).c_star - std::sqrt(2.0)) <= 1e-10);
  CHECK(std::abs(solve_c_star(c, 2.0).c_star - (1 + std::sqrt(17.0)) / 4) <= 1e-10);
  const auto cs = solve_c_star(c, 1.0);
  CHECK(cs.lo <= cs.c_star);
  CHECK(cs.c_star <= cs.hi);
}

TEST_CASE("soliton constant against a quadrature root") {
  for (double a : {0.5, 1.0, 3.0}) {
    const auto c = testing::bundle(1, 1, 2.0);
    const double mine = solve_c_star(c, a).c_star;
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::bisect([&](double x) { return raw_integral(c, a, x); }, 0.2,
                                              20.0, boost::math::tools::eps_tolerance<double>(50),
                                              iters);
    CHECK(mine == doctest::Approx(0.5 * (r.first + r.second)).epsilon(1e-8));
  }
}

TEST_CASE("bad inputs") {
  CHECK_THROWS_AS(solve_c_star(testing::bundle(), -1.0), InvalidInput);
  CHECK_THROWS_AS(shooting_integral(testing::bundle(), 1.0, 0.0), InvalidInput);
}

TEST_CASE("soliton profile near zero") {
  const auto c = testing::bundle();
  const double cs = std::sqrt(2.0);
  for (double x : {1e-6, 1e-5, 1e-4}) CHECK(soliton_w(c, 1.0, cs, x) / x == doctest::Approx(1.0).epsilon(2 * x));
}

TEST_CASE("soliton profile against adaptive quadrature") {
  const auto c = testing::bundle();
  const double cs = std::sqrt(2.0);
  for (double x : {0.3, 1.0, 2.5}) {
    const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double s) { return (1.0 - s) * (1.0 + s) * std::exp(-cs * s); }, 0.0, x, 15, 1e-15);
    const double want = std::exp(cs * x) * I / (1.0 + x);
    CHECK(soliton_w(c, 1.0, cs, x) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("soliton ODE residual") {
  for (auto [m, n, a] : {std::tuple{0, 1, 1.0}, std::tuple{0, 1, 2.0}, std::tuple{1, 2, 0.5}}) {
    const auto c = testing::bundle(n, m, 2.0);
    const double cs = solve_c_star(c, a).c_star;
    const auto sp = soliton_profile(c, a, cs, 1e3, 2048, 1e-3);
    for (std::size_t i = 0; i < sp.x.size(); ++i) {
      CHECK(sp.w[i] > 0);
      CHECK(std::abs(sp.residual[i]) <= 1e-8);
    }
  }
}

TEST_CASE("soliton profile end behaviour") {
  const auto c = testing::bundle();
  const double cs = std::sqrt(2.0);
  const auto sp = soliton_profile(c, 1.0, cs, 1e3, 512, 1e-6);
  CHECK(std::abs(sp.w.front() / sp.x.front() - 1) <= 1e-6);
  CHECK(std::abs(sp.w.back() * cs / sp.x.back() - 1) <= 0.01);
}

TEST_CASE("soliton grows like x / c at infinity") {
  const auto c = testing::bundle();
  const double cs = std::sqrt(2.0);
  const double x = 500.0;
  CHECK(soliton_dw(c, 1.0, cs, x) == doctest::Approx(1 / cs).epsilon(1e-2));
}

TEST_CASE("a wrong constant loses positivity") {
  const auto c = testing::bundle();
  CHECK_THROWS_AS(soliton_profile(c, 1.0, 1.3, 1e3), PositivityLoss);
}

TEST_CASE("momentum chart of the seed") {
  const Grid g = testing::benchmark_grid();
  const Profile p = initial_profile({1.0, 1.0}, g);
  const MomentumChart m = flow_to_momentum(p);
  for (std::size_t i = 0; i < m.x.size(); i += 7) {
    CHECK(m.w[i] == doctest::Approx(m.x[i] * (1 - m.x[i])).epsilon(1e-12));
    CHECK(momentum_rho(m, m.x[i]) == doctest::Approx(m.rho[i]).epsilon(1e-8).scale(1.0));
  }
  for (double x : {0.1, 0.33, 0.5, 0.77}) CHECK(momentum_w(m, x) == doctest::Approx(x * (1 - x)).epsilon(1e-6));
}

TEST_CASE("soliton on a grid reproduces w in the momentum chart") {
  const auto c = testing::bundle();
  const double cs = std::sqrt(2.0);
  const Grid g = testing::benchmark_grid();
  const Profile p = soliton_on_grid(c, 1.0, cs, g);
  const MomentumChart m = flow_to_momentum(p);
  CHECK(momentum_discrepancy(m, c, 1.0, cs) <= 1e-7);
  CHECK_THROWS_AS(momentum_discrepancy(m, c, 1.0, cs, 1e-30, 2.0), InvalidInput);
}
