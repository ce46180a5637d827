#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rheat/algebra.hpp"
#include "rheat/spectral.hpp"
#include "rheat/time_grid.hpp"

using namespace rheat;

namespace {

Path<double> scalar_path(const TimeGrid& g, std::function<double(double)> f) {
  return {&g, [&g, f](std::size_t i) { return f(g.t(i)); }};
}

Path<double> random_path(const TimeGrid& g, unsigned seed) {
  auto vals = std::make_shared<std::vector<double>>(g.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : *vals) v = u(rng);
  return {&g, [vals](std::size_t i) { return (*vals)[i]; }};
}

}  // namespace

TEST_CASE("time grid invariants") {
  CHECK_THROWS(TimeGrid({0.1, 0.5, 1.0}));            // must start at 0
  CHECK_THROWS(TimeGrid({0.0, 0.5, 0.5}));            // strictly increasing
  TimeGrid fine = TimeGrid::uniform(1.0, 16);
  CHECK(fine.level() == 4);
  TimeGrid coarse = TimeGrid::uniform(1.0, 4);
  CHECK(coarse.is_subgrid_of(fine));
  TimeGrid odd = TimeGrid::uniform(1.0, 3);
  CHECK(!odd.is_subgrid_of(fine));
  CHECK(fine.index_of(0.25) == 4);
  CHECK_THROWS(fine.index_of(0.3));
}

TEST_CASE("delta_one") {
  TimeGrid g({0.0, 0.5, 1.0});
  SUBCASE("constant path gives zeros") {
    auto y = scalar_path(g, [](double) { return 4.2; });
    auto d = delta_one(y);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t t = s; t < 3; ++t) CHECK(d(s, t) == 0.0);
  }
  SUBCASE("direct subtraction") {
    auto y = scalar_path(g, [](double t) { return t * t; });
    auto d = delta_one(y);
    CHECK(d(0, 2) == doctest::Approx(1.0));
    CHECK(d(0, 1) == doctest::Approx(0.25));
  }
  SUBCASE("delta of delta vanishes on all triples") {
    TimeGrid g8 = TimeGrid::uniform(1.0, 7);
    auto y = random_path(g8, 101);
    auto dd = delta_two(delta_one(y));
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t u = s; u < g8.size(); ++u)
        for (std::size_t t = u; t < g8.size(); ++t)
          CHECK(std::abs(dd(s, u, t)) <= 1e-12);
  }
}

TEST_CASE("delta_hat_one") {
  TimeGrid g8 = TimeGrid::uniform(1.0, 7);
  SUBCASE("identity family reduces to delta_one") {
    auto y = random_path(g8, 5);
    IdentityFamily id;
    auto dh = delta_hat_one(y, id);
    auto d = delta_one(y);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t t = s; t < g8.size(); ++t)
        CHECK(std::abs(dh(s, t) - d(s, t)) <= 1e-15);
  }
  SUBCASE("free flow is annihilated") {
    ScalarExpFamily E{3.0};
    auto y = scalar_path(g8, [](double t) { return std::exp(-3.0 * t) * 0.7; });
    auto dh = delta_hat_one(y, E);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t t = s; t < g8.size(); ++t)
        CHECK(std::abs(dh(s, t)) <= 1e-14);
  }
  SUBCASE("cohomology: delta_hat of delta_hat vanishes") {
    ScalarExpFamily E{1.7};
    auto y = random_path(g8, 6);
    auto dh2 = delta_hat_two(delta_hat_one(y, E), E);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t u = s; u < g8.size(); ++u)
        for (std::size_t t = u; t < g8.size(); ++t)
          CHECK(std::abs(dh2(s, u, t)) <= 1e-12);
  }
  SUBCASE("heat-flow trajectory on the grid") {
    auto grid = make_grid(1, 16, 64);
    std::mt19937_64 rng(8);
    GridFunction psi = random_real_field(grid, rng, 10);
    HeatFamily H;
    Path<GridFunction> y{&g8, [&](std::size_t i) { return apply_heat(psi, g8.t(i)); }};
    auto dh = delta_hat_one(y, H);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t t = s; t < g8.size(); ++t)
        CHECK(l2_norm(dh(s, t)) <= 1e-13);
  }
}

TEST_CASE("delta_hat_two exactness") {
  TimeGrid g8 = TimeGrid::uniform(1.0, 7);
  ScalarExpFamily E{2.0};
  SUBCASE("image of delta_hat_one is in the kernel") {
    auto y = random_path(g8, 11);
    auto M = delta_hat_one(y, E);
    auto dh2 = delta_hat_two(M, E);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t u = s; u < g8.size(); ++u)
        for (std::size_t t = u; t < g8.size(); ++t)
          CHECK(std::abs(dh2(s, u, t)) <= 1e-12);
  }
  SUBCASE("additive increments with identity family") {
    IdentityFamily id;
    Increment2<double> M{&g8, [&g8](std::size_t s, std::size_t t) {
                           return g8.t(t) - g8.t(s);
                         }};
    auto d2 = delta_hat_two(M, id);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t u = s; u < g8.size(); ++u)
        for (std::size_t t = u; t < g8.size(); ++t)
          CHECK(std::abs(d2(s, u, t)) <= 1e-14);
  }
}

TEST_CASE("cochain_product") {
  TimeGrid g8 = TimeGrid::uniform(1.0, 7);
  SUBCASE("identity operator re-indexes") {
    auto y = random_path(g8, 21);
    OpIncrement2<double> M{&g8,
                           [](std::size_t, std::size_t, const double& v) { return v; }};
    auto My = cochain_product(M, y);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t t = s; t < g8.size(); ++t)
        CHECK(My(s, t) == y.at(s));
  }
  SUBCASE("scalar length operator on the unit path") {
    Path<double> one{&g8, [](std::size_t) { return 1.0; }};
    OpIncrement2<double> M{&g8, [&g8](std::size_t s, std::size_t t, const double& v) {
                             return (g8.t(t) - g8.t(s)) * v;
                           }};
    auto My = cochain_product(M, one);
    CHECK(My(0, 7) == doctest::Approx(1.0));
    CHECK(My(2, 5) == doctest::Approx(g8.t(5) - g8.t(2)));
  }
  SUBCASE("Leibniz rule on random scalar data") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarExpFamily E{1.3};
    // dense random operator table m(s,t), applied multiplicatively
    auto m = std::make_shared<std::vector<double>>(g8.size() * g8.size());
    for (auto& v : *m) v = u(rng);
    OpIncrement2<double> M{&g8, [m, &g8](std::size_t s, std::size_t t, const double& v) {
                             return (*m)[s * g8.size() + t] * v;
                           }};
    auto y = random_path(g8, 34);
    auto lhs = delta_hat_two(cochain_product(M, y), E);
    for (std::size_t s = 0; s < g8.size(); ++s)
      for (std::size_t u2 = s; u2 < g8.size(); ++u2)
        for (std::size_t t = u2; t < g8.size(); ++t) {
          double dhatM_y = M.eval(s, t, y.at(s)) - M.eval(u2, t, y.at(s)) -
                           E.apply_S(g8.t(t) - g8.t(u2), M.eval(s, u2, y.at(s)));
          double M_dy = M.eval(u2, t, y.at(u2) - y.at(s));
          CHECK(std::abs(lhs(s, u2, t) - (dhatM_y - M_dy)) <= 1e-10);
        }
  }
}

TEST_CASE("holder_norm") {
  TimeGrid g = TimeGrid::uniform(1.0, 16);
  SUBCASE("linear increments at kappa = 1") {
    Increment2<double> v{&g, [&g](std::size_t s, std::size_t t) {
                           return g.t(t) - g.t(s);
                         }};
    CHECK(holder_norm(v, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("zero increment") {
    Increment2<double> v{&g, [](std::size_t, std::size_t) { return 0.0; }};
    CHECK(holder_norm(v, 0.5) == 0.0);
  }
  SUBCASE("square root increments at kappa = 1/2") {
    Increment2<double> v{&g, [&g](std::size_t s, std::size_t t) {
                           return std::sqrt(g.t(t) - g.t(s));
                         }};
    CHECK(holder_norm(v, 0.5) == doctest::Approx(1.0));
  }
  SUBCASE("two-exponent variant") {
    Increment3<double> w{&g, [&g](std::size_t s, std::size_t u, std::size_t t) {
                           return (g.t(t) - g.t(u)) * (g.t(u) - g.t(s));
                         }};
    CHECK(holder_norm3(w, 1.0, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("null grid rejected") {
    Increment2<double> v{nullptr, [](std::size_t, std::size_t) { return 0.0; }};
    CHECK_THROWS_AS(holder_norm(v, 0.5), std::invalid_argument);
  }
}

TEST_CASE("measured_exponent recovers the scale") {
  TimeGrid g = TimeGrid::uniform(1.0, 1024);
  Increment2<double> v{&g, [&g](std::size_t s, std::size_t t) {
                         return std::pow(g.t(t) - g.t(s), 0.75);
                       }};
  CHECK(measured_exponent(v) == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("sew") {
  TimeGrid g = TimeGrid::uniform(1.0, 1024);
  IdentityFamily id;
  SUBCASE("exactly sewable increments telescope at depth 1") {
    ScalarExpFamily E{0.9};
    auto y = random_path(g, 55);
    auto M = delta_hat_one(y, E);
    auto [val, rep] = sew(M, std::size_t{0}, g.cells(), E, 10);
    CHECK(rep.exact);
    CHECK(std::abs(val - M(0, g.cells())) <= 1e-12);
  }
  SUBCASE("quadratic increments vanish geometrically") {
    Increment2<double> v{&g, [&g](std::size_t s, std::size_t t) {
                           double d = g.t(t) - g.t(s);
                           return d * d;
                         }};
    auto [val, rep] = sew(v, std::size_t{0}, g.cells(), id, 8);
    CHECK(val == doctest::Approx(std::pow(2.0, -8.0)).epsilon(1e-12));
    // corrections shrink by 2^{mu-1} with mu = 2, slack 20%
    for (std::size_t d = 1; d < rep.correction_norms.size(); ++d)
      CHECK(rep.correction_norms[d] <=
            rep.correction_norms[d - 1] / (2.0 * 0.8));
    CHECK(rep.measured_mu == doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("non-contracting data raises a divergence error") {
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto vals = std::make_shared<std::vector<double>>(g.size() * 40);
    for (auto& v : *vals) v = u(rng);
    // white increments: refinements add, never contract
    Increment2<double> v{&g, [vals](std::size_t s, std::size_t t) {
                           return (*vals)[(s * 37 + t * 101) % vals->size()];
                         }};
    CHECK_THROWS_AS(sew(v, std::size_t{0}, g.cells(), id, 8), SewDivergence);
  }
}

TEST_CASE("dense cache returns identical values") {
  TimeGrid g = TimeGrid::uniform(1.0, 32);
  auto count = std::make_shared<int>(0);
  Increment2<double> v{&g, [count, &g](std::size_t s, std::size_t t) {
                         ++*count;
                         return g.t(t) - g.t(s);
                       }};
  auto c = cache_dense(v);
  double a = c(3, 17), b = c(3, 17);
  CHECK(a == b);
  CHECK(*count == 1);
}
