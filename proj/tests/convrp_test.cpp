#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "rheat/convrp.hpp"
#include "rheat/expint.hpp"
#include "rheat/signal.hpp"
#include "rheat/spectral.hpp"

using namespace rheat;

namespace {

std::shared_ptr<const RoughSignal> linear_signal(std::size_t cells, int n,
                                                 bool lvl3) {
  DrivingPath p = builtin_path("linear", n, TimeGrid::uniform(1.0, cells));
  return std::make_shared<const RoughSignal>(
      RoughSignal::lift_piecewise_linear(std::move(p), lvl3));
}

// micro-step Riemann oracle for int_s^t e^{-lam (t-u)} f(u) dx_u on the
// polyline, with f sampled mid-cell; independent of the kernel machinery
double riemann_kernel(const RoughSignal& sig, double lam, std::size_t s,
                      std::size_t t, int i, int refine,
                      const std::function<double(double)>& f) {
  const auto& g = sig.grid();
  double acc = 0.0;
  for (std::size_t c = s; c < t; ++c) {
    double a = g.t(c), dt = g.dt(c);
    double mi = sig.cell_increment(c)[i] / dt;
    for (int r = 0; r < refine; ++r) {
      double u0 = a + dt * r / refine, u1 = a + dt * (r + 1) / refine;
      double mid = 0.5 * (u0 + u1);
      acc += std::exp(-lam * (g.t(t) - mid)) * f(mid) * mi * (u1 - u0);
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("exp_poly_moment against quadrature") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    double lam = trial < 20 ? 3000.0 * u(rng) : 0.9 * u(rng);
    double tau = 0.002 + u(rng);
    for (int j = 0; j <= 3; ++j) {
      // midpoint quadrature oracle on the kernel's effective support
      const int steps = 50000;
      double lo = lam > 0 ? std::max(0.0, tau - 50.0 / lam) : 0.0;
      double acc = 0.0;
      for (int m = 0; m < steps; ++m) {
        double v = lo + (tau - lo) * (m + 0.5) / steps;
        acc += std::exp(-lam * (tau - v)) * std::pow(v, j) * (tau - lo) / steps;
      }
      double val = exp_poly_moment(j, lam, tau);
      CHECK(std::abs(val - acc) <= 1e-6 * std::max(std::abs(acc), 1e-12));
    }
  }
  CHECK(exp_poly_moment(0, 0.0, 0.5) == doctest::Approx(0.5));
  CHECK(exp_poly_moment(3, 0.0, 1.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(exp_poly_moment(4, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("level-1 operator closed forms") {
  auto sig = linear_signal(16, 1, false);
  auto grid = make_grid(1, 4, 16);
  ConvolutionalRoughPath crp(sig, grid);
  std::size_t M = sig->grid().cells();

  SUBCASE("zero mode is the path increment") {
    GridFunction one = GridFunction::constant(grid, 1.0);
    GridFunction out = crp.xx_op(0, M / 2, 0, one);
    CHECK(std::abs(out.mean() - 0.5) <= 1e-14);
  }
  SUBCASE("unit slope, lambda = 1, over [0,1]") {
    auto kern = crp.kernel1(0, M, 0);
    int k1[1] = {1};
    double val = kern[grid->flat_index(k1)];
    CHECK(val == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
    double oracle = riemann_kernel(*sig, 1.0, 0, M, 0, 2000,
                                   [](double) { return 1.0; });
    CHECK(val == doctest::Approx(oracle).epsilon(1e-7));
  }
  SUBCASE("xax subtracts the increment") {
    auto kern = crp.kernel1(0, M, 0);
    int k1[1] = {1};
    GridFunction e1 = GridFunction::mode(grid, k1);
    GridFunction out = crp.xax_op(0, M, 0, e1);
    CHECK(std::abs(out.coeff(k1) - (kern[grid->flat_index(k1)] - 1.0)) <= 1e-14);
    CHECK(std::abs(out.coeff(k1) - (-std::exp(-1.0))) <= 1e-13);
    GridFunction c = GridFunction::constant(grid, 2.0);
    CHECK(l2_norm(crp.xax_op(0, M, 0, c)) <= 1e-14);
  }
  SUBCASE("component out of range") {
    GridFunction one = GridFunction::constant(grid, 1.0);
    CHECK_THROWS_AS(crp.xx_op(0, M, 1, one), std::invalid_argument);
    CHECK_THROWS_AS(crp.xx_op(0, M + 5, 0, one), std::invalid_argument);
  }
}

TEST_CASE("level-2 operator closed forms") {
  auto sig = linear_signal(16, 1, false);
  auto grid = make_grid(1, 4, 16);
  ConvolutionalRoughPath crp(sig, grid);
  std::size_t M = sig->grid().cells();
  int k1[1] = {1};
  int k0[1] = {0};

  SUBCASE("zero mode carries the area") {
    auto kern = crp.kernel2(0, M, 0, 0);
    CHECK(kern[grid->flat_index(k0)] == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("unit slope, lambda = 1: value 1/e") {
    auto kern = crp.kernel2(0, M, 0, 0);
    double val = kern[grid->flat_index(k1)];
    CHECK(val == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    double oracle = riemann_kernel(*sig, 1.0, 0, M, 0, 4000,
                                   [](double u) { return u; });
    CHECK(val == doctest::Approx(oracle).epsilon(1e-6));
  }
  SUBCASE("tail operator drops the boundary area") {
    auto kern = crp.kernel2_tail(0, M, 0, 0);
    CHECK(kern[grid->flat_index(k0)] == doctest::Approx(0.0));
    CHECK(kern[grid->flat_index(k1)] ==
          doctest::Approx(std::exp(-1.0) - 0.5).epsilon(1e-12));
  }
}

TEST_CASE("level-3 operator closed forms") {
  auto sig = linear_signal(16, 1, true);
  auto grid = make_grid(1, 4, 16);
  ConvolutionalRoughPath crp(sig, grid);
  std::size_t M = sig->grid().cells();
  int k1[1] = {1};
  int k0[1] = {0};

  auto kern = crp.kernel3(0, M, 0, 0, 0);
  SUBCASE("zero mode carries the triple") {
    CHECK(kern[grid->flat_index(k0)] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  }
  SUBCASE("unit slope, lambda = 1: int e^{-(1-u)} u^2/2 du = 1/2 - 1/e") {
    double val = kern[grid->flat_index(k1)];
    CHECK(val == doctest::Approx(0.5 - std::exp(-1.0)).epsilon(1e-12));
    double oracle = riemann_kernel(*sig, 1.0, 0, M, 0, 4000,
                                   [](double u) { return 0.5 * u * u; });
    CHECK(val == doctest::Approx(oracle).epsilon(1e-6));
  }
  SUBCASE("level-3 lift required") {
    auto sig2 = linear_signal(16, 1, false);
    ConvolutionalRoughPath crp2(sig2, grid);
    GridFunction one = GridFunction::constant(grid, 1.0);
    CHECK_THROWS_AS(crp2.xxx3_op(0, M, 0, 0, 0, one), std::runtime_error);
  }
}

TEST_CASE("bilinear operator") {
  auto grid = make_grid(1, 8, 32);
  DrivingPath p = builtin_path("sin", 1, TimeGrid::uniform(1.0, 64));
  auto sig = std::make_shared<const RoughSignal>(
      RoughSignal::lift_piecewise_linear(std::move(p), false));
  ConvolutionalRoughPath crp(sig, grid);
  std::mt19937_64 rng(3);
  GridFunction phi = random_real_field(grid, rng, 4);
  GridFunction psi = random_real_field(grid, rng, 4);
  std::size_t M = sig->grid().cells();

  SUBCASE("zero second argument") {
    GridFunction zero = GridFunction::zero(grid);
    CHECK(l2_norm(crp.xxa_op(0, M, 0, phi, zero)) <= 1e-15);
  }
  SUBCASE("constant first argument is annihilated") {
    GridFunction c = GridFunction::constant(grid, 1.5);
    CHECK(l2_norm(crp.xxa_op(0, M, 0, c, psi)) <= 1e-15);
  }
  SUBCASE("node override validation") {
    CHECK_THROWS_AS(crp.xxa_op(0, M, 0, phi, psi, 1), std::invalid_argument);
    GridFunction full = crp.xxa_op(0, M, 0, phi, psi);
    GridFunction coarse = crp.xxa_op(0, M, 0, phi, psi, 8);
    CHECK(l2_norm(full - coarse) > 0.0);  // different quadrature
    CHECK(l2_norm(full - coarse) <= 0.05 * std::max(l2_norm(full), 1e-12));
  }
}

TEST_CASE("twisted coboundary relation for xxa decreases at order >= 1") {
  auto grid = make_grid(1, 8, 32);
  std::mt19937_64 rng(5);
  GridFunction phi = random_real_field(grid, rng, 4);
  GridFunction psi = random_real_field(grid, rng, 4);
  std::vector<double> residuals;
  for (int lvl = 6; lvl <= 8; ++lvl) {
    DrivingPath p =
        builtin_path("sin", 1, TimeGrid::uniform(1.0, std::size_t{1} << lvl));
    auto sig = std::make_shared<const RoughSignal>(
        RoughSignal::lift_piecewise_linear(std::move(p), false));
    ConvolutionalRoughPath crp(sig, grid);
    std::size_t M = sig->grid().cells();
    std::size_t s = 0, u = M / 4, t = M / 2;
    double dt_tu = sig->grid().t(t) - sig->grid().t(u);
    GridFunction lhs = crp.xxa_op(s, t, 0, phi, psi) -
                       crp.xxa_op(u, t, 0, phi, psi) -
                       apply_heat(crp.xxa_op(s, u, 0, phi, psi), dt_tu);
    GridFunction aphi = apply_a(phi, sig->grid().t(u) - sig->grid().t(s));
    GridFunction rhs = crp.xxa_op(u, t, 0, aphi, psi) +
                       crp.xx_op(u, t, 0, pointwise_product(aphi, psi));
    residuals.push_back(l2_norm(lhs - rhs));
  }
  CHECK(residuals[1] <= 0.6 * residuals[0]);
  CHECK(residuals[2] <= 0.6 * residuals[1]);
}

TEST_CASE("relation audit on a rough signal") {
  auto grid = make_grid(1, 16, 64);
  DrivingPath p = sample_fbm(0.4, 2, TimeGrid::uniform(1.0, 256), 19);
  auto sig = std::make_shared<const RoughSignal>(
      RoughSignal::lift_piecewise_linear(std::move(p), true));
  ConvolutionalRoughPath crp(sig, grid);
  auto rep = relation_audit(crp, 20, 7);
  CHECK(rep.dhat_x <= 1e-12);
  CHECK(rep.decomposition <= 1e-14);
  CHECK(rep.dhat_xx <= 1e-10);
  CHECK(rep.dhat_xxx <= 1e-9);
  CHECK(rep.commute_s_eps <= 1e-13);
  CHECK(rep.dhat_xa <= 0.05);  // quadrature-limited, mesh-dependent
}

TEST_CASE("kernel additivity on random triples") {
  auto grid = make_grid(1, 16, 64);
  DrivingPath p = sample_fbm(0.45, 2, TimeGrid::uniform(1.0, 512), 23);
  auto sig = std::make_shared<const RoughSignal>(
      RoughSignal::lift_piecewise_linear(std::move(p), false));
  ConvolutionalRoughPath crp(sig, grid);
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pick(0, 512);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    std::size_t s = std::min({a, b, c});
    std::size_t t = std::max({a, b, c});
    std::size_t u = a + b + c - s - t;
    if (s == t) continue;
    auto k_ts = crp.kernel1(s, t, 0);
    auto k_tu = crp.kernel1(u, t, 0);
    auto k_us = crp.kernel1(s, u, 0);
    double dt_tu = sig->grid().t(t) - sig->grid().t(u);
    double scale = 0.0;
    for (double v : k_ts) scale = std::max(scale, std::abs(v));
    for (std::size_t bb = 0; bb < k_ts.size(); ++bb) {
      double lam = grid->eigenvalue(bb);
      worst = std::max(worst,
                       std::abs(k_ts[bb] - k_tu[bb] - std::exp(-lam * dt_tu) * k_us[bb]) /
                           std::max(scale, 1e-30));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("analytic regularity sweeps on fBm, H = 0.4") {
  auto grid = make_grid(1, 16, 64);
  DrivingPath p = sample_fbm(0.4, 2, TimeGrid::uniform(1.0, 1024), 40);
  auto sig = std::make_shared<const RoughSignal>(
      RoughSignal::lift_piecewise_linear(std::move(p), false));
  ConvolutionalRoughPath crp(sig, grid);
  std::mt19937_64 rng(41);
  GridFunction phi = random_real_field(grid, rng, 8);
  GridFunction psi = random_real_field(grid, rng, 8);
  const double H = 0.4, alpha = 0.25;

  auto fit = [](const std::vector<double>& seps, const std::vector<double>& norms) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = seps.size();
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::log(seps[i]), y = std::log(norms[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };

  std::vector<double> seps, n1, n2, nxa, nax;
  for (std::size_t sep = 4; sep <= 256; sep *= 2) {
    double w1 = 0.0, w2 = 0.0, wxa = 0.0, wax = 0.0;
    for (std::size_t s = 0; s + sep <= 1024; s += 128) {
      w1 = std::max(w1, l2_norm(crp.xx_op(s, s + sep, 0, phi)));
      w2 = std::max(w2, l2_norm(crp.xxx2_op(s, s + sep, 0, 1, phi)));
      wxa = std::max(wxa, l2_norm(crp.xxa_op(s, s + sep, 0, phi, psi)));
      wax = std::max(wax, l2_norm(crp.xax_op(s, s + sep, 0, phi)));
    }
    seps.push_back(sep / 1024.0);
    n1.push_back(w1);
    n2.push_back(w2);
    nxa.push_back(wxa);
    nax.push_back(wax);
  }
  CHECK(fit(seps, n1) >= H - 0.1);
  CHECK(fit(seps, n2) >= 2 * H - 0.15);
  CHECK(fit(seps, nxa) >= H + alpha - 0.15);
  // X^ax measured-bounded at exponent gamma + alpha
  double cmax = 0.0;
  double denom = sobolev_norm(phi, alpha, 2);
  for (std::size_t i = 0; i < seps.size(); ++i)
    cmax = std::max(cmax, nax[i] / (std::pow(seps[i], H + alpha) * denom));
  CHECK(cmax <= 50.0);
}

TEST_CASE("kernel cache control") {
  auto sig = linear_signal(32, 1, false);
  auto grid = make_grid(1, 4, 16);
  ConvolutionalRoughPath crp(sig, grid);
  auto a = crp.kernel1(0, 32, 0);
  crp.set_cache_enabled(false);
  auto b = crp.kernel1(0, 32, 0);
  CHECK(a == b);
  crp.clear_cache();
  crp.set_cache_enabled(true);
  auto c = crp.kernel1(0, 32, 0);
  CHECK(a == c);
}
