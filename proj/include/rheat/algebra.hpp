#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "rheat/time_grid.hpp"

namespace rheat {

// Discrete k-increment calculus. Values live in any normed space V with
// +, -, scalar multiplication and an ADL-visible value_norm(V). Increments
// are lazy closures over grid indices; dense caching is opt-in for audits.

inline double value_norm(double v) { return std::abs(v); }

inline double value_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// One-variable process on a grid: index -> value.
template <class V>
struct Path {
  const TimeGrid* grid = nullptr;
  std::function<V(std::size_t)> at;
};

/// Two-variable increment v_{ts}; call as (s_idx, t_idx) with s <= t.
template <class V>
struct Increment2 {
  const TimeGrid* grid = nullptr;
  std::function<V(std::size_t, std::size_t)> eval;
  V operator()(std::size_t s, std::size_t t) const {
    if (t < s) throw std::invalid_argument("Increment2: needs s <= t");
    return eval(s, t);
  }
};

/// Three-variable increment v_{tus}; call as (s_idx, u_idx, t_idx).
template <class V>
struct Increment3 {
  const TimeGrid* grid = nullptr;
  std::function<V(std::size_t, std::size_t, std::size_t)> eval;
  V operator()(std::size_t s, std::size_t u, std::size_t t) const {
    if (u < s || t < u) throw std::invalid_argument("Increment3: needs s <= u <= t");
    return eval(s, u, t);
  }
};

/// Operator-valued two-variable increment: (s, t, operand) -> value.
template <class V>
struct OpIncrement2 {
  const TimeGrid* grid = nullptr;
  std::function<V(std::size_t, std::size_t, const V&)> eval;
};

// --- evolution families ------------------------------------------------------

/// S = id; reduces the twisted calculus to the plain one.
struct IdentityFamily {
  template <class V>
  V apply_S(double, const V& v) const {
    return v;
  }
  template <class V>
  V apply_a(double, const V& v) const {
    return 0.0 * v;
  }
};

/// Scalar mode family S_tau = e^{-lambda tau}; the one-mode shadow of the
/// heat family, handy for exact scalar checks.
struct ScalarExpFamily {
  double lambda = 1.0;
  double apply_S(double tau, double v) const {
    if (tau < 0) throw std::invalid_argument("apply_S: tau must be >= 0");
    return std::exp(-lambda * tau) * v;
  }
  double apply_a(double tau, double v) const {
    if (tau < 0) throw std::invalid_argument("apply_a: tau must be >= 0");
    return std::expm1(-lambda * tau) * v;
  }
};

// --- coboundaries --------------------------------------------------------------

template <class V>
Increment2<V> delta_one(const Path<V>& y) {
  return {y.grid, [y](std::size_t s, std::size_t t) { return y.at(t) - y.at(s); }};
}

template <class V, class Family>
Increment2<V> delta_hat_one(const Path<V>& y, const Family& E) {
  const TimeGrid* g = y.grid;
  return {g, [y, &E, g](std::size_t s, std::size_t t) {
            return y.at(t) - E.apply_S(g->t(t) - g->t(s), y.at(s));
          }};
}

template <class V>
Increment3<V> delta_two(const Increment2<V>& M) {
  return {M.grid, [M](std::size_t s, std::size_t u, std::size_t t) {
            return M.eval(s, t) - M.eval(u, t) - M.eval(s, u);
          }};
}

template <class V, class Family>
Increment3<V> delta_hat_two(const Increment2<V>& M, const Family& E) {
  const TimeGrid* g = M.grid;
  return {g, [M, &E, g](std::size_t s, std::size_t u, std::size_t t) {
            return M.eval(s, t) - M.eval(u, t) -
                   E.apply_S(g->t(t) - g->t(u), M.eval(s, u));
          }};
}

// --- cochain products ------------------------------------------------------------

/// (M y)_{ts} = M_{ts} y_s, sharing the middle index.
template <class V>
Increment2<V> cochain_product(const OpIncrement2<V>& M, const Path<V>& y) {
  return {M.grid,
          [M, y](std::size_t s, std::size_t t) { return M.eval(s, t, y.at(s)); }};
}

/// (M L)_{tus} = M_{tu} L_{us}.
template <class V>
Increment3<V> cochain_product(const OpIncrement2<V>& M, const Increment2<V>& L) {
  return {M.grid, [M, L](std::size_t s, std::size_t u, std::size_t t) {
            return M.eval(u, t, L.eval(s, u));
          }};
}

// --- Hoelder estimators ------------------------------------------------------------

/// max over grid pairs of |v_{ts}| / (t-s)^kappa. Pairs closer than
/// min_sep_cells are excluded (quantization guard for estimators).
template <class V>
double holder_norm(const Increment2<V>& v, double kappa, std::size_t min_sep_cells = 2) {
  const TimeGrid* g = v.grid;
  if (!g || g->size() < 2) throw std::invalid_argument("holder_norm: empty grid");
  double best = 0.0;
  for (std::size_t s = 0; s + 1 < g->size(); ++s)
    for (std::size_t t = s + std::max<std::size_t>(min_sep_cells, 1); t < g->size(); ++t) {
      double dt = g->t(t) - g->t(s);
      best = std::max(best, value_norm(v.eval(s, t)) / std::pow(dt, kappa));
    }
  return best;
}

/// Two-exponent companion for 3-increments:
/// max |v_{tus}| / ((t-u)^kappa (u-s)^rho).
template <class V>
double holder_norm3(const Increment3<V>& v, double kappa, double rho,
                    std::size_t min_sep_cells = 1) {
  const TimeGrid* g = v.grid;
  if (!g || g->size() < 3) throw std::invalid_argument("holder_norm3: empty grid");
  double best = 0.0;
  for (std::size_t s = 0; s + 2 < g->size(); ++s)
    for (std::size_t u = s + min_sep_cells; u + 1 < g->size(); ++u)
      for (std::size_t t = u + min_sep_cells; t < g->size(); ++t) {
        double w = std::pow(g->t(t) - g->t(u), kappa) * std::pow(g->t(u) - g->t(s), rho);
        best = std::max(best, value_norm(v.eval(s, u, t)) / w);
      }
  return best;
}

/// Scale-binned exponent fit: for dyadic separations take the max norm over
/// the grid, then regress log(max) on log(separation). Returns the slope.
template <class V>
double measured_exponent(const Increment2<V>& v, std::size_t min_sep_cells = 2,
                         double floor_norm = 1e-14) {
  const TimeGrid* g = v.grid;
  std::vector<double> xs, ys;
  for (std::size_t sep = std::max<std::size_t>(min_sep_cells, 1); sep < g->cells();
       sep *= 2) {
    double best = 0.0, dt = 0.0;
    for (std::size_t s = 0; s + sep < g->size(); ++s) {
      best = std::max(best, value_norm(v.eval(s, s + sep)));
      dt = std::max(dt, g->t(s + sep) - g->t(s));
    }
    if (best > floor_norm) {
      xs.push_back(std::log(dt));
      ys.push_back(std::log(best));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::infinity();
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --- discrete sewing ------------------------------------------------------------------

struct SewDivergence : std::runtime_error {
  double measured_mu;
  explicit SewDivergence(double mu)
      : std::runtime_error("sew: refinement does not contract, measured mu = " +
                           std::to_string(mu)),
        measured_mu(mu) {}
};

struct SewReport {
  std::vector<double> correction_norms;  // ||Sum_d - Sum_{d-1}|| per depth
  double fitted_rate = std::numeric_limits<double>::infinity();  // decay exponent
  double measured_mu = std::numeric_limits<double>::infinity();  // rate + 1
  int depth_used = 0;
  bool exact = false;  // corrections at rounding level; sums telescope
};

/// Compensated-Riemann-sum shadow of the sewing map: the limit over dyadic
/// partitions of sum_k S_{t t_{k+1}} g_{t_{k+1} t_k}, i.e. the increment of
/// (id - inverse-coboundary correction) g. Refinement is anchored to the
/// grid; depths below the grid mesh are not generated.
template <class V, class Family>
std::pair<V, SewReport> sew(const Increment2<V>& g, std::size_t s_idx,
                            std::size_t t_idx, const Family& E, int max_depth) {
  const TimeGrid* grid = g.grid;
  if (t_idx <= s_idx) throw std::invalid_argument("sew: needs s < t");
  std::size_t span = t_idx - s_idx;

  auto partition = [&](int depth) {
    std::vector<std::size_t> idx;
    std::size_t pieces = std::size_t{1} << depth;
    if (pieces >= span) {
      idx.resize(span + 1);
      for (std::size_t k = 0; k <= span; ++k) idx[k] = s_idx + k;
      return idx;
    }
    idx.reserve(pieces + 1);
    for (std::size_t k = 0; k <= pieces; ++k) {
      std::size_t i = s_idx + (span * k) / pieces;
      if (idx.empty() || i > idx.back()) idx.push_back(i);
    }
    return idx;
  };

  auto riemann = [&](const std::vector<std::size_t>& idx) {
    const double t_end = grid->t(t_idx);
    V acc = E.apply_S(t_end - grid->t(idx[1]), g.eval(idx[0], idx[1]));
    for (std::size_t k = 1; k + 1 < idx.size(); ++k)
      acc = acc + E.apply_S(t_end - grid->t(idx[k + 1]), g.eval(idx[k], idx[k + 1]));
    return acc;
  };

  SewReport rep;
  V sum = riemann(partition(0));
  double scale = std::max(1.0, value_norm(sum));
  for (int d = 1; d <= max_depth; ++d) {
    auto idx = partition(d);
    V next = riemann(idx);
    rep.correction_norms.push_back(value_norm(next - sum));
    sum = next;
    rep.depth_used = d;
    if (idx.size() == span + 1) break;  // reached the grid mesh
  }

  bool all_tiny = true;
  for (double c : rep.correction_norms)
    if (c > 1e-13 * scale) all_tiny = false;
  if (all_tiny || rep.correction_norms.size() < 2) {
    rep.exact = all_tiny;
    return {sum, rep};
  }

  // fit the dyadic decay rate: corrections ~ 2^{-rate * d}
  std::vector<double> xs, ys;
  for (std::size_t d = 0; d < rep.correction_norms.size(); ++d)
    if (rep.correction_norms[d] > 1e-15 * scale) {
      xs.push_back(static_cast<double>(d));
      ys.push_back(std::log2(rep.correction_norms[d]));
    }
  if (xs.size() >= 2) {
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    rep.fitted_rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.measured_mu = rep.fitted_rate + 1.0;
    if (rep.fitted_rate <= 0.0) throw SewDivergence(rep.measured_mu);
  }
  return {sum, rep};
}

/// Dense write-once cache over all pairs; O(n^2), audit-scale only.
template <class V>
Increment2<V> cache_dense(const Increment2<V>& v) {
  const TimeGrid* g = v.grid;
  auto table = std::make_shared<std::map<std::pair<std::size_t, std::size_t>, V>>();
  auto mu = std::make_shared<std::mutex>();
  return {g, [v, table, mu](std::size_t s, std::size_t t) {
            std::lock_guard<std::mutex> lock(*mu);
            auto key = std::make_pair(s, t);
            auto it = table->find(key);
            if (it == table->end()) it = table->emplace(key, v.eval(s, t)).first;
            return it->second;
          }};
}

}  // namespace rheat
