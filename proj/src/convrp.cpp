#include "rheat/convrp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "rheat/expint.hpp"

namespace rheat {

namespace {

double rel(double residual, double scale) {
  return residual / std::max(scale, 1e-30);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

ConvolutionalRoughPath::ConvolutionalRoughPath(
    std::shared_ptr<const RoughSignal> signal, GridPtr grid)
    : signal_(std::move(signal)), grid_(std::move(grid)) {
  if (!signal_ || !grid_) throw std::invalid_argument("ConvolutionalRoughPath: null input");
  std::vector<double> eig(grid_->band_size());
  for (std::size_t b = 0; b < eig.size(); ++b) eig[b] = grid_->eigenvalue(b);
  std::vector<double> uniq(eig);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  lambdas_ = std::move(uniq);
  band_lambda_.resize(eig.size());
  for (std::size_t b = 0; b < eig.size(); ++b)
    band_lambda_[b] = static_cast<std::size_t>(
        std::lower_bound(lambdas_.begin(), lambdas_.end(), eig[b]) - lambdas_.begin());
}

void ConvolutionalRoughPath::check_interval(std::size_t s, std::size_t t) const {
  if (t < s || t >= signal_->grid().size())
    throw std::invalid_argument("ConvolutionalRoughPath: interval off the fine grid");
}

std::vector<double> ConvolutionalRoughPath::build_kernel(int level, int i, int j,
                                                         int k, std::size_t s,
                                                         std::size_t t) const {
  const auto& tg = signal_->grid();
  const int n = signal_->components();
  const std::size_t cells = t - s;
  std::vector<double> per_lambda(lambdas_.size(), 0.0);

  // per-cell dt, slopes, and polynomial coefficients of the integrand
  std::vector<double> dts(cells);
  bool uniform = true;
  for (std::size_t c = 0; c < cells; ++c) {
    dts[c] = tg.dt(s + c);
    if (std::abs(dts[c] - dts[0]) > 1e-14 * dts[0]) uniform = false;
  }

  if (level == 1) {
    std::vector<double> mi(cells);
    for (std::size_t c = 0; c < cells; ++c)
      mi[c] = signal_->cell_increment(s + c)[i] / dts[c];
    for (std::size_t l = 0; l < lambdas_.size(); ++l) {
      const double lam = lambdas_[l];
      double g0 = uniform ? exp_poly_moment(0, lam, dts[0]) : 0.0;
      double ed = uniform ? std::exp(-lam * dts[0]) : 0.0;
      double acc = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        if (!uniform) {
          g0 = exp_poly_moment(0, lam, dts[c]);
          ed = std::exp(-lam * dts[c]);
        }
        acc = acc * ed + mi[c] * g0;
      }
      per_lambda[l] = acc;
    }
  } else if (level == 2 || level == 4) {
    // integrand within a cell: x^2_{us} entry (i,j) = sig2(j,i) as a
    // polynomial A + B theta + C theta^2
    std::vector<double> A(cells), B(cells), C(cells);
    std::vector<double> a1(n, 0.0);
    double a2_ji = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double* d = signal_->cell_increment(s + c);
      const double* Ac = signal_->cell_area(s + c);
      const double m_i = d[i] / dts[c], m_j = d[j] / dts[c];
      A[c] = a2_ji;
      B[c] = a1[j] * m_i;
      C[c] = 0.5 * m_j * m_i;
      a2_ji += Ac[j * n + i] + a1[j] * d[i];
      for (int p = 0; p < n; ++p) a1[p] += d[p];
    }
    const double boundary = a2_ji;  // x^2_{ts} entry (i,j)
    for (std::size_t l = 0; l < lambdas_.size(); ++l) {
      const double lam = lambdas_[l];
      double g0 = 0, g1 = 0, g2 = 0, ed = 1;
      if (uniform) {
        g0 = exp_poly_moment(0, lam, dts[0]);
        g1 = exp_poly_moment(1, lam, dts[0]);
        g2 = exp_poly_moment(2, lam, dts[0]);
        ed = std::exp(-lam * dts[0]);
      }
      double acc = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        if (!uniform) {
          g0 = exp_poly_moment(0, lam, dts[c]);
          g1 = exp_poly_moment(1, lam, dts[c]);
          g2 = exp_poly_moment(2, lam, dts[c]);
          ed = std::exp(-lam * dts[c]);
        }
        acc = acc * ed - lam * (A[c] * g0 + B[c] * g1 + C[c] * g2);
      }
      per_lambda[l] = acc + (level == 2 ? boundary : 0.0);
    }
  } else {  // level == 3
    if (!signal_->has_level3())
      throw std::runtime_error("ConvolutionalRoughPath: level-3 lift not available");
    std::vector<double> A(cells), B(cells), C(cells), D(cells);
    std::vector<double> a1(n, 0.0);
    double a2_ij = 0.0, a3_ijk = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double* d = signal_->cell_increment(s + c);
      const double* Ac = signal_->cell_area(s + c);
      const double* Tc = signal_->cell_triple(s + c);
      const double dt = dts[c];
      const double m_i = d[i] / dt, m_j = d[j] / dt, m_k = d[k] / dt;
      A[c] = a3_ijk;
      B[c] = a2_ij * m_k;
      C[c] = 0.5 * a1[i] * m_j * m_k;
      D[c] = m_i * m_j * m_k / 6.0;
      a3_ijk += Tc[(i * n + j) * n + k] + a2_ij * d[k] + a1[i] * Ac[j * n + k];
      a2_ij += Ac[i * n + j] + a1[i] * d[j];
      for (int p = 0; p < n; ++p) a1[p] += d[p];
    }
    const double boundary = a3_ijk;  // sig3_{ts}(i,j,k)
    for (std::size_t l = 0; l < lambdas_.size(); ++l) {
      const double lam = lambdas_[l];
      double g0 = 0, g1 = 0, g2 = 0, g3 = 0, ed = 1;
      if (uniform) {
        g0 = exp_poly_moment(0, lam, dts[0]);
        g1 = exp_poly_moment(1, lam, dts[0]);
        g2 = exp_poly_moment(2, lam, dts[0]);
        g3 = exp_poly_moment(3, lam, dts[0]);
        ed = std::exp(-lam * dts[0]);
      }
      double acc = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        if (!uniform) {
          g0 = exp_poly_moment(0, lam, dts[c]);
          g1 = exp_poly_moment(1, lam, dts[c]);
          g2 = exp_poly_moment(2, lam, dts[c]);
          g3 = exp_poly_moment(3, lam, dts[c]);
          ed = std::exp(-lam * dts[c]);
        }
        acc = acc * ed - lam * (A[c] * g0 + B[c] * g1 + C[c] * g2 + D[c] * g3);
      }
      per_lambda[l] = acc + boundary;
    }
  }

  std::vector<double> kern(band_lambda_.size());
  for (std::size_t b = 0; b < kern.size(); ++b) kern[b] = per_lambda[band_lambda_[b]];
  return kern;
}

ConvolutionalRoughPath::KernelPtr ConvolutionalRoughPath::get_kernel(
    int level, int i, int j, int k, std::size_t s, std::size_t t) const {
  if (!cache_enabled_)
    return std::make_shared<const std::vector<double>>(
        build_kernel(level, i, j, k, s, t));
  Key key{level, i, j, k, s, t};
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto kern = std::make_shared<const std::vector<double>>(
      build_kernel(level, i, j, k, s, t));
  std::lock_guard<std::mutex> lock(cache_mu_);
  auto [it, inserted] = cache_.emplace(key, kern);
  return it->second;  // first writer wins
}

void ConvolutionalRoughPath::set_cache_enabled(bool on) const {
  std::lock_guard<std::mutex> lock(cache_mu_);
  cache_enabled_ = on;
}

void ConvolutionalRoughPath::clear_cache() const {
  std::lock_guard<std::mutex> lock(cache_mu_);
  cache_.clear();
}

std::vector<double> ConvolutionalRoughPath::kernel1(std::size_t s, std::size_t t,
                                                    int i) const {
  check_interval(s, t);
  return *get_kernel(1, i, 0, 0, s, t);
}
std::vector<double> ConvolutionalRoughPath::kernel2(std::size_t s, std::size_t t,
                                                    int i, int j) const {
  check_interval(s, t);
  return *get_kernel(2, i, j, 0, s, t);
}
std::vector<double> ConvolutionalRoughPath::kernel2_tail(std::size_t s, std::size_t t,
                                                         int i, int j) const {
  check_interval(s, t);
  return *get_kernel(4, i, j, 0, s, t);
}
std::vector<double> ConvolutionalRoughPath::kernel3(std::size_t s, std::size_t t,
                                                    int i, int j, int k) const {
  check_interval(s, t);
  return *get_kernel(3, i, j, k, s, t);
}

GridFunction ConvolutionalRoughPath::xx_op(std::size_t s, std::size_t t, int i,
                                           const GridFunction& phi) const {
  check_interval(s, t);
  if (i < 0 || i >= components())
    throw std::invalid_argument("xx_op: component out of range");
  if (s == t) return GridFunction::zero(grid_);
  return map_spectral(phi, get_kernel(1, i, 0, 0, s, t)->data());
}

GridFunction ConvolutionalRoughPath::xax_op(std::size_t s, std::size_t t, int i,
                                            const GridFunction& phi) const {
  check_interval(s, t);
  if (s == t) return GridFunction::zero(grid_);
  std::vector<double> kern = *get_kernel(1, i, 0, 0, s, t);
  const double dx = signal_->increment(s, t, i);
  for (double& v : kern) v -= dx;
  return map_spectral(phi, kern.data());
}

GridFunction ConvolutionalRoughPath::xxx2_op(std::size_t s, std::size_t t, int i,
                                             int j, const GridFunction& phi) const {
  check_interval(s, t);
  if (s == t) return GridFunction::zero(grid_);
  return map_spectral(phi, get_kernel(2, i, j, 0, s, t)->data());
}

GridFunction ConvolutionalRoughPath::xaxx_op(std::size_t s, std::size_t t, int i,
                                             int j, const GridFunction& phi) const {
  check_interval(s, t);
  if (s == t) return GridFunction::zero(grid_);
  return map_spectral(phi, get_kernel(4, i, j, 0, s, t)->data());
}

GridFunction ConvolutionalRoughPath::xxx3_op(std::size_t s, std::size_t t, int i,
                                             int j, int k,
                                             const GridFunction& phi) const {
  check_interval(s, t);
  if (s == t) return GridFunction::zero(grid_);
  return map_spectral(phi, get_kernel(3, i, j, k, s, t)->data());
}

GridFunction ConvolutionalRoughPath::xxa_op(std::size_t s, std::size_t t, int i,
                                            const GridFunction& phi,
                                            const GridFunction& psi,
                                            int nodes_override) const {
  check_interval(s, t);
  if (s == t) return GridFunction::zero(grid_);
  const auto& tg = signal_->grid();

  // quadrature nodes: all fine nodes, or an equispaced index subset
  std::vector<std::size_t> nodes;
  if (nodes_override == 0) {
    nodes.resize(t - s + 1);
    for (std::size_t m = 0; m <= t - s; ++m) nodes[m] = s + m;
  } else {
    if (nodes_override < 2)
      throw std::invalid_argument("xxa_op: needs at least 2 quadrature nodes");
    std::size_t q = static_cast<std::size_t>(nodes_override);
    for (std::size_t m = 0; m <= q; ++m) {
      std::size_t idx = s + ((t - s) * m) / q;
      if (nodes.empty() || idx > nodes.back()) nodes.push_back(idx);
    }
  }
  const std::size_t nn = nodes.size();
  if (nn < 2) throw std::invalid_argument("xxa_op: needs at least 2 quadrature nodes");

  // chi(u_m, t) per distinct lambda, backward over node segments
  std::vector<std::vector<double>> chi(nn, std::vector<double>(lambdas_.size(), 0.0));
  for (std::size_t l = 0; l < lambdas_.size(); ++l) {
    const double lam = lambdas_[l];
    double decay_next = 1.0;  // e^{-lam (t - u_{m+1})}
    for (std::size_t m = nn - 1; m-- > 0;) {
      double seg = 0.0;  // chi over [u_m, u_{m+1}]
      for (std::size_t c = nodes[m]; c < nodes[m + 1]; ++c) {
        double dt = tg.dt(c);
        double mi = signal_->cell_increment(c)[i] / dt;
        seg = seg * std::exp(-lam * dt) + mi * exp_poly_moment(0, lam, dt);
      }
      chi[m][l] = chi[m + 1][l] + decay_next * seg;
      decay_next *= std::exp(-lam * (tg.t(nodes[m + 1]) - tg.t(nodes[m])));
    }
  }

  GridFunction out = GridFunction::zero(grid_);
  const std::size_t nb = grid_->band_size();
  std::vector<double> mult(nb), kern(nb);
  for (std::size_t m = 0; m + 1 < nn; ++m) {  // integrand vanishes at u = t
    double w;
    if (m == 0)
      w = 0.5 * (tg.t(nodes[1]) - tg.t(nodes[0]));
    else
      w = 0.5 * (tg.t(nodes[m + 1]) - tg.t(nodes[m - 1]));
    const double theta = tg.t(nodes[m]) - tg.t(nodes[0]);
    for (std::size_t b = 0; b < nb; ++b) {
      double lam = lambdas_[band_lambda_[b]];
      mult[b] = -lam * std::exp(-lam * theta);  // A S_{u s}
      kern[b] = chi[m][band_lambda_[b]];
    }
    GridFunction integrand = pointwise_product(map_spectral(phi, mult.data()), psi);
    out += w * map_spectral(integrand, kern.data());
  }
  return out;
}

// --- relation audit -----------------------------------------------------------

RelationAuditReport relation_audit(const ConvolutionalRoughPath& crp, int n_triples,
                                   std::uint64_t seed, double eps) {
  RelationAuditReport rep;
  const auto& sig = crp.signal();
  const std::size_t m = sig.grid().cells();
  const int n = crp.components();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m);

  auto sample_triple = [&](std::size_t& s, std::size_t& u, std::size_t& t) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    s = std::min({a, b, c});
    t = std::max({a, b, c});
    u = a + b + c - s - t;
    if (s == u) u = std::min(t, u + 1);
    if (u == t && u > s) --u;
  };

  rep.triples = n_triples;
  for (int trial = 0; trial < n_triples; ++trial) {
    std::size_t s, u, t;
    sample_triple(s, u, t);
    if (s == t) continue;
    double dt_tu = sig.grid().t(t) - sig.grid().t(u);
    for (int i = 0; i < n; ++i) {
      auto k_ts = crp.kernel1(s, t, i);
      auto k_tu = crp.kernel1(u, t, i);
      auto k_us = crp.kernel1(s, u, i);
      double scale = std::max({max_abs(k_ts), max_abs(k_tu), max_abs(k_us)});
      double worst = 0.0;
      for (std::size_t b = 0; b < k_ts.size(); ++b) {
        double lam = crp.grid()->eigenvalue(b);
        worst = std::max(
            worst, std::abs(k_ts[b] - k_tu[b] - std::exp(-lam * dt_tu) * k_us[b]));
      }
      rep.dhat_x = std::max(rep.dhat_x, rel(worst, scale));

      // X^x = X^ax + dx per mode
      double dx = sig.increment(s, t, i);
      double worst_dec = 0.0;
      for (std::size_t b = 0; b < k_ts.size(); ++b) {
        double ax = k_ts[b] - dx;
        worst_dec = std::max(worst_dec, std::abs(k_ts[b] - (ax + dx)));
      }
      rep.decomposition = std::max(rep.decomposition, rel(worst_dec, scale));

      for (int jj = 0; jj < n; ++jj) {
        auto q_ts = crp.kernel2(s, t, i, jj);
        auto q_tu = crp.kernel2(u, t, i, jj);
        auto q_us = crp.kernel2(s, u, i, jj);
        double dxj = sig.increment(s, u, jj);
        double scale2 = std::max({max_abs(q_ts), max_abs(q_tu), max_abs(q_us),
                                  max_abs(k_tu) * std::abs(dxj)});
        double worst2 = 0.0;
        for (std::size_t b = 0; b < q_ts.size(); ++b) {
          double lam = crp.grid()->eigenvalue(b);
          double lhs = q_ts[b] - q_tu[b] - std::exp(-lam * dt_tu) * q_us[b];
          double rhs = k_tu[b] * dxj;
          worst2 = std::max(worst2, std::abs(lhs - rhs));
        }
        rep.dhat_xx = std::max(rep.dhat_xx, rel(worst2, scale2));
      }

      if (sig.has_level3()) {
        auto s2_us = sig.sig2(s, u);
        for (int jj = 0; jj < n; ++jj)
          for (int kk = 0; kk < n; ++kk) {
            auto r_ts = crp.kernel3(s, t, i, jj, kk);
            auto r_tu = crp.kernel3(u, t, i, jj, kk);
            auto r_us = crp.kernel3(s, u, i, jj, kk);
            auto k1k_tu = crp.kernel1(u, t, kk);
            auto k2_tu = crp.kernel2(u, t, kk, jj);
            double dxi = sig.increment(s, u, i);
            double sig2ij = s2_us[i * n + jj];
            double scale3 = std::max({max_abs(r_ts), max_abs(r_tu), max_abs(r_us),
                                      max_abs(k1k_tu) * std::abs(sig2ij),
                                      max_abs(k2_tu) * std::abs(dxi)});
            double worst3 = 0.0;
            for (std::size_t b = 0; b < r_ts.size(); ++b) {
              double lam = crp.grid()->eigenvalue(b);
              double lhs = r_ts[b] - r_tu[b] - std::exp(-lam * dt_tu) * r_us[b];
              double rhs = k1k_tu[b] * sig2ij + k2_tu[b] * dxi;
              worst3 = std::max(worst3, std::abs(lhs - rhs));
            }
            rep.dhat_xxx = std::max(rep.dhat_xxx, rel(worst3, scale3));
          }
      }
    }
  }

  // field-based checks: commutation with S_eps and the bilinear relation
  std::mt19937_64 rng2(seed ^ 0xabcdef);
  GridFunction phi = random_real_field(crp.grid(), rng2, crp.grid()->modes / 2);
  GridFunction psi = random_real_field(crp.grid(), rng2, crp.grid()->modes / 2);
  for (int trial = 0; trial < std::min(n_triples, 5); ++trial) {
    std::size_t s, u, t;
    sample_triple(s, u, t);
    if (s == u || u == t) continue;
    for (int i = 0; i < n; ++i) {
      GridFunction a = crp.xx_op(s, t, i, apply_heat(phi, eps));
      GridFunction b = apply_heat(crp.xx_op(s, t, i, phi), eps);
      rep.commute_s_eps =
          std::max(rep.commute_s_eps,
                   rel(l2_norm(a - b), std::max(l2_norm(a), l2_norm(b))));

      double dt_tu = sig.grid().t(t) - sig.grid().t(u);
      GridFunction lhs = crp.xxa_op(s, t, i, phi, psi) -
                         crp.xxa_op(u, t, i, phi, psi) -
                         apply_heat(crp.xxa_op(s, u, i, phi, psi), dt_tu);
      GridFunction a_phi = apply_a(phi, sig.grid().t(u) - sig.grid().t(s));
      GridFunction rhs = crp.xxa_op(u, t, i, a_phi, psi) +
                         crp.xx_op(u, t, i, pointwise_product(a_phi, psi));
      rep.dhat_xa = std::max(
          rep.dhat_xa, rel(l2_norm(lhs - rhs), std::max(l2_norm(lhs), l2_norm(rhs))));
    }
  }
  return rep;
}

}  // namespace rheat
