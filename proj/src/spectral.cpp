#include "rheat/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace rheat {

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

SpectralGrid::SpectralGrid(int n, int K, int P) : dim(n), modes(K), points(P) {
  if (n != 1 && n != 2) throw std::invalid_argument("SpectralGrid: dim must be 1 or 2");
  if (K < 1) throw std::invalid_argument("SpectralGrid: modes must be >= 1");
  if (P < 2 * K + 1)
    throw std::invalid_argument("SpectralGrid: points must be >= 2*modes+1");
  if (!is_pow2(P)) throw std::invalid_argument("SpectralGrid: points must be a power of two");
}

std::size_t SpectralGrid::band_size() const {
  std::size_t b = band();
  return dim == 1 ? b : b * b;
}

std::size_t SpectralGrid::phys_size() const {
  std::size_t p = points;
  return dim == 1 ? p : p * p;
}

void SpectralGrid::wavevector(std::size_t flat, int* k) const {
  int b = band();
  if (dim == 1) {
    k[0] = static_cast<int>(flat) - modes;
  } else {
    k[0] = static_cast<int>(flat) / b - modes;
    k[1] = static_cast<int>(flat) % b - modes;
  }
}

std::size_t SpectralGrid::flat_index(const int* k) const {
  int b = band();
  if (dim == 1) return static_cast<std::size_t>(k[0] + modes);
  return static_cast<std::size_t>(k[0] + modes) * b + (k[1] + modes);
}

double SpectralGrid::eigenvalue(std::size_t flat) const {
  int k[2] = {0, 0};
  wavevector(flat, k);
  return dim == 1 ? double(k[0]) * k[0] : double(k[0]) * k[0] + double(k[1]) * k[1];
}

void SpectralGrid::coords(std::size_t flat, double* xi) const {
  const double h = 2.0 * std::numbers::pi / points;
  if (dim == 1) {
    xi[0] = h * static_cast<double>(flat);
  } else {
    xi[0] = h * static_cast<double>(flat / points);
    xi[1] = h * static_cast<double>(flat % points);
  }
}

GridPtr make_grid(int dim, int modes, int points) {
  return std::make_shared<const SpectralGrid>(dim, modes, points);
}

// --- FFT plan cache ----------------------------------------------------------

namespace {

// Plans are created once per (dim, P) and shared; created with
// FFTW_UNALIGNED so they can execute on any caller array.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

PlanPair& plans_for(int dim, int P) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  auto key = std::make_pair(dim, P);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::size_t total = dim == 1 ? P : std::size_t(P) * P;
  std::vector<std::complex<double>> in(total), out(total);
  auto* fin = reinterpret_cast<fftw_complex*>(in.data());
  auto* fout = reinterpret_cast<fftw_complex*>(out.data());
  PlanPair pp;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (dim == 1) {
    pp.fwd = fftw_plan_dft_1d(P, fin, fout, FFTW_FORWARD, flags);
    pp.bwd = fftw_plan_dft_1d(P, fin, fout, FFTW_BACKWARD, flags);
  } else {
    pp.fwd = fftw_plan_dft_2d(P, P, fin, fout, FFTW_FORWARD, flags);
    pp.bwd = fftw_plan_dft_2d(P, P, fin, fout, FFTW_BACKWARD, flags);
  }
  auto [pos, ok] = cache.emplace(key, pp);
  return pos->second;
}

std::size_t dft_index(const SpectralGrid& g, const int* k) {
  auto wrap = [&](int kk) { return static_cast<std::size_t>((kk % g.points + g.points) % g.points); };
  if (g.dim == 1) return wrap(k[0]);
  return wrap(k[0]) * g.points + wrap(k[1]);
}

std::vector<std::complex<double>> band_to_physical(
    const SpectralGrid& g, const std::vector<std::complex<double>>& spec) {
  std::vector<std::complex<double>> full(g.phys_size(), 0.0);
  int k[2];
  for (std::size_t b = 0; b < g.band_size(); ++b) {
    g.wavevector(b, k);
    full[dft_index(g, k)] = spec[b];
  }
  std::vector<std::complex<double>> phys(g.phys_size());
  auto& pp = plans_for(g.dim, g.points);
  fftw_execute_dft(pp.bwd, reinterpret_cast<fftw_complex*>(full.data()),
                   reinterpret_cast<fftw_complex*>(phys.data()));
  return phys;
}

std::vector<std::complex<double>> physical_to_band(
    const SpectralGrid& g, const std::vector<std::complex<double>>& phys) {
  std::vector<std::complex<double>> full(g.phys_size());
  auto& pp = plans_for(g.dim, g.points);
  std::vector<std::complex<double>> in(phys);
  fftw_execute_dft(pp.fwd, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(full.data()));
  const double inv = 1.0 / static_cast<double>(g.phys_size());
  std::vector<std::complex<double>> spec(g.band_size());
  int k[2];
  for (std::size_t b = 0; b < g.band_size(); ++b) {
    g.wavevector(b, k);
    spec[b] = full[dft_index(g, k)] * inv;
  }
  return spec;
}

}  // namespace

// --- GridFunction -------------------------------------------------------------

GridFunction GridFunction::zero(GridPtr grid) {
  GridFunction f;
  f.grid_ = std::move(grid);
  f.spec_.assign(f.grid_->band_size(), 0.0);
  f.phys_.assign(f.grid_->phys_size(), 0.0);
  return f;
}

GridFunction GridFunction::from_spectral(GridPtr grid,
                                         std::vector<std::complex<double>> coeffs) {
  if (coeffs.size() != grid->band_size())
    throw std::invalid_argument("from_spectral: coefficient count mismatch");
  GridFunction f;
  f.grid_ = std::move(grid);
  f.spec_ = std::move(coeffs);
  f.phys_ = band_to_physical(*f.grid_, f.spec_);
  return f;
}

GridFunction GridFunction::from_physical(GridPtr grid,
                                         std::vector<std::complex<double>> samples) {
  if (samples.size() != grid->phys_size())
    throw std::invalid_argument("from_physical: sample count mismatch");
  GridFunction f;
  f.grid_ = std::move(grid);
  f.phys_ = std::move(samples);
  f.spec_ = physical_to_band(*f.grid_, f.phys_);
  // Re-synthesize so both representations agree exactly on the band.
  f.phys_ = band_to_physical(*f.grid_, f.spec_);
  return f;
}

GridFunction GridFunction::mode(GridPtr grid, const int* k, std::complex<double> amp) {
  for (int d = 0; d < grid->dim; ++d)
    if (std::abs(k[d]) > grid->modes)
      throw std::invalid_argument("mode: wavevector outside band");
  std::vector<std::complex<double>> spec(grid->band_size(), 0.0);
  spec[grid->flat_index(k)] = amp;
  return from_spectral(std::move(grid), std::move(spec));
}

GridFunction GridFunction::constant(GridPtr grid, std::complex<double> c) {
  int k[2] = {0, 0};
  return mode(std::move(grid), k, c);
}

std::complex<double> GridFunction::coeff(const int* k) const {
  return spec_[grid_->flat_index(k)];
}

std::complex<double> GridFunction::mean() const {
  int k[2] = {0, 0};
  return coeff(k);
}

bool GridFunction::is_real(double tol) const {
  double m = 0.0, scale = 0.0;
  for (const auto& v : phys_) {
    m = std::max(m, std::abs(v.imag()));
    scale = std::max(scale, std::abs(v));
  }
  return m <= tol * std::max(1.0, scale);
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  if (grid_ != o.grid_ && (grid_->dim != o.grid_->dim || grid_->modes != o.grid_->modes ||
                           grid_->points != o.grid_->points))
    throw std::invalid_argument("GridFunction: grid mismatch");
  for (std::size_t i = 0; i < spec_.size(); ++i) spec_[i] += o.spec_[i];
  for (std::size_t i = 0; i < phys_.size(); ++i) phys_[i] += o.phys_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  if (grid_ != o.grid_ && (grid_->dim != o.grid_->dim || grid_->modes != o.grid_->modes ||
                           grid_->points != o.grid_->points))
    throw std::invalid_argument("GridFunction: grid mismatch");
  for (std::size_t i = 0; i < spec_.size(); ++i) spec_[i] -= o.spec_[i];
  for (std::size_t i = 0; i < phys_.size(); ++i) phys_[i] -= o.phys_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double a) { return (*this) *= std::complex<double>(a); }

GridFunction& GridFunction::operator*=(std::complex<double> a) {
  for (auto& v : spec_) v *= a;
  for (auto& v : phys_) v *= a;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator-(GridFunction a) { return a *= -1.0; }
GridFunction operator*(double a, GridFunction f) { return f *= a; }
GridFunction operator*(std::complex<double> a, GridFunction f) { return f *= a; }

GridFunction map_spectral(const GridFunction& f, const double* multiplier) {
  std::vector<std::complex<double>> spec(f.spec_);
  for (std::size_t b = 0; b < spec.size(); ++b) spec[b] *= multiplier[b];
  return GridFunction::from_spectral(f.grid_, std::move(spec));
}

// --- semigroup ops -------------------------------------------------------------

GridFunction apply_heat(const GridFunction& f, double tau) {
  if (tau < 0) throw std::invalid_argument("apply_heat: tau must be >= 0");
  const auto& g = *f.grid();
  std::vector<double> m(g.band_size());
  for (std::size_t b = 0; b < m.size(); ++b) m[b] = std::exp(-g.eigenvalue(b) * tau);
  return map_spectral(f, m.data());
}

GridFunction apply_a(const GridFunction& f, double tau) {
  if (tau < 0) throw std::invalid_argument("apply_a: tau must be >= 0");
  const auto& g = *f.grid();
  std::vector<double> m(g.band_size());
  for (std::size_t b = 0; b < m.size(); ++b) m[b] = std::expm1(-g.eigenvalue(b) * tau);
  return map_spectral(f, m.data());
}

GridFunction apply_generator(const GridFunction& f) {
  const auto& g = *f.grid();
  std::vector<double> m(g.band_size());
  for (std::size_t b = 0; b < m.size(); ++b) m[b] = -g.eigenvalue(b);
  return map_spectral(f, m.data());
}

GridFunction frac_laplacian(const GridFunction& f, double alpha) {
  if (alpha < 0) throw std::invalid_argument("frac_laplacian: alpha must be >= 0");
  const auto& g = *f.grid();
  std::vector<double> m(g.band_size());
  for (std::size_t b = 0; b < m.size(); ++b) {
    double lam = g.eigenvalue(b);
    m[b] = lam == 0.0 ? 0.0 : std::pow(lam, alpha);
  }
  return map_spectral(f, m.data());
}

// --- norms ---------------------------------------------------------------------

double lp_norm(const GridFunction& f, int p) {
  if (p < 1) throw std::invalid_argument("lp_norm: p must be >= 1");
  double acc = 0.0;
  for (const auto& v : f.physical()) acc += std::pow(std::abs(v), p);
  acc /= static_cast<double>(f.physical().size());
  return std::pow(acc, 1.0 / p);
}

double l2_norm(const GridFunction& f) {
  double acc = 0.0;
  for (const auto& c : f.spectral()) acc += std::norm(c);
  return std::sqrt(acc);
}

double sobolev_norm(const GridFunction& f, double alpha, int p) {
  if (alpha < 0) throw std::invalid_argument("sobolev_norm: alpha must be >= 0");
  return lp_norm(f, p) + lp_norm(frac_laplacian(f, alpha), p);
}

double strichartz_norm(const GridFunction& f, double alpha, int p, int r_nodes,
                       int eta_nodes) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("strichartz_norm: alpha must lie in (0,1/2)");
  const auto& g = *f.grid();

  // eta nodes over the unit ball with trapezoid/cell weights
  std::vector<std::array<double, 2>> eta;
  std::vector<double> w_eta;
  if (g.dim == 1) {
    int m = eta_nodes;
    double h = 2.0 / (m - 1);
    for (int j = 0; j < m; ++j) {
      double e = -1.0 + j * h;
      eta.push_back({e, 0.0});
      w_eta.push_back((j == 0 || j == m - 1) ? h / 2 : h);
    }
  } else {
    int m = eta_nodes;
    double h = 2.0 / (m - 1);
    for (int j1 = 0; j1 < m; ++j1)
      for (int j2 = 0; j2 < m; ++j2) {
        double e1 = -1.0 + j1 * h, e2 = -1.0 + j2 * h;
        if (e1 * e1 + e2 * e2 <= 1.0) {
          eta.push_back({e1, e2});
          w_eta.push_back(h * h);
        }
      }
  }

  // graded r nodes, r_j = (j/J)^2
  std::vector<double> rs(r_nodes);
  for (int j = 1; j <= r_nodes; ++j)
    rs[j - 1] = std::pow(double(j) / r_nodes, 2.0);

  const std::size_t np = g.phys_size();
  std::vector<double> Tsq(np, 0.0);
  std::vector<double> inner(np);
  std::vector<double> g_prev(np, 0.0);
  double r_prev = 0.0;
  for (int j = 0; j < r_nodes; ++j) {
    double r = rs[j];
    std::fill(inner.begin(), inner.end(), 0.0);
    for (std::size_t m = 0; m < eta.size(); ++m) {
      double h[2] = {r * eta[m][0], r * eta[m][1]};
      GridFunction sh = shift(f, h);
      for (std::size_t i = 0; i < np; ++i)
        inner[i] += w_eta[m] * std::abs(sh.physical()[i] - f.physical()[i]);
    }
    // integrand r^{-1-4a} * inner^2, trapezoid on the graded nodes
    for (std::size_t i = 0; i < np; ++i) {
      double gi = std::pow(r, -1.0 - 4.0 * alpha) * inner[i] * inner[i];
      Tsq[i] += 0.5 * (r - r_prev) * (gi + g_prev[i]);
      g_prev[i] = gi;
    }
    r_prev = r;
  }
  std::vector<std::complex<double>> tphys(np);
  for (std::size_t i = 0; i < np; ++i) tphys[i] = std::sqrt(Tsq[i]);
  GridFunction T = GridFunction::from_physical(f.grid(), std::move(tphys));
  return lp_norm(f, p) + lp_norm(T, p);
}

// --- pointwise algebra ------------------------------------------------------------

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b,
                               bool dealias) {
  if (a.grid()->dim != b.grid()->dim || a.grid()->points != b.grid()->points ||
      a.grid()->modes != b.grid()->modes)
    throw std::invalid_argument("pointwise_product: grid mismatch");
  std::vector<std::complex<double>> prod(a.physical().size());
  for (std::size_t i = 0; i < prod.size(); ++i)
    prod[i] = a.physical()[i] * b.physical()[i];
  GridFunction out = GridFunction::from_physical(a.grid(), std::move(prod));
  if (dealias) {
    const auto& g = *a.grid();
    int cut = g.points / 3;
    std::vector<std::complex<double>> spec(out.spectral());
    int k[2] = {0, 0};
    for (std::size_t bb = 0; bb < spec.size(); ++bb) {
      g.wavevector(bb, k);
      bool kill = std::abs(k[0]) > cut || (g.dim == 2 && std::abs(k[1]) > cut);
      if (kill) spec[bb] = 0.0;
    }
    out = GridFunction::from_spectral(a.grid(), std::move(spec));
  }
  return out;
}

GridFunction shift(const GridFunction& f, const double* h) {
  const auto& g = *f.grid();
  std::vector<std::complex<double>> spec(f.spectral());
  int k[2] = {0, 0};
  for (std::size_t b = 0; b < spec.size(); ++b) {
    g.wavevector(b, k);
    double phase = k[0] * h[0] + (g.dim == 2 ? k[1] * h[1] : 0.0);
    spec[b] *= std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return GridFunction::from_spectral(f.grid(), std::move(spec));
}

GridFunction random_real_field(GridPtr grid, std::mt19937_64& rng, int kmax,
                               double decay) {
  if (kmax > grid->modes) kmax = grid->modes;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<std::complex<double>> spec(grid->band_size(), 0.0);
  int k[2] = {0, 0};
  for (std::size_t b = 0; b < spec.size(); ++b) {
    grid->wavevector(b, k);
    if (std::abs(k[0]) > kmax || (grid->dim == 2 && std::abs(k[1]) > kmax)) continue;
    double re = unif(rng), im = unif(rng);
    double lam = grid->eigenvalue(b);
    spec[b] = std::complex<double>(re, im) / std::pow(1.0 + lam, decay);
  }
  // Hermitian symmetrization: f <- (f + conj reflect f)/2 gives a real field.
  std::vector<std::complex<double>> sym(spec.size());
  int kneg[2] = {0, 0};
  for (std::size_t b = 0; b < spec.size(); ++b) {
    grid->wavevector(b, k);
    kneg[0] = -k[0];
    kneg[1] = -k[1];
    sym[b] = 0.5 * (spec[b] + std::conj(spec[grid->flat_index(kneg)]));
  }
  return GridFunction::from_spectral(std::move(grid), std::move(sym));
}

// --- persistence -------------------------------------------------------------------

void save_gridfunction(const GridFunction& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_gridfunction: cannot open " + path);
  const auto& g = *f.grid();
  std::uint32_t hdr[3] = {static_cast<std::uint32_t>(g.dim),
                          static_cast<std::uint32_t>(g.modes),
                          static_cast<std::uint32_t>(g.points)};
  os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  os.write(reinterpret_cast<const char*>(f.spectral().data()),
           static_cast<std::streamsize>(f.spectral().size() * sizeof(std::complex<double>)));
  if (!os) throw std::runtime_error("save_gridfunction: write failed for " + path);
}

GridFunction load_gridfunction(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_gridfunction: cannot open " + path);
  std::uint32_t hdr[3];
  is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!is) throw std::runtime_error("load_gridfunction: truncated header in " + path);
  GridPtr grid = make_grid(static_cast<int>(hdr[0]), static_cast<int>(hdr[1]),
                           static_cast<int>(hdr[2]));
  std::vector<std::complex<double>> spec(grid->band_size());
  is.read(reinterpret_cast<char*>(spec.data()),
          static_cast<std::streamsize>(spec.size() * sizeof(std::complex<double>)));
  if (!is) throw std::runtime_error("load_gridfunction: truncated payload in " + path);
  return GridFunction::from_spectral(std::move(grid), std::move(spec));
}

void export_csv(const GridFunction& f, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("export_csv: cannot open " + path);
  const auto& g = *f.grid();
  if (g.dim == 1)
    std::fprintf(fp, "xi,re,im\n");
  else
    std::fprintf(fp, "xi1,xi2,re,im\n");
  double xi[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < g.phys_size(); ++i) {
    g.coords(i, xi);
    const auto& v = f.physical()[i];
    if (g.dim == 1)
      std::fprintf(fp, "%.17g,%.17g,%.17g\n", xi[0], v.real(), v.imag());
    else
      std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", xi[0], xi[1], v.real(), v.imag());
  }
  std::fclose(fp);
}

}  // namespace rheat
