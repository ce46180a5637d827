#include "rheat/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>

#include "rheat/spectral.hpp"

namespace rheat {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic Gaussian draws (Box-Muller on 53-bit uniforms); identical
// across standard libraries, unlike std::normal_distribution.
struct GaussianSource {
  std::mt19937_64 rng;
  bool have_spare = false;
  double spare = 0.0;
  explicit GaussianSource(std::uint64_t seed) : rng(seed) {}
  double uniform01() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
  double operator()() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare = r * std::sin(a);
    have_spare = true;
    return r * std::cos(a);
  }
};

std::vector<double> fgn_covariance(double hurst, double dt, std::size_t m) {
  std::vector<double> c(m + 1);
  double scale = std::pow(dt, 2.0 * hurst);
  for (std::size_t k = 0; k <= m; ++k) {
    double kk = static_cast<double>(k);
    c[k] = 0.5 * scale *
           (std::pow(kk + 1.0, 2.0 * hurst) - 2.0 * std::pow(kk, 2.0 * hurst) +
            std::pow(std::abs(kk - 1.0), 2.0 * hurst));
  }
  return c;
}

// Davies-Harte sampling of M fGn increments; returns false when the
// circulant embedding is not nonnegative definite.
bool fgn_circulant(const std::vector<double>& cov, std::size_t m,
                   GaussianSource& gauss, std::vector<double>& out) {
  const std::size_t n = 2 * m;
  std::vector<std::complex<double>> r(n), eig(n);
  for (std::size_t k = 0; k <= m; ++k) r[k] = cov[k];
  for (std::size_t k = 1; k < m; ++k) r[n - k] = cov[k];
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n),
                            reinterpret_cast<fftw_complex*>(r.data()),
                            reinterpret_cast<fftw_complex*>(eig.data()),
                            FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  double maxeig = 0.0, mineig = 0.0;
  for (auto& e : eig) {
    maxeig = std::max(maxeig, e.real());
    mineig = std::min(mineig, e.real());
  }
  if (mineig < -1e-9 * std::max(1.0, maxeig)) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    return false;
  }
  std::vector<std::complex<double>> w(n), z(n);
  const double inv2m = 1.0 / static_cast<double>(n);
  auto lam = [&](std::size_t k) { return std::max(0.0, eig[k].real()); };
  w[0] = std::sqrt(lam(0) * inv2m) * gauss();
  w[m] = std::sqrt(lam(m) * inv2m) * gauss();
  for (std::size_t k = 1; k < m; ++k) {
    double s = std::sqrt(lam(k) * inv2m * 0.5);
    double g1 = gauss(), g2 = gauss();
    w[k] = std::complex<double>(s * g1, s * g2);
    w[n - k] = std::conj(w[k]);
  }
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(w.data()),
                   reinterpret_cast<fftw_complex*>(z.data()));
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  out.resize(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = z[j].real();
  return true;
}

void fgn_cholesky(const std::vector<double>& cov, std::size_t m,
                  GaussianSource& gauss, std::vector<double>& out) {
  // dense lower-triangular factor of the Toeplitz covariance
  std::vector<double> L(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov[i - j];
      for (std::size_t k = 0; k < j; ++k) s -= L[i * m + k] * L[j * m + k];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("fgn_cholesky: matrix not positive definite");
        L[i * m + j] = std::sqrt(s);
      } else {
        L[i * m + j] = s / L[j * m + j];
      }
    }
  }
  std::vector<double> g(m);
  for (auto& v : g) v = gauss();
  out.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) out[i] += L[i * m + j] * g[j];
}

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const char* data, std::size_t len, std::uint64_t h = kFnvOffset) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= kFnvPrime;
  }
  return h;
}

template <class T>
void put(std::vector<char>& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

void put_doubles(std::vector<char>& buf, const std::vector<double>& v) {
  const char* p = reinterpret_cast<const char*>(v.data());
  buf.insert(buf.end(), p, p + v.size() * sizeof(double));
}

struct Reader {
  const char* p;
  const char* end;
  template <class T>
  T get() {
    if (p + sizeof(T) > end) throw std::runtime_error("signal file: truncated");
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
  }
  void get_doubles(std::vector<double>& v, std::size_t count) {
    if (p + count * sizeof(double) > end)
      throw std::runtime_error("signal file: truncated");
    v.resize(count);
    std::memcpy(v.data(), p, count * sizeof(double));
    p += count * sizeof(double);
  }
};

constexpr std::uint32_t kSignalVersion = 1;

}  // namespace

DrivingPath sample_fbm(double hurst, int components, const TimeGrid& grid,
                       std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("sample_fbm: hurst must lie in (0,1)");
  if (components < 1) throw std::invalid_argument("sample_fbm: components must be >= 1");
  const std::size_t m = grid.cells();
  const double dt = grid.horizon() / static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j)
    if (std::abs(grid.dt(j) - dt) > 1e-12 * grid.horizon())
      throw std::invalid_argument("sample_fbm: grid must be uniform");

  DrivingPath path;
  path.grid = grid;
  path.components = components;
  path.hurst = hurst;
  path.gamma = hurst;
  path.seed = seed;
  path.values.assign((m + 1) * components, 0.0);

  auto cov = fgn_covariance(hurst, dt, m);
  bool use_cholesky = m < 64;
  path.generator =
      use_cholesky ? PathGenerator::kFbmCholesky : PathGenerator::kFbmCirculant;
  std::vector<double> inc;
  for (int c = 0; c < components; ++c) {
    GaussianSource gauss(splitmix64(seed + 0x9E3779B97F4A7C15ULL *
                                               static_cast<std::uint64_t>(c + 1)));
    bool ok = false;
    if (!use_cholesky) ok = fgn_circulant(cov, m, gauss, inc);
    if (!ok) {
      if (m > 4096) throw std::runtime_error("sample_fbm: embedding failed on a long grid");
      GaussianSource fresh(splitmix64(seed + 0x9E3779B97F4A7C15ULL *
                                                 static_cast<std::uint64_t>(c + 1)));
      fgn_cholesky(cov, m, fresh, inc);
      path.generator = PathGenerator::kFbmCholesky;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc += inc[j];
      path.values[(j + 1) * components + c] = acc;
    }
  }
  return path;
}

DrivingPath builtin_path(const std::string& kind, int components,
                         const TimeGrid& grid) {
  DrivingPath path;
  path.grid = grid;
  path.components = components;
  path.hurst = std::numeric_limits<double>::quiet_NaN();
  path.gamma = 1.0;
  path.seed = 0;
  path.values.assign(grid.size() * components, 0.0);
  if (kind == "linear") {
    path.generator = PathGenerator::kBuiltinLinear;
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int c = 0; c < components; ++c)
        path.values[i * components + c] = grid.t(i);
  } else if (kind == "sin") {
    path.generator = PathGenerator::kBuiltinSin;
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int c = 0; c < components; ++c)
        path.values[i * components + c] = std::sin((c + 1) * grid.t(i));
  } else {
    throw std::invalid_argument("builtin_path: unknown kind '" + kind + "'");
  }
  return path;
}

// --- RoughSignal ---------------------------------------------------------------

RoughSignal RoughSignal::lift_piecewise_linear(DrivingPath path, bool with_level3) {
  const std::size_t m = path.grid.cells();
  const int n = path.components;
  std::vector<double> areas(m * n * n);
  std::vector<double> triples;
  if (with_level3) triples.assign(m * n * n * n, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double* x0 = &path.values[j * n];
    const double* x1 = &path.values[(j + 1) * n];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        areas[(j * n + a) * n + b] = 0.5 * (x1[a] - x0[a]) * (x1[b] - x0[b]);
    if (with_level3)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            triples[((j * n + a) * n + b) * n + c] =
                (x1[a] - x0[a]) * (x1[b] - x0[b]) * (x1[c] - x0[c]) / 6.0;
  }
  return from_cells(std::move(path), std::move(areas), std::move(triples));
}

RoughSignal RoughSignal::from_cells(DrivingPath path, std::vector<double> cell_areas,
                                    std::vector<double> cell_triples) {
  const std::size_t m = path.grid.cells();
  const std::size_t n = static_cast<std::size_t>(path.components);
  if (cell_areas.size() != m * n * n)
    throw std::invalid_argument("RoughSignal: cell area count mismatch");
  if (!cell_triples.empty() && cell_triples.size() != m * n * n * n)
    throw std::invalid_argument("RoughSignal: cell triple count mismatch");
  for (double v : path.values)
    if (!std::isfinite(v)) throw std::invalid_argument("RoughSignal: non-finite path value");
  for (std::size_t c = 0; c < n; ++c)
    if (path.values[c] != 0.0)
      throw std::invalid_argument("RoughSignal: path must start at 0");

  RoughSignal sig;
  sig.path_ = std::move(path);
  sig.cell_area_ = std::move(cell_areas);
  sig.cell_triple_ = std::move(cell_triples);
  sig.build_prefixes();
  return sig;
}

void RoughSignal::build_prefixes() {
  const std::size_t m = path_.grid.cells();
  const std::size_t n = static_cast<std::size_t>(path_.components);
  const std::size_t n2 = n * n, n3 = n * n * n;
  const bool lvl3 = !cell_triple_.empty();

  cell_inc_.assign(m * n, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t a = 0; a < n; ++a)
      cell_inc_[j * n + a] =
          path_.values[(j + 1) * n + a] - path_.values[j * n + a];

  prefix1_.assign((m + 1) * n, 0.0);
  prefix2_.assign((m + 1) * n2, 0.0);
  if (lvl3) prefix3_.assign((m + 1) * n3, 0.0);

  for (std::size_t j = 0; j < m; ++j) {
    const double* p1 = &prefix1_[j * n];
    const double* p2 = &prefix2_[j * n2];
    const double* d = &cell_inc_[j * n];
    const double* A = &cell_area_[j * n2];
    double* q1 = &prefix1_[(j + 1) * n];
    double* q2 = &prefix2_[(j + 1) * n2];
    for (std::size_t a = 0; a < n; ++a) q1[a] = p1[a] + d[a];
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        q2[a * n + b] = p2[a * n + b] + A[a * n + b] + p1[a] * d[b];
    if (lvl3) {
      const double* p3 = &prefix3_[j * n3];
      const double* T = &cell_triple_[j * n3];
      double* q3 = &prefix3_[(j + 1) * n3];
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < n; ++c) {
            std::size_t idx = (a * n + b) * n + c;
            q3[idx] = p3[idx] + T[idx] + p2[a * n + b] * d[c] + p1[a] * A[b * n + c];
          }
    }
  }
}

std::vector<double> RoughSignal::increment(std::size_t s, std::size_t t) const {
  if (t < s || t >= path_.grid.size())
    throw std::invalid_argument("RoughSignal: bad interval");
  const std::size_t n = static_cast<std::size_t>(path_.components);
  std::vector<double> out(n);
  for (std::size_t a = 0; a < n; ++a)
    out[a] = prefix1_[t * n + a] - prefix1_[s * n + a];
  return out;
}

std::vector<double> RoughSignal::sig2(std::size_t s, std::size_t t) const {
  if (t < s || t >= path_.grid.size())
    throw std::invalid_argument("RoughSignal: bad interval");
  const std::size_t n = static_cast<std::size_t>(path_.components);
  std::vector<double> out(n * n);
  std::vector<double> d = increment(s, t);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      out[a * n + b] = prefix2_[t * n * n + a * n + b] -
                       prefix2_[s * n * n + a * n + b] -
                       prefix1_[s * n + a] * d[b];
  return out;
}

std::vector<double> RoughSignal::area(std::size_t s, std::size_t t) const {
  const std::size_t n = static_cast<std::size_t>(path_.components);
  std::vector<double> sg = sig2(s, t);
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = sg[j * n + i];
  return out;
}

std::vector<double> RoughSignal::area_transposed(std::size_t s, std::size_t t) const {
  return sig2(s, t);
}

std::vector<double> RoughSignal::sig3(std::size_t s, std::size_t t) const {
  if (prefix3_.empty()) throw std::runtime_error("RoughSignal: level-3 lift not built");
  if (t < s || t >= path_.grid.size())
    throw std::invalid_argument("RoughSignal: bad interval");
  const std::size_t n = static_cast<std::size_t>(path_.components);
  const std::size_t n2 = n * n, n3 = n2 * n;
  std::vector<double> d = increment(s, t);
  std::vector<double> s2 = sig2(s, t);
  std::vector<double> out(n3);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        std::size_t idx = (a * n + b) * n + c;
        out[idx] = prefix3_[t * n3 + idx] - prefix3_[s * n3 + idx] -
                   prefix2_[s * n2 + a * n + b] * d[c] -
                   prefix1_[s * n + a] * s2[b * n + c];
      }
  return out;
}

std::vector<double> RoughSignal::triple(std::size_t s, std::size_t t) const {
  return sig3(s, t);
}

double RoughSignal::increment(std::size_t s, std::size_t t, int i) const {
  const std::size_t n = static_cast<std::size_t>(path_.components);
  return prefix1_[t * n + i] - prefix1_[s * n + i];
}

double RoughSignal::area(std::size_t s, std::size_t t, int i, int j) const {
  const std::size_t n = static_cast<std::size_t>(path_.components);
  // sig2(j, i) via the prefix formula, single entry
  double dj = increment(s, t, i);
  return prefix2_[t * n * n + static_cast<std::size_t>(j) * n + i] -
         prefix2_[s * n * n + static_cast<std::size_t>(j) * n + i] -
         prefix1_[s * n + j] * dj;
}

double RoughSignal::sig3(std::size_t s, std::size_t t, int a, int b, int c) const {
  return sig3(s, t)[(static_cast<std::size_t>(a) * path_.components + b) *
                        path_.components +
                    c];
}

const double* RoughSignal::cell_increment(std::size_t j) const {
  return &cell_inc_[j * path_.components];
}
const double* RoughSignal::cell_area(std::size_t j) const {
  return &cell_area_[j * path_.components * path_.components];
}
const double* RoughSignal::cell_triple(std::size_t j) const {
  return &cell_triple_[j * path_.components * path_.components * path_.components];
}

RoughSignal RoughSignal::perturb_area(const std::vector<double>& direction,
                                      double delta) const {
  const std::size_t n = static_cast<std::size_t>(path_.components);
  if (direction.size() != n * n)
    throw std::invalid_argument("perturb_area: direction must be N x N");
  std::vector<double> areas(cell_area_);
  const std::size_t m = path_.grid.cells();
  for (std::size_t j = 0; j < m; ++j) {
    double w = delta * path_.grid.dt(j);
    // direction is given in tensor form; cell storage is signature order
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        areas[(j * n + a) * n + b] += w * direction[b * n + a];
  }
  return from_cells(path_, std::move(areas), cell_triple_);
}

void RoughSignal::save(const std::string& file) const {
  std::vector<char> buf;
  buf.reserve(64 + path_.values.size() * 8 + cell_area_.size() * 8 +
              cell_triple_.size() * 8);
  buf.insert(buf.end(), {'R', 'H', 'S', 'G'});
  put<std::uint32_t>(buf, kSignalVersion);
  put<std::uint32_t>(buf, cell_triple_.empty() ? 0u : 1u);
  put<std::uint64_t>(buf, path_.seed);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(path_.generator));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(path_.components));
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(path_.grid.cells()));
  put<double>(buf, path_.grid.horizon());
  put<double>(buf, path_.hurst);
  put<double>(buf, path_.gamma);
  put_doubles(buf, path_.grid.points());
  put_doubles(buf, path_.values);
  put_doubles(buf, cell_inc_);
  put_doubles(buf, cell_area_);
  if (!cell_triple_.empty()) put_doubles(buf, cell_triple_);
  std::uint64_t sum = fnv1a(buf.data(), buf.size());
  put<std::uint64_t>(buf, sum);
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("RoughSignal::save: cannot open " + file);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("RoughSignal::save: write failed");
}

RoughSignal RoughSignal::load(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("RoughSignal::load: cannot open " + file);
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 12) throw std::runtime_error("signal file: truncated");
  if (std::memcmp(buf.data(), "RHSG", 4) != 0)
    throw std::runtime_error("signal file: bad magic");
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
  if (fnv1a(buf.data(), buf.size() - 8) != stored)
    throw std::runtime_error("signal file: checksum failure");

  Reader r{buf.data() + 4, buf.data() + buf.size() - 8};
  auto version = r.get<std::uint32_t>();
  if (version != kSignalVersion)
    throw std::runtime_error("signal file: version mismatch");
  auto flags = r.get<std::uint32_t>();
  DrivingPath path;
  path.seed = r.get<std::uint64_t>();
  path.generator = static_cast<PathGenerator>(r.get<std::uint32_t>());
  path.components = static_cast<int>(r.get<std::uint32_t>());
  auto m = static_cast<std::size_t>(r.get<std::uint64_t>());
  (void)r.get<double>();  // horizon, implied by the points
  path.hurst = r.get<double>();
  path.gamma = r.get<double>();
  std::vector<double> pts;
  r.get_doubles(pts, m + 1);
  path.grid = TimeGrid(std::move(pts));
  const std::size_t n = static_cast<std::size_t>(path.components);
  r.get_doubles(path.values, (m + 1) * n);
  std::vector<double> inc, areas, triples;
  r.get_doubles(inc, m * n);
  r.get_doubles(areas, m * n * n);
  if (flags & 1u) r.get_doubles(triples, m * n * n * n);
  if (r.p != r.end) throw std::runtime_error("signal file: trailing bytes");
  return from_cells(std::move(path), std::move(areas), std::move(triples));
}

}  // namespace rheat
