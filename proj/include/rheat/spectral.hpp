#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace rheat {

/// Global lock serializing FFTW plan creation (the planner is not
/// thread-safe; executing existing plans is).
std::mutex& fftw_planner_mutex();

/// Periodic spectral discretization of the torus [0,2pi)^n.
///
/// A field keeps the Fourier modes |k_j| <= K ("the band") as its
/// authoritative representation, plus the physical samples on the P^n
/// collocation grid. P >= 2K+1 so the retained modes are representable
/// without aliasing; P >= 3K+1 makes quadratic products alias-free.
struct SpectralGrid {
  int dim;     // spatial dimension n, 1 or 2
  int modes;   // K, modes per axis
  int points;  // P, physical points per axis (power of two)

  SpectralGrid(int n, int K, int P);

  int band() const { return 2 * modes + 1; }
  std::size_t band_size() const;
  std::size_t phys_size() const;

  // flat band index <-> integer wave vector
  void wavevector(std::size_t flat, int* k) const;
  std::size_t flat_index(const int* k) const;

  // Laplacian eigenvalue |k|^2 for a flat band index
  double eigenvalue(std::size_t flat) const;

  // physical coordinates of a flat physical index
  void coords(std::size_t flat, double* xi) const;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

GridPtr make_grid(int dim, int modes, int points);

/// A field on the periodic grid, synchronized between its band-limited
/// spectrum and its physical samples. Immutable after construction; all
/// operations return new instances and are safe to call concurrently.
class GridFunction {
 public:
  GridFunction() = default;

  static GridFunction zero(GridPtr grid);
  static GridFunction from_spectral(GridPtr grid,
                                    std::vector<std::complex<double>> coeffs);
  static GridFunction from_physical(GridPtr grid,
                                    std::vector<std::complex<double>> samples);
  /// Single mode e^{i k.xi} scaled by amp.
  static GridFunction mode(GridPtr grid, const int* k,
                           std::complex<double> amp = 1.0);
  static GridFunction constant(GridPtr grid, std::complex<double> c);

  const GridPtr& grid() const { return grid_; }
  bool empty() const { return !grid_; }

  const std::vector<std::complex<double>>& spectral() const { return spec_; }
  const std::vector<std::complex<double>>& physical() const { return phys_; }

  std::complex<double> coeff(const int* k) const;
  std::complex<double> mean() const;  // k = 0 coefficient

  bool is_real(double tol = 1e-11) const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double a);
  GridFunction& operator*=(std::complex<double> a);

 private:
  GridPtr grid_;
  std::vector<std::complex<double>> spec_;  // band coefficients, row-major k
  std::vector<std::complex<double>> phys_;  // P^n samples, row-major

  friend GridFunction map_spectral(const GridFunction&, const double*);
  friend class Fft;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a);
GridFunction operator*(double a, GridFunction f);
GridFunction operator*(std::complex<double> a, GridFunction f);

// --- heat semigroup and fractional calculus -------------------------------

/// S_tau = exp(tau * Laplacian), mode-wise multiplier e^{-|k|^2 tau}.
GridFunction apply_heat(const GridFunction& f, double tau);

/// a_tau = S_tau - id. Annihilates the constant mode.
GridFunction apply_a(const GridFunction& f, double tau);

/// The generator: multiplier -|k|^2.
GridFunction apply_generator(const GridFunction& f);

/// (-Laplacian)^alpha, multiplier |k|^(2 alpha), zero on the constant mode.
GridFunction frac_laplacian(const GridFunction& f, double alpha);

// --- norms -----------------------------------------------------------------

/// L^p norm with normalized measure (2pi)^{-n} d(xi): grid averaging.
double lp_norm(const GridFunction& f, int p);

/// L^2 norm via Parseval on the band (equals lp_norm(f,2) up to rounding).
double l2_norm(const GridFunction& f);

/// Hook into the increment calculus.
inline double value_norm(const GridFunction& f) { return l2_norm(f); }

/// ||f||_{L^p} + ||(-Lap)^alpha f||_{L^p}.
double sobolev_norm(const GridFunction& f, double alpha, int p);

/// Quadrature discretization of the difference-integral norm
/// ||f||_{L^p} + ||T_alpha f||_{L^p}; diagnostic companion to sobolev_norm.
/// Requires alpha in (0, 1/2).
double strichartz_norm(const GridFunction& f, double alpha, int p,
                       int r_nodes = 24, int eta_nodes = 17);

// --- pointwise algebra ------------------------------------------------------

/// Sample-wise product on the physical grid, then band projection.
/// With dealias set, modes above P/3 are zeroed (2/3 rule).
GridFunction pointwise_product(const GridFunction& a, const GridFunction& b,
                               bool dealias = false);

/// Evaluate f(. + h) by spectral phase shift (exact for band-limited f).
GridFunction shift(const GridFunction& f, const double* h);

/// Apply a real mode-wise multiplier, indexed like the band.
GridFunction map_spectral(const GridFunction& f, const double* multiplier);

/// Evolution-family adapter for the twisted increment calculus.
struct HeatFamily {
  GridFunction apply_S(double tau, const GridFunction& v) const {
    return apply_heat(v, tau);
  }
  GridFunction apply_a(double tau, const GridFunction& v) const {
    return rheat::apply_a(v, tau);
  }
};

// --- test/audit field factory ----------------------------------------------

/// Random real band-limited field with modes |k_j| <= kmax, unit-scale
/// coefficients decaying like (1+|k|^2)^{-decay}.
GridFunction random_real_field(GridPtr grid, std::mt19937_64& rng, int kmax,
                               double decay = 1.0);

// --- persistence -------------------------------------------------------------

/// Binary layout: u32 n, u32 K, u32 P, then row-major band coefficients as
/// interleaved 64-bit floats (re, im).
void save_gridfunction(const GridFunction& f, const std::string& path);
GridFunction load_gridfunction(const std::string& path);

/// CSV of physical samples: coordinates then re, im per row.
void export_csv(const GridFunction& f, const std::string& path);

}  // namespace rheat
