#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rheat/time_grid.hpp"

namespace rheat {

enum class PathGenerator : std::uint32_t {
  kExternal = 0,
  kFbmCirculant = 1,
  kFbmCholesky = 2,
  kBuiltinLinear = 3,
  kBuiltinSin = 4,
};

/// A driving path on a fine time mesh: x_0 = 0, values in R^N per node.
struct DrivingPath {
  TimeGrid grid;
  int components = 1;
  std::vector<double> values;  // (M+1) x N row-major
  double hurst = 0.0;          // NaN-able metadata for deterministic paths
  double gamma = 1.0;          // declared Hoelder exponent
  std::uint64_t seed = 0;
  PathGenerator generator = PathGenerator::kExternal;

  double value(std::size_t node, int comp) const {
    return values[node * components + comp];
  }
};

/// Fractional Brownian motion with stationary increments,
/// Var(x_t - x_s) = |t-s|^{2H} per component. Circulant embedding with a
/// Cholesky fallback on short grids; bit-deterministic under
/// (seed, grid, H, N).
DrivingPath sample_fbm(double hurst, int components, const TimeGrid& grid,
                       std::uint64_t seed);

/// Deterministic smooth test paths: "linear" (x^i_t = t) and
/// "sin" (x^i_t = sin((i+1) t)).
DrivingPath builtin_path(const std::string& kind, int components,
                         const TimeGrid& grid);

/// A driving path with its geometric lift, evaluated over arbitrary
/// fine-grid subintervals by Chen recombination of per-cell data.
///
/// Index conventions. Signature order sig2(a,b) integrates letter a before
/// letter b; sig3(a,b,c) likewise. The tensor-form area is the transpose:
/// area(i,j) = int dx^i (dx^j increment) = sig2(j,i).
class RoughSignal {
 public:
  RoughSignal() = default;

  /// Piecewise-linear (Wong-Zakai) lift of the sampled skeleton: within a
  /// cell of increment d, sig2 = d (x) d / 2 and sig3 = d (x) d (x) d / 6.
  static RoughSignal lift_piecewise_linear(DrivingPath path, bool with_level3);

  /// Lift with explicit per-cell data (area perturbation studies). Chen
  /// recombination holds by construction for any per-cell inputs.
  static RoughSignal from_cells(DrivingPath path,
                                std::vector<double> cell_areas,
                                std::vector<double> cell_triples);

  const DrivingPath& path() const { return path_; }
  const TimeGrid& grid() const { return path_.grid; }
  int components() const { return path_.components; }
  bool has_level3() const { return !prefix3_.empty(); }

  // --- eval family over fine-grid indices, s <= t -------------------------
  std::vector<double> increment(std::size_t s, std::size_t t) const;  // N
  /// area(i,j) = x^2_{ts} entry (i,j) in tensor form.
  std::vector<double> area(std::size_t s, std::size_t t) const;  // N^2
  std::vector<double> area_transposed(std::size_t s, std::size_t t) const;
  /// Plain signature order; area(i,j) = sig2(j,i).
  std::vector<double> sig2(std::size_t s, std::size_t t) const;   // N^2
  std::vector<double> sig3(std::size_t s, std::size_t t) const;   // N^3
  std::vector<double> triple(std::size_t s, std::size_t t) const; // alias of sig3

  double increment(std::size_t s, std::size_t t, int i) const;
  double area(std::size_t s, std::size_t t, int i, int j) const;
  double sig3(std::size_t s, std::size_t t, int a, int b, int c) const;

  // --- per-cell data (cell j spans [t_j, t_{j+1}]) -------------------------
  const double* cell_increment(std::size_t j) const;  // N
  const double* cell_area(std::size_t j) const;       // N^2, signature order
  const double* cell_triple(std::size_t j) const;     // N^3, signature order

  /// x^2 -> x^2 + delta * (t - s) * C for an N x N direction C; preserves
  /// the Chen relations, not geometricity.
  RoughSignal perturb_area(const std::vector<double>& direction,
                           double delta) const;

  void save(const std::string& file) const;
  static RoughSignal load(const std::string& file);

 private:
  void build_prefixes();

  DrivingPath path_;
  std::vector<double> cell_inc_;     // M x N
  std::vector<double> cell_area_;    // M x N^2
  std::vector<double> cell_triple_;  // M x N^3 (empty without level 3)
  std::vector<double> prefix1_;      // (M+1) x N
  std::vector<double> prefix2_;      // (M+1) x N^2
  std::vector<double> prefix3_;      // (M+1) x N^3 (empty without level 3)
};

}  // namespace rheat
