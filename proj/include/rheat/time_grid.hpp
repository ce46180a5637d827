#pragma once

#include <cstddef>
#include <vector>

namespace rheat {

/// Strictly increasing times in [0, T] with points[0] = 0. A coarse grid
/// used by a solver must be a subsequence of its signal's fine grid.
class TimeGrid {
 public:
  TimeGrid() : TimeGrid(std::vector<double>{0.0, 1.0}) {}
  explicit TimeGrid(std::vector<double> points);

  /// 2^level cells on [0, T] when level >= 0 is given; otherwise the level
  /// metadata is inferred when cells is a power of two.
  static TimeGrid uniform(double horizon, std::size_t cells);

  std::size_t size() const { return points_.size(); }
  std::size_t cells() const { return points_.size() - 1; }
  double t(std::size_t i) const { return points_[i]; }
  double horizon() const { return points_.back(); }
  double dt(std::size_t cell) const { return points_[cell + 1] - points_[cell]; }
  double min_dt() const;
  const std::vector<double>& points() const { return points_; }

  /// Dyadic-refinement metadata: log2(cells) when uniform dyadic, else -1.
  int level() const { return level_; }

  bool is_subgrid_of(const TimeGrid& fine, double tol = 1e-12) const;

  /// Exact node lookup; throws when t is not a grid point.
  std::size_t index_of(double t, double tol = 1e-12) const;

 private:
  std::vector<double> points_;
  int level_ = -1;
};

}  // namespace rheat
