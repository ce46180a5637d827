#include "rheat/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rheat {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("TimeGrid: need at least 2 points");
  if (points_.front() != 0.0) throw std::invalid_argument("TimeGrid: first point must be 0");
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (!(points_[i] > points_[i - 1]))
      throw std::invalid_argument("TimeGrid: points must be strictly increasing");
  std::size_t c = cells();
  if ((c & (c - 1)) == 0) {
    double h = horizon() / static_cast<double>(c);
    bool uniform = true;
    for (std::size_t i = 0; i < points_.size(); ++i)
      if (std::abs(points_[i] - h * static_cast<double>(i)) > 1e-12 * horizon()) {
        uniform = false;
        break;
      }
    if (uniform) {
      level_ = 0;
      while ((std::size_t{1} << level_) < c) ++level_;
    }
  }
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t cells) {
  if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
  if (cells < 1) throw std::invalid_argument("TimeGrid: need at least 1 cell");
  std::vector<double> pts(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    pts[i] = horizon * static_cast<double>(i) / static_cast<double>(cells);
  pts[0] = 0.0;
  pts[cells] = horizon;
  return TimeGrid(std::move(pts));
}

double TimeGrid::min_dt() const {
  double m = points_[1] - points_[0];
  for (std::size_t i = 1; i < cells(); ++i) m = std::min(m, dt(i));
  return m;
}

bool TimeGrid::is_subgrid_of(const TimeGrid& fine, double tol) const {
  std::size_t j = 0;
  for (double p : points_) {
    while (j < fine.size() && fine.t(j) < p - tol) ++j;
    if (j >= fine.size() || std::abs(fine.t(j) - p) > tol) return false;
  }
  return true;
}

std::size_t TimeGrid::index_of(double t, double tol) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
  if (it == points_.end() || std::abs(*it - t) > tol)
    throw std::invalid_argument("TimeGrid: time is not a grid point");
  return static_cast<std::size_t>(it - points_.begin());
}

}  // namespace rheat
