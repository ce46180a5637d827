#include "rheat/nonlinearity.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rheat {

namespace {

class ZeroField : public Nonlinearity {
 public:
  explicit ZeroField(int n) : n_(n) {}
  int components() const override { return n_; }
  int regularity_class() const override { return 4; }
  bool oracle_only() const override { return false; }
  double sigma(int, const double*, double, int) const override { return 0.0; }
  double sigma_xi(int, const double*, double, int, int) const override { return 0.0; }

 private:
  int n_;
};

class AdditiveField : public Nonlinearity {
 public:
  AdditiveField(int n, double amp) : n_(n), amp_(amp) {}
  int components() const override { return n_; }
  int regularity_class() const override { return 4; }
  bool oracle_only() const override { return true; }  // no xi cutoff
  double sigma(int i, const double* xi, double, int m) const override {
    if (m > 0) return 0.0;
    return amp_ * std::cos((i + 1) * xi[0]);
  }
  double sigma_xi(int i, const double* xi, double, int m, int axis) const override {
    if (m > 0 || axis != 0) return 0.0;
    return -amp_ * (i + 1) * std::sin((i + 1) * xi[0]);
  }

 private:
  int n_;
  double amp_;
};

class LinearField : public Nonlinearity {
 public:
  explicit LinearField(std::vector<double> c) : c_(std::move(c)) {}
  int components() const override { return static_cast<int>(c_.size()); }
  int regularity_class() const override { return 4; }
  bool oracle_only() const override { return true; }  // unbounded in eta
  double sigma(int i, const double*, double eta, int m) const override {
    if (m == 0) return c_[i] * eta;
    if (m == 1) return c_[i];
    return 0.0;
  }
  double sigma_xi(int, const double*, double, int, int) const override { return 0.0; }

 private:
  std::vector<double> c_;
};

double sin_derivative(double eta, int m) {
  switch (m & 3) {
    case 0: return std::sin(eta);
    case 1: return std::cos(eta);
    case 2: return -std::sin(eta);
    default: return -std::cos(eta);
  }
}

class SinField : public Nonlinearity {
 public:
  SinField(int n, std::vector<double> scales) : n_(n), scales_(std::move(scales)) {
    if (scales_.empty()) scales_.assign(n_, 1.0);
    if (static_cast<int>(scales_.size()) != n_)
      throw std::invalid_argument("SinField: scale count mismatch");
  }
  int components() const override { return n_; }
  int regularity_class() const override { return 4; }
  bool oracle_only() const override { return false; }
  double sigma(int i, const double*, double eta, int m) const override {
    return scales_[i] * sin_derivative(eta + i * std::numbers::pi / 2, m);
  }
  double sigma_xi(int, const double*, double, int, int) const override { return 0.0; }

 private:
  int n_;
  std::vector<double> scales_;
};

// C^inf bump: exp(1 - 1/(1 - r^2)) for r < 1, 0 outside
double bump(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

double bump_derivative(double r) {
  if (r >= 1.0) return 0.0;
  double d = 1.0 - r * r;
  return bump(r) * (-2.0 * r / (d * d));
}

class CutoffSinField : public Nonlinearity {
 public:
  CutoffSinField(int n, double radius) : n_(n), radius_(radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("cutoff radius must be > 0");
  }
  int components() const override { return n_; }
  int regularity_class() const override { return 4; }
  bool oracle_only() const override { return false; }
  double cutoff_radius() const override { return radius_; }
  double sigma(int i, const double* xi, double eta, int m) const override {
    double r = std::abs(xi[0] - std::numbers::pi) / radius_;
    return bump(r) * sin_derivative(eta + i * std::numbers::pi / 2, m);
  }
  double sigma_xi(int i, const double* xi, double eta, int m, int axis) const override {
    if (axis != 0) return 0.0;
    double u = xi[0] - std::numbers::pi;
    double r = std::abs(u) / radius_;
    double sign = u >= 0 ? 1.0 : -1.0;
    return bump_derivative(r) * (sign / radius_) *
           sin_derivative(eta + i * std::numbers::pi / 2, m);
  }

 private:
  int n_;
  double radius_;
};

}  // namespace

FieldPtr make_zero_field(int n) { return std::make_shared<ZeroField>(n); }
FieldPtr make_additive_field(int n, double amp) {
  return std::make_shared<AdditiveField>(n, amp);
}
FieldPtr make_linear_field(std::vector<double> c) {
  return std::make_shared<LinearField>(std::move(c));
}
FieldPtr make_sin_field(int n, std::vector<double> scales) {
  return std::make_shared<SinField>(n, std::move(scales));
}
FieldPtr make_cutoff_sin_field(int n, double radius) {
  return std::make_shared<CutoffSinField>(n, radius);
}

FieldPtr make_field(const std::string& kind, int components,
                    const std::vector<double>& params) {
  if (kind == "zero") return make_zero_field(components);
  if (kind == "additive")
    return make_additive_field(components, params.empty() ? 1.0 : params[0]);
  if (kind == "linear") {
    std::vector<double> c(params);
    if (c.empty()) c.assign(components, 0.5);
    c.resize(components, c.back());
    return make_linear_field(std::move(c));
  }
  if (kind == "sin") return make_sin_field(components, params);
  if (kind == "cutoff_sin")
    return make_cutoff_sin_field(components, params.empty() ? 2.0 : params[0]);
  throw std::invalid_argument("make_field: unknown kind '" + kind + "'");
}

GridFunction f_eval(const Nonlinearity& f, int i, const GridFunction& phi, int m) {
  if (i < 0 || i >= f.components())
    throw std::invalid_argument("f_eval: component out of range");
  if (!phi.is_real())
    throw std::invalid_argument("f_eval: field must be real-valued");
  const auto& g = *phi.grid();
  std::vector<std::complex<double>> out(g.phys_size());
  double xi[2] = {0.0, 0.0};
  for (std::size_t p = 0; p < out.size(); ++p) {
    g.coords(p, xi);
    out[p] = f.sigma(i, xi, phi.physical()[p].real(), m);
  }
  return GridFunction::from_physical(phi.grid(), std::move(out));
}

RegularityAuditReport regularity_audit(const Nonlinearity& f, int k,
                                       const SpectralGrid& grid, double eta_range,
                                       int eta_samples) {
  RegularityAuditReport rep;
  rep.oracle_only = f.oracle_only();
  rep.eta_derivative_sup.assign(k + 1, 0.0);
  rep.mixed_derivative_sup.assign(k, 0.0);
  std::vector<double> sup_wide(k + 1, 0.0);  // sup over a doubled eta window
  double xi[2] = {0.0, 0.0};
  const double pi = std::numbers::pi;
  for (std::size_t p = 0; p < grid.phys_size(); ++p) {
    grid.coords(p, xi);
    bool outside =
        f.cutoff_radius() > 0 && std::abs(xi[0] - pi) > f.cutoff_radius();
    for (int e = 0; e < eta_samples; ++e) {
      double eta = -eta_range + 2.0 * eta_range * e / (eta_samples - 1);
      for (int i = 0; i < f.components(); ++i) {
        for (int m = 0; m <= k; ++m) {
          double v = std::abs(f.sigma(i, xi, eta, m));
          double w = std::abs(f.sigma(i, xi, 2.0 * eta, m));
          rep.eta_derivative_sup[m] = std::max(rep.eta_derivative_sup[m], v);
          sup_wide[m] = std::max(sup_wide[m], w);
          if (outside && (v != 0.0 || w != 0.0)) rep.support_ok = false;
        }
        for (int m = 0; m < k; ++m)
          for (int axis = 0; axis < grid.dim; ++axis)
            rep.mixed_derivative_sup[m] =
                std::max(rep.mixed_derivative_sup[m],
                         std::abs(f.sigma_xi(i, xi, eta, m, axis)));
      }
    }
  }
  // Bounded means the sampled sups stop growing when the eta window doubles.
  for (int m = 0; m <= k; ++m) {
    rep.bound_used = std::max(rep.bound_used, sup_wide[m]);
    if (!std::isfinite(sup_wide[m]) ||
        sup_wide[m] > 1.05 * rep.eta_derivative_sup[m] + 1e-12)
      rep.bounded = false;
  }
  return rep;
}

}  // namespace rheat
