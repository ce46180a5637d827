#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rheat/spectral.hpp"

namespace rheat {

/// Composition vector fields f_i(phi)(xi) = sigma_i(xi, phi(xi)) with the
/// state derivatives needed by the schemes (up to order 4) and the mixed
/// xi-derivatives used by the regularity audit (up to order 3).
class Nonlinearity {
 public:
  virtual ~Nonlinearity() = default;

  virtual int components() const = 0;
  /// Declared regularity class k (how many bounded eta-derivatives).
  virtual int regularity_class() const = 0;
  /// Set for fields that violate the boundedness clauses (linear, additive
  /// with unbounded growth); admitted for oracle runs only.
  virtual bool oracle_only() const = 0;
  /// Support radius in xi around the torus midpoint; < 0 means none declared.
  virtual double cutoff_radius() const { return -1.0; }

  /// m-th eta-derivative of sigma_i at (xi, eta), m <= 4.
  virtual double sigma(int i, const double* xi, double eta, int m) const = 0;
  /// d/d xi_axis of the m-th eta-derivative, m <= 3.
  virtual double sigma_xi(int i, const double* xi, double eta, int m,
                          int axis) const = 0;
};

using FieldPtr = std::shared_ptr<const Nonlinearity>;

/// sigma_i = 0.
FieldPtr make_zero_field(int components);
/// sigma_i(xi, eta) = amplitude * cos((i+1) xi_1): constant in eta.
FieldPtr make_additive_field(int components, double amplitude = 1.0);
/// sigma_i(xi, eta) = c_i eta (oracle-only).
FieldPtr make_linear_field(std::vector<double> coeffs);
/// sigma_i(xi, eta) = scale_i * sin(eta + i pi/2): bounded with unit
/// derivative sups when scale_i = 1.
FieldPtr make_sin_field(int components, std::vector<double> scales = {});
/// Smooth bump cutoff chi_M around xi_1 = pi times sin(eta + i pi/2).
FieldPtr make_cutoff_sin_field(int components, double radius);

FieldPtr make_field(const std::string& kind, int components,
                    const std::vector<double>& params);

/// Pointwise composition on the physical grid; m counts eta-derivatives
/// (0 -> f, 1 -> f', 2 -> f'').  phi must be real-valued.
GridFunction f_eval(const Nonlinearity& f, int i, const GridFunction& phi,
                    int m = 0);

struct RegularityAuditReport {
  std::vector<double> eta_derivative_sup;  // order 0..k
  std::vector<double> mixed_derivative_sup;  // order 0..k-1
  bool bounded = true;        // sups finite and below the declared class bound
  bool support_ok = true;     // cutoff honored when declared
  bool oracle_only = false;
  double bound_used = 0.0;
};

/// Samples derivative sups on a (xi, eta) lattice and verifies the cutoff.
RegularityAuditReport regularity_audit(const Nonlinearity& f, int k,
                                       const SpectralGrid& grid,
                                       double eta_range = 4.0,
                                       int eta_samples = 41);

}  // namespace rheat
