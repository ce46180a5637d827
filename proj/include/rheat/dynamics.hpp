#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rheat/algebra.hpp"
#include "rheat/convrp.hpp"
#include "rheat/nonlinearity.hpp"
#include "rheat/spectral.hpp"

namespace rheat {

enum class Scheme { kYoungEuler, kRough2, kRough2Regularized, kRough3 };

Scheme scheme_from_string(const std::string& name);
std::string scheme_name(Scheme s);

struct SolverConfig {
  Scheme scheme = Scheme::kYoungEuler;
  std::size_t coarse_cells = 16;
  double kappa = 0.35;   // diagnostics exponent
  double alpha = 0.25;   // diagnostics space index
  int p = 2;             // diagnostics integrability
  double epsilon = 0.0;  // smoothing strength; required > 0 by the
                         // regularized scheme
  bool include_xa = true;
  double blowup_factor = 1e6;
  // Picard settings
  int picard_max_iter = 30;
  double picard_tol = 1e-10;
  int picard_max_bisections = 6;
};

/// A solution trajectory with its controlled decomposition: the state y per
/// node, the first-order derivative fields y^x (one per noise component)
/// and, in third-order mode, the second-order fields y^xx.
struct ControlledPath {
  TimeGrid grid;                     // coarse grid
  std::vector<std::size_t> fine_index;  // coarse node -> fine-grid index
  std::vector<GridFunction> y;
  std::vector<std::vector<GridFunction>> y_x;   // [node][i]
  std::vector<std::vector<GridFunction>> y_xx;  // [node][i*N+j], order-3 mode
};

struct SolveReport {
  ControlledPath trajectory;
  std::vector<double> step_l2;  // ||y_k||_{L^2} per node
  bool blew_up = false;
  double blowup_time = -1.0;
  double wall_seconds = 0.0;
  SolverConfig config;
};

// --- single steps over one coarse interval [fs, ft] (fine indices) ---------

GridFunction step_young(const GridFunction& y, std::size_t fs, std::size_t ft,
                        const ConvolutionalRoughPath& crp, const Nonlinearity& f);

GridFunction step_rough2(const GridFunction& y, std::size_t fs, std::size_t ft,
                         const ConvolutionalRoughPath& crp, const Nonlinearity& f,
                         bool include_xa);

GridFunction step_regularized(const GridFunction& y, std::size_t fs, std::size_t ft,
                              const ConvolutionalRoughPath& crp,
                              const Nonlinearity& f, double epsilon);

GridFunction step_rough3(const GridFunction& y, std::size_t fs, std::size_t ft,
                         const ConvolutionalRoughPath& crp, const Nonlinearity& f,
                         bool include_xa);

/// Iterates the configured step over a coarse grid that must be a
/// subsequence of the signal's fine grid. Deterministic; records the
/// controlled decomposition along the way. Blow-up (norm above
/// blowup_factor x initial) stops the run and is reported, not thrown.
SolveReport solve(const SolverConfig& config, const GridFunction& psi,
                  const ConvolutionalRoughPath& crp, const Nonlinearity& f);

// --- fixed-point route -------------------------------------------------------

struct PicardInterval {
  double t_begin = 0.0, t_end = 0.0;
  int iterations = 0;
  double contraction_factor = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

struct PicardReport {
  ControlledPath trajectory;  // on the fine grid of [0, t_end]
  std::vector<PicardInterval> intervals;
  bool converged = false;
  SewReport terminal_sew;  // certification of the last interval's increment
  double wall_seconds = 0.0;
};

/// Iterates the integral map on the fine grid of [0, t_end]: each iterate
/// maps a trajectory to the compensated-sum primitive of its scheme
/// increment (the full-depth sewing limit). When an interval fails to
/// contract, it is bisected and the solution restarts from the terminal
/// value of the left half.
PicardReport picard_solve(const SolverConfig& config, const GridFunction& psi,
                          const ConvolutionalRoughPath& crp, const Nonlinearity& f,
                          std::size_t t_end_fine_index);

// --- diagnostics ---------------------------------------------------------------

struct RemainderAuditReport {
  double sharp_exponent = std::numeric_limits<double>::quiet_NaN();
  double sharp_norm_at_2kappa = std::numeric_limits<double>::quiet_NaN();
  double gubinelli_exponent = std::numeric_limits<double>::quiet_NaN();
  double kappa = 0.0;
};

/// Measures the Hoelder exponent of the controlled remainder
/// y^sharp_{ts} = (twisted increment of y) - X^x y^x_s [- X^xx y^xx_s]
/// and, in order-3 mode, of the derivative remainder
/// y^{x,sharp,i}_{ts} = (delta y^{x,i})_{ts} - dx^j_{ts} y^{xx,ji}_s.
RemainderAuditReport controlled_remainder_audit(const ControlledPath& path,
                                                const ConvolutionalRoughPath& crp,
                                                double kappa);

/// Exact mild solution for the commuting linear flow f_i(phi) = c_i phi:
/// y_t = exp(sum_i c_i dx^i_{[0,t]}) S_t psi.
GridFunction commuting_flow_oracle(const RoughSignal& sig,
                                   const std::vector<double>& coeffs,
                                   const GridFunction& psi, std::size_t t_fine);

/// Exact mild solution for constant fields f_i = g_i:
/// y_t = S_t psi + sum_i X^{x,i}_{[0,t]}(g_i).
GridFunction additive_oracle(const ConvolutionalRoughPath& crp,
                             const std::vector<GridFunction>& g,
                             const GridFunction& psi, std::size_t t_fine);

}  // namespace rheat
