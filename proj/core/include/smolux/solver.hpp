#ifndef SMOLUX_SOLVER_HPP_
#define SMOLUX_SOLVER_HPP_

#include <optional>
#include <vector>

#include "smolux/dynamics.hpp"
#include "smolux/feynman_kac.hpp"
#include "smolux/kernel_field.hpp"
#include "smolux/reaction.hpp"

namespace smolux {

// Density fields along an increasing time grid starting at 0. norms caches
// the sup-over-sites, sup-over-bins absolute density at each node, the norm
// every a-priori estimate is stated in.
struct Trajectory {
  std::vector<double> times;
  std::vector<KernelField> fields;
  std::vector<double> norms;
};

// Comparison curve dominating the norm of the solution. The quadratic mode
// solves z' = -eps z + M(C/2 + m) z^2 in closed form
//     z(t) = eps / (a + ((eps - a z0)/z0) e^{eps t}),   a = M(C/2 + m),
// which decays whenever z0 < eps/a and blows up at a finite pole otherwise.
// The multi mode integrates z' = -eps z + M(e^{Cz} - 1 - Cz) + z(e^{mz} - 1),
// the curve matching a whole family of simultaneous coagulations, by RK4.
class BoundCurve {
 public:
  enum class Mode { kQuadratic, kMulti };

  static BoundCurve quadratic(double eps, double M, double C, double m,
                              double z0);
  static BoundCurve multi(double eps, double M, double C, double m, double z0);

  double value(double t) const;  // +inf at and beyond the pole
  // first time the curve leaves every bounded set; +inf for global curves
  double pole_time() const;

  Mode mode() const { return mode_; }
  double eps() const { return eps_; }
  double bound_M() const { return M_; }
  double conv_C() const { return C_; }
  double mass_m() const { return m_; }
  double z0() const { return z0_; }
  double coefficient() const { return M_ * (C_ / 2.0 + m_); }

 private:
  BoundCurve(Mode mode, double eps, double M, double C, double m, double z0);
  Mode mode_;
  double eps_, M_, C_, m_, z0_;
};

// Largest initial norm with a globally decaying quadratic curve.
double global_threshold(double eps, double M, double C, double m);

enum class SolverMode { kGlobalPicard, kStepwiseMild };

struct SolverConfig {
  SolverMode mode = SolverMode::kGlobalPicard;
  double dt_quad = 0.05;    // node spacing of the s-quadrature grid
  double picard_tol = 1e-8; // absolute sup-over-nodes field-norm tolerance
  int max_sweeps = 12;
  int max_halvings = 8;     // continuation depth before giving up
  McConfig mc;
  // loss-compensation shift of the positivity-preserving scheme; when unset
  // solve_positive sizes it from the loss-rate bound at the curve maximum
  std::optional<double> positivity_alpha;
  // certified divergence floor, used only to size the automatic shift above
  std::optional<double> decay_eps;
};

struct ConvergenceReport {
  struct SweepRow {
    int sweep = 0;
    double delta_norm = 0.0;
    double contraction_rho = 0.0;  // 0 on the first sweep of a window
  };
  struct Window {
    int lo = 0;  // node range (lo, hi]
    int hi = 0;
    int sweeps = 0;
    double last_delta = 0.0;
    double last_rho = 0.0;
    int halvings = 0;
  };
  std::vector<SweepRow> sweeps;
  std::vector<Window> windows;
  bool converged = true;
  double residual = 0.0;  // worst post-hoc |F(mu) - mu| over windows
  double t_loc = 0.0;     // initial window length
  double alpha = 0.0;     // loss shift actually used
};

struct SolveResult {
  Trajectory trajectory;
  ConvergenceReport report;
};

// One fixed-point sweep on the trajectory's own grid: node j receives the
// transported initial field plus the left-rectangle quadrature of the
// transported reaction over earlier nodes. Common random numbers: the
// simulation seed depends on the node pair only, never on the sweep.
Trajectory picard_step(const Trajectory& current, const KernelField& mu0,
                       const DynamicsModel& dyn, const ReactionModel& rxn,
                       const SolverConfig& cfg);

// Fixed point of the mild equation on [0, T]. Global mode iterates
// picard_step on continuation windows sized by the local Lipschitz estimate,
// halving a window whenever the sweep-to-sweep change stalls; stepwise mode
// marches mu_{j+1} = P_dt(mu_j + dt * reaction(mu_j)) node by node.
SolveResult solve(const KernelField& mu0, const DynamicsModel& dyn,
                  const ReactionModel& rxn, const SolverConfig& cfg, double T);

// Same fixed point computed with the loss-compensated integrand
// gain + (alpha - loss) f, whose every quadrature term is nonnegative while
// alpha dominates the loss rate; preserves nonnegativity of mu0 up to
// interpolation error. alpha = 0 reproduces solve bit for bit.
SolveResult solve_positive(const KernelField& mu0, const DynamicsModel& dyn,
                           const ReactionModel& rxn, const SolverConfig& cfg,
                           double T);

struct BoundReport {
  struct Row {
    double t = 0.0;
    double norm = 0.0;
    double z_bound = 0.0;
    double margin = 0.0;  // allowance + bound - norm
    bool pass = false;
  };
  std::vector<Row> rows;
  bool pass = true;
  double worst_margin = 0.0;
  double horizon = 0.0;    // pole time of the curve; +inf when global
  bool truncated = false;  // nodes at or beyond the pole were skipped
};

// Node-by-node comparison of trajectory norms against the curve, with a
// multiplicative mc_margin for sampling noise and an additive left-rule
// quadrature allowance dt * a * z0^2.
BoundReport validate_bound(const Trajectory& traj, const BoundCurve& curve,
                           double mc_margin);

// Spatially homogeneous reference: the bin densities form a closed ODE
// system c' = reaction(c), integrated by classic fourth-order Runge-Kutta.
struct HomogeneousTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};
HomogeneousTrajectory reference_homogeneous_solve(const std::vector<double>& c0,
                                                  const ReactionModel& rxn,
                                                  const BaseMeasure& base,
                                                  double T, double dt);

}  // namespace smolux

#endif  // SMOLUX_SOLVER_HPP_
