#ifndef SMOLUX_DYNAMICS_HPP_
#define SMOLUX_DYNAMICS_HPP_

#include <array>
#include <string>
#include <vector>

#include "smolux/kernel_field.hpp"
#include "smolux/mass_measure.hpp"
#include "smolux/philox.hpp"

namespace smolux {

// Diffusion coefficient catalogue. Families are declarative so scenarios
// stay serializable and certifiable; the sine family modulates the diagonal
// entries in space, sigma_ii(x) = diag_i + amp*sin(freq*x_i).
struct SigmaSpec {
  enum class Family { kZero, kConstantIso, kConstantDiag, kDiagSine };
  Family family = Family::kZero;
  std::array<double, 3> diag = {0.0, 0.0, 0.0};
  double sine_amp = 0.0;
  double sine_freq = 0.0;
};

// Drift catalogue. Every family normalizes to b(x) = A x + c plus an
// optional separable sine term amp*sin(freq*x_i) on each axis, so
// div b = tr A + amp*freq*sum_i cos(freq*x_i).
struct DriftSpec {
  enum class Family { kZero, kConstant, kLinear, kRadial, kShear, kRadialSine };
  Family family = Family::kZero;
  std::array<double, 9> matrix = {};   // row-major dim x dim
  std::array<double, 3> offset = {};
  double sine_amp = 0.0;
  double sine_freq = 0.0;
};

enum class QuadratureRule { kLeft, kTrapezoid };

// Transport coefficients with their declared certificates: eps_floor is the
// divergence lower bound driving the semigroup decay, [ellip_alpha,
// ellip_beta] the declared eigenvalue window of a = sigma sigma^T.
class DynamicsModel {
 public:
  DynamicsModel(int dim, SigmaSpec sigma, DriftSpec drift, double eps_floor,
                double ellip_alpha, double ellip_beta);

  int dim() const { return dim_; }
  double eps_floor() const { return eps_floor_; }
  double ellip_alpha() const { return ellip_alpha_; }
  double ellip_beta() const { return ellip_beta_; }

  // out is row-major dim x dim
  void sigma(const std::array<double, 3>& x, double y, double* out) const;
  void drift(const std::array<double, 3>& x, double y,
             std::array<double, 3>& out) const;
  double div_drift(const std::array<double, 3>& x, double y) const;

  bool sigma_zero() const;
  bool sigma_constant() const { return sigma_.sine_amp == 0.0; }
  bool drift_affine() const { return drift_.sine_amp == 0.0; }
  const std::array<double, 9>& drift_matrix() const { return drift_.matrix; }
  const std::array<double, 3>& drift_offset() const { return drift_.offset; }
  double trace_drift_matrix() const;
  std::array<double, 9> sigma_matrix() const;  // requires sigma_constant()

  std::string to_json() const;
  static DynamicsModel from_json(const std::string& text);

 private:
  int dim_;
  SigmaSpec sigma_;
  DriftSpec drift_;
  double eps_floor_;
  double ellip_alpha_;
  double ellip_beta_;
};

// One simulated characteristic: the terminal point of the flow, the running
// divergence integral along it, and the resulting transport weight.
struct PathSample {
  std::array<double, 3> endpoint = {0.0, 0.0, 0.0};
  double div_integral = 0.0;
  double weight = 1.0;  // exp(-div_integral)
};

// Euler-Maruyama with fixed step dt (trailing partial step when t/dt is not
// integral); the mass coordinate stays frozen. The divergence integral uses
// the left-point rule by default, matching the order of the path scheme.
PathSample simulate_path(const DynamicsModel& model,
                         const std::array<double, 3>& x0, double y, double t,
                         double dt, GaussianStream& stream,
                         QuadratureRule quad = QuadratureRule::kLeft);

// Classic 4th-order one-step integration of the noiseless flow together
// with the divergence quadrature at the same internal nodes. This is the
// reference for the pure-convection solution, so it insists on sigma == 0.
PathSample deterministic_flow(const DynamicsModel& model,
                              const std::array<double, 3>& x0, double y,
                              double t, double dt);

struct SamplePoint {
  std::array<double, 3> x = {0.0, 0.0, 0.0};
  double y = 0.0;
};

// Grid nodes crossed with a mass-bin subsample (stride n_mass/8).
std::vector<SamplePoint> certification_samples(const SpatialGrid& grid,
                                               const BaseMeasure& base);

struct DivergenceReport {
  double min_div = 0.0;
  SamplePoint arg_min;
  double floor = 0.0;
  bool pass = false;
};

struct EllipticityReport {
  double min_eig = 0.0;
  double max_eig = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool pass = false;
};

DivergenceReport certify_divergence_bound(
    const DynamicsModel& model, const std::vector<SamplePoint>& samples);
EllipticityReport certify_ellipticity(const DynamicsModel& model,
                                      const std::vector<SamplePoint>& samples);

}  // namespace smolux

#endif  // SMOLUX_DYNAMICS_HPP_
