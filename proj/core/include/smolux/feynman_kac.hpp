#ifndef SMOLUX_FEYNMAN_KAC_HPP_
#define SMOLUX_FEYNMAN_KAC_HPP_

#include <cstdint>
#include <vector>

#include "smolux/dynamics.hpp"
#include "smolux/kernel_field.hpp"

namespace smolux {

struct McConfig {
  int n_paths = 256;
  double dt = 1e-2;
  std::uint64_t seed = 0;
  bool antithetic = false;
  QuadratureRule quad = QuadratureRule::kLeft;
};

// Transport step: f'(x;y) = E[ exp(-int_0^t div b along the path) *
// f(path endpoint; y) ], estimated over n_paths characteristics per
// (site, mass) pair. Streams are derived from (seed, site, mass, path), so
// the result is independent of the parallel schedule and identical seeds
// reuse identical paths (the common-random-numbers contract the fixed-point
// solver relies on). t = 0 returns the field unchanged.
KernelField apply_semigroup(const DynamicsModel& model,
                            const KernelField& field, double t,
                            const McConfig& cfg);

// Same estimator, also returning the per-entry standard error of the mean.
struct SemigroupStats {
  KernelField mean;
  KernelField std_error;
  SemigroupStats(KernelField m, KernelField s)
      : mean(std::move(m)), std_error(std::move(s)) {}
};
SemigroupStats apply_semigroup_stats(const DynamicsModel& model,
                                     const KernelField& field, double t,
                                     const McConfig& cfg);

// Exact transport for constant sigma and drift A x + c with diagonal A: the
// endpoint law is Gaussian with closed-form mean and covariance and the
// weight is exp(-t tr A), so the expectation reduces to tensorized
// Gauss-Hermite quadrature against the interpolated field. Validation
// oracle for the Monte Carlo estimator.
KernelField analytic_semigroup_linear(const DynamicsModel& model,
                                      const KernelField& field, double t,
                                      int quadrature_order);

// norm(transported field) against exp(-eps t) * norm(field). When the
// divergence floor certifies, every path weight is <= exp(-eps t) and the
// inequality holds by construction; the 3-standard-error slack only covers
// the estimator noise at the arg-max entry.
struct DecayReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double se_argmax = 0.0;
  double margin = 0.0;  // rhs + 3 se - lhs
  bool pass = false;
};
DecayReport decay_check(const DynamicsModel& model, const KernelField& field,
                        double t, const McConfig& cfg);

// Small-time continuity of the transport step: reports d(t) = norm(P_t f - f)
// on a decreasing t-sequence and fits the envelope q sqrt(t) + c t (the
// diffusive displacement plus the weight's linear term). PASS when every
// point is dominated by the fitted envelope with 25% headroom plus its
// Monte Carlo slack.
struct ContinuityPoint {
  double t = 0.0;
  double diff = 0.0;
  double se = 0.0;
  double envelope = 0.0;
};
struct ContinuityReport {
  std::vector<ContinuityPoint> points;
  double coef_sqrt = 0.0;
  double coef_lin = 0.0;
  bool pass = false;
};
ContinuityReport continuity_check(const DynamicsModel& model,
                                  const KernelField& field,
                                  const std::vector<double>& t_sequence,
                                  const McConfig& cfg);

}  // namespace smolux

#endif  // SMOLUX_FEYNMAN_KAC_HPP_
