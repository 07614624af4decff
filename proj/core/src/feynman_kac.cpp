#include "smolux/feynman_kac.hpp"

#include <cassert>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "smolux/errors.hpp"
#include "smolux/gauss_hermite.hpp"
#include "smolux/parallel.hpp"

namespace smolux {

namespace {

void check_shapes(const DynamicsModel& model, const KernelField& field) {
  if (model.dim() != field.grid().dim)
    throw ConfigError("apply_semigroup: model and field dimensions differ");
}

}  // namespace

SemigroupStats apply_semigroup_stats(const DynamicsModel& model,
                                     const KernelField& field, double t,
                                     const McConfig& cfg) {
  check_shapes(model, field);
  if (t < 0.0) throw ConfigError("apply_semigroup: negative horizon");
  if (cfg.n_paths < 1) throw ConfigError("apply_semigroup: n_paths must be >= 1");
  KernelField mean = field;
  KernelField se(field.grid(), field.base(), 0.0);
  if (t == 0.0) return SemigroupStats(std::move(mean), std::move(se));

  const int n_mass = field.n_mass();
  const int n_paths = cfg.n_paths;
  const double weight_cap =
      std::exp(-(model.eps_floor() - 1e-9) * t) * (1.0 + 1e-12);
  parallel_for(field.n_sites(), [&](std::size_t site) {
    const std::array<double, 3> x0 = field.node_position(site);
    for (int k = 0; k < n_mass; ++k) {
      const double y = field.base().grid().mass(k + 1);
      double sum = 0.0;
      double sumsq = 0.0;
      for (int p = 0; p < n_paths; ++p) {
        const std::uint32_t stream_path =
            cfg.antithetic ? static_cast<std::uint32_t>(p / 2)
                           : static_cast<std::uint32_t>(p);
        const double sign = cfg.antithetic && (p & 1) ? -1.0 : 1.0;
        GaussianStream stream(cfg.seed, static_cast<std::uint32_t>(site),
                              static_cast<std::uint32_t>(k), stream_path,
                              sign);
        const PathSample path =
            simulate_path(model, x0, y, t, cfg.dt, stream, cfg.quad);
        assert(path.weight <= weight_cap);
        (void)weight_cap;
        const double v = path.weight * field.eval(path.endpoint, k);
        sum += v;
        sumsq += v * v;
      }
      const double m = sum / n_paths;
      mean.at(site, k) = m;
      if (n_paths > 1) {
        double var = (sumsq - n_paths * m * m) / (n_paths - 1);
        if (var < 0.0) var = 0.0;
        se.at(site, k) = std::sqrt(var / n_paths);
      }
    }
  });
  return SemigroupStats(std::move(mean), std::move(se));
}

KernelField apply_semigroup(const DynamicsModel& model,
                            const KernelField& field, double t,
                            const McConfig& cfg) {
  return apply_semigroup_stats(model, field, t, cfg).mean;
}

KernelField analytic_semigroup_linear(const DynamicsModel& model,
                                      const KernelField& field, double t,
                                      int quadrature_order) {
  check_shapes(model, field);
  if (!model.sigma_constant() || !model.drift_affine())
    throw ConfigError(
        "analytic_semigroup_linear: needs constant sigma and affine drift");
  const int n = model.dim();
  const auto& A = model.drift_matrix();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && A[i * n + j] != 0.0)
        throw ConfigError(
            "analytic_semigroup_linear: drift matrix must be diagonal");
  if (t < 0.0) throw ConfigError("analytic_semigroup_linear: negative horizon");
  if (t == 0.0) return field;

  // endpoint law: mean_i = e^{a_i t} x_i + c_i (e^{a_i t} - 1)/a_i,
  // cov_ij = Q_ij (e^{(a_i+a_j)t} - 1)/(a_i+a_j) with Q = sigma sigma^T
  auto expm1_over = [](double s, double tt) {
    return s == 0.0 ? tt : std::expm1(s * tt) / s;
  };
  double a[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) a[i] = A[i * n + i];
  const auto sig = model.sigma_matrix();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = sig[i * n + j];
  Eigen::MatrixXd Q = S * S.transpose();
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cov(i, j) = Q(i, j) * expm1_over(a[i] + a[j], t);
  // PSD square root via eigendecomposition: robust when sigma is singular
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double lam = es.eigenvalues()(j);
    const double root = lam > 0.0 ? std::sqrt(lam) : 0.0;
    for (int i = 0; i < n; ++i) L(i, j) = es.eigenvectors()(i, j) * root;
  }

  const GaussHermite gh = gauss_hermite(quadrature_order);
  const double weight = std::exp(-t * model.trace_drift_matrix());
  const double norm_const = std::pow(3.14159265358979323846, -0.5 * n);
  const double root2 = std::sqrt(2.0);

  std::size_t n_combos = 1;
  for (int i = 0; i < n; ++i) n_combos *= gh.nodes.size();

  KernelField out(field.grid(), field.base(), 0.0);
  const int n_mass = field.n_mass();
  parallel_for(field.n_sites(), [&](std::size_t site) {
    const std::array<double, 3> x = field.node_position(site);
    std::array<double, 3> mu = {0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      const double grow = std::exp(a[i] * t);
      mu[i] = grow * x[i] + model.drift_offset()[i] * expm1_over(a[i], t);
    }
    for (std::size_t combo = 0; combo < n_combos; ++combo) {
      std::size_t rest = combo;
      double w = 1.0;
      double z[3] = {0.0, 0.0, 0.0};
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = rest % gh.nodes.size();
        rest /= gh.nodes.size();
        w *= gh.weights[idx];
        z[i] = gh.nodes[idx];
      }
      std::array<double, 3> pt = mu;
      for (int i = 0; i < n; ++i) {
        double shift = 0.0;
        for (int j = 0; j < n; ++j) shift += L(i, j) * z[j];
        pt[i] += root2 * shift;
      }
      for (int k = 0; k < n_mass; ++k)
        out.at(site, k) += w * field.eval(pt, k);
    }
    for (int k = 0; k < n_mass; ++k)
      out.at(site, k) *= weight * norm_const;
  });
  return out;
}

DecayReport decay_check(const DynamicsModel& model, const KernelField& field,
                        double t, const McConfig& cfg) {
  DecayReport rep;
  const SemigroupStats stats = apply_semigroup_stats(model, field, t, cfg);
  std::size_t argmax = 0;
  double lhs = 0.0;
  for (std::size_t i = 0; i < stats.mean.values().size(); ++i) {
    const double a = std::abs(stats.mean.values()[i]);
    if (a > lhs) {
      lhs = a;
      argmax = i;
    }
  }
  rep.lhs = lhs;
  rep.rhs = std::exp(-model.eps_floor() * t) * norm(field);
  rep.se_argmax = stats.std_error.values().empty()
                      ? 0.0
                      : stats.std_error.values()[argmax];
  rep.margin = rep.rhs + 3.0 * rep.se_argmax - rep.lhs;
  // When div b is exactly the floor the inequality is an equality and the
  // statistical slack collapses to zero, so roundoff in the accumulated
  // weight exponent needs its own allowance.
  rep.pass = rep.margin >= -1e-12 * std::max(1.0, rep.rhs);
  return rep;
}

ContinuityReport continuity_check(const DynamicsModel& model,
                                  const KernelField& field,
                                  const std::vector<double>& t_sequence,
                                  const McConfig& cfg) {
  for (std::size_t i = 1; i < t_sequence.size(); ++i)
    if (!(t_sequence[i] < t_sequence[i - 1]))
      throw ConfigError("continuity_check: t-sequence must decrease");
  ContinuityReport rep;
  for (double t : t_sequence) {
    ContinuityPoint pt;
    pt.t = t;
    if (t == 0.0) {
      rep.points.push_back(pt);  // identity: difference exactly 0
      continue;
    }
    const SemigroupStats stats = apply_semigroup_stats(model, field, t, cfg);
    double diff = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < stats.mean.values().size(); ++i) {
      const double d = std::abs(stats.mean.values()[i] - field.values()[i]);
      if (d > diff) {
        diff = d;
        argmax = i;
      }
    }
    pt.diff = diff;
    pt.se = stats.std_error.values()[argmax];
    rep.points.push_back(pt);
  }
  // least squares of diff on {sqrt(t), t} over the positive-t points
  double s11 = 0.0, s12 = 0.0, s22 = 0.0, b1 = 0.0, b2 = 0.0;
  for (const auto& pt : rep.points) {
    if (pt.t == 0.0) continue;
    const double r = std::sqrt(pt.t);
    s11 += r * r;
    s12 += r * pt.t;
    s22 += pt.t * pt.t;
    b1 += r * pt.diff;
    b2 += pt.t * pt.diff;
  }
  const double det = s11 * s22 - s12 * s12;
  if (std::abs(det) > 1e-30) {
    rep.coef_sqrt = (b1 * s22 - b2 * s12) / det;
    rep.coef_lin = (s11 * b2 - s12 * b1) / det;
  } else if (s11 > 0.0) {
    rep.coef_sqrt = b1 / s11;
    rep.coef_lin = 0.0;
  }
  // the data is nonnegative; a negative fitted coefficient is noise
  if (rep.coef_sqrt < 0.0) rep.coef_sqrt = 0.0;
  if (rep.coef_lin < 0.0) rep.coef_lin = 0.0;
  rep.pass = true;
  for (auto& pt : rep.points) {
    pt.envelope = 1.25 * (rep.coef_sqrt * std::sqrt(pt.t) +
                          rep.coef_lin * pt.t);
    if (pt.diff > pt.envelope + 3.0 * pt.se + 1e-12) rep.pass = false;
  }
  return rep;
}

}  // namespace smolux
