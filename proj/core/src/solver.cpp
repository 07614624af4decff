#include "smolux/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "smolux/errors.hpp"
#include "smolux/philox.hpp"

namespace smolux {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double multi_rhs(double z, double eps, double M, double C, double m) {
  return -eps * z + M * (std::expm1(C * z) - C * z) + z * std::expm1(m * z);
}

// transport seed for node j of the window starting at lo
std::uint64_t transport_seed(std::uint64_t master, int j, int lo) {
  return derive_seed(master, static_cast<std::uint64_t>(j),
                     static_cast<std::uint64_t>(lo));
}

// reaction-term seed for the (target j, source l) pair; sweep-independent
std::uint64_t reaction_seed(std::uint64_t master, int j, int l) {
  return derive_seed(master,
                     (std::uint64_t{1} << 32) | static_cast<std::uint64_t>(j),
                     static_cast<std::uint64_t>(l));
}

std::uint64_t stepwise_seed(std::uint64_t master, int j) {
  return derive_seed(master,
                     (std::uint64_t{2} << 32) | static_cast<std::uint64_t>(j),
                     0);
}

// gain + (alpha - loss) f, the loss-compensated integrand. With the guard
// on, a negative bracket against a positive entry means alpha was sized
// below the realized loss rate.
KernelField loss_shifted_reaction(const KernelField& f,
                                  const ReactionModel& rxn, double alpha,
                                  bool guard) {
  KernelField out(f.grid(), f.base());
  const int n = f.n_mass();
  std::vector<double> row(n);
  for (std::size_t site = 0; site < f.n_sites(); ++site) {
    for (int k = 0; k < n; ++k) row[k] = f.at(site, k);
    ReactionModel::Parts parts = rxn.parts_row(row, f.base());
    for (int k = 0; k < n; ++k) {
      const double bracket = alpha - parts.loss_rate[k];
      if (guard && bracket < 0.0 && row[k] > 0.0) {
        throw ConfigError(
            "positivity shift is below the loss rate at site " +
            std::to_string(site) + ", bin " + std::to_string(k + 1) +
            "; raise positivity_alpha");
      }
      out.at(site, k) = parts.gain[k] + bracket * row[k];
    }
  }
  return out;
}

double max_diff_norm(const std::vector<KernelField>& a,
                     const std::vector<KernelField>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::vector<double>& av = a[i].values();
    const std::vector<double>& bv = b[i].values();
    for (std::size_t k = 0; k < av.size(); ++k) {
      m = std::max(m, std::abs(av[k] - bv[k]));
    }
  }
  return m;
}

struct WindowCtx {
  const std::vector<double>& times;
  int lo;
  int hi;
  const KernelField& mu_lo;
  const DynamicsModel& dyn;
  const ReactionModel& rxn;
  const McConfig& mc;
  double alpha;
  bool guard;
};

// transported initial field for nodes lo+1..hi; identical across sweeps
// because the seed depends on the node pair only
std::vector<KernelField> transport_terms(const WindowCtx& w) {
  std::vector<KernelField> out;
  out.reserve(w.hi - w.lo);
  for (int j = w.lo + 1; j <= w.hi; ++j) {
    McConfig mc = w.mc;
    mc.seed = transport_seed(w.mc.seed, j, w.lo);
    const double tau = w.times[j] - w.times[w.lo];
    KernelField g = apply_semigroup(w.dyn, w.mu_lo, tau, mc);
    if (w.alpha != 0.0) g = scale(std::exp(-w.alpha * tau), g);
    out.push_back(std::move(g));
  }
  return out;
}

// one fixed-point sweep: node j gets the transported initial plus the
// left-rectangle quadrature of the transported reaction over nodes < j.
// src_lo is the reaction source at the window's first node; cur[i] holds
// the iterate at node lo+1+i.
std::vector<KernelField> sweep_once(const WindowCtx& w,
                                    const std::vector<KernelField>& transport,
                                    const KernelField& src_lo,
                                    const std::vector<KernelField>& cur) {
  std::vector<KernelField> react;
  react.reserve(w.hi - w.lo);
  for (int l = w.lo; l < w.hi; ++l) {
    const KernelField& fl = (l == w.lo) ? src_lo : cur[l - w.lo - 1];
    react.push_back(loss_shifted_reaction(fl, w.rxn, w.alpha, w.guard));
  }
  std::vector<KernelField> next;
  next.reserve(w.hi - w.lo);
  for (int j = w.lo + 1; j <= w.hi; ++j) {
    KernelField acc = transport[j - w.lo - 1];
    for (int l = w.lo; l < j; ++l) {
      const KernelField& r = react[l - w.lo];
      if (norm(r) == 0.0) continue;  // zero integrand transports to zero
      const double tau = w.times[j] - w.times[l];
      const double dl = w.times[l + 1] - w.times[l];
      McConfig mc = w.mc;
      mc.seed = reaction_seed(w.mc.seed, j, l);
      const KernelField g = apply_semigroup(w.dyn, r, tau, mc);
      const double c =
          dl * (w.alpha != 0.0 ? std::exp(-w.alpha * tau) : 1.0);
      acc = axpy(c, g, acc);
    }
    next.push_back(std::move(acc));
  }
  return next;
}

double auto_alpha(const KernelField& mu0, const ReactionModel& rxn,
                  const SolverConfig& cfg, double T) {
  const double z0 = norm(mu0);
  const BaseMeasure& base = mu0.base();
  double z_sup = z0;
  if (cfg.decay_eps && rxn.bound_M() > 0.0 && z0 > 0.0) {
    const BoundCurve curve =
        BoundCurve::quadratic(*cfg.decay_eps, rxn.bound_M(),
                              base.conv_constant(), base.total_mass(), z0);
    if (curve.coefficient() * z0 > curve.eps()) {
      // growing curve: the norm can exceed z0, cover it up to the horizon
      if (curve.pole_time() <= T) {
        throw ConfigError(
            "initial norm is above the decay threshold and the comparison "
            "curve blows up inside the horizon; set positivity_alpha");
      }
      z_sup = curve.value(T);
    }
  }
  return 1.1 * rxn.loss_rate_bound(base.total_mass() * z_sup, base);
}

SolveResult run_solver(const KernelField& mu0, const DynamicsModel& dyn,
                       const ReactionModel& rxn, const SolverConfig& cfg,
                       double T, double alpha, bool guard) {
  if (!(T >= 0.0)) throw ConfigError("horizon must be nonnegative");
  if (!(cfg.dt_quad > 0.0)) throw ConfigError("dt_quad must be positive");
  if (!(cfg.picard_tol > 0.0)) throw ConfigError("picard_tol must be positive");
  if (cfg.max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");

  SolveResult res;
  res.report.alpha = alpha;
  res.trajectory.times.push_back(0.0);
  res.trajectory.fields.push_back(mu0);
  res.trajectory.norms.push_back(norm(mu0));
  if (T == 0.0) {
    res.report.t_loc = 0.0;
    return res;
  }

  const int J =
      std::max(1, static_cast<int>(std::ceil(T / cfg.dt_quad - 1e-9)));
  std::vector<double> times(J + 1);
  for (int j = 0; j <= J; ++j) times[j] = T * j / J;
  res.trajectory.times = times;

  if (cfg.mode == SolverMode::kStepwiseMild) {
    for (int j = 0; j < J; ++j) {
      const KernelField& fj = res.trajectory.fields.back();
      const double dl = times[j + 1] - times[j];
      const KernelField r = loss_shifted_reaction(fj, rxn, alpha, guard);
      KernelField pre = axpy(dl, r, fj);
      McConfig mc = cfg.mc;
      mc.seed = stepwise_seed(cfg.mc.seed, j + 1);
      KernelField g = apply_semigroup(dyn, pre, dl, mc);
      if (alpha != 0.0) g = scale(std::exp(-alpha * dl), g);
      res.trajectory.norms.push_back(norm(g));
      res.trajectory.fields.push_back(std::move(g));
    }
    res.report.converged = true;
    res.report.t_loc = times[1];
    res.report.windows.push_back({0, J, 1, 0.0, 0.0, 0});
    return res;
  }

  // local horizon from the standard contraction-radius estimate
  const double z0 = norm(mu0);
  const BaseMeasure& base = mu0.base();
  const double lip = 2.0 * rxn.bound_M() *
                     (base.conv_constant() / 2.0 + base.total_mass()) *
                     (z0 + 1.0);
  const double t_loc = lip > 0.0 ? std::min(T, 1.0 / (2.0 * lip)) : T;
  const double dt = times[1];
  const int window_len = std::clamp(
      static_cast<int>(std::floor(t_loc / dt + 1e-9)), 1, J);
  res.report.t_loc = window_len * dt;

  int sweep_index = 0;
  int lo = 0;
  while (lo < J) {
    int hi = std::min(lo + window_len, J);
    int halvings = 0;
    for (;;) {
      const KernelField& mu_lo = res.trajectory.fields[lo];
      WindowCtx w{times, lo, hi, mu_lo, dyn, rxn, cfg.mc, alpha, guard};
      const std::vector<KernelField> transport = transport_terms(w);
      std::vector<KernelField> cur = transport;
      double prev_delta = -1.0;
      double last_rho = 0.0;
      double last_delta = 0.0;
      int sweeps = 0;
      bool converged = false;
      while (sweeps < cfg.max_sweeps) {
        std::vector<KernelField> next = sweep_once(w, transport, mu_lo, cur);
        const double delta = max_diff_norm(next, cur);
        ++sweeps;
        const double rho =
            (prev_delta > 0.0) ? delta / prev_delta : 0.0;
        res.report.sweeps.push_back({++sweep_index, delta, rho});
        cur = std::move(next);
        last_rho = rho;
        last_delta = delta;
        if (delta <= cfg.picard_tol) {
          converged = true;
          break;
        }
        if (prev_delta > 0.0 && delta >= prev_delta) break;  // stalled
        prev_delta = delta;
      }
      if (converged) {
        // post-hoc residual: one more evaluation under the same seeds
        const std::vector<KernelField> fresh =
            sweep_once(w, transport, mu_lo, cur);
        res.report.residual =
            std::max(res.report.residual, max_diff_norm(fresh, cur));
        for (KernelField& f : cur) {
          res.trajectory.norms.push_back(norm(f));
          res.trajectory.fields.push_back(std::move(f));
        }
        res.report.windows.push_back(
            {lo, hi, sweeps, last_delta, last_rho, halvings});
        lo = hi;
        break;
      }
      if (hi - lo <= 1 || halvings >= cfg.max_halvings) {
        throw NonConvergenceError(
            "fixed-point iteration failed to contract on [" +
                std::to_string(times[lo]) + ", " + std::to_string(times[hi]) +
                "] after " + std::to_string(sweeps) + " sweeps and " +
                std::to_string(halvings) + " halvings",
            last_rho);
      }
      hi = lo + std::max(1, (hi - lo) / 2);
      ++halvings;
    }
  }
  res.report.converged = true;
  return res;
}

}  // namespace

BoundCurve::BoundCurve(Mode mode, double eps, double M, double C, double m,
                       double z0)
    : mode_(mode), eps_(eps), M_(M), C_(C), m_(m), z0_(z0) {
  if (!(eps > 0.0)) throw ConfigError("bound curve needs a positive eps");
  if (!(M >= 0.0) || !(C >= 0.0) || !(m >= 0.0) || !(z0 >= 0.0)) {
    throw ConfigError("bound curve coefficients must be nonnegative");
  }
}

BoundCurve BoundCurve::quadratic(double eps, double M, double C, double m,
                                 double z0) {
  return BoundCurve(Mode::kQuadratic, eps, M, C, m, z0);
}

BoundCurve BoundCurve::multi(double eps, double M, double C, double m,
                             double z0) {
  return BoundCurve(Mode::kMulti, eps, M, C, m, z0);
}

double BoundCurve::value(double t) const {
  if (z0_ == 0.0) return 0.0;
  if (t <= 0.0) return z0_;
  if (mode_ == Mode::kQuadratic) {
    const double a = coefficient();
    if (a == 0.0) return z0_ * std::exp(-eps_ * t);
    const double den = a + (eps_ - a * z0_) / z0_ * std::exp(eps_ * t);
    if (!(den > 0.0)) return kInf;
    return eps_ / den;
  }
  const double h0 = 1e-3 * std::min(1.0, 1.0 / eps_);
  const long steps = static_cast<long>(std::ceil(t / h0 - 1e-9));
  const double h = t / static_cast<double>(steps);
  double z = z0_;
  for (long i = 0; i < steps; ++i) {
    const double k1 = multi_rhs(z, eps_, M_, C_, m_);
    const double k2 = multi_rhs(z + 0.5 * h * k1, eps_, M_, C_, m_);
    const double k3 = multi_rhs(z + 0.5 * h * k2, eps_, M_, C_, m_);
    const double k4 = multi_rhs(z + h * k3, eps_, M_, C_, m_);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(z) || z > 1e12) return kInf;
  }
  return z;
}

double BoundCurve::pole_time() const {
  if (z0_ == 0.0) return kInf;
  if (mode_ == Mode::kQuadratic) {
    const double a = coefficient();
    if (a * z0_ <= eps_) return kInf;
    return std::log(a * z0_ / (a * z0_ - eps_)) / eps_;
  }
  const double h = 1e-3 * std::min(1.0, 1.0 / eps_);
  double z = z0_;
  double t = 0.0;
  const double t_cap = 1e3;
  while (t < t_cap) {
    const double k1 = multi_rhs(z, eps_, M_, C_, m_);
    const double k2 = multi_rhs(z + 0.5 * h * k1, eps_, M_, C_, m_);
    const double k3 = multi_rhs(z + 0.5 * h * k2, eps_, M_, C_, m_);
    const double k4 = multi_rhs(z + h * k3, eps_, M_, C_, m_);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (!std::isfinite(z) || z > 1e9) return t;
  }
  return kInf;
}

double global_threshold(double eps, double M, double C, double m) {
  const double a = M * (C / 2.0 + m);
  if (a <= 0.0) return kInf;
  return eps / a;
}

Trajectory picard_step(const Trajectory& current, const KernelField& mu0,
                       const DynamicsModel& dyn, const ReactionModel& rxn,
                       const SolverConfig& cfg) {
  if (current.times.empty() || current.times[0] != 0.0) {
    throw ConfigError("trajectory must start at time 0");
  }
  if (current.fields.size() != current.times.size()) {
    throw ConfigError("trajectory needs one field per time node");
  }
  for (std::size_t j = 1; j < current.times.size(); ++j) {
    if (!(current.times[j] > current.times[j - 1])) {
      throw ConfigError("trajectory times must be strictly increasing");
    }
    if (!current.fields[j].same_shape(mu0)) {
      throw ConfigError("trajectory fields must share the initial's shape");
    }
  }
  const double alpha = cfg.positivity_alpha.value_or(0.0);
  const bool guard = cfg.positivity_alpha.has_value();

  Trajectory out;
  out.times = current.times;
  out.fields.push_back(mu0);
  out.norms.push_back(norm(mu0));
  const int J = static_cast<int>(current.times.size()) - 1;
  if (J >= 1) {
    WindowCtx w{current.times, 0, J, mu0, dyn, rxn, cfg.mc, alpha, guard};
    const std::vector<KernelField> transport = transport_terms(w);
    std::vector<KernelField> cur(current.fields.begin() + 1,
                                 current.fields.end());
    std::vector<KernelField> next =
        sweep_once(w, transport, current.fields[0], cur);
    for (KernelField& f : next) {
      out.norms.push_back(norm(f));
      out.fields.push_back(std::move(f));
    }
  }
  return out;
}

SolveResult solve(const KernelField& mu0, const DynamicsModel& dyn,
                  const ReactionModel& rxn, const SolverConfig& cfg,
                  double T) {
  return run_solver(mu0, dyn, rxn, cfg, T, 0.0, false);
}

SolveResult solve_positive(const KernelField& mu0, const DynamicsModel& dyn,
                           const ReactionModel& rxn, const SolverConfig& cfg,
                           double T) {
  const double lowest = min_value(mu0);
  if (lowest < 0.0) {
    throw ConfigError("initial density has a negative entry (" +
                      std::to_string(lowest) + ")");
  }
  const double alpha =
      cfg.positivity_alpha ? *cfg.positivity_alpha
                           : auto_alpha(mu0, rxn, cfg, T);
  if (!(alpha >= 0.0)) {
    throw ConfigError("positivity_alpha must be nonnegative");
  }
  return run_solver(mu0, dyn, rxn, cfg, T, alpha, true);
}

BoundReport validate_bound(const Trajectory& traj, const BoundCurve& curve,
                           double mc_margin) {
  BoundReport rep;
  rep.horizon = curve.pole_time();
  rep.worst_margin = kInf;
  const double dt =
      traj.times.size() >= 2 ? traj.times[1] - traj.times[0] : 0.0;
  const double allow =
      dt * curve.coefficient() * curve.z0() * curve.z0();
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    const double t = traj.times[j];
    if (t >= rep.horizon) {
      rep.truncated = true;
      break;
    }
    const double nrm =
        j < traj.norms.size() ? traj.norms[j] : norm(traj.fields[j]);
    BoundReport::Row row;
    row.t = t;
    row.norm = nrm;
    row.z_bound = curve.value(t);
    row.margin = row.z_bound * (1.0 + mc_margin) + allow - nrm;
    row.pass = row.margin >= 0.0;
    rep.pass = rep.pass && row.pass;
    rep.worst_margin = std::min(rep.worst_margin, row.margin);
    rep.rows.push_back(row);
  }
  if (rep.rows.empty()) rep.worst_margin = 0.0;
  return rep;
}

HomogeneousTrajectory reference_homogeneous_solve(
    const std::vector<double>& c0, const ReactionModel& rxn,
    const BaseMeasure& base, double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(T >= 0.0)) throw ConfigError("horizon must be nonnegative");
  if (c0.size() != static_cast<std::size_t>(base.n_mass())) {
    throw ConfigError("density length must equal n_mass");
  }
  HomogeneousTrajectory out;
  out.times.push_back(0.0);
  out.states.push_back(c0);
  if (T == 0.0) return out;

  const int n = static_cast<int>(std::ceil(T / dt - 1e-9));
  const double h = T / n;
  std::vector<double> c = c0;
  const auto rhs = [&](const std::vector<double>& state) {
    return rxn.apply_row(state, base);
  };
  const auto shifted = [](const std::vector<double>& state, double w,
                          const std::vector<double>& k) {
    std::vector<double> s = state;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += w * k[i];
    return s;
  };
  for (int step = 0; step < n; ++step) {
    const std::vector<double> k1 = rhs(c);
    const std::vector<double> k2 = rhs(shifted(c, 0.5 * h, k1));
    const std::vector<double> k3 = rhs(shifted(c, 0.5 * h, k2));
    const std::vector<double> k4 = rhs(shifted(c, h, k3));
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(c[i])) {
        throw NumericError(
            "reference integration produced a non-finite value at t = " +
            std::to_string(out.times.back()) + "; reduce dt");
      }
    }
    out.times.push_back(T * (step + 1) / static_cast<double>(n));
    out.states.push_back(c);
  }
  return out;
}

}  // namespace smolux
