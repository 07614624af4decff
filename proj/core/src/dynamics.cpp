#include "smolux/dynamics.hpp"

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "smolux/errors.hpp"
#include "json_detail.hpp"

namespace smolux {

DynamicsModel::DynamicsModel(int dim, SigmaSpec sigma, DriftSpec drift,
                             double eps_floor, double ellip_alpha,
                             double ellip_beta)
    : dim_(dim),
      sigma_(sigma),
      drift_(drift),
      eps_floor_(eps_floor),
      ellip_alpha_(ellip_alpha),
      ellip_beta_(ellip_beta) {
  if (dim_ < 1 || dim_ > 3)
    throw ConfigError("DynamicsModel: dim must be 1, 2 or 3");
  if (!(ellip_alpha_ <= ellip_beta_))
    throw ConfigError("DynamicsModel: ellipticity window is empty");
}

void DynamicsModel::sigma(const std::array<double, 3>& x, double /*y*/,
                          double* out) const {
  for (int i = 0; i < dim_ * dim_; ++i) out[i] = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double s = sigma_.diag[i];
    if (sigma_.sine_amp != 0.0)
      s += sigma_.sine_amp * std::sin(sigma_.sine_freq * x[i]);
    out[i * dim_ + i] = s;
  }
}

void DynamicsModel::drift(const std::array<double, 3>& x, double /*y*/,
                          std::array<double, 3>& out) const {
  for (int i = 0; i < dim_; ++i) {
    double v = drift_.offset[i];
    for (int j = 0; j < dim_; ++j) v += drift_.matrix[i * dim_ + j] * x[j];
    if (drift_.sine_amp != 0.0)
      v += drift_.sine_amp * std::sin(drift_.sine_freq * x[i]);
    out[i] = v;
  }
}

double DynamicsModel::div_drift(const std::array<double, 3>& x,
                                double /*y*/) const {
  double d = trace_drift_matrix();
  if (drift_.sine_amp != 0.0)
    for (int i = 0; i < dim_; ++i)
      d += drift_.sine_amp * drift_.sine_freq *
           std::cos(drift_.sine_freq * x[i]);
  return d;
}

double DynamicsModel::trace_drift_matrix() const {
  double t = 0.0;
  for (int i = 0; i < dim_; ++i) t += drift_.matrix[i * dim_ + i];
  return t;
}

bool DynamicsModel::sigma_zero() const {
  if (sigma_.sine_amp != 0.0) return false;
  for (int i = 0; i < dim_; ++i)
    if (sigma_.diag[i] != 0.0) return false;
  return true;
}

std::array<double, 9> DynamicsModel::sigma_matrix() const {
  if (!sigma_constant())
    throw ConfigError("sigma_matrix: sigma varies in space");
  std::array<double, 9> m = {};
  for (int i = 0; i < dim_; ++i) m[i * dim_ + i] = sigma_.diag[i];
  return m;
}

PathSample simulate_path(const DynamicsModel& model,
                         const std::array<double, 3>& x0, double y, double t,
                         double dt, GaussianStream& stream,
                         QuadratureRule quad) {
  if (t < 0.0) throw ConfigError("simulate_path: negative horizon");
  if (t > 0.0 && !(dt > 0.0))
    throw ConfigError("simulate_path: step must be positive");
  const int n = model.dim();
  PathSample out;
  out.endpoint = x0;
  if (t == 0.0) return out;

  std::size_t n_full = static_cast<std::size_t>(std::floor(t / dt));
  double rem = t - static_cast<double>(n_full) * dt;
  if (rem <= 1e-12 * std::max(t, 1.0)) rem = 0.0;
  const std::size_t n_steps = n_full + (rem > 0.0 ? 1 : 0);

  const bool no_noise = model.sigma_zero();
  double s_mat[9];
  std::array<double, 3> b;
  std::array<double, 3> x = x0;
  double div_int = 0.0;
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double h = (step < n_full) ? dt : rem;
    const double div_here = model.div_drift(x, y);
    model.drift(x, y, b);
    if (!no_noise) {
      model.sigma(x, y, s_mat);
      const double root_h = std::sqrt(h);
      double xi[3];
      for (int i = 0; i < n; ++i) xi[i] = stream.next();
      for (int i = 0; i < n; ++i) {
        double inc = 0.0;
        for (int j = 0; j < n; ++j) inc += s_mat[i * n + j] * xi[j];
        x[i] += inc * root_h + b[i] * h;
      }
    } else {
      for (int i = 0; i < n; ++i) x[i] += b[i] * h;
    }
    if (quad == QuadratureRule::kLeft)
      div_int += div_here * h;
    else
      div_int += 0.5 * (div_here + model.div_drift(x, y)) * h;
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(x[i]))
        throw NumericError("simulate_path: state diverged at step " +
                           std::to_string(step));
  }
  out.endpoint = x;
  out.div_integral = div_int;
  out.weight = std::exp(-div_int);
  return out;
}

PathSample deterministic_flow(const DynamicsModel& model,
                              const std::array<double, 3>& x0, double y,
                              double t, double dt) {
  if (!model.sigma_zero())
    throw ConfigError("deterministic_flow: requires sigma identically zero");
  if (t < 0.0) throw ConfigError("deterministic_flow: negative horizon");
  if (t > 0.0 && !(dt > 0.0))
    throw ConfigError("deterministic_flow: step must be positive");
  const int n = model.dim();
  PathSample out;
  out.endpoint = x0;
  if (t == 0.0) return out;

  std::size_t n_full = static_cast<std::size_t>(std::floor(t / dt));
  double rem = t - static_cast<double>(n_full) * dt;
  if (rem <= 1e-12 * std::max(t, 1.0)) rem = 0.0;
  const std::size_t n_steps = n_full + (rem > 0.0 ? 1 : 0);

  // augmented state (x, I) with dI = div b(x); classic 4-stage step
  std::array<double, 3> x = x0;
  double I = 0.0;
  auto rhs = [&](const std::array<double, 3>& p, std::array<double, 3>& dx,
                 double& dI) {
    model.drift(p, y, dx);
    dI = model.div_drift(p, y);
  };
  std::array<double, 3> k1x, k2x, k3x, k4x, p;
  double k1i, k2i, k3i, k4i;
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double h = (step < n_full) ? dt : rem;
    rhs(x, k1x, k1i);
    for (int i = 0; i < n; ++i) p[i] = x[i] + 0.5 * h * k1x[i];
    rhs(p, k2x, k2i);
    for (int i = 0; i < n; ++i) p[i] = x[i] + 0.5 * h * k2x[i];
    rhs(p, k3x, k3i);
    for (int i = 0; i < n; ++i) p[i] = x[i] + h * k3x[i];
    rhs(p, k4x, k4i);
    for (int i = 0; i < n; ++i)
      x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
    I += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(x[i]))
        throw NumericError("deterministic_flow: state diverged at step " +
                           std::to_string(step));
  }
  out.endpoint = x;
  out.div_integral = I;
  out.weight = std::exp(-I);
  return out;
}

std::vector<SamplePoint> certification_samples(const SpatialGrid& grid,
                                               const BaseMeasure& base) {
  std::vector<SamplePoint> pts;
  const int stride = std::max(1, base.n_mass() / 8);
  KernelField probe(grid, base);  // for node enumeration only
  for (std::size_t s = 0; s < grid.n_sites(); ++s) {
    const std::array<double, 3> x = probe.node_position(s);
    for (int k = 1; k <= base.n_mass(); k += stride)
      pts.push_back({x, base.grid().mass(k)});
  }
  return pts;
}

DivergenceReport certify_divergence_bound(
    const DynamicsModel& model, const std::vector<SamplePoint>& samples) {
  if (samples.empty())
    throw ConfigError("certify_divergence_bound: empty sample set");
  DivergenceReport rep;
  rep.floor = model.eps_floor();
  rep.min_div = model.div_drift(samples[0].x, samples[0].y);
  rep.arg_min = samples[0];
  for (const auto& s : samples) {
    const double d = model.div_drift(s.x, s.y);
    if (d < rep.min_div) {
      rep.min_div = d;
      rep.arg_min = s;
    }
  }
  rep.pass = rep.min_div >= rep.floor - 1e-9;
  return rep;
}

EllipticityReport certify_ellipticity(const DynamicsModel& model,
                                      const std::vector<SamplePoint>& samples) {
  if (samples.empty())
    throw ConfigError("certify_ellipticity: empty sample set");
  EllipticityReport rep;
  rep.alpha = model.ellip_alpha();
  rep.beta = model.ellip_beta();
  const int n = model.dim();
  bool first = true;
  double s_mat[9];
  for (const auto& s : samples) {
    model.sigma(s.x, s.y, s_mat);
    Eigen::MatrixXd sig(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sig(i, j) = s_mat[i * n + j];
    Eigen::MatrixXd a = sig * sig.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (first || lo < rep.min_eig) rep.min_eig = lo;
    if (first || hi > rep.max_eig) rep.max_eig = hi;
    first = false;
  }
  rep.pass = rep.min_eig >= rep.alpha - 1e-9 && rep.max_eig <= rep.beta + 1e-9;
  return rep;
}

namespace detail {

DynamicsModel dynamics_from_json(const json& obj) {
  require_keys(obj, "dynamics", {"dim", "sigma", "drift", "eps_floor",
                                 "ellipticity"});
  const int dim = get_int(obj, "dim", "dynamics");

  SigmaSpec sig;
  if (obj.contains("sigma")) {
    const json& s = obj["sigma"];
    require_keys(s, "sigma", {"family", "value", "diag", "amp", "freq"});
    const std::string fam = s.value("family", std::string("zero"));
    if (fam == "zero") {
      sig.family = SigmaSpec::Family::kZero;
    } else if (fam == "constant_iso") {
      sig.family = SigmaSpec::Family::kConstantIso;
      const double v = get_number(s, "value", "sigma");
      sig.diag = {v, v, v};
    } else if (fam == "constant_diag") {
      sig.family = SigmaSpec::Family::kConstantDiag;
      auto d = s.at("diag").get<std::vector<double>>();
      if (static_cast<int>(d.size()) != dim)
        throw ConfigError("sigma: diag length must equal dim");
      for (int i = 0; i < dim; ++i) sig.diag[i] = d[i];
    } else if (fam == "diag_sine") {
      sig.family = SigmaSpec::Family::kDiagSine;
      auto d = s.at("diag").get<std::vector<double>>();
      if (static_cast<int>(d.size()) != dim)
        throw ConfigError("sigma: diag length must equal dim");
      for (int i = 0; i < dim; ++i) sig.diag[i] = d[i];
      sig.sine_amp = get_number(s, "amp", "sigma");
      sig.sine_freq = get_number(s, "freq", "sigma");
    } else {
      throw ConfigError("sigma: unknown family \"" + fam + "\"");
    }
  }

  DriftSpec dr;
  if (obj.contains("drift")) {
    const json& d = obj["drift"];
    require_keys(d, "drift", {"family", "matrix", "offset", "eps", "amp",
                              "freq", "a", "s", "d"});
    const std::string fam = d.value("family", std::string("zero"));
    auto read_offset = [&]() {
      if (!d.contains("offset")) return;
      auto c = d["offset"].get<std::vector<double>>();
      if (static_cast<int>(c.size()) != dim)
        throw ConfigError("drift: offset length must equal dim");
      for (int i = 0; i < dim; ++i) dr.offset[i] = c[i];
    };
    if (fam == "zero") {
      dr.family = DriftSpec::Family::kZero;
    } else if (fam == "constant") {
      dr.family = DriftSpec::Family::kConstant;
      read_offset();
    } else if (fam == "linear") {
      dr.family = DriftSpec::Family::kLinear;
      auto m = d.at("matrix").get<std::vector<std::vector<double>>>();
      if (static_cast<int>(m.size()) != dim)
        throw ConfigError("drift: matrix must be dim x dim");
      for (int i = 0; i < dim; ++i) {
        if (static_cast<int>(m[i].size()) != dim)
          throw ConfigError("drift: matrix must be dim x dim");
        for (int j = 0; j < dim; ++j) dr.matrix[i * dim + j] = m[i][j];
      }
      read_offset();
    } else if (fam == "radial" || fam == "radial_sine") {
      dr.family = fam == "radial" ? DriftSpec::Family::kRadial
                                  : DriftSpec::Family::kRadialSine;
      const double eps = get_number(d, "eps", "drift");
      for (int i = 0; i < dim; ++i) dr.matrix[i * dim + i] = eps / dim;
      if (fam == "radial_sine") {
        dr.sine_amp = get_number(d, "amp", "drift");
        dr.sine_freq = get_number(d, "freq", "drift");
      }
    } else if (fam == "shear") {
      if (dim != 2) throw ConfigError("drift: shear family needs dim = 2");
      dr.family = DriftSpec::Family::kShear;
      dr.matrix[0] = get_number_or(d, "a", 0.0);
      dr.matrix[1] = get_number_or(d, "s", 0.0);
      dr.matrix[3] = get_number_or(d, "d", 0.0);
    } else {
      throw ConfigError("drift: unknown family \"" + fam + "\"");
    }
  }

  const double eps_floor = get_number(obj, "eps_floor", "dynamics");
  double alpha = 0.0, beta = 0.0;
  if (obj.contains("ellipticity")) {
    auto ab = obj["ellipticity"].get<std::vector<double>>();
    if (ab.size() != 2)
      throw ConfigError("dynamics: ellipticity must be [alpha, beta]");
    alpha = ab[0];
    beta = ab[1];
  }
  return DynamicsModel(dim, sig, dr, eps_floor, alpha, beta);
}

json dynamics_to_json(const DynamicsModel& model) {
  // serialization via normalized coefficients: sufficient to rebuild an
  // equivalent model, family sugar is not preserved
  if (!model.drift_affine())
    throw ConfigError("dynamics to_json: sine drift round-trip is not "
                      "supported");
  json j;
  j["dim"] = model.dim();
  json s;
  if (model.sigma_zero()) {
    s["family"] = "zero";
  } else if (model.sigma_constant()) {
    s["family"] = "constant_diag";
    std::vector<double> dg(model.dim());
    auto m = model.sigma_matrix();
    for (int i = 0; i < model.dim(); ++i) dg[i] = m[i * model.dim() + i];
    s["diag"] = dg;
  } else {
    throw ConfigError("dynamics to_json: spatially varying sigma round-trip "
                      "is not supported");
  }
  j["sigma"] = s;
  json d;
  d["family"] = "linear";
  std::vector<std::vector<double>> m(model.dim(),
                                     std::vector<double>(model.dim()));
  for (int i = 0; i < model.dim(); ++i)
    for (int jj = 0; jj < model.dim(); ++jj)
      m[i][jj] = model.drift_matrix()[i * model.dim() + jj];
  d["matrix"] = m;
  std::vector<double> c(model.dim());
  for (int i = 0; i < model.dim(); ++i) c[i] = model.drift_offset()[i];
  d["offset"] = c;
  j["drift"] = d;
  j["eps_floor"] = model.eps_floor();
  j["ellipticity"] = {model.ellip_alpha(), model.ellip_beta()};
  return j;
}

}  // namespace detail

std::string DynamicsModel::to_json() const {
  return detail::dynamics_to_json(*this).dump();
}

DynamicsModel DynamicsModel::from_json(const std::string& text) {
  return detail::dynamics_from_json(detail::parse_json(text, "dynamics"));
}

}  // namespace smolux
