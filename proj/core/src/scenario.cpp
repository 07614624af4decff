#include "smolux/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "json_detail.hpp"
#include "smolux/errors.hpp"
#include "smolux/feynman_kac.hpp"
#include "smolux/parallel.hpp"
#include "smolux/philox.hpp"

namespace smolux {

namespace {

using detail::json;

std::string json_string(const json& obj, const std::string& key,
                        const std::string& what) {
  if (!obj.contains(key) || !obj[key].is_string())
    throw ConfigError(what + ": '" + key + "' must be a string");
  return obj[key].get<std::string>();
}

std::string json_string_or(const json& obj, const std::string& key,
                           const std::string& fallback,
                           const std::string& what) {
  if (!obj.contains(key)) return fallback;
  return json_string(obj, key, what);
}

bool json_bool_or(const json& obj, const std::string& key, bool fallback,
                  const std::string& what) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean())
    throw ConfigError(what + ": '" + key + "' must be a boolean");
  return obj[key].get<bool>();
}

std::vector<double> json_number_array(const json& arr,
                                      const std::string& what) {
  if (!arr.is_array()) throw ConfigError(what + ": expected an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number()) throw ConfigError(what + ": entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Row-major flattening of an n x n array-of-arrays.
std::vector<double> flatten_square(const json& arr, int n,
                                   const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n)
    throw ConfigError(what + ": expected " + std::to_string(n) + " rows");
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * n);
  for (const json& row : arr) {
    std::vector<double> r = json_number_array(row, what);
    if (static_cast<int>(r.size()) != n)
      throw ConfigError(what + ": expected " + std::to_string(n) +
                        " columns per row");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

SpatialGrid grid_from_json(const json& g) {
  detail::require_keys(g, "grid", {"dim", "n_x", "extent", "policy"});
  SpatialGrid grid;
  grid.dim = detail::get_int(g, "dim", "grid");
  grid.n_x = detail::get_int(g, "n_x", "grid");
  grid.extent = detail::get_number(g, "extent", "grid");
  if (grid.dim < 1 || grid.dim > 3)
    throw ConfigError("grid: dim must be 1, 2 or 3");
  if (grid.n_x < 2) throw ConfigError("grid: n_x must be at least 2");
  if (!(grid.extent > 0.0)) throw ConfigError("grid: extent must be positive");
  const std::string policy = json_string_or(g, "policy", "clamp", "grid");
  if (policy == "clamp")
    grid.policy = ExtensionPolicy::kClamp;
  else if (policy == "wrap")
    grid.policy = ExtensionPolicy::kWrap;
  else
    throw ConfigError("grid: policy must be 'clamp' or 'wrap'");
  return grid;
}

ReactionModel reaction_from_json(const json& r, const BaseMeasure& base) {
  detail::require_keys(r, "reaction",
                       {"coag", "cutoff", "multi", "fragmentation",
                        "scattering", "overflow", "symmetrize_scattering"});
  ReactionModel rxn;
  const int n = base.n_mass();
  if (r.contains("coag")) {
    const json& c = r["coag"];
    detail::require_keys(c, "reaction.coag", {"kind", "value", "table"});
    const std::string kind =
        json_string_or(c, "kind", "constant", "reaction.coag");
    if (kind == "constant") {
      rxn.coag = CoagKernel::constant(
          n, detail::get_number(c, "value", "reaction.coag"));
    } else if (kind == "table") {
      if (!c.contains("table"))
        throw ConfigError("reaction.coag: table kind needs a 'table' entry");
      rxn.coag = CoagKernel::from_table(
          n, flatten_square(c["table"], n, "reaction.coag.table"));
    } else {
      throw ConfigError("reaction.coag: kind must be 'constant' or 'table'");
    }
  }
  if (r.contains("cutoff")) {
    if (!rxn.coag)
      throw ConfigError("reaction: cutoff needs a coag kernel to act on");
    rxn.coag->set_cutoff(detail::get_int(r, "cutoff", "reaction"));
  }
  if (r.contains("multi")) {
    const json& terms = r["multi"];
    if (!terms.is_array())
      throw ConfigError("reaction.multi: expected an array of terms");
    MultiCoagKernel mk(n);
    for (const json& t : terms) {
      detail::require_keys(t, "reaction.multi[]", {"order", "kappa", "phi"});
      const int order = detail::get_int(t, "order", "reaction.multi");
      if (t.contains("phi")) {
        mk.add_separable(order,
                         json_number_array(t["phi"], "reaction.multi.phi"));
      } else {
        mk.add_constant(order,
                        detail::get_number(t, "kappa", "reaction.multi"));
      }
    }
    rxn.multi = std::move(mk);
  }
  if (r.contains("fragmentation")) {
    const json& f = r["fragmentation"];
    detail::require_keys(f, "reaction.fragmentation",
                         {"kind", "rates", "density"});
    if (!f.contains("rates"))
      throw ConfigError("reaction.fragmentation: needs per-bin 'rates'");
    std::vector<double> rates =
        json_number_array(f["rates"], "reaction.fragmentation.rates");
    const std::string kind =
        json_string_or(f, "kind", "uniform_binary", "reaction.fragmentation");
    if (kind == "uniform_binary") {
      rxn.frag = Fragmentation::uniform_binary(base, std::move(rates));
    } else if (kind == "table") {
      if (!f.contains("density"))
        throw ConfigError(
            "reaction.fragmentation: table kind needs a 'density' entry");
      rxn.frag = Fragmentation::from_tables(
          base, std::move(rates),
          flatten_square(f["density"], n, "reaction.fragmentation.density"));
    } else {
      throw ConfigError(
          "reaction.fragmentation: kind must be 'uniform_binary' or 'table'");
    }
  }
  if (r.contains("scattering")) {
    if (!rxn.coag || !rxn.coag->cutoff())
      throw ConfigError(
          "reaction.scattering: needs a coag kernel with a cutoff, the "
          "scattering threshold");
    const int y0 = *rxn.coag->cutoff();
    const json& s = r["scattering"];
    detail::require_keys(s, "reaction.scattering", {"kind", "table"});
    const std::string kind =
        json_string_or(s, "kind", "half_split", "reaction.scattering");
    if (kind == "half_split") {
      rxn.scat = Scattering::half_split(y0);
    } else if (kind == "uniform") {
      rxn.scat = Scattering::uniform(y0);
    } else if (kind == "table") {
      if (!s.contains("table"))
        throw ConfigError(
            "reaction.scattering: table kind needs a 'table' entry");
      rxn.scat = Scattering::from_table(
          y0, flatten_square(s["table"], y0, "reaction.scattering.table"));
    } else {
      throw ConfigError(
          "reaction.scattering: kind must be 'half_split', 'uniform' or "
          "'table'");
    }
  }
  if (r.contains("overflow")) {
    const std::string o = json_string(r, "overflow", "reaction");
    if (o == "drop")
      rxn.overflow = OverflowPolicy::kDrop;
    else if (o == "absorb_top")
      rxn.overflow = OverflowPolicy::kAbsorbTop;
    else if (o == "cutoff")
      rxn.overflow = OverflowPolicy::kCutoff;
    else if (o == "extend")
      rxn.overflow = OverflowPolicy::kExtend;
    else
      throw ConfigError(
          "reaction: overflow must be 'drop', 'absorb_top', 'cutoff' or "
          "'extend'");
  }
  rxn.symmetrize_scattering =
      json_bool_or(r, "symmetrize_scattering", false, "reaction");
  return rxn;
}

InitialSpec initial_from_json(const json& i, int n_mass, int dim) {
  detail::require_keys(i, "initial",
                       {"kind", "bins", "value", "center", "width"});
  InitialSpec spec;
  const std::string kind = json_string_or(i, "kind", "constant", "initial");
  auto read_bins = [&]() {
    if (i.contains("bins")) {
      spec.bins = json_number_array(i["bins"], "initial.bins");
      if (static_cast<int>(spec.bins.size()) != n_mass)
        throw ConfigError("initial.bins: length must equal the mass bin "
                          "count " +
                          std::to_string(n_mass));
    } else {
      spec.bins.assign(static_cast<std::size_t>(n_mass),
                       detail::get_number(i, "value", "initial"));
    }
  };
  if (kind == "constant") {
    spec.kind = InitialSpec::Kind::kFlat;
    read_bins();
  } else if (kind == "monodisperse") {
    spec.kind = InitialSpec::Kind::kFlat;
    spec.bins.assign(static_cast<std::size_t>(n_mass), 0.0);
    spec.bins[0] = detail::get_number(i, "value", "initial");
  } else if (kind == "bump") {
    spec.kind = InitialSpec::Kind::kBump;
    read_bins();
    if (i.contains("center")) {
      std::vector<double> c = json_number_array(i["center"], "initial.center");
      if (static_cast<int>(c.size()) != dim)
        throw ConfigError("initial.center: length must equal the spatial "
                          "dimension");
      for (int a = 0; a < dim; ++a) spec.center[a] = c[a];
    }
    spec.width = detail::get_number_or(i, "width", 1.0);
    if (!(spec.width > 0.0))
      throw ConfigError("initial.width: must be positive");
  } else {
    throw ConfigError(
        "initial: kind must be 'constant', 'monodisperse' or 'bump'");
  }
  for (double v : spec.bins)
    if (!std::isfinite(v)) throw ConfigError("initial: bins must be finite");
  return spec;
}

SolverConfig solver_from_json(const json& s) {
  detail::require_keys(s, "solver",
                       {"mode", "dt_quad", "picard_tol", "max_sweeps",
                        "max_halvings", "mc", "positivity_alpha"});
  SolverConfig cfg;
  const std::string mode =
      json_string_or(s, "mode", "global_picard", "solver");
  if (mode == "global_picard")
    cfg.mode = SolverMode::kGlobalPicard;
  else if (mode == "stepwise_mild")
    cfg.mode = SolverMode::kStepwiseMild;
  else
    throw ConfigError(
        "solver: mode must be 'global_picard' or 'stepwise_mild'");
  cfg.dt_quad = detail::get_number_or(s, "dt_quad", cfg.dt_quad);
  cfg.picard_tol = detail::get_number_or(s, "picard_tol", cfg.picard_tol);
  if (s.contains("max_sweeps"))
    cfg.max_sweeps = detail::get_int(s, "max_sweeps", "solver");
  if (s.contains("max_halvings"))
    cfg.max_halvings = detail::get_int(s, "max_halvings", "solver");
  if (s.contains("mc")) {
    const json& m = s["mc"];
    detail::require_keys(m, "solver.mc",
                         {"n_paths", "dt", "antithetic", "quad"});
    if (m.contains("n_paths"))
      cfg.mc.n_paths = detail::get_int(m, "n_paths", "solver.mc");
    cfg.mc.dt = detail::get_number_or(m, "dt", cfg.mc.dt);
    cfg.mc.antithetic =
        json_bool_or(m, "antithetic", cfg.mc.antithetic, "solver.mc");
    const std::string quad = json_string_or(m, "quad", "left", "solver.mc");
    if (quad == "left")
      cfg.mc.quad = QuadratureRule::kLeft;
    else if (quad == "trapezoid")
      cfg.mc.quad = QuadratureRule::kTrapezoid;
    else
      throw ConfigError("solver.mc: quad must be 'left' or 'trapezoid'");
  }
  if (s.contains("positivity_alpha"))
    cfg.positivity_alpha = detail::get_number(s, "positivity_alpha", "solver");
  return cfg;
}

OutputSpec output_from_json(const json& o) {
  detail::require_keys(o, "output", {"snapshots", "snapshot_stride"});
  OutputSpec spec;
  spec.snapshots = json_bool_or(o, "snapshots", false, "output");
  if (o.contains("snapshot_stride")) {
    spec.snapshot_stride = detail::get_int(o, "snapshot_stride", "output");
    if (spec.snapshot_stride < 1)
      throw ConfigError("output.snapshot_stride: must be at least 1");
  }
  return spec;
}

std::string pad_index(std::size_t j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", j);
  return buf;
}

void write_simulate_csv(const std::string& path, const Scenario& sc,
                        const SimulateOutcome& out) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "t,norm,z_bound,min_f,moment0,moment1,picard_sweeps,rho\n";
  const Trajectory& traj = out.trajectory;
  const std::size_t nodes = traj.times.size();
  std::vector<int> sweeps(nodes, 0);
  std::vector<double> rho(nodes, 0.0);
  for (const ConvergenceReport::Window& w : out.convergence.windows) {
    const std::size_t lo = static_cast<std::size_t>(w.lo);
    const std::size_t hi = static_cast<std::size_t>(w.hi);
    for (std::size_t j = lo + 1; j <= hi && j < nodes; ++j) {
      sweeps[j] = w.sweeps;
      rho[j] = w.last_rho;
    }
  }
  const int n_mass = sc.base.n_mass();
  std::vector<double> row(static_cast<std::size_t>(n_mass), 0.0);
  for (std::size_t j = 0; j < nodes; ++j) {
    const KernelField& f = traj.fields[j];
    const std::size_t n_sites = f.n_sites();
    double m0 = 0.0;
    double m1 = 0.0;
    for (std::size_t s = 0; s < n_sites; ++s) {
      for (int k = 0; k < n_mass; ++k) row[k] = f.at(s, k);
      for (int k = 0; k < n_mass; ++k) m0 += row[k] * sc.base.weight(k + 1);
      m1 += first_moment(row, sc.base);
    }
    m0 /= static_cast<double>(n_sites);
    m1 /= static_cast<double>(n_sites);
    const double z = out.curve ? out.curve->value(traj.times[j])
                               : std::numeric_limits<double>::infinity();
    os << format_g17(traj.times[j]) << ',' << format_g17(traj.norms[j]) << ','
       << format_g17(z) << ',' << format_g17(min_value(f)) << ','
       << format_g17(m0) << ',' << format_g17(m1) << ',' << sweeps[j] << ','
       << format_g17(rho[j]) << '\n';
  }
}

void write_convergence_csv(const std::string& path,
                           const ConvergenceReport& rep) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "sweep,delta_norm,contraction_rho\n";
  for (const ConvergenceReport::SweepRow& r : rep.sweeps) {
    os << r.sweep << ',' << format_g17(r.delta_norm) << ','
       << format_g17(r.contraction_rho) << '\n';
  }
}

void write_bound_csv(const std::string& path, const BoundReport& rep) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "t,norm,z_bound,margin,pass\n";
  for (const BoundReport::Row& r : rep.rows) {
    os << format_g17(r.t) << ',' << format_g17(r.norm) << ','
       << format_g17(r.z_bound) << ',' << format_g17(r.margin) << ','
       << (r.pass ? 1 : 0) << '\n';
  }
}

void write_manifest(const std::string& path, const Scenario& sc,
                    const SimulateOutcome& out) {
  json m;
  m["name"] = sc.name;
  m["schema"] = sc.schema;
  m["seed"] = sc.seed;
  m["horizon"] = sc.horizon;
  m["mode"] = sc.solver.mode == SolverMode::kStepwiseMild ? "stepwise_mild"
                                                          : "global_picard";
  m["positive"] = sc.positive_mode;
  m["dt_quad"] = sc.solver.dt_quad;
  m["picard_tol"] = sc.solver.picard_tol;
  m["n_paths"] = sc.solver.mc.n_paths;
  m["mc_dt"] = sc.solver.mc.dt;
  m["antithetic"] = sc.solver.mc.antithetic;
  m["threads"] = thread_budget();
  m["config_fingerprint"] = config_fingerprint(sc.source_text);
  m["preflight_pass"] = out.preflight.pass;
  m["ran"] = out.ran;
  if (out.ran) {
    m["alpha"] = out.convergence.alpha;
    m["residual"] = out.convergence.residual;
    m["threshold"] = out.threshold;
    m["bound_pass"] = out.bound.pass;
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << m.dump(2) << '\n';
}

void write_validate_csv(const std::string& path, const ValidateReport& rep) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "t,lhs,rhs,margin,n_paths,dt,seed,pass\n";
  for (const ValidateRow& r : rep.rows) {
    os << format_g17(r.t) << ',' << format_g17(r.lhs) << ','
       << format_g17(r.rhs) << ',' << format_g17(r.margin) << ',' << r.n_paths
       << ',' << format_g17(r.dt) << ',' << r.seed << ',' << (r.pass ? 1 : 0)
       << '\n';
  }
}

KernelField constant_field(const SpatialGrid& grid, const BaseMeasure& base,
                           double value) {
  KernelField f(grid, base, value);
  return f;
}

double sup_diff(const KernelField& a, const KernelField& b) {
  double d = 0.0;
  const std::vector<double>& va = a.values();
  const std::vector<double>& vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i)
    d = std::max(d, std::abs(va[i] - vb[i]));
  return d;
}

double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  const json j = detail::parse_json(text, "scenario");
  detail::require_keys(
      j, "scenario",
      {"schema", "name", "seed", "horizon", "grid", "base", "dynamics",
       "reaction", "initial", "solver", "output", "positive", "bound_margin",
       "certify"});
  Scenario sc;
  sc.source_text = text;
  sc.schema = detail::get_int(j, "schema", "scenario");
  if (sc.schema != 1)
    throw ConfigError("scenario: unsupported schema " +
                      std::to_string(sc.schema));
  sc.name = json_string_or(j, "name", "unnamed", "scenario");
  if (j.contains("seed")) {
    const json& s = j["seed"];
    if (!s.is_number_integer() && !s.is_number_unsigned())
      throw ConfigError("scenario: seed must be a nonnegative integer");
    if (s.is_number_integer() && s.get<std::int64_t>() < 0)
      throw ConfigError("scenario: seed must be a nonnegative integer");
    sc.seed = s.get<std::uint64_t>();
  }
  sc.horizon = detail::get_number_or(j, "horizon", 1.0);
  if (!(sc.horizon >= 0.0) || !std::isfinite(sc.horizon))
    throw ConfigError("scenario: horizon must be finite and nonnegative");
  if (!j.contains("grid")) throw ConfigError("scenario: missing 'grid'");
  sc.grid = grid_from_json(j["grid"]);
  if (!j.contains("base")) throw ConfigError("scenario: missing 'base'");
  sc.base = detail::base_measure_from_json(j["base"]);
  if (!j.contains("dynamics"))
    throw ConfigError("scenario: missing 'dynamics'");
  sc.dynamics = detail::dynamics_from_json(j["dynamics"]);
  if (sc.dynamics.dim() != sc.grid.dim)
    throw ConfigError("scenario: dynamics dim " +
                      std::to_string(sc.dynamics.dim()) +
                      " does not match grid dim " +
                      std::to_string(sc.grid.dim));
  if (j.contains("reaction"))
    sc.reaction = reaction_from_json(j["reaction"], sc.base);
  if (j.contains("initial"))
    sc.initial = initial_from_json(j["initial"], sc.base.n_mass(), sc.grid.dim);
  else
    sc.initial.bins.assign(static_cast<std::size_t>(sc.base.n_mass()), 0.0);
  if (j.contains("solver")) sc.solver = solver_from_json(j["solver"]);
  if (j.contains("output")) sc.output = output_from_json(j["output"]);
  sc.positive_mode = json_bool_or(j, "positive", false, "scenario");
  sc.bound_margin = detail::get_number_or(j, "bound_margin", sc.bound_margin);
  if (sc.bound_margin < 0.0)
    throw ConfigError("scenario: bound_margin must be nonnegative");
  if (j.contains("certify")) {
    const json& c = j["certify"];
    detail::require_keys(c, "certify", {"conv_C", "scatter_C"});
    if (c.contains("conv_C"))
      sc.expected_conv_C = detail::get_number(c, "conv_C", "certify");
    if (c.contains("scatter_C"))
      sc.expected_scatter_C = detail::get_number(c, "scatter_C", "certify");
  }
  return sc;
}

Scenario scenario_from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return scenario_from_json_text(buf.str());
}

KernelField Scenario::build_initial() const {
  const int n = base.n_mass();
  if (static_cast<int>(initial.bins.size()) != n)
    throw ConfigError("initial bins length does not match the mass grid");
  KernelField f(grid, base);
  const std::size_t n_sites = f.n_sites();
  for (std::size_t s = 0; s < n_sites; ++s) {
    double shape = 1.0;
    if (initial.kind == InitialSpec::Kind::kBump) {
      const std::array<double, 3> p = f.node_position(s);
      double d2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) {
        const double d = p[a] - initial.center[a];
        d2 += d * d;
      }
      shape = std::exp(-d2 / (2.0 * initial.width * initial.width));
    }
    for (int k = 0; k < n; ++k) f.at(s, k) = initial.bins[k] * shape;
  }
  return f;
}

CertificationReport run_certifications(const Scenario& sc,
                                       const std::vector<std::string>& waive) {
  static const std::vector<std::string> kWaivable = {
      "base", "divergence", "ellipticity", "fragmentation", "scattering"};
  for (const std::string& w : waive) {
    if (std::find(kWaivable.begin(), kWaivable.end(), w) == kWaivable.end())
      throw ConfigError("unknown certification name '" + w +
                        "' in waive list");
  }
  auto waived = [&](const std::string& name) {
    return std::find(waive.begin(), waive.end(), name) != waive.end();
  };
  CertificationReport rep;
  auto add = [&](CertificationRow row) {
    row.waived = waived(row.check);
    if (!row.waived && !row.pass) rep.pass = false;
    rep.rows.push_back(std::move(row));
  };

  {
    const ConvCertificate c2 = sc.base.certify(2);
    CertificationRow row;
    row.check = "base";
    row.value = c2.ratio;
    row.bound = sc.expected_conv_C.value_or(c2.ratio);
    row.pass = row.value <= row.bound * (1.0 + 1e-12);
    row.note = "pair convolution ratio, attained at bin " +
               std::to_string(c2.argmax_bin);
    add(std::move(row));
  }

  const std::vector<SamplePoint> samples =
      certification_samples(sc.grid, sc.base);
  {
    const DivergenceReport d = certify_divergence_bound(sc.dynamics, samples);
    CertificationRow row;
    row.check = "divergence";
    row.value = d.min_div;
    row.bound = d.floor;
    row.pass = d.pass;
    row.note = "min div b over grid samples vs declared floor";
    add(std::move(row));
  }
  {
    const EllipticityReport e = certify_ellipticity(sc.dynamics, samples);
    CertificationRow row;
    row.check = "ellipticity";
    row.value = e.min_eig;
    row.bound = e.alpha;
    row.pass = e.pass;
    row.note = "eigenvalues of sigma sigma^T in [" + format_g17(e.min_eig) +
               ", " + format_g17(e.max_eig) + "], declared [" +
               format_g17(e.alpha) + ", " + format_g17(e.beta) + "]";
    add(std::move(row));
  }
  if (sc.reaction.frag) {
    const Fragmentation& fr = *sc.reaction.frag;
    CertificationRow row;
    row.check = "fragmentation";
    row.value = fr.sup_rate() * (1.0 + fr.sup_density());
    row.bound = sc.dynamics.eps_floor();
    row.pass = fr.condition_holds(sc.dynamics.eps_floor());
    row.note = "sup B (1 + sup density) strictly below the decay floor";
    add(std::move(row));
  }
  if (sc.reaction.scat) {
    CertificationRow row;
    row.check = "scattering";
    row.value = certify_scattering(*sc.reaction.scat, sc.base);
    row.bound = sc.expected_scatter_C.value_or(row.value);
    row.pass = row.value <= row.bound * (1.0 + 1e-12);
    row.note = sc.reaction.scat->mass_conserving()
                   ? "product measure ratio; kernel conserves mass"
                   : "product measure ratio; kernel loses mass";
    add(std::move(row));
  }
  return rep;
}

SimulateOutcome run_simulate(const Scenario& sc, const std::string& out_dir,
                             const std::vector<std::string>& waive) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  SimulateOutcome out;
  out.preflight = run_certifications(sc, waive);
  if (!out.preflight.pass) {
    write_manifest(out_dir + "/manifest.json", sc, out);
    return out;
  }

  KernelField mu0 = sc.build_initial();
  SolverConfig cfg = sc.solver;
  cfg.mc.seed = sc.seed;
  if (sc.dynamics.eps_floor() > 0.0)
    cfg.decay_eps = sc.dynamics.eps_floor();
  SolveResult result =
      sc.positive_mode
          ? solve_positive(mu0, sc.dynamics, sc.reaction, cfg, sc.horizon)
          : solve(mu0, sc.dynamics, sc.reaction, cfg, sc.horizon);
  out.ran = true;
  out.trajectory = std::move(result.trajectory);
  out.convergence = std::move(result.report);

  const double eps = sc.dynamics.eps_floor();
  const double M = sc.reaction.bound_M();
  const double C = sc.base.conv_constant();
  const double m = sc.base.total_mass();
  const double z0 = out.trajectory.norms.empty() ? 0.0
                                                 : out.trajectory.norms[0];
  out.threshold = global_threshold(eps, M, C, m);
  if (eps > 0.0) {
    out.curve = sc.reaction.multi
                    ? BoundCurve::multi(eps, M, C, m, z0)
                    : BoundCurve::quadratic(eps, M, C, m, z0);
    out.bound = validate_bound(out.trajectory, *out.curve, sc.bound_margin);
  }

  write_simulate_csv(out_dir + "/simulate.csv", sc, out);
  write_convergence_csv(out_dir + "/convergence.csv", out.convergence);
  if (out.curve) write_bound_csv(out_dir + "/bound.csv", out.bound);
  write_manifest(out_dir + "/manifest.json", sc, out);
  if (sc.output.snapshots) {
    const std::size_t stride =
        static_cast<std::size_t>(sc.output.snapshot_stride);
    for (std::size_t j = 0; j < out.trajectory.fields.size(); j += stride) {
      save_snapshot(out.trajectory.fields[j],
                    out_dir + "/field_" + pad_index(j) + ".bin");
    }
  }
  return out;
}

ValidateReport run_validate(const Scenario& sc, const std::string& suite,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ValidateReport rep;
  rep.suite = suite;
  McConfig mc = sc.solver.mc;
  mc.seed = sc.seed;

  if (suite == "semigroup") {
    const KernelField ones = constant_field(sc.grid, sc.base, 1.0);
    for (double frac : {0.25, 0.5, 1.0}) {
      const double t = frac * sc.horizon;
      const DecayReport d = decay_check(sc.dynamics, ones, t, mc);
      ValidateRow row;
      row.t = t;
      row.lhs = d.lhs;
      row.rhs = d.rhs;
      row.margin = d.margin;
      row.n_paths = mc.n_paths;
      row.dt = mc.dt;
      row.seed = mc.seed;
      row.pass = d.pass;
      rep.rows.push_back(row);
      rep.pass = rep.pass && row.pass;
    }
  } else if (suite == "continuity") {
    const KernelField f0 = sc.build_initial();
    const std::vector<double> ts = {1.0, 0.5, 0.25, 0.125, 0.0625};
    const ContinuityReport c = continuity_check(sc.dynamics, f0, ts, mc);
    for (const ContinuityPoint& p : c.points) {
      ValidateRow row;
      row.t = p.t;
      row.lhs = p.diff;
      row.rhs = p.envelope;
      row.margin = p.envelope + 3.0 * p.se - p.diff;
      row.n_paths = mc.n_paths;
      row.dt = mc.dt;
      row.seed = mc.seed;
      row.pass = p.diff <= p.envelope + 3.0 * p.se;
      rep.rows.push_back(row);
    }
    rep.pass = c.pass;
  } else if (suite == "convection_oracle") {
    if (!sc.dynamics.sigma_zero())
      throw ConfigError(
          "validate convection_oracle: the scenario must have zero "
          "diffusion so the transport is a deterministic flow");
    const KernelField f0 = sc.build_initial();
    const double T = sc.horizon;
    KernelField oracle(sc.grid, sc.base);
    const double dt_ref = 1e-4;
    const int n_mass = sc.base.n_mass();
    for (std::size_t s = 0; s < oracle.n_sites(); ++s) {
      const std::array<double, 3> x0 = oracle.node_position(s);
      for (int k = 0; k < n_mass; ++k) {
        const PathSample ps = deterministic_flow(
            sc.dynamics, x0, sc.base.grid().mass(k + 1), T, dt_ref);
        oracle.at(s, k) = ps.weight * f0.eval(ps.endpoint, k);
      }
    }
    const double scale = norm(f0);
    const double tol = 0.02 * scale;
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int level = 0; level < 3; ++level) {
      McConfig level_mc = mc;
      level_mc.n_paths = 1;
      level_mc.antithetic = false;
      level_mc.dt = mc.dt / static_cast<double>(1 << level);
      const KernelField pt = apply_semigroup(sc.dynamics, f0, T, level_mc);
      const double err = sup_diff(pt, oracle);
      monotone = monotone && err <= prev * (1.0 + 1e-12);
      prev = err;
      ValidateRow row;
      row.t = T;
      row.lhs = err;
      row.rhs = tol;
      row.margin = tol - err;
      row.n_paths = 1;
      row.dt = level_mc.dt;
      row.seed = mc.seed;
      row.pass = err <= tol;
      rep.rows.push_back(row);
      rep.pass = rep.pass && row.pass;
    }
    rep.pass = rep.pass && monotone;
  } else if (suite == "homogeneous_oracle") {
    const DynamicsModel frozen(1, SigmaSpec{}, DriftSpec{}, 0.0, 0.0, 0.0);
    SpatialGrid g1;
    g1.dim = 1;
    g1.n_x = 2;
    g1.extent = 1.0;
    g1.policy = ExtensionPolicy::kClamp;
    KernelField c0(g1, sc.base);
    for (std::size_t s = 0; s < c0.n_sites(); ++s)
      for (int k = 0; k < sc.base.n_mass(); ++k)
        c0.at(s, k) = sc.initial.bins[k];
    SolverConfig cfg;
    cfg.mode = SolverMode::kStepwiseMild;
    cfg.dt_quad = 1e-3;
    cfg.mc.n_paths = 1;
    cfg.mc.dt = 1e-3;
    cfg.mc.seed = sc.seed;
    cfg.mc.antithetic = false;
    const SolveResult r = solve(c0, frozen, sc.reaction, cfg, sc.horizon);
    const HomogeneousTrajectory ref = reference_homogeneous_solve(
        sc.initial.bins, sc.reaction, sc.base, sc.horizon, 1e-4);
    const KernelField& last = r.trajectory.fields.back();
    const std::vector<double>& exact = ref.states.back();
    double err = 0.0;
    for (int k = 0; k < sc.base.n_mass(); ++k)
      err = std::max(err, std::abs(last.at(0, k) - exact[k]));
    ValidateRow row;
    row.t = sc.horizon;
    row.lhs = err;
    row.rhs = 1e-3;
    row.margin = row.rhs - err;
    row.n_paths = 1;
    row.dt = cfg.dt_quad;
    row.seed = sc.seed;
    row.pass = err <= row.rhs;
    rep.rows.push_back(row);
    rep.pass = row.pass;
  } else if (suite == "lipschitz") {
    if (!sc.reaction.coag)
      throw ConfigError(
          "validate lipschitz: the scenario must declare a pair kernel");
    const CoagKernel& kernel = *sc.reaction.coag;
    const int n = sc.base.n_mass();
    const int n_pairs = 1000;
    const std::uint64_t stream = derive_seed(sc.seed, 0x4c6970, 0);
    double worst_sharp = 0.0;
    double worst_printed = 0.0;
    std::uint64_t ctr = 0;
    auto draw = [&]() { return uniform01(splitmix64(stream + ++ctr)); };
    std::vector<double> f(static_cast<std::size_t>(n));
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int p = 0; p < n_pairs; ++p) {
      for (int k = 0; k < n; ++k) f[k] = draw();
      for (int k = 0; k < n; ++k) g[k] = draw();
      if (p % 5 == 4) std::fill(g.begin(), g.end(), 0.0);
      if (p % 7 == 6) {
        std::fill(f.begin() + 1, f.end(), 0.0);
      }
      const TvLipschitzReport r =
          coag_tv_lipschitz_check(kernel, f, g, sc.base);
      if (r.rhs_sharp > 0.0)
        worst_sharp = std::max(worst_sharp, r.lhs / r.rhs_sharp);
      if (r.rhs_printed > 0.0)
        worst_printed = std::max(worst_printed, r.lhs / r.rhs_printed);
    }
    ValidateRow sharp;
    sharp.t = 0.0;
    sharp.lhs = worst_sharp;
    sharp.rhs = 1.0;
    sharp.margin = 1.0 - worst_sharp;
    sharp.n_paths = n_pairs;
    sharp.dt = 0.0;
    sharp.seed = sc.seed;
    sharp.pass = worst_sharp <= 1.0 + 1e-9;
    rep.rows.push_back(sharp);
    ValidateRow printed;
    printed.t = 0.0;
    printed.lhs = worst_printed;
    printed.rhs = 1.5;
    printed.margin = 1.5 - worst_printed;
    printed.n_paths = n_pairs;
    printed.dt = 0.0;
    printed.seed = sc.seed;
    printed.pass = worst_printed <= 1.5 * (1.0 + 1e-9);
    rep.rows.push_back(printed);
    rep.pass = sharp.pass && printed.pass;
  } else {
    throw ConfigError("validate: unknown suite '" + suite + "'");
  }

  write_validate_csv(out_dir + "/validate.csv", rep);
  return rep;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string config_fingerprint(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace smolux
