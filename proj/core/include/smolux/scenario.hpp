#ifndef SMOLUX_SCENARIO_HPP_
#define SMOLUX_SCENARIO_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smolux/dynamics.hpp"
#include "smolux/kernel_field.hpp"
#include "smolux/mass_measure.hpp"
#include "smolux/reaction.hpp"
#include "smolux/solver.hpp"

namespace smolux {

// Initial density: a per-bin profile under a flat or Gaussian spatial shape.
struct InitialSpec {
  enum class Kind { kFlat, kBump };
  Kind kind = Kind::kFlat;
  std::vector<double> bins;
  std::array<double, 3> center = {0.0, 0.0, 0.0};
  double width = 1.0;
};

struct OutputSpec {
  bool snapshots = false;
  int snapshot_stride = 1;
};

// A fully declared run: model, initial data, solver settings and the
// constants the certification preflight must verify.
struct Scenario {
  int schema = 1;
  std::string name;
  std::uint64_t seed = 0;
  double horizon = 1.0;
  SpatialGrid grid;
  BaseMeasure base = BaseMeasure::power_law(1, 0.0);
  DynamicsModel dynamics{1, SigmaSpec{}, DriftSpec{}, 0.0, 0.0, 0.0};
  ReactionModel reaction;
  InitialSpec initial;
  SolverConfig solver;
  OutputSpec output;
  bool positive_mode = false;
  double bound_margin = 0.05;  // multiplicative slack in the norm-bound check
  std::optional<double> expected_conv_C;
  std::optional<double> expected_scatter_C;
  std::string source_text;  // raw config, fingerprinted into the manifest

  KernelField build_initial() const;
};

Scenario scenario_from_json_text(const std::string& text);
Scenario scenario_from_file(const std::string& path);

// The hypothesis sheet as machine checks. Waivable names: base, divergence,
// ellipticity, fragmentation, scattering.
struct CertificationRow {
  std::string check;
  double value = 0.0;  // computed
  double bound = 0.0;  // declared or required
  bool pass = false;
  bool waived = false;
  std::string note;
};
struct CertificationReport {
  std::vector<CertificationRow> rows;
  bool pass = true;  // over unwaived rows
};
CertificationReport run_certifications(const Scenario& sc,
                                       const std::vector<std::string>& waive);

struct SimulateOutcome {
  CertificationReport preflight;
  bool ran = false;  // false when an unwaived certification failed
  Trajectory trajectory;
  ConvergenceReport convergence;
  std::optional<BoundCurve> curve;  // absent without a positive decay floor
  BoundReport bound;
  double threshold = 0.0;
};

// Preflight, solve, and write simulate/convergence/bound CSVs, snapshots
// and the run manifest into out_dir.
SimulateOutcome run_simulate(const Scenario& sc, const std::string& out_dir,
                             const std::vector<std::string>& waive);

// Named validation suites: semigroup | continuity | convection_oracle |
// homogeneous_oracle | lipschitz. Each writes validate.csv in out_dir.
struct ValidateRow {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  int n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool pass = false;
};
struct ValidateReport {
  std::string suite;
  std::vector<ValidateRow> rows;
  bool pass = true;
};
ValidateReport run_validate(const Scenario& sc, const std::string& suite,
                            const std::string& out_dir);

// 17-significant-digit rendering; doubles survive a write/parse round trip,
// which is what makes byte-identical reproducibility checks meaningful.
std::string format_g17(double v);

// FNV-1a fingerprint of the raw config bytes, hex-printed.
std::string config_fingerprint(const std::string& text);

}  // namespace smolux

#endif  // SMOLUX_SCENARIO_HPP_
