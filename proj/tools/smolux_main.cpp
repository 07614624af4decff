#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smolux/errors.hpp"
#include "smolux/kernel_field.hpp"
#include "smolux/scenario.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void print_certifications(const smolux::CertificationReport& rep) {
  for (const smolux::CertificationRow& row : rep.rows) {
    const char* tag = row.waived ? "WAIVED" : (row.pass ? "PASS" : "FAIL");
    std::printf("[%s] %-13s value=%-22s bound=%-22s %s\n", tag,
                row.check.c_str(), smolux::format_g17(row.value).c_str(),
                smolux::format_g17(row.bound).c_str(), row.note.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial coagulation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string waive_csv;
  std::string suite;
  std::uint64_t seed_override = 0;

  std::vector<CLI::Option*> seed_opts;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario JSON file")
        ->required();
    seed_opts.push_back(
        cmd->add_option("--seed", seed_override, "override the config seed"));
    cmd->add_option("--waive", waive_csv,
                    "comma-separated certification names to waive");
  };

  CLI::App* certify = app.add_subcommand(
      "certify", "run the model hypothesis checks and print a table");
  add_common(certify);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "certify, solve, and write CSV outputs with a manifest");
  add_common(simulate);
  simulate->add_option("--out", out_dir, "output directory (default: out)");

  CLI::App* validate = app.add_subcommand(
      "validate", "run a named validation suite against its oracle");
  add_common(validate);
  validate
      ->add_option("suite", suite,
                   "semigroup | continuity | convection_oracle | "
                   "homogeneous_oracle | lipschitz")
      ->required();
  validate->add_option("--out", out_dir, "output directory (default: out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    smolux::Scenario sc = smolux::scenario_from_file(config_path);
    for (const CLI::Option* o : seed_opts) {
      if (o->count() > 0) sc.seed = seed_override;
    }
    const std::vector<std::string> waive = split_list(waive_csv);

    if (certify->parsed()) {
      const smolux::CertificationReport rep =
          smolux::run_certifications(sc, waive);
      print_certifications(rep);
      return rep.pass ? 0 : 1;
    }

    if (simulate->parsed()) {
      const smolux::SimulateOutcome out =
          smolux::run_simulate(sc, out_dir, waive);
      print_certifications(out.preflight);
      if (!out.ran) {
        std::printf("preflight failed; solver not run\n");
        return 1;
      }
      const double z0 = out.trajectory.norms.empty()
                            ? 0.0
                            : out.trajectory.norms.front();
      std::printf("solved '%s' to t=%s: %zu time nodes, residual %s\n",
                  sc.name.c_str(), smolux::format_g17(sc.horizon).c_str(),
                  out.trajectory.times.size(),
                  smolux::format_g17(out.convergence.residual).c_str());
      std::printf("initial norm %s vs global-existence threshold %s (%s)\n",
                  smolux::format_g17(z0).c_str(),
                  smolux::format_g17(out.threshold).c_str(),
                  z0 < out.threshold ? "below" : "not below");
      if (out.curve) {
        std::printf("[%s] norm bound: worst margin %s over %zu nodes%s\n",
                    out.bound.pass ? "PASS" : "FAIL",
                    smolux::format_g17(out.bound.worst_margin).c_str(),
                    out.bound.rows.size(),
                    out.bound.truncated ? " (horizon truncated at the bound's "
                                          "blow-up time)"
                                        : "");
        if (!out.bound.pass) return 1;
      }
      return 0;
    }

    if (validate->parsed()) {
      const smolux::ValidateReport rep =
          smolux::run_validate(sc, suite, out_dir);
      for (const smolux::ValidateRow& r : rep.rows) {
        std::printf("[%s] t=%-10s lhs=%-22s rhs=%-22s margin=%s\n",
                    r.pass ? "PASS" : "FAIL", smolux::format_g17(r.t).c_str(),
                    smolux::format_g17(r.lhs).c_str(),
                    smolux::format_g17(r.rhs).c_str(),
                    smolux::format_g17(r.margin).c_str());
      }
      std::printf("suite %s: %s\n", rep.suite.c_str(),
                  rep.pass ? "PASS" : "FAIL");
      return rep.pass ? 0 : 1;
    }
  } catch (const smolux::NonConvergenceError& e) {
    std::fprintf(stderr, "error: %s (last contraction %s)\n", e.what(),
                 smolux::format_g17(e.last_contraction).c_str());
    return 3;
  } catch (const smolux::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
