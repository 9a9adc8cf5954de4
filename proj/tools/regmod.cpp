#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "regmod/errors.hpp"
#include "regmod/flow.hpp"
#include "regmod/report_io.hpp"
#include "regmod/runner.hpp"

namespace {

using regmod::Vector;

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw regmod::UsageError(what + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw regmod::UsageError(what + ": expected comma-separated numbers");
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  bool force = false;
  double tol = 0.05;
  std::string data_dir;
};

std::filesystem::path data_dir(const Globals& g) {
  return g.data_dir.empty() ? regmod::default_data_dir() : std::filesystem::path(g.data_dir);
}

std::uint64_t require_seed(const Globals& g) {
  if (!g.seed) throw regmod::UsageError("seed required");
  return *g.seed;
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  regmod::guard_overwrite(g.out, g.force);
  regmod::write_text_file(g.out, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regmod: regularity moduli of structured nonsmooth functions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "random seed (required for sampling commands)");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output file (suite: output directory)");
  app.add_flag("--force", g.force, "overwrite existing outputs");
  app.add_option("--tol", g.tol, "relative tolerance for implication checks")->check(CLI::NonNegativeNumber);
  app.add_option("--data-dir", g.data_dir, "directory holding catalog/ and suites/");

  auto* catalog = app.add_subcommand("catalog", "list catalog instances");

  std::string instance;
  auto* crit = app.add_subcommand("crit", "print the critical set as JSON");
  crit->add_option("instance", instance, "catalog name or instance JSON file")->required();

  std::string base;
  std::string radii = "0.2,0.1,0.05";
  std::size_t per_radius = 128;
  std::string dump;
  auto* estimate = app.add_subcommand("estimate", "estimate every modulus around a base point");
  auto* check = app.add_subcommand("check", "run the implication checks around a base point");
  for (auto* sub : {estimate, check}) {
    sub->add_option("instance", instance, "catalog name or instance JSON file")->required();
    sub->add_option("--base", base, "base point: comma-separated coordinates or crit:<k>");
    sub->add_option("--radii", radii, "decreasing radius schedule, comma-separated");
    sub->add_option("--n", per_radius, "samples per radius (>= 32)");
    sub->add_option("--dump", dump, "write the sample cloud as CSV");
  }

  std::string x0;
  double tau = 0.25;
  double horizon = 5.0;
  auto* flow = app.add_subcommand("flow", "integrate the subgradient flow of a convex instance");
  flow->add_option("instance", instance, "catalog name or instance JSON file")->required();
  flow->add_option("--x0", x0, "start point, comma-separated")->required();
  flow->add_option("--tau", tau, "backward-Euler step (<= 0.25)");
  flow->add_option("--T", horizon, "horizon, an integer multiple of tau");

  std::string suite;
  auto* suite_cmd = app.add_subcommand("suite", "run a suite and write reports");
  suite_cmd->add_option("suite", suite, "bundled suite name or suite JSON file")->required();

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  try {
    const auto dir = data_dir(g);
    if (*catalog) {
      std::ostringstream os;
      for (const auto& name : regmod::list_catalog(dir)) {
        const auto f = regmod::resolve_instance(name, dir);
        os << name << "\t" << regmod::family_name(f.family) << "\tp=" << f.dimension
           << (f.convex ? "\tconvex" : "") << "\n";
      }
      emit(g, os.str());
      return 0;
    }
    if (*crit) {
      const auto f = regmod::resolve_instance(instance, dir);
      emit(g, regmod::critical_set_json(regmod::enumerate_critical_set(f)));
      return 0;
    }
    if (*estimate || *check) {
      regmod::RunSpec spec;
      spec.instance_ref = instance;
      spec.seed = require_seed(g);
      if (base.rfind("crit:", 0) == 0) {
        spec.base_selector = base;
      } else if (!base.empty()) {
        spec.base = to_vector(parse_list(base, "--base"));
      }
      spec.radii = parse_list(radii, "--radii");
      spec.per_radius = per_radius;
      if (!dump.empty()) regmod::guard_overwrite(dump, g.force);
      const auto f = regmod::resolve_instance(instance, dir);
      const auto result = regmod::analyze(f, spec, g.tol, g.jobs);
      if (!dump.empty()) regmod::write_text_file(dump, regmod::samples_csv(result.cloud));
      emit(g, regmod::analysis_report_json(result));
      if (*check && result.implications.any_failed()) return 1;
      return 0;
    }
    if (*flow) {
      const auto f = regmod::resolve_instance(instance, dir);
      const auto traj = regmod::integrate_flow(f, to_vector(parse_list(x0, "--x0")), tau, horizon);
      const auto cs = regmod::enumerate_critical_set(f);
      const auto rep = regmod::verify_flow_properties(f, traj, cs);
      emit(g, regmod::trajectory_csv(traj));
      std::cerr << regmod::flow_report_json(traj, rep);
      return rep.all_pass() ? 0 : 1;
    }
    if (*suite_cmd) {
      regmod::SuiteOverrides ov;
      ov.seed = g.seed;
      if (!g.out.empty()) ov.out_dir = g.out;
      if (app.count("--jobs")) ov.jobs = g.jobs;
      if (app.count("--tol")) ov.tol = g.tol;
      ov.force = g.force;
      const auto cfg = regmod::load_suite(suite, dir, ov);
      const auto res = regmod::run_suite(cfg);
      for (const auto& run : res.runs) {
        if (!run.completed) {
          std::cerr << "regmod: " << run.label << ": " << run.diagnostic << "\n";
        } else {
          std::cout << run.label << ": " << (run.checks_failed ? "checks failed" : "ok") << " ("
                    << run.files.size() << " files)\n";
        }
      }
      return res.exit_code;
    }
  } catch (const regmod::ConfigError& e) {
    std::cerr << "regmod: " << e.what() << "\n";
    return 2;
  } catch (const regmod::UsageError& e) {
    std::cerr << "regmod: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "regmod: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
