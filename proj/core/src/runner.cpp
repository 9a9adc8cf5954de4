#include "regmod/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "regmod/errors.hpp"
#include "regmod/parallel.hpp"
#include "regmod/report_io.hpp"

namespace regmod {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw ConfigError(prefix + key, "unknown field");
  }
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return static_cast<std::size_t>(j.get<long long>());
}

std::uint64_t seed_of(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

Vector vec_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = num(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

bool flag(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected a boolean");
  return j.get<bool>();
}

int severity(const Error& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return 2;
  return 3;
}

}  // namespace

Vector resolve_base(const FunctionInstance& f, const CriticalSet& cs, const std::string& selector,
                    const std::optional<Vector>& literal) {
  Vector base;
  if (literal) {
    base = *literal;
  } else if (selector.rfind("crit:", 0) == 0) {
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(selector.substr(5), &used);
      if (used != selector.size() - 5) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("base selector must look like crit:<index>");
    }
    if (cs.empty()) throw DomainError("instance '" + f.name + "' has no critical points");
    const auto grid = critical_grid(cs, Vector::Zero(static_cast<Eigen::Index>(f.dimension)), 1.0);
    if (k >= grid.size()) {
      throw UsageError("crit:" + std::to_string(k) + " out of range; " + std::to_string(grid.size()) +
                       " critical grid points available");
    }
    base = grid[k];
  } else if (!selector.empty()) {
    throw UsageError("unknown base selector '" + selector + "'");
  } else if (!f.base_points.empty()) {
    base = f.base_points.front();
  } else {
    return resolve_base(f, cs, "crit:0", std::nullopt);
  }
  if (static_cast<std::size_t>(base.size()) != f.dimension) {
    throw UsageError("base point needs " + std::to_string(f.dimension) + " coordinates");
  }
  if (!in_domain(f, base)) throw UsageError("base point lies outside dom f");
  return base;
}

AnalysisResult analyze(const FunctionInstance& f, const RunSpec& spec, double tol, std::size_t jobs) {
  AnalysisResult r;
  r.instance = f;
  r.spec = spec;
  r.critical_set = enumerate_critical_set(f);
  r.base = resolve_base(f, r.critical_set, spec.base_selector, spec.base);

  CloudRequest req;
  req.base = r.base;
  req.radii = spec.radii;
  req.per_radius = spec.per_radius;
  req.seed = spec.seed;
  req.jobs = jobs;
  r.cloud = sample_cloud(f, r.critical_set, req);
  r.estimates = estimate_all(r.cloud);

  ProxRegularityRequest preq;
  preq.base = r.base;
  preq.rho = f.rho.value_or(f.smoothness);
  preq.delta = spec.radii.front();
  preq.pairs = spec.prox_pairs;
  preq.seed = spec.seed;
  r.prox = check_prox_regularity(f, preq);
  r.implications = cross_check(f, r.critical_set, r.cloud, r.estimates, r.prox, tol);

  if (spec.start) {
    r.start = *spec.start;
  } else {
    r.start = r.base;
    const auto coords = free_coordinates(f, r.base);
    r.start(static_cast<Eigen::Index>(coords.front())) += 0.5 * spec.radii.front();
  }
  const double step = spec.solver_step.value_or(f.smoothness > 0.0 ? 0.9 / f.smoothness : 0.1);
  r.solver = prox_grad_run(f, r.critical_set, r.start, step, spec.solver_iterations);

  if (!f.convex) {
    r.flow_skip_reason = "instance is not convex";
  } else {
    try {
      r.trajectory = integrate_flow(f, r.start, spec.flow_tau, spec.flow_horizon);
      r.flow = verify_flow_properties(f, *r.trajectory, r.critical_set);
    } catch (const CapabilityError& e) {
      r.trajectory.reset();
      r.flow_skip_reason = e.what();
    }
  }
  return r;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("REGMOD_DATA_DIR"); env && *env) return env;
  return REGMOD_DEFAULT_DATA_DIR;
}

std::vector<std::string> list_catalog(const std::filesystem::path& data_dir) {
  std::vector<std::string> names;
  const auto dir = data_dir / "catalog";
  if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string(), "catalog directory not found");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

FunctionInstance resolve_instance(const std::string& ref, const std::filesystem::path& data_dir) {
  const std::filesystem::path direct(ref);
  if (std::filesystem::is_regular_file(direct)) return load_instance_file(direct);
  const auto cataloged = data_dir / "catalog" / (ref + ".json");
  if (std::filesystem::is_regular_file(cataloged)) return load_instance_file(cataloged);
  throw ConfigError(ref, "no such instance file or catalog entry");
}

SuiteConfig parse_suite(const std::string& json_text, const std::filesystem::path& data_dir,
                        const SuiteOverrides& overrides) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("$", "expected a JSON object");
  reject_unknown(root, {"name", "seed", "out", "tol", "jobs", "emit", "runs", "description"}, "");

  SuiteConfig cfg;
  cfg.data_dir = data_dir;
  if (root.contains("name")) {
    if (!root["name"].is_string()) throw ConfigError("name", "expected a string");
    cfg.name = root["name"].get<std::string>();
  }
  std::optional<std::uint64_t> suite_seed;
  if (root.contains("seed")) suite_seed = seed_of(root["seed"], "seed");
  if (root.contains("out")) {
    if (!root["out"].is_string()) throw ConfigError("out", "expected a string");
    cfg.out_dir = root["out"].get<std::string>();
  }
  if (root.contains("tol")) cfg.tol = num(root["tol"], "tol");
  if (root.contains("jobs")) cfg.jobs = std::max<std::size_t>(1, count(root["jobs"], "jobs"));
  if (root.contains("emit")) {
    const json& e = root["emit"];
    if (!e.is_object()) throw ConfigError("emit", "expected an object");
    reject_unknown(e, {"json", "csv", "plotdata"}, "emit.");
    if (e.contains("json")) cfg.emit.json = flag(e["json"], "emit.json");
    if (e.contains("csv")) cfg.emit.csv = flag(e["csv"], "emit.csv");
    if (e.contains("plotdata")) cfg.emit.plotdata = flag(e["plotdata"], "emit.plotdata");
  }

  if (!root.contains("runs") || !root["runs"].is_array() || root["runs"].empty()) {
    throw ConfigError("runs", "expected a nonempty array");
  }
  for (std::size_t i = 0; i < root["runs"].size(); ++i) {
    const json& jr = root["runs"][i];
    const std::string at = "runs[" + std::to_string(i) + "].";
    if (!jr.is_object()) throw ConfigError("runs[" + std::to_string(i) + "]", "expected an object");
    reject_unknown(jr, {"instance", "base", "radii", "n", "seed", "prox_pairs", "start", "flow", "solver"}, at);
    RunSpec run;
    if (!jr.contains("instance") || !jr["instance"].is_string()) {
      throw ConfigError(at + "instance", "expected an instance name or path");
    }
    run.instance_ref = jr["instance"].get<std::string>();
    if (jr.contains("base")) {
      if (jr["base"].is_string()) {
        run.base_selector = jr["base"].get<std::string>();
      } else {
        run.base = vec_of(jr["base"], at + "base");
      }
    }
    if (jr.contains("radii")) {
      const Vector r = vec_of(jr["radii"], at + "radii");
      run.radii.assign(r.data(), r.data() + r.size());
    }
    if (jr.contains("n")) run.per_radius = count(jr["n"], at + "n");
    if (jr.contains("prox_pairs")) run.prox_pairs = count(jr["prox_pairs"], at + "prox_pairs");
    if (jr.contains("start")) run.start = vec_of(jr["start"], at + "start");
    if (jr.contains("flow")) {
      const json& fl = jr["flow"];
      if (!fl.is_object()) throw ConfigError(at + "flow", "expected an object");
      reject_unknown(fl, {"tau", "T"}, at + "flow.");
      if (fl.contains("tau")) run.flow_tau = num(fl["tau"], at + "flow.tau");
      if (fl.contains("T")) run.flow_horizon = num(fl["T"], at + "flow.T");
    }
    if (jr.contains("solver")) {
      const json& so = jr["solver"];
      if (!so.is_object()) throw ConfigError(at + "solver", "expected an object");
      reject_unknown(so, {"tau", "iterations"}, at + "solver.");
      if (so.contains("tau")) run.solver_step = num(so["tau"], at + "solver.tau");
      if (so.contains("iterations")) run.solver_iterations = count(so["iterations"], at + "solver.iterations");
    }
    std::optional<std::uint64_t> seed = overrides.seed;
    if (!seed && jr.contains("seed")) seed = seed_of(jr["seed"], at + "seed");
    if (!seed) seed = suite_seed;
    if (!seed) throw UsageError("seed required");
    run.seed = *seed;
    cfg.runs.push_back(std::move(run));
  }

  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  if (cfg.out_dir.empty()) cfg.out_dir = "regmod-out";
  if (overrides.jobs) cfg.jobs = std::max<std::size_t>(1, *overrides.jobs);
  if (overrides.tol) cfg.tol = *overrides.tol;
  cfg.force = overrides.force;
  if (!(cfg.tol >= 0.0)) throw ConfigError("tol", "must be nonnegative");
  return cfg;
}

SuiteConfig load_suite(const std::string& ref, const std::filesystem::path& data_dir,
                       const SuiteOverrides& overrides) {
  std::filesystem::path path(ref);
  if (!std::filesystem::is_regular_file(path)) path = data_dir / "suites" / (ref + ".json");
  if (!std::filesystem::is_regular_file(path)) throw ConfigError(ref, "no such suite file or bundled suite");
  SuiteConfig cfg = parse_suite(read_file(path), data_dir, overrides);
  if (cfg.name.empty()) cfg.name = path.stem().string();
  return cfg;
}

void guard_overwrite(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw UsageError("refusing to overwrite " + path.string() + " (pass --force)");
  }
}

SuiteResult run_suite(const SuiteConfig& config) {
  SuiteResult result;
  const std::size_t n = config.runs.size();
  result.runs.resize(n);
  std::vector<std::optional<FunctionInstance>> instances(n);
  std::vector<int> codes(n, 0);

  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < n; ++i) {
    auto& out = result.runs[i];
    out.label = config.runs[i].instance_ref;
    try {
      instances[i] = resolve_instance(config.runs[i].instance_ref, config.data_dir);
      out.label = instances[i]->name;
    } catch (const Error& e) {
      out.diagnostic = e.what();
      codes[i] = severity(e);
    }
    const int dup = seen[out.label]++;
    if (dup > 0) out.label += "-" + std::to_string(dup + 1);
  }

  auto targets = [&](std::size_t i, bool convex) {
    const auto dir = config.out_dir / result.runs[i].label;
    std::vector<std::pair<std::string, std::filesystem::path>> files;
    if (config.emit.json) files.emplace_back("report", dir / "report.json");
    if (config.emit.csv) files.emplace_back("samples", dir / "samples.csv");
    if (config.emit.plotdata) {
      files.emplace_back("kl", dir / "kl-fit.csv");
      files.emplace_back("solver", dir / "solver.csv");
    }
    if (config.emit.csv && convex) files.emplace_back("flow", dir / "flow.csv");
    return files;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (!instances[i]) continue;
    try {
      for (const auto& [_, path] : targets(i, instances[i]->convex)) guard_overwrite(path, config.force);
    } catch (const Error& e) {
      result.runs[i].diagnostic = e.what();
      codes[i] = 2;
      instances[i].reset();
    }
  }

  std::vector<std::optional<AnalysisResult>> analyses(n);
  std::vector<std::string> failures(n);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    if (!instances[i]) return;
    try {
      analyses[i] = analyze(*instances[i], config.runs[i], config.tol, 1);
    } catch (const Error& e) {
      failures[i] = e.what();
      codes[i] = severity(e);
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    auto& out = result.runs[i];
    if (!failures[i].empty()) out.diagnostic = failures[i];
    if (!analyses[i]) continue;
    const AnalysisResult& a = *analyses[i];
    try {
      for (const auto& [kind, path] : targets(i, a.instance.convex)) {
        std::string text;
        if (kind == "report") text = analysis_report_json(a);
        if (kind == "samples") text = samples_csv(a.cloud);
        if (kind == "kl") text = kl_plot_csv(a.cloud);
        if (kind == "solver") text = solver_csv(a.solver);
        if (kind == "flow") {
          if (!a.trajectory) continue;
          text = trajectory_csv(*a.trajectory);
        }
        write_text_file(path, text);
        out.files.push_back(path);
      }
    } catch (const Error& e) {
      out.diagnostic = e.what();
      codes[i] = 3;
      continue;
    }
    out.completed = true;
    out.checks_failed = a.implications.any_failed();
    if (out.checks_failed) codes[i] = 1;
  }

  for (int c : codes) result.exit_code = std::max(result.exit_code, c);
  return result;
}

}  // namespace regmod
