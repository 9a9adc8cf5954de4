#include "regmod/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "regmod/errors.hpp"

namespace regmod {

namespace {

using nlohmann::json;

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json vec(const Vector& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(number(x(i)));
  return a;
}

json numbers(const std::vector<double>& xs) {
  json a = json::array();
  for (double v : xs) a.push_back(number(v));
  return a;
}

json mat(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

void write_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        write_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        write_canonical(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      out += format_number(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

std::string canonical(const json& j) {
  std::string out;
  write_canonical(j, out);
  out += '\n';
  return out;
}

json estimate_json(const std::optional<ModulusEstimate>& est, const std::string& reason) {
  if (!est) return json{{"available", false}, {"reason", reason}};
  json j;
  j["available"] = est->unavailable.empty();
  if (!est->unavailable.empty()) j["reason"] = est->unavailable;
  j["kind"] = std::string(modulus_kind_name(est->kind));
  j["value"] = number(est->value);
  j["exponent"] = optional_number(est->exponent);
  j["fit_residual"] = optional_number(est->fit_residual);
  j["window"] = optional_number(est->window);
  j["per_radius"] = numbers(est->per_radius);
  j["growth_factors"] = numbers(est->growth_factors);
  j["divergent"] = est->divergent;
  j["growth_failure"] = est->growth_failure;
  j["samples_used"] = est->samples_used;
  return j;
}

json monitor_json(const FlowMonitor& m) {
  json j;
  j["name"] = m.name;
  j["pass"] = m.pass;
  j["failed_step"] = m.failed_step ? json(*m.failed_step) : json(nullptr);
  j["worst"] = number(m.worst);
  return j;
}

json flow_json(const Trajectory& traj, const FlowReport& rep) {
  json j;
  j["status"] = "run";
  j["x0"] = vec(traj.x0);
  j["tau"] = number(traj.tau);
  j["horizon"] = number(traj.horizon);
  j["steps"] = traj.steps.size();
  j["limit"] = vec(traj.limit());
  j["limit_value"] = number(rep.limit_value);
  j["terminal_distance"] = number(rep.terminal_distance);
  j["grid_points"] = rep.grid_points;
  j["monitors"] = json{{"a", monitor_json(rep.descent)},
                       {"b", monitor_json(rep.distance)},
                       {"c", monitor_json(rep.convergence)},
                       {"d", monitor_json(rep.energy)}};
  j["all_pass"] = rep.all_pass();
  return j;
}

json piece_json(const CriticalPiece& pc) {
  json j;
  j["kind"] = std::string(piece_kind_name(pc.kind));
  j["support"] = pc.support;
  if (pc.kind == CriticalPiece::Kind::box) {
    j["lower"] = vec(pc.lower);
    j["upper"] = vec(pc.upper);
    return j;
  }
  j["anchor"] = vec(pc.anchor);
  j["dimension"] = static_cast<std::size_t>(pc.basis.cols());
  json basis = json::array();
  for (Eigen::Index c = 0; c < pc.basis.cols(); ++c) basis.push_back(vec(pc.basis.col(c)));
  j["basis"] = basis;
  if (pc.kind == CriticalPiece::Kind::polyhedral) {
    j["constraints"] = mat(pc.constraints);
    j["bounds"] = vec(pc.bounds);
  }
  return j;
}

std::string csv_line(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += format_number(values[i]);
  }
  line += '\n';
  return line;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // fold -0 so reruns cannot differ in sign of zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string critical_set_json(const CriticalSet& cs) {
  json j;
  j["instance"] = cs.instance();
  j["dimension"] = cs.dimension();
  json pieces = json::array();
  for (const auto& pc : cs.pieces()) pieces.push_back(piece_json(pc));
  j["components"] = pieces;
  return canonical(j);
}

std::string flow_report_json(const Trajectory& traj, const FlowReport& rep) {
  json j = flow_json(traj, rep);
  j["instance"] = traj.instance;
  return canonical(j);
}

std::string analysis_report_json(const AnalysisResult& r) {
  const auto& f = r.instance;
  json j;
  j["instance"] = f.name;
  j["instance_ref"] = r.spec.instance_ref;
  j["family"] = std::string(family_name(f.family));
  j["dimension"] = f.dimension;
  j["base"] = vec(r.base);
  j["seed"] = r.spec.seed;
  j["tol"] = number(r.implications.tol);
  j["smoothness"] = number(f.smoothness);

  json cloud;
  cloud["radii"] = numbers(r.cloud.radii);
  cloud["per_radius"] = r.cloud.per_radius;
  cloud["samples"] = r.cloud.records.size();
  cloud["excluded"] = r.cloud.excluded;
  cloud["reference_level"] = number(r.cloud.reference);
  j["cloud"] = cloud;

  j["critical_set"] = json{{"components", r.critical_set.pieces().size()}};

  json est;
  est["kl"] = estimate_json(r.estimates.kl, r.estimates.kl_reason);
  est["subregularity"] = estimate_json(r.estimates.subregularity, "");
  est["quadratic_growth"] = estimate_json(r.estimates.quadratic_growth, "");
  est["luo_tseng"] = estimate_json(r.estimates.luo_tseng, r.estimates.luo_tseng_reason);
  j["estimates"] = est;

  json prox;
  prox["rho"] = number(r.prox.rho);
  prox["delta"] = number(r.prox.delta);
  prox["pairs"] = r.prox.pairs;
  prox["worst_slack"] = number(r.prox.worst_slack);
  prox["rho_min"] = number(r.prox.rho_min);
  prox["certified"] = r.prox.certified;
  j["prox_regularity"] = prox;

  const Premises& pr = r.implications.premises;
  json prem;
  prem["convex"] = pr.convex;
  prem["locally_convex"] = pr.locally_convex;
  prem["h_convex"] = pr.h_convex;
  prem["composite"] = pr.composite;
  prem["continuous_on_crit"] = pr.continuous_on_crit;
  prem["continuity_source"] = pr.continuity_source;
  prem["crit_level_bounded"] = pr.crit_level_bounded;
  prem["crit_level_bounded_source"] = pr.crit_level_bounded_source;
  prem["local_min"] = pr.local_min;
  prem["local_min_source"] = pr.local_min_source;
  prem["base_critical"] = pr.base_critical;
  prem["rho"] = number(pr.rho);
  prem["rho_certified"] = pr.rho_certified;
  j["premises"] = prem;

  json checks = json::array();
  for (const auto& c : r.implications.checks) {
    json cj;
    cj["name"] = c.name;
    cj["arrow"] = c.arrow;
    cj["constant"] = c.constant;
    cj["lhs"] = number(c.lhs);
    cj["rhs"] = number(c.rhs);
    cj["slack"] = number(c.slack);
    cj["status"] = std::string(check_status_name(c.status));
    cj["reason"] = c.reason;
    cj["samples_checked"] = c.samples_checked;
    cj["violations"] = c.violations;
    checks.push_back(cj);
  }
  j["checks"] = checks;

  json solver;
  solver["mode"] = r.solver.mode;
  solver["step"] = number(r.solver.step);
  solver["start"] = vec(r.start);
  solver["iterations"] = r.solver.iterates.empty() ? 0 : r.solver.iterates.size() - 1;
  solver["rate"] = number(r.solver.rate);
  solver["rate_points"] = r.solver.rate_points;
  solver["diverged"] = r.solver.diverged;
  solver["final"] = r.solver.iterates.empty() ? json::array() : vec(r.solver.iterates.back());
  solver["final_distance"] = number(r.solver.distances.empty() ? 0.0 : r.solver.distances.back());
  j["solver"] = solver;

  if (r.trajectory && r.flow) {
    j["flow"] = flow_json(*r.trajectory, *r.flow);
  } else {
    j["flow"] = json{{"status", "skipped"}, {"reason", r.flow_skip_reason}};
  }
  return canonical(j);
}

std::string samples_csv(const SampleCloud& cloud) {
  std::string out;
  const auto p = cloud.base.size();
  for (Eigen::Index i = 0; i < p; ++i) out += "x" + std::to_string(i) + ",";
  out += "fgap,sdist,cdist,rnorm\n";
  for (const auto& r : cloud.records) {
    std::vector<double> row(r.x.data(), r.x.data() + r.x.size());
    row.insert(row.end(), {r.fgap, r.sdist, r.cdist, r.rnorm});
    out += csv_line(row);
  }
  return out;
}

std::string kl_plot_csv(const SampleCloud& cloud) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : cloud.records) {
    if (r.fgap > 1e-12 && r.sdist > 0.0) pts.emplace_back(std::log(r.fgap), std::log(r.sdist));
  }
  std::sort(pts.begin(), pts.end());
  std::string out = "log_gap,log_sdist\n";
  for (const auto& [a, b] : pts) out += csv_line({a, b});
  return out;
}

std::string solver_csv(const SolverRecord& rec) {
  std::string out = "k,distance,residual\n";
  for (std::size_t k = 0; k < rec.distances.size(); ++k) {
    out += std::to_string(k) + "," + csv_line({rec.distances[k], rec.residuals[k]});
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "k,";
  const auto p = traj.x0.size();
  for (Eigen::Index i = 0; i < p; ++i) out += "x" + std::to_string(i) + ",";
  out += "f,step_norm\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Vector& x = traj.states[k];
    std::vector<double> row(x.data(), x.data() + x.size());
    row.push_back(traj.values[k]);
    row.push_back(k == 0 ? 0.0 : traj.steps[k - 1]);
    out += std::to_string(k) + "," + csv_line(row);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed while writing " + path.string());
}

}  // namespace regmod
