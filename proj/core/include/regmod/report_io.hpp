#pragma once

#include <filesystem>
#include <string>

#include "regmod/analysis.hpp"

namespace regmod {

/// printf("%.17g"); non-finite values become "inf", "-inf" or "nan".
std::string format_number(double v);

/// Canonical JSON: keys sorted, numbers at 17 significant digits, non-finite
/// numbers written as the strings "inf", "-inf", "nan". Trailing newline.
std::string analysis_report_json(const AnalysisResult& r);
std::string critical_set_json(const CriticalSet& cs);
std::string flow_report_json(const Trajectory& traj, const FlowReport& rep);

/// Header row x0..x{p-1},fgap,sdist,cdist,rnorm.
std::string samples_csv(const SampleCloud& cloud);
/// log_gap,log_sdist over strict-gap samples, sorted by log_gap.
std::string kl_plot_csv(const SampleCloud& cloud);
/// k,distance,residual.
std::string solver_csv(const SolverRecord& rec);
/// k,x0..x{p-1},f,step_norm.
std::string trajectory_csv(const Trajectory& traj);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace regmod
