#pragma once

// Orchestration behind the calabi_lab commands: a run goes through
// rescale, integrate, diagnostics and classification, then the results are
// written out. `execute` does no file IO so tests can inspect the outcome.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "calabi/blowup.hpp"
#include "calabi/config.hpp"
#include "calabi/diagnostics.hpp"
#include "calabi/flow.hpp"

namespace calabi {

/// Fibre centre: where phi~' crosses b~/2, linearly interpolated.
double fibre_centre(const Profile& profile);

/// Translation-aligned sup distance between two phi~' profiles on the same
/// grid: each is shifted so its fibre centre sits at 0 and the overlap is
/// compared with monotone cubic interpolation.
double aligned_profile_distance(const Profile& p, const Profile& q);

struct AffineFit {
  double c1 = 0.0, c0 = 0.0;
  double residual = 0.0;  // sup over the trusted window
};

/// Least-squares fit of f against g over the trusted window of `profile`.
AffineFit affine_fit(const Profile& profile, const std::vector<double>& f,
                     const std::vector<double>& g);

struct ContractionReport {
  double soliton_a = 0.0;
  double c_star = 0.0;
  std::vector<double> discrepancy;  // per checkpoint, NaN where the chart is too short
};

struct CollapseReport {
  std::vector<double> rho_c;          // per checkpoint
  std::vector<double> R_at_centre;    // |R~| at rho_c
  std::vector<double> H_near_centre;  // sup |H| on |rho - rho_c| <= 3
  double fibre_limit = 0.0;           // pi sqrt(m + 2)
};

struct ExtinctionReport {
  double raw_convergence = 0.0;      // sup |phi~'(s_last) - phi~'(s_prev)|
  double aligned_convergence = 0.0;  // same after fibre-centre alignment
  double centre_drift = 0.0;         // rho_c(s_last) - rho_c(s_prev)
  AffineFit fit;                     // phi~ - u~ against phi~' at s_last
};

struct RunOutcome {
  RunConfig config;
  Rescaled rescaled;
  RunRecord record;
  double A = 1.0;
  bool weight_auto = true;
  std::vector<EstimateReport> reports;  // per checkpoint
  std::vector<VertexLocation> vertex_where;
  std::vector<double> audit_s, audit_a_inf;
  MonotonicityAudit monotonicity;
  std::vector<double> exterior;  // |R~(0)| per checkpoint
  std::optional<BlowupVerdict> verdict;
  std::string verdict_note;  // reason when no verdict
  std::optional<ContractionReport> contraction;
  std::optional<CollapseReport> collapse;
  std::optional<ExtinctionReport> extinction;
  bool failed = false;
  std::string failure_kind, failure_message;
  double failure_s = 0.0;
};

RunOutcome execute(const RunConfig& config);

/// Writes run.json, diagnostics.csv, report.json, verdict.json and the
/// optional snapshot and time-series CSVs.
void write_outputs(const RunOutcome& outcome, const std::string& directory);

/// CALABI_OUTPUT_DIR if set, otherwise `fallback`.
std::string output_directory(const std::string& fallback);

int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_soliton(int m, int n, double a, double x_max, const std::string& directory,
                std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& directory, unsigned jobs, const std::string& out_directory,
              std::ostream& out, std::ostream& err);

}  // namespace calabi
