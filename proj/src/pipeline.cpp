#include "calabi/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

// Boost 1.74's pchip calls isnan unqualified
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <json.hpp>

#include "calabi/errors.hpp"
#include "calabi/geometry.hpp"
#include "calabi/io.hpp"
#include "calabi/soliton.hpp"

namespace calabi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// json has no NaN or infinity; write them as strings so nothing is lost
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::string snapshot_name(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s_%.2f.csv", s);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string to_string(VertexLocation w) {
  switch (w) {
    case VertexLocation::ZeroSection: return "zero_section";
    case VertexLocation::Interior: return "interior";
    case VertexLocation::InfinitySection: return "infinity_section";
  }
  return "?";
}

// Name of the most derived calabi error type, for messages and run.json.
std::string kind_of(const std::exception& e) {
  if (dynamic_cast<const ConeViolation*>(&e)) return "ConeViolation";
  if (dynamic_cast<const NumericalBlowup*>(&e)) return "NumericalBlowup";
  if (dynamic_cast<const FormulaMismatch*>(&e)) return "FormulaMismatch";
  if (dynamic_cast<const VertexAtBoundary*>(&e)) return "VertexAtBoundary";
  if (dynamic_cast<const PositivityLoss*>(&e)) return "PositivityLoss";
  if (dynamic_cast<const InvalidInput*>(&e)) return "InvalidInput";
  if (dynamic_cast<const InvalidGrid*>(&e)) return "InvalidGrid";
  return "Error";
}

}  // namespace

double fibre_centre(const Profile& p) {
  const double half = 0.5 * p.b;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (p.dphi[i] <= half && p.dphi[i + 1] > half) {
      const double x = (half - p.dphi[i]) / (p.dphi[i + 1] - p.dphi[i]);
      return p.grid[i] + x * p.grid.h();
    }
  }
  return kNaN;
}

double aligned_profile_distance(const Profile& p, const Profile& q) {
  const double cp = fibre_centre(p), cq = fibre_centre(q);
  if (!std::isfinite(cp) || !std::isfinite(cq))
    throw InvalidInput("aligned comparison needs both profiles to cross b/2");
  using boost::math::interpolators::pchip;
  std::vector<double> rq(q.grid.rho().begin(), q.grid.rho().end());
  pchip<std::vector<double>> fq(std::move(rq), std::vector<double>(q.dphi));
  // q(rho - cp + cq) against p(rho) wherever the shifted point is on the grid
  const double shift = cq - cp;
  double sup = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double r = p.grid[i] + shift;
    if (r < q.grid.rho_min() || r > q.grid.rho_max()) continue;
    sup = std::max(sup, std::abs(p.dphi[i] - fq(r)));
  }
  return sup;
}

AffineFit affine_fit(const Profile& p, const std::vector<double>& f, const std::vector<double>& g) {
  const Window w = trusted_window(p);
  if (w.hi <= w.lo + 2) throw InvalidInput("affine fit needs a trusted window of 3+ nodes");
  // centre the data first; raw values can be large and nearly constant
  double mf = 0.0, mg = 0.0;
  const double n = static_cast<double>(w.hi - w.lo);
  for (std::size_t i = w.lo; i < w.hi; ++i) {
    mf += f[i];
    mg += g[i];
  }
  mf /= n;
  mg /= n;
  double sgg = 0.0, sgf = 0.0;
  for (std::size_t i = w.lo; i < w.hi; ++i) {
    sgg += (g[i] - mg) * (g[i] - mg);
    sgf += (g[i] - mg) * (f[i] - mf);
  }
  AffineFit fit;
  fit.c1 = sgf / sgg;
  fit.c0 = mf - fit.c1 * mg;
  for (std::size_t i = w.lo; i < w.hi; ++i)
    fit.residual = std::max(fit.residual, std::abs(f[i] - fit.c1 * g[i] - fit.c0));
  return fit;
}

RunOutcome execute(const RunConfig& cfg) {
  RunOutcome out;
  out.config = cfg;
  const BundleConfig& bc = cfg.bundle;
  bc.validate();
  const Grid grid = make_grid(cfg.rho_min, cfg.rho_max, cfg.count);
  out.rescaled = rescale_to_unit_time(class_path(bc, cfg.class0), cfg.class0);
  const ClassPath& path = out.rescaled.path;

  RunSchedule sched;
  sched.checkpoints = cfg.checkpoints;
  if (sched.checkpoints.empty() || sched.checkpoints.back() < cfg.s_max)
    sched.checkpoints.push_back(cfg.s_max);
  StepController ctl;
  ctl.sigma = cfg.cfl_sigma;
  ctl.tol = cfg.tolerance;
  out.record = run(bc, out.rescaled.class0, grid, sched, ctl);
  if (!out.record.completed) {
    out.failed = true;
    out.failure_kind = out.record.failure_kind;
    out.failure_message = out.record.termination;
    out.failure_s = out.record.failed_s;
    return out;
  }
  const auto& cps = out.record.checkpoints;
  const auto& samples = out.record.samples;

  double cur_s = 0.0;
  try {
    out.weight_auto = !cfg.weight_A.has_value();
    out.A = out.weight_auto ? choose_weight(cps, bc, path) : *cfg.weight_A;

    for (const auto& st : cps) {
      cur_s = st.s;
      const PotentialTrack tr = potential_track(st, bc, path, out.A);
      out.reports.push_back(estimate_report(st, tr, bc, path));
      out.vertex_where.push_back(tr.where);
    }
    for (const auto& st : samples) {
      cur_s = st.s;
      out.audit_s.push_back(st.s);
      out.audit_a_inf.push_back(potential_track(st, bc, path, out.A).a_inf);
    }
    cur_s = cps.back().s;
    out.monotonicity = monotonicity_audit(out.audit_s, out.audit_a_inf);
    out.exterior = exterior_flatness(cps, bc, 0.0);

    std::vector<VolumeSample> vols;
    for (const auto& r : out.reports) vols.push_back({r.s, r.volume_total});
    try {
      out.verdict = classify_limit(vols, bc.dim());
    } catch (const Inconclusive& e) {
      out.verdict_note = e.what();
    }

    switch (path.type) {
      case SingularityType::Contraction: {
        ContractionReport cr;
        // the normalized class tends to (slope_a, b~) with b~ -> infinity
        cr.soliton_a = path.slope_a;
        cr.c_star = solve_c_star(bc, cr.soliton_a).c_star;
        for (const auto& st : cps) {
          cur_s = st.s;
          double d = kNaN;
          try {
            const MomentumChart chart = flow_to_momentum(st.normalized_profile());
            d = momentum_discrepancy(chart, bc, cr.soliton_a, cr.c_star);
          } catch (const InvalidInput&) {
            // chart does not yet cover [0.1, 2]
          }
          cr.discrepancy.push_back(d);
        }
        if (out.verdict) out.verdict->evidence.comparison_sup = cr.discrepancy.back();
        out.contraction = std::move(cr);
        break;
      }
      case SingularityType::Collapse: {
        CollapseReport cr;
        cr.fibre_limit = std::numbers::pi * std::sqrt(bc.m + 2.0);
        for (const auto& st : cps) {
          cur_s = st.s;
          const Profile p = st.normalized_profile();
          const double rc = fibre_centre(p);
          cr.rho_c.push_back(rc);
          const auto curv = scalar_curvature_both(p, bc, st.normalized_class().a,
                                                  std::numeric_limits<double>::infinity());
          const auto H = h_quantity(p);
          double hs = 0.0, R = kNaN;
          if (std::isfinite(rc)) {
            const auto k = static_cast<std::size_t>(std::lround((rc - grid.rho_min()) / grid.h()));
            R = std::abs(curv.R[std::min(k, p.size() - 1)]);
            for (std::size_t i = 0; i < p.size(); ++i)
              if (std::abs(grid[i] - rc) <= 3.0) hs = std::max(hs, std::abs(H[i]));
          }
          cr.R_at_centre.push_back(R);
          cr.H_near_centre.push_back(hs);
        }
        if (out.verdict) out.verdict->evidence.H_sup_local = cr.H_near_centre.back();
        out.collapse = std::move(cr);
        break;
      }
      case SingularityType::Extinction: {
        ExtinctionReport er;
        if (cps.size() >= 2) {
          const Profile p = cps[cps.size() - 1].normalized_profile();
          const Profile q = cps[cps.size() - 2].normalized_profile();
          for (std::size_t i = 0; i < p.size(); ++i)
            er.raw_convergence = std::max(er.raw_convergence, std::abs(p.dphi[i] - q.dphi[i]));
          er.aligned_convergence = aligned_profile_distance(p, q);
          er.centre_drift = fibre_centre(p) - fibre_centre(q);
          const auto pot = ricci_potential(p, bc, cps.back().normalized_class().a);
          auto f = reconstruct_phi(p);
          for (std::size_t i = 0; i < f.size(); ++i) f[i] -= pot.u[i];
          er.fit = affine_fit(p, f, p.dphi);
          if (out.verdict) out.verdict->evidence.comparison_sup = er.fit.residual;
        }
        out.extinction = std::move(er);
        break;
      }
    }
  } catch (const Error& e) {
    out.failed = true;
    out.failure_kind = kind_of(e);
    out.failure_message = e.what();
    out.failure_s = cur_s;
  }
  return out;
}

std::string output_directory(const std::string& fallback) {
  if (const char* env = std::getenv("CALABI_OUTPUT_DIR"); env && *env) return env;
  return fallback;
}

void write_outputs(const RunOutcome& o, const std::string& directory) {
  const fs::path dir(directory);
  ensure_directory(dir.string());
  const RunConfig& c = o.config;
  const ClassPath& path = o.rescaled.path;

  json run;
  run["name"] = c.name;
  run["bundle"] = {{"n", c.bundle.n},
                   {"m", c.bundle.m},
                   {"lambda", c.bundle.lambda},
                   {"base_volume_factor", c.bundle.base_volume_factor}};
  run["class"] = {{"a0", c.class0.a}, {"b0", c.class0.b}};
  run["grid"] = {{"rho_min", c.rho_min}, {"rho_max", c.rho_max}, {"count", c.count}};
  run["time"] = {{"s_max", c.s_max},
                 {"cfl_sigma", c.cfl_sigma},
                 {"tolerance", c.tolerance},
                 {"checkpoints", c.checkpoints}};
  run["singularity"] = {{"type", to_string(path.type)},
                        {"t_a", num(path.t_a)},
                        {"t_b", num(path.t_b)},
                        {"anticanonical", path.anticanonical},
                        {"rescaled_a0", o.rescaled.class0.a},
                        {"rescaled_b0", o.rescaled.class0.b}};
  run["weight"] = {{"A", o.A}, {"auto", o.weight_auto}};
  run["integrator"] = {{"steps", o.record.steps},
                       {"explicit_dt_initial", num(o.record.explicit_dt_initial)},
                       {"explicit_dt_min", num(o.record.explicit_dt_min)}};
  run["completed"] = !o.failed;
  if (o.failed)
    run["failure"] = {{"kind", o.failure_kind}, {"s", o.failure_s}, {"message", o.failure_message}};
  write_json(dir / "run.json", run);
  if (o.failed) return;

  {
    CsvWriter csv((dir / "diagnostics.csv").string(),
                  {"s", "t", "H_min", "H_max", "third_ratio_sup", "typeI", "liyau", "local_typeI",
                   "harnack", "vertex_rho", "a_inf", "phi_at_vertex", "dist_to_P0", "fibre_diam",
                   "volume_total"});
    for (const auto& r : o.reports)
      csv.row({r.s, r.t, r.H_min, r.H_max, r.third_ratio_sup, r.typeI, r.liyau, r.local_typeI,
               r.harnack, r.vertex_rho, r.a_inf, r.phi_at_vertex, r.dist_to_P0, r.fibre_diam,
               r.volume_total});
  }

  json rep;
  rep["monotonicity"] = {{"B0", num(o.monotonicity.B0)},
                         {"B0_increasing", num(o.monotonicity.B0_increasing)},
                         {"B0_decreasing", num(o.monotonicity.B0_decreasing)},
                         {"B0_half", num(o.monotonicity.B0_half)},
                         {"samples", o.monotonicity.samples},
                         {"stable", o.monotonicity.stable},
                         {"passed", o.monotonicity.passed}};
  json per = json::array();
  for (std::size_t k = 0; k < o.reports.size(); ++k) {
    const auto& r = o.reports[k];
    per.push_back({{"s", r.s},
                   {"vertex", to_string(o.vertex_where[k])},
                   {"vertex_rho", num(r.vertex_rho)},
                   {"typeI_at_vertex", num(r.typeI_at_vertex)},
                   {"diam_cp", num(r.diam_cp)},
                   {"volume_normalized", num(r.volume_normalized)},
                   {"formula_mismatch", num(r.formula_mismatch)},
                   {"exterior_R", num(o.exterior[k])}});
  }
  rep["checkpoints"] = per;
  if (o.contraction) {
    json d = json::array();
    for (double x : o.contraction->discrepancy) d.push_back(num(x));
    rep["contraction"] = {{"soliton_a", o.contraction->soliton_a},
                          {"c_star", o.contraction->c_star},
                          {"momentum_discrepancy", d}};
  }
  if (o.collapse) {
    json rc = json::array(), R = json::array(), H = json::array();
    for (std::size_t k = 0; k < o.collapse->rho_c.size(); ++k) {
      rc.push_back(num(o.collapse->rho_c[k]));
      R.push_back(num(o.collapse->R_at_centre[k]));
      H.push_back(num(o.collapse->H_near_centre[k]));
    }
    rep["collapse"] = {{"fibre_limit", o.collapse->fibre_limit},
                       {"rho_c", rc},
                       {"R_at_centre", R},
                       {"H_near_centre", H}};
  }
  if (o.extinction) {
    const auto& e = *o.extinction;
    rep["extinction"] = {{"raw_convergence", num(e.raw_convergence)},
                         {"aligned_convergence", num(e.aligned_convergence)},
                         {"centre_drift", num(e.centre_drift)},
                         {"affine_c1", num(e.fit.c1)},
                         {"affine_c0", num(e.fit.c0)},
                         {"affine_residual", num(e.fit.residual)}};
  }
  write_json(dir / "report.json", rep);

  json ver;
  if (o.verdict) {
    const auto& v = *o.verdict;
    ver["case"] = to_string(v.kind);
    ver["evidence"] = {{"vol_liminf_proxy", num(v.evidence.vol_liminf_proxy)},
                       {"vol_typeI_ratio", num(v.evidence.vol_typeI_ratio)},
                       {"vol_typeI_spread", num(v.evidence.vol_typeI_spread)},
                       {"comparison_sup", num(v.evidence.comparison_sup)},
                       {"H_sup_local", num(v.evidence.H_sup_local)}};
    ver["thresholds"] = {{"liminf_fraction", v.thresholds.liminf_fraction},
                         {"stable_band", v.thresholds.stable_band},
                         {"growth_factor", v.thresholds.growth_factor},
                         {"min_s", v.thresholds.min_s}};
  } else {
    ver["case"] = "Inconclusive";
    ver["reason"] = o.verdict_note;
  }
  write_json(dir / "verdict.json", ver);

  if (c.emit_profiles) {
    const fs::path snap = dir / "snapshots";
    ensure_directory(snap.string());
    for (const auto& st : o.record.checkpoints) {
      const Profile p = st.normalized_profile();
      const KahlerClass cls = st.normalized_class();
      const auto curv = scalar_curvature_both(p, c.bundle, cls.a,
                                              std::numeric_limits<double>::infinity());
      const auto tr = potential_track(st, c.bundle, path, o.A);
      const auto H = h_quantity(p);
      CsvWriter csv((snap / snapshot_name(st.s)).string(),
                    {"rho", "dphi", "d2phi", "d3phi", "d4phi", "R", "u_w", "H"});
      for (std::size_t i = 0; i < p.size(); ++i)
        csv.row({p.grid[i], p.dphi[i], p.d2phi[i], p.d3phi[i], p.d4phi[i], curv.R[i], tr.u_w[i],
                 H[i]});
    }
  }
  if (c.emit_plots_data) {
    CsvWriter csv((dir / "timeseries.csv").string(), {"s", "a_inf", "exp_minus_s_a_inf"});
    for (std::size_t k = 0; k < o.audit_s.size(); ++k)
      csv.row({o.audit_s[k], o.audit_a_inf[k], std::exp(-o.audit_s[k]) * o.audit_a_inf[k]});
  }
}

int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  RunOutcome o;
  try {
    o = execute(cfg);
  } catch (const Error& e) {
    // preconditions that only show up once the class path is known
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  const std::string dir = output_directory(cfg.output_directory);
  write_outputs(o, dir);
  if (o.failed) {
    err << "numerical failure at s = " << format_number(o.failure_s) << ": " << o.failure_kind
        << ": " << o.failure_message << '\n';
    return 3;
  }
  out << "verdict: " << (o.verdict ? to_string(o.verdict->kind) : std::string("Inconclusive"))
      << "\noutputs: " << dir << '\n';
  return 0;
}

int cmd_soliton(int m, int n, double a, double x_max, const std::string& directory,
                std::ostream& out, std::ostream& err) {
  BundleConfig c;
  c.m = m;
  c.n = n;
  try {
    c.validate();
    if (!(a > 0)) throw InvalidInput("a must be > 0");
    if (!(x_max > 1e-3)) throw InvalidInput("x-max must be > 1e-3");
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << '\n';
    return 2;
  }
  CStar cs;
  try {
    cs = solve_c_star(c, a);
  } catch (const BracketError& e) {
    err << "bracket error: " << e.what() << '\n';
    return 3;
  }
  SolitonProfile sp;
  try {
    sp = soliton_profile(c, a, cs.c_star, x_max);
  } catch (const PositivityLoss& e) {
    err << "positivity loss: " << e.what() << '\n';
    return 3;
  }
  ensure_directory(directory);
  const fs::path dir(directory);
  {
    CsvWriter csv((dir / "soliton.csv").string(), {"x", "w", "residual"});
    for (std::size_t i = 0; i < sp.x.size(); ++i) csv.row({sp.x[i], sp.w[i], sp.residual[i]});
  }
  const double x1 = sp.x.back(), x0 = 0.5 * x1;
  const double slope = (sp.w.back() - soliton_w(c, a, cs.c_star, x0)) / (x1 - x0);
  json j = {{"m", m},
            {"n", n},
            {"a", a},
            {"c_star", cs.c_star},
            {"I_bracket", {cs.lo, cs.hi}},
            {"asymptotic_slope", slope}};
  write_json(dir / "soliton.json", j);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", cs.c_star);
  out << "c_star: " << buf << '\n';
  return 0;
}

int cmd_sweep(const std::string& directory, unsigned jobs, const std::string& out_directory,
              std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(directory, ec))
    for (const auto& e : fs::directory_iterator(directory))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  if (files.empty()) {
    err << "sweep: no .json configs in " << directory << '\n';
    return 2;
  }
  std::sort(files.begin(), files.end());

  struct Row {
    bool ok = false;
    std::string name, verdict, error;
    EstimateReport last;
  };
  std::vector<Row> rows(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < files.size();) {
      Row& r = rows[k];
      r.name = files[k].stem().string();
      try {
        const RunConfig cfg = load_config(files[k].string());
        const RunOutcome o = execute(cfg);
        write_outputs(o, (fs::path(out_directory) / r.name).string());
        if (o.failed) {
          r.error = o.failure_kind + " at s = " + format_number(o.failure_s);
          continue;
        }
        r.ok = true;
        r.verdict = o.verdict ? to_string(o.verdict->kind) : "Inconclusive";
        r.last = o.reports.back();
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  ensure_directory(out_directory);
  CsvWriter csv((fs::path(out_directory) / "sweep.csv").string(),
                {"name", "verdict", "s", "H_min", "H_max", "third_ratio_sup", "typeI", "liyau",
                 "local_typeI", "harnack", "vertex_rho", "a_inf", "fibre_diam", "volume_total"});
  int failures = 0;
  for (const auto& r : rows) {
    if (!r.ok) {
      ++failures;
      err << "sweep: " << r.name << " failed: " << r.error << '\n';
      continue;
    }
    const auto& e = r.last;
    std::vector<std::string> rest{r.verdict};
    for (double v : {e.s, e.H_min, e.H_max, e.third_ratio_sup, e.typeI, e.liyau, e.local_typeI,
                     e.harnack, e.vertex_rho, e.a_inf, e.fibre_diam, e.volume_total})
      rest.push_back(format_number(v));
    csv.row(r.name, rest);
  }
  out << "sweep: " << rows.size() - failures << " of " << rows.size() << " runs completed\n";
  return failures ? 1 : 0;
}

}  // namespace calabi
