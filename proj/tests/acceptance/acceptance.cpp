// Acceptance run: exact oracles plus the three benchmark flows. Prints one
// PASS/FAIL line per criterion and exits non-zero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "calabi/errors.hpp"
#include "calabi/geometry.hpp"
#include "calabi/pipeline.hpp"
#include "calabi/soliton.hpp"

using namespace calabi;

namespace {

struct Line {
  bool ok = true;
  std::ostringstream detail;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [fail: " << what << "]";
    }
  }
  template <class T>
  Line& note(const char* key, T v) {
    detail << ' ' << key << '=' << v;
    return *this;
  }
};

int failures = 0;

void report(const char* id, const char* title, Line& l) {
  std::printf("%s %s: %s%s\n", id, l.ok ? "PASS" : "FAIL", title, l.detail.str().c_str());
  std::fflush(stdout);
  if (!l.ok) ++failures;
}

BundleConfig bundle(int n = 1, int m = 0, double lambda = 2.0) {
  BundleConfig c;
  c.n = n;
  c.m = m;
  c.lambda = lambda;
  return c;
}

RunConfig benchmark(const std::string& name, double a0, double b0) {
  RunConfig c;
  c.name = name;
  c.bundle = bundle();
  c.class0 = {a0, b0};
  c.rho_min = -30;
  c.rho_max = 30;
  c.count = 2049;
  c.s_max = 8;
  c.cfl_sigma = 0.2;
  for (int k = 0; k <= 8; ++k) c.checkpoints.push_back(k);
  return c;
}

double rel(double x, double want) { return std::abs(x - want) / std::abs(want); }

std::vector<double> random_theta(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> centre(-6.0, 6.0), width(1.5, 4.0), amp(-0.4, 0.4);
  std::vector<double> theta(g.size(), 0.0);
  for (int k = 0; k < 4; ++k) {
    const double c = centre(rng), w = width(rng), A = amp(rng);
    for (std::size_t i = 0; i < g.size(); ++i) theta[i] += A * std::exp(-std::pow((g[i] - c) / w, 2));
  }
  return theta;
}

void ac1() {
  Line l;
  const Grid g = make_grid(-30, 30, 2049);
  const auto c = bundle();
  const std::size_t k = g.anchor_index();
  {
    const double R = scalar_curvature(initial_profile({1, 1}, g), c, 1.0)[k];
    l.note("R0_rel", rel(R, 10.0 / 3.0));
    l.check(rel(R, 10.0 / 3.0) <= 1e-6, "a: R(0) = 10/3");
  }
  {
    double worst = 0;
    for (double b : {0.5, 1.0, 2.5})
      worst = std::max(worst, rel(fibre_diameter(initial_profile({1, b}, g)), std::numbers::pi * std::sqrt(b)));
    l.note("diam_rel", worst);
    l.check(worst <= 1e-4, "b: fibre diameter pi sqrt(b)");
  }
  {
    const double v = volume(initial_profile({1, 1}, g), c, 1.0);
    l.note("vol_rel", rel(v, 1.5));
    l.check(rel(v, 1.5) <= 1e-8, "c: volume 3/2");
  }
  {
    const double e1 = std::abs(solve_c_star(c, 1.0).c_star - std::sqrt(2.0));
    const double e2 = std::abs(solve_c_star(c, 2.0).c_star - (1 + std::sqrt(17.0)) / 4);
    double res = 0;
    for (double a : {1.0, 2.0}) {
      const double cs = solve_c_star(c, a).c_star;
      const auto sp = soliton_profile(c, a, cs, 1e3, 4096, 1e-3);
      for (double r : sp.residual) res = std::max(res, std::abs(r));
    }
    l.note("cstar_err", std::max(e1, e2)).note("ode_residual", res);
    l.check(e1 <= 1e-10 && e2 <= 1e-10, "d: c* exact roots");
    l.check(res <= 1e-8, "d: soliton ODE residual");
  }
  {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ua(0.2, 3.0), ub(0.3, 4.0), ul(-2.0, 4.0);
    std::uniform_int_distribution<int> un(1, 3), um(0, 2);
    double dual = 0, trace = 0;
    for (int t = 0; t < 50; ++t) {
      const auto bc = bundle(un(rng), um(rng), ul(rng));
      const double a = ua(rng), b = ub(rng);
      const Profile p = profile_from_theta(g, b, random_theta(g, rng), 0.0);
      const auto curv = scalar_curvature_both(p, bc, a, std::numeric_limits<double>::infinity());
      dual = std::max(dual, curv.max_rel_mismatch);
      const auto pot = ricci_potential(p, bc, a);
      const auto lap = radial_laplacian(p, bc, a, pot.du, pot.d2u);
      double scale = 0;
      for (std::size_t i = curv.window.lo; i < curv.window.hi; ++i) scale = std::max(scale, std::abs(curv.R[i]));
      for (std::size_t i = curv.window.lo; i < curv.window.hi; ++i) {
        const double id = curv.R[i] - bc.n * (bc.lambda - bc.m - 1) / (a + p.dphi[i]) - lap[i];
        trace = std::max(trace, std::abs(id) / std::max(std::abs(curv.R[i]), 1e-3 * scale));
      }
    }
    l.note("dual_rel", dual).note("trace_rel", trace);
    l.check(dual <= 1e-6, "e: dual formulas");
    l.check(trace <= 1e-6, "e: trace identity");
  }
  {
    double err[2][3] = {};
    const std::size_t counts[2] = {1025, 2049};
    for (int j = 0; j < 2; ++j) {
      const Grid gg(-30, 30, counts[j]);
      const Profile exact = initial_profile({1, 1}, gg);
      const Profile p = differentiate(exact);
      for (std::size_t i = 0; i < gg.size(); ++i) {
        if (std::abs(gg[i]) > 5) continue;
        err[j][0] = std::max(err[j][0], std::abs(p.d2phi[i] - exact.d2phi[i]));
        err[j][1] = std::max(err[j][1], std::abs(p.d3phi[i] - exact.d3phi[i]));
        err[j][2] = std::max(err[j][2], std::abs(p.d4phi[i] - exact.d4phi[i]));
      }
    }
    double slope = 1e9;
    for (int d = 0; d < 3; ++d) slope = std::min(slope, std::log2(err[0][d] / err[1][d]));
    l.note("min_slope", slope);
    l.check(slope >= 3.5, "f: stencil order");
  }
  report("AC1", "exact oracles", l);
}

}  // namespace

int main() {
  ac1();

  // the three benchmark flows run concurrently
  auto fut_con = std::async(std::launch::async, [] { return execute(benchmark("contraction", 1, 3)); });
  auto fut_col = std::async(std::launch::async, [] { return execute(benchmark("collapse", 2, 2)); });
  auto fut_ext = std::async(std::launch::async, [] { return execute(benchmark("extinction", 1, 2)); });
  const RunOutcome con = fut_con.get(), col = fut_col.get(), ext = fut_ext.get();
  const RunOutcome* all[3] = {&con, &col, &ext};

  for (const RunOutcome* o : all) {
    if (o->failed) {
      std::printf("run %s failed at s = %g: %s: %s\n", o->config.name.c_str(), o->failure_s,
                  o->failure_kind.c_str(), o->failure_message.c_str());
      for (const char* id : {"AC2", "AC3", "AC4", "AC5", "AC6", "AC7"})
        std::printf("%s FAIL: benchmark run did not complete\n", id);
      return 1;
    }
  }
  auto at = [](const RunOutcome& o, double s) -> const EstimateReport& {
    for (const auto& r : o.reports)
      if (r.s == s) return r;
    throw Error("no checkpoint at requested s");
  };
  auto idx = [](const RunOutcome& o, double s) {
    for (std::size_t k = 0; k < o.reports.size(); ++k)
      if (o.reports[k].s == s) return k;
    throw Error("no checkpoint at requested s");
  };

  {
    Line l;
    const int m = 0, n = 1;
    const double lo = std::log((m + 1.0) / (m + n + 1)) - 0.05, hi = std::log(4.0 * m + 1) + 0.05;
    for (const RunOutcome* o : all) {
      double hmin = 1e9, hmax = -1e9;
      for (const auto& r : o->reports) {
        hmin = std::min(hmin, r.H_min);
        hmax = std::max(hmax, r.H_max);
      }
      const double t4 = at(*o, 4).third_ratio_sup, t8 = at(*o, 8).third_ratio_sup;
      l.detail << ' ' << o->config.name << ":H=[" << hmin << ',' << hmax << "],third4=" << t4
               << ",third8=" << t8;
      l.check(hmin >= lo && hmax <= hi, o->config.name + " H bounds");
      l.check(std::isfinite(t8) && t8 <= 1.5 * t4, o->config.name + " third derivative ratio");
    }
    report("AC2", "maximum-principle bounds", l);
  }
  {
    Line l;
    for (const RunOutcome* o : all) {
      const double r = at(*o, 8).typeI / at(*o, 6).typeI;
      l.detail << ' ' << o->config.name << ":typeI8/6=" << r;
      l.check(r >= 0.5 && r <= 2.0, o->config.name + " type I plateau");
    }
    const double e4 = con.exterior[idx(con, 4)], e8 = con.exterior[idx(con, 8)];
    l.note("exterior4", e4).note("exterior8", e8);
    l.check(e8 <= 0.5 * e4, "exterior flatness halves");
    report("AC3", "type I plateau", l);
  }
  {
    Line l;
    const auto& d = con.contraction->discrepancy;
    const double d6 = d[idx(con, 6)], d7 = d[idx(con, 7)], d8 = d[idx(con, 8)];
    const std::string verdict = con.verdict ? to_string(con.verdict->kind) : "Inconclusive";
    l.note("disc6", d6).note("disc7", d7).note("disc8", d8).note("verdict", verdict);
    l.check(d8 <= 0.05, "discrepancy at s=8");
    l.check(d6 >= d7 && d7 >= d8, "discrepancy non-increasing");
    l.check(verdict == "SolitonOnBundle", "verdict");
    report("AC4", "contraction blow-up", l);
  }
  {
    Line l;
    const double limit = std::numbers::pi * std::sqrt(2.0);
    bool in_band = true;
    for (const auto& r : col.reports)
      if (r.s >= 4) in_band = in_band && r.fibre_diam >= 3.5 && r.fibre_diam <= 5.5;
    const std::size_t k8 = idx(col, 8);
    const double d8 = col.reports[k8].fibre_diam;
    const double H = col.collapse->H_near_centre[k8], R = col.collapse->R_at_centre[k8];
    const std::string verdict = col.verdict ? to_string(col.verdict->kind) : "Inconclusive";
    l.note("diam8", d8).note("H_centre", H).note("R_centre", R).note("verdict", verdict);
    l.check(in_band, "diameter band for s >= 4");
    l.check(rel(d8, limit) <= 0.05, "diameter near pi sqrt(m+2)");
    l.check(H <= 0.05, "H near the fibre centre");
    l.check(std::abs(R - 1.0) <= 0.05, "R at the fibre centre");
    l.check(verdict == "ProductCnCPm1", "verdict");
    report("AC5", "collapse limit", l);
  }
  {
    Line l;
    for (const RunOutcome* o : all) {
      bool confined = true, local_ok = true;
      for (const auto& r : o->reports) {
        confined = confined && r.vertex_rho < o->A;
        local_ok = local_ok && r.local_typeI <= r.typeI;
      }
      const auto& mono = o->monotonicity;
      const double ly = at(*o, 8).liyau / at(*o, 4).liyau;
      const double hn = at(*o, 8).harnack / at(*o, 4).harnack;
      l.detail << ' ' << o->config.name << ":A=" << o->A << ",B0=" << mono.B0
               << ",B0_half=" << mono.B0_half << ",liyau8/4=" << ly << ",harnack8/4=" << hn;
      l.check(o->weight_auto && confined, o->config.name + " vertex confinement");
      l.check(std::isfinite(mono.B0) && mono.stable, o->config.name + " monotonicity fit");
      l.check(ly <= 1.5, o->config.name + " Li-Yau plateau");
      l.check(hn <= 1.5, o->config.name + " Harnack plateau");
      l.check(local_ok, o->config.name + " local type I");
    }
    report("AC6", "potential-theory audits", l);
  }
  {
    Line l;
    const auto& e = *ext.extinction;
    const std::string verdict = ext.verdict ? to_string(ext.verdict->kind) : "Inconclusive";
    l.note("sup_diff_7_8", e.raw_convergence)
        .note("aligned_sup_diff", e.aligned_convergence)
        .note("centre_drift", e.centre_drift)
        .note("affine_residual", e.fit.residual)
        .note("verdict", verdict);
    l.check(e.raw_convergence <= 0.02, "profile convergence in the fixed rho chart");
    l.check(e.fit.residual <= 0.05, "affine fit");
    l.check(verdict == "CompactSoliton", "verdict");
    report("AC7", "extinction benchmark", l);
  }
  return failures == 0 ? 0 : 1;
}
