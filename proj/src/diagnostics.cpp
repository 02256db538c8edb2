#include "calabi/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "calabi/errors.hpp"

namespace calabi {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

WeightJet weight_eta_jet(double A, double b, const Grid& grid) {
  if (!(A >= 1.0)) throw InvalidInput("weight A must be >= 1");
  const std::size_t n = grid.size();
  WeightJet w;
  w.eta.resize(n);
  w.d1.resize(n);
  w.d2.resize(n);
  const double L4 = softplus(4 * A);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid[i];
    const double L = softplus(r), sg = sigmoid(r), sp = sg * (1 - sg);
    if (r <= 2 * A) {
      w.eta[i] = b * L;
      w.d1[i] = b * sg;
      w.d2[i] = b * sp;
    } else if (r >= 4 * A) {
      w.eta[i] = b * L4;
      w.d1[i] = 0.0;
      w.d2[i] = 0.0;
    } else {
      const double x = (r - 2 * A) / (2 * A);
      const double S = x * x * x * (10 + x * (-15 + 6 * x));
      const double S1 = 30 * x * x * (1 - x) * (1 - x) / (2 * A);
      const double S2 = 60 * x * (1 - x) * (1 - 2 * x) / (4 * A * A);
      const double gap = L4 - L;
      w.eta[i] = b * (L + S * gap);
      w.d1[i] = b * (sg * (1 - S) + S1 * gap);
      w.d2[i] = b * (sp * (1 - S) - 2 * S1 * sg + S2 * gap);
    }
  }
  return w;
}

std::vector<double> weight_eta(double A, double b, const Grid& grid) {
  return weight_eta_jet(A, b, grid).eta;
}

Vertex locate_vertex(const Grid& grid, std::span<const double> v) {
  const std::size_t n = v.size();
  double lo = v[0], scale = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    scale = std::max(scale, std::abs(x));
  }
  // values within roundoff of the minimum are ties; ties go to the smaller rho
  const double tol = 64 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
  std::size_t k = 0;
  while (v[k] > lo + tol) ++k;
  if (k == 0) return {VertexLocation::ZeroSection, 0, -kInf, lo};
  if (k == n - 1) return {VertexLocation::InfinitySection, n - 1, kInf, lo};
  if (k < 3 || k + 3 >= n)
    throw VertexAtBoundary("Ricci vertex within three nodes of the grid end at rho = " +
                           std::to_string(grid[k]));
  const double fm = v[k - 1], f0 = v[k], fp = v[k + 1];
  const double curv = fm - 2 * f0 + fp;
  double off = 0.0, val = f0;
  if (curv > 0) {
    off = 0.5 * (fm - fp) / curv;
    off = std::clamp(off, -0.5, 0.5);
    val = f0 - 0.25 * (fm - fp) * off;
  }
  return {VertexLocation::Interior, k, grid[k] + off * grid.h(), std::min(val, lo)};
}

PotentialTrack potential_track(const FlowState& st, const BundleConfig& c, const ClassPath& path,
                               double A, double time_shift) {
  const Profile p = st.normalized_profile();
  const KahlerClass cls = st.normalized_class();
  const auto pot = ricci_potential(p, c, cls.a);
  auto phi = reconstruct_phi(p);
  const double es = std::exp(st.s);
  const double b1 = path.at(1.0).b;
  const int N = c.dim();
  const double shift = N * (std::expm1(st.s) - st.s) + es * time_shift;
  const auto w = weight_eta_jet(A, b1, st.grid);
  const std::size_t n = p.size();
  PotentialTrack tr;
  tr.s = st.s;
  tr.A = A;
  tr.u0.resize(n);
  tr.u_w.resize(n);
  tr.du_w.resize(n);
  tr.d2u_w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = st.grid[i];
    const double sg = sigmoid(r);
    tr.u0[i] = phi[i] - pot.u[i] - es * b1 * softplus(r) + shift;
    // u_w = phi~ - u~ + e^s (eta - b1 L) + shift; the bracket vanishes for rho <= 2A
    const double corr = w.eta[i] - b1 * softplus(r);
    tr.u_w[i] = phi[i] - pot.u[i] + es * corr + shift;
    tr.du_w[i] = p.dphi[i] - pot.du[i] + es * (w.d1[i] - b1 * sg);
    tr.d2u_w[i] = p.d2phi[i] - pot.d2u[i] + es * (w.d2[i] - b1 * sg * (1 - sg));
  }
  const Vertex vx = locate_vertex(st.grid, tr.u_w);
  tr.where = vx.where;
  tr.vertex_index = vx.index;
  tr.vertex_rho = vx.rho;
  tr.a_inf = std::min(vx.value, *std::min_element(tr.u_w.begin(), tr.u_w.end()));
  tr.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) tr.v[i] = tr.u_w[i] - tr.a_inf + 1.0;
  return tr;
}

double choose_weight(std::span<const FlowState> states, const BundleConfig& c,
                     const ClassPath& path) {
  const std::size_t k = std::min<std::size_t>(3, states.size());
  for (double A = 1.0; A <= 64.0; A *= 2.0) {
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i) {
      try {
        ok = potential_track(states[i], c, path, A).vertex_rho < A;
      } catch (const VertexAtBoundary&) {
        ok = false;
      }
    }
    if (ok) return A;
  }
  throw VertexAtBoundary("weight scan: no A <= 64 confines the Ricci vertex");
}

MonotonicityAudit monotonicity_audit(std::span<const double> s, std::span<const double> a_inf) {
  MonotonicityAudit out;
  out.samples = s.size();
  auto fit = [&](std::size_t count, double& inc, double& dec) {
    inc = 0.0;
    dec = 0.0;
    for (std::size_t k = 0; k + 1 < count; ++k) {
      const double f0 = std::exp(-s[k]) * a_inf[k], f1 = std::exp(-s[k + 1]) * a_inf[k + 1];
      const double d = std::exp(-s[k]) - std::exp(-s[k + 1]);
      if (!(d > 0)) continue;
      inc = std::max(inc, -(f1 - f0) / d);
      dec = std::max(dec, (f1 - f0) / d);
    }
  };
  fit(s.size(), out.B0_increasing, out.B0_decreasing);
  out.B0 = std::max(out.B0_increasing, out.B0_decreasing);
  double hi = 0.0, hd = 0.0;
  fit((s.size() + 1) / 2, hi, hd);
  out.B0_half = std::max(hi, hd);
  out.stable = std::abs(out.B0_half - out.B0) <= 0.2 * out.B0;
  out.passed = std::isfinite(out.B0) && out.stable && out.samples >= 10;
  return out;
}

VertexGeometry vertex_geometry(const PotentialTrack& tr, const FlowState& st,
                               const ClassPath& path) {
  if (path.type == SingularityType::Collapse)
    throw WrongSingularityType("vertex geometry is defined for contracting runs only");
  const Profile p = st.normalized_profile();
  VertexGeometry g;
  if (tr.where == VertexLocation::ZeroSection) {
    g.phi_at_vertex = 0.0;
    g.dist_to_P0 = 0.0;
    return g;
  }
  if (tr.where == VertexLocation::InfinitySection) {
    g.phi_at_vertex = p.b;
    g.dist_to_P0 = fibre_diameter(p);
    return g;
  }
  // linear interpolation of phi' between the bracketing nodes
  const double h = st.grid.h();
  std::size_t i = tr.vertex_index;
  if (tr.vertex_rho < st.grid[i] && i > 0) --i;
  const double x = (tr.vertex_rho - st.grid[i]) / h;
  g.phi_at_vertex = (1 - x) * p.dphi[i] + x * p.dphi[std::min(i + 1, p.size() - 1)];
  g.dist_to_P0 = radial_distance(p, -kInf, tr.vertex_rho);
  return g;
}

EstimateReport estimate_report(const FlowState& st, const PotentialTrack& tr,
                               const BundleConfig& c, const ClassPath& path,
                               const EstimateOptions& opt) {
  const Profile p = st.normalized_profile();
  const KahlerClass cls = st.normalized_class();
  const auto curv = scalar_curvature_both(p, c, cls.a, opt.mismatch_tol, opt.p_floor);
  const Window win = curv.window;
  EstimateReport r;
  r.s = st.s;
  r.t = st.t;
  r.formula_mismatch = curv.max_rel_mismatch;

  const auto H = h_quantity(p);
  r.H_min = *std::min_element(H.begin(), H.end());
  r.H_max = *std::max_element(H.begin(), H.end());

  const auto L = arclength(p);
  const double dv0 = L.upto(tr.vertex_rho);
  const auto lap = radial_laplacian(p, c, cls.a, tr.du_w, tr.d2u_w);
  const auto grad = radial_gradient_sq(p, tr.du_w);
  for (std::size_t i = win.lo; i < win.hi; ++i) {
    r.third_ratio_sup = std::max(r.third_ratio_sup, std::abs(p.d3phi[i]) / p.d2phi[i]);
    const double R = std::abs(curv.R[i]);
    r.typeI = std::max(r.typeI, R);
    const double d = std::abs(L.node(i) - dv0);
    r.local_typeI = std::max(r.local_typeI, R / (1.0 + d * d));
    r.liyau = std::max(r.liyau, (std::abs(lap[i]) + grad[i]) / tr.v[i]);
  }
  // curvature at the vertex, or at the window end nearest to it
  {
    std::size_t k = tr.vertex_index;
    k = std::clamp(k, win.lo, win.hi > 0 ? win.hi - 1 : 0);
    r.typeI_at_vertex = std::abs(curv.R[k]);
  }

  double vmax = 0.0, vmin = kInf;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs(L.node(i) - dv0) <= opt.harnack_radius) {
      vmax = std::max(vmax, tr.v[i]);
      vmin = std::min(vmin, tr.v[i]);
    }
  }
  r.harnack = vmin < kInf ? vmax / vmin : std::numeric_limits<double>::quiet_NaN();

  r.vertex_rho = tr.vertex_rho;
  r.a_inf = tr.a_inf;
  if (path.type != SingularityType::Collapse) {
    const auto vg = vertex_geometry(tr, st, path);
    r.phi_at_vertex = vg.phi_at_vertex;
    r.dist_to_P0 = vg.dist_to_P0;
  }
  r.fibre_diam = L.total();
  r.diam_cp = diam_cp_factor(p);
  r.volume_normalized = volume(p, c, cls.a);
  r.volume_total = volume(st.profile(), c, st.class_now.a);
  return r;
}

}  // namespace calabi
