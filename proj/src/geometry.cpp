#include "calabi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "calabi/errors.hpp"

namespace calabi {

namespace {

void require_cone(const Profile& p, const char* who) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p.dphi[i] > 0) || !(p.d2phi[i] > 0) || !(p.gap[i] > 0))
      throw ConeViolation(std::string(who) + ": cone condition fails at rho = " +
                          std::to_string(p.grid[i]));
  }
}

}  // namespace

RicciPotential ricci_potential(const Profile& p, const BundleConfig& c, double a) {
  require_cone(p, "ricci_potential");
  const std::size_t n = p.size();
  RicciPotential r;
  r.u.resize(n);
  r.du.resize(n);
  r.d2u.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = p.dphi[i], d2 = p.d2phi[i], d3 = p.d3phi[i], d4 = p.d4phi[i];
    const double ad = a + d1;
    r.u[i] = -(c.n * std::log(ad) + c.m * std::log(d1) + std::log(d2)) + (c.m + 1) * p.grid[i];
    r.du[i] = (c.m + 1) - (c.n * d2 / ad + c.m * d2 / d1 + d3 / d2);
    // differentiated from the same jet, so both curvature lines see one set of derivatives
    r.d2u[i] = -(c.n * (d3 / ad - d2 * d2 / (ad * ad)) + c.m * (d3 / d1 - d2 * d2 / (d1 * d1)) +
                 d4 / d2 - d3 * d3 / (d2 * d2));
  }
  return r;
}

Proxies curvature_proxies(const Profile& p, double a) {
  require_cone(p, "curvature_proxies");
  const std::size_t n = p.size();
  Proxies x;
  for (auto* v : {&x.d4_over_d2sq, &x.d3_over_d2, &x.d2_over_d1, &x.d2_over_ad1, &x.d2_over_d1sq,
                  &x.d2_over_ad1sq})
    v->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = p.dphi[i], d2 = p.d2phi[i];
    x.d4_over_d2sq[i] = p.d4phi[i] / (d2 * d2);
    x.d3_over_d2[i] = p.d3phi[i] / d2;
    x.d2_over_d1[i] = d2 / d1;
    x.d2_over_ad1[i] = d2 / (a + d1);
    x.d2_over_d1sq[i] = d2 / (d1 * d1);
    x.d2_over_ad1sq[i] = d2 / ((a + d1) * (a + d1));
  }
  return x;
}

Curvature scalar_curvature_both(const Profile& p, const BundleConfig& c, double a,
                                double mismatch_tol, double p_floor) {
  const auto pot = ricci_potential(p, c, a);
  const std::size_t n = p.size();
  const double kappa = c.lambda - c.m - 1;
  Curvature out;
  out.R.resize(n);
  out.R_expanded.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = p.dphi[i], d2 = p.d2phi[i], d3 = p.d3phi[i], d4 = p.d4phi[i];
    const double ad = a + d1;
    out.R[i] = c.n * (kappa + pot.du[i]) / ad + c.m * pot.du[i] / d1 + pot.d2u[i] / d2;
    // second line: u' and u'' replaced by their expressions in phi
    const double inner = c.n * d2 / ad + c.m * d2 / d1 + d3 / d2;
    double r = c.n * kappa / ad + (c.m + 1) * (c.n / ad + c.m / d1) - (c.n / ad + c.m / d1) * inner;
    r -= c.n * (d3 / ad - d2 * d2 / (ad * ad)) / d2;
    r -= c.m * (d3 / d1 - d2 * d2 / (d1 * d1)) / d2;
    r += -d4 / (d2 * d2) + d3 * d3 / (d2 * d2 * d2);
    out.R_expanded[i] = r;
  }
  out.window = trusted_window(p, p_floor);
  double scale = 0.0;
  for (std::size_t i = out.window.lo; i < out.window.hi; ++i) scale = std::max(scale, std::abs(out.R[i]));
  for (std::size_t i = out.window.lo; i < out.window.hi; ++i) {
    const double den = std::max(std::abs(out.R[i]), 1e-3 * scale);
    if (den == 0.0) continue;
    out.max_rel_mismatch = std::max(out.max_rel_mismatch, std::abs(out.R[i] - out.R_expanded[i]) / den);
  }
  if (!(out.max_rel_mismatch <= mismatch_tol))
    throw FormulaMismatch("scalar curvature formulas differ by " +
                          std::to_string(out.max_rel_mismatch) + " (relative)");
  return out;
}

std::vector<double> scalar_curvature(const Profile& p, const BundleConfig& c, double a) {
  return scalar_curvature_both(p, c, a).R;
}

std::vector<double> radial_laplacian(const Profile& p, const BundleConfig& c, double a,
                                     std::span<const double> df, std::span<const double> d2f) {
  require_cone(p, "radial_laplacian");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out[i] = d2f[i] / p.d2phi[i] + c.m * df[i] / p.dphi[i] + c.n * df[i] / (a + p.dphi[i]);
  return out;
}

std::vector<double> radial_gradient_sq(const Profile& p, std::span<const double> df) {
  require_cone(p, "radial_gradient_sq");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = df[i] * df[i] / p.d2phi[i];
  return out;
}

CumulativeIntegral::CumulativeIntegral(const Grid& grid, std::vector<double> f,
                                       std::vector<double> df, double k_left, double k_right)
    : rho_min_(grid.rho_min()), rho_max_(grid.rho_max()), h_(grid.h()), f_(std::move(f)), df_(std::move(df)), k_left_(k_left), k_right_(k_right) {
  const std::size_t n = f_.size();
  const double h = grid.h();
  cum_.resize(n);
  cum_[0] = f_[0] / k_left_;
  for (std::size_t i = 0; i + 1 < n; ++i)
    cum_[i + 1] = cum_[i] + 0.5 * h * (f_[i] + f_[i + 1]) - h * h / 12.0 * (df_[i + 1] - df_[i]);
  total_ = cum_[n - 1] + (k_right_ > 0 ? f_[n - 1] / k_right_ : 0.0);
}

double CumulativeIntegral::upto(double rho) const {
  const std::size_t n = f_.size();
  if (rho == -std::numeric_limits<double>::infinity()) return 0.0;
  if (rho == std::numeric_limits<double>::infinity()) return total_;
  if (rho <= rho_min_) return f_[0] * std::exp(k_left_ * (rho - rho_min_)) / k_left_;
  if (rho >= rho_max_) {
    if (!(k_right_ > 0)) return cum_[n - 1];
    return total_ - f_[n - 1] * std::exp(-k_right_ * (rho - rho_max_)) / k_right_;
  }
  const double h = h_;
  std::size_t i = static_cast<std::size_t>((rho - rho_min_) / h);
  i = std::min(i, n - 2);
  const double x = (rho - (rho_min_ + h * static_cast<double>(i))) / h;
  // cubic Hermite on [i, i+1] for the antiderivative, slopes f
  const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
  const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
  return h00 * cum_[i] + h10 * h * f_[i] + h01 * cum_[i + 1] + h11 * h * f_[i + 1];
}

CumulativeIntegral arclength(const Profile& p) {
  std::vector<double> f(p.size()), df(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    f[i] = std::sqrt(p.d2phi[i]);
    df[i] = p.d3phi[i] / (2.0 * f[i]);
  }
  const double k_right = std::isfinite(p.b) ? 0.5 : 0.0;
  return CumulativeIntegral(p.grid, std::move(f), std::move(df), 0.5, k_right);
}

double radial_distance(const Profile& p, double rho1, double rho2) {
  if (rho1 > rho2) std::swap(rho1, rho2);
  if (rho1 == rho2) return 0.0;
  const auto L = arclength(p);
  return std::max(0.0, L.upto(rho2) - L.upto(rho1));
}

double fibre_diameter(const Profile& p) { return arclength(p).total(); }

double diam_cp_factor(const Profile& p) {
  return std::numbers::pi * std::sqrt(*std::max_element(p.dphi.begin(), p.dphi.end()));
}

double volume(const Profile& p, const BundleConfig& c, double a, double rho_upper) {
  const std::size_t n = p.size();
  std::vector<double> f(n), df(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = p.dphi[i], d2 = p.d2phi[i], d3 = p.d3phi[i];
    const double A = std::pow(a + d1, c.n), M = std::pow(d1, c.m);
    f[i] = A * M * d2;
    double g = A * M * d3 + c.n * std::pow(a + d1, c.n - 1) * M * d2 * d2;
    if (c.m > 0) g += A * c.m * std::pow(d1, c.m - 1) * d2 * d2;
    df[i] = g;
  }
  const double k_right = std::isfinite(p.b) ? 1.0 : 0.0;
  CumulativeIntegral I(p.grid, std::move(f), std::move(df), c.m + 1.0, k_right);
  return c.base_volume_factor * I.upto(rho_upper);
}

GeometryFields geometry_fields(const Profile& p, const BundleConfig& c, double a,
                               double mismatch_tol) {
  GeometryFields g;
  g.potential = ricci_potential(p, c, a);
  g.curvature = scalar_curvature_both(p, c, a, mismatch_tol);
  g.proxies = curvature_proxies(p, a);
  return g;
}

}  // namespace calabi
