#pragma once

// Curvature, potentials, distances and volumes of a Calabi-symmetric metric,
// all read off the profile. Conventions:
//
//   u  = -log((a + phi')^n (phi')^m phi'') + (m+1) rho
//   R  = n (lambda - m - 1 + u')/(a + phi') + m u'/phi' + u''/phi''
//   Lap f = f''/phi'' + m f'/phi' + n f'/(a + phi')     (radial f)
//   |grad f|^2 = f'^2 / phi''
//   dl = sqrt(phi'') d rho

#include <limits>
#include <span>
#include <vector>

#include "calabi/profile.hpp"

namespace calabi {

struct RicciPotential {
  std::vector<double> u, du, d2u;
};

/// u'' comes from a fourth-order stencil applied to u' (clamped ends).
RicciPotential ricci_potential(const Profile& profile, const BundleConfig& config, double a);

struct Proxies {
  std::vector<double> d4_over_d2sq;  // phi''''/phi''^2
  std::vector<double> d3_over_d2;    // phi'''/phi''
  std::vector<double> d2_over_d1;    // phi''/phi'
  std::vector<double> d2_over_ad1;   // phi''/(a + phi')
  std::vector<double> d2_over_d1sq;  // phi''/phi'^2
  std::vector<double> d2_over_ad1sq; // phi''/(a + phi')^2
};

Proxies curvature_proxies(const Profile& profile, double a);

struct Curvature {
  std::vector<double> R;           // u-form
  std::vector<double> R_expanded;  // written out in phi', ..., phi''''
  double max_rel_mismatch = 0.0;   // over the trusted window
  Window window;
};

/// Scalar curvature by both formulas. Throws FormulaMismatch when they differ
/// by more than `mismatch_tol` (relative) inside the trusted window.
Curvature scalar_curvature_both(const Profile& profile, const BundleConfig& config, double a,
                                double mismatch_tol = 1e-4,
                                double p_floor = kDefaultWindowFloor);

std::vector<double> scalar_curvature(const Profile& profile, const BundleConfig& config, double a);

std::vector<double> radial_laplacian(const Profile& profile, const BundleConfig& config, double a,
                                     std::span<const double> df, std::span<const double> d2f);

std::vector<double> radial_gradient_sq(const Profile& profile, std::span<const double> df);

/// Cumulative integral of a positive integrand known with its rho-derivative,
/// with exponential tails f ~ e^{k_left rho} below the grid and
/// f ~ e^{-k_right rho} above it. Node intervals use the corrected
/// trapezoid h/2 (f0 + f1) - h^2/12 (f1' - f0'); off-node values use the
/// cubic Hermite interpolant of the antiderivative.
class CumulativeIntegral {
 public:
  CumulativeIntegral(const Grid& grid, std::vector<double> f, std::vector<double> df,
                     double k_left, double k_right);

  /// Integral from -inf to rho (rho may be +-inf).
  double upto(double rho) const;
  double total() const { return total_; }
  /// Value at node i (from -inf).
  double node(std::size_t i) const { return cum_[i]; }

 private:
  double rho_min_, rho_max_, h_;
  std::vector<double> f_, df_, cum_;
  double k_left_, k_right_, total_;
};

CumulativeIntegral arclength(const Profile& profile);

/// Integral of sqrt(phi'') from rho1 to rho2; rho1 = -inf and rho2 = +inf allowed.
double radial_distance(const Profile& profile, double rho1, double rho2);

double fibre_diameter(const Profile& profile);

/// pi sqrt(sup phi'), the equatorial CP^m contribution (m > 0).
double diam_cp_factor(const Profile& profile);

double volume(const Profile& profile, const BundleConfig& config, double a,
              double rho_upper = std::numeric_limits<double>::infinity());

struct GeometryFields {
  RicciPotential potential;
  Curvature curvature;
  Proxies proxies;
};

GeometryFields geometry_fields(const Profile& profile, const BundleConfig& config, double a,
                               double mismatch_tol = 1e-4);

}  // namespace calabi
