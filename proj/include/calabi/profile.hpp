#pragma once

// Radial potential of a Calabi-symmetric Kahler metric
//
//   omega = a omega_Z + i dd-bar phi(rho),   e^rho = h(z)|xi|^2,
//
// on P(O + L^{m+1}) -> Z. Everything downstream reads phi' and its
// rho-derivatives; phi itself is only ever reconstructed by quadrature.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace calabi {

struct BundleConfig {
  int n = 1;       // complex dimension of the Kahler-Einstein base Z
  int m = 0;       // fibre CP^{m+1}, bundle rank m+1
  double lambda = 0.0;  // Ric(omega_Z) = lambda omega_Z
  double base_volume_factor = 1.0;

  /// Complex dimension of the total space.
  int dim() const noexcept { return m + n + 1; }
  void validate() const;
};

/// The class a[D_H] + b[D_inf]; ample iff a > 0 and b > 0.
struct KahlerClass {
  double a = 1.0;
  double b = 1.0;
};

/// Uniform grid in rho.
class Grid {
 public:
  /// Only checks lo < hi and count >= 8; use make_grid for the
  /// asymptotic-regime preconditions.
  Grid(double rho_min, double rho_max, std::size_t count);

  std::size_t size() const noexcept { return rho_.size(); }
  double h() const noexcept { return h_; }
  double rho_min() const noexcept { return rho_.front(); }
  double rho_max() const noexcept { return rho_.back(); }
  double operator[](std::size_t i) const noexcept { return rho_[i]; }
  std::span<const double> rho() const noexcept { return rho_; }

  /// Index of the node closest to rho = 0 (the gauge anchor).
  std::size_t anchor_index() const noexcept { return anchor_; }

 private:
  std::vector<double> rho_;
  double h_;
  std::size_t anchor_;
};

Grid make_grid(double rho_min, double rho_max, std::size_t count);

enum class DerivativeSource {
  Exact,    // closed-form derivatives
  Stencil,  // fourth-order stencils applied to phi'
  Logit,    // stencils applied to logit(phi'/b) - rho, then chain rule
};

/// phi' and four rho-derivatives on a grid.
///
/// `gap` carries b - phi' computed without cancellation, so that ratios such
/// as phi''/(b - phi') stay accurate where phi' is within ulps of b. For
/// non-compact profiles (soliton on the total space of L^{m+1}) b is +inf and
/// gap is +inf.
struct Profile {
  Grid grid;
  double b = 1.0;
  double phi0 = 0.0;  // phi at the anchor node
  std::vector<double> dphi, gap, d2phi, d3phi, d4phi;
  DerivativeSource source = DerivativeSource::Exact;

  std::size_t size() const noexcept { return dphi.size(); }
};

/// Derivatives of psi = logit(phi'/b) up to third order. The seed profile
/// has psi = rho.
struct LogitJet {
  std::vector<double> psi, d1, d2, d3;
};

/// Seed phi = b log(1 + e^rho), i.e. phi' = b sigma(rho), with closed-form
/// derivatives.
Profile initial_profile(const KahlerClass& cls, const Grid& grid);

/// Builds phi'..phi'''' from a logit jet by the chain rule.
Profile profile_from_jet(const Grid& grid, double b, const LogitJet& jet, double phi0,
                         DerivativeSource source);

/// theta = psi - rho on the grid; derivatives by fourth-order stencils with
/// constant extension of theta beyond the grid.
Profile profile_from_theta(const Grid& grid, double b, std::span<const double> theta,
                           double phi0);

/// Recomputes d2phi..d4phi from dphi with fourth-order central stencils.
/// Ghost values come from phi' ~ c e^rho below rho_min and
/// b - phi' ~ c e^{-rho} above rho_max. Throws ConeViolation if phi'' <= 0.
Profile differentiate(const Profile& profile);

struct ValidationReport {
  bool a_positive = true;                 // (i)
  bool derivatives_positive = true;       // (ii) phi' in (0,b), phi'' > 0
  bool lower_boundary_ratio = true;       // (iii) |phi''/phi' - 1| <= tol at rho_min
  bool upper_boundary_ratio = true;       // (iv) |phi''/(b-phi') - 1| <= tol at rho_max
  double lower_defect = 0.0;
  double upper_defect = 0.0;
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_cone(const Profile& profile, const KahlerClass& cls, double tol);

/// H = log(b phi'' / (phi'(b - phi'))); identically zero on the seed.
std::vector<double> h_quantity(const Profile& profile);

/// phi at every node: phi0 plus the integral of phi' from the anchor node.
std::vector<double> reconstruct_phi(const Profile& profile);

/// Contiguous node range [lo, hi) where phi'(b-phi')/b^2 >= p_floor (or
/// phi'/scale >= p_floor for non-compact profiles). Outside it the
/// curvature expressions are ratios of quantities below roundoff.
struct Window {
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool contains(std::size_t i) const noexcept { return i >= lo && i < hi; }
};

inline constexpr double kDefaultWindowFloor = 1e-6;

Window trusted_window(const Profile& profile, double p_floor = kDefaultWindowFloor);

/// rho, phi, dphi, d2phi, d3phi, d4phi; 15 significant digits.
void write_profile_csv(const std::string& path, const Profile& profile);

}  // namespace calabi
