#include "calabi/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "calabi/errors.hpp"
#include "calabi/io.hpp"
#include "calabi/stencil.hpp"

namespace calabi {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void BundleConfig::validate() const {
  if (n < 1) throw InvalidInput("bundle.n must be >= 1");
  if (m < 0) throw InvalidInput("bundle.m must be >= 0");
  if (!std::isfinite(lambda)) throw InvalidInput("bundle.lambda must be finite");
  if (!(base_volume_factor > 0) || !std::isfinite(base_volume_factor))
    throw InvalidInput("bundle.base_volume_factor must be positive");
}

Grid::Grid(double rho_min, double rho_max, std::size_t count) {
  if (!(std::isfinite(rho_min) && std::isfinite(rho_max)) || !(rho_min < rho_max))
    throw InvalidGrid("grid bounds must be finite with rho_min < rho_max");
  if (count < 8) throw InvalidGrid("grid needs at least 8 nodes");
  h_ = (rho_max - rho_min) / static_cast<double>(count - 1);
  rho_.resize(count);
  for (std::size_t i = 0; i < count; ++i) rho_[i] = rho_min + h_ * static_cast<double>(i);
  rho_.back() = rho_max;
  // snap the node nearest to zero onto zero when it is within roundoff
  double best = std::numeric_limits<double>::infinity();
  anchor_ = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (std::abs(rho_[i]) < best) {
      best = std::abs(rho_[i]);
      anchor_ = i;
    }
  }
  if (best < 1e-9 * h_) rho_[anchor_] = 0.0;
}

Grid make_grid(double rho_min, double rho_max, std::size_t count) {
  if (!(rho_min <= -10.0)) throw InvalidGrid("rho_min must be <= -10");
  if (!(rho_max >= 10.0)) throw InvalidGrid("rho_max must be >= 10");
  if (count < 256) throw InvalidGrid("count must be >= 256");
  return Grid(rho_min, rho_max, count);
}

Profile initial_profile(const KahlerClass& cls, const Grid& grid) {
  if (!(cls.a > 0) || !(cls.b > 0)) throw InvalidInput("Kahler class must have a > 0 and b > 0");
  LogitJet jet;
  const std::size_t n = grid.size();
  jet.psi.assign(grid.rho().begin(), grid.rho().end());
  jet.d1.assign(n, 1.0);
  jet.d2.assign(n, 0.0);
  jet.d3.assign(n, 0.0);
  return profile_from_jet(grid, cls.b, jet, cls.b * std::log(2.0), DerivativeSource::Exact);
}

Profile profile_from_jet(const Grid& grid, double b, const LogitJet& jet, double phi0,
                         DerivativeSource source) {
  const std::size_t n = grid.size();
  Profile p{grid, b, phi0, {}, {}, {}, {}, {}, source};
  p.dphi.resize(n);
  p.gap.resize(n);
  p.d2phi.resize(n);
  p.d3phi.resize(n);
  p.d4phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = sigmoid(jet.psi[i]);
    const double q = sigmoid(-jet.psi[i]);
    const double pq = y * q;
    const double d = q - y;
    const double s1 = jet.d1[i], s2 = jet.d2[i], s3 = jet.d3[i];
    p.dphi[i] = b * y;
    p.gap[i] = b * q;
    p.d2phi[i] = b * pq * s1;
    p.d3phi[i] = b * pq * (d * s1 * s1 + s2);
    p.d4phi[i] = b * pq * (d * d * s1 * s1 * s1 - 2.0 * pq * s1 * s1 * s1 + 3.0 * d * s1 * s2 + s3);
  }
  return p;
}

Profile profile_from_theta(const Grid& grid, double b, std::span<const double> theta, double phi0) {
  const auto der = central_derivatives(theta, grid.h(), clamped_ghosts(theta));
  LogitJet jet;
  const std::size_t n = grid.size();
  jet.psi.resize(n);
  jet.d1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    jet.psi[i] = grid[i] + theta[i];
    jet.d1[i] = 1.0 + der.d1[i];
  }
  jet.d2 = der.d2;
  jet.d3 = der.d3;
  return profile_from_jet(grid, b, jet, phi0, DerivativeSource::Logit);
}

Profile differentiate(const Profile& profile) {
  const std::size_t n = profile.size();
  const Grid& grid = profile.grid;
  const double h = grid.h();
  const double b = profile.b;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(profile.dphi[i] > 0) || !(profile.gap[i] > 0))
      throw ConeViolation("differentiate: phi' outside (0, b) at rho = " + std::to_string(grid[i]));
  }
  // Exponential closures on both sides, written for phi' and for b - phi'.
  Ghosts gd, gg;
  for (int k = 0; k < 3; ++k) {
    const double decay = std::exp(-h * (k + 1));
    const double left = profile.dphi.front() * decay;
    const double right_gap = profile.gap.back() * decay;
    gd.left[k] = left;
    gd.right[k] = b - right_gap;
    gg.left[k] = b - left;
    gg.right[k] = right_gap;
  }
  const auto dd = central_derivatives(profile.dphi, h, gd);
  Profile out = profile;
  out.source = DerivativeSource::Stencil;
  const bool compact = std::isfinite(b);
  StencilDerivatives dg;
  if (compact) dg = central_derivatives(profile.gap, h, gg);
  for (std::size_t i = 0; i < n; ++i) {
    // where phi' > b/2 the gap carries the significant digits
    if (compact && profile.gap[i] < profile.dphi[i]) {
      out.d2phi[i] = -dg.d1[i];
      out.d3phi[i] = -dg.d2[i];
      out.d4phi[i] = -dg.d3[i];
    } else {
      out.d2phi[i] = dd.d1[i];
      out.d3phi[i] = dd.d2[i];
      out.d4phi[i] = dd.d3[i];
    }
    if (!(out.d2phi[i] > 0))
      throw ConeViolation("differentiate: phi'' <= 0 at rho = " + std::to_string(grid[i]));
  }
  return out;
}

ValidationReport validate_cone(const Profile& profile, const KahlerClass& cls, double tol) {
  ValidationReport r;
  if (!(cls.a > 0)) {
    r.a_positive = false;
    r.violations.push_back("(i) a > 0");
  }
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const bool good = profile.dphi[i] > 0 && profile.gap[i] > 0 && profile.d2phi[i] > 0 &&
                      std::isfinite(profile.dphi[i]) && std::isfinite(profile.d2phi[i]);
    if (!good) {
      r.derivatives_positive = false;
      r.violations.push_back("(ii) phi' > 0 and phi'' > 0 at rho = " +
                             std::to_string(profile.grid[i]));
      break;
    }
  }
  r.lower_defect = std::abs(profile.d2phi.front() / profile.dphi.front() - 1.0);
  if (!(r.lower_defect <= tol)) {
    r.lower_boundary_ratio = false;
    r.violations.push_back("(iii) phi''/phi' -> 1 at rho_min");
  }
  if (std::isfinite(profile.b)) {
    r.upper_defect = std::abs(profile.d2phi.back() / profile.gap.back() - 1.0);
    if (!(r.upper_defect <= tol)) {
      r.upper_boundary_ratio = false;
      r.violations.push_back("(iv) phi''/(b - phi') -> 1 at rho_max");
    }
  }
  return r;
}

std::vector<double> h_quantity(const Profile& profile) {
  std::vector<double> h(profile.size());
  const bool compact = std::isfinite(profile.b);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = std::log(profile.d2phi[i]) - std::log(profile.dphi[i]);
    if (compact) h[i] += std::log(profile.b) - std::log(profile.gap[i]);
  }
  return h;
}

std::vector<double> reconstruct_phi(const Profile& profile) {
  // Corrected trapezoid, exact for cubics: int f = h/2 (f0 + f1) - h^2/12 (f1' - f0').
  const std::size_t n = profile.size();
  const double h = profile.grid.h();
  const std::size_t k = profile.grid.anchor_index();
  std::vector<double> phi(n);
  phi[k] = profile.phi0;
  auto piece = [&](std::size_t i) {
    return 0.5 * h * (profile.dphi[i] + profile.dphi[i + 1]) -
           h * h / 12.0 * (profile.d2phi[i + 1] - profile.d2phi[i]);
  };
  for (std::size_t i = k; i + 1 < n; ++i) phi[i + 1] = phi[i] + piece(i);
  for (std::size_t i = k; i > 0; --i) phi[i - 1] = phi[i] - piece(i - 1);
  return phi;
}

Window trusted_window(const Profile& profile, double p_floor) {
  const std::size_t n = profile.size();
  const bool compact = std::isfinite(profile.b);
  auto weight = [&](std::size_t i) {
    if (!compact) return profile.dphi[i] / (1.0 + profile.dphi[i]);
    return (profile.dphi[i] / profile.b) * (profile.gap[i] / profile.b);
  };
  Window w{n, n};
  for (std::size_t i = 0; i < n; ++i) {
    if (weight(i) >= p_floor) {
      w.lo = i;
      break;
    }
  }
  if (w.lo == n) {
    w.lo = 0;
    w.hi = 0;
    return w;
  }
  for (std::size_t i = n; i-- > w.lo;) {
    if (weight(i) >= p_floor) {
      w.hi = i + 1;
      break;
    }
  }
  return w;
}

void write_profile_csv(const std::string& path, const Profile& profile) {
  const auto phi = reconstruct_phi(profile);
  CsvWriter csv(path, {"rho", "phi", "dphi", "d2phi", "d3phi", "d4phi"});
  for (std::size_t i = 0; i < profile.size(); ++i) {
    csv.row({profile.grid[i], phi[i], profile.dphi[i], profile.d2phi[i], profile.d3phi[i],
             profile.d4phi[i]});
  }
}

}  // namespace calabi
