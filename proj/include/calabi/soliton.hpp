#pragma once

// Shrinking gradient Kahler-Ricci soliton with Calabi symmetry on the total
// space of L^{m+1} -> Z, written in the momentum chart x = phi', w = phi''.
// The soliton condition phi' - u' = c phi'' becomes the linear equation
//
//   w_x + m w/x + n w/(a + x) - c w = (m+1) - x,
//
// whose solution closing smoothly at x = 0 is
//
//   w(x) = e^{cx} x^{-m} (a+x)^{-n} int_0^x P(s) e^{-cs} ds,
//   P(s) = s^m (a+s)^n ((m+1) - s).
//
// It stays positive for all x exactly when I(c) = int_0^inf P e^{-cs} = 0.

#include <vector>

#include "calabi/profile.hpp"

namespace calabi {

/// Coefficients p_k of P(s) = sum p_k s^k, k = 0 .. m+n+1.
std::vector<double> shooting_polynomial(const BundleConfig& config, double a);

/// I(c) = sum p_k k! / c^{k+1}.
double shooting_integral(const BundleConfig& config, double a, double c);

struct CStar {
  double c_star = 0.0;
  double lo = 0.0, hi = 0.0;  // final bracket
};

/// Bisection on I over a bracket grown from c = 1 by doubling and halving.
/// Throws BracketError when no sign change exists in [1e-6, 1e6].
CStar solve_c_star(const BundleConfig& config, double a);

/// w(x) and w_x(x) for a given c (any c, not only c*).
double soliton_w(const BundleConfig& config, double a, double c, double x);
double soliton_dw(const BundleConfig& config, double a, double c, double x);
double soliton_d2w(const BundleConfig& config, double a, double c, double x);

/// ODE residual with w_x taken by a five-point difference of relative step 1e-3.
double soliton_residual(const BundleConfig& config, double a, double c, double x);

struct SolitonProfile {
  double a = 0.0;
  double c_star = 0.0;
  std::vector<double> x, w, residual;
};

/// Log-spaced samples on [x_min, x_max]. Throws PositivityLoss if w <= 0.
SolitonProfile soliton_profile(const BundleConfig& config, double a, double c_star,
                               double x_max = 1e3, std::size_t count = 4096,
                               double x_min = 1e-6);

/// The soliton as a rho-profile (b = +inf) with phi'(rho0) = x0, from
/// dx/drho = w(x). Derivatives are exact through the ODE.
Profile soliton_on_grid(const BundleConfig& config, double a, double c, const Grid& grid,
                        double x0 = 1.0);

struct MomentumChart {
  std::vector<double> x, w, rho;
};

/// (phi~', phi~'') pairs on the trusted window of a normalized profile.
MomentumChart flow_to_momentum(const Profile& profile);

/// Monotone cubic interpolation w(x) of the chart.
double momentum_w(const MomentumChart& chart, double x);
/// Inverse map x -> rho.
double momentum_rho(const MomentumChart& chart, double x);

/// sup over x in [x_lo, x_hi] of |w_flow - w_soliton|, sampled at 2001 points.
double momentum_discrepancy(const MomentumChart& chart, const BundleConfig& config, double a,
                            double c_star, double x_lo = 0.1, double x_hi = 2.0);

}  // namespace calabi
