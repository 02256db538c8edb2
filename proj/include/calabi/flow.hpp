#pragma once

// Kahler-Ricci flow restricted to Calabi-symmetric metrics.
//
// Unnormalized:  d/dt phi' = phi'''/phi'' + m phi''/phi' + n phi''/(a + phi') - (m+1)
// Normalized:    d/ds phi~' = (same, tilded) + phi~',    s = -ln(1 - t)
//
// The integrator does not evolve phi' directly. It evolves
//
//   theta = logit(phi'/b) - rho,
//
// which is invariant under the parabolic rescaling (so one state serves both
// parametrizations) and is O(1) where phi' is within roundoff of 0 or b. In
// terms of psi = rho + theta, y = sigma(psi), p = y(1 - y):
//
//   d theta = G / (b p),
//   G = theta''/psi' + ((m+1) - (m+2) y) theta' + n b p psi'/(a + b y).

#include <functional>
#include <string>
#include <vector>

#include "calabi/profile.hpp"

namespace calabi {

enum class SingularityType { Contraction, Collapse, Extinction };

std::string to_string(SingularityType t);

struct ClassPath {
  double a0 = 1.0, b0 = 1.0;
  double slope_a = 0.0;  // lambda - m - 1
  double slope_b = 2.0;  // m + 2
  double t_a = 0.0, t_b = 0.0;
  double T = 1.0;
  SingularityType type = SingularityType::Collapse;
  bool anticanonical = false;  // class0 proportional to -K_X

  KahlerClass at(double t) const { return {a0 - slope_a * t, b0 - slope_b * t}; }
  /// Class of the normalized flow, e^s [omega(t)] with t = 1 - e^{-s} (T = 1).
  KahlerClass normalized_at(double s) const;
  /// d/ds of normalized_at.
  KahlerClass normalized_rate(double s) const;
};

ClassPath class_path(const BundleConfig& config, const KahlerClass& class0);

struct Rescaled {
  ClassPath path;
  KahlerClass class0;
};

/// g -> T^{-1} g(T t): divides the class by T, slopes are unchanged.
Rescaled rescale_to_unit_time(const ClassPath& path, const KahlerClass& class0);

enum class Parametrization { Unnormalized, Normalized };

struct FlowState {
  double t = 0.0;
  double s = 0.0;
  KahlerClass class_now;  // a(t), b(t)
  double phi_anchor = 0.0;  // phi(rho_anchor, t), gauge c_t = 0
  Grid grid;
  std::vector<double> theta;

  KahlerClass normalized_class() const;
  Profile profile() const;             // unnormalized phi and derivatives
  Profile normalized_profile() const;  // phi~ = e^s phi
};

FlowState initial_state(const ClassPath& path, const Grid& grid);

/// Builds the state at (t, s) from phi' values given on the grid.
FlowState state_from_dphi(const ClassPath& path, const Grid& grid, double t,
                          const std::vector<double>& dphi, double phi_anchor);

/// Pointwise right-hand side of the phi' equation. Normalized adds phi~'.
std::vector<double> rhs_dphi(const Profile& profile, const BundleConfig& config, double a,
                             Parametrization param);
std::vector<double> rhs_dphi(const FlowState& state, const BundleConfig& config,
                             Parametrization param);

/// d theta / d(time) for the given class (a, b) at the current time.
std::vector<double> theta_rate(const BundleConfig& config, const Grid& grid,
                               const std::vector<double>& theta, double a, double b);

/// Dense Jacobian of theta_rate, for tests. Row-major, N x N.
std::vector<double> theta_rate_jacobian(const BundleConfig& config, const Grid& grid,
                                        const std::vector<double>& theta, double a, double b);

struct StepController {
  double sigma = 0.2;   // time step cap sigma * h
  double tol = 1e-6;    // local error tolerance on theta
  double dt_min = 1e-10;
};

struct StepResult {
  FlowState state;
  double dt_used = 0.0;
  double dt_next = 0.0;
  double error = 0.0;  // embedded estimate, max norm on theta
  int rejected = 0;
};

/// One accepted linearly implicit Rosenbrock step (ROS2, L-stable, second
/// order) of size at most dt_try and not beyond `limit` in the chosen time
/// variable. Rejected attempts shrink the step; if it falls below dt_min the
/// last failure is thrown (ConeViolation or NumericalBlowup).
StepResult step(const FlowState& state, const BundleConfig& config, const ClassPath& path,
                const StepController& controller, Parametrization param, double dt_try,
                double limit);

/// Same with a fixed step and no error control, for convergence tests.
StepResult fixed_step(const FlowState& state, const BundleConfig& config, const ClassPath& path,
                      Parametrization param, double dt);

/// Integrates to `target` (s or t depending on param).
FlowState advance(const FlowState& state, const BundleConfig& config, const ClassPath& path,
                  const StepController& controller, Parametrization param, double target,
                  std::size_t* steps = nullptr);

/// sigma h^2 min phi~'': the step an explicit scheme would be limited to.
double explicit_cfl_dt(const FlowState& state, double sigma);

struct RunSchedule {
  std::vector<double> checkpoints;  // increasing s values
  double audit_interval = 0.25;     // extra samples for time-series audits
};

struct RunRecord {
  BundleConfig config;
  ClassPath path;
  StepController controller;
  std::vector<FlowState> checkpoints;
  std::vector<FlowState> samples;  // every audit_interval in s, checkpoints included
  bool completed = false;
  std::string termination = "completed";
  std::string failure_kind;  // error class name when !completed
  double failed_s = 0.0;
  std::size_t steps = 0;
  double explicit_dt_min = 0.0;
  double explicit_dt_initial = 0.0;

  /// Re-raises the recorded failure with its original type.
  void rethrow_if_failed() const;
};

using CheckpointHook = std::function<void(const FlowState&)>;

/// Integrates the normalized flow from the seed over the schedule. The class
/// path must already have T = 1. Step errors stop the run and are recorded.
RunRecord run(const BundleConfig& config, const KahlerClass& class0, const Grid& grid,
              const RunSchedule& schedule, const StepController& controller,
              const CheckpointHook& hook = {});

}  // namespace calabi
