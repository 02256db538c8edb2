#include "calabi/flow.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "calabi/errors.hpp"
#include "calabi/stencil.hpp"

namespace calabi {

std::string to_string(SingularityType t) {
  switch (t) {
    case SingularityType::Contraction: return "Contraction";
    case SingularityType::Collapse: return "Collapse";
    case SingularityType::Extinction: return "Extinction";
  }
  return "?";
}

KahlerClass ClassPath::normalized_at(double s) const {
  // e^s (a0 - slope (1 - e^{-s})) written without cancellation
  const double es = std::exp(s);
  return {es * (a0 - slope_a) + slope_a, es * (b0 - slope_b) + slope_b};
}

KahlerClass ClassPath::normalized_rate(double s) const {
  const double es = std::exp(s);
  return {es * (a0 - slope_a), es * (b0 - slope_b)};
}

ClassPath class_path(const BundleConfig& config, const KahlerClass& class0) {
  config.validate();
  if (!(class0.a > 0) || !(class0.b > 0))
    throw InvalidInput("initial class must satisfy a0 > 0 and b0 > 0");
  ClassPath p;
  p.a0 = class0.a;
  p.b0 = class0.b;
  p.slope_a = config.lambda - config.m - 1;
  p.slope_b = config.m + 2;
  p.t_a = p.slope_a > 0 ? p.a0 / p.slope_a : std::numeric_limits<double>::infinity();
  p.t_b = p.b0 / p.slope_b;
  p.T = std::min(p.t_a, p.t_b);
  if (std::abs(p.t_a - p.t_b) <= 1e-12 * p.T)
    p.type = SingularityType::Extinction;
  else if (p.t_a < p.t_b)
    p.type = SingularityType::Contraction;
  else
    p.type = SingularityType::Collapse;
  const double lhs = p.a0 * p.slope_b, rhs = p.b0 * p.slope_a;
  p.anticanonical = std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
  return p;
}

Rescaled rescale_to_unit_time(const ClassPath& path, const KahlerClass& class0) {
  if (!std::isfinite(path.T) || !(path.T > 0)) throw InvalidInput("singular time must be finite");
  KahlerClass c{class0.a / path.T, class0.b / path.T};
  ClassPath q = path;
  q.a0 = c.a;
  q.b0 = c.b;
  q.t_a = path.t_a / path.T;
  q.t_b = path.t_b / path.T;
  q.T = 1.0;
  // keep the classification of the original path; only the clock changed
  return {q, c};
}

// ---------------------------------------------------------------------------
// state

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double geometric_u_at(const Profile& p, const BundleConfig& c, double a, std::size_t i) {
  return -(c.n * std::log(a + p.dphi[i]) + c.m * std::log(p.dphi[i]) + std::log(p.d2phi[i])) +
         (c.m + 1) * p.grid[i];
}

}  // namespace

KahlerClass FlowState::normalized_class() const {
  const double f = std::exp(s);
  return {class_now.a * f, class_now.b * f};
}

Profile FlowState::profile() const {
  return profile_from_theta(grid, class_now.b, theta, phi_anchor);
}

Profile FlowState::normalized_profile() const {
  const double f = std::exp(s);
  return profile_from_theta(grid, class_now.b * f, theta, phi_anchor * f);
}

FlowState initial_state(const ClassPath& path, const Grid& grid) {
  FlowState st{0.0, 0.0, path.at(0.0), path.b0 * std::log(2.0), grid,
               std::vector<double>(grid.size(), 0.0)};
  // phi_anchor is phi at the anchor node, which need not be exactly rho = 0
  const double r = grid[grid.anchor_index()];
  st.phi_anchor = path.b0 * (r > 0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r)));
  return st;
}

FlowState state_from_dphi(const ClassPath& path, const Grid& grid, double t,
                          const std::vector<double>& dphi, double phi_anchor) {
  const KahlerClass c = path.at(t);
  std::vector<double> theta(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(dphi[i] > 0) || !(dphi[i] < c.b)) throw ConeViolation("phi' outside (0, b)");
    theta[i] = std::log(dphi[i]) - std::log(c.b - dphi[i]) - grid[i];
  }
  return FlowState{t, -std::log1p(-t), c, phi_anchor, grid, std::move(theta)};
}

// ---------------------------------------------------------------------------
// right-hand sides

std::vector<double> rhs_dphi(const Profile& p, const BundleConfig& c, double a,
                             Parametrization param) {
  std::vector<double> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d1 = p.dphi[i], d2 = p.d2phi[i], d3 = p.d3phi[i];
    if (!(d2 > 0) || !(d1 > 0) || !(p.gap[i] > 0))
      throw ConeViolation("rhs_dphi: cone condition fails at rho = " + std::to_string(p.grid[i]));
    r[i] = d3 / d2 + c.m * d2 / d1 + c.n * d2 / (a + d1) - (c.m + 1);
    if (param == Parametrization::Normalized) r[i] += d1;
  }
  return r;
}

std::vector<double> rhs_dphi(const FlowState& st, const BundleConfig& c, Parametrization param) {
  if (param == Parametrization::Normalized)
    return rhs_dphi(st.normalized_profile(), c, st.normalized_class().a, param);
  return rhs_dphi(st.profile(), c, st.class_now.a, param);
}

namespace {

// Pointwise pieces of the theta equation.
struct ThetaEval {
  std::vector<double> G, bp, qmy, y, p, dpsi, th1, th2;
  bool cone_ok = true;
  bool finite = true;
};

ThetaEval evaluate(const BundleConfig& c, const Grid& grid, const std::vector<double>& theta,
                   double a, double b) {
  const std::size_t n = grid.size();
  const auto der = central_derivatives(theta, grid.h(), clamped_ghosts(theta));
  ThetaEval e;
  e.G.resize(n);
  e.bp.resize(n);
  e.qmy.resize(n);
  e.y.resize(n);
  e.p.resize(n);
  e.dpsi.resize(n);
  e.th1 = der.d1;
  e.th2 = der.d2;
  for (std::size_t i = 0; i < n; ++i) {
    const double psi = grid[i] + theta[i];
    const double y = sigmoid(psi), q = sigmoid(-psi);
    const double p = y * q;
    const double dpsi = 1.0 + der.d1[i];
    if (!(dpsi > 0)) e.cone_ok = false;
    e.y[i] = y;
    e.p[i] = p;
    e.qmy[i] = q - y;
    e.dpsi[i] = dpsi;
    e.bp[i] = b * p;
    e.G[i] = der.d2[i] / dpsi + ((c.m + 1) - (c.m + 2) * y) * der.d1[i] +
             c.n * b * p * dpsi / (a + b * y);
    if (!std::isfinite(e.G[i]) || !std::isfinite(psi)) e.finite = false;
  }
  return e;
}

// Fills the banded (kl = ku = 2) Jacobian of G, LAPACK column-major band
// storage with ldab = 7, then applies the row-scaled transform
//   M = diag(bp) - gamma_tau (J_G - diag(G (q - y))).
constexpr int kKl = 2, kKu = 2, kLdab = 2 * kKl + kKu + 1;

template <class Put>
void jacobian_entries(const BundleConfig& c, const Grid& grid, const ThetaEval& e, double a,
                      double b, Put&& put) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(grid.size());
  const double h = grid.h(), h2 = h * h;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double y = e.y[i], p = e.p[i], dpsi = e.dpsi[i];
    const double den = a + b * y;
    const double dG_d1 = -e.th2[i] / (dpsi * dpsi) + ((c.m + 1) - (c.m + 2) * y) +
                         c.n * b * p / den;
    const double dG_d2 = 1.0 / dpsi;
    const double dG_loc = -(c.m + 2) * p * e.th1[i] +
                          c.n * b * dpsi * p * (e.qmy[i] * den - b * p) / (den * den);
    put(i, i, dG_loc);
    for (int k = -2; k <= 2; ++k) {
      const double w = dG_d1 * stencil::kD1[k + 3] / h + dG_d2 * stencil::kD2[k + 3] / h2;
      if (w == 0.0) continue;
      const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + k, 0, n - 1);
      put(i, j, w);
    }
  }
}

}  // namespace

std::vector<double> theta_rate(const BundleConfig& c, const Grid& grid,
                               const std::vector<double>& theta, double a, double b) {
  const auto e = evaluate(c, grid, theta, a, b);
  std::vector<double> r(grid.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = e.G[i] / e.bp[i];
  return r;
}

std::vector<double> theta_rate_jacobian(const BundleConfig& c, const Grid& grid,
                                        const std::vector<double>& theta, double a, double b) {
  const auto e = evaluate(c, grid, theta, a, b);
  const std::size_t n = grid.size();
  std::vector<double> J(n * n, 0.0);
  jacobian_entries(c, grid, e, a, b, [&](std::ptrdiff_t i, std::ptrdiff_t j, double v) {
    J[i * n + j] += v;
  });
  for (std::size_t i = 0; i < n; ++i) {
    J[i * n + i] -= e.G[i] * e.qmy[i];
    for (std::size_t j = 0; j < n; ++j) J[i * n + j] /= e.bp[i];
  }
  return J;
}

// ---------------------------------------------------------------------------
// stepping

namespace {

constexpr double kGamma = 1.0 + 0.70710678118654752440;

struct ClassAt {
  double a, b, a_rate, b_rate;
};

ClassAt class_at(const ClassPath& path, Parametrization param, double time) {
  if (param == Parametrization::Normalized) {
    const auto c = path.normalized_at(time);
    const auto r = path.normalized_rate(time);
    return {c.a, c.b, r.a, r.b};
  }
  const auto c = path.at(time);
  return {c.a, c.b, -path.slope_a, -path.slope_b};
}

double current_time(const FlowState& st, Parametrization param) {
  return param == Parametrization::Normalized ? st.s : st.t;
}

// d phi(anchor)/d(time) in the gauge c_t = 0
double anchor_rate(const FlowState& st, const BundleConfig& c, Parametrization param) {
  const Profile p = st.profile();
  const double u = geometric_u_at(p, c, st.class_now.a, st.grid.anchor_index());
  return param == Parametrization::Normalized ? -u * std::exp(-st.s) : -u;
}

FlowState at_time(const FlowState& base, const ClassPath& path, Parametrization param,
                  double time, std::vector<double> theta) {
  FlowState st = base;
  if (param == Parametrization::Normalized) {
    st.s = time;
    st.t = -std::expm1(-time);
  } else {
    st.t = time;
    st.s = -std::log1p(-time);
  }
  st.class_now = path.at(st.t);
  st.theta = std::move(theta);
  return st;
}

enum class Outcome { Ok, Cone, Blowup };

struct Attempt {
  Outcome outcome = Outcome::Ok;
  std::vector<double> theta;
  double error = 0.0;
  std::string message;
};

Attempt ros2(const FlowState& st, const BundleConfig& c, const ClassPath& path,
             Parametrization param, double tau) {
  Attempt out;
  const Grid& grid = st.grid;
  const std::size_t n = grid.size();
  const double t0 = current_time(st, param);
  const ClassAt k0 = class_at(path, param, t0);
  const ClassAt k1c = class_at(path, param, t0 + tau);
  if (!(k1c.a > 0) || !(k1c.b > 0)) {
    out.outcome = Outcome::Cone;
    out.message = "class leaves the Kahler cone";
    return out;
  }
  const auto e = evaluate(c, grid, st.theta, k0.a, k0.b);
  if (!e.finite) {
    out.outcome = Outcome::Blowup;
    out.message = "non-finite right-hand side";
    return out;
  }
  if (!e.cone_ok) {
    out.outcome = Outcome::Cone;
    out.message = "phi'' <= 0";
    return out;
  }

  // F_t, the explicit time dependence through (a, b)
  std::vector<double> F(n), Ft(n);
  for (std::size_t i = 0; i < n; ++i) {
    F[i] = e.G[i] / e.bp[i];
    const double den = k0.a + k0.b * e.y[i];
    const double T = c.n * e.dpsi[i] / den;
    Ft[i] = -(k0.b_rate / k0.b) * (F[i] - T) - T * (k0.a_rate + e.y[i] * k0.b_rate) / den;
  }

  const double gt = kGamma * tau;
  std::vector<double> ab(kLdab * n, 0.0);
  auto band = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double& {
    return ab[static_cast<std::size_t>((kKl + kKu + i - j) + j * kLdab)];
  };
  jacobian_entries(c, grid, e, k0.a, k0.b,
                   [&](std::ptrdiff_t i, std::ptrdiff_t j, double v) { band(i, j) -= gt * v; });
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    band(ii, ii) += e.bp[i] + gt * e.G[i] * e.qmy[i];
  }
  std::vector<lapack_int> ipiv(n);
  const lapack_int N = static_cast<lapack_int>(n);
  if (LAPACKE_dgbtrf(LAPACK_COL_MAJOR, N, N, kKl, kKu, ab.data(), kLdab, ipiv.data()) != 0) {
    out.outcome = Outcome::Blowup;
    out.message = "singular stage matrix";
    return out;
  }
  auto solve = [&](std::vector<double>& rhs) {
    return LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', N, kKl, kKu, 1, ab.data(), kLdab, ipiv.data(),
                          rhs.data(), N) == 0;
  };

  std::vector<double> k1(n);
  for (std::size_t i = 0; i < n; ++i) k1[i] = e.bp[i] * (F[i] + gt * Ft[i]);
  if (!solve(k1)) {
    out.outcome = Outcome::Blowup;
    out.message = "stage solve failed";
    return out;
  }
  std::vector<double> mid(n);
  for (std::size_t i = 0; i < n; ++i) mid[i] = st.theta[i] + tau * k1[i];
  const auto e2 = evaluate(c, grid, mid, k1c.a, k1c.b);
  if (!e2.finite) {
    out.outcome = Outcome::Blowup;
    out.message = "non-finite stage value";
    return out;
  }
  if (!e2.cone_ok) {
    out.outcome = Outcome::Cone;
    out.message = "phi'' <= 0 at stage";
    return out;
  }
  std::vector<double> k2(n);
  for (std::size_t i = 0; i < n; ++i)
    k2[i] = e.bp[i] * (e2.G[i] / e2.bp[i] - 2.0 * k1[i] - gt * Ft[i]);
  if (!solve(k2)) {
    out.outcome = Outcome::Blowup;
    out.message = "stage solve failed";
    return out;
  }
  out.theta.resize(n);
  double err = 0.0;
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    out.theta[i] = st.theta[i] + tau * (1.5 * k1[i] + 0.5 * k2[i]);
    const double local = 0.5 * tau * std::abs(k1[i] + k2[i]) / (1.0 + std::abs(st.theta[i]));
    err = std::max(err, local);
    if (!std::isfinite(out.theta[i])) finite = false;
  }
  if (!finite) {
    out.outcome = Outcome::Blowup;
    out.message = "non-finite update";
    return out;
  }
  // cone condition on the new state: psi' > 0 everywhere
  const auto d = central_derivatives(out.theta, grid.h(), clamped_ghosts(out.theta));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(1.0 + d.d1[i] > 0)) {
      out.outcome = Outcome::Cone;
      out.message = "phi'' <= 0 after update at rho = " + std::to_string(grid[i]);
      return out;
    }
  }
  out.error = err;
  return out;
}

FlowState finish(const FlowState& st, const BundleConfig& c, const ClassPath& path,
                 Parametrization param, double tau, std::vector<double> theta) {
  const double t0 = current_time(st, param);
  const double r0 = anchor_rate(st, c, param);
  FlowState next = at_time(st, path, param, t0 + tau, std::move(theta));
  const double r1 = anchor_rate(next, c, param);
  next.phi_anchor = st.phi_anchor + 0.5 * tau * (r0 + r1);
  return next;
}

[[noreturn]] void raise(Outcome o, const std::string& msg, double s) {
  const std::string full = msg + " (s = " + std::to_string(s) + ")";
  if (o == Outcome::Cone) throw ConeViolation(full);
  throw NumericalBlowup(full);
}

}  // namespace

StepResult fixed_step(const FlowState& st, const BundleConfig& c, const ClassPath& path,
                      Parametrization param, double dt) {
  auto a = ros2(st, c, path, param, dt);
  if (a.outcome != Outcome::Ok) raise(a.outcome, a.message, st.s);
  StepResult r{finish(st, c, path, param, dt, std::move(a.theta)), dt, dt, a.error, 0};
  return r;
}

StepResult step(const FlowState& st, const BundleConfig& c, const ClassPath& path,
                const StepController& ctl, Parametrization param, double dt_try, double limit) {
  const double t0 = current_time(st, param);
  const double dt_cap = ctl.sigma * st.grid.h();
  double dt = std::min(dt_try, dt_cap);
  int rejected = 0;
  for (;;) {
    bool last = false;
    if (t0 + dt >= limit - 1e-14 * std::max(1.0, std::abs(limit))) {
      dt = limit - t0;
      last = true;
    }
    if (!(dt > 0)) throw InvalidInput("step: nothing to integrate");
    auto a = ros2(st, c, path, param, dt);
    if (a.outcome == Outcome::Ok && a.error <= ctl.tol) {
      const double grow = a.error > 0 ? 0.9 * std::cbrt(ctl.tol / a.error) : 2.0;
      double next = dt * std::clamp(grow, 0.2, 2.0);
      if (last) next = std::max(next, dt_try);
      StepResult r{finish(st, c, path, param, dt, std::move(a.theta)), dt,
                   std::min(next, dt_cap), a.error, rejected};
      return r;
    }
    ++rejected;
    if (a.outcome == Outcome::Ok) {
      dt *= std::clamp(0.9 * std::cbrt(ctl.tol / a.error), 0.1, 0.5);
    } else {
      dt *= 0.5;
    }
    if (dt < ctl.dt_min) {
      if (a.outcome == Outcome::Ok) raise(Outcome::Blowup, "step size underflow", st.s);
      raise(a.outcome, a.message, st.s);
    }
  }
}

FlowState advance(const FlowState& st, const BundleConfig& c, const ClassPath& path,
                  const StepController& ctl, Parametrization param, double target,
                  std::size_t* steps) {
  FlowState cur = st;
  double dt = ctl.sigma * st.grid.h() * 0.1;
  while (current_time(cur, param) < target) {
    auto r = step(cur, c, path, ctl, param, dt, target);
    cur = std::move(r.state);
    dt = r.dt_next;
    if (steps) ++*steps;
  }
  return cur;
}

double explicit_cfl_dt(const FlowState& st, double sigma) {
  const Profile p = st.normalized_profile();
  const double mn = *std::min_element(p.d2phi.begin(), p.d2phi.end());
  const double h = st.grid.h();
  return sigma * h * h * mn;
}

void RunRecord::rethrow_if_failed() const {
  if (completed) return;
  if (failure_kind == "ConeViolation") throw ConeViolation(termination);
  if (failure_kind == "NumericalBlowup") throw NumericalBlowup(termination);
  throw Error(termination);
}

RunRecord run(const BundleConfig& config, const KahlerClass& class0, const Grid& grid,
              const RunSchedule& schedule, const StepController& ctl, const CheckpointHook& hook) {
  RunRecord rec;
  rec.config = config;
  rec.path = class_path(config, class0);
  if (std::abs(rec.path.T - 1.0) > 1e-12)
    throw InvalidInput("run expects a class path with singular time 1");
  rec.controller = ctl;
  for (std::size_t i = 1; i < schedule.checkpoints.size(); ++i)
    if (!(schedule.checkpoints[i] > schedule.checkpoints[i - 1]))
      throw InvalidInput("checkpoints must be increasing");
  if (schedule.checkpoints.empty() || schedule.checkpoints.front() < 0)
    throw InvalidInput("checkpoints must be nonnegative and non-empty");

  // sample times: checkpoints plus a uniform audit lattice
  const double s_max = schedule.checkpoints.back();
  std::vector<double> times = schedule.checkpoints;
  if (schedule.audit_interval > 0) {
    for (int k = 0; k * schedule.audit_interval <= s_max + 1e-12; ++k)
      times.push_back(k * schedule.audit_interval);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-12; }),
              times.end());
  auto is_checkpoint = [&](double s) {
    for (double c : schedule.checkpoints)
      if (std::abs(c - s) < 1e-12) return true;
    return false;
  };

  FlowState cur = initial_state(rec.path, grid);
  rec.explicit_dt_initial = explicit_cfl_dt(cur, ctl.sigma);
  rec.explicit_dt_min = rec.explicit_dt_initial;
  double dt = ctl.sigma * grid.h() * 0.1;
  try {
    for (double target : times) {
      while (cur.s < target - 1e-14) {
        auto r = step(cur, config, rec.path, ctl, Parametrization::Normalized, dt, target);
        cur = std::move(r.state);
        dt = r.dt_next;
        ++rec.steps;
      }
      cur.s = target;  // remove roundoff drift so snapshot labels are exact
      cur.t = -std::expm1(-target);
      cur.class_now = rec.path.at(cur.t);
      rec.explicit_dt_min = std::min(rec.explicit_dt_min, explicit_cfl_dt(cur, ctl.sigma));
      rec.samples.push_back(cur);
      if (is_checkpoint(target)) {
        rec.checkpoints.push_back(cur);
        if (hook) hook(cur);
      }
    }
    rec.completed = true;
  } catch (const ConeViolation& e) {
    rec.failure_kind = "ConeViolation";
    rec.termination = e.what();
    rec.failed_s = cur.s;
  } catch (const NumericalBlowup& e) {
    rec.failure_kind = "NumericalBlowup";
    rec.termination = e.what();
    rec.failed_s = cur.s;
  }
  return rec;
}

}  // namespace calabi
