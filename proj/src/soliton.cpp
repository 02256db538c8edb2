#include "calabi/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

// Boost 1.74's pchip calls isnan unqualified
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "calabi/errors.hpp"

namespace calabi {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

void check(const BundleConfig& c, double a) {
  c.validate();
  if (!(a > 0)) throw InvalidInput("soliton requires a > 0");
}

}  // namespace

std::vector<double> shooting_polynomial(const BundleConfig& c, double a) {
  check(c, a);
  // s^m (a+s)^n: binomial coefficients C(n,j) a^{n-j} at degree m+j
  std::vector<double> base(c.m + c.n + 1, 0.0);
  double binom = 1.0;
  for (int j = 0; j <= c.n; ++j) {
    base[c.m + j] = binom * std::pow(a, c.n - j);
    binom = binom * (c.n - j) / (j + 1);
  }
  std::vector<double> p(base.size() + 1, 0.0);
  for (std::size_t k = 0; k < base.size(); ++k) {
    p[k] += (c.m + 1) * base[k];
    p[k + 1] -= base[k];
  }
  return p;
}

double shooting_integral(const BundleConfig& c, double a, double cc) {
  if (!(cc > 0)) throw InvalidInput("shooting integral needs c > 0");
  const auto p = shooting_polynomial(c, a);
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    sum += p[k] * factorial(static_cast<int>(k)) / std::pow(cc, static_cast<double>(k + 1));
  return sum;
}

CStar solve_c_star(const BundleConfig& c, double a) {
  auto I = [&](double x) { return shooting_integral(c, a, x); };
  double lo = 1.0, hi = 1.0;
  // I > 0 for large c and I < 0 for small c
  while (I(hi) <= 0) {
    hi *= 2.0;
    if (hi > 1e6) throw BracketError("no sign change of I(c) up to c = 1e6");
  }
  lo = hi;
  while (I(lo) > 0) {
    lo *= 0.5;
    if (lo < 1e-6) throw BracketError("no sign change of I(c) down to c = 1e-6");
  }
  if (lo == hi) hi = 2.0 * lo;
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (I(mid) > 0)
      hi = mid;
    else
      lo = mid;
  }
  return {0.5 * (lo + hi), lo, hi};
}

double soliton_w(const BundleConfig& c, double a, double cc, double x) {
  if (!(x > 0)) return 0.0;
  const auto p = shooting_polynomial(c, a);
  const double z = cc * x;
  double sum = 0.0;
  if (z < 1.0) {
    // e^{cx} int_0^x s^k e^{-cs} ds = x^{k+1} sum_j z^j / ((k+1)(k+2)...(k+1+j))
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] == 0.0) continue;
      double term = 1.0 / (k + 1), series = term;
      for (int j = 1; j < 60; ++j) {
        term *= z / (k + 1 + j);
        series += term;
        if (term < 1e-18 * series) break;
      }
      sum += p[k] * std::pow(x, static_cast<double>(k + 1)) * series;
    }
    return sum * std::pow(x, -c.m) * std::pow(a + x, -c.n);
  }
  // int_0^x = I(c) - int_x^inf; the tail is written without the growing exponential
  double full = 0.0, size = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double mk = p[k] * factorial(static_cast<int>(k)) / std::pow(cc, static_cast<double>(k + 1));
    full += mk;
    size += std::abs(mk);
    double term = 1.0, partial = 1.0;
    for (std::size_t j = 1; j <= k; ++j) {
      term *= z / static_cast<double>(j);
      partial += term;
    }
    sum += mk * partial;
  }
  // at c = c* the full integral is zero up to roundoff
  if (std::abs(full) > 1e3 * std::numeric_limits<double>::epsilon() * size) sum -= std::exp(z) * full;
  return -sum * std::pow(x, -c.m) * std::pow(a + x, -c.n);
}

double soliton_dw(const BundleConfig& c, double a, double cc, double x) {
  const double w = soliton_w(c, a, cc, x);
  return (c.m + 1) - x - c.m * w / x - c.n * w / (a + x) + cc * w;
}

double soliton_d2w(const BundleConfig& c, double a, double cc, double x) {
  const double w = soliton_w(c, a, cc, x);
  const double wx = (c.m + 1) - x - c.m * w / x - c.n * w / (a + x) + cc * w;
  return -1.0 - c.m * (wx / x - w / (x * x)) - c.n * (wx / (a + x) - w / ((a + x) * (a + x))) +
         cc * wx;
}

double soliton_residual(const BundleConfig& c, double a, double cc, double x) {
  const double h = 1e-3 * x;
  auto w = [&](double y) { return soliton_w(c, a, cc, y); };
  const double wx = (w(x - 2 * h) - 8 * w(x - h) + 8 * w(x + h) - w(x + 2 * h)) / (12 * h);
  const double w0 = w(x);
  return wx + c.m * w0 / x + c.n * w0 / (a + x) - cc * w0 - (c.m + 1) + x;
}

SolitonProfile soliton_profile(const BundleConfig& c, double a, double c_star, double x_max,
                               std::size_t count, double x_min) {
  if (!(x_max > x_min) || count < 2) throw InvalidInput("soliton grid needs x_max > x_min");
  SolitonProfile s;
  s.a = a;
  s.c_star = c_star;
  s.x.resize(count);
  s.w.resize(count);
  s.residual.resize(count);
  const double l0 = std::log(x_min), l1 = std::log(x_max);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = std::exp(l0 + (l1 - l0) * i / static_cast<double>(count - 1));
    s.x[i] = x;
    s.w[i] = soliton_w(c, a, c_star, x);
    if (!(s.w[i] > 0))
      throw PositivityLoss("soliton profile w <= 0 at x = " + std::to_string(x));
    s.residual[i] = soliton_residual(c, a, c_star, x);
  }
  return s;
}

Profile soliton_on_grid(const BundleConfig& c, double a, double cc, const Grid& grid, double x0) {
  // integrate l = log x in rho: dl/drho = w(x)/x, smooth down to x = 0
  auto rate = [&](double l) {
    const double x = std::exp(l);
    return soliton_w(c, a, cc, x) / x;
  };
  const std::size_t n = grid.size(), k = grid.anchor_index();
  std::vector<double> l(n);
  l[k] = std::log(x0);
  const int sub = 8;
  auto rk4 = [&](double l0, double dr) {
    for (int j = 0; j < sub; ++j) {
      const double hh = dr / sub;
      const double k1 = rate(l0), k2 = rate(l0 + 0.5 * hh * k1), k3 = rate(l0 + 0.5 * hh * k2),
                   k4 = rate(l0 + hh * k3);
      l0 += hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return l0;
  };
  for (std::size_t i = k; i + 1 < n; ++i) l[i + 1] = rk4(l[i], grid.h());
  for (std::size_t i = k; i > 0; --i) l[i - 1] = rk4(l[i], -grid.h());
  Profile p{grid, std::numeric_limits<double>::infinity(), 0.0, {}, {}, {}, {}, {},
            DerivativeSource::Exact};
  p.dphi.resize(n);
  p.gap.assign(n, std::numeric_limits<double>::infinity());
  p.d2phi.resize(n);
  p.d3phi.resize(n);
  p.d4phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::exp(l[i]);
    const double w = soliton_w(c, a, cc, x);
    const double wx = soliton_dw(c, a, cc, x);
    const double wxx = soliton_d2w(c, a, cc, x);
    p.dphi[i] = x;
    p.d2phi[i] = w;
    p.d3phi[i] = wx * w;
    p.d4phi[i] = (wxx * w + wx * wx) * w;
  }
  return p;
}

MomentumChart flow_to_momentum(const Profile& p) {
  const Window win = trusted_window(p);
  MomentumChart m;
  for (std::size_t i = win.lo; i < win.hi; ++i) {
    if (!(p.d2phi[i] > 0)) throw ConeViolation("flow_to_momentum: phi'' <= 0");
    if (!m.x.empty() && !(p.dphi[i] > m.x.back())) continue;
    m.x.push_back(p.dphi[i]);
    m.w.push_back(p.d2phi[i]);
    m.rho.push_back(p.grid[i]);
  }
  if (m.x.size() < 4) throw ConeViolation("flow_to_momentum: too few monotone samples");
  return m;
}

namespace {

double pchip_eval(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  // local window keeps construction cheap: pchip slopes only use neighbours
  auto it = std::upper_bound(x.begin(), x.end(), at);
  std::size_t hi = static_cast<std::size_t>(it - x.begin());
  std::size_t lo = hi >= 3 ? hi - 3 : 0;
  std::size_t end = std::min(x.size(), hi + 3);
  std::vector<double> xs(x.begin() + lo, x.begin() + end), ys(y.begin() + lo, y.begin() + end);
  using boost::math::interpolators::pchip;
  pchip<std::vector<double>> f(std::move(xs), std::move(ys));
  return f(at);
}

}  // namespace

double momentum_w(const MomentumChart& m, double x) { return pchip_eval(m.x, m.w, x); }

double momentum_rho(const MomentumChart& m, double x) { return pchip_eval(m.x, m.rho, x); }

double momentum_discrepancy(const MomentumChart& m, const BundleConfig& c, double a,
                            double c_star, double x_lo, double x_hi) {
  if (x_lo < m.x.front() || x_hi > m.x.back())
    throw InvalidInput("momentum comparison range is outside the sampled chart");
  double sup = 0.0;
  const int samples = 2001;
  for (int k = 0; k < samples; ++k) {
    const double x = x_lo + (x_hi - x_lo) * k / (samples - 1);
    sup = std::max(sup, std::abs(momentum_w(m, x) - soliton_w(c, a, c_star, x)));
  }
  return sup;
}

}  // namespace calabi
