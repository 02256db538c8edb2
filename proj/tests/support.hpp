#pragma once

// Shared fixtures for the unit tests.

#include <cmath>
#include <random>
#include <vector>

#include "calabi/profile.hpp"

namespace testing {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline calabi::BundleConfig bundle(int n = 1, int m = 0, double lambda = 2.0) {
  calabi::BundleConfig c;
  c.n = n;
  c.m = m;
  c.lambda = lambda;
  return c;
}

inline calabi::Grid benchmark_grid() { return calabi::make_grid(-30.0, 30.0, 2049); }

// Smooth random theta: a few Gaussian bumps with |theta'| well below 1 so that
// psi = rho + theta stays increasing.
inline std::vector<double> random_theta(const calabi::Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> centre(-6.0, 6.0), width(1.5, 4.0), amp(-0.4, 0.4);
  std::vector<double> theta(g.size(), 0.0);
  for (int k = 0; k < 4; ++k) {
    const double c = centre(rng), w = width(rng), A = amp(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = (g[i] - c) / w;
      theta[i] += A * std::exp(-z * z);
    }
  }
  return theta;
}

}  // namespace testing
