#include "calabi/stencil.hpp"

#include <cstddef>

namespace calabi {

Ghosts clamped_ghosts(std::span<const double> f) {
  Ghosts g;
  g.left.fill(f.front());
  g.right.fill(f.back());
  return g;
}

StencilDerivatives central_derivatives(std::span<const double> f, double h, const Ghosts& g) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(f.size());
  auto at = [&](std::ptrdiff_t i) {
    if (i < 0) return g.left[static_cast<std::size_t>(-1 - i)];
    if (i >= n) return g.right[static_cast<std::size_t>(i - n)];
    return f[static_cast<std::size_t>(i)];
  };
  StencilDerivatives out;
  out.d1.resize(f.size());
  out.d2.resize(f.size());
  out.d3.resize(f.size());
  const double h2 = h * h, h3 = h2 * h;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int k = -3; k <= 3; ++k) {
      const double v = at(i + k);
      s1 += stencil::kD1[k + 3] * v;
      s2 += stencil::kD2[k + 3] * v;
      s3 += stencil::kD3[k + 3] * v;
    }
    out.d1[i] = s1 / h;
    out.d2[i] = s2 / h2;
    out.d3[i] = s3 / h3;
  }
  return out;
}

}  // namespace calabi
