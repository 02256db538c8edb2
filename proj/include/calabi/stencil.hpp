#pragma once

#include <array>
#include <span>
#include <vector>

namespace calabi {

/// Three ghost values on each side of a sampled function:
/// left[k] is f at index -1-k, right[k] is f at index N+k.
struct Ghosts {
  std::array<double, 3> left{};
  std::array<double, 3> right{};
};

/// Ghosts that repeat the end values (constant extension).
Ghosts clamped_ghosts(std::span<const double> f);

/// Fourth-order central differences: 5-point first and second derivatives,
/// 7-point third derivative.
struct StencilDerivatives {
  std::vector<double> d1, d2, d3;
};

StencilDerivatives central_derivatives(std::span<const double> f, double h, const Ghosts& g);

namespace stencil {
// Weights for offsets -3..3, before division by the power of h.
inline constexpr std::array<double, 7> kD1{0.0, 1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12, 0.0};
inline constexpr std::array<double, 7> kD2{0.0, -1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12, 0.0};
inline constexpr std::array<double, 7> kD3{1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8};
}  // namespace stencil

}  // namespace calabi
