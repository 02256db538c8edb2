#pragma once

#include <span>
#include <string>
#include <vector>

#include "calabi/flow.hpp"

namespace calabi {

/// g_i(tau) = (1 - t_i)^{-1} g(t_i + (1 - t_i) tau). The returned state
/// carries tau as its time and the rescaled class and anchor; theta is
/// unchanged because it is scale invariant.
FlowState typeI_rescale(const FlowState& state, double t_i);

/// Class path of the rescaled flow.
ClassPath typeI_rescale(const ClassPath& path, double t_i);

enum class BlowupCase { SolitonOnBundle, ProductCnCPm1, CompactSoliton };

std::string to_string(BlowupCase c);

struct VolumeSample {
  double s = 0.0;
  double volume = 0.0;  // unnormalized Vol(t)
};

struct BlowupThresholds {
  double liminf_fraction = 0.5;  // Vol(last) > fraction * Vol(s = 2)
  double stable_band = 0.2;      // (1-t)^{-N} Vol within +-20% over the last three
  double growth_factor = 2.0;    // (1-t)^{-N} Vol grows by at least this factor
  double min_s = 6.0;
};

struct BlowupEvidence {
  double vol_liminf_proxy = 0.0;  // Vol(last) / Vol(s = 2)
  double vol_typeI_ratio = 0.0;   // ratio(last) / ratio(third from last)
  double vol_typeI_spread = 0.0;  // max |ratio_k / ratio_last - 1| over the last three
  double comparison_sup = 0.0;    // filled by the caller when a model is available
  double H_sup_local = 0.0;       // filled by the caller
};

struct BlowupVerdict {
  BlowupCase kind = BlowupCase::SolitonOnBundle;
  BlowupEvidence evidence;
  BlowupThresholds thresholds;
};

/// Volume trichotomy on samples ordered by s. `dim` is N = m + n + 1.
/// Throws Inconclusive if the samples stop before min_s or match no case.
BlowupVerdict classify_limit(std::span<const VolumeSample> samples, int dim,
                             const BlowupThresholds& thresholds = {});

/// |R~(rho0, s)| along the given states (normalized curvature at a fixed point).
std::vector<double> exterior_flatness(std::span<const FlowState> states,
                                      const BundleConfig& config, double rho0 = 0.0);

}  // namespace calabi
