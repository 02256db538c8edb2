#include "calabi/blowup.hpp"

#include <algorithm>
#include <cmath>

#include "calabi/errors.hpp"
#include "calabi/geometry.hpp"

namespace calabi {

FlowState typeI_rescale(const FlowState& st, double t_i) {
  if (!(t_i < 1.0)) throw InvalidInput("typeI_rescale needs t_i < 1");
  const double k = 1.0 - t_i;
  FlowState out = st;
  out.t = (st.t - t_i) / k;
  out.s = -std::log1p(-out.t);
  out.class_now = {st.class_now.a / k, st.class_now.b / k};
  out.phi_anchor = st.phi_anchor / k;
  return out;
}

ClassPath typeI_rescale(const ClassPath& path, double t_i) {
  if (!(t_i < 1.0)) throw InvalidInput("typeI_rescale needs t_i < 1");
  const double k = 1.0 - t_i;
  ClassPath q = path;
  const KahlerClass c = path.at(t_i);
  q.a0 = c.a / k;
  q.b0 = c.b / k;
  q.t_a = (path.t_a - t_i) / k;
  q.t_b = (path.t_b - t_i) / k;
  q.T = (path.T - t_i) / k;
  return q;
}

std::string to_string(BlowupCase c) {
  switch (c) {
    case BlowupCase::SolitonOnBundle: return "SolitonOnBundle";
    case BlowupCase::ProductCnCPm1: return "ProductCnCPm1";
    case BlowupCase::CompactSoliton: return "CompactSoliton";
  }
  return "?";
}

BlowupVerdict classify_limit(std::span<const VolumeSample> v, int dim,
                             const BlowupThresholds& th) {
  if (v.size() < 3 || v.back().s < th.min_s)
    throw Inconclusive("classification needs samples up to s >= " + std::to_string(th.min_s));
  BlowupVerdict out;
  out.thresholds = th;
  // Vol at s = 2: the sample closest to it
  const auto ref = std::min_element(v.begin(), v.end(), [](const auto& x, const auto& y) {
    return std::abs(x.s - 2.0) < std::abs(y.s - 2.0);
  });
  auto ratio = [&](const VolumeSample& x) { return std::exp(dim * x.s) * x.volume; };
  const std::size_t n = v.size();
  auto& ev = out.evidence;
  ev.vol_liminf_proxy = v.back().volume / ref->volume;
  ev.vol_typeI_ratio = ratio(v[n - 1]) / ratio(v[n - 3]);
  for (std::size_t k = n - 3; k < n; ++k)
    ev.vol_typeI_spread = std::max(ev.vol_typeI_spread, std::abs(ratio(v[k]) / ratio(v[n - 1]) - 1.0));

  if (ev.vol_liminf_proxy > th.liminf_fraction) {
    out.kind = BlowupCase::SolitonOnBundle;
  } else if (ev.vol_typeI_spread <= th.stable_band) {
    out.kind = BlowupCase::CompactSoliton;
  } else {
    const bool monotone = ratio(v[n - 3]) < ratio(v[n - 2]) && ratio(v[n - 2]) < ratio(v[n - 1]);
    if (!(monotone && ev.vol_typeI_ratio >= th.growth_factor))
      throw Inconclusive("volume trichotomy: no case matches the last samples");
    out.kind = BlowupCase::ProductCnCPm1;
  }
  return out;
}

std::vector<double> exterior_flatness(std::span<const FlowState> states, const BundleConfig& c,
                                      double rho0) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& st : states) {
    const Profile p = st.normalized_profile();
    const auto curv = scalar_curvature_both(p, c, st.normalized_class().a,
                                            std::numeric_limits<double>::infinity());
    // nearest node; rho0 is normally a grid node
    const double h = st.grid.h();
    auto i = static_cast<std::size_t>(std::lround((rho0 - st.grid.rho_min()) / h));
    i = std::min(i, p.size() - 1);
    out.push_back(std::abs(curv.R[i]));
  }
  return out;
}

}  // namespace calabi
