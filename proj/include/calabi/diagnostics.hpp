#pragma once

// Ricci potentials of the normalized flow and the estimate audits.
//
// With L = log(1 + e^rho) and b1 = b(1), the Ricci potential of the
// normalized flow in the gauge c_t = 0 is
//
//   u0 = phi~ - u~ - e^s b1 L + N (e^s - 1 - s),     N = m + n + 1,
//
// where phi~ = e^s phi and u~ is the geometric potential of the normalized
// metric. The weighted potential is u_w = u0 + e^s eta_A and the Ricci vertex
// is its minimizer.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "calabi/flow.hpp"
#include "calabi/geometry.hpp"

namespace calabi {

struct WeightJet {
  std::vector<double> eta, d1, d2;
};

/// b log(1+e^rho) up to 2A, constant b log(1+e^{4A}) from 4A on, quintic
/// smoothstep blend in between.
WeightJet weight_eta_jet(double A, double b, const Grid& grid);
std::vector<double> weight_eta(double A, double b, const Grid& grid);

enum class VertexLocation { ZeroSection, Interior, InfinitySection };

struct PotentialTrack {
  double s = 0.0;
  double A = 1.0;
  std::vector<double> u0, u_w, du_w, d2u_w, v;
  VertexLocation where = VertexLocation::Interior;
  double vertex_rho = 0.0;  // -inf on the zero section, +inf on D_inf
  std::size_t vertex_index = 0;
  double a_inf = 0.0;
};

/// Minimizer of sampled values. Values within roundoff of the minimum count
/// as ties and the smallest such rho wins. A minimum at an end node is read
/// as the zero section (rho = -inf) or the infinity section (+inf); one within
/// three nodes of an end throws VertexAtBoundary; interior minima get a
/// three-point parabolic refinement.
struct Vertex {
  VertexLocation where;
  std::size_t index;
  double rho;
  double value;
};
Vertex locate_vertex(const Grid& grid, std::span<const double> values);

/// `time_shift` adds c(t) to phi before u0 is built; used to check gauge
/// invariance.
PotentialTrack potential_track(const FlowState& state, const BundleConfig& config,
                               const ClassPath& path, double A, double time_shift = 0.0);

/// Doubles A from 1 until the vertex lies below A on the first three states.
double choose_weight(std::span<const FlowState> states, const BundleConfig& config,
                     const ClassPath& path);

struct MonotonicityAudit {
  double B0 = 0.0;
  double B0_increasing = 0.0;  // e^{-s}(a_inf - B0) nondecreasing
  double B0_decreasing = 0.0;  // e^{-s}(a_inf + B0) nonincreasing
  double B0_half = 0.0;
  std::size_t samples = 0;
  bool stable = false;
  bool passed = false;
};

MonotonicityAudit monotonicity_audit(std::span<const double> s, std::span<const double> a_inf);

struct VertexGeometry {
  double phi_at_vertex = 0.0;  // phi~'(rho_s)
  double dist_to_P0 = 0.0;     // normalized radial distance from the zero section
};

VertexGeometry vertex_geometry(const PotentialTrack& track, const FlowState& state,
                               const ClassPath& path);

struct EstimateReport {
  double s = 0.0, t = 0.0;
  double H_min = 0.0, H_max = 0.0;
  double third_ratio_sup = 0.0;
  double typeI = 0.0;
  double liyau = 0.0;
  double local_typeI = 0.0;
  double harnack = 0.0;
  double vertex_rho = 0.0;
  double a_inf = 0.0;
  double phi_at_vertex = std::numeric_limits<double>::quiet_NaN();
  double dist_to_P0 = std::numeric_limits<double>::quiet_NaN();
  double fibre_diam = 0.0;
  double diam_cp = 0.0;
  double volume_total = 0.0;  // unnormalized Vol(t)
  double volume_normalized = 0.0;
  double typeI_at_vertex = 0.0;
  double formula_mismatch = 0.0;
};

struct EstimateOptions {
  double harnack_radius = 1.0;
  double mismatch_tol = 1e-4;
  double p_floor = kDefaultWindowFloor;
};

EstimateReport estimate_report(const FlowState& state, const PotentialTrack& track,
                               const BundleConfig& config, const ClassPath& path,
                               const EstimateOptions& opt = {});

}  // namespace calabi
