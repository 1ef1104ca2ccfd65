#pragma once

// The monotonicity domain
//   D(gamma) = { x : cos(theta_ij) >= gamma_ij exp(|rho_ij|), |theta_ij| <= theta_cap  for every line (i, j) }
// in the (theta_nsb, rho_pq) coordinates of VoltageState. With theta_cap < pi/2 every
// per-line set is convex, and connectivity plus the slack anchor make D compact.

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "monopf/grid.hpp"

namespace monopf {

struct DomainSpec {
  std::vector<double> gamma;  // one entry per network line, in (0, 1]
  double theta_cap;           // radians, < pi/2

  static constexpr double kDefaultCapDeg = 89.0;

  /// gamma_ij = gamma on every line.
  [[nodiscard]] static DomainSpec uniform(const Network& net, double gamma, double cap_deg = kDefaultCapDeg);
  [[nodiscard]] double min_gamma() const;
};

struct Membership {
  bool inside = false;
  Vector margin;     // cos(theta_ij) - gamma_ij exp(|rho_ij|) per line
  Vector angle_gap;  // theta_cap - |theta_ij| per line
  [[nodiscard]] double min_margin() const;
};

[[nodiscard]] Membership membership(const Network& net, const DomainSpec& domain, const Vector& x);

/// Per-line angle and log-magnitude differences (theta_ij, rho_ij) at x.
[[nodiscard]] std::vector<std::pair<double, double>> line_differences(const Network& net, const Vector& x);

struct ProjectionOptions {
  double edge_tol = 1e-10;   // inner 1-D solve
  double sweep_tol = 1e-9;   // stop when a full sweep moves less than this
  int max_sweeps = 500;
};

/// Euclidean projection onto D by Dykstra's method over the per-line sets.
/// Points already inside are returned unchanged. Throws ProjectionError when
/// the sweep cap is hit or a line set is empty.
[[nodiscard]] Vector project(const Network& net, const DomainSpec& domain, const Vector& x,
                             const ProjectionOptions& opts = {});

/// Projection onto a single line's set; exposed for testing.
[[nodiscard]] Vector project_line(const Network& net, const DomainSpec& domain, int line, const Vector& x,
                                  double tol = 1e-10);

struct AngleBound {
  double degrees = 0.0;
  bool empty = false;  // gamma * v_max / v_min > 1
};

/// Largest |theta_ij| allowed by D(gamma) when exp(|rho_ij|) <= v_max / v_min.
[[nodiscard]] AngleBound angle_bound(double gamma, double v_min, double v_max);

/// (ratio, max angle in degrees) for each v_max/v_min ratio.
[[nodiscard]] std::vector<std::pair<double, double>> tradeoff_curve(double gamma, std::span<const double> ratios);

/// Coordinate bounds implied by hop distance to the slack:
/// |theta_i| <= d_i arccos(gamma_min), |rho_i| <= d_i log(1/gamma_min).
struct DomainBox {
  Vector lower;
  Vector upper;
};
[[nodiscard]] DomainBox bounding_box(const Network& net, const DomainSpec& domain);

/// Draws points of D: a uniform point of the bounding box is projected onto D
/// and then pulled toward an interior anchor by a uniform fraction. Half the
/// draws stay on the boundary. Should the projection fail, the boundary point
/// on the segment from the anchor is used instead. Deterministic for a given
/// engine state.
class DomainSampler {
 public:
  DomainSampler(const Network& net, const DomainSpec& domain);
  [[nodiscard]] Vector draw(std::mt19937_64& rng) const;
  [[nodiscard]] const Vector& anchor() const noexcept { return anchor_; }

 private:
  const Network* net_;
  DomainSpec domain_;
  DomainBox box_;
  Vector anchor_;
};

}  // namespace monopf
