#pragma once

// Power flow operator in log-polar coordinates.
//
// The unknowns are x = (theta_nsb, rho_pq) with V_i = exp(rho_i + j theta_i).
// Derivatives are taken with respect to rho = log|V|, not |V|, so the
// Jacobian differs from the textbook power flow Jacobian by a column scaling.

#include <complex>
#include <vector>

#include "monopf/grid.hpp"

namespace monopf {

struct VoltageState {
  Vector theta;  // per non-slack bus, radians
  Vector rho;    // per PQ bus, log p.u.

  [[nodiscard]] static VoltageState flat(const Network& net);
  /// Validates dimensions, finiteness and |rho| <= 2.
  [[nodiscard]] static VoltageState from_vector(const Network& net, const Vector& x);
  [[nodiscard]] Vector to_vector() const;
};

/// Full phasor vector with slack and PV magnitudes filled in.
[[nodiscard]] std::vector<std::complex<double>> phasors(const Network& net, const Vector& x);

/// Per-bus angles and log-magnitudes (slack and PV entries fixed).
struct PolarView {
  Vector theta;
  Vector rho;
};
[[nodiscard]] PolarView polar_view(const Network& net, const Vector& x);

/// F(x) - s: active rows for nsb, reactive rows for pq.
[[nodiscard]] Vector eval_F(const Network& net, const Vector& x, const InjectionVector& s);
[[nodiscard]] Vector eval_F(const Network& net, const VoltageState& state, const InjectionVector& s);

/// Power sums without the injection offsets; eval_F(x, injections_from_state(x)) == 0.
[[nodiscard]] InjectionVector injections_from_state(const Network& net, const Vector& x);
[[nodiscard]] InjectionVector injections_from_state(const Network& net, const VoltageState& state);

/// Analytic partial derivatives of eval_F with respect to (theta_nsb, rho_pq).
[[nodiscard]] Matrix jacobian_direct(const Network& net, const Vector& x);
[[nodiscard]] Matrix jacobian_direct(const Network& net, const VoltageState& state);

/// Jacobian entries as constant combinations of |V_i|^2, Re(V_i conj V_j), Im(V_i conj V_j).
enum class QuadKind { squared_magnitude, real_product, imag_product };

struct QuadTerm {
  int row = 0;
  int col = 0;
  QuadKind kind = QuadKind::squared_magnitude;
  int i = 0;  // bus indices; j unused for squared_magnitude
  int j = 0;
  double coefficient = 0.0;
};

/// J(V) = sum_i Delta_i |V_i|^2 + sum_(i,j) Gamma_ij Re(V_i conj V_j) + Psi_ij Im(V_i conj V_j),
/// flattened into (row, col, monomial, coefficient) terms and restricted to nsb u pqq.
struct JacobianStencil {
  int dim = 0;
  std::vector<QuadTerm> terms;
};

[[nodiscard]] JacobianStencil jacobian_stencil(const Network& net);
[[nodiscard]] Matrix evaluate_stencil(const JacobianStencil& stencil, const std::vector<std::complex<double>>& V);

/// Jacobian assembled from the quadratic stencil representation.
[[nodiscard]] Matrix jacobian_quadratic(const Network& net, const Vector& x);
[[nodiscard]] Matrix jacobian_quadratic(const Network& net, const VoltageState& state);

}  // namespace monopf
