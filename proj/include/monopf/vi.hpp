#pragma once

// Constrained power flow as a monotone variational inequality over D(gamma):
// find x in D with <W F(x), y - x> >= 0 for all y in D. When Sym(W J_F) is
// positive definite on D the solution is unique; it is a power flow solution
// if F(x) = 0, otherwise no solution exists inside D.

#include <optional>
#include <string>
#include <vector>

#include "monopf/domain.hpp"
#include "monopf/grid.hpp"

namespace monopf {

/// F_W(x) = W F(x). Throws ContractViolation when W is singular.
class ScaledOperator {
 public:
  ScaledOperator(const Network& net, InjectionVector s, Matrix W);

  [[nodiscard]] Vector operator()(const Vector& x) const;
  [[nodiscard]] Vector residual(const Vector& x) const;  // unscaled F(x)
  [[nodiscard]] const Network& network() const noexcept { return *net_; }
  [[nodiscard]] const Matrix& scaling() const noexcept { return W_; }
  [[nodiscard]] const InjectionVector& injections() const noexcept { return s_; }
  [[nodiscard]] double condition_number() const noexcept { return cond_; }

  static constexpr double kConditionWarning = 1e8;

 private:
  const Network* net_;
  InjectionVector s_;
  Matrix W_;
  double cond_ = 1.0;
};

/// <F_W(x) - F_W(y), x - y>.
[[nodiscard]] double check_monotone_pair(const ScaledOperator& op, const Vector& x, const Vector& y);

/// lambda_min of (W J + J' W') / 2 at x.
[[nodiscard]] double jacobian_sym_mineig(const Network& net, const Vector& x, const Matrix& W);

enum class VIStatus { interior_solution, boundary_certificate, not_converged };
[[nodiscard]] const char* to_string(VIStatus status) noexcept;

struct VIOptions {
  double tol_vi = 1e-8;     // natural residual
  double tol_f = 1e-6;      // power flow residual
  int max_iterations = 50000;
  double probe_step = 1.0;  // beta in ||x - P(x - beta F_W(x))||
  double initial_step = 1.0;
  bool polish = true;
  std::optional<Vector> start;  // default: flat state projected into D
};

struct VIOutcome {
  VIStatus status = VIStatus::not_converged;
  Vector x_star;
  double pf_residual = 0.0;
  double natural_residual = 0.0;
  int iterations = 0;
  int polish_steps = 0;
  std::vector<int> active_edges;  // lines with zero domain margin at x_star
  std::vector<std::string> warnings;
};

[[nodiscard]] VIOutcome solve_vi(const Network& net, const InjectionVector& s, const DomainSpec& domain,
                                 const Matrix& W, const VIOptions& opts = {});

/// Newton iterations on F from x (unit steps). Returns the number of steps
/// taken to reach ||F|| <= tol, or -1 if it did not get there within max_steps.
int newton_polish(const Network& net, const InjectionVector& s, Vector& x, double tol, int max_steps);

}  // namespace monopf
