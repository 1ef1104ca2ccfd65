#pragma once

// Semidefinite programs in linear-matrix-inequality form
//
//   minimize    c'y
//   subject to  A y = b
//               F_k(y) = C_k + sum_i y_i A_{k,i}  >= 0   (PSD, one per block)
//
// with dual
//
//   maximize    b'lambda - sum_k <C_k, X_k>
//   subject to  A'lambda + sum_k A_k^*(X_k) = c,   X_k >= 0.
//
// The embedded solver is a primal-dual path-following method with
// Nesterov-Todd scaling and Mehrotra correction on dense blocks.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "monopf/grid.hpp"

namespace monopf {

/// Coefficient of variable `var` (or the constant term when var < 0) at the
/// symmetric position (row, col) and (col, row). Requires row <= col.
struct BlockEntry {
  int var = -1;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// With a non-empty basis B (raw_dim x dim) the cone constraint is B' F(y) B >= 0,
/// where the entries describe F(y) in raw coordinates. Used to drop directions
/// that the equalities force into the kernel.
struct PsdBlock {
  int dim = 0;
  std::string label;
  std::vector<BlockEntry> entries;
  Matrix basis;

  [[nodiscard]] int raw_dim() const { return basis.size() == 0 ? dim : static_cast<int>(basis.rows()); }
};

struct LinearEquality {
  std::vector<std::pair<int, double>> terms;  // (var, coefficient)
  double rhs = 0.0;
};

struct ConicProblem {
  int num_vars = 0;
  Vector objective;  // length num_vars
  std::vector<LinearEquality> equalities;
  std::vector<PsdBlock> blocks;

  /// Throws ContractViolation on out-of-range indices or row > col entries.
  void validate() const;
  [[nodiscard]] int total_psd_dim() const;
  [[nodiscard]] int max_block_dim() const;
  /// Dense F_k(y), reduced by the block basis when present.
  [[nodiscard]] Matrix block_value(std::size_t k, const Vector& y) const;
};

/// near_optimal: the iteration stalled short of tol with every residual and the
/// gap below near_tol.
enum class ConicStatus { optimal, near_optimal, infeasible, numerical_failure };
[[nodiscard]] const char* to_string(ConicStatus status) noexcept;

struct ResidualReport {
  double primal_equality = 0.0;  // ||A y - b||_inf
  double primal_cone = 0.0;      // max(0, -lambda_min(F_k(y)))
  double dual_equality = 0.0;    // ||c - A'lambda - sum A_k^*(X_k)||_inf
  double dual_cone = 0.0;        // max(0, -lambda_min(X_k))
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;              // |primal - dual| / (1 + |primal| + |dual|)

  /// All residuals and the relative gap within tol.
  [[nodiscard]] bool within(double tol) const;
};

struct ConicSolution {
  ConicStatus status = ConicStatus::numerical_failure;
  Vector y;
  Vector lambda;               // equality multipliers
  std::vector<Matrix> X;       // dual matrix per block
  std::vector<Matrix> S;       // slack F_k(y) per block as tracked by the solver
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  ResidualReport residuals;    // relative measures at termination
  std::vector<double> mu_trace;
  std::string message;
};

struct ConicOptions {
  double tol = 1e-8;
  double near_tol = 1e-6;
  int max_iterations = 200;
  double step_fraction = 0.98;
  int max_block_dim = 150;
  int max_total_dim = 1200;
  int max_vars = 12000;
  bool verbose = false;
};

/// Throws CapacityError when the problem exceeds the embedded limits.
[[nodiscard]] ConicSolution solve_conic(const ConicProblem& problem, const ConicOptions& opts = {});

/// Recomputes every residual from the problem data and the returned y,
/// lambda and X, without using solver state.
[[nodiscard]] ResidualReport verify_solution(const ConicProblem& problem, const ConicSolution& solution);

/// Line-oriented text format; see README for the grammar.
void write_problem(std::ostream& out, const ConicProblem& problem);
[[nodiscard]] ConicProblem read_problem(std::istream& in);

}  // namespace monopf
