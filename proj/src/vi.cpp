#include "monopf/vi.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "monopf/errors.hpp"
#include "monopf/pf.hpp"

namespace monopf {

ScaledOperator::ScaledOperator(const Network& net, InjectionVector s, Matrix W)
    : net_(&net), s_(std::move(s)), W_(std::move(W)) {
  if (W_.rows() != net.dim() || W_.cols() != net.dim()) throw ContractViolation("scaling matrix must be k x k");
  if (!W_.allFinite()) throw ContractViolation("scaling matrix has non-finite entries");
  const Eigen::JacobiSVD<Matrix> svd(W_);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-14 * sv[0]) throw ContractViolation("scaling matrix is singular");
  cond_ = sv[0] / sv[sv.size() - 1];
}

Vector ScaledOperator::residual(const Vector& x) const { return eval_F(*net_, x, s_); }

Vector ScaledOperator::operator()(const Vector& x) const { return W_ * residual(x); }

double check_monotone_pair(const ScaledOperator& op, const Vector& x, const Vector& y) {
  return (op(x) - op(y)).dot(x - y);
}

double jacobian_sym_mineig(const Network& net, const Vector& x, const Matrix& W) {
  const Matrix WJ = W * jacobian_direct(net, x);
  const Matrix S = 0.5 * (WJ + WJ.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

const char* to_string(VIStatus status) noexcept {
  switch (status) {
    case VIStatus::interior_solution: return "interior_solution";
    case VIStatus::boundary_certificate: return "boundary_certificate";
    case VIStatus::not_converged: return "not_converged";
  }
  return "unknown";
}

int newton_polish(const Network& net, const InjectionVector& s, Vector& x, double tol, int max_steps) {
  Vector F = eval_F(net, x, s);
  for (int step = 0; step <= max_steps; ++step) {
    if (F.norm() <= tol) return step;
    if (step == max_steps) break;
    const Eigen::PartialPivLU<Matrix> lu(jacobian_direct(net, x));
    const Vector dx = lu.solve(F);
    if (!dx.allFinite()) return -1;
    x -= dx;
    if (!x.allFinite()) return -1;
    F = eval_F(net, x, s);
  }
  return -1;
}

namespace {

double natural_residual(const Network& net, const DomainSpec& domain, const ScaledOperator& op, const Vector& x,
                        double beta) {
  return (x - project(net, domain, x - beta * op(x))).norm();
}

}  // namespace

VIOutcome solve_vi(const Network& net, const InjectionVector& s, const DomainSpec& domain, const Matrix& W,
                   const VIOptions& opts) {
  const ScaledOperator op(net, s, W);
  VIOutcome out;
  if (op.condition_number() > ScaledOperator::kConditionWarning) {
    out.warnings.push_back("scaling matrix condition number " + std::to_string(op.condition_number()));
  }

  Vector x = opts.start ? project(net, domain, *opts.start) : project(net, domain, Vector::Zero(net.dim()));
  double tau = opts.initial_step;
  Vector Fx = op(x);
  int it = 0;
  double nat = natural_residual(net, domain, op, x, opts.probe_step);
  while (nat > opts.tol_vi && it < opts.max_iterations) {
    ++it;
    // extragradient step with backtracking on the local Lipschitz test
    Vector y, Fy;
    for (;;) {
      y = project(net, domain, x - tau * Fx);
      Fy = op(y);
      const double dxy = (x - y).norm();
      if (dxy == 0.0 || tau * (Fx - Fy).norm() <= 0.9 * dxy) break;
      tau *= 0.5;
      if (tau < 1e-14) break;
    }
    x = project(net, domain, x - tau * Fy);
    Fx = op(x);
    tau *= 1.2;
    nat = natural_residual(net, domain, op, x, opts.probe_step);
  }
  out.iterations = it;
  out.natural_residual = nat;
  out.pf_residual = op.residual(x).norm();

  if (opts.polish && out.pf_residual <= opts.tol_f) {
    Vector xp = x;
    const int steps = newton_polish(net, s, xp, 1e-12, 8);
    if (steps >= 0 && membership(net, domain, xp).min_margin() >= -1e-12) {
      x = xp;
      out.polish_steps = steps;
      out.pf_residual = op.residual(x).norm();
      out.natural_residual = natural_residual(net, domain, op, x, opts.probe_step);
    }
  }

  out.x_star = x;
  const auto mem = membership(net, domain, x);
  for (Eigen::Index e = 0; e < mem.margin.size(); ++e) {
    if (mem.margin[e] <= 1e-9 || mem.angle_gap[e] <= 1e-9) out.active_edges.push_back(static_cast<int>(e));
  }
  if (out.pf_residual <= opts.tol_f) {
    out.status = VIStatus::interior_solution;
  } else if (out.natural_residual <= opts.tol_vi) {
    out.status = VIStatus::boundary_certificate;
  } else {
    out.status = VIStatus::not_converged;
  }
  return out;
}

}  // namespace monopf
