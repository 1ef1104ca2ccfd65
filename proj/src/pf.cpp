#include "monopf/pf.hpp"

#include <array>
#include <cmath>

#include "monopf/errors.hpp"

namespace monopf {
namespace {

void require_dim(const Network& net, const Vector& x) {
  if (x.size() != net.dim()) {
    throw ContractViolation("state has length " + std::to_string(x.size()) + ", network expects " +
                            std::to_string(net.dim()));
  }
  if (!x.allFinite()) throw ContractViolation("state has non-finite entries");
}

void require_injection(const Network& net, const InjectionVector& s) {
  if (s.p.size() != static_cast<Eigen::Index>(net.nsb().size()) ||
      s.q.size() != static_cast<Eigen::Index>(net.pq().size())) {
    throw ContractViolation("injection vector does not match the network typing");
  }
}

}  // namespace

VoltageState VoltageState::flat(const Network& net) {
  return {Vector::Zero(static_cast<Eigen::Index>(net.nsb().size())),
          Vector::Zero(static_cast<Eigen::Index>(net.pq().size()))};
}

VoltageState VoltageState::from_vector(const Network& net, const Vector& x) {
  require_dim(net, x);
  const auto nt = static_cast<Eigen::Index>(net.nsb().size());
  VoltageState s{x.head(nt), x.tail(x.size() - nt)};
  if (s.rho.size() > 0 && s.rho.cwiseAbs().maxCoeff() > 2.0) {
    throw ContractViolation("log-magnitude outside the sanity bound |rho| <= 2");
  }
  return s;
}

Vector VoltageState::to_vector() const {
  Vector x(theta.size() + rho.size());
  x << theta, rho;
  return x;
}

PolarView polar_view(const Network& net, const Vector& x) {
  require_dim(net, x);
  const int n = net.num_buses();
  PolarView v{Vector::Zero(n), Vector::Zero(n)};
  for (int i = 0; i < n; ++i) {
    const int t = net.theta_index(i);
    const int r = net.rho_index(i);
    if (t >= 0) v.theta[i] = x[t];
    v.rho[i] = r >= 0 ? x[r] : net.fixed_rho(i);
  }
  return v;
}

std::vector<std::complex<double>> phasors(const Network& net, const Vector& x) {
  const auto v = polar_view(net, x);
  std::vector<std::complex<double>> V(v.theta.size());
  for (Eigen::Index i = 0; i < v.theta.size(); ++i) V[i] = std::polar(std::exp(v.rho[i]), v.theta[i]);
  return V;
}

InjectionVector injections_from_state(const Network& net, const Vector& x) {
  const auto v = polar_view(net, x);
  const auto& G = net.conductance();
  const auto& B = net.susceptance();
  auto out = InjectionVector::zero(net);
  auto power_sums = [&](int i) {
    double p = G(i, i) * std::exp(2.0 * v.rho[i]);
    double q = -B(i, i) * std::exp(2.0 * v.rho[i]);
    for (int j : net.neighbours(i)) {
      const double e = std::exp(v.rho[i] + v.rho[j]);
      const double sn = std::sin(v.theta[i] - v.theta[j]);
      const double cs = std::cos(v.theta[i] - v.theta[j]);
      p += e * (B(i, j) * sn + G(i, j) * cs);
      q += e * (G(i, j) * sn - B(i, j) * cs);
    }
    return std::pair{p, q};
  };
  for (int i : net.nsb()) {
    const auto [p, q] = power_sums(i);
    out.p[net.theta_index(i)] = p;
    if (const int r = net.rho_index(i); r >= 0) out.q[r - static_cast<int>(net.nsb().size())] = q;
  }
  return out;
}

InjectionVector injections_from_state(const Network& net, const VoltageState& state) {
  return injections_from_state(net, state.to_vector());
}

Vector eval_F(const Network& net, const Vector& x, const InjectionVector& s) {
  require_injection(net, s);
  return injections_from_state(net, x).stacked() - s.stacked();
}

Vector eval_F(const Network& net, const VoltageState& state, const InjectionVector& s) {
  return eval_F(net, state.to_vector(), s);
}

Matrix jacobian_direct(const Network& net, const Vector& x) {
  const auto v = polar_view(net, x);
  const auto& G = net.conductance();
  const auto& B = net.susceptance();
  const int k = net.dim();
  Matrix J = Matrix::Zero(k, k);
  auto add = [&](int row, int col, double value) {
    if (row >= 0 && col >= 0) J(row, col) += value;
  };
  for (int i : net.nsb()) {
    const int p_row = net.theta_index(i);
    const int q_row = net.rho_index(i);  // the reactive row shares the rho index
    const int th_i = net.theta_index(i);
    const int rh_i = net.rho_index(i);
    const double self = std::exp(2.0 * v.rho[i]);
    add(p_row, rh_i, 2.0 * G(i, i) * self);
    add(q_row, rh_i, -2.0 * B(i, i) * self);
    for (int j : net.neighbours(i)) {
      const double e = std::exp(v.rho[i] + v.rho[j]);
      const double sn = std::sin(v.theta[i] - v.theta[j]);
      const double cs = std::cos(v.theta[i] - v.theta[j]);
      const double g = G(i, j);
      const double b = B(i, j);
      const int th_j = net.theta_index(j);
      const int rh_j = net.rho_index(j);
      // active row: e (b sin + g cos)
      add(p_row, th_i, e * (b * cs - g * sn));
      add(p_row, th_j, -e * (b * cs - g * sn));
      add(p_row, rh_i, e * (b * sn + g * cs));
      add(p_row, rh_j, e * (b * sn + g * cs));
      // reactive row: e (g sin - b cos)
      if (q_row >= 0) {
        add(q_row, th_i, e * (g * cs + b * sn));
        add(q_row, th_j, -e * (g * cs + b * sn));
        add(q_row, rh_i, e * (g * sn - b * cs));
        add(q_row, rh_j, e * (g * sn - b * cs));
      }
    }
  }
  return J;
}

Matrix jacobian_direct(const Network& net, const VoltageState& state) {
  return jacobian_direct(net, state.to_vector());
}

JacobianStencil jacobian_stencil(const Network& net) {
  const auto& G = net.conductance();
  const auto& B = net.susceptance();
  JacobianStencil st{net.dim(), {}};
  auto push = [&](int row, int col, QuadKind kind, int i, int j, double c) {
    if (row >= 0 && col >= 0 && c != 0.0) st.terms.push_back({row, col, kind, i, j, c});
  };

  // Delta_i: only the rho_i column of rows {i, n+i} depends on |V_i|^2.
  for (int i : net.pq()) {
    const int t = net.theta_index(i);
    const int r = net.rho_index(i);
    push(t, r, QuadKind::squared_magnitude, i, i, 2.0 * G(i, i));
    push(r, r, QuadKind::squared_magnitude, i, i, -2.0 * B(i, i));
  }

  // Gamma_ij and Psi_ij over index order {theta_i, theta_j, rho_i, rho_j}
  // (rows: P_i, P_j, Q_i, Q_j).
  for (const auto& line : net.lines()) {
    const int i = line.from;
    const int j = line.to;
    const double g = G(i, j);
    const double b = B(i, j);
    const std::array<int, 4> idx{net.theta_index(i), net.theta_index(j), net.rho_index(i), net.rho_index(j)};
    const double gamma[4][4] = {{b, -b, g, g}, {-b, b, g, g}, {g, -g, -b, -b}, {-g, g, -b, -b}};
    const double psi[4][4] = {{-g, g, b, b}, {-g, g, -b, -b}, {b, -b, g, g}, {b, -b, -g, -g}};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        push(idx[r], idx[c], QuadKind::real_product, i, j, gamma[r][c]);
        push(idx[r], idx[c], QuadKind::imag_product, i, j, psi[r][c]);
      }
    }
  }
  return st;
}

Matrix evaluate_stencil(const JacobianStencil& stencil, const std::vector<std::complex<double>>& V) {
  Matrix J = Matrix::Zero(stencil.dim, stencil.dim);
  for (const auto& t : stencil.terms) {
    double m = 0.0;
    switch (t.kind) {
      case QuadKind::squared_magnitude: m = std::norm(V[t.i]); break;
      case QuadKind::real_product: m = (V[t.i] * std::conj(V[t.j])).real(); break;
      case QuadKind::imag_product: m = (V[t.i] * std::conj(V[t.j])).imag(); break;
    }
    J(t.row, t.col) += t.coefficient * m;
  }
  return J;
}

Matrix jacobian_quadratic(const Network& net, const Vector& x) {
  return evaluate_stencil(jacobian_stencil(net), phasors(net, x));
}

Matrix jacobian_quadratic(const Network& net, const VoltageState& state) {
  return jacobian_quadratic(net, state.to_vector());
}

}  // namespace monopf
