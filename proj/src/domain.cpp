#include "monopf/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "monopf/errors.hpp"
#include "monopf/pf.hpp"

namespace monopf {
namespace {

constexpr double kPi = std::numbers::pi;

double to_rad(double deg) { return deg * kPi / 180.0; }
double to_deg(double rad) { return rad * 180.0 / kPi; }

void require_spec(const Network& net, const DomainSpec& d) {
  if (d.gamma.size() != net.lines().size()) throw ContractViolation("domain has one gamma per line");
  for (double g : d.gamma) {
    if (!(g > 0.0 && g <= 1.0)) throw ContractViolation("gamma must lie in (0, 1]");
  }
  if (!(d.theta_cap > 0.0 && d.theta_cap < kPi / 2)) throw ContractViolation("theta_cap must lie in (0, pi/2)");
}

// Minimizes (U-p)^2/na + (phi(U)-q)^2/nc over U in [0, arccos(gamma)],
// phi(U) = log(cos U / gamma): the weighted projection of (p, q) onto the
// graph of phi. Stationarity is solved by Newton steps kept inside a
// shrinking sign bracket.
double curve_foot(double p, double q, double na, double nc, double gamma, double tol) {
  const double hi0 = std::acos(gamma);
  if (hi0 <= 0.0) return 0.0;
  auto phi = [gamma](double U) { return std::log(std::cos(U) / gamma); };
  auto grad = [&](double U) { return (U - p) / na - (phi(U) - q) * std::tan(U) / nc; };
  auto curv = [&](double U) {
    const double t = std::tan(U);
    return 1.0 / na + (t * t - (phi(U) - q) * (1.0 + t * t)) / nc;
  };
  if (p <= 0.0) return 0.0;
  // The endpoint is the kink of the unfolded set; approach it from inside.
  const double hi_eval = hi0 * (1.0 - 1e-15);
  if (grad(hi_eval) <= 0.0) return hi0;
  double lo = 0.0, hi = hi_eval;
  double U = std::clamp(p, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double g = grad(U);
    if (g > 0.0) {
      hi = U;
    } else {
      lo = U;
    }
    const double c = curv(U);
    double next = c > 0.0 ? U - g / c : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - U) <= tol || hi - lo <= tol) return next;
    U = next;
  }
  return U;
}

// Weighted projection of (u, w) onto {cos U >= gamma e^|W|, |U| <= cap}.
std::pair<double, double> project_pair(double u, double w, double na, double nc, double gamma, double cap,
                                       double tol) {
  const double lim_u = std::acos(std::min(1.0, gamma));
  if (nc == 0.0) {
    const double level = gamma * std::exp(std::abs(w));
    if (level > 1.0) throw ProjectionError("line set is empty: fixed magnitudes violate gamma");
    const double bound = std::min(cap, std::acos(level));
    return {std::clamp(u, -bound, bound), w};
  }
  if (std::abs(u) <= cap && std::cos(u) >= gamma * std::exp(std::abs(w))) return {u, w};

  const double su = u < 0.0 ? -1.0 : 1.0;
  const double sw = w < 0.0 ? -1.0 : 1.0;
  const double p = std::abs(u);
  const double q = std::abs(w);
  auto phi = [gamma](double U) { return std::log(std::cos(U) / gamma); };

  double U = p;
  double W = q;
  const bool curve_ok = p <= lim_u && q <= phi(p);
  if (!curve_ok) {
    U = curve_foot(p, q, na, nc, gamma, tol);
    W = U >= lim_u ? 0.0 : std::max(0.0, phi(U));
  }
  if (U > cap) {
    if (q <= phi(cap)) {
      U = cap;
      W = q;
    } else {
      U = cap;
      W = phi(cap);
    }
  }
  return {su * U, sw * W};
}

// D written as smooth concave inequalities h(y) >= 0, four per line:
//   log cos(u) - log gamma -+ w >= 0   (the two branches of |w|)
//   cap -+ u >= 0
// with u = a'y and w = c'y + w0. Used to finish a projection by Newton's
// method on the KKT system of the currently active constraints.
class LineForms {
 public:
  LineForms(const Network& net, const DomainSpec& domain) : k_(net.dim()) {
    const auto& lines = net.lines();
    for (std::size_t e = 0; e < lines.size(); ++e) {
      const auto& l = lines[e];
      Form f;
      f.a = Vector::Zero(k_);
      f.c = Vector::Zero(k_);
      if (const int t = net.theta_index(l.from); t >= 0) f.a[t] += 1.0;
      if (const int t = net.theta_index(l.to); t >= 0) f.a[t] -= 1.0;
      const int ri = net.rho_index(l.from), rj = net.rho_index(l.to);
      if (ri >= 0) f.c[ri] += 1.0;
      if (rj >= 0) f.c[rj] -= 1.0;
      f.w0 = (ri >= 0 ? 0.0 : net.fixed_rho(l.from)) - (rj >= 0 ? 0.0 : net.fixed_rho(l.to));
      f.log_gamma = std::log(domain.gamma[e]);
      f.cap = domain.theta_cap;
      forms_.push_back(f);
    }
  }

  // Returns the projection of x when Newton on the active set guessed from
  // the Dykstra state reaches a KKT point; nullopt otherwise. Lines carrying a
  // nonzero Dykstra increment are treated as active.
  [[nodiscard]] std::optional<Vector> polish(const Vector& x, const Vector& guess,
                                             const std::vector<Vector>& incr) const {
    const int total = 4 * static_cast<int>(forms_.size());
    std::vector<int> active;
    for (int m = 0; m < total; ++m) {
      const Form& f = forms_[m / 4];
      const bool pushed = incr[m / 4].squaredNorm() > 1e-24;
      const double u = f.a.dot(guess);
      const double w = f.c.dot(guess) + f.w0;
      bool on = value(m, guess) <= 1e-9;
      if (pushed) {
        switch (m % 4) {
          case 0: on = on || (w >= -1e-9 && std::abs(u) < f.cap); break;
          case 1: on = on || (w <= 1e-9 && std::abs(u) < f.cap); break;
          case 2: on = on || u >= f.cap - 1e-9; break;
          default: on = on || u <= -f.cap + 1e-9; break;
        }
      }
      if (on) active.push_back(m);
    }
    Vector y = guess;
    for (int round = 0; round < 8 && !active.empty(); ++round) {
      Vector lam;
      if (!newton(x, active, y, lam)) return std::nullopt;
      // drop constraints with negative multipliers, add violated ones
      std::vector<int> next;
      bool changed = false;
      for (std::size_t r = 0; r < active.size(); ++r) {
        if (lam[static_cast<Eigen::Index>(r)] < -1e-12) {
          changed = true;
        } else {
          next.push_back(active[r]);
        }
      }
      for (int m = 0; m < total; ++m) {
        if (value(m, y) < -1e-12 && std::find(next.begin(), next.end(), m) == next.end()) {
          next.push_back(m);
          changed = true;
        }
      }
      if (!changed) return y;
      active = std::move(next);
    }
    return std::nullopt;
  }

 private:
  struct Form {
    Vector a, c;
    double w0 = 0.0, log_gamma = 0.0, cap = 0.0;
  };

  [[nodiscard]] double value(int m, const Vector& y) const {
    const Form& f = forms_[m / 4];
    const double u = f.a.dot(y);
    const double w = f.c.dot(y) + f.w0;
    switch (m % 4) {
      case 0: return std::abs(u) >= kPi / 2 ? -1e300 : std::log(std::cos(u)) - f.log_gamma - w;
      case 1: return std::abs(u) >= kPi / 2 ? -1e300 : std::log(std::cos(u)) - f.log_gamma + w;
      case 2: return f.cap - u;
      default: return f.cap + u;
    }
  }

  [[nodiscard]] Vector gradient(int m, const Vector& y) const {
    const Form& f = forms_[m / 4];
    const double u = f.a.dot(y);
    switch (m % 4) {
      case 0: return -std::tan(u) * f.a - f.c;
      case 1: return -std::tan(u) * f.a + f.c;
      case 2: return -f.a;
      default: return f.a;
    }
  }

  // Hessian of h_m is -sec^2(u) a a' for the log-cos rows, zero for the caps.
  [[nodiscard]] double curvature(int m, const Vector& y) const {
    if (m % 4 >= 2) return 0.0;
    const double cu = std::cos(forms_[m / 4].a.dot(y));
    return -1.0 / (cu * cu);
  }

  bool newton(const Vector& x, const std::vector<int>& active, Vector& y, Vector& lam) const {
    const auto na = static_cast<Eigen::Index>(active.size());
    Matrix Gr(k_, na);
    for (Eigen::Index r = 0; r < na; ++r) Gr.col(r) = gradient(active[r], y);
    lam = Gr.completeOrthogonalDecomposition().solve(y - x);
    for (int it = 0; it < 60; ++it) {
      Vector hval(na);
      for (Eigen::Index r = 0; r < na; ++r) {
        Gr.col(r) = gradient(active[r], y);
        hval[r] = value(active[r], y);
      }
      if (!hval.allFinite() || hval.cwiseAbs().maxCoeff() > 1e3) return false;
      const Vector stat = y - x - Gr * lam;
      if (stat.norm() < 1e-13 && hval.cwiseAbs().maxCoeff() < 1e-13) return true;
      Matrix K = Matrix::Zero(k_ + na, k_ + na);
      K.topLeftCorner(k_, k_).setIdentity();
      for (Eigen::Index r = 0; r < na; ++r) {
        const double cv = curvature(active[r], y);
        if (cv != 0.0) {
          const Vector& a = forms_[active[r] / 4].a;
          K.topLeftCorner(k_, k_) -= lam[r] * cv * a * a.transpose();
        }
      }
      K.topRightCorner(k_, na) = -Gr;
      K.bottomLeftCorner(na, k_) = Gr.transpose();
      Vector rhs(k_ + na);
      rhs << -stat, -hval;
      const Vector d = K.completeOrthogonalDecomposition().solve(rhs);
      if (!d.allFinite()) return false;
      // backtrack on the KKT residual so log cos stays defined
      const double r0 = rhs.norm();
      double step = 1.0;
      for (; step > 1e-6; step *= 0.5) {
        const Vector yt = y + step * d.head(k_);
        const Vector lt = lam + step * d.tail(na);
        double r1 = 0.0;
        Matrix Gt(k_, na);
        Vector ht(na);
        for (Eigen::Index r = 0; r < na; ++r) {
          Gt.col(r) = gradient(active[r], yt);
          ht[r] = value(active[r], yt);
        }
        if (!ht.allFinite() || ht.minCoeff() < -1e100) continue;
        r1 = std::sqrt((yt - x - Gt * lt).squaredNorm() + ht.squaredNorm());
        if (r1 <= (1.0 - 1e-4 * step) * r0) break;
      }
      if (step <= 1e-6) return false;
      y += step * d.head(k_);
      lam += step * d.tail(na);
    }
    return false;
  }

  int k_;
  std::vector<Form> forms_;
};

}  // namespace

DomainSpec DomainSpec::uniform(const Network& net, double gamma, double cap_deg) {
  return {std::vector<double>(net.lines().size(), gamma), to_rad(cap_deg)};
}

double DomainSpec::min_gamma() const { return gamma.empty() ? 1.0 : *std::min_element(gamma.begin(), gamma.end()); }

double Membership::min_margin() const { return margin.size() ? margin.minCoeff() : 0.0; }

std::vector<std::pair<double, double>> line_differences(const Network& net, const Vector& x) {
  const auto v = polar_view(net, x);
  std::vector<std::pair<double, double>> out;
  out.reserve(net.lines().size());
  for (const auto& l : net.lines()) out.emplace_back(v.theta[l.from] - v.theta[l.to], v.rho[l.from] - v.rho[l.to]);
  return out;
}

Membership membership(const Network& net, const DomainSpec& domain, const Vector& x) {
  require_spec(net, domain);
  const auto diffs = line_differences(net, x);
  const auto m = static_cast<Eigen::Index>(diffs.size());
  Membership out{true, Vector(m), Vector(m)};
  for (Eigen::Index e = 0; e < m; ++e) {
    const auto [th, rh] = diffs[e];
    out.margin[e] = std::cos(th) - domain.gamma[e] * std::exp(std::abs(rh));
    out.angle_gap[e] = domain.theta_cap - std::abs(th);
    if (out.margin[e] < 0.0 || out.angle_gap[e] < 0.0) out.inside = false;
  }
  return out;
}

Vector project_line(const Network& net, const DomainSpec& domain, int line, const Vector& x, double tol) {
  const auto& l = net.lines().at(line);
  const auto v = polar_view(net, x);
  const int ti = net.theta_index(l.from), tj = net.theta_index(l.to);
  const int ri = net.rho_index(l.from), rj = net.rho_index(l.to);
  const double na = (ti >= 0) + (tj >= 0);
  const double nc = (ri >= 0) + (rj >= 0);
  const double u = v.theta[l.from] - v.theta[l.to];
  const double w = v.rho[l.from] - v.rho[l.to];
  const auto [U, W] = project_pair(u, w, na, nc, domain.gamma[line], domain.theta_cap, tol);
  Vector y = x;
  const double du = (U - u) / na;
  if (ti >= 0) y[ti] += du;
  if (tj >= 0) y[tj] -= du;
  if (nc > 0.0) {
    const double dw = (W - w) / nc;
    if (ri >= 0) y[ri] += dw;
    if (rj >= 0) y[rj] -= dw;
  }
  return y;
}

Vector project(const Network& net, const DomainSpec& domain, const Vector& x, const ProjectionOptions& opts) {
  if (membership(net, domain, x).inside) return x;
  const auto m = net.lines().size();
  const LineForms forms(net, domain);
  std::vector<Vector> incr(m, Vector::Zero(x.size()));
  Vector cur = x;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    const Vector start = cur;
    for (std::size_t e = 0; e < m; ++e) {
      const Vector shifted = cur + incr[e];
      cur = project_line(net, domain, static_cast<int>(e), shifted, opts.edge_tol);
      incr[e] = shifted - cur;
    }
    if ((cur - start).norm() < opts.sweep_tol) {
      const auto mem = membership(net, domain, cur);
      if (mem.min_margin() >= -1e-9 && mem.angle_gap.minCoeff() >= -1e-9) return cur;
    }
    // Slow corners: the iterate already identifies the active constraints.
    if (sweep % 50 == 0) {
      if (auto polished = forms.polish(x, cur, incr)) return *polished;
    }
  }
  throw ProjectionError("projection did not converge within " + std::to_string(opts.max_sweeps) + " sweeps");
}

AngleBound angle_bound(double gamma, double v_min, double v_max) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractViolation("gamma must lie in (0, 1]");
  if (!(v_min > 0.0 && v_min <= v_max)) throw ContractViolation("need 0 < v_min <= v_max");
  const double arg = gamma * v_max / v_min;
  if (arg > 1.0) return {0.0, true};
  return {to_deg(std::acos(arg)), false};
}

std::vector<std::pair<double, double>> tradeoff_curve(double gamma, std::span<const double> ratios) {
  std::vector<std::pair<double, double>> out;
  out.reserve(ratios.size());
  for (double r : ratios) out.emplace_back(r, angle_bound(gamma, 1.0, r).degrees);
  return out;
}

DomainBox bounding_box(const Network& net, const DomainSpec& domain) {
  require_spec(net, domain);
  const double g = domain.min_gamma();
  const double th = std::min(domain.theta_cap, std::acos(g));
  const double rh = std::log(1.0 / g);
  const auto dist = net.slack_distances();
  DomainBox box{Vector(net.dim()), Vector(net.dim())};
  for (int i : net.nsb()) {
    const int t = net.theta_index(i);
    box.lower[t] = -dist[i] * th;
    box.upper[t] = dist[i] * th;
    if (const int r = net.rho_index(i); r >= 0) {
      box.lower[r] = -dist[i] * rh;
      box.upper[r] = dist[i] * rh;
    }
  }
  return box;
}

DomainSampler::DomainSampler(const Network& net, const DomainSpec& domain)
    : net_(&net), domain_(domain), box_(bounding_box(net, domain)) {
  anchor_ = project(net, domain_, Vector::Zero(net.dim()));
}

Vector DomainSampler::draw(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(net_->dim());
  for (Eigen::Index a = 0; a < x.size(); ++a) x[a] = box_.lower[a] + unit(rng) * (box_.upper[a] - box_.lower[a]);
  Vector p;
  try {
    p = project(*net_, domain_, x);
  } catch (const ProjectionError&) {
    // last point of D on the segment from the anchor, by bisection
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (membership(*net_, domain_, anchor_ + mid * (x - anchor_)).inside ? lo : hi) = mid;
    }
    p = anchor_ + lo * (x - anchor_);
  }
  if (unit(rng) < 0.5) return p;
  return anchor_ + unit(rng) * (p - anchor_);
}

}  // namespace monopf
