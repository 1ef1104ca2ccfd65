#include "monopf/bench.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "monopf/domain.hpp"
#include "monopf/errors.hpp"
#include "monopf/pf.hpp"

namespace monopf {

NewtonOutcome newton_solve(const Network& net, const InjectionVector& s, const Vector& start,
                           const NewtonOptions& opts) {
  NewtonOutcome out;
  out.x = start;
  Vector F = eval_F(net, out.x, s);
  out.residual = F.norm();
  for (;;) {
    if (!std::isfinite(out.residual)) return out;
    if (out.residual <= opts.tol_f) {
      out.success = true;
      return out;
    }
    if (out.iterations >= opts.max_iterations) return out;
    const Matrix J = jacobian_direct(net, out.x);
    const Eigen::PartialPivLU<Matrix> lu(J);
    if (!(lu.rcond() > 1e-14)) {
      out.singular = true;
      return out;
    }
    const Vector dx = lu.solve(F);
    double eta = 1.0;
    Vector xn = out.x - dx;
    Vector Fn = eval_F(net, xn, s);
    if (opts.policy == StepPolicy::damped) {
      const double f0 = F.squaredNorm();
      // d/deta ||F(x - eta dx)||^2 = -2 ||F||^2 at eta = 0
      while (!(Fn.allFinite() && Fn.squaredNorm() <= (1.0 - 2e-4 * eta) * f0) && eta > 1e-6) {
        eta *= 0.5;
        xn = out.x - eta * dx;
        Fn = eval_F(net, xn, s);
      }
    }
    ++out.iterations;
    out.x = std::move(xn);
    F = std::move(Fn);
    out.residual = F.allFinite() ? F.norm() : std::numeric_limits<double>::infinity();
  }
}

Instance sample_instance(const Network& net, double theta_bar, double v_min, double v_max, std::mt19937_64& rng) {
  if (!(theta_bar >= 0.0 && theta_bar < std::numbers::pi / 2)) throw ContractViolation("theta_bar must lie in [0, pi/2)");
  if (!(v_min > 0.0 && v_min <= v_max)) throw ContractViolation("need 0 < v_min <= v_max");
  std::uniform_real_distribution<double> phase(-theta_bar, theta_bar);
  std::uniform_real_distribution<double> mag(v_min, v_max);
  Instance inst;
  inst.truth = Vector::Zero(net.dim());
  for (int i : net.nsb()) inst.truth[net.theta_index(i)] = theta_bar > 0.0 ? phase(rng) : 0.0;
  for (int i : net.pq()) inst.truth[net.rho_index(i)] = std::log(v_min < v_max ? mag(rng) : v_min);
  inst.s = injections_from_state(net, inst.truth);
  return inst;
}

std::mt19937_64 instance_rng(std::uint64_t seed, std::size_t grid_index, std::size_t sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(grid_index), static_cast<std::uint32_t>(sample)};
  return std::mt19937_64(seq);
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::monotone_vi: return "monotone_vi";
    case Method::newton_naive: return "newton_naive";
    case Method::newton_damped: return "newton_damped_standin";
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  for (auto m : {Method::monotone_vi, Method::newton_naive, Method::newton_damped}) {
    if (name == to_string(m)) return m;
  }
  if (name == "newton_damped") return Method::newton_damped;
  throw ContractViolation("unknown method '" + std::string(name) + "'");
}

std::vector<double> theta_grid(double theta_max, int n) {
  if (n < 1) throw ContractViolation("grid needs at least one point");
  std::vector<double> g;
  for (int i = 1; i <= n; ++i) g.push_back(theta_max * i / n);
  return g;
}

const MethodStats& ComparisonRow::stats(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw ContractViolation(std::string("method not in row: ") + to_string(m));
}

namespace {

struct RunResult {
  bool success = false;
  bool nonexistence = false;
  int iterations = 0;
  double ms = 0.0;
};

RunResult run_one(Method m, const Network& net, const Instance& inst, const DomainSpec& dom, const Matrix& W,
                  const ExperimentConfig& cfg) {
  RunResult r;
  const auto t0 = std::chrono::steady_clock::now();
  Vector x;
  try {
    if (m == Method::monotone_vi) {
      const auto out = solve_vi(net, inst.s, dom, W, cfg.vi);
      r.iterations = out.iterations;
      r.nonexistence = out.status == VIStatus::boundary_certificate;
      if (out.status == VIStatus::interior_solution) x = out.x_star;
    } else {
      NewtonOptions no = cfg.newton;
      no.policy = m == Method::newton_naive ? StepPolicy::unit : StepPolicy::damped;
      const auto out = newton_solve(net, inst.s, Vector::Zero(net.dim()), no);
      r.iterations = out.iterations;
      x = out.x;
    }
  } catch (const std::exception&) {
    x.resize(0);
  }
  r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  // judged from the returned state only
  if (x.size() == net.dim() && x.allFinite()) {
    const Vector F = eval_F(net, x, inst.s);
    r.success = F.allFinite() && F.norm() <= cfg.newton.tol_f;
  }
  return r;
}

}  // namespace

std::vector<ComparisonRow> run_comparison(const Network& net, const ExperimentConfig& cfg,
                                          const MonotonicityCertificate& cert) {
  if (cert.fingerprint != network_fingerprint(net)) {
    throw ContractViolation("certificate was issued for a different network (fingerprint " + cert.fingerprint + ")");
  }
  if (cert.W.rows() != net.dim()) throw ContractViolation("certificate W does not match the network dimension");
  if (cfg.samples < 1) throw ContractViolation("need at least one sample per grid point");
  if (cfg.methods.empty()) throw ContractViolation("no methods selected");
  const auto dom = DomainSpec::uniform(net, cert.gamma);
  const auto nm = cfg.methods.size();
  const auto ns = static_cast<std::size_t>(cfg.samples);
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, static_cast<unsigned>(ns));

  std::vector<ComparisonRow> rows;
  for (std::size_t g = 0; g < cfg.theta_bar.size(); ++g) {
    std::vector<RunResult> res(ns * nm);
    std::vector<char> inside(ns, 0);
    auto work = [&](std::size_t first) {
      for (std::size_t i = first; i < ns; i += threads) {
        auto rng = instance_rng(cfg.seed, g, i);
        const auto inst = sample_instance(net, cfg.theta_bar[g], cfg.v_min, cfg.v_max, rng);
        inside[i] = membership(net, dom, inst.truth).inside;
        for (std::size_t k = 0; k < nm; ++k) res[i * nm + k] = run_one(cfg.methods[k], net, inst, dom, cert.W, cfg);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& t : pool) t.join();
    }
    ComparisonRow row;
    row.theta_bar = cfg.theta_bar[g];
    row.samples = cfg.samples;
    for (std::size_t k = 0; k < nm; ++k) {
      MethodStats st;
      st.method = cfg.methods[k];
      double it = 0.0, ms = 0.0;
      for (std::size_t i = 0; i < ns; ++i) {
        const auto& r = res[i * nm + k];
        st.successes += r.success;
        st.in_domain_successes += r.success && inside[i];
        st.nonexistence_certificates += r.nonexistence;
        it += r.iterations;
        ms += r.ms;
      }
      st.success_rate = static_cast<double>(st.successes) / cfg.samples;
      st.mean_iters = it / cfg.samples;
      st.mean_ms = ms / cfg.samples;
      row.methods.push_back(st);
    }
    row.in_domain = static_cast<int>(std::count(inside.begin(), inside.end(), 1));
    if (cfg.report_in_domain) row.in_domain_fraction = static_cast<double>(row.in_domain) / cfg.samples;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "theta_bar_deg,method,success_rate,mean_iters,mean_ms,nonexistence_certificates,in_domain_fraction\n";
  char buf[256];
  for (const auto& r : rows) {
    for (const auto& m : r.methods) {
      const bool vi = m.method == Method::monotone_vi;
      std::snprintf(buf, sizeof buf, "%.6g,%s,%.6g,%.6g,%.6g,", r.theta_bar * 180.0 / std::numbers::pi,
                    to_string(m.method), m.success_rate, m.mean_iters, m.mean_ms);
      os << buf;
      if (vi) os << m.nonexistence_certificates;
      os << ',';
      if (r.in_domain_fraction >= 0.0) {
        std::snprintf(buf, sizeof buf, "%.6g", r.in_domain_fraction);
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string gnuplot_script(const std::string& csv_path, const std::string& output_png) {
  std::ostringstream os;
  os << "# success probability against theta_bar, one curve per method\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size 800,500\n"
     << "set output '" << output_png << "'\n"
     << "set key bottom left\n"
     << "set xlabel 'theta_bar (deg)'\n"
     << "set ylabel 'success rate'\n"
     << "set yrange [0:1.05]\n"
     << "data = '" << csv_path << "'\n"
     << "plot data using 1:(strcol(2) eq 'monotone_vi' ? $3 : 1/0) with linespoints title 'monotone VI', \\\n"
     << "     data using 1:(strcol(2) eq 'newton_naive' ? $3 : 1/0) with linespoints title 'Newton (unit step)', \\\n"
     << "     data using 1:(strcol(2) eq 'newton_damped_standin' ? $3 : 1/0) with linespoints "
        "title 'damped Newton (MATPOWER stand-in)'\n";
  return os.str();
}

}  // namespace monopf
