// monopf: convert, certify, solve, bench, export.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "monopf/bench.hpp"
#include "monopf/conic.hpp"
#include "monopf/domain.hpp"
#include "monopf/errors.hpp"
#include "monopf/pf.hpp"
#include "monopf/relaxation.hpp"
#include "monopf/vi.hpp"

using namespace monopf;
using json = nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Network load(const std::string& path) {
  std::vector<std::string> warnings;
  auto net = load_network(path, &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return net;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// {"p": [...], "q": [...]} in the order of the non-slack and PQ buses
InjectionVector load_injections(const Network& net, const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(std::string("injections: ") + e.what());
  }
  auto vec = [&](const char* key, std::size_t n) {
    if (!doc.contains(key) || !doc[key].is_array()) throw ParseError(std::string("injections: missing array '") + key + "'");
    const auto v = doc[key].get<std::vector<double>>();
    if (v.size() != n) {
      throw ParseError(std::string("injections: '") + key + "' has " + std::to_string(v.size()) + " entries, expected " +
                       std::to_string(n));
    }
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  return {vec("p", net.nsb().size()), vec("q", net.pq().size())};
}

int run_convert(const std::string& in, const std::string& out) {
  const auto net = load(in);
  write_file_atomic(out, network_to_json(net) + "\n");
  std::fprintf(stderr, "%s: %d buses, %zu lines, fingerprint %s\n", net.name().c_str(), net.num_buses(),
               net.lines().size(), network_fingerprint(net).c_str());
  return 0;
}

void print_result(const CertificationResult& r) {
  std::fprintf(stderr, "gamma %.4f  t* %+.6e  status %s  %.1fs  %s\n", r.gamma, r.optimal_value, to_string(r.status),
               r.seconds, r.message.c_str());
}

struct CertifyArgs {
  std::string net, out;
  double gamma = 0.0;
  bool search = false;
  std::string sparsity = "on";
  bool keep_slack = false;
  double tol = 0.02, lo = 0.05, hi = 0.95;
  int samples = 10000;
  bool verbose = false;
};

RelaxationOptions relaxation_options(const std::string& sparsity, bool keep_slack, bool verbose) {
  RelaxationOptions o;
  o.sparse = sparsity == "on";
  o.eliminate_slack = !keep_slack;
  o.conic.verbose = verbose;
  return o;
}

int run_certify(const CertifyArgs& a) {
  const auto net = load(a.net);
  auto opts = relaxation_options(a.sparsity, a.keep_slack, a.verbose);
  opts.verify_samples = a.samples;
  std::optional<MonotonicityCertificate> cert;
  if (a.search) {
    const auto s = min_gamma(net, a.tol, opts, a.lo, a.hi);
    for (const auto& r : s.trace) print_result(r);
    std::fprintf(stderr, "%s\n", s.message.c_str());
    if (!s.found) return 2;
    std::fprintf(stderr, "gamma* = %.4f\n", s.gamma_star);
    cert = s.certificate;
  } else {
    const auto r = certify_gamma(net, a.gamma, opts);
    print_result(r);
    if (r.counterexample) {
      std::fprintf(stderr, "counterexample state:");
      for (double v : to_std(*r.counterexample)) std::fprintf(stderr, " %.6g", v);
      std::fprintf(stderr, "\n");
    }
    if (!r.certified) return 2;
    cert = r.certificate;
  }
  save_certificate(a.out, *cert);
  return 0;
}

struct SolveArgs {
  std::string net, injections, certificate;
  double tol = 1e-8, tol_f = 1e-6;
  int max_iterations = 50000;
  bool no_polish = false;
};

int run_solve(const SolveArgs& a) {
  const auto net = load(a.net);
  const auto cert = load_certificate(a.certificate);
  if (cert.fingerprint != network_fingerprint(net)) {
    throw ContractViolation("certificate was issued for a different network");
  }
  const auto s = load_injections(net, a.injections);
  VIOptions o;
  o.tol_vi = a.tol;
  o.tol_f = a.tol_f;
  o.max_iterations = a.max_iterations;
  o.polish = !a.no_polish;
  const auto out = solve_vi(net, s, DomainSpec::uniform(net, cert.gamma), cert.W, o);
  const auto V = polar_view(net, out.x_star);
  json j = {{"status", to_string(out.status)},
            {"gamma", cert.gamma},
            {"x", to_std(out.x_star)},
            {"theta", to_std(V.theta)},
            {"vm", to_std(V.rho.array().exp().matrix())},
            {"pf_residual", out.pf_residual},
            {"natural_residual", out.natural_residual},
            {"iterations", out.iterations},
            {"polish_steps", out.polish_steps},
            {"active_edges", out.active_edges},
            {"warnings", out.warnings}};
  std::cout << j.dump(2) << "\n";
  return out.status == VIStatus::not_converged ? 3 : 0;
}

struct BenchArgs {
  std::string net, certificate, out, gnuplot;
  double theta_max = 60.0;
  int grid = 6, samples = 100, threads = 0;
  std::uint64_t seed = 42;
  std::vector<std::string> methods;
};

int run_bench(const BenchArgs& a) {
  const auto net = load(a.net);
  const auto cert = load_certificate(a.certificate);
  ExperimentConfig cfg;
  cfg.theta_bar = theta_grid(a.theta_max * kDeg, a.grid);
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  if (!a.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : a.methods) cfg.methods.push_back(method_from_string(m));
  }
  const auto rows = run_comparison(net, cfg, cert);
  const auto csv = comparison_csv(rows);
  write_file_atomic(a.out, csv);
  if (!a.gnuplot.empty()) {
    write_file_atomic(a.gnuplot, gnuplot_script(a.out, a.out + ".png"));
  }
  std::fputs(csv.c_str(), stderr);
  return 0;
}

struct ExportArgs {
  std::string net, out;
  double gamma = 0.5;
  std::string sparsity = "on";
  bool keep_slack = false, solve = false, verbose = false;
};

int run_export(const ExportArgs& a) {
  const auto net = load(a.net);
  const auto opts = relaxation_options(a.sparsity, a.keep_slack, false);
  const auto sdp = build_moment_sdp(net, a.gamma, opts);
  {
    std::ostringstream os;
    write_problem(os, sdp.problem);
    write_file_atomic(a.out, os.str());
  }
  std::fprintf(stderr, "%d variables, %zu equalities, %zu blocks (largest %d, total %d); t is variable %d\n",
               sdp.problem.num_vars, sdp.problem.equalities.size(), sdp.problem.blocks.size(),
               sdp.problem.max_block_dim(), sdp.problem.total_psd_dim(), sdp.t_var);
  if (a.solve) {
    std::ifstream in(a.out);
    const auto p = read_problem(in);
    ConicOptions co;
    co.max_block_dim = co.max_total_dim = co.max_vars = 1 << 30;
    co.verbose = a.verbose;
    const auto sol = solve_conic(p, co);
    const auto rep = verify_solution(p, sol);
    std::fprintf(stderr, "status %s  objective %+.9e  residuals pe %.1e pc %.1e de %.1e dc %.1e gap %.1e\n",
                 to_string(sol.status), sol.primal_objective, rep.primal_equality, rep.primal_cone,
                 rep.dual_equality, rep.dual_cone, rep.gap);
    if (!sol.message.empty()) std::fprintf(stderr, "%s\n", sol.message.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone power flow: certify a monotonicity domain and solve within it"};
  app.require_subcommand(1);

  std::string conv_in, conv_out;
  auto* conv = app.add_subcommand("convert", "MATPOWER case to canonical network JSON");
  conv->add_option("case", conv_in, "MATPOWER .m file (or network JSON)")->required()->check(CLI::ExistingFile);
  conv->add_option("-o,--output", conv_out, "network JSON")->required();

  CertifyArgs ca;
  auto* cert = app.add_subcommand("certify", "certify D(gamma) and write a certificate");
  cert->add_option("network", ca.net)->required()->check(CLI::ExistingFile);
  auto* g_opt = cert->add_option("--gamma", ca.gamma, "certify this gamma")->check(CLI::Range(1e-6, 1.0));
  auto* m_opt = cert->add_flag("--min-gamma", ca.search, "bisect for the smallest certifiable gamma");
  g_opt->excludes(m_opt);
  cert->add_option("--sparsity", ca.sparsity, "correlative sparsity")->check(CLI::IsMember({"on", "off"}));
  cert->add_flag("--keep-slack", ca.keep_slack, "constrain the slack phasor instead of substituting it");
  cert->add_option("--tol", ca.tol, "bisection tolerance");
  cert->add_option("--lo", ca.lo, "bracket lower end");
  cert->add_option("--hi", ca.hi, "bracket upper end");
  cert->add_option("--samples", ca.samples, "sampling verification size");
  cert->add_flag("-v,--verbose", ca.verbose, "solver progress on stderr");
  cert->add_option("-o,--output", ca.out, "certificate JSON")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve power flow inside a certified domain");
  solve->add_option("network", sa.net)->required()->check(CLI::ExistingFile);
  solve->add_option("--injections", sa.injections, "JSON with arrays p (non-slack) and q (PQ)")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--certificate", sa.certificate)->required()->check(CLI::ExistingFile);
  solve->add_option("--tol", sa.tol, "natural residual tolerance");
  solve->add_option("--tol-f", sa.tol_f, "power flow residual tolerance");
  solve->add_option("--max-iterations", sa.max_iterations);
  solve->add_flag("--no-polish", sa.no_polish, "skip the final Newton polish");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "randomized comparison against Newton baselines");
  bench->add_option("network", ba.net)->required()->check(CLI::ExistingFile);
  bench->add_option("--certificate", ba.certificate)->required()->check(CLI::ExistingFile);
  bench->add_option("--theta-max", ba.theta_max, "largest theta_bar, degrees")->check(CLI::Range(0.0, 89.9));
  bench->add_option("--grid", ba.grid, "number of theta_bar points")->check(CLI::PositiveNumber);
  bench->add_option("--samples", ba.samples, "instances per point")->check(CLI::PositiveNumber);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--threads", ba.threads, "0 uses every core");
  bench->add_option("--methods", ba.methods, "monotone_vi newton_naive newton_damped");
  bench->add_option("--gnuplot", ba.gnuplot, "also write a gnuplot script");
  bench->add_option("-o,--output", ba.out, "CSV")->required();

  ExportArgs ea;
  auto* exp = app.add_subcommand("export", "write the relaxation in the sparse conic text format");
  exp->add_option("network", ea.net)->required()->check(CLI::ExistingFile);
  exp->add_option("--gamma", ea.gamma)->required()->check(CLI::Range(1e-6, 1.0));
  exp->add_option("--sparsity", ea.sparsity)->check(CLI::IsMember({"on", "off"}));
  exp->add_flag("--keep-slack", ea.keep_slack);
  exp->add_flag("--solve", ea.solve, "read the file back, solve it without size limits and report residuals");
  exp->add_flag("-v,--verbose", ea.verbose, "solver progress on stderr");
  exp->add_option("-o,--output", ea.out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*conv) return run_convert(conv_in, conv_out);
    if (*cert) {
      if (!ca.search && g_opt->count() == 0) throw CLI::RequiredError("--gamma or --min-gamma");
      return run_certify(ca);
    }
    if (*solve) return run_solve(sa);
    if (*bench) return run_bench(ba);
    if (*exp) return run_export(ea);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
