#pragma once

// Newton baselines and the randomized comparison against the monotone VI.
//
// Instances are drawn by sampling a voltage state (PQ magnitudes uniform in
// [v_min, v_max], non-slack phases uniform in (-theta_bar, theta_bar)) and
// forming its injections, so every instance has a known solution.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "monopf/grid.hpp"
#include "monopf/relaxation.hpp"
#include "monopf/vi.hpp"

namespace monopf {

enum class StepPolicy {
  unit,    // eta = 1 throughout
  damped,  // Armijo backtracking on ||F||^2, a stand-in for MATPOWER's default solver
};

struct NewtonOptions {
  StepPolicy policy = StepPolicy::unit;
  double tol_f = 1e-6;
  int max_iterations = 50;
};

struct NewtonOutcome {
  bool success = false;
  bool singular = false;  // a Jacobian could not be factored
  int iterations = 0;
  double residual = 0.0;
  Vector x;
};

/// Newton-Raphson on F(x) = 0 in log-polar coordinates. Never throws on
/// numerical trouble; failures are reported in the outcome.
[[nodiscard]] NewtonOutcome newton_solve(const Network& net, const InjectionVector& s, const Vector& start,
                                         const NewtonOptions& opts = {});

struct Instance {
  Vector truth;
  InjectionVector s;
};

[[nodiscard]] Instance sample_instance(const Network& net, double theta_bar, double v_min, double v_max,
                                       std::mt19937_64& rng);

/// Independent stream per (grid point, sample), so adding methods or grid
/// points never changes the other instances.
[[nodiscard]] std::mt19937_64 instance_rng(std::uint64_t seed, std::size_t grid_index, std::size_t sample);

enum class Method { monotone_vi, newton_naive, newton_damped };
[[nodiscard]] const char* to_string(Method m) noexcept;
[[nodiscard]] Method method_from_string(std::string_view name);

struct ExperimentConfig {
  std::vector<double> theta_bar;  // radians, each < pi/2
  double v_min = 0.9;
  double v_max = 1.1;
  int samples = 100;
  std::uint64_t seed = 42;
  std::vector<Method> methods{Method::monotone_vi, Method::newton_naive, Method::newton_damped};
  bool report_in_domain = true;
  int threads = 0;  // 0: hardware concurrency
  VIOptions vi;
  NewtonOptions newton;
};

/// n points from theta_max / n to theta_max (radians in, radians out).
[[nodiscard]] std::vector<double> theta_grid(double theta_max, int n);

struct MethodStats {
  Method method = Method::monotone_vi;
  int successes = 0;
  double success_rate = 0.0;
  double mean_iters = 0.0;
  double mean_ms = 0.0;
  int nonexistence_certificates = 0;  // monotone VI only
  int in_domain_successes = 0;        // successes on instances whose truth lies in D
};

struct ComparisonRow {
  double theta_bar = 0.0;
  int samples = 0;
  std::vector<MethodStats> methods;
  int in_domain = 0;                 // instances whose truth lies in D
  double in_domain_fraction = -1.0;  // -1 when not requested
  [[nodiscard]] const MethodStats& stats(Method m) const;
};

/// Refuses (ContractViolation) a certificate issued for another network.
[[nodiscard]] std::vector<ComparisonRow> run_comparison(const Network& net, const ExperimentConfig& config,
                                                        const MonotonicityCertificate& cert);

/// Columns: theta_bar_deg, method, success_rate, mean_iters, mean_ms,
/// nonexistence_certificates, in_domain_fraction.
[[nodiscard]] std::string comparison_csv(const std::vector<ComparisonRow>& rows);

/// gnuplot script plotting success rate against theta_bar per method.
[[nodiscard]] std::string gnuplot_script(const std::string& csv_path, const std::string& output_png);

}  // namespace monopf
