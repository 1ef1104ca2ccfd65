#pragma once

// Moment relaxation certifying that Sym(W J_F) is positive definite over D(gamma).
//
// Scalar variables of the polynomial problem, in this order:
//   z_0 .. z_{k-1}            direction (unit norm)
//   Re V_0 .. Re V_{n-1}      at k + i
//   Im V_0 .. Im V_{n-1}      at k + n + i
//
// The SDP minimizes t subject to t I - Sym(L_y(J(V) z z')) >= 0 together with
// moment, localizing and equality constraints. A positive optimum certifies
// monotonicity; the dual matrix of the t-constraint is the scaling W.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "monopf/conic.hpp"
#include "monopf/grid.hpp"
#include "monopf/poly.hpp"

namespace monopf {

struct RelaxationOptions {
  bool sparse = true;
  /// Substitute Re V_0 = 1, Im V_0 = 0 instead of constraining them.
  bool eliminate_slack = true;
  double eps_cert = 1e-6;
  int verify_samples = 10000;  // states and pairs
  std::uint64_t verify_seed = 20240611;
  ConicOptions conic;
};

struct VariableLayout {
  int k = 0;
  int n = 0;
  [[nodiscard]] int z(int a) const { return a; }
  [[nodiscard]] int re(int bus) const { return k + bus; }
  [[nodiscard]] int im(int bus) const { return k + n + bus; }
  [[nodiscard]] int count() const { return k + 2 * n; }
  [[nodiscard]] int bus_of(const Network& net, int var) const;
  [[nodiscard]] std::string name(int var) const;
};

struct CliqueDecomposition {
  VariableLayout layout;
  std::vector<int> variables;                 // all variables taking part
  std::vector<std::vector<int>> cliques;      // sorted variable ids, elimination order
  std::vector<std::vector<int>> bus_cliques;  // sorted bus ids, same order

  [[nodiscard]] std::size_t largest_moment_block() const;
  /// First clique containing every variable of `vars`, or -1.
  [[nodiscard]] int clique_containing(const std::vector<int>& vars) const;
};

/// Correlative-sparsity cliques: chordal extension by minimum degree on the bus
/// interaction graph, lifted to scalar variables. With sparse = false a single
/// clique holds every variable.
[[nodiscard]] CliqueDecomposition clique_decomposition(const Network& net, bool sparse = true,
                                                      bool eliminate_slack = true);

/// Jacobian entries as polynomials in the phasor variables (no z), k x k row-major.
[[nodiscard]] std::vector<Polynomial> jacobian_polynomials(const Network& net, bool eliminate_slack);

struct MomentSdp {
  ConicProblem problem;
  CliqueDecomposition cliques;
  int t_var = 0;
  int one_var = 0;  // moment of the constant monomial
  int lmi_block = 0;
  std::vector<Monomial> moments;  // conic variable -> monomial, for moment variables
  std::vector<int> moment_var;    // index into the conic variables, parallel to moments
  int free_span_vars = 0;         // variables replacing moments that appear only in the LMI
  int free_moments = 0;
  std::vector<int> moment_block_dims;
  std::vector<int> localizing_block_dims;
  int max_monomial_degree = 0;
  double jacobian_scale = 1.0;  // 1 / max |coefficient|
};

[[nodiscard]] MomentSdp build_moment_sdp(const Network& net, double gamma, const RelaxationOptions& opts = {});
/// gamma per network line.
[[nodiscard]] MomentSdp build_moment_sdp(const Network& net, const std::vector<double>& gamma,
                                         const RelaxationOptions& opts = {});

struct MonotonicityCertificate {
  static constexpr int kVersion = 1;
  double gamma = 0.0;
  Matrix W;
  double optimal_value = 0.0;
  double threshold = 0.0;
  std::string network_name;
  std::string fingerprint;
  // relaxation metadata
  bool sparse = true;
  bool eliminate_slack = true;
  std::vector<int> clique_sizes;
  std::vector<int> moment_block_dims;
  std::vector<int> localizing_block_dims;
  int num_conic_vars = 0;
  int num_equalities = 0;
  double solver_tol = 0.0;
  int solver_iterations = 0;
  ResidualReport residuals;
  int verified_states = 0;
  int verified_pairs = 0;
  double verified_min_eig = 0.0;
};

struct CertificationResult {
  bool certified = false;
  double gamma = 0.0;
  double optimal_value = 0.0;
  ConicStatus status = ConicStatus::numerical_failure;
  ResidualReport residuals;
  std::optional<MonotonicityCertificate> certificate;
  /// Set when the SDP value exceeds the threshold but sampling finds a violation.
  std::optional<Vector> counterexample;
  double counterexample_value = 0.0;
  double seconds = 0.0;
  std::string message;
};

[[nodiscard]] CertificationResult certify_gamma(const Network& net, double gamma, const RelaxationOptions& opts = {});
/// The part of certify_gamma after the solve, for solutions obtained elsewhere
/// (for instance from an exported and re-read problem). `seconds` covers only
/// the verification.
[[nodiscard]] CertificationResult certify_solution(const Network& net, double gamma, const MomentSdp& sdp,
                                                   const ConicSolution& sol, const RelaxationOptions& opts = {});

/// Samples D(gamma): min eigenvalue of Sym(W J) over states and monotone pairs.
struct SamplingReport {
  int states = 0;
  int pairs = 0;
  int violations = 0;
  double min_eig = 0.0;
  double min_pair = 0.0;
  std::optional<Vector> counterexample;
};
[[nodiscard]] SamplingReport verify_by_sampling(const Network& net, double gamma, const Matrix& W, int samples,
                                                std::uint64_t seed);

struct GammaSearch {
  bool found = false;
  double gamma_star = 0.0;
  std::optional<MonotonicityCertificate> certificate;
  std::vector<CertificationResult> trace;  // every evaluation, in order
  std::string message;
};

/// Bisection on [lo, hi] keeping a certified upper and an uncertified lower point.
[[nodiscard]] GammaSearch min_gamma(const Network& net, double tol = 0.02, const RelaxationOptions& opts = {},
                                    double lo = 0.05, double hi = 0.95);

[[nodiscard]] std::string certificate_to_json(const MonotonicityCertificate& cert, int indent = 2);
/// Throws ParseError on malformed or unsupported-version input.
[[nodiscard]] MonotonicityCertificate certificate_from_json(std::string_view text);
void save_certificate(const std::string& path, const MonotonicityCertificate& cert);
[[nodiscard]] MonotonicityCertificate load_certificate(const std::string& path);

}  // namespace monopf
