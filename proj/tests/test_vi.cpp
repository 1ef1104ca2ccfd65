#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "monopf/domain.hpp"
#include "monopf/errors.hpp"
#include "monopf/pf.hpp"
#include "monopf/vi.hpp"

using namespace monopf;
using testutil::deg;
using testutil::two_bus;

namespace {

Matrix analytic_W(double g, double b) {
  Matrix W(2, 2);
  W << b, -g, g, b;
  return W / (b * b + g * g);
}

Vector vec2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

InjectionVector inj2(double p, double q) { return {Vector::Constant(1, p), Vector::Constant(1, q)}; }

}  // namespace

TEST_CASE("two-bus solve recovers the known state") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  const auto out = solve_vi(net, inj2(0.5, 1.0 - std::cos(std::numbers::pi / 6)), dom, analytic_W(0, 1));
  CHECK(out.status == VIStatus::interior_solution);
  CHECK(out.pf_residual <= 1e-8);
  CHECK(out.x_star[0] == doctest::Approx(std::numbers::pi / 6).epsilon(1e-9));
  CHECK(std::abs(out.x_star[1]) < 1e-9);
  CHECK(out.active_edges.empty());
}

TEST_CASE("zero injections give the flat state") {
  const auto net = two_bus();
  const auto out = solve_vi(net, inj2(0, 0), DomainSpec::uniform(net, 0.5), analytic_W(0, 1));
  CHECK(out.status == VIStatus::interior_solution);
  CHECK(out.x_star.norm() < 1e-12);
}

TEST_CASE("beyond the loadability limit the solver certifies non-existence") {
  const auto net = two_bus();
  const auto out = solve_vi(net, inj2(0, -0.3), DomainSpec::uniform(net, 0.5), analytic_W(0, 1));
  CHECK(out.status == VIStatus::boundary_certificate);
  CHECK(out.natural_residual <= 1e-8);
  CHECK(out.pf_residual > 1e-6);
}

TEST_CASE("infeasible two-bus family is never classified interior") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> up(-0.3, 0.3), uq(-1.0, -0.26);
  for (int rep = 0; rep < 50; ++rep) {
    const auto out = solve_vi(net, inj2(up(rng), uq(rng)), dom, analytic_W(0, 1));
    CHECK(out.status == VIStatus::boundary_certificate);
  }
}

TEST_CASE("monotone pair values") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  const ScaledOperator op(net, inj2(0.2, 0.1), analytic_W(0, 1));
  const Vector x = vec2(0.3, -0.1);
  CHECK(check_monotone_pair(op, x, x) == 0.0);

  const DomainSampler sampler(net, dom);
  std::mt19937_64 rng(8);
  int nonpositive = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const Vector a = sampler.draw(rng);
    const Vector b = sampler.draw(rng);
    if ((a - b).norm() == 0.0) continue;
    if (check_monotone_pair(op, a, b) <= 0.0) ++nonpositive;
  }
  CHECK(nonpositive == 0);

  // beyond the singular curve cos(theta) = e^{-rho}/2 monotonicity fails
  std::uniform_real_distribution<double> ut(deg(65), deg(89)), ur(-0.3, 0.6);
  double worst = 1.0;
  for (int rep = 0; rep < 20000; ++rep) {
    worst = std::min(worst, check_monotone_pair(op, vec2(ut(rng), ur(rng)), vec2(ut(rng), ur(rng))));
  }
  CHECK(worst < 0.0);
}

TEST_CASE("symmetrized scaled Jacobian eigenvalue") {
  const auto net = two_bus();
  const Matrix W = analytic_W(0, 1);
  CHECK(jacobian_sym_mineig(net, vec2(0, 0), W) == doctest::Approx(1.0));
  for (double rho : {-0.4, 0.0, 0.3}) {
    const double th = std::acos(0.5 * std::exp(-rho));
    CHECK(std::abs(jacobian_sym_mineig(net, vec2(th, rho), W)) < 1e-12);
    CHECK(jacobian_sym_mineig(net, vec2(0.9 * th, rho), W) > 0.0);
  }
}

TEST_CASE("unique solution from random starts") {
  const auto net = two_bus(0.2, 1.0);
  const auto dom = DomainSpec::uniform(net, 0.5);
  const Vector truth = vec2(0.4, -0.05);
  const auto s = injections_from_state(net, truth);
  const DomainSampler sampler(net, dom);
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    VIOptions opts;
    opts.start = sampler.draw(rng);
    const auto out = solve_vi(net, s, dom, analytic_W(0.2, 1.0), opts);
    CHECK(out.status == VIStatus::interior_solution);
    CHECK((out.x_star - truth).norm() <= 1e-6);
  }
}

TEST_CASE("interior solutions polish quickly") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  std::mt19937_64 rng(10);
  const DomainSampler sampler(net, dom);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector truth = 0.8 * sampler.draw(rng);
    const auto s = injections_from_state(net, truth);
    VIOptions opts;
    opts.polish = false;
    const auto out = solve_vi(net, s, dom, analytic_W(0, 1), opts);
    REQUIRE(out.status == VIStatus::interior_solution);
    Vector x = out.x_star;
    const int steps = newton_polish(net, s, x, 1e-12, 3);
    CHECK(steps >= 0);
    CHECK(steps <= 3);
  }
}

TEST_CASE("iteration count grows at most linearly in log(1/tol)") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  const auto s = injections_from_state(net, vec2(0.7, -0.1));
  std::vector<int> its;
  for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
    VIOptions opts;
    opts.polish = false;
    opts.tol_vi = tol;
    its.push_back(solve_vi(net, s, dom, analytic_W(0, 1), opts).iterations);
  }
  const int d1 = its[1] - its[0], d2 = its[2] - its[1], d3 = its[3] - its[2];
  CAPTURE(its[0]);
  CAPTURE(its[3]);
  CHECK(d2 <= 2 * d1 + 5);
  CHECK(d3 <= 2 * d1 + 5);
}

TEST_CASE("singular scaling is rejected") {
  const auto net = two_bus();
  CHECK_THROWS_AS(ScaledOperator(net, inj2(0, 0), Matrix::Zero(2, 2)), ContractViolation);
  Matrix W(2, 2);
  W << 1, 2, 2, 4;
  CHECK_THROWS_AS((void)solve_vi(net, inj2(0, 0), DomainSpec::uniform(net, 0.5), W), ContractViolation);
}
