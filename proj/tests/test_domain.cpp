#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "monopf/domain.hpp"
#include "monopf/errors.hpp"

using namespace monopf;
using testutil::deg;
using testutil::load_case;
using testutil::two_bus;

namespace {

Vector vec2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

// Nearest point of the two-bus boundary cos(theta) = gamma e^|rho| by dense
// sampling of rho followed by local refinement.
Vector two_bus_oracle(const Vector& x, double gamma) {
  const double rmax = std::log(1.0 / gamma);
  auto best_on = [&](double lo, double hi, int n, Vector& best, double& bd) {
    for (int s = 0; s <= n; ++s) {
      const double r = lo + (hi - lo) * s / n;
      const double th = std::acos(std::min(1.0, gamma * std::exp(std::abs(r))));
      for (double sgn : {-1.0, 1.0}) {
        const Vector p = vec2(sgn * th, r);
        const double d = (p - x).norm();
        if (d < bd) {
          bd = d;
          best = p;
        }
      }
    }
  };
  Vector best = x;
  double bd = 1e300;
  best_on(-rmax, rmax, 200000, best, bd);
  for (int level = 0; level < 4; ++level) {
    const double w = 2 * rmax / std::pow(1000.0, level + 1);
    best_on(std::max(-rmax, best[1] - w), std::min(rmax, best[1] + w), 2000, best, bd);
  }
  return best;
}

// Brute-force projection onto the three-bus hexagon {|t1|, |t2|, |t1 - t2| <= a}.
Vector hexagon_oracle(const Vector& x, double a) {
  auto inside = [a](double t1, double t2) { return std::abs(t1) <= a && std::abs(t2) <= a && std::abs(t1 - t2) <= a; };
  Vector best = Vector::Zero(2);
  double bd = 1e300;
  double c1 = 0.0, c2 = 0.0, half = a;
  for (int level = 0; level < 6; ++level) {
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const double t1 = c1 - half + 2 * half * i / n;
        const double t2 = c2 - half + 2 * half * j / n;
        if (!inside(t1, t2)) continue;
        const double d = std::hypot(t1 - x[0], t2 - x[1]);
        if (d < bd) {
          bd = d;
          best = vec2(t1, t2);
        }
      }
    }
    c1 = best[0];
    c2 = best[1];
    half *= 0.02;
  }
  return best;
}

}  // namespace

TEST_CASE("membership margins") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);

  auto m = membership(net, dom, vec2(0.0, 0.0));
  CHECK(m.inside);
  CHECK(m.margin[0] == doctest::Approx(0.5));

  m = membership(net, dom, vec2(deg(70), 0.0));
  CHECK_FALSE(m.inside);
  CHECK(m.margin[0] == doctest::Approx(std::cos(deg(70)) - 0.5));
  CHECK(m.margin[0] == doctest::Approx(-0.158).epsilon(1e-2));

  m = membership(net, dom, vec2(deg(30), -0.3));
  CHECK(m.inside);
  CHECK(m.margin[0] == doctest::Approx(std::cos(deg(30)) - 0.5 * std::exp(0.3)));
  CHECK(m.margin[0] == doctest::Approx(0.191).epsilon(1e-2));
}

TEST_CASE("absolute value of the log-magnitude difference") {
  // cos(theta) >= gamma e^{|rho|}: positive and negative rho are treated alike
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  const auto a = membership(net, dom, vec2(deg(40), 0.3));
  const auto b = membership(net, dom, vec2(deg(40), -0.3));
  CHECK(a.margin[0] == doctest::Approx(b.margin[0]));
}

TEST_CASE("angle cap is enforced") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.01, 60.0);
  const auto m = membership(net, dom, vec2(deg(70), 0.0));
  CHECK(m.margin[0] > 0.0);
  CHECK_FALSE(m.inside);
  const Vector p = project(net, dom, vec2(deg(70), 0.0));
  CHECK(p[0] == doctest::Approx(deg(60)));
}

TEST_CASE("projection examples on the two-bus") {
  const auto net = two_bus();
  const auto dom = DomainSpec::uniform(net, 0.5);
  const Vector in = vec2(deg(20), 0.1);
  CHECK(project(net, dom, in) == in);
  const Vector p = project(net, dom, vec2(deg(80), 0.0));
  CHECK(p[0] == doctest::Approx(std::numbers::pi / 3).epsilon(1e-10));
  CHECK(std::abs(p[1]) < 1e-9);
}

TEST_CASE("two-bus projection matches the boundary search oracle") {
  const auto net = two_bus();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ut(-1.5, 1.5), ur(-1.2, 1.2);
  for (double gamma : {0.3, 0.5, 0.8}) {
    const auto dom = DomainSpec::uniform(net, gamma);
    int checked = 0;
    while (checked < 25) {
      const Vector x = vec2(ut(rng), ur(rng));
      if (membership(net, dom, x).inside) continue;
      ++checked;
      const Vector p = project(net, dom, x);
      const Vector o = two_bus_oracle(x, gamma);
      CAPTURE(x.transpose());
      CHECK((p - o).norm() <= 1e-4);
    }
  }
}

TEST_CASE("three-bus projection matches the hexagon oracle") {
  const auto net = load_case("case3");
  REQUIRE(net.dim() == 2);
  const double gamma = 0.3;
  const auto dom = DomainSpec::uniform(net, gamma);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  int checked = 0;
  while (checked < 20) {
    const Vector x = vec2(u(rng), u(rng));
    if (membership(net, dom, x).inside) continue;
    ++checked;
    const Vector p = project(net, dom, x);
    const Vector o = hexagon_oracle(x, std::acos(gamma));
    CAPTURE(x.transpose());
    CHECK((p - o).norm() <= 1e-4);
  }
}

TEST_CASE("projection is idempotent, feasible and nearest on case9") {
  const auto net = load_case("case9");
  const auto dom = DomainSpec::uniform(net, 0.31);
  const DomainSampler sampler(net, dom);
  std::mt19937_64 rng(4);
  std::vector<Vector> feasible;
  for (int s = 0; s < 1000; ++s) feasible.push_back(sampler.draw(rng));

  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    Vector x(net.dim());
    for (auto& v : x) v = 1.5 * nd(rng);
    const Vector p = project(net, dom, x);
    const auto mem = membership(net, dom, p);
    CHECK(mem.min_margin() >= -1e-9);
    CHECK((project(net, dom, p) - p).norm() <= 1e-9);
    const double d = (p - x).norm();
    int worse = 0;
    for (const auto& y : feasible) worse += (y - x).norm() < d - 1e-9;
    CHECK(worse == 0);
  }
}

TEST_CASE("domain is convex and bounded on case9") {
  const auto net = load_case("case9");
  const double gamma = 0.31;
  const auto dom = DomainSpec::uniform(net, gamma);
  const DomainSampler sampler(net, dom);
  const auto dist = net.slack_distances();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad_convex = 0, bad_box = 0;
  Vector prev = sampler.draw(rng);
  for (int s = 0; s < 10000; ++s) {
    const Vector x = sampler.draw(rng);
    const double lam = unit(rng);
    if (membership(net, dom, lam * x + (1 - lam) * prev).min_margin() < -1e-8) ++bad_convex;
    for (int i : net.nsb()) {
      if (std::abs(x[net.theta_index(i)]) > dist[i] * std::acos(gamma) + 1e-9) ++bad_box;
      if (net.rho_index(i) >= 0 && std::abs(x[net.rho_index(i)]) > dist[i] * std::log(1 / gamma) + 1e-9) ++bad_box;
    }
    prev = x;
  }
  CHECK(bad_convex == 0);
  CHECK(bad_box == 0);
}

TEST_CASE("angle bound reference values") {
  CHECK(angle_bound(0.31, 0.9, 1.1).degrees == doctest::Approx(67.7).epsilon(0.2 / 67.7));
  CHECK(angle_bound(0.34, 0.9, 1.1).degrees == doctest::Approx(65.4).epsilon(0.2 / 65.4));
  CHECK(angle_bound(0.41, 0.9, 1.1).degrees == doctest::Approx(59.9).epsilon(0.2 / 59.9));
  CHECK(angle_bound(0.52, 0.9, 1.1).degrees == doctest::Approx(50.54).epsilon(0.2 / 50.54));
  CHECK(angle_bound(1.0, 1.0, 1.0).degrees == 0.0);
  const auto e = angle_bound(0.9, 0.9, 1.1);
  CHECK(e.empty);
  CHECK(e.degrees == 0.0);
  CHECK_THROWS_AS((void)angle_bound(0.0, 0.9, 1.1), ContractViolation);
}

TEST_CASE("tradeoff curve") {
  const std::vector<double> ratios{1.0, 1.05, 1.1, 1.2222, 1.5, 1.9, 2.5};
  const auto curve = tradeoff_curve(0.52, ratios);
  CHECK(curve[0].second == doctest::Approx(std::acos(0.52) * 180 / std::numbers::pi));
  CHECK(curve[0].second == doctest::Approx(58.7).epsilon(1e-3));
  CHECK(curve[3].second == doctest::Approx(50.5).epsilon(1e-3));
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second <= curve[i - 1].second);
}

TEST_CASE("empty line sets are reported") {
  // PV-PV line with magnitude ratio beyond 1/gamma
  const Network net("pv", {{1, BusType::slack, 1.0}, {2, BusType::pv, 1.0}, {3, BusType::pv, 2.5}},
                    {{0, 1, {0, -1}}, {1, 2, {0, -1}}});
  const auto dom = DomainSpec::uniform(net, 0.5);
  CHECK_THROWS_AS((void)project(net, dom, vec2(1.0, 0.0)), ProjectionError);
}
