#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

#include "monopf/errors.hpp"
#include "monopf/poly.hpp"

using namespace monopf;

TEST_CASE("basis sizes follow the binomial count") {
  CHECK(monomial_basis(2, 1).size() == 3);
  CHECK(monomial_basis(2, 2).size() == 6);
  CHECK(monomial_basis(6, 2).size() == 28);
  CHECK(basis_size(6, 4) == 210);
  CHECK(basis_size(10, 2) == 66);
}

TEST_CASE("basis is graded and indexable") {
  const auto B = monomial_basis(3, 2);
  REQUIRE(B.size() == 10);
  CHECK(B[0].degree() == 0);
  for (std::size_t i = 1; i < B.size(); ++i) CHECK(Monomial::graded_less(B[i - 1], B[i]));
  for (std::size_t i = 0; i < B.size(); ++i) CHECK(B.index_of(B[i]) == static_cast<int>(i));
  const int xy[2] = {2, 0};
  CHECK(B.index_of(Monomial::from_vars(xy)) > 3);
  const int cube[3] = {0, 0, 1};
  CHECK(B.index_of(Monomial::from_vars(cube)) == -1);
}

TEST_CASE("basis on a variable subset ignores duplicates") {
  const MonomialBasis B({7, 3, 7}, 1);
  CHECK(B.size() == 3);
  CHECK(B.vars() == std::vector<int>{3, 7});
}

TEST_CASE("oversized basis is refused") {
  // C(101, 2) = 5151 > 5000
  CHECK_THROWS_AS((void)monomial_basis(99, 2), CapacityError);
  CHECK_NOTHROW((void)monomial_basis(98, 2));
  CHECK_THROWS_AS((void)monomial_basis(3, 3), ContractViolation);
}

TEST_CASE("monomial products commute and cap at degree four") {
  const auto x = Monomial::variable(0), y = Monomial::variable(5);
  CHECK(x * y == y * x);
  CHECK((x * y * x).degree() == 3);
  CHECK((x * y * x).vars() == std::vector<int>{0, 0, 5});
  CHECK_THROWS_AS((void)(x * x * x * x * y), std::overflow_error);
  CHECK((x * Monomial()).key() == x.key());
  CHECK(Monomial().to_string() == "1");
}

TEST_CASE("polynomial arithmetic matches pointwise evaluation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_poly = [&](int deg) {
    Polynomial p(u(rng));
    for (int t = 0; t < 6; ++t) {
      std::vector<int> v;
      const int d = 1 + static_cast<int>(rng() % static_cast<unsigned>(deg));
      for (int s = 0; s < d; ++s) v.push_back(static_cast<int>(rng() % 4));
      p.add_term(Monomial::from_vars(v), u(rng));
    }
    return p;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_poly(2), q = random_poly(2);
    std::vector<double> pt(4);
    for (auto& v : pt) v = u(rng);
    const double a = p.evaluate(pt), b = q.evaluate(pt);
    CHECK((p + q).evaluate(pt) == doctest::Approx(a + b).epsilon(1e-12));
    CHECK((p - q).evaluate(pt) == doctest::Approx(a - b).epsilon(1e-12));
    CHECK((p * q).evaluate(pt) == doctest::Approx(a * b).epsilon(1e-12));
    CHECK((p * 2.5).evaluate(pt) == doctest::Approx(2.5 * a).epsilon(1e-12));
    CHECK((p * q).degree() <= 4);
  }
}

TEST_CASE("cancellation removes terms") {
  auto p = Polynomial::variable(1) * Polynomial::variable(2);
  p -= Polynomial::variable(2) * Polynomial::variable(1);
  CHECK(p.empty());
  Polynomial q;
  q.add_term(Monomial::variable(0), 1e-15);
  q.add_term(Monomial::variable(3), 1.0);
  q.prune(1e-12);
  CHECK(q.support() == std::vector<int>{3});
}
