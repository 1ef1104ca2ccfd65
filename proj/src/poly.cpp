#include "monopf/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "monopf/errors.hpp"

namespace monopf {
namespace {

std::array<int, 4> unpack(std::uint32_t key, int& deg) {
  std::array<int, 4> v{};
  deg = 0;
  for (int s = 0; s < 4; ++s) {
    const int b = static_cast<int>((key >> (8 * (3 - s))) & 0xFFu);
    if (b == 0) break;
    v[deg++] = b - 1;
  }
  return v;
}

std::uint32_t pack(const int* v, int deg) {
  std::uint32_t key = 0;
  for (int s = 0; s < deg; ++s) key |= static_cast<std::uint32_t>(v[s] + 1) << (8 * (3 - s));
  return key;
}

}  // namespace

Monomial Monomial::variable(int v) {
  if (v < 0 || v >= kMaxVars) throw std::out_of_range("monomial variable index out of range");
  return Monomial(pack(&v, 1));
}

Monomial Monomial::from_vars(std::span<const int> vars) {
  if (vars.size() > kMaxDegree) throw std::overflow_error("monomial degree exceeds 4");
  std::array<int, 4> v{};
  for (std::size_t s = 0; s < vars.size(); ++s) {
    if (vars[s] < 0 || vars[s] >= kMaxVars) throw std::out_of_range("monomial variable index out of range");
    v[s] = vars[s];
  }
  std::sort(v.begin(), v.begin() + static_cast<long>(vars.size()));
  return Monomial(pack(v.data(), static_cast<int>(vars.size())));
}

int Monomial::degree() const noexcept {
  int d = 0;
  for (int s = 0; s < 4; ++s) d += ((key_ >> (8 * s)) & 0xFFu) != 0;
  return d;
}

std::vector<int> Monomial::vars() const {
  int d = 0;
  const auto v = unpack(key_, d);
  return {v.begin(), v.begin() + d};
}

Monomial Monomial::operator*(const Monomial& other) const {
  int da = 0, db = 0;
  const auto a = unpack(key_, da);
  const auto b = unpack(other.key_, db);
  if (da + db > kMaxDegree) throw std::overflow_error("monomial degree exceeds 4");
  std::array<int, 4> v{};
  std::merge(a.begin(), a.begin() + da, b.begin(), b.begin() + db, v.begin());
  return Monomial(pack(v.data(), da + db));
}

double Monomial::evaluate(std::span<const double> point) const {
  int d = 0;
  const auto v = unpack(key_, d);
  double r = 1.0;
  for (int s = 0; s < d; ++s) r *= point[static_cast<std::size_t>(v[s])];
  return r;
}

std::string Monomial::to_string() const {
  int d = 0;
  const auto v = unpack(key_, d);
  if (d == 0) return "1";
  std::string s;
  for (int i = 0; i < d; ++i) {
    if (i) s += '*';
    s += "x" + std::to_string(v[i]);
  }
  return s;
}

bool Monomial::graded_less(const Monomial& a, const Monomial& b) noexcept {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  return a.key_ < b.key_;  // packed big-endian, so this is lexicographic
}

Polynomial::Polynomial(double constant) {
  if (constant != 0.0) terms_[Monomial()] = constant;
}

Polynomial Polynomial::variable(int v) { return monomial(Monomial::variable(v)); }

Polynomial Polynomial::monomial(const Monomial& m, double coefficient) {
  Polynomial p;
  p.add_term(m, coefficient);
  return p;
}

int Polynomial::degree() const noexcept {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  const auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  add_scaled(other, 1.0);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  add_scaled(other, -1.0);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
  } else {
    for (auto& [m, c] : terms_) c *= s;
  }
  return *this;
}

void Polynomial::add_scaled(const Polynomial& a, double s) {
  for (const auto& [m, c] : a.terms_) add_term(m, s * c);
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial r = *this;
  r += other;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  Polynomial r = *this;
  r -= other;
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r = *this;
  r *= s;
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) r.add_term(ma * mb, ca * cb);
  }
  return r;
}

double Polynomial::evaluate(std::span<const double> point) const {
  double s = 0.0;
  for (const auto& [m, c] : terms_) s += c * m.evaluate(point);
  return s;
}

std::vector<int> Polynomial::support() const {
  std::set<int> vars;
  for (const auto& [m, c] : terms_) {
    for (int v : m.vars()) vars.insert(v);
  }
  return {vars.begin(), vars.end()};
}

void Polynomial::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

std::size_t basis_size(std::size_t n_vars, int degree) {
  // C(n + d, d) computed incrementally; exact for the sizes that matter here
  std::size_t r = 1;
  for (int i = 1; i <= degree; ++i) {
    const std::size_t num = n_vars + static_cast<std::size_t>(i);
    if (r > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
    r = r * num / static_cast<std::size_t>(i);
  }
  return r;
}

MonomialBasis::MonomialBasis(std::vector<int> vars, int degree) : vars_(std::move(vars)), degree_(degree) {
  if (degree != 1 && degree != 2) throw ContractViolation("basis degree must be 1 or 2");
  std::sort(vars_.begin(), vars_.end());
  vars_.erase(std::unique(vars_.begin(), vars_.end()), vars_.end());
  const std::size_t n = basis_size(vars_.size(), degree);
  if (n > kMaxSize) {
    throw CapacityError("monomial basis of size " + std::to_string(n) + " over " + std::to_string(vars_.size()) +
                        " variables exceeds " + std::to_string(kMaxSize) + "; enable sparsity");
  }
  monomials_.reserve(n);
  monomials_.push_back(Monomial());
  for (int v : vars_) monomials_.push_back(Monomial::variable(v));
  if (degree == 2) {
    for (std::size_t a = 0; a < vars_.size(); ++a) {
      for (std::size_t b = a; b < vars_.size(); ++b) {
        const int pair[2] = {vars_[a], vars_[b]};
        monomials_.push_back(Monomial::from_vars(pair));
      }
    }
  }
  for (std::size_t i = 0; i < monomials_.size(); ++i) index_.emplace(monomials_[i], static_cast<int>(i));
}

int MonomialBasis::index_of(const Monomial& m) const {
  const auto it = index_.find(m);
  return it == index_.end() ? -1 : it->second;
}

MonomialBasis monomial_basis(int n_vars, int degree) {
  if (n_vars < 1) throw ContractViolation("basis needs at least one variable");
  std::vector<int> vars(static_cast<std::size_t>(n_vars));
  for (int i = 0; i < n_vars; ++i) vars[static_cast<std::size_t>(i)] = i;
  return MonomialBasis(std::move(vars), degree);
}

}  // namespace monopf
