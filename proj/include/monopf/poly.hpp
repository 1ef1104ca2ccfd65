#pragma once

// Sparse real polynomials of degree <= 4 over at most 255 scalar variables.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace monopf {

/// Product of up to four variables, stored as sorted (index + 1) bytes.
class Monomial {
 public:
  static constexpr int kMaxDegree = 4;
  static constexpr int kMaxVars = 255;

  Monomial() = default;  // the constant monomial 1
  [[nodiscard]] static Monomial variable(int v);
  [[nodiscard]] static Monomial from_vars(std::span<const int> vars);

  [[nodiscard]] int degree() const noexcept;
  /// Variable indices in ascending order, with repetition.
  [[nodiscard]] std::vector<int> vars() const;
  [[nodiscard]] std::uint32_t key() const noexcept { return key_; }

  /// Throws std::overflow_error when the product exceeds degree 4.
  [[nodiscard]] Monomial operator*(const Monomial& other) const;

  [[nodiscard]] double evaluate(std::span<const double> point) const;
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Monomial&, const Monomial&) = default;

  /// Graded lexicographic order: by degree, then by the sorted index list.
  [[nodiscard]] static bool graded_less(const Monomial& a, const Monomial& b) noexcept;

 private:
  explicit Monomial(std::uint32_t key) : key_(key) {}
  std::uint32_t key_ = 0;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept { return std::hash<std::uint32_t>{}(m.key()); }
};

class Polynomial {
 public:
  using Terms = std::unordered_map<Monomial, double, MonomialHash>;

  Polynomial() = default;
  explicit Polynomial(double constant);
  [[nodiscard]] static Polynomial variable(int v);
  [[nodiscard]] static Polynomial monomial(const Monomial& m, double coefficient = 1.0);

  [[nodiscard]] const Terms& terms() const noexcept { return terms_; }
  [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }
  [[nodiscard]] int degree() const noexcept;
  [[nodiscard]] double coefficient(const Monomial& m) const;

  void add_term(const Monomial& m, double c);
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  [[nodiscard]] Polynomial operator+(const Polynomial& other) const;
  [[nodiscard]] Polynomial operator-(const Polynomial& other) const;
  [[nodiscard]] Polynomial operator*(const Polynomial& other) const;
  [[nodiscard]] Polynomial operator*(double s) const;
  /// Accumulates s * a into this polynomial.
  void add_scaled(const Polynomial& a, double s);

  [[nodiscard]] double evaluate(std::span<const double> point) const;
  /// Variables that occur in any term, ascending.
  [[nodiscard]] std::vector<int> support() const;
  /// Drops terms with |coefficient| <= tol.
  void prune(double tol = 0.0);

 private:
  Terms terms_;
};

/// Monomials of degree <= d over a variable subset, graded lexicographic.
class MonomialBasis {
 public:
  static constexpr std::size_t kMaxSize = 5000;

  /// Throws CapacityError above kMaxSize, ContractViolation for degree outside {1, 2}.
  MonomialBasis(std::vector<int> vars, int degree);

  [[nodiscard]] std::size_t size() const noexcept { return monomials_.size(); }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] const std::vector<int>& vars() const noexcept { return vars_; }
  [[nodiscard]] const Monomial& operator[](std::size_t i) const { return monomials_[i]; }
  [[nodiscard]] const std::vector<Monomial>& monomials() const noexcept { return monomials_; }
  /// Position of m in the basis, or -1.
  [[nodiscard]] int index_of(const Monomial& m) const;

 private:
  std::vector<int> vars_;
  int degree_;
  std::vector<Monomial> monomials_;
  std::unordered_map<Monomial, int, MonomialHash> index_;
};

/// Basis over variables 0..n_vars-1.
[[nodiscard]] MonomialBasis monomial_basis(int n_vars, int degree);

/// C(n + d, d), saturating at SIZE_MAX.
[[nodiscard]] std::size_t basis_size(std::size_t n_vars, int degree);

}  // namespace monopf
