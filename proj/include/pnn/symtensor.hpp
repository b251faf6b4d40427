// Homogeneous polynomials, multi-indices, symmetric tensors and their
// flattenings.
//
// Conventions used across the whole library:
//  * Monomials of a fixed degree are ordered graded-lexicographically with
//    x1 > x2 > ... > xn, so for (n, d) = (2, 2) the order is x1^2, x1x2, x2^2.
//  * Polynomial coefficients are raw: the coefficient of x^i is stored as is,
//    without absorbing the multinomial factor.
//  * A symmetric tensor stores one entry per orbit, keyed by the sorted
//    (0-based) index tuple; T_j = coeff(f^{-1}(j)) / multinomial(f^{-1}(j)).
#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/scalar.hpp"

namespace pnn {

/// Exponent vector of a monomial in n variables.
struct MultiIndex {
  std::vector<int> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : exponents(std::move(e)) {}
  MultiIndex(std::initializer_list<int> e) : exponents(e) {}

  [[nodiscard]] int degree() const;
  [[nodiscard]] std::size_t n_vars() const { return exponents.size(); }
  int operator[](std::size_t i) const { return exponents[i]; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Graded-lex "comes before": lower total degree first, then larger leading
/// exponents first.
struct GradedLex {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

/// All exponent vectors of total degree `degree` in `n_vars` variables, in
/// graded-lex order. Length is binom(n_vars + degree - 1, degree).
std::vector<MultiIndex> enumerate_multiindices(int n_vars, int degree);

/// r! / (i_1! ... i_n!) with r = |i|; throws std::overflow_error on overflow.
std::uint64_t multinomial(const MultiIndex& index);
BigInt multinomial_big(const MultiIndex& index);

/// Position of `index` in enumerate_multiindices(n, |index|) without building
/// the list.
std::size_t graded_lex_rank(const MultiIndex& index);

template <class T>
class BasicPoly {
 public:
  using Terms = std::map<MultiIndex, T, GradedLex>;

  BasicPoly() = default;
  BasicPoly(int n_vars, int degree) : n_vars_(n_vars), degree_(degree) {
    if (n_vars < 1 || degree < 0) throw std::invalid_argument("BasicPoly: need n_vars >= 1 and degree >= 0");
  }

  [[nodiscard]] int n_vars() const { return n_vars_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] const Terms& terms() const { return terms_; }
  [[nodiscard]] bool is_zero() const { return terms_.empty(); }

  [[nodiscard]] T coeff(const MultiIndex& i) const {
    const auto it = terms_.find(i);
    return it == terms_.end() ? T(0) : it->second;
  }

  void set(const MultiIndex& i, T value) {
    check(i);
    if (pnn::is_zero(value)) {
      terms_.erase(i);
    } else {
      terms_.insert_or_assign(i, std::move(value));
    }
  }

  void add(const MultiIndex& i, const T& value) {
    check(i);
    if (pnn::is_zero(value)) return;
    auto [it, inserted] = terms_.try_emplace(i, value);
    if (!inserted) {
      it->second += value;
      if (pnn::is_zero(it->second)) terms_.erase(it);
    }
  }

  [[nodiscard]] T evaluate(std::span<const T> x) const {
    if (x.size() != static_cast<std::size_t>(n_vars_)) throw std::invalid_argument("evaluate: wrong point dimension");
    T acc(0);
    for (const auto& [mono, c] : terms_) {
      T term = c;
      for (std::size_t k = 0; k < mono.n_vars(); ++k)
        if (mono[k] != 0) term *= pow_int(x[k], static_cast<std::uint64_t>(mono[k]));
      acc += term;
    }
    return acc;
  }

  /// Coefficients in graded-lex order, zeros included.
  [[nodiscard]] std::vector<T> dense() const {
    std::vector<T> out;
    for (const auto& mono : enumerate_multiindices(n_vars_, degree_)) out.push_back(coeff(mono));
    return out;
  }

  static BasicPoly from_dense(int n_vars, int degree, std::span<const T> values) {
    BasicPoly p(n_vars, degree);
    const auto basis = enumerate_multiindices(n_vars, degree);
    if (values.size() != basis.size()) throw std::invalid_argument("from_dense: wrong coefficient count");
    for (std::size_t i = 0; i < basis.size(); ++i) p.set(basis[i], values[i]);
    return p;
  }

  friend bool operator==(const BasicPoly& a, const BasicPoly& b) {
    return a.n_vars_ == b.n_vars_ && a.degree_ == b.degree_ && a.terms_ == b.terms_;
  }

  friend BasicPoly operator+(const BasicPoly& a, const BasicPoly& b) {
    a.check_compatible(b);
    BasicPoly out = a;
    for (const auto& [m, c] : b.terms_) out.add(m, c);
    return out;
  }

  friend BasicPoly operator*(const T& s, const BasicPoly& p) {
    BasicPoly out(p.n_vars_, p.degree_);
    if (pnn::is_zero(s)) return out;
    for (const auto& [m, c] : p.terms_) out.set(m, s * c);
    return out;
  }

  /// Product of two homogeneous polynomials in the same variables.
  friend BasicPoly operator*(const BasicPoly& a, const BasicPoly& b) {
    if (a.n_vars_ != b.n_vars_) throw std::invalid_argument("poly product: variable count mismatch");
    BasicPoly out(a.n_vars_, a.degree_ + b.degree_);
    std::vector<int> e(static_cast<std::size_t>(a.n_vars_));
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) {
        for (std::size_t k = 0; k < e.size(); ++k) e[k] = ma[k] + mb[k];
        out.add(MultiIndex(e), ca * cb);
      }
    return out;
  }

  template <class U, class F>
  [[nodiscard]] BasicPoly<U> map(F&& f) const {
    BasicPoly<U> out(n_vars_, degree_);
    for (const auto& [m, c] : terms_) out.set(m, f(c));
    return out;
  }

 private:
  void check(const MultiIndex& i) const {
    if (i.n_vars() != static_cast<std::size_t>(n_vars_) || i.degree() != degree_) {
      throw std::invalid_argument("monomial does not match polynomial shape");
    }
    for (const int e : i.exponents)
      if (e < 0) throw std::invalid_argument("negative exponent");
  }
  void check_compatible(const BasicPoly& o) const {
    if (o.n_vars_ != n_vars_ || o.degree_ != degree_) throw std::invalid_argument("polynomial shape mismatch");
  }

  int n_vars_ = 1;
  int degree_ = 0;
  Terms terms_;
};

using HomogeneousPoly = BasicPoly<double>;
using RationalPoly = BasicPoly<Rational>;

/// p^e for e >= 0 (p^0 is the constant 1).
template <class T>
BasicPoly<T> power(const BasicPoly<T>& p, int e) {
  BasicPoly<T> acc(p.n_vars(), 0);
  acc.set(MultiIndex(std::vector<int>(static_cast<std::size_t>(p.n_vars()), 0)), T(1));
  for (int i = 0; i < e; ++i) acc = acc * p;
  return acc;
}

/// Order-r symmetric tensor over an n-dimensional space, one entry per orbit.
template <class T>
class BasicSymTensor {
 public:
  BasicSymTensor(int dim, int order) : dim_(dim), order_(order) {
    if (dim < 1 || order < 1) throw std::invalid_argument("symmetric tensor needs dim >= 1 and order >= 1");
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] const std::map<std::vector<int>, T>& entries() const { return entries_; }

  /// Entry at an arbitrary (0-based, possibly unsorted) index tuple.
  [[nodiscard]] T at(std::vector<int> idx) const {
    std::sort(idx.begin(), idx.end());
    const auto it = entries_.find(idx);
    return it == entries_.end() ? T(0) : it->second;
  }

  void set(std::vector<int> idx, T value) {
    if (idx.size() != static_cast<std::size_t>(order_)) throw std::invalid_argument("tensor index has wrong length");
    for (const int i : idx)
      if (i < 0 || i >= dim_) throw std::invalid_argument("tensor index out of range");
    std::sort(idx.begin(), idx.end());
    if (pnn::is_zero(value)) {
      entries_.erase(idx);
    } else {
      entries_.insert_or_assign(std::move(idx), std::move(value));
    }
  }

  [[nodiscard]] bool is_zero() const { return entries_.empty(); }

  /// Largest absolute entry.
  [[nodiscard]] double scale() const {
    double s = 0.0;
    for (const auto& [k, v] : entries_) s = std::max(s, magnitude(v));
    return s;
  }

  friend bool operator==(const BasicSymTensor& a, const BasicSymTensor& b) {
    return a.dim_ == b.dim_ && a.order_ == b.order_ && a.entries_ == b.entries_;
  }

 private:
  int dim_;
  int order_;
  std::map<std::vector<int>, T> entries_;
};

using SymmetricTensor = BasicSymTensor<double>;
using RationalSymTensor = BasicSymTensor<Rational>;

/// Matrix reshaping of a tensor along a bipartition of its modes. Row (resp.
/// column) multi-indices are enumerated with the first listed mode most
/// significant. Modes are 0-based.
template <class T>
struct BasicFlattening {
  std::vector<int> row_part;
  std::vector<int> col_part;
  Matrix<T> matrix;
};

using Flattening = BasicFlattening<double>;

template <class T>
BasicSymTensor<T> poly_to_tensor(const BasicPoly<T>& p) {
  if (p.degree() == 0) throw std::invalid_argument("poly_to_tensor: degree must be positive");
  BasicSymTensor<T> t(p.n_vars(), p.degree());
  for (const auto& [mono, c] : p.terms()) {
    std::vector<int> idx;
    for (std::size_t k = 0; k < mono.n_vars(); ++k)
      for (int e = 0; e < mono[k]; ++e) idx.push_back(static_cast<int>(k));
    if constexpr (std::is_same_v<T, double>) {
      t.set(std::move(idx), c / static_cast<double>(multinomial(mono)));
    } else {
      t.set(std::move(idx), c / T(multinomial_big(mono)));
    }
  }
  return t;
}

template <class T>
BasicPoly<T> tensor_to_poly(const BasicSymTensor<T>& t) {
  BasicPoly<T> p(t.dim(), t.order());
  for (const auto& [idx, v] : t.entries()) {
    std::vector<int> e(static_cast<std::size_t>(t.dim()), 0);
    for (const int i : idx) ++e[static_cast<std::size_t>(i)];
    MultiIndex mono(std::move(e));
    if constexpr (std::is_same_v<T, double>) {
      p.set(mono, v * static_cast<double>(multinomial(mono)));
    } else {
      p.set(mono, v * T(multinomial_big(mono)));
    }
  }
  return p;
}

/// Flattening with the given 0-based row modes; the column modes are the
/// complement in increasing order.
template <class T>
BasicFlattening<T> flatten(const BasicSymTensor<T>& t, std::vector<int> row_part) {
  const int r = t.order();
  std::sort(row_part.begin(), row_part.end());
  row_part.erase(std::unique(row_part.begin(), row_part.end()), row_part.end());
  if (row_part.empty() || static_cast<int>(row_part.size()) >= r) {
    throw std::invalid_argument("flatten: row part must be a nonempty proper subset of the modes");
  }
  for (const int m : row_part)
    if (m < 0 || m >= r) throw std::invalid_argument("flatten: mode out of range");
  std::vector<int> col_part;
  for (int m = 0; m < r; ++m)
    if (!std::binary_search(row_part.begin(), row_part.end(), m)) col_part.push_back(m);

  const std::size_t n = static_cast<std::size_t>(t.dim());
  auto count = [n](std::size_t k) {
    std::size_t c = 1;
    for (std::size_t i = 0; i < k; ++i) c = static_cast<std::size_t>(checked_mul(c, n));
    return c;
  };
  const std::size_t rows = count(row_part.size());
  const std::size_t cols = count(col_part.size());
  BasicFlattening<T> f{row_part, col_part, Matrix<T>(rows, cols)};
  std::vector<int> full(static_cast<std::size_t>(r));
  auto decode = [n](std::size_t code, const std::vector<int>& modes, std::vector<int>& out) {
    for (std::size_t p = modes.size(); p-- > 0;) {
      out[static_cast<std::size_t>(modes[p])] = static_cast<int>(code % n);
      code /= n;
    }
  };
  for (std::size_t i = 0; i < rows; ++i) {
    decode(i, row_part, full);
    for (std::size_t j = 0; j < cols; ++j) {
      decode(j, col_part, full);
      f.matrix(i, j) = t.at(full);
    }
  }
  return f;
}

enum class RankOneVerdict { yes, no, zero };

struct RankOneResult {
  RankOneVerdict verdict = RankOneVerdict::zero;
  /// Largest |2x2 minor| seen (float) or the first nonzero one (exact).
  double worst_minor = 0.0;
  std::string certificate;
};

/// Rank-one test through the 2x2 minors of every flattening. A minor counts
/// as vanishing when |minor| <= tol * scale^2 (scale = max |entry|). With an
/// exact scalar the test is exact and tol is ignored.
template <class T>
RankOneResult is_rank_one(const BasicSymTensor<T>& t, double tol = 1e-9);

/// scale * (v . x)^r expanded: coefficient of x^i is scale * multinomial(i) * v^i.
template <class T>
BasicPoly<T> power_form(std::span<const T> v, int r, const T& scale) {
  if (v.empty()) throw std::invalid_argument("power_form: empty vector");
  if (r < 0) throw std::invalid_argument("power_form: negative degree");
  BasicPoly<T> p(static_cast<int>(v.size()), r);
  for (const auto& mono : enumerate_multiindices(static_cast<int>(v.size()), r)) {
    T c = scale;
    if constexpr (std::is_same_v<T, double>) {
      c *= static_cast<double>(multinomial(mono));
    } else {
      c *= T(multinomial_big(mono));
    }
    for (std::size_t k = 0; k < v.size(); ++k)
      if (mono[k] != 0) c *= pow_int(v[k], static_cast<std::uint64_t>(mono[k]));
    p.set(mono, c);
  }
  return p;
}

// Text format: a header line "n_vars degree" followed by one line per
// nonzero monomial "e1,e2,...,en<TAB>coefficient". Coefficients may be
// decimal or rational ("3/4") literals. Blank lines and '#' comments are
// skipped. Several polynomials may follow each other in one stream.
void write_poly(std::ostream& os, const RationalPoly& p);
void write_poly(std::ostream& os, const HomogeneousPoly& p);
/// Reads the next polynomial block, or nullopt at end of stream.
std::optional<RationalPoly> read_poly(std::istream& is);
std::vector<RationalPoly> read_polys(std::istream& is);

RationalPoly to_rational(const HomogeneousPoly& p);
HomogeneousPoly to_double(const RationalPoly& p);

std::string format_monomial(const MultiIndex& m);

}  // namespace pnn
