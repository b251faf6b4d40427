// Shared helpers for the unit tests.
#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "pnn/network.hpp"
#include "pnn/symtensor.hpp"

namespace pnn::test {

inline RationalPoly random_rational_poly(int n, int d, Rng& rng, int bound = 6, double density = 0.6) {
  RationalPoly p(n, d);
  std::uniform_int_distribution<int> u(-bound, bound);
  std::bernoulli_distribution keep(density);
  for (const auto& m : enumerate_multiindices(n, d))
    if (keep(rng)) p.set(m, Rational(u(rng), 1 + std::abs(u(rng))));
  return p;
}

inline HomogeneousPoly random_poly(int n, int d, Rng& rng) {
  HomogeneousPoly p(n, d);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& m : enumerate_multiindices(n, d)) p.set(m, g(rng));
  return p;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

/// Full d^r tensor entry by independent expansion of the polynomial: the
/// coefficient of x^i spread evenly over all orderings of the index tuple.
inline std::vector<int> exponents_of(const std::vector<int>& idx, int n) {
  std::vector<int> e(static_cast<std::size_t>(n), 0);
  for (const int i : idx) ++e[static_cast<std::size_t>(i)];
  return e;
}

/// Every index tuple in {0..n-1}^r, first position most significant.
inline std::vector<std::vector<int>> all_tuples(int n, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(static_cast<std::size_t>(r), 0);
  while (true) {
    out.push_back(t);
    int p = r - 1;
    while (p >= 0 && t[static_cast<std::size_t>(p)] == n - 1) t[static_cast<std::size_t>(p--)] = 0;
    if (p < 0) break;
    ++t[static_cast<std::size_t>(p)];
  }
  return out;
}

}  // namespace pnn::test

#include "pnn/scalar.hpp"

namespace pnn::test {

/// Jacobian of the coefficient map obtained by forward-mode differentiation
/// of the symbolic expansion, one weight at a time.
inline Matrix<Rational> symbolic_jacobian(const Architecture& arch, const Weights<Rational>& w) {
  const auto flat = w.flat();
  const std::size_t P = flat.size();
  const auto rows = static_cast<std::size_t>(arch.ambient_dim());
  Matrix<Rational> jac(rows, P);
  std::vector<Dual<Rational>> dual(P);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t q = 0; q < P; ++q) dual[q] = Dual<Rational>(flat[q], Rational(q == p ? 1 : 0));
    const auto wd = Weights<Dual<Rational>>::from_flat(arch, dual);
    const auto c = flatten_coefficients(coefficients(arch, wd));
    for (std::size_t i = 0; i < rows; ++i) jac(i, p) = c[i].deriv;
  }
  return jac;
}

/// Random element of the rescaling/permutation group with small rational
/// nonzero diagonal entries.
inline SymmetryElement<Rational> random_symmetry(const Architecture& arch, Rng& rng) {
  auto g = SymmetryElement<Rational>::identity(arch);
  std::uniform_int_distribution<int> num(1, 4);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t i = 0; i < g.diagonals.size(); ++i) {
    for (auto& d : g.diagonals[i]) d = Rational(sign(rng) ? num(rng) : -num(rng), num(rng));
    std::shuffle(g.permutations[i].begin(), g.permutations[i].end(), rng);
  }
  return g;
}

}  // namespace pnn::test
