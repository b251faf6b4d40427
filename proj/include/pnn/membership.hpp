// Membership tests for the neuromanifolds and neurovarieties that have an
// explicit description, and exact fitting in the filling regime.
//
// Inputs are raw polynomial coefficients. For binary quadrics the k x 3
// matrix C has columns (c11, c12, c22), i.e. the coefficients of x1^2, x1x2,
// x2^2. Every test is available over Rational (exact, tolerance ignored) and
// double (tolerance relative to the natural scale of the quantity tested).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/network.hpp"
#include "pnn/symtensor.hpp"

namespace pnn {

enum class Tri { yes, no, unknown };

std::string to_string(Tri t);

struct MembershipVerdict {
  Tri in_variety = Tri::unknown;
  Tri in_manifold = Tri::unknown;
  std::string certificate;
  double tolerance = 0.0;
  /// (2,2,2) only: the point lies on the algebraic boundary within tolerance.
  bool boundary = false;
};

/// Symmetric Gram matrix of a quadric: diagonal c_ii, off-diagonal c_ij / 2.
template <class T>
Matrix<T> gram_matrix(const BasicPoly<T>& p);

/// (d0, d1, 1), r = 2: rank of the Gram matrix at most d1.
template <class T>
MembershipVerdict member_shallow_single_output_r2(const BasicPoly<T>& p, int d1, double tol = 1e-9);

/// (d0, 1, d2), any r: the tensors stacked along a new last mode form a
/// rank-one tensor.
template <class T>
MembershipVerdict member_d0_1_d2(const std::vector<BasicPoly<T>>& polys, double tol = 1e-9);

/// k x 3 matrix of binary-quadric coefficients, one row per output.
template <class T>
Matrix<T> quadric_matrix(const std::vector<BasicPoly<T>>& polys);

struct VarietyCheck {
  bool member = true;
  std::string certificate;
};

/// (2,2,k), r = 2: every 3 x 3 minor of C vanishes. Float minors are compared
/// against tol * (max |c|)^3.
template <class T>
VarietyCheck variety_member_22k(const Matrix<T>& c, double tol = 1e-9);

/// The three column-pair minors (M12, M13, M23) of a 2 x 3 matrix.
template <class T>
struct PairMinors {
  T m12;
  T m13;
  T m23;
  /// M13^2 - M12 * M23; nonnegative exactly on the manifold.
  T discriminant;
};

template <class T>
PairMinors<T> pair_minors(const Matrix<T>& c, std::size_t row_a = 0, std::size_t row_b = 1);

/// (2,2,2), r = 2: C is in the manifold iff M13^2 >= M12 M23. The float
/// boundary band is tol * ||C||_F^4.
template <class T>
MembershipVerdict manifold_member_222(const Matrix<T>& c, double tol = 1e-9);

/// (2,2,k), r = 2, k >= 2: necessary condition on every pair of rows. Yields
/// "no" or "unknown" (for k = 2 this is the full test).
template <class T>
MembershipVerdict manifold_member_22k_pairwise(const Matrix<T>& c, double tol = 1e-9);

/// Weights of a (d0, d1, d2) network with d1 >= binom(d0 + r - 1, r)
/// realizing `target` exactly (Rational) or to solver precision (double).
template <class T>
Weights<T> exact_fit(const Architecture& arch, const std::vector<BasicPoly<T>>& target, std::uint64_t seed,
                     int max_attempts = 20);

struct ViolationExample {
  Matrix<Rational> a;
  MembershipVerdict manifold;
  VarietyCheck variety;
};

/// A = [[a, s, -a], [b, s, -b]]: in the (2,2,2) neurovariety but not in the
/// neuromanifold whenever s != 0 and a != b.
ViolationExample known_rank1_violation_example(const Rational& a = 1, const Rational& b = 2, const Rational& s = 1);

/// Dispatch on the architecture to the strongest test available.
MembershipVerdict membership(const Architecture& arch, const std::vector<RationalPoly>& polys, bool exact,
                             double tol = 1e-9, std::uint64_t seed = 1);

}  // namespace pnn
