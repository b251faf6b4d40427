// Learning degree of the (2,2,k) quadratic network: the data-induced
// quadratic form, the Chern-Mather class of the rank <= 2 determinantal
// variety of k x 3 matrices, its generic ED degree, and a multistart census
// of critical points.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/scalar.hpp"
#include "pnn/symtensor.hpp"

namespace pnn {

/// Element of Z[H] / <H^m>.
class TruncatedHPoly {
 public:
  explicit TruncatedHPoly(std::size_t m) : beta_(m, BigInt(0)) {}
  TruncatedHPoly(std::size_t m, std::vector<BigInt> beta);

  /// H^e, or zero when e < 0 or e >= m.
  static TruncatedHPoly monomial(std::size_t m, long long e, const BigInt& c = 1);

  [[nodiscard]] std::size_t length() const { return beta_.size(); }
  [[nodiscard]] const BigInt& operator[](std::size_t l) const { return beta_[l]; }
  /// beta_l, zero outside [0, m).
  [[nodiscard]] BigInt coeff(long long l) const;
  [[nodiscard]] const std::vector<BigInt>& coefficients() const { return beta_; }

  friend TruncatedHPoly operator+(const TruncatedHPoly& a, const TruncatedHPoly& b);
  friend TruncatedHPoly operator*(const TruncatedHPoly& a, const TruncatedHPoly& b);
  friend TruncatedHPoly operator*(const BigInt& s, const TruncatedHPoly& a);
  TruncatedHPoly& operator+=(const TruncatedHPoly& o) { return *this = *this + o; }
  friend bool operator==(const TruncatedHPoly&, const TruncatedHPoly&) = default;

  [[nodiscard]] std::string to_string() const;

 private:
  std::vector<BigInt> beta_;
};

/// E_{a,b} = (1/N) sum_j x_j^(a+b) over degree-d monomials a, b (graded-lex).
struct MomentForm {
  int n_vars = 0;
  int degree = 0;
  std::size_t samples_used = 0;
  Matrix<double> block;

  /// (rho - phi)^T E (rho - phi) for one output block.
  [[nodiscard]] double loss(std::span<const double> rho, std::span<const double> phi) const;
  /// Sum of per-output losses; rho and phi are concatenated output blocks.
  [[nodiscard]] double total_loss(std::span<const double> rho, std::span<const double> phi) const;
  /// Block-diagonal matrix with `outputs` copies of the block.
  [[nodiscard]] Matrix<double> full_matrix(std::size_t outputs) const;
};

MomentForm moment_form(const std::vector<std::vector<double>>& samples, int degree);

/// 8k^2 - 12k + 3; throws for k < 2.
BigInt eddeg_closed_form(long long k);

/// Chern-Mather class of the rank <= 2 locus of k x 3 matrices as
/// trace(A H B) in Z[H]/<H^(3k)>, with (2k+1) x (2k+1) matrices A, B and
/// H_{a,b} = H^(k+b-a).
TruncatedHPoly chern_mather_22k(long long k);

/// Same class from the closed diagonal formula: beta_{k+j} for j = -2..2k-1.
TruncatedHPoly chern_mather_22k_diagonal(long long k);

/// Generic ED degree as the double sum of polar degrees over the
/// Chern-Mather coefficients, with M = 2(k+1):
///   sum_{l<M} sum_{i<=l} (-1)^i binom(M-i, M-l) beta_{k-2+i}.
BigInt eddeg_polar_sum(long long k);
/// The same sum with the inner binomial sum collapsed to 2^(M-i) - 1.
BigInt eddeg_polar_sum_rearranged(long long k);

struct CensusOptions {
  int starts = 500;
  std::uint64_t seed = 1;
  /// Gradient-norm threshold relative to the loss scale.
  double grad_tol = 1e-10;
  int max_iters = 20000;
  /// Relative Frobenius distance under which two points coincide.
  double cluster_tol = 1e-5;
  /// Rank threshold for the regular-locus filter, relative to sigma_max.
  double rank_tol = 1e-6;
  /// A start is abandoned once its two hidden directions have stayed closer
  /// than this angle for 500 iterations (drift toward an infimum outside the
  /// manifold).
  double merge_angle = 1e-3;
};

struct CriticalPoint {
  Matrix<double> coefficients;  // k x 3
  double loss = 0.0;
  int multiplicity = 0;
  std::size_t rank = 0;
  bool regular = false;
  std::size_t first_start = 0;
};

struct CriticalCensus {
  int starts = 0;
  std::uint64_t seed = 0;
  double cluster_tol = 0.0;
  std::vector<CriticalPoint> points;
  /// Starts that hit the iteration cap or a degenerate configuration.
  std::vector<std::size_t> non_convergent;
  /// Subset of non_convergent whose two hidden directions merged: the loss
  /// decreases toward an infimum that no finite weights attain.
  std::vector<std::size_t> merged;

  [[nodiscard]] std::size_t regular_count() const;
};

/// Minimizes (C(w) - target) E (C(w) - target)^T summed over rows, where
/// C(w) = W2 R(W1) is the k x 3 coefficient matrix of a (2,2,k) network, from
/// `starts` random initializations; clusters converged points.
CriticalCensus critical_census(const Matrix<double>& target, const Matrix<double>& e, const CensusOptions& opts);

/// Random symmetric positive definite n x n matrix.
Matrix<double> random_spd(std::size_t n, Rng& rng);

}  // namespace pnn
