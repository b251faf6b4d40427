// Backpropagation, the Jacobian of the parameter map, and the rank-based
// neurovariety dimension.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/network.hpp"
#include "pnn/scalar.hpp"

namespace pnn {

/// Per-layer values of one forward/backward pass. Index 0 holds the input in
/// `a`; z[l], a[l], delta[l] for l = 1..L. The last layer is linear, so
/// a[L] == z[L].
template <class T>
struct LayerTrace {
  std::vector<std::vector<T>> z;
  std::vector<std::vector<T>> a;
  std::vector<std::vector<T>> delta;
};

/// Reusable workspace: no allocation after construction.
template <class T>
class Backprop {
 public:
  explicit Backprop(const Architecture& arch) : arch_(arch) {
    const auto L = static_cast<std::size_t>(arch.depth());
    trace_.z.resize(L + 1);
    trace_.a.resize(L + 1);
    trace_.delta.resize(L + 1);
    for (std::size_t l = 0; l <= L; ++l) {
      const auto w = static_cast<std::size_t>(arch.width(static_cast<int>(l)));
      trace_.z[l].assign(w, T(0));
      trace_.a[l].assign(w, T(0));
      trace_.delta[l].assign(w, T(0));
    }
  }

  [[nodiscard]] const Architecture& arch() const { return arch_; }
  [[nodiscard]] const LayerTrace<T>& trace() const { return trace_; }
  [[nodiscard]] std::span<const T> output() const { return trace_.a.back(); }

  void forward(const Weights<T>& w, std::span<const T> x) {
    const auto L = w.layers.size();
    std::copy(x.begin(), x.end(), trace_.a[0].begin());
    const auto r = static_cast<std::uint64_t>(arch_.r);
    for (std::size_t l = 1; l <= L; ++l) {
      const auto& m = w.layers[l - 1];
      auto& z = trace_.z[l];
      const auto& prev = trace_.a[l - 1];
      for (std::size_t j = 0; j < m.rows(); ++j) {
        T acc(0);
        const auto row = m.row(j);
        for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * prev[k];
        z[j] = acc;
      }
      auto& a = trace_.a[l];
      if (l < L) {
        for (std::size_t j = 0; j < z.size(); ++j) a[j] = pow_int(z[j], r);
      } else {
        std::copy(z.begin(), z.end(), a.begin());
      }
    }
  }

  /// Backward pass after forward(). `seed` is d loss / d output; the gradient
  /// over all weights (flat order) is written to `grad`.
  void backward(const Weights<T>& w, std::span<const T> seed, std::span<T> grad) {
    const auto L = w.layers.size();
    std::copy(seed.begin(), seed.end(), trace_.delta[L].begin());
    const T rr(static_cast<long long>(arch_.r));
    const auto rm1 = static_cast<std::uint64_t>(arch_.r - 1);
    for (std::size_t l = L - 1; l >= 1; --l) {
      const auto& m = w.layers[l];
      const auto& up = trace_.delta[l + 1];
      auto& d = trace_.delta[l];
      for (std::size_t k = 0; k < d.size(); ++k) {
        T acc(0);
        for (std::size_t j = 0; j < up.size(); ++j) acc += m(j, k) * up[j];
        d[k] = acc * rr * pow_int(trace_.z[l][k], rm1);
      }
    }
    std::size_t off = 0;
    for (std::size_t l = 1; l <= L; ++l) {
      const auto& d = trace_.delta[l];
      const auto& prev = trace_.a[l - 1];
      for (std::size_t j = 0; j < d.size(); ++j)
        for (std::size_t k = 0; k < prev.size(); ++k) grad[off++] = d[j] * prev[k];
    }
  }

  /// Gradient of output j at the last forward point.
  void output_gradient(const Weights<T>& w, std::size_t j, std::span<T> grad) {
    seed_.assign(static_cast<std::size_t>(arch_.outputs()), T(0));
    seed_[j] = T(1);
    backward(w, seed_, grad);
  }

 private:
  Architecture arch_;
  LayerTrace<T> trace_;
  std::vector<T> seed_;
};

/// d p^{(j)}(x) / d w for every weight, flat order.
template <class T>
std::vector<T> backprop(const Architecture& arch, const Weights<T>& w, std::span<const T> x, std::size_t output_index) {
  check_weights(arch, w);
  if (x.size() != static_cast<std::size_t>(arch.inputs())) throw std::invalid_argument("backprop: wrong input length");
  if (output_index >= static_cast<std::size_t>(arch.outputs())) throw std::invalid_argument("backprop: output index out of range");
  Backprop<T> bp(arch);
  bp.forward(w, x);
  std::vector<T> grad(arch.param_count());
  bp.output_gradient(w, output_index, grad);
  return grad;
}

enum class Backend { float_svd, finite_field, rational };

std::string to_string(Backend b);
Backend parse_backend(const std::string& text);

/// Random sample point for the given scalar: standard normal for double,
/// small integers for Rational, uniform field elements for Fp.
template <class T>
std::vector<T> random_sample(std::size_t n, Rng& rng, int int_bound = 5) {
  std::vector<T> x(n);
  if constexpr (std::is_same_v<T, double>) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : x) v = g(rng);
  } else if constexpr (std::is_same_v<T, Fp>) {
    std::uniform_int_distribution<std::uint64_t> u(0, Fp::kModulus - 1);
    for (auto& v : x) v = Fp::from_raw(u(rng));
  } else {
    std::uniform_int_distribution<int> u(-int_bound, int_bound);
    for (auto& v : x) v = T(u(rng));
  }
  return x;
}

/// Row of monomial values x^I in graded-lex order.
template <class T>
std::vector<T> monomial_row(std::span<const T> x, const std::vector<MultiIndex>& basis) {
  std::vector<T> row;
  row.reserve(basis.size());
  for (const auto& mono : basis) {
    T v(1);
    for (std::size_t k = 0; k < x.size(); ++k)
      if (mono[k] != 0) v *= pow_int(x[k], static_cast<std::uint64_t>(mono[k]));
    row.push_back(v);
  }
  return row;
}

template <class T>
struct JacobianResult {
  /// ambient_dim x param_count, rows in coefficient-vector order.
  Matrix<T> matrix;
  std::uint64_t sample_seed = 0;
  int attempts = 0;
};

/// Jacobian of the parameter map at w, recovered from backprop gradients at
/// N = #monomials sample points by solving the square system V X = G with
/// V[s, I] = x_s^I. Sample sets with singular V are redrawn up to
/// `max_attempts` times.
template <class T>
JacobianResult<T> jacobian(const Architecture& arch, const Weights<T>& w, std::uint64_t seed, int max_attempts = 20) {
  check_weights(arch, w);
  const auto basis = enumerate_multiindices(arch.inputs(), arch.output_degree());
  const std::size_t N = basis.size();
  const std::size_t P = arch.param_count();
  const auto outs = static_cast<std::size_t>(arch.outputs());
  Backprop<T> bp(arch);
  std::vector<T> grad(P);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t s_seed = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    Rng rng(s_seed);
    Matrix<T> V(N, N);
    Matrix<T> G(N, outs * P);
    for (std::size_t s = 0; s < N; ++s) {
      const auto x = random_sample<T>(static_cast<std::size_t>(arch.inputs()), rng, 3 + static_cast<int>(N) + 4 * attempt);
      const auto row = monomial_row<T>(x, basis);
      std::copy(row.begin(), row.end(), V.row(s).begin());
      bp.forward(w, x);
      for (std::size_t j = 0; j < outs; ++j) {
        bp.output_gradient(w, j, grad);
        std::copy(grad.begin(), grad.end(), G.row(s).begin() + static_cast<std::ptrdiff_t>(j * P));
      }
    }
    std::optional<Matrix<T>> X;
    if constexpr (std::is_same_v<T, double>) {
      X = solve_float(V, G);
    } else {
      X = solve_exact(V, G);
    }
    if (!X) continue;
    JacobianResult<T> out{Matrix<T>(outs * N, P), s_seed, attempt + 1};
    for (std::size_t j = 0; j < outs; ++j)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t p = 0; p < P; ++p) out.matrix(j * N + i, p) = (*X)(i, j * P + p);
    return out;
  }
  throw std::runtime_error("jacobian: sample system singular after " + std::to_string(max_attempts) + " attempts");
}

/// Stacked backprop gradients: row s*dL + j is d p^{(j)}(x_s) / d w. Its rank
/// equals the Jacobian rank once the samples are generic and at least
/// rank(J) in number.
template <class T>
Matrix<T> sampled_jacobian(const Architecture& arch, const Weights<T>& w, const std::vector<std::vector<T>>& samples) {
  check_weights(arch, w);
  const std::size_t P = arch.param_count();
  const auto outs = static_cast<std::size_t>(arch.outputs());
  Matrix<T> m(samples.size() * outs, P);
  Backprop<T> bp(arch);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    bp.forward(w, samples[s]);
    for (std::size_t j = 0; j < outs; ++j) bp.output_gradient(w, j, m.row(s * outs + j));
  }
  return m;
}

struct JacobianReport {
  Architecture arch;
  std::uint64_t sample_seed = 0;
  Backend backend = Backend::finite_field;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;
  /// Spectral gap at the rank cut (float backend only).
  double gap = 0.0;
  int attempts = 0;
};

/// Interpolated Jacobian at the given weights, with its rank.
JacobianReport jacobian_report(const Architecture& arch, const Weights<double>& w, std::uint64_t seed,
                               double rel_tol = 1e-8);
JacobianReport jacobian_report(const Architecture& arch, const Weights<Rational>& w, std::uint64_t seed);
JacobianReport jacobian_report(const Architecture& arch, const Weights<Fp>& w, std::uint64_t seed);

struct DimensionOptions {
  int trials = 5;
  std::uint64_t seed = 1;
  Backend backend = Backend::finite_field;
  /// Singular values below float_tol * sigma_max count as zero.
  double float_tol = 1e-8;
  /// Extra samples beyond the parameter count.
  std::size_t sample_margin = 8;
  /// Entry bound for integer weights and samples in rational mode.
  int int_bound = 9;
};

struct DimensionReport {
  Architecture arch;
  std::uint64_t dim = 0;
  std::uint64_t edim = 0;
  BigInt ambient = 0;
  std::int64_t defect = 0;
  bool filling = false;
  int trials = 0;
  Backend backend = Backend::finite_field;
  std::uint64_t seed = 0;
  std::vector<std::size_t> trial_ranks;
  /// Smallest spectral gap among the trials reaching the maximum (float).
  double gap = 0.0;
  /// True when the value is proven: exact backends hitting edim.
  bool certified = false;
};

/// Dimension of the neurovariety: maximum Jacobian rank over `trials` random
/// weight vectors.
DimensionReport neurovariety_dim(const Architecture& arch, const DimensionOptions& opts = {});

/// Rank of the Jacobian at one random weight vector (trial index t).
std::size_t jacobian_rank_trial(const Architecture& arch, const DimensionOptions& opts, int t, double* gap = nullptr);

struct RecursiveBound {
  int split = 0;
  std::uint64_t left_dim = 0;
  std::uint64_t right_dim = 0;
  std::uint64_t bound = 0;
};

/// dim V_(d0..di) + dim V_(di..dL) - d_i for 1 <= i <= L-1.
RecursiveBound recursive_bound(const Architecture& arch, int split, const DimensionOptions& opts = {});
/// Minimum of the above over every split.
RecursiveBound recursive_bound_min(const Architecture& arch, const DimensionOptions& opts = {});

struct SweepOptions {
  int min_width = 1;
  int max_width = 3;
  int min_depth = 3;
  int max_depth = 4;
  int min_r = 2;
  int max_r = 5;
  bool non_increasing = true;
  bool multi_output = true;
  DimensionOptions dim;
};

/// Every architecture in range, in lexicographic (depth, widths, r) order.
std::vector<Architecture> sweep_architectures(const SweepOptions& opts);
std::vector<DimensionReport> conjecture_sweep(const SweepOptions& opts);

void write_dimension_csv_header(std::ostream& os);
void write_dimension_csv_row(std::ostream& os, const DimensionReport& r);

}  // namespace pnn
