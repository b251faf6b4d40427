// Architectures, weights, the parameter map (weights -> coefficient vector),
// forward evaluation and the rescaling/permutation symmetry of hidden layers.
#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/scalar.hpp"
#include "pnn/symtensor.hpp"

namespace pnn {

/// Widths (d0, ..., dL) and activation degree r. Literal syntax "2-2-3:2".
struct Architecture {
  std::vector<int> widths;
  int r = 2;

  Architecture() = default;
  Architecture(std::vector<int> w, int degree);

  static Architecture parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
  /// Widths only, "2-2-3".
  [[nodiscard]] std::string widths_string() const;

  /// Number of weight matrices L.
  [[nodiscard]] int depth() const { return static_cast<int>(widths.size()) - 1; }
  [[nodiscard]] int width(int i) const { return widths[static_cast<std::size_t>(i)]; }
  [[nodiscard]] int inputs() const { return widths.front(); }
  [[nodiscard]] int outputs() const { return widths.back(); }

  /// r^(L-1); throws std::overflow_error when it does not fit in an int.
  [[nodiscard]] int output_degree() const;
  [[nodiscard]] std::uint64_t param_count() const;
  /// Coefficients per output polynomial, binom(d0 + deg - 1, deg).
  [[nodiscard]] std::uint64_t monomial_count() const;
  [[nodiscard]] std::uint64_t ambient_dim() const;
  [[nodiscard]] BigInt ambient_dim_big() const;
  /// min{ dL + sum (d_i d_{i+1} - d_{i+1}), ambient }.
  [[nodiscard]] std::uint64_t expected_dim() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// (W1, ..., WL), Wi of shape d_i x d_{i-1}. Flat order: layer by layer,
/// row-major inside a layer.
template <class T>
struct Weights {
  std::vector<Matrix<T>> layers;

  Weights() = default;
  explicit Weights(const Architecture& arch) {
    for (int i = 1; i <= arch.depth(); ++i)
      layers.emplace_back(static_cast<std::size_t>(arch.width(i)), static_cast<std::size_t>(arch.width(i - 1)));
  }

  [[nodiscard]] std::vector<T> flat() const {
    std::vector<T> out;
    for (const auto& m : layers) out.insert(out.end(), m.data().begin(), m.data().end());
    return out;
  }

  static Weights from_flat(const Architecture& arch, std::span<const T> values) {
    Weights w(arch);
    if (values.size() != arch.param_count()) throw std::invalid_argument("weights: wrong parameter count");
    std::size_t k = 0;
    for (auto& m : w.layers)
      for (auto& v : m.data()) v = values[k++];
    return w;
  }

  template <class U, class F>
  [[nodiscard]] Weights<U> map(F&& f) const {
    Weights<U> out;
    for (const auto& m : layers) out.layers.push_back(m.template map<U>(f));
    return out;
  }

  friend bool operator==(const Weights& a, const Weights& b) { return a.layers == b.layers; }
};

void check_shapes(const Architecture& arch, std::size_t n_layers, const std::vector<std::pair<std::size_t, std::size_t>>& shapes);

template <class T>
void check_weights(const Architecture& arch, const Weights<T>& w) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (const auto& m : w.layers) shapes.emplace_back(m.rows(), m.cols());
  check_shapes(arch, w.layers.size(), shapes);
}

/// p_w(x) = WL . rho_r . W_{L-1} . ... . rho_r . W1 x.
template <class T>
std::vector<T> forward(const Architecture& arch, const Weights<T>& w, std::span<const T> x) {
  check_weights(arch, w);
  if (x.size() != static_cast<std::size_t>(arch.inputs())) throw std::invalid_argument("forward: wrong input length");
  std::vector<T> a(x.begin(), x.end());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& m = w.layers[l];
    std::vector<T> z(m.rows(), T(0));
    for (std::size_t j = 0; j < m.rows(); ++j)
      for (std::size_t k = 0; k < m.cols(); ++k) z[j] += m(j, k) * a[k];
    if (l + 1 < w.layers.size())
      for (auto& v : z) v = pow_int(v, static_cast<std::uint64_t>(arch.r));
    a = std::move(z);
  }
  return a;
}

/// One homogeneous polynomial of degree r^(L-1) per output.
template <class T>
using CoefficientVector = std::vector<BasicPoly<T>>;

/// Concatenated dense coefficients: output blocks, graded-lex inside a block.
template <class T>
std::vector<T> flatten_coefficients(const CoefficientVector<T>& c) {
  std::vector<T> out;
  for (const auto& p : c) {
    const auto d = p.dense();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

template <class T>
CoefficientVector<T> unflatten_coefficients(const Architecture& arch, std::span<const T> flat) {
  const auto block = static_cast<std::size_t>(arch.monomial_count());
  if (flat.size() != block * static_cast<std::size_t>(arch.outputs()))
    throw std::invalid_argument("coefficient vector has wrong length");
  CoefficientVector<T> out;
  for (int j = 0; j < arch.outputs(); ++j)
    out.push_back(BasicPoly<T>::from_dense(arch.inputs(), arch.output_degree(),
                                           flat.subspan(static_cast<std::size_t>(j) * block, block)));
  return out;
}

/// Default guard for symbolic expansion.
inline constexpr std::uint64_t kDefaultCoefficientCap = 200000;

/// Symbolic layer-by-layer expansion of the network into coefficient form.
template <class T>
CoefficientVector<T> coefficients(const Architecture& arch, const Weights<T>& w,
                                  std::uint64_t max_ambient = kDefaultCoefficientCap) {
  check_weights(arch, w);
  if (arch.ambient_dim_big() > max_ambient) throw std::length_error("coefficients: ambient dimension exceeds cap");
  const int n = arch.inputs();
  std::vector<BasicPoly<T>> h;
  const auto& w1 = w.layers.front();
  for (std::size_t j = 0; j < w1.rows(); ++j) {
    BasicPoly<T> p(n, 1);
    for (std::size_t k = 0; k < w1.cols(); ++k) {
      std::vector<int> e(static_cast<std::size_t>(n), 0);
      e[k] = 1;
      p.set(MultiIndex(std::move(e)), w1(j, k));
    }
    h.push_back(std::move(p));
  }
  for (std::size_t l = 1; l < w.layers.size(); ++l) {
    const auto& m = w.layers[l];
    std::vector<BasicPoly<T>> powered;
    powered.reserve(h.size());
    for (const auto& p : h) powered.push_back(power(p, arch.r));
    const int deg = powered.front().degree();
    std::vector<BasicPoly<T>> next;
    for (std::size_t j = 0; j < m.rows(); ++j) {
      BasicPoly<T> acc(n, deg);
      for (std::size_t k = 0; k < m.cols(); ++k)
        if (!is_zero(m(j, k))) acc = acc + m(j, k) * powered[k];
      next.push_back(std::move(acc));
    }
    h = std::move(next);
  }
  return h;
}

/// Diagonal rescalings D_i and permutations P_i of the hidden layers
/// i = 1..L-1. P_i sends neuron j to position j: (P v)_j = v_{perm[j]}.
template <class T>
struct SymmetryElement {
  std::vector<std::vector<T>> diagonals;
  std::vector<std::vector<int>> permutations;

  static SymmetryElement identity(const Architecture& arch) {
    SymmetryElement g;
    for (int i = 1; i < arch.depth(); ++i) {
      g.diagonals.emplace_back(static_cast<std::size_t>(arch.width(i)), T(1));
      std::vector<int> p(static_cast<std::size_t>(arch.width(i)));
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = static_cast<int>(k);
      g.permutations.push_back(std::move(p));
    }
    return g;
  }
};

/// Replacement rules
///   W1 <- P1 D1 W1,  Wi <- Pi Di Wi D_{i-1}^{-r} P_{i-1}^T,  WL <- WL D_{L-1}^{-r} P_{L-1}^T.
template <class T>
Weights<T> apply_symmetry(const Architecture& arch, const Weights<T>& w, const SymmetryElement<T>& g) {
  check_weights(arch, w);
  const std::size_t hidden = static_cast<std::size_t>(arch.depth() - 1);
  if (g.diagonals.size() != hidden || g.permutations.size() != hidden)
    throw std::invalid_argument("symmetry element does not match the architecture");
  std::vector<std::vector<T>> inv_pow(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    const auto width = static_cast<std::size_t>(arch.width(static_cast<int>(i) + 1));
    if (g.diagonals[i].size() != width || g.permutations[i].size() != width)
      throw std::invalid_argument("symmetry element has wrong layer size");
    std::vector<bool> seen(width, false);
    for (const int p : g.permutations[i]) {
      if (p < 0 || static_cast<std::size_t>(p) >= width || seen[static_cast<std::size_t>(p)])
        throw std::invalid_argument("invalid permutation in symmetry element");
      seen[static_cast<std::size_t>(p)] = true;
    }
    for (const auto& d : g.diagonals[i]) {
      if (is_zero(d)) throw std::invalid_argument("singular diagonal in symmetry element");
      inv_pow[i].push_back(T(1) / pow_int(d, static_cast<std::uint64_t>(arch.r)));
    }
  }
  Weights<T> out(arch);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& m = w.layers[l];
    auto& o = out.layers[l];
    for (std::size_t j = 0; j < m.rows(); ++j) {
      // Row j of the new layer is old row perm[j], scaled by D_j.
      std::size_t src_row = j;
      T row_scale(1);
      if (l < hidden) {
        src_row = static_cast<std::size_t>(g.permutations[l][j]);
        row_scale = g.diagonals[l][src_row];
      }
      for (std::size_t k = 0; k < m.cols(); ++k) {
        std::size_t src_col = k;
        T col_scale(1);
        if (l > 0) {
          src_col = static_cast<std::size_t>(g.permutations[l - 1][k]);
          col_scale = inv_pow[l - 1][src_col];
        }
        o(j, k) = row_scale * m(src_row, src_col) * col_scale;
      }
    }
  }
  return out;
}

enum class InitKind { uniform, normal };

struct InitSpec {
  InitKind kind = InitKind::uniform;
  /// Uniform on [-scale, scale] or normal with standard deviation scale.
  double scale = 1.0;
};

Weights<double> random_weights(const Architecture& arch, Rng& rng, const InitSpec& spec = {});
/// Integer entries uniform in [-bound, bound].
Weights<Rational> random_integer_weights(const Architecture& arch, Rng& rng, int bound);
Weights<Fp> random_field_weights(const Architecture& arch, Rng& rng);

/// Text format:
///   arch 2-2-3:2
///   W1 2 2
///   <row-major entries, one row per line>
void write_weights(std::ostream& os, const Architecture& arch, const Weights<Rational>& w);
void write_weights(std::ostream& os, const Architecture& arch, const Weights<double>& w);
std::pair<Architecture, Weights<Rational>> read_weights(std::istream& is);

}  // namespace pnn
