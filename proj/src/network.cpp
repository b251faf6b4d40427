#include "pnn/network.hpp"

#include <sstream>

namespace pnn {

Architecture::Architecture(std::vector<int> w, int degree) : widths(std::move(w)), r(degree) {
  if (widths.size() < 2) throw std::invalid_argument("architecture needs at least two widths");
  for (const int d : widths)
    if (d < 1) throw std::invalid_argument("architecture widths must be positive");
  if (r < 1) throw std::invalid_argument("activation degree must be positive");
}

Architecture Architecture::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("architecture must look like d0-d1-...-dL:r, got " + text);
  std::vector<int> w;
  std::istringstream ws(text.substr(0, colon));
  std::string part;
  try {
    while (std::getline(ws, part, '-')) {
      std::size_t used = 0;
      w.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    }
    std::size_t used = 0;
    const std::string rs = text.substr(colon + 1);
    const int r = std::stoi(rs, &used);
    if (used != rs.size()) throw std::invalid_argument(rs);
    return {std::move(w), r};
  } catch (const std::logic_error&) {
    throw std::invalid_argument("architecture must look like d0-d1-...-dL:r, got " + text);
  }
}

std::string Architecture::widths_string() const {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i != 0) s.push_back('-');
    s += std::to_string(widths[i]);
  }
  return s;
}

std::string Architecture::to_string() const { return widths_string() + ":" + std::to_string(r); }

int Architecture::output_degree() const {
  std::uint64_t d = 1;
  for (int i = 1; i < depth(); ++i) d = checked_mul(d, static_cast<std::uint64_t>(r));
  if (d > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) throw std::overflow_error("output degree too large");
  return static_cast<int>(d);
}

std::uint64_t Architecture::param_count() const {
  std::uint64_t p = 0;
  for (int i = 0; i < depth(); ++i)
    p = checked_add(p, checked_mul(static_cast<std::uint64_t>(width(i)), static_cast<std::uint64_t>(width(i + 1))));
  return p;
}

std::uint64_t Architecture::monomial_count() const {
  const auto deg = static_cast<std::uint64_t>(output_degree());
  return binomial_u64(static_cast<std::uint64_t>(inputs()) + deg - 1, deg);
}

std::uint64_t Architecture::ambient_dim() const {
  return checked_mul(static_cast<std::uint64_t>(outputs()), monomial_count());
}

BigInt Architecture::ambient_dim_big() const {
  // Degree may be huge for deep networks; compute it as a BigInt too.
  BigInt deg = 1;
  for (int i = 1; i < depth(); ++i) deg *= r;
  // binom(d0 + deg - 1, d0 - 1) with d0 small.
  BigInt acc = 1;
  const int k = inputs() - 1;
  for (int i = 1; i <= k; ++i) {
    acc *= deg + i;
    acc /= i;
  }
  return acc * outputs();
}

std::uint64_t Architecture::expected_dim() const {
  long long e = outputs();
  for (int i = 0; i < depth(); ++i) e += static_cast<long long>(width(i)) * width(i + 1) - width(i + 1);
  const BigInt amb = ambient_dim_big();
  if (amb < e) return static_cast<std::uint64_t>(amb);
  return static_cast<std::uint64_t>(e);
}

void check_shapes(const Architecture& arch, std::size_t n_layers,
                  const std::vector<std::pair<std::size_t, std::size_t>>& shapes) {
  if (n_layers != static_cast<std::size_t>(arch.depth())) throw std::invalid_argument("weights: wrong number of layers");
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto rows = static_cast<std::size_t>(arch.width(static_cast<int>(i) + 1));
    const auto cols = static_cast<std::size_t>(arch.width(static_cast<int>(i)));
    if (shapes[i].first != rows || shapes[i].second != cols) {
      throw std::invalid_argument("weights: layer " + std::to_string(i + 1) + " has wrong shape");
    }
  }
}

Weights<double> random_weights(const Architecture& arch, Rng& rng, const InitSpec& spec) {
  Weights<double> w(arch);
  std::uniform_real_distribution<double> uni(-spec.scale, spec.scale);
  std::normal_distribution<double> gauss(0.0, spec.scale);
  for (auto& m : w.layers)
    for (auto& v : m.data()) v = spec.kind == InitKind::uniform ? uni(rng) : gauss(rng);
  return w;
}

Weights<Rational> random_integer_weights(const Architecture& arch, Rng& rng, int bound) {
  Weights<Rational> w(arch);
  std::uniform_int_distribution<int> dist(-bound, bound);
  for (auto& m : w.layers)
    for (auto& v : m.data()) v = dist(rng);
  return w;
}

Weights<Fp> random_field_weights(const Architecture& arch, Rng& rng) {
  Weights<Fp> w(arch);
  std::uniform_int_distribution<std::uint64_t> dist(0, Fp::kModulus - 1);
  for (auto& m : w.layers)
    for (auto& v : m.data()) v = Fp::from_raw(dist(rng));
  return w;
}

namespace {

template <class T>
void write_weights_impl(std::ostream& os, const Architecture& arch, const Weights<T>& w) {
  check_weights(arch, w);
  os << "arch " << arch.to_string() << '\n';
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& m = w.layers[l];
    os << 'W' << (l + 1) << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) os << (j == 0 ? "" : " ") << to_string(m(i, j));
      os << '\n';
    }
  }
}

}  // namespace

void write_weights(std::ostream& os, const Architecture& arch, const Weights<Rational>& w) {
  write_weights_impl(os, arch, w);
}

void write_weights(std::ostream& os, const Architecture& arch, const Weights<double>& w) {
  write_weights_impl(os, arch, w);
}

std::pair<Architecture, Weights<Rational>> read_weights(std::istream& is) {
  std::string tag;
  std::string arch_text;
  if (!(is >> tag >> arch_text) || tag != "arch") throw std::invalid_argument("weights file must start with 'arch'");
  const Architecture arch = Architecture::parse(arch_text);
  Weights<Rational> w(arch);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(is >> tag >> rows >> cols) || tag != "W" + std::to_string(l + 1))
      throw std::invalid_argument("weights file: expected header W" + std::to_string(l + 1));
    auto& m = w.layers[l];
    if (rows != m.rows() || cols != m.cols()) throw std::invalid_argument("weights file: layer shape mismatch");
    for (auto& v : m.data()) {
      std::string lit;
      if (!(is >> lit)) throw std::invalid_argument("weights file: truncated matrix");
      v = parse_rational(lit);
    }
  }
  return {arch, std::move(w)};
}

}  // namespace pnn
