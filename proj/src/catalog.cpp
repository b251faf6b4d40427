#include "pnn/catalog.hpp"

#include <algorithm>

namespace pnn {

std::string to_string(FactSource s) {
  switch (s) {
    case FactSource::table1:
      return "table-1";
    case FactSource::ah:
      return "AH";
    case FactSource::typical_rank:
      return "typical-rank";
    case FactSource::width1:
      return "width-1";
  }
  return "?";
}

std::string to_string(ClosureStatus s) {
  switch (s) {
    case ClosureStatus::strict:
      return "strict";
    case ClosureStatus::equal:
      return "equal";
    case ClosureStatus::unknown:
      return "unknown";
  }
  return "?";
}

std::optional<std::int64_t> KnownFact::defect() const {
  if (!dim) return std::nullopt;
  return static_cast<std::int64_t>(edim) - static_cast<std::int64_t>(*dim);
}

namespace {

struct Row {
  int d0, d1, d2;
  std::uint64_t dim, edim, ambient;
  bool m_eq_v;
  Confidence conf;
};

constexpr Confidence P = Confidence::proven;
constexpr Confidence R = Confidence::remark;

constexpr Row kTable1[] = {
    {1, 1, 1, 1, 1, 1, true, P},     {1, 1, 2, 2, 2, 2, true, P},     {1, 1, 3, 3, 3, 3, true, P},
    {1, 2, 1, 1, 1, 1, true, P},     {1, 2, 2, 2, 2, 2, true, P},     {1, 2, 3, 3, 3, 3, true, P},
    {1, 3, 1, 1, 1, 1, true, P},     {1, 3, 2, 2, 2, 2, true, P},     {1, 3, 3, 3, 3, 3, true, P},
    {2, 1, 1, 2, 2, 3, true, P},     {2, 1, 2, 3, 3, 6, true, P},     {2, 1, 3, 4, 4, 9, true, P},
    {2, 2, 1, 3, 3, 3, true, P},     {2, 2, 2, 6, 6, 6, false, P},    {2, 2, 3, 8, 8, 9, false, P},
    {2, 3, 1, 3, 3, 3, true, P},     {2, 3, 2, 6, 6, 6, true, P},     {2, 3, 3, 9, 9, 9, true, P},
    {3, 1, 1, 3, 3, 6, true, P},     {3, 1, 2, 4, 4, 12, true, P},    {3, 1, 3, 5, 5, 18, true, P},
    {3, 2, 1, 5, 6, 6, true, P},     {3, 2, 2, 8, 8, 12, false, R},   {3, 2, 3, 10, 10, 18, false, R},
    {3, 3, 1, 6, 6, 6, true, P},     {3, 3, 2, 12, 12, 12, false, P}, {3, 3, 3, 15, 15, 18, false, P},
};

std::uint64_t binom(std::uint64_t n, std::uint64_t k) { return binomial_u64(n, k); }

}  // namespace

const std::vector<KnownFact>& table1() {
  static const std::vector<KnownFact> rows = [] {
    std::vector<KnownFact> out;
    for (const auto& r : kTable1) {
      KnownFact f;
      f.arch = Architecture({r.d0, r.d1, r.d2}, 2);
      f.dim = r.dim;
      f.edim = r.edim;
      f.ambient = r.ambient;
      f.filling = r.dim == r.ambient;
      f.manifold_equals_variety = r.m_eq_v;
      f.confidence = r.conf;
      f.source = FactSource::table1;
      out.push_back(std::move(f));
    }
    return out;
  }();
  return rows;
}

bool ah_exceptional(int d0, int d1, int r) {
  if (r == 2) return d1 >= 2 && d1 < d0;
  return (r == 3 && d0 == 5 && d1 == 7) || (r == 4 && d0 == 3 && d1 == 5) || (r == 4 && d0 == 4 && d1 == 9) ||
         (r == 4 && d0 == 5 && d1 == 14);
}

std::uint64_t ah_expected_dim(int d0, int d1, int r) {
  if (d0 < 1 || d1 < 1 || r < 1) throw std::invalid_argument("ah_expected_dim: widths and degree must be positive");
  const auto a = static_cast<std::uint64_t>(d0);
  const auto b = static_cast<std::uint64_t>(d1);
  const std::uint64_t expected = std::min(a * b, binom(a + static_cast<std::uint64_t>(r) - 1, static_cast<std::uint64_t>(r)));
  if (!ah_exceptional(d0, d1, r)) return expected;
  if (r == 2) return a * b - b * (b - 1) / 2;
  return expected - 1;
}

Architecture width1_normalize(const Architecture& arch) {
  auto w = arch.widths;
  const auto L = w.size() - 1;
  std::size_t first = 0;
  for (std::size_t i = 1; i < L; ++i)
    if (w[i] == 1) {
      first = i;
      break;
    }
  if (first == 0) return arch;
  for (std::size_t i = first + 1; i < L; ++i) w[i] = 1;
  return Architecture(w, arch.r);
}

namespace {

std::optional<KnownFact> lookup_direct(const Architecture& arch) {
  for (const auto& f : table1())
    if (f.arch == arch) return f;
  if (arch.depth() == 2 && arch.outputs() == 1) {
    KnownFact f;
    f.arch = arch;
    f.dim = ah_expected_dim(arch.widths[0], arch.widths[1], arch.r);
    f.edim = arch.expected_dim();
    f.ambient = arch.ambient_dim();
    f.filling = *f.dim == f.ambient;
    f.source = FactSource::ah;
    return f;
  }
  return std::nullopt;
}

/// Dimension of the single-output prefix ending in a width-1 layer.
std::optional<std::uint64_t> prefix_dim(const std::vector<int>& prefix, int r) {
  if (prefix.size() == 2) return static_cast<std::uint64_t>(prefix[0]);  // one linear form
  const Architecture a(prefix, r);
  if (const auto f = lookup_direct(a); f && f->dim) return f->dim;
  return std::nullopt;
}

}  // namespace

std::optional<KnownFact> lookup(const Architecture& arch) {
  if (auto f = lookup_direct(arch)) return f;
  const auto L = arch.widths.size() - 1;
  std::size_t first = 0;
  for (std::size_t i = 1; i < L; ++i)
    if (arch.widths[i] == 1) {
      first = i;
      break;
    }
  if (first == 0) return std::nullopt;
  const std::vector<int> prefix(arch.widths.begin(), arch.widths.begin() + static_cast<std::ptrdiff_t>(first) + 1);
  const auto pd = prefix_dim(prefix, arch.r);
  if (!pd) return std::nullopt;
  KnownFact f;
  f.arch = arch;
  f.dim = *pd + static_cast<std::uint64_t>(arch.outputs()) - 1;
  f.edim = arch.expected_dim();
  f.ambient = arch.ambient_dim();
  f.filling = *f.dim == f.ambient;
  f.source = FactSource::width1;
  const auto norm = width1_normalize(arch);
  if (!(norm == arch)) f.rewritten_from = norm;
  return f;
}

std::optional<TypicalRankFact> typical_rank_filling(int d0, int d1, int r) {
  struct Family {
    int d0, r, threshold, equal_from;
    const char* chain;
  };
  // equal_from: smallest d1 whose closure is known to be the whole space.
  static constexpr Family kFamilies[] = {
      {2, 3, 2, 3, "cl M(2,2,1) < cl M(2,3,1) = Sym_3(R^2)"},
      {2, 4, 3, 4, "cl M(2,3,1) < cl M(2,4,1) = Sym_4(R^2)"},
      {2, 5, 3, 5, "cl M(2,3,1) < cl M(2,4,1) < cl M(2,5,1) = Sym_5(R^2)"},
      {3, 4, 6, 8, "cl M(3,6,1) < cl M(3,7,1) <= cl M(3,8,1) = Sym_4(R^3)"},
      {3, 5, 7, 13, "cl M(3,7,1) < cl M(3,8,1) <= ... <= cl M(3,13,1) = Sym_5(R^3)"},
      {4, 3, 5, 6, "cl M(4,5,1) < cl M(4,6,1) = Sym_3(R^4)"},
  };
  for (const auto& f : kFamilies) {
    if (f.d0 != d0 || f.r != r || d1 < f.threshold) continue;
    TypicalRankFact out;
    out.filling = true;
    out.chain = f.chain;
    if (d1 >= f.equal_from) out.closure = ClosureStatus::equal;
    else if (d1 == f.threshold) out.closure = ClosureStatus::strict;
    else if (d0 == 2 && r == 5 && d1 == 4) out.closure = ClosureStatus::strict;
    else out.closure = ClosureStatus::unknown;
    return out;
  }
  return std::nullopt;
}

bool conjecture_nonincreasing_applies(const Architecture& arch) {
  if (arch.outputs() <= 1) return false;
  for (std::size_t i = 1; i < arch.widths.size(); ++i)
    if (arch.widths[i] > arch.widths[i - 1]) return false;
  return true;
}

}  // namespace pnn
