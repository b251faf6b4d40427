#include "pnn/symtensor.hpp"

#include <numeric>
#include <sstream>

namespace pnn {

int MultiIndex::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

bool GradedLex::operator()(const MultiIndex& a, const MultiIndex& b) const {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  // Larger leading exponent first: (2,0) before (1,1) before (0,2).
  return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(), a.exponents.begin(),
                                      a.exponents.end());
}

std::vector<MultiIndex> enumerate_multiindices(int n_vars, int degree) {
  if (n_vars < 1) throw std::invalid_argument("enumerate_multiindices: n_vars must be positive");
  if (degree < 0) throw std::invalid_argument("enumerate_multiindices: negative degree");
  std::vector<MultiIndex> out;
  std::vector<int> e(static_cast<std::size_t>(n_vars), 0);
  // Depth-first, leading exponent descending.
  auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos + 1 == e.size()) {
      e[pos] = remaining;
      out.emplace_back(e);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      e[pos] = v;
      self(self, pos + 1, remaining - v);
    }
  };
  rec(rec, 0, degree);
  return out;
}

std::size_t graded_lex_rank(const MultiIndex& index) {
  // Count the monomials that precede `index`: for each position, those with a
  // larger exponent there and equal exponents before it.
  const std::size_t n = index.n_vars();
  int remaining = index.degree();
  std::size_t rank = 0;
  for (std::size_t pos = 0; pos + 1 < n; ++pos) {
    const std::size_t vars_after = n - pos - 1;
    for (int v = remaining; v > index[pos]; --v) {
      const int rest = remaining - v;
      rank += static_cast<std::size_t>(binomial_u64(static_cast<std::uint64_t>(rest) + vars_after - 1, vars_after - 1));
    }
    remaining -= index[pos];
  }
  return rank;
}

std::uint64_t multinomial(const MultiIndex& index) {
  // Product of binomials: binom(i1, i1) * binom(i1+i2, i2) * ...
  std::uint64_t acc = 1;
  std::uint64_t partial = 0;
  for (const int e : index.exponents) {
    if (e < 0) throw std::invalid_argument("multinomial: negative exponent");
    partial = checked_add(partial, static_cast<std::uint64_t>(e));
    acc = checked_mul(acc, binomial_u64(partial, static_cast<std::uint64_t>(e)));
  }
  return acc;
}

BigInt multinomial_big(const MultiIndex& index) {
  BigInt acc = 1;
  long long partial = 0;
  for (const int e : index.exponents) {
    if (e < 0) throw std::invalid_argument("multinomial: negative exponent");
    partial += e;
    acc *= binomial_big(partial, e);
  }
  return acc;
}

template <class T>
RankOneResult is_rank_one(const BasicSymTensor<T>& t, double tol) {
  RankOneResult res;
  if (t.is_zero()) {
    res.verdict = RankOneVerdict::zero;
    res.certificate = "zero tensor";
    return res;
  }
  const double scale = t.scale();
  const double bound = tol * scale * scale;
  res.verdict = RankOneVerdict::yes;
  // For a symmetric tensor the flattening only depends on how many modes go
  // to the rows, up to a permutation of rows and columns.
  for (int s = 1; s <= t.order() / 2; ++s) {
    std::vector<int> rows(static_cast<std::size_t>(s));
    std::iota(rows.begin(), rows.end(), 0);
    const auto f = flatten(t, rows);
    const auto& m = f.matrix;
    bool stop = false;
    for_each_minor_index(m.rows(), m.cols(), 2, [&](std::span<const std::size_t> ri, std::span<const std::size_t> ci) {
      const T minor = m(ri[0], ci[0]) * m(ri[1], ci[1]) - m(ri[0], ci[1]) * m(ri[1], ci[0]);
      const double mag = magnitude(minor);
      bool vanishes = false;
      if constexpr (is_exact_v<T>) {
        vanishes = is_zero(minor);
      } else {
        vanishes = mag <= bound;
      }
      res.worst_minor = std::max(res.worst_minor, mag);
      if (!vanishes) {
        res.verdict = RankOneVerdict::no;
        std::ostringstream os;
        os << "flattening with " << s << " row mode(s): minor rows {" << ri[0] << "," << ri[1] << "} cols {" << ci[0]
           << "," << ci[1] << "} = " << to_string(minor);
        res.certificate = os.str();
        stop = true;
        return false;
      }
      return true;
    });
    if (stop) break;
  }
  if (res.verdict == RankOneVerdict::yes) res.certificate = "all 2x2 flattening minors vanish";
  return res;
}

template RankOneResult is_rank_one<double>(const BasicSymTensor<double>&, double);
template RankOneResult is_rank_one<Rational>(const BasicSymTensor<Rational>&, double);

std::string format_monomial(const MultiIndex& m) {
  std::string s;
  for (std::size_t i = 0; i < m.n_vars(); ++i) {
    if (i != 0) s.push_back(',');
    s += std::to_string(m[i]);
  }
  return s;
}

namespace {

template <class T>
void write_poly_impl(std::ostream& os, const BasicPoly<T>& p) {
  os << p.n_vars() << ' ' << p.degree() << '\n';
  for (const auto& [m, c] : p.terms()) os << format_monomial(m) << '\t' << to_string(c) << '\n';
}

bool next_content_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

void write_poly(std::ostream& os, const RationalPoly& p) { write_poly_impl(os, p); }
void write_poly(std::ostream& os, const HomogeneousPoly& p) { write_poly_impl(os, p); }

std::optional<RationalPoly> read_poly(std::istream& is) {
  std::string line;
  if (!next_content_line(is, line)) return std::nullopt;
  std::istringstream header(line);
  int n = 0;
  int d = 0;
  if (!(header >> n >> d)) throw std::invalid_argument("polynomial header must be 'n_vars degree': " + line);
  RationalPoly p(n, d);
  // Monomial lines follow until the next header (a line without a tab).
  while (true) {
    const auto pos = is.tellg();
    std::string body;
    if (!next_content_line(is, body)) break;
    const auto tab = body.find('\t');
    if (tab == std::string::npos) {
      is.clear();
      is.seekg(pos);
      break;
    }
    std::vector<int> e;
    std::istringstream es(body.substr(0, tab));
    std::string part;
    while (std::getline(es, part, ',')) e.push_back(std::stoi(part));
    MultiIndex m(std::move(e));
    p.add(m, parse_rational(body.substr(tab + 1)));
  }
  return p;
}

std::vector<RationalPoly> read_polys(std::istream& is) {
  std::vector<RationalPoly> out;
  while (auto p = read_poly(is)) out.push_back(std::move(*p));
  return out;
}

RationalPoly to_rational(const HomogeneousPoly& p) {
  return p.map<Rational>([](double v) { return Rational(v); });
}

HomogeneousPoly to_double(const RationalPoly& p) {
  return p.map<double>([](const Rational& v) { return v.convert_to<double>(); });
}

}  // namespace pnn
