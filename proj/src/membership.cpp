#include "pnn/membership.hpp"

#include <cmath>
#include <sstream>

namespace pnn {

std::string to_string(Tri t) {
  switch (t) {
    case Tri::yes:
      return "yes";
    case Tri::no:
      return "no";
    case Tri::unknown:
      return "unknown";
  }
  return "?";
}

namespace {

template <class T>
double max_abs(const Matrix<T>& m) {
  double s = 0.0;
  for (const auto& v : m.data()) s = std::max(s, magnitude(v));
  return s;
}

template <class T>
bool vanishes(const T& v, double bound) {
  if constexpr (is_exact_v<T>) {
    return is_zero(v);
  } else {
    return std::abs(v) <= bound;
  }
}

template <class T>
std::size_t rank_of(const Matrix<T>& m, double tol) {
  if constexpr (is_exact_v<T>) {
    return exact_rank(m);
  } else {
    return float_rank(m, tol).rank;
  }
}

/// First k x k minor that does not vanish, as a human-readable string.
template <class T>
std::string find_nonzero_minor(const Matrix<T>& m, std::size_t k, double bound, std::size_t budget = 200000) {
  std::string out;
  std::size_t seen = 0;
  for_each_minor_index(m.rows(), m.cols(), k, [&](std::span<const std::size_t> ri, std::span<const std::size_t> ci) {
    const T d = determinant(m.submatrix(ri, ci));
    if (!vanishes(d, bound)) {
      std::ostringstream os;
      os << k << "x" << k << " minor rows {";
      for (std::size_t i = 0; i < k; ++i) os << (i ? "," : "") << ri[i];
      os << "} cols {";
      for (std::size_t i = 0; i < k; ++i) os << (i ? "," : "") << ci[i];
      os << "} = " << to_string(d);
      out = os.str();
      return false;
    }
    return ++seen < budget;
  });
  return out;
}

}  // namespace

template <class T>
Matrix<T> gram_matrix(const BasicPoly<T>& p) {
  if (p.degree() != 2) throw std::invalid_argument("gram_matrix: polynomial must be quadratic");
  const auto n = static_cast<std::size_t>(p.n_vars());
  Matrix<T> g(n, n);
  for (const auto& [mono, c] : p.terms()) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < n; ++k)
      for (int e = 0; e < mono[k]; ++e) idx.push_back(k);
    if (idx[0] == idx[1]) {
      g(idx[0], idx[0]) = c;
    } else {
      const T half = c / T(2);
      g(idx[0], idx[1]) = half;
      g(idx[1], idx[0]) = half;
    }
  }
  return g;
}

template <class T>
MembershipVerdict member_shallow_single_output_r2(const BasicPoly<T>& p, int d1, double tol) {
  if (d1 < 1) throw std::invalid_argument("hidden width must be positive");
  MembershipVerdict v;
  v.tolerance = is_exact_v<T> ? 0.0 : tol;
  const Matrix<T> g = gram_matrix(p);
  if (static_cast<std::size_t>(d1) >= g.rows()) {
    v.in_variety = v.in_manifold = Tri::yes;
    v.certificate = "filling: hidden width is at least the number of inputs";
    return v;
  }
  const std::size_t rank = rank_of(g, tol);
  std::ostringstream os;
  os << "Gram matrix rank " << rank << ", bound " << d1;
  if (rank <= static_cast<std::size_t>(d1)) {
    v.in_variety = v.in_manifold = Tri::yes;
    v.certificate = os.str();
    return v;
  }
  v.in_variety = v.in_manifold = Tri::no;
  const double s = max_abs(g);
  const std::string minor =
      find_nonzero_minor(g, static_cast<std::size_t>(d1) + 1, tol * std::pow(s, static_cast<double>(d1 + 1)));
  if (!minor.empty()) os << "; nonzero " << minor;
  v.certificate = os.str();
  return v;
}

template <class T>
MembershipVerdict member_d0_1_d2(const std::vector<BasicPoly<T>>& polys, double tol) {
  if (polys.empty()) throw std::invalid_argument("member_d0_1_d2: no polynomials");
  const int n = polys.front().n_vars();
  const int r = polys.front().degree();
  for (const auto& p : polys)
    if (p.n_vars() != n || p.degree() != r) throw std::invalid_argument("member_d0_1_d2: inconsistent polynomials");
  MembershipVerdict v;
  v.tolerance = is_exact_v<T> ? 0.0 : tol;
  v.in_variety = v.in_manifold = Tri::yes;
  if (r == 0) {
    v.certificate = "constant outputs";
    return v;
  }
  std::vector<BasicSymTensor<T>> ts;
  double scale = 0.0;
  for (const auto& p : polys) {
    ts.push_back(poly_to_tensor(p));
    scale = std::max(scale, ts.back().scale());
  }
  if (scale == 0.0) {
    v.certificate = "zero tuple";
    return v;
  }
  const double bound = tol * scale * scale;
  const auto nn = static_cast<std::size_t>(n);
  const std::size_t d2 = polys.size();
  auto power = [](std::size_t b, int e) {
    std::size_t out = 1;
    for (int i = 0; i < e; ++i) out *= b;
    return out;
  };
  // Rows: s symmetric modes. Columns: the other r - s symmetric modes, then
  // the output mode (least significant).
  for (int s = 1; s <= r; ++s) {
    const std::size_t rows = power(nn, s);
    const std::size_t cols = power(nn, r - s) * d2;
    Matrix<T> m(rows, cols);
    std::vector<int> idx(static_cast<std::size_t>(r));
    for (std::size_t i = 0; i < rows; ++i) {
      std::size_t code = i;
      for (int p = s; p-- > 0;) {
        idx[static_cast<std::size_t>(p)] = static_cast<int>(code % nn);
        code /= nn;
      }
      for (std::size_t j = 0; j < cols; ++j) {
        std::size_t cj = j / d2;
        for (int p = r; p-- > s;) {
          idx[static_cast<std::size_t>(p)] = static_cast<int>(cj % nn);
          cj /= nn;
        }
        m(i, j) = ts[j % d2].at(idx);
      }
    }
    const std::string minor = find_nonzero_minor(m, 2, bound);
    if (!minor.empty()) {
      v.in_variety = v.in_manifold = Tri::no;
      v.certificate = "flattening with " + std::to_string(s) + " symmetric row mode(s): nonzero " + minor;
      return v;
    }
  }
  v.certificate = "all 2x2 minors of the stacked flattenings vanish";
  return v;
}

template <class T>
Matrix<T> quadric_matrix(const std::vector<BasicPoly<T>>& polys) {
  Matrix<T> c(polys.size(), 3);
  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (polys[i].n_vars() != 2 || polys[i].degree() != 2)
      throw std::invalid_argument("quadric_matrix: expected binary quadrics");
    const auto d = polys[i].dense();
    for (std::size_t j = 0; j < 3; ++j) c(i, j) = d[j];
  }
  return c;
}

template <class T>
VarietyCheck variety_member_22k(const Matrix<T>& c, double tol) {
  if (c.cols() != 3) throw std::invalid_argument("variety_member_22k: C must have 3 columns");
  VarietyCheck out;
  if (c.rows() < 3) {
    out.certificate = "fewer than three rows: no 3x3 minors";
    return out;
  }
  const double s = max_abs(c);
  const std::string minor = find_nonzero_minor(c, 3, tol * s * s * s);
  if (!minor.empty()) {
    out.member = false;
    out.certificate = "nonzero " + minor;
  } else {
    out.certificate = "all 3x3 minors vanish";
  }
  return out;
}

template <class T>
PairMinors<T> pair_minors(const Matrix<T>& c, std::size_t a, std::size_t b) {
  auto minor = [&](std::size_t i, std::size_t j) { return c(a, i) * c(b, j) - c(a, j) * c(b, i); };
  PairMinors<T> m{minor(0, 1), minor(0, 2), minor(1, 2), T(0)};
  m.discriminant = m.m13 * m.m13 - m.m12 * m.m23;
  return m;
}

namespace {

template <class T>
double frobenius4(const Matrix<T>& c, std::size_t a, std::size_t b) {
  double f = 0.0;
  for (std::size_t j = 0; j < c.cols(); ++j) {
    const double x = to_double(c(a, j));
    const double y = to_double(c(b, j));
    f += x * x + y * y;
  }
  return f * f;
}

/// Tri::yes when the pair satisfies the inequality, with the boundary flag.
template <class T>
Tri pair_verdict(const Matrix<T>& c, std::size_t a, std::size_t b, double tol, bool& boundary, std::string& detail) {
  const auto m = pair_minors(c, a, b);
  bool ok = false;
  if constexpr (is_exact_v<T>) {
    ok = m.discriminant >= 0;
    boundary = is_zero(m.discriminant);
  } else {
    const double band = tol * frobenius4(c, a, b);
    ok = m.discriminant >= -band;
    boundary = std::abs(m.discriminant) <= band;
  }
  std::ostringstream os;
  os << "rows {" << a << "," << b << "}: M12 = " << to_string(m.m12) << ", M13 = " << to_string(m.m13)
     << ", M23 = " << to_string(m.m23) << ", M13^2 - M12*M23 = " << to_string(m.discriminant);
  detail = os.str();
  return ok ? Tri::yes : Tri::no;
}

}  // namespace

template <class T>
MembershipVerdict manifold_member_222(const Matrix<T>& c, double tol) {
  if (c.rows() != 2 || c.cols() != 3) throw std::invalid_argument("manifold_member_222: C must be 2x3");
  MembershipVerdict v;
  v.tolerance = is_exact_v<T> ? 0.0 : tol;
  v.in_variety = Tri::yes;
  v.in_manifold = pair_verdict(c, 0, 1, tol, v.boundary, v.certificate);
  return v;
}

template <class T>
MembershipVerdict manifold_member_22k_pairwise(const Matrix<T>& c, double tol) {
  if (c.rows() < 2 || c.cols() != 3) throw std::invalid_argument("pairwise screen: C must be k x 3 with k >= 2");
  MembershipVerdict v;
  v.tolerance = is_exact_v<T> ? 0.0 : tol;
  const auto variety = variety_member_22k(c, tol);
  if (!variety.member) {
    v.in_variety = v.in_manifold = Tri::no;
    v.certificate = variety.certificate;
    return v;
  }
  v.in_variety = Tri::yes;
  for (std::size_t a = 0; a < c.rows(); ++a)
    for (std::size_t b = a + 1; b < c.rows(); ++b) {
      bool boundary = false;
      std::string detail;
      if (pair_verdict(c, a, b, tol, boundary, detail) == Tri::no) {
        v.in_manifold = Tri::no;
        v.certificate = "pair inequality violated, " + detail;
        return v;
      }
      v.boundary = v.boundary || boundary;
    }
  if (c.rows() == 2) {
    v.in_manifold = Tri::yes;
    v.certificate = "pair inequality holds";
  } else {
    v.in_manifold = Tri::unknown;
    v.certificate = "every row pair satisfies the necessary inequality";
  }
  return v;
}

template <class T>
Weights<T> exact_fit(const Architecture& arch, const std::vector<BasicPoly<T>>& target, std::uint64_t seed,
                     int max_attempts) {
  if (arch.depth() != 2) throw std::invalid_argument("exact_fit: needs a shallow architecture");
  const int n = arch.inputs();
  const int r = arch.r;
  const auto basis = enumerate_multiindices(n, r);
  const std::size_t N = basis.size();
  const auto d1 = static_cast<std::size_t>(arch.width(1));
  const auto d2 = static_cast<std::size_t>(arch.outputs());
  if (d1 < N) throw std::invalid_argument("exact_fit: hidden width below the number of monomials");
  if (target.size() != d2) throw std::invalid_argument("exact_fit: wrong number of target polynomials");
  Matrix<T> ct(N, d2);
  for (std::size_t j = 0; j < d2; ++j) {
    if (target[j].n_vars() != n || target[j].degree() != r) throw std::invalid_argument("exact_fit: target shape mismatch");
    const auto d = target[j].dense();
    for (std::size_t i = 0; i < N; ++i) ct(i, j) = d[i];
  }
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Weights<T> w(arch);
    if constexpr (std::is_same_v<T, double>) {
      w = random_weights(arch, rng);
    } else {
      w = random_integer_weights(arch, rng, 3 + attempt);
    }
    // Transposed Veronese block of the first N hidden neurons.
    Matrix<T> rt(N, N);
    for (std::size_t i = 0; i < N; ++i) {
      const auto row = w.layers[0].row(i);
      const std::vector<T> vec(row.begin(), row.end());
      const auto dense = power_form<T>(vec, r, T(1)).dense();
      for (std::size_t k = 0; k < N; ++k) rt(k, i) = dense[k];
    }
    std::optional<Matrix<T>> x;
    if constexpr (std::is_same_v<T, double>) {
      x = solve_float(rt, ct, 1e-12);
    } else {
      x = solve_exact(rt, ct);
    }
    if (!x) continue;
    auto& w2 = w.layers[1];
    for (std::size_t j = 0; j < d2; ++j)
      for (std::size_t i = 0; i < d1; ++i) w2(j, i) = i < N ? (*x)(i, j) : T(0);
    return w;
  }
  throw std::runtime_error("exact_fit: Veronese block singular after " + std::to_string(max_attempts) + " attempts");
}

ViolationExample known_rank1_violation_example(const Rational& a, const Rational& b, const Rational& s) {
  ViolationExample ex{Matrix<Rational>{{a, s, -a}, {b, s, -b}}, {}, {}};
  ex.manifold = manifold_member_222(ex.a);
  ex.variety = variety_member_22k(ex.a);
  return ex;
}

namespace {

template <class T>
MembershipVerdict membership_impl(const Architecture& arch, const std::vector<BasicPoly<T>>& polys, double tol,
                                  std::uint64_t seed) {
  if (polys.size() != static_cast<std::size_t>(arch.outputs()))
    throw std::invalid_argument("membership: expected " + std::to_string(arch.outputs()) + " polynomials");
  for (const auto& p : polys)
    if (p.n_vars() != arch.inputs() || p.degree() != arch.output_degree())
      throw std::invalid_argument("membership: polynomial shape does not match the architecture");
  if (arch.depth() != 2) throw std::invalid_argument("membership: only shallow architectures have a known description");
  const int d0 = arch.inputs();
  const int d1 = arch.width(1);
  const int d2 = arch.outputs();
  if (arch.r == 2 && d2 == 1) return member_shallow_single_output_r2(polys.front(), d1, tol);
  if (d1 == 1) return member_d0_1_d2(polys, tol);
  if (arch.r == 2 && d0 == 2 && d1 == 2) return manifold_member_22k_pairwise(quadric_matrix(polys), tol);
  if (static_cast<std::uint64_t>(d1) >= binomial_u64(static_cast<std::uint64_t>(d0 + arch.r - 1), static_cast<std::uint64_t>(arch.r))) {
    const auto w = exact_fit(arch, polys, seed);
    MembershipVerdict v;
    v.tolerance = is_exact_v<T> ? 0.0 : tol;
    v.in_variety = v.in_manifold = Tri::yes;
    std::ostringstream os;
    os << "filling; preimage weights:\n";
    write_weights(os, arch, w);
    v.certificate = os.str();
    return v;
  }
  throw std::invalid_argument("membership: no explicit description known for " + arch.to_string());
}

}  // namespace

MembershipVerdict membership(const Architecture& arch, const std::vector<RationalPoly>& polys, bool exact, double tol,
                             std::uint64_t seed) {
  if (exact) return membership_impl(arch, polys, tol, seed);
  std::vector<HomogeneousPoly> fp;
  for (const auto& p : polys) fp.push_back(to_double(p));
  return membership_impl(arch, fp, tol, seed);
}

#define PNN_INSTANTIATE(T)                                                                                        \
  template Matrix<T> gram_matrix<T>(const BasicPoly<T>&);                                                         \
  template MembershipVerdict member_shallow_single_output_r2<T>(const BasicPoly<T>&, int, double);               \
  template MembershipVerdict member_d0_1_d2<T>(const std::vector<BasicPoly<T>>&, double);                        \
  template Matrix<T> quadric_matrix<T>(const std::vector<BasicPoly<T>>&);                                         \
  template VarietyCheck variety_member_22k<T>(const Matrix<T>&, double);                                          \
  template PairMinors<T> pair_minors<T>(const Matrix<T>&, std::size_t, std::size_t);                              \
  template MembershipVerdict manifold_member_222<T>(const Matrix<T>&, double);                                    \
  template MembershipVerdict manifold_member_22k_pairwise<T>(const Matrix<T>&, double);                           \
  template Weights<T> exact_fit<T>(const Architecture&, const std::vector<BasicPoly<T>>&, std::uint64_t, int);

PNN_INSTANTIATE(double)
PNN_INSTANTIATE(Rational)

#undef PNN_INSTANTIATE

}  // namespace pnn
