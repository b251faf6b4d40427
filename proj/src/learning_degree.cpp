#include "pnn/learning_degree.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pnn/parallel.hpp"

namespace pnn {

TruncatedHPoly::TruncatedHPoly(std::size_t m, std::vector<BigInt> beta) : beta_(std::move(beta)) {
  if (beta_.size() != m) throw std::invalid_argument("TruncatedHPoly: coefficient count must equal the truncation");
}

TruncatedHPoly TruncatedHPoly::monomial(std::size_t m, long long e, const BigInt& c) {
  TruncatedHPoly p(m);
  if (e >= 0 && static_cast<std::size_t>(e) < m) p.beta_[static_cast<std::size_t>(e)] = c;
  return p;
}

BigInt TruncatedHPoly::coeff(long long l) const {
  if (l < 0 || static_cast<std::size_t>(l) >= beta_.size()) return 0;
  return beta_[static_cast<std::size_t>(l)];
}

TruncatedHPoly operator+(const TruncatedHPoly& a, const TruncatedHPoly& b) {
  if (a.length() != b.length()) throw std::invalid_argument("TruncatedHPoly: truncation mismatch");
  TruncatedHPoly out = a;
  for (std::size_t i = 0; i < b.length(); ++i) out.beta_[i] += b.beta_[i];
  return out;
}

TruncatedHPoly operator*(const TruncatedHPoly& a, const TruncatedHPoly& b) {
  if (a.length() != b.length()) throw std::invalid_argument("TruncatedHPoly: truncation mismatch");
  const std::size_t m = a.length();
  TruncatedHPoly out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (a.beta_[i] == 0) continue;
    for (std::size_t j = 0; i + j < m; ++j) out.beta_[i + j] += a.beta_[i] * b.beta_[j];
  }
  return out;
}

TruncatedHPoly operator*(const BigInt& s, const TruncatedHPoly& a) {
  TruncatedHPoly out = a;
  for (auto& v : out.beta_) v *= s;
  return out;
}

std::string TruncatedHPoly::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t l = 0; l < beta_.size(); ++l) {
    if (beta_[l] == 0) continue;
    if (!first) os << (beta_[l] < 0 ? " - " : " + ");
    else if (beta_[l] < 0) os << '-';
    first = false;
    os << (beta_[l] < 0 ? BigInt(-beta_[l]) : beta_[l]) << "*H^" << l;
  }
  if (first) os << '0';
  return os.str();
}

double MomentForm::loss(std::span<const double> rho, std::span<const double> phi) const {
  const std::size_t n = block.rows();
  if (rho.size() != n || phi.size() != n) throw std::invalid_argument("MomentForm::loss: wrong block length");
  double acc = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) acc += (rho[a] - phi[a]) * block(a, b) * (rho[b] - phi[b]);
  return acc;
}

double MomentForm::total_loss(std::span<const double> rho, std::span<const double> phi) const {
  const std::size_t n = block.rows();
  if (rho.size() != phi.size() || rho.size() % n != 0) throw std::invalid_argument("MomentForm::total_loss: bad length");
  double acc = 0.0;
  for (std::size_t off = 0; off < rho.size(); off += n) acc += loss(rho.subspan(off, n), phi.subspan(off, n));
  return acc;
}

Matrix<double> MomentForm::full_matrix(std::size_t outputs) const {
  const std::size_t n = block.rows();
  Matrix<double> out(n * outputs, n * outputs);
  for (std::size_t o = 0; o < outputs; ++o)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) out(o * n + a, o * n + b) = block(a, b);
  return out;
}

MomentForm moment_form(const std::vector<std::vector<double>>& samples, int degree) {
  if (samples.empty()) throw std::invalid_argument("moment_form: no samples");
  MomentForm e;
  e.n_vars = static_cast<int>(samples.front().size());
  e.degree = degree;
  e.samples_used = samples.size();
  const auto basis = enumerate_multiindices(e.n_vars, degree);
  const std::size_t n = basis.size();
  e.block = Matrix<double>(n, n);
  std::vector<double> v(n);
  for (const auto& x : samples) {
    if (x.size() != static_cast<std::size_t>(e.n_vars)) throw std::invalid_argument("moment_form: ragged samples");
    for (std::size_t a = 0; a < n; ++a) {
      double m = 1.0;
      for (std::size_t k = 0; k < x.size(); ++k) m *= std::pow(x[k], basis[a][k]);
      v[a] = m;
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) e.block(a, b) += v[a] * v[b];
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& x : e.block.data()) x *= inv;
  return e;
}

BigInt eddeg_closed_form(long long k) {
  if (k < 2) throw std::invalid_argument("eddeg: k must be at least 2");
  const BigInt kk = k;
  return 8 * kk * kk - 12 * kk + 3;
}

TruncatedHPoly chern_mather_22k(long long k) {
  if (k < 2) throw std::invalid_argument("chern_mather_22k: k must be at least 2");
  const auto n = static_cast<std::size_t>(2 * k + 1);
  const auto m = static_cast<std::size_t>(3 * k);
  const BigInt kk = k;

  Matrix<BigInt> a(n, n);
  a(0, 0) = 3;
  a(0, 1) = 3 * kk;
  a(0, 2) = kk * (kk - 1) / 2;
  a(1, 1) = -3 * kk;
  a(1, 2) = -kk * kk;
  a(2, 2) = kk * (kk + 1) / 2;

  Matrix<BigInt> b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      b(i, j) = binomial_big(2 * k - static_cast<long long>(j), static_cast<long long>(i - j));

  // trace(A H B) = sum_{i,j,c} A_{i,j} H_{j,c} B_{c,i} with H_{j,c} = H^(k+c-j).
  std::vector<BigInt> beta(m, BigInt(0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) == 0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        const long long e = k + static_cast<long long>(c) - static_cast<long long>(j);
        if (e < 0 || e >= static_cast<long long>(m) || b(c, i) == 0) continue;
        beta[static_cast<std::size_t>(e)] += a(i, j) * b(c, i);
      }
    }
  const TruncatedHPoly trace(m, std::move(beta));
  return trace;
}

TruncatedHPoly chern_mather_22k_diagonal(long long k) {
  if (k < 2) throw std::invalid_argument("chern_mather_22k: k must be at least 2");
  const auto m = static_cast<std::size_t>(3 * k);
  const BigInt kk = k;
  auto c = [](long long nn, long long r) { return binomial_big(nn, r); };
  TruncatedHPoly out(m);
  for (long long j = -2; j <= 2 * k - 1; ++j) {
    const BigInt v = 3 * c(2 * k, j) + 3 * kk * (c(2 * k, j + 1) - c(2 * k - 1, j)) +
                     kk * (kk - 1) / 2 * c(2 * k, j + 2) + kk * (kk + 1) / 2 * c(2 * k - 2, j) -
                     kk * kk * c(2 * k - 1, j + 1);
    out += TruncatedHPoly::monomial(m, k + j, v);
  }
  return out;
}

BigInt eddeg_polar_sum(long long k) {
  const auto beta = chern_mather_22k(k);
  const long long M = 2 * (k + 1);
  BigInt total = 0;
  for (long long l = 0; l < M; ++l)
    for (long long i = 0; i <= l; ++i) {
      const BigInt term = binomial_big(M - i, M - l) * beta.coeff(k - 2 + i);
      total += (i % 2 == 0) ? term : BigInt(-term);
    }
  return total;
}

BigInt eddeg_polar_sum_rearranged(long long k) {
  const auto beta = chern_mather_22k(k);
  const long long M = 2 * (k + 1);
  BigInt total = 0;
  for (long long i = 0; i < M; ++i) {
    const BigInt weight = (BigInt(1) << static_cast<unsigned>(M - i)) - 1;
    const BigInt term = weight * beta.coeff(k - 2 + i);
    total += (i % 2 == 0) ? term : BigInt(-term);
  }
  return total;
}

std::size_t CriticalCensus::regular_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.regular ? 1 : 0;
  return n;
}

Matrix<double> random_spd(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix<double> a(n, n);
  for (auto& v : a.data()) v = g(rng);
  Matrix<double> s = a.transpose() * a;
  for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.1 * static_cast<double>(n);
  return s;
}

namespace {

/// Reduced problem on the two hidden directions: W1 rows are unit vectors at
/// angles theta, W2 is the E-weighted least-squares optimum for the given W1.
struct ReducedLoss {
  const Matrix<double>& phi;
  const Matrix<double>& e;

  struct Eval {
    double value = 0.0;
    double grad[2] = {0.0, 0.0};
    Matrix<double> c;
    bool degenerate = false;
  };

  [[nodiscard]] Eval operator()(const double theta[2]) const {
    Eval out;
    const std::size_t k = phi.rows();
    Matrix<double> r(2, 3);
    double dr[2][3];
    for (std::size_t m = 0; m < 2; ++m) {
      const double c = std::cos(theta[m]);
      const double s = std::sin(theta[m]);
      r(m, 0) = c * c;
      r(m, 1) = 2 * c * s;
      r(m, 2) = s * s;
      dr[m][0] = -2 * c * s;
      dr[m][1] = 2 * (c * c - s * s);
      dr[m][2] = 2 * c * s;
    }
    const Matrix<double> er = e * r.transpose();  // 3 x 2
    const Matrix<double> s = r * er;               // 2 x 2
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    const double scale = s(0, 0) * s(1, 1);
    if (!(std::abs(det) > 1e-14 * scale)) {
      out.degenerate = true;
      return out;
    }
    const Matrix<double> sinv{{s(1, 1) / det, -s(0, 1) / det}, {-s(1, 0) / det, s(0, 0) / det}};
    const Matrix<double> w2 = phi * er * sinv;  // k x 2
    out.c = w2 * r;
    Matrix<double> diff(k, 3);
    for (std::size_t i = 0; i < k * 3; ++i) diff.data()[i] = out.c.data()[i] - phi.data()[i];
    const Matrix<double> de = diff * e;
    for (std::size_t i = 0; i < k * 3; ++i) out.value += de.data()[i] * diff.data()[i];
    const Matrix<double> dldr = w2.transpose() * de;  // 2 x 3, times 2 below
    for (std::size_t m = 0; m < 2; ++m) {
      double g = 0.0;
      for (std::size_t j = 0; j < 3; ++j) g += 2.0 * dldr(m, j) * dr[m][j];
      out.grad[m] = g;
    }
    return out;
  }
};

struct StartResult {
  bool converged = false;
  /// Angle between the two hidden directions, folded into [0, pi/2].
  double gap = 0.0;
  Matrix<double> c;
  double loss = 0.0;
};

StartResult run_start(const ReducedLoss& f, Rng& rng, const CensusOptions& opts, double loss_scale) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  double th[2] = {angle(rng), angle(rng)};
  auto cur = f(th);
  StartResult res;
  const auto fold = [&] {
    const double d = std::fmod(std::abs(th[0] - th[1]), std::numbers::pi);
    res.gap = std::min(d, std::numbers::pi - d);
  };
  if (cur.degenerate) {
    fold();
    return res;
  }
  double step = 1e-2;
  double prev_th[2] = {th[0], th[1]};
  double prev_g[2] = {cur.grad[0], cur.grad[1]};
  const double tol = opts.grad_tol * std::max(loss_scale, std::numeric_limits<double>::min());
  double best = cur.value;
  int flat_iters = 0;
  int merged_iters = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const double gn2 = cur.grad[0] * cur.grad[0] + cur.grad[1] * cur.grad[1];
    // Loss flat to rounding: the gradient cannot be resolved below its noise floor.
    const bool stalled = flat_iters >= 50 && std::sqrt(gn2) <= 1e3 * tol;
    if (std::sqrt(gn2) <= tol || stalled) {
      res.converged = true;
      res.c = cur.c;
      res.loss = cur.value;
      fold();
      return res;
    }
    if (it > 0) {
      // Barzilai-Borwein trial step.
      const double sx = th[0] - prev_th[0];
      const double sy = th[1] - prev_th[1];
      const double yx = cur.grad[0] - prev_g[0];
      const double yy = cur.grad[1] - prev_g[1];
      const double sty = sx * yx + sy * yy;
      if (sty > 0) step = (sx * sx + sy * sy) / sty;
    }
    step = std::min(step, 10.0);
    prev_th[0] = th[0];
    prev_th[1] = th[1];
    prev_g[0] = cur.grad[0];
    prev_g[1] = cur.grad[1];
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const double trial[2] = {th[0] - step * cur.grad[0], th[1] - step * cur.grad[1]};
      auto next = f(trial);
      if (!next.degenerate && next.value <= cur.value - 1e-4 * step * gn2) {
        th[0] = trial[0];
        th[1] = trial[1];
        cur = std::move(next);
        accepted = true;
        fold();
        merged_iters = res.gap < opts.merge_angle ? merged_iters + 1 : 0;
        if (merged_iters >= 500) return res;
        if (cur.value < best * (1.0 - 1e-14)) {
          best = cur.value;
          flat_iters = 0;
        } else {
          ++flat_iters;
        }
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent possible at machine precision: accept as converged when
      // the gradient is already small relative to the loss scale.
      if (std::sqrt(gn2) <= 1e3 * tol) {
        res.converged = true;
        res.c = cur.c;
        res.loss = cur.value;
      }
      fold();
      return res;
    }
  }
  fold();
  return res;
}

double frobenius(const Matrix<double>& m) {
  double s = 0.0;
  for (const double v : m.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

CriticalCensus critical_census(const Matrix<double>& target, const Matrix<double>& e, const CensusOptions& opts) {
  if (opts.starts < 1) throw std::invalid_argument("critical_census: starts must be at least 1");
  if (target.cols() != 3 || e.rows() != 3 || e.cols() != 3)
    throw std::invalid_argument("critical_census: expects a k x 3 target and a 3 x 3 weight block");
  const ReducedLoss f{target, e};
  double loss_scale = 0.0;
  {
    const Matrix<double> te = target * e;
    for (std::size_t i = 0; i < te.data().size(); ++i) loss_scale += te.data()[i] * target.data()[i];
  }
  const auto n = static_cast<std::size_t>(opts.starts);
  std::vector<StartResult> results(n);
  parallel_for(n, [&](std::size_t s) {
    Rng rng(derive_seed(opts.seed, s));
    results[s] = run_start(f, rng, opts, loss_scale);
  });

  CriticalCensus census;
  census.starts = opts.starts;
  census.seed = opts.seed;
  census.cluster_tol = opts.cluster_tol;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& r = results[s];
    if (!r.converged) {
      census.non_convergent.push_back(s);
      if (r.gap < opts.merge_angle) census.merged.push_back(s);
      continue;
    }
    bool merged = false;
    for (auto& p : census.points) {
      Matrix<double> d = r.c;
      for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] -= p.coefficients.data()[i];
      const double denom = std::max({frobenius(r.c), frobenius(p.coefficients), 1e-300});
      if (frobenius(d) / denom < opts.cluster_tol) {
        ++p.multiplicity;
        merged = true;
        break;
      }
    }
    if (merged) continue;
    CriticalPoint p;
    p.coefficients = r.c;
    p.loss = r.loss;
    p.multiplicity = 1;
    p.first_start = s;
    p.rank = float_rank(r.c, opts.rank_tol).rank;
    p.regular = p.rank == 2;
    census.points.push_back(std::move(p));
  }
  return census;
}

}  // namespace pnn
