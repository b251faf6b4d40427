#include "pnn/dimension.hpp"

#include <cmath>
#include <limits>

#include "pnn/parallel.hpp"

namespace pnn {

std::string to_string(Backend b) {
  switch (b) {
    case Backend::float_svd:
      return "float";
    case Backend::finite_field:
      return "ff";
    case Backend::rational:
      return "rat";
  }
  return "?";
}

Backend parse_backend(const std::string& text) {
  if (text == "float") return Backend::float_svd;
  if (text == "ff") return Backend::finite_field;
  if (text == "rat") return Backend::rational;
  throw std::invalid_argument("unknown backend '" + text + "' (expected float, ff or rat)");
}

namespace {

/// Scale rows, then columns, to unit max-abs so the SVD threshold is not
/// dominated by the spread of monomial magnitudes.
void equilibrate(Matrix<double>& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (const double v : m.row(i)) s = std::max(s, std::abs(v));
    if (s > 0.0)
      for (double& v : m.row(i)) v /= s;
  }
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s = std::max(s, std::abs(m(i, j)));
    if (s > 0.0)
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) /= s;
  }
}

std::size_t sample_count(const Architecture& arch, std::size_t margin) {
  const std::uint64_t p = arch.param_count() + margin;
  const BigInt n = arch.ambient_dim_big() / arch.outputs();
  if (n < p) return static_cast<std::size_t>(n);
  return static_cast<std::size_t>(p);
}

template <class T>
std::vector<std::vector<T>> draw_samples(const Architecture& arch, std::size_t count, Rng& rng, int bound) {
  std::vector<std::vector<T>> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) out.push_back(random_sample<T>(static_cast<std::size_t>(arch.inputs()), rng, bound));
  return out;
}

}  // namespace

JacobianReport jacobian_report(const Architecture& arch, const Weights<double>& w, std::uint64_t seed, double rel_tol) {
  const auto j = jacobian(arch, w, seed);
  auto m = j.matrix;
  equilibrate(m);
  const auto fr = float_rank(m, rel_tol);
  return {arch, j.sample_seed, Backend::float_svd, m.rows(), m.cols(), fr.rank, fr.gap, j.attempts};
}

JacobianReport jacobian_report(const Architecture& arch, const Weights<Rational>& w, std::uint64_t seed) {
  const auto j = jacobian(arch, w, seed);
  return {arch, j.sample_seed, Backend::rational, j.matrix.rows(), j.matrix.cols(), exact_rank(j.matrix), 0.0, j.attempts};
}

JacobianReport jacobian_report(const Architecture& arch, const Weights<Fp>& w, std::uint64_t seed) {
  const auto j = jacobian(arch, w, seed);
  return {arch, j.sample_seed, Backend::finite_field, j.matrix.rows(), j.matrix.cols(), exact_rank(j.matrix), 0.0,
          j.attempts};
}

std::size_t jacobian_rank_trial(const Architecture& arch, const DimensionOptions& opts, int t, double* gap) {
  Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(t)));
  const std::size_t count = sample_count(arch, opts.sample_margin);
  switch (opts.backend) {
    case Backend::finite_field: {
      const auto w = random_field_weights(arch, rng);
      const auto samples = draw_samples<Fp>(arch, count, rng, 0);
      return exact_rank(sampled_jacobian(arch, w, samples));
    }
    case Backend::rational: {
      const auto w = random_integer_weights(arch, rng, opts.int_bound);
      const auto samples = draw_samples<Rational>(arch, count, rng, opts.int_bound);
      return exact_rank(sampled_jacobian(arch, w, samples));
    }
    case Backend::float_svd: {
      const auto w = random_weights(arch, rng);
      const auto samples = draw_samples<double>(arch, count, rng, 0);
      auto m = sampled_jacobian(arch, w, samples);
      equilibrate(m);
      const auto fr = float_rank(m, opts.float_tol);
      if (gap != nullptr) *gap = fr.gap;
      return fr.rank;
    }
  }
  return 0;
}

DimensionReport neurovariety_dim(const Architecture& arch, const DimensionOptions& opts) {
  if (opts.trials < 1) throw std::invalid_argument("neurovariety_dim: trials must be at least 1");
  DimensionReport rep;
  rep.arch = arch;
  rep.edim = arch.expected_dim();
  rep.ambient = arch.ambient_dim_big();
  rep.trials = opts.trials;
  rep.backend = opts.backend;
  rep.seed = opts.seed;
  rep.gap = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;
  for (int t = 0; t < opts.trials; ++t) {
    double gap = std::numeric_limits<double>::infinity();
    rep.trial_ranks.push_back(jacobian_rank_trial(arch, opts, t, &gap));
    gaps.push_back(gap);
  }
  for (const auto r : rep.trial_ranks) rep.dim = std::max<std::uint64_t>(rep.dim, r);
  for (std::size_t t = 0; t < gaps.size(); ++t)
    if (rep.trial_ranks[t] == rep.dim) rep.gap = std::min(rep.gap, gaps[t]);
  rep.defect = static_cast<std::int64_t>(rep.edim) - static_cast<std::int64_t>(rep.dim);
  rep.filling = rep.ambient == rep.dim;
  rep.certified = opts.backend != Backend::float_svd && rep.dim == rep.edim;
  return rep;
}

RecursiveBound recursive_bound(const Architecture& arch, int split, const DimensionOptions& opts) {
  if (split < 1 || split > arch.depth() - 1) throw std::invalid_argument("recursive_bound: split must be in 1..L-1");
  const auto cut = static_cast<std::ptrdiff_t>(split);
  const Architecture left(std::vector<int>(arch.widths.begin(), arch.widths.begin() + cut + 1), arch.r);
  const Architecture right(std::vector<int>(arch.widths.begin() + cut, arch.widths.end()), arch.r);
  RecursiveBound b;
  b.split = split;
  b.left_dim = neurovariety_dim(left, opts).dim;
  b.right_dim = neurovariety_dim(right, opts).dim;
  b.bound = b.left_dim + b.right_dim - static_cast<std::uint64_t>(arch.width(split));
  return b;
}

RecursiveBound recursive_bound_min(const Architecture& arch, const DimensionOptions& opts) {
  if (arch.depth() < 2) throw std::invalid_argument("recursive_bound: needs at least two layers");
  RecursiveBound best;
  for (int i = 1; i < arch.depth(); ++i) {
    const auto b = recursive_bound(arch, i, opts);
    if (i == 1 || b.bound < best.bound) best = b;
  }
  return best;
}

std::vector<Architecture> sweep_architectures(const SweepOptions& opts) {
  std::vector<Architecture> out;
  for (int L = opts.min_depth; L <= opts.max_depth; ++L) {
    std::vector<int> w(static_cast<std::size_t>(L + 1), opts.min_width);
    while (true) {
      bool ok = true;
      if (opts.non_increasing)
        for (std::size_t i = 1; i < w.size(); ++i) ok = ok && w[i] <= w[i - 1];
      if (opts.multi_output) ok = ok && w.back() > 1;
      if (ok)
        for (int r = opts.min_r; r <= opts.max_r; ++r) out.emplace_back(w, r);
      std::size_t p = w.size();
      while (p > 0 && w[p - 1] == opts.max_width) w[--p] = opts.min_width;
      if (p == 0) break;
      ++w[p - 1];
    }
  }
  return out;
}

std::vector<DimensionReport> conjecture_sweep(const SweepOptions& opts) {
  const auto archs = sweep_architectures(opts);
  std::vector<DimensionReport> out(archs.size());
  parallel_for(archs.size(), [&](std::size_t i) { out[i] = neurovariety_dim(archs[i], opts.dim); });
  return out;
}

void write_dimension_csv_header(std::ostream& os) { os << "arch,r,dim,edim,ambient,defect,filling\n"; }

void write_dimension_csv_row(std::ostream& os, const DimensionReport& r) {
  os << r.arch.widths_string() << ',' << r.arch.r << ',' << r.dim << ',' << r.edim << ',' << r.ambient << ','
     << r.defect << ',' << (r.filling ? "yes" : "no") << '\n';
}

}  // namespace pnn
