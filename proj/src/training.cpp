#include "pnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pnn/dimension.hpp"
#include "pnn/parallel.hpp"

namespace pnn {

ExperimentConfig ExperimentConfig::desk_scale() {
  ExperimentConfig c;
  c.num_datasets = 500;
  c.max_epochs = 4000;
  return c;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("experiment config: ") + what);
  };
  need(num_datasets > 0, "num_datasets must be positive");
  need(points_per_dataset > 0, "points_per_dataset must be positive");
  need(input_lo < input_hi, "input_lo must be below input_hi");
  need(lr0 > 0.0, "lr0 must be positive");
  need(lr_halving_period > 0, "lr_halving_period must be positive");
  need(max_epochs > 0, "max_epochs must be positive");
  need(grad_norm_threshold > 0.0, "grad_norm_threshold must be positive");
  need(cluster_eps > 0.0, "cluster_eps must be positive");
  need(perturbation_eps > 0.0, "perturbation_eps must be positive");
  need(num_perturbations > 0, "num_perturbations must be positive");
  need(frequency_floor > 0, "frequency_floor must be positive");
  need(rank_tol > 0.0, "rank_tol must be positive");
  need(init_std > 0.0, "init_std must be positive");
  need(clip_norm >= 0.0, "clip_norm must be nonnegative");
  need(batch_size >= 0 && batch_size <= points_per_dataset, "batch_size must be in [0, points_per_dataset]");
}

namespace {

using nlohmann::json;

json to_json(const ExperimentConfig& c) {
  return json{{"num_datasets", c.num_datasets},
              {"points_per_dataset", c.points_per_dataset},
              {"input_lo", c.input_lo},
              {"input_hi", c.input_hi},
              {"lr0", c.lr0},
              {"lr_halving_period", c.lr_halving_period},
              {"max_epochs", c.max_epochs},
              {"grad_norm_threshold", c.grad_norm_threshold},
              {"cluster_eps", c.cluster_eps},
              {"perturbation_eps", c.perturbation_eps},
              {"num_perturbations", c.num_perturbations},
              {"frequency_floor", c.frequency_floor},
              {"rank_tol", c.rank_tol},
              {"init_std", c.init_std},
              {"clip_norm", c.clip_norm},
              {"batch_size", c.batch_size},
              {"shared_target", c.shared_target},
              {"seed", c.seed}};
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("experiment config: expected a JSON object");
  ExperimentConfig c;
  if (j.contains("profile")) {
    const auto p = j.at("profile").get<std::string>();
    if (p == "desk") c = ExperimentConfig::desk_scale();
    else if (p == "paper") c = ExperimentConfig::paper_scale();
    else throw std::invalid_argument("experiment config: unknown profile '" + p + "'");
  }
  const json known = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (key == "profile") continue;
    if (!known.contains(key)) throw std::invalid_argument("experiment config: unknown key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("num_datasets", c.num_datasets);
  get("points_per_dataset", c.points_per_dataset);
  get("input_lo", c.input_lo);
  get("input_hi", c.input_hi);
  get("lr0", c.lr0);
  get("lr_halving_period", c.lr_halving_period);
  get("max_epochs", c.max_epochs);
  get("grad_norm_threshold", c.grad_norm_threshold);
  get("cluster_eps", c.cluster_eps);
  get("perturbation_eps", c.perturbation_eps);
  get("num_perturbations", c.num_perturbations);
  get("frequency_floor", c.frequency_floor);
  get("rank_tol", c.rank_tol);
  get("init_std", c.init_std);
  get("clip_norm", c.clip_norm);
  get("batch_size", c.batch_size);
  get("shared_target", c.shared_target);
  get("seed", c.seed);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) { return to_json(c).dump(2); }

const Architecture& experiment_arch() {
  static const Architecture arch({2, 2, 3}, 2);
  return arch;
}

Matrix<double> random_target(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix<double> c(3, 3);
  for (auto& v : c.data()) v = g(rng);
  return c;
}

namespace {

Dataset make_dataset(std::uint64_t seed, const ExperimentConfig& config, const Matrix<double>* target) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(config.points_per_dataset);
  Dataset d;
  d.seed = seed;
  d.x = Matrix<double>(n, 2);
  std::uniform_real_distribution<double> u(config.input_lo, config.input_hi);
  for (auto& v : d.x.data()) v = u(rng);
  d.c = target != nullptr ? *target : random_target(rng);
  d.y = Matrix<double>(n, 3);
  for (std::size_t s = 0; s < n; ++s) {
    const double x1 = d.x(s, 0);
    const double x2 = d.x(s, 1);
    for (std::size_t j = 0; j < 3; ++j) d.y(s, j) = d.c(j, 0) * x1 * x1 + d.c(j, 1) * x1 * x2 + d.c(j, 2) * x2 * x2;
  }
  return d;
}

/// Loss and gradient over the listed points; grad is overwritten.
double batch_gradient(Backprop<double>& bp, const Weights<double>& w, const Dataset& data,
                      std::span<const std::size_t> points, std::vector<double>& grad) {
  grad.assign(experiment_arch().param_count(), 0.0);
  std::vector<double> g(grad.size());
  std::vector<double> seed(3);
  const double inv_n = 1.0 / static_cast<double>(points.size());
  double loss = 0.0;
  for (const std::size_t s : points) {
    bp.forward(w, data.x.row(s));
    const auto out = bp.output();
    for (std::size_t j = 0; j < 3; ++j) {
      const double e = out[j] - data.y(s, j);
      loss += e * e;
      seed[j] = 2.0 * e * inv_n;
    }
    bp.backward(w, seed, g);
    for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
  }
  return loss * inv_n;
}

std::vector<std::size_t> all_points(const Dataset& data) {
  std::vector<std::size_t> idx(data.x.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::abs(x));
  return m;
}

void step(Weights<double>& w, const std::vector<double>& grad, double lr) {
  std::size_t k = 0;
  for (auto& m : w.layers)
    for (auto& v : m.data()) v -= lr * grad[k++];
}

bool finite(const Weights<double>& w) {
  for (const auto& m : w.layers)
    for (const double v : m.data())
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

Dataset generate_dataset(std::uint64_t seed, const ExperimentConfig& config) {
  return make_dataset(seed, config, nullptr);
}

Dataset generate_dataset(std::uint64_t seed, const ExperimentConfig& config, const Matrix<double>& target) {
  if (target.rows() != 3 || target.cols() != 3) throw std::invalid_argument("generate_dataset: target must be 3 x 3");
  return make_dataset(seed, config, &target);
}

double mse_loss(const Weights<double>& w, const Dataset& data) {
  std::vector<double> grad;
  return loss_gradient(w, data, grad);
}

double loss_gradient(const Weights<double>& w, const Dataset& data, std::vector<double>& grad) {
  check_weights(experiment_arch(), w);
  Backprop<double> bp(experiment_arch());
  const auto idx = all_points(data);
  return batch_gradient(bp, w, data, idx, grad);
}

TrainedRun train_from(const Dataset& data, const ExperimentConfig& config, Weights<double> w) {
  check_weights(experiment_arch(), w);
  TrainedRun run;
  run.dataset_seed = data.seed;
  run.c = data.c;
  Backprop<double> bp(experiment_arch());
  const auto idx = all_points(data);
  const std::size_t batch =
      config.batch_size == 0 ? idx.size() : static_cast<std::size_t>(config.batch_size);
  Rng shuffle_rng(derive_seed(data.seed, 0x5eed));
  std::vector<std::size_t> order = idx;
  std::vector<double> grad;
  run.epochs = config.max_epochs;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = config.lr0 * std::ldexp(1.0, -(epoch / config.lr_halving_period));
    const double loss = batch_gradient(bp, w, data, idx, grad);
    if (!std::isfinite(loss) || !finite(w)) {
      run.failed = true;
      run.fail_epoch = epoch;
      run.epochs = epoch;
      break;
    }
    if (max_abs(grad) < config.grad_norm_threshold) {
      run.converged = true;
      run.epochs = epoch;
      break;
    }
    if (batch < idx.size()) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < idx.size(); start += batch) {
      if (batch < idx.size()) {
        const std::size_t len = std::min(batch, idx.size() - start);
        batch_gradient(bp, w, data, std::span<const std::size_t>(order).subspan(start, len), grad);
      }
      if (config.clip_norm > 0.0) {
        double norm = 0.0;
        for (const double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > config.clip_norm)
          for (double& g : grad) g *= config.clip_norm / norm;
      }
      step(w, grad, lr);
    }
  }
  if (!run.failed) {
    run.loss = mse_loss(w, data);
    if (!std::isfinite(run.loss)) {
      run.failed = true;
      run.fail_epoch = run.epochs;
      run.converged = false;
    }
  } else {
    run.loss = std::numeric_limits<double>::quiet_NaN();
  }
  run.a = extract_coefficients(w.layers[0], w.layers[1]);
  run.weights = std::move(w);
  return run;
}

TrainedRun train_sgd(const Dataset& data, const ExperimentConfig& config, std::uint64_t init_seed) {
  config.validate();
  Rng rng(init_seed);
  auto w = random_weights(experiment_arch(), rng, {InitKind::normal, config.init_std});
  auto run = train_from(data, config, std::move(w));
  run.init_seed = init_seed;
  return run;
}

template <class T>
Matrix<T> extract_coefficients(const Matrix<T>& w1, const Matrix<T>& w2) {
  if (w1.rows() != 2 || w1.cols() != 2 || w2.rows() != 3 || w2.cols() != 2)
    throw std::invalid_argument("extract_coefficients: expected W1 2 x 2 and W2 3 x 2");
  Matrix<T> a(3, 3);
  const T two(2);
  for (std::size_t j = 0; j < 3; ++j) {
    const T& v1 = w2(j, 0);
    const T& v2 = w2(j, 1);
    a(0, j) = v1 * w1(0, 0) * w1(0, 0) + v2 * w1(1, 0) * w1(1, 0);
    a(1, j) = two * (v1 * w1(0, 0) * w1(0, 1) + v2 * w1(1, 0) * w1(1, 1));
    a(2, j) = v1 * w1(0, 1) * w1(0, 1) + v2 * w1(1, 1) * w1(1, 1);
  }
  return a;
}

template Matrix<double> extract_coefficients(const Matrix<double>&, const Matrix<double>&);
template Matrix<Rational> extract_coefficients(const Matrix<Rational>&, const Matrix<Rational>&);

std::size_t coefficient_rank(const Matrix<double>& a, double rank_tol) {
  const auto sv = float_rank(a, rank_tol).singular_values;
  const double cut = rank_tol * std::max(sv.empty() ? 0.0 : sv.front(), 1.0);
  return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [cut](double s) { return s > cut; }));
}

Weights<double> polish(const Weights<double>& w0, const Dataset& data, double grad_tol, int max_iters) {
  Weights<double> w = w0;
  std::vector<double> grad;
  double loss = loss_gradient(w, data, grad);
  double lr = 0.1;
  for (int it = 0; it < max_iters && max_abs(grad) >= grad_tol; ++it) {
    double g2 = 0.0;
    for (const double g : grad) g2 += g * g;
    // Armijo backtracking.
    while (lr > 1e-12) {
      Weights<double> trial = w;
      step(trial, grad, lr);
      std::vector<double> trial_grad;
      const double trial_loss = loss_gradient(trial, data, trial_grad);
      if (trial_loss <= loss - 0.5 * lr * g2) {
        w = std::move(trial);
        loss = trial_loss;
        grad = std::move(trial_grad);
        lr = std::min(lr * 1.5, 1.0);
        break;
      }
      lr *= 0.5;
    }
    if (lr <= 1e-12) break;
  }
  return w;
}

LocalMinVerdict local_min_check(const Weights<double>& w, const Dataset& data, double eps, int num_perturbations,
                                std::uint64_t seed) {
  if (eps <= 0.0) throw std::invalid_argument("local_min_check: eps must be positive");
  LocalMinVerdict v;
  v.loss = mse_loss(w, data);
  v.perturbations = num_perturbations;
  v.min_perturbed_loss = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (const double y : data.y.data()) scale += y * y;
  scale /= static_cast<double>(data.y.rows());
  const double slack = 1e-13 * std::max(scale, 1.0);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-eps, eps);
  for (int k = 0; k < num_perturbations; ++k) {
    Weights<double> p = w;
    for (auto& m : p.layers)
      for (auto& x : m.data()) x += u(rng);
    v.min_perturbed_loss = std::min(v.min_perturbed_loss, mse_loss(p, data));
  }
  v.local_min = v.loss <= v.min_perturbed_loss + slack;
  return v;
}

std::size_t FunctionCensus::count_rank(std::size_t r) const {
  return static_cast<std::size_t>(
      std::count_if(clusters.begin(), clusters.end(), [r](const FunctionCluster& c) { return c.rank == r; }));
}

FunctionCensus cluster_functions(const std::vector<TrainedRun>& runs, double eps, int frequency_floor,
                                 double rank_tol) {
  if (eps <= 0.0) throw std::invalid_argument("cluster_functions: eps must be positive");
  FunctionCensus census;
  census.eps = eps;
  census.frequency_floor = frequency_floor;
  std::vector<FunctionCluster> all;
  std::vector<double> loss_sum;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    if (run.failed) {
      ++census.failed_runs;
      continue;
    }
    std::size_t hit = all.size();
    for (std::size_t c = 0; c < all.size() && hit == all.size(); ++c) {
      double d = 0.0;
      for (std::size_t k = 0; k < 9; ++k) d = std::max(d, std::abs(run.a.data()[k] - all[c].representative.data()[k]));
      if (d < eps) hit = c;
    }
    if (hit == all.size()) {
      FunctionCluster fc;
      fc.representative = run.a;
      fc.leader = i;
      all.push_back(std::move(fc));
      loss_sum.push_back(0.0);
    }
    ++all[hit].frequency;
    ++all[hit].rank_votes[std::min<std::size_t>(coefficient_rank(run.a, rank_tol), 3)];
    loss_sum[hit] += run.loss;
  }
  for (std::size_t c = 0; c < all.size(); ++c) {
    auto& fc = all[c];
    fc.mean_loss = loss_sum[c] / fc.frequency;
    if (fc.frequency < frequency_floor) {
      ++census.residual_clusters;
      census.residual_runs += fc.frequency;
      continue;
    }
    // Majority rank of the members; the leader's own rank breaks ties.
    fc.rank = coefficient_rank(fc.representative, rank_tol);
    for (std::size_t r = 0; r < fc.rank_votes.size(); ++r)
      if (fc.rank_votes[r] > fc.rank_votes[fc.rank]) fc.rank = r;
    fc.singular_values = float_rank(fc.representative, rank_tol).singular_values;
    census.clusters.push_back(std::move(fc));
  }
  std::stable_sort(census.clusters.begin(), census.clusters.end(),
                   [](const FunctionCluster& a, const FunctionCluster& b) { return a.frequency > b.frequency; });
  return census;
}

void annotate_local_min(FunctionCensus& census, const std::vector<TrainedRun>& runs, const ExperimentConfig& config,
                        std::size_t rank) {
  for (auto& fc : census.clusters) {
    if (rank != 0 && fc.rank != rank) continue;
    const auto& run = runs.at(fc.leader);
    const auto data = generate_dataset(run.dataset_seed, config, run.c);
    const auto w = polish(run.weights, data);
    auto v = local_min_check(w, data, config.perturbation_eps, config.num_perturbations,
                             derive_seed(config.seed ^ 0x10ca1, fc.leader));
    const auto a = extract_coefficients(w.layers[0], w.layers[1]);
    for (std::size_t k = 0; k < 9; ++k)
      v.drift = std::max(v.drift, std::abs(a.data()[k] - fc.representative.data()[k]));
    if (v.drift >= config.cluster_eps) v.local_min = false;
    fc.local_min = v;
  }
}

std::uint64_t dataset_seed(const ExperimentConfig& config, std::size_t i) { return derive_seed(config.seed, 2 * i); }

std::uint64_t init_seed(const ExperimentConfig& config, std::size_t i) { return derive_seed(config.seed, 2 * i + 1); }

Matrix<double> shared_target(const ExperimentConfig& config) {
  Rng rng(derive_seed(config.seed, std::numeric_limits<std::uint64_t>::max()));
  return random_target(rng);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult res;
  res.config = config;
  if (config.shared_target) res.target = shared_target(config);
  res.runs.resize(static_cast<std::size_t>(config.num_datasets));
  parallel_for(res.runs.size(), [&](std::size_t i) {
    const auto data = res.target ? generate_dataset(dataset_seed(config, i), config, *res.target)
                                 : generate_dataset(dataset_seed(config, i), config);
    auto run = train_sgd(data, config, init_seed(config, i));
    run.index = i;
    res.runs[i] = std::move(run);
  });
  res.census = cluster_functions(res.runs, config.cluster_eps, config.frequency_floor, config.rank_tol);
  annotate_local_min(res.census, res.runs, config);
  return res;
}

namespace {

void write_matrix(std::ostream& os, const Matrix<double>& m) {
  for (const double v : m.data()) os << ',' << v;
}

void matrix_header(std::ostream& os, char name, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 1; i <= rows; ++i)
    for (std::size_t j = 1; j <= cols; ++j) os << ',' << name << i << j;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void write_runs_csv(std::ostream& os, const std::vector<TrainedRun>& runs) {
  os << "index,dataset_seed,init_seed,loss,epochs,converged,failed";
  matrix_header(os, 'c', 3, 3);
  matrix_header(os, 'w', 2, 2);
  matrix_header(os, 'v', 3, 2);
  matrix_header(os, 'a', 3, 3);
  os << '\n';
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : runs) {
    os << r.index << ',' << r.dataset_seed << ',' << r.init_seed << ',' << r.loss << ',' << r.epochs << ','
       << int(r.converged) << ',' << int(r.failed);
    write_matrix(os, r.c);
    write_matrix(os, r.weights.layers.at(0));
    write_matrix(os, r.weights.layers.at(1));
    write_matrix(os, r.a);
    os << '\n';
  }
  os.precision(old);
}

std::vector<TrainedRun> read_runs_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("runs csv: empty input");
  constexpr std::size_t kCols = 7 + 9 + 4 + 6 + 9;
  if (split_csv(line).size() != kCols) throw std::runtime_error("runs csv: unexpected header");
  std::vector<TrainedRun> runs;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != kCols) throw std::runtime_error("runs csv: wrong column count on line " + std::to_string(line_no));
    TrainedRun r;
    std::size_t k = 0;
    try {
      r.index = std::stoull(cells[k++]);
      r.dataset_seed = std::stoull(cells[k++]);
      r.init_seed = std::stoull(cells[k++]);
      r.loss = std::stod(cells[k++]);
      r.epochs = std::stoi(cells[k++]);
      r.converged = std::stoi(cells[k++]) != 0;
      r.failed = std::stoi(cells[k++]) != 0;
      auto fill = [&](Matrix<double>& m) {
        for (auto& v : m.data()) v = std::stod(cells[k++]);
      };
      fill(r.c);
      r.weights = Weights<double>(experiment_arch());
      fill(r.weights.layers[0]);
      fill(r.weights.layers[1]);
      fill(r.a);
    } catch (const std::logic_error&) {
      throw std::runtime_error("runs csv: bad number on line " + std::to_string(line_no));
    }
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_census_csv(std::ostream& os, const FunctionCensus& census) {
  os << "cluster,frequency,rank,local_min,mean_loss,leader";
  matrix_header(os, 'a', 3, 3);
  os << '\n';
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t c = 0; c < census.clusters.size(); ++c) {
    const auto& fc = census.clusters[c];
    os << c << ',' << fc.frequency << ',' << fc.rank << ','
       << (fc.local_min ? (fc.local_min->local_min ? "yes" : "no") : "unchecked") << ',' << fc.mean_loss << ','
       << fc.leader;
    write_matrix(os, fc.representative);
    os << '\n';
  }
  os.precision(old);
}

}  // namespace pnn
