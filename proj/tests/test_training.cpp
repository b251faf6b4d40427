#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pnn/training.hpp"
#include "support.hpp"

using namespace pnn;

namespace {

Matrix<double> to_double_matrix(const Matrix<Rational>& m) {
  return m.map<double>([](const Rational& q) { return to_double(q); });
}

/// Coefficient matrix (rows = outputs) of a random (2,2,3) network.
Matrix<double> realizable_target(Rng& rng) {
  const auto w = random_weights(experiment_arch(), rng);
  return extract_coefficients(w.layers[0], w.layers[1]).transpose();
}

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.num_datasets = 40;
  c.max_epochs = 1500;
  return c;
}

double det3(const Matrix<double>& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

TrainedRun fake_run(std::size_t index, const Matrix<double>& a) {
  TrainedRun r;
  r.index = index;
  r.a = a;
  r.converged = true;
  r.weights = Weights<double>(experiment_arch());
  return r;
}

std::multiset<int> frequencies(const FunctionCensus& c) {
  std::multiset<int> f;
  for (const auto& cl : c.clusters) f.insert(cl.frequency);
  return f;
}

}  // namespace

TEST_CASE("configuration") {
  const auto paper = ExperimentConfig::paper_scale();
  CHECK(paper.num_datasets == 5000);
  CHECK(paper.points_per_dataset == 50);
  CHECK(paper.input_lo == -1.0);
  CHECK(paper.input_hi == 1.0);
  CHECK(paper.lr0 == 0.1);
  CHECK(paper.lr_halving_period == 1000);
  CHECK(paper.max_epochs == 15000);
  CHECK(paper.grad_norm_threshold == 1e-4);
  CHECK(paper.cluster_eps == 0.1);
  CHECK(paper.perturbation_eps == 1e-4);
  CHECK(paper.frequency_floor == 10);
  const auto desk = ExperimentConfig::desk_scale();
  CHECK(desk.num_datasets == 500);
  CHECK(desk.max_epochs == 4000);

  ExperimentConfig bad;
  bad.lr0 = 0.0;
  CHECK_THROWS(bad.validate());
  bad = ExperimentConfig{};
  bad.input_lo = 2.0;
  CHECK_THROWS(bad.validate());
  bad = ExperimentConfig{};
  bad.cluster_eps = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("json config round trip") {
  ExperimentConfig c = ExperimentConfig::desk_scale();
  c.seed = 77;
  c.cluster_eps = 0.05;
  c.shared_target = false;
  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.seed == 77);
  CHECK_FALSE(back.shared_target);

  const auto partial = config_from_json(R"({"profile": "desk", "seed": 5})");
  CHECK(partial.num_datasets == 500);
  CHECK(partial.seed == 5);
  CHECK_THROWS(config_from_json(R"({"learning_rate": 0.1})"));
  CHECK_THROWS(config_from_json(R"({"profile": "huge"})"));
  CHECK_THROWS(config_from_json(R"({"lr0": -1})"));
  CHECK_THROWS(config_from_json("[1, 2]"));
}

TEST_CASE("dataset generation") {
  const ExperimentConfig cfg;
  SUBCASE("deterministic") {
    const auto a = generate_dataset(42, cfg);
    const auto b = generate_dataset(42, cfg);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.c == b.c);
    CHECK_FALSE(generate_dataset(43, cfg).x == a.x);
  }
  SUBCASE("outputs re-evaluate from inputs and coefficients") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto d = generate_dataset(s, cfg);
      REQUIRE(d.x.rows() == 50);
      for (std::size_t i = 0; i < d.x.rows(); ++i) {
        const double x1 = d.x(i, 0), x2 = d.x(i, 1);
        CHECK(x1 >= -1.0);
        CHECK(x1 <= 1.0);
        CHECK(x2 >= -1.0);
        CHECK(x2 <= 1.0);
        for (std::size_t j = 0; j < 3; ++j) {
          const double y = d.c(j, 0) * x1 * x1 + d.c(j, 1) * x1 * x2 + d.c(j, 2) * x2 * x2;
          CHECK(d.y(i, j) == doctest::Approx(y).epsilon(1e-15).scale(1.0));
        }
      }
    }
  }
  SUBCASE("fixed target reuses the same inputs") {
    Rng rng(1);
    const auto t = random_target(rng);
    const auto d = generate_dataset(9, cfg, t);
    CHECK(d.c == t);
    CHECK(d.x == generate_dataset(9, cfg).x);
  }
  SUBCASE("coefficient means over 10^4 datasets are within 3 sigma of 0") {
    constexpr int n = 10000;
    std::vector<double> sum(9, 0.0);
    for (int s = 0; s < n; ++s) {
      const auto d = generate_dataset(derive_seed(3, static_cast<std::uint64_t>(s)), cfg);
      for (std::size_t i = 0; i < 9; ++i) sum[i] += d.c.data()[i];
    }
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    for (const double v : sum) CHECK(std::abs(v / n) < 3 * sigma);
  }
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(6);
  const auto data = generate_dataset(1, ExperimentConfig{});
  for (int rep = 0; rep < 10; ++rep) {
    const auto w = random_weights(experiment_arch(), rng);
    std::vector<double> grad;
    const double loss = loss_gradient(w, data, grad);
    CHECK(loss == doctest::Approx(mse_loss(w, data)).epsilon(1e-14));
    auto flat = w.flat();
    for (std::size_t p = 0; p < flat.size(); ++p) {
      const double h = 1e-6, saved = flat[p];
      flat[p] = saved + h;
      const double up = mse_loss(Weights<double>::from_flat(experiment_arch(), flat), data);
      flat[p] = saved - h;
      const double down = mse_loss(Weights<double>::from_flat(experiment_arch(), flat), data);
      flat[p] = saved;
      CHECK(grad[p] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("training reaches a realizable target") {
  Rng rng(12);
  ExperimentConfig cfg;
  cfg.grad_norm_threshold = 1e-7;
  cfg.max_epochs = 200000;
  cfg.lr_halving_period = cfg.max_epochs;
  for (int rep = 0; rep < 5; ++rep) {
    const auto target = realizable_target(rng);
    const auto data = generate_dataset(static_cast<std::uint64_t>(rep), cfg, target);
    // Several initializations; at least one must find the global minimum.
    double best = 1e300;
    for (std::uint64_t s = 0; s < 4 && best >= 1e-6; ++s) {
      const auto run = train_sgd(data, cfg, 100 + s);
      best = std::min(best, run.loss);
    }
    CHECK(best < 1e-6);
  }
}

TEST_CASE("training on a zero target") {
  ExperimentConfig cfg;
  cfg.grad_norm_threshold = 1e-8;
  cfg.max_epochs = 200000;
  cfg.lr_halving_period = cfg.max_epochs;
  const auto data = generate_dataset(4, cfg, Matrix<double>(3, 3));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto run = train_sgd(data, cfg, s);
    CHECK_FALSE(run.failed);
    CHECK(run.loss < 1e-8);
    for (const double v : run.a.data()) CHECK(std::abs(v) < 1e-3);
  }
}

TEST_CASE("loss is non-increasing at a small learning rate") {
  ExperimentConfig cfg;
  cfg.lr0 = 1e-3;
  cfg.max_epochs = 1;
  cfg.grad_norm_threshold = 1e-300;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto data = generate_dataset(s, cfg);
    Rng rng(s + 1000);
    auto w = random_weights(experiment_arch(), rng, {InitKind::normal, cfg.init_std});
    double prev = mse_loss(w, data);
    bool monotone = true;
    for (int epoch = 0; epoch < 300; ++epoch) {
      auto run = train_from(data, cfg, w);
      monotone = monotone && run.loss <= prev;
      prev = run.loss;
      w = std::move(run.weights);
    }
    CHECK(monotone);
  }
}

TEST_CASE("coefficient extraction") {
  Rng rng(13);
  const auto& arch = experiment_arch();
  SUBCASE("agrees with the symbolic expansion, exact") {
    for (int rep = 0; rep < 100; ++rep) {
      const auto w = random_integer_weights(arch, rng, 6);
      const auto a = extract_coefficients(w.layers[0], w.layers[1]);
      const auto c = coefficients(arch, w);
      for (std::size_t j = 0; j < 3; ++j) {
        const auto d = c[j].dense();
        for (std::size_t i = 0; i < 3; ++i) CHECK(a(i, j) == d[i]);
      }
    }
  }
  SUBCASE("zero second layer") {
    const auto w = random_weights(arch, rng);
    const auto a = extract_coefficients(w.layers[0], Matrix<double>(3, 2));
    for (const double v : a.data()) CHECK(v == 0.0);
  }
  SUBCASE("rank at most two") {
    for (int rep = 0; rep < 200; ++rep) {
      const auto w = random_weights(arch, rng);
      const auto a = extract_coefficients(w.layers[0], w.layers[1]);
      CHECK(coefficient_rank(a, 1e-9) <= 2);
      const auto wi = random_integer_weights(arch, rng, 5);
      CHECK(exact_rank(extract_coefficients(wi.layers[0], wi.layers[1])) <= 2);
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS(extract_coefficients(Matrix<double>(2, 3), Matrix<double>(3, 2)));
  }
  SUBCASE("rank annotation") {
    CHECK(coefficient_rank(Matrix<double>(3, 3), 1e-3) == 0);
    CHECK(coefficient_rank(Matrix<double>{{1e-5, 0, 0}, {0, 0, 0}, {0, 0, 0}}, 1e-3) == 0);
    CHECK(coefficient_rank(Matrix<double>{{1, 2, 3}, {2, 4, 6}, {0, 0, 0}}, 1e-3) == 1);
    CHECK(coefficient_rank(Matrix<double>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 1e-3) == 3);
  }
}

TEST_CASE("trained coefficient matrices stay on the variety") {
  auto cfg = quick_config();
  const auto res = run_experiment(cfg);
  REQUIRE(res.runs.size() == 40);
  for (const auto& r : res.runs) {
    if (r.failed) continue;
    double scale = 1.0;
    for (const double v : r.a.data()) scale = std::max(scale, std::abs(v));
    CHECK(std::abs(det3(r.a)) < 1e-8 * scale * scale * scale);
    const auto again = extract_coefficients(r.weights.layers[0], r.weights.layers[1]);
    CHECK(again == r.a);
  }
}

TEST_CASE("clustering") {
  SUBCASE("identical runs share a cluster") {
    const Matrix<double> a{{1, 0, 0}, {0, 1, 0}, {0, 0, 0}};
    const auto census = cluster_functions({fake_run(0, a), fake_run(1, a)}, 0.1, 1, 1e-3);
    REQUIRE(census.clusters.size() == 1);
    CHECK(census.clusters[0].frequency == 2);
    CHECK(census.clusters[0].rank == 2);
    CHECK(census.clusters[0].leader == 0);
  }
  SUBCASE("max-norm threshold is strict") {
    const Matrix<double> a(3, 3);
    Matrix<double> b(3, 3);
    b(1, 1) = 0.1;
    Matrix<double> c(3, 3);
    c(1, 1) = 0.0999;
    CHECK(cluster_functions({fake_run(0, a), fake_run(1, b)}, 0.1, 1, 1e-3).clusters.size() == 2);
    CHECK(cluster_functions({fake_run(0, a), fake_run(1, c)}, 0.1, 1, 1e-3).clusters.size() == 1);
  }
  SUBCASE("floor, residual bucket and failed runs") {
    std::vector<TrainedRun> runs;
    const Matrix<double> big{{1, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    const Matrix<double> small{{0, 0, 0}, {0, 0, 0}, {0, 0, 5}};
    for (std::size_t i = 0; i < 5; ++i) runs.push_back(fake_run(i, big));
    runs.push_back(fake_run(5, small));
    runs.push_back(fake_run(6, small));
    auto failed = fake_run(7, big);
    failed.failed = true;
    runs.push_back(failed);
    const auto census = cluster_functions(runs, 0.1, 3, 1e-3);
    REQUIRE(census.clusters.size() == 1);
    CHECK(census.clusters[0].frequency == 5);
    CHECK(census.residual_clusters == 1);
    CHECK(census.residual_runs == 2);
    CHECK(census.failed_runs == 1);
    CHECK(census.count_rank(1) == 1);
  }
  SUBCASE("invariance under shuffling the run order") {
    auto cfg = quick_config();
    cfg.num_datasets = 120;
    const auto res = run_experiment(cfg);
    const auto base = cluster_functions(res.runs, cfg.cluster_eps, 2, cfg.rank_tol);
    Rng rng(17);
    int same_count = 0, same_freq = 0;
    for (int k = 0; k < 10; ++k) {
      auto shuffled = res.runs;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto c = cluster_functions(shuffled, cfg.cluster_eps, 2, cfg.rank_tol);
      same_count += c.clusters.size() == base.clusters.size() ? 1 : 0;
      same_freq += frequencies(c) == frequencies(base) ? 1 : 0;
      REQUIRE_FALSE(c.clusters.empty());
      CHECK(c.clusters[0].frequency == base.clusters[0].frequency);
      CHECK(c.clusters[0].rank == base.clusters[0].rank);
      int total = c.residual_runs + c.failed_runs;
      for (const auto& cl : c.clusters) total += cl.frequency;
      CHECK(total == cfg.num_datasets);
    }
    // Greedy leader clustering is order dependent in the small clusters; the
    // counts are reported, the dominant cluster is asserted above.
    MESSAGE("shuffles with unchanged cluster count: " << same_count << "/10, unchanged frequencies: " << same_freq
                                                      << "/10");
  }
}

TEST_CASE("local minimality check") {
  auto cfg = quick_config();
  cfg.num_datasets = 60;
  cfg.max_epochs = 4000;
  auto res = run_experiment(cfg);
  REQUIRE(res.census.count_rank(2) >= 1);
  const FunctionCluster* rank2 = nullptr;
  for (const auto& c : res.census.clusters)
    if (c.rank == 2) {
      rank2 = &c;
      break;
    }
  REQUIRE(rank2 != nullptr);
  REQUIRE(rank2->local_min.has_value());
  CHECK(rank2->local_min->local_min);

  const auto& leader = res.runs[rank2->leader];
  const auto data = generate_dataset(leader.dataset_seed, cfg, *res.target);
  const auto w = polish(leader.weights, data);
  SUBCASE("stable across perturbation seeds") {
    const auto a = local_min_check(w, data, cfg.perturbation_eps, 200, 1);
    const auto b = local_min_check(w, data, cfg.perturbation_eps, 200, 2);
    CHECK(a.local_min);
    CHECK(b.local_min == a.local_min);
    CHECK(a.perturbations == 200);
    CHECK(a.loss <= a.min_perturbed_loss + 1e-12);
  }
  SUBCASE("a point away from the minimum is rejected") {
    auto off = w;
    off.layers[1](0, 0) += 0.05;
    const auto v = local_min_check(off, data, cfg.perturbation_eps, 200, 3);
    CHECK_FALSE(v.local_min);
    CHECK(v.loss > v.min_perturbed_loss);
  }
  CHECK_THROWS(local_min_check(w, data, 0.0, 10, 1));
}

TEST_CASE("a polish that leaves the cluster voids the local-min verdict") {
  auto cfg = quick_config();
  const auto target = shared_target(cfg);
  Rng rng(3);
  std::vector<TrainedRun> runs;
  // Untrained weights: polishing moves them far from their starting function.
  auto run = fake_run(0, Matrix<double>(3, 3));
  run.weights = random_weights(experiment_arch(), rng, {InitKind::normal, 0.5});
  run.a = extract_coefficients(run.weights.layers[0], run.weights.layers[1]);
  run.dataset_seed = dataset_seed(cfg, 0);
  run.c = target;
  runs.push_back(run);
  auto census = cluster_functions(runs, cfg.cluster_eps, 1, cfg.rank_tol);
  annotate_local_min(census, runs, cfg, 0);
  REQUIRE(census.clusters[0].local_min.has_value());
  CHECK(census.clusters[0].local_min->drift >= cfg.cluster_eps);
  CHECK_FALSE(census.clusters[0].local_min->local_min);
}

TEST_CASE("divergence is rare with clipping") {
  ExperimentConfig cfg;
  cfg.num_datasets = 1000;
  cfg.max_epochs = 1000;
  cfg.shared_target = false;
  const auto res = run_experiment(cfg);
  int failed = 0;
  for (const auto& r : res.runs) failed += r.failed ? 1 : 0;
  MESSAGE("diverged: " << failed << "/1000");
  CHECK(failed < 10);
}

TEST_CASE("experiment is reproducible and seeds are distinct") {
  auto cfg = quick_config();
  cfg.num_datasets = 10;
  cfg.max_epochs = 300;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].weights == b.runs[i].weights);
    CHECK(a.runs[i].dataset_seed == dataset_seed(cfg, i));
    CHECK(a.runs[i].init_seed == init_seed(cfg, i));
    CHECK(a.runs[i].c == shared_target(cfg));
  }
  CHECK(dataset_seed(cfg, 0) != init_seed(cfg, 0));
  CHECK(dataset_seed(cfg, 1) != dataset_seed(cfg, 2));
}

TEST_CASE("csv round trip") {
  auto cfg = quick_config();
  cfg.num_datasets = 12;
  cfg.max_epochs = 200;
  const auto res = run_experiment(cfg);
  std::stringstream ss;
  write_runs_csv(ss, res.runs);
  const std::string text = ss.str();
  CHECK(text.rfind("index,dataset_seed,init_seed,loss,epochs,converged,failed,c11,", 0) == 0);
  const auto back = read_runs_csv(ss);
  REQUIRE(back.size() == res.runs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].index == res.runs[i].index);
    CHECK(back[i].dataset_seed == res.runs[i].dataset_seed);
    CHECK(back[i].init_seed == res.runs[i].init_seed);
    CHECK(back[i].loss == res.runs[i].loss);
    CHECK(back[i].epochs == res.runs[i].epochs);
    CHECK(back[i].converged == res.runs[i].converged);
    CHECK(back[i].a == res.runs[i].a);
    CHECK(back[i].c == res.runs[i].c);
    CHECK(back[i].weights == res.runs[i].weights);
  }
  std::stringstream again;
  write_runs_csv(again, back);
  CHECK(again.str() == text);

  std::stringstream census;
  write_census_csv(census, res.census);
  CHECK(census.str().rfind("cluster,frequency,rank,local_min,mean_loss,leader,a11,", 0) == 0);

  std::stringstream bad("index,foo\n1,2\n");
  CHECK_THROWS(read_runs_csv(bad));
}

TEST_CASE("rational extraction helper") {
  const Matrix<Rational> w1{{1, 2}, {3, -1}};
  const Matrix<Rational> w2{{1, 0}, {0, 1}, {2, -1}};
  const auto a = extract_coefficients(w1, w2);
  // first output = (x1 + 2 x2)^2
  CHECK(a(0, 0) == 1);
  CHECK(a(1, 0) == 4);
  CHECK(a(2, 0) == 4);
  CHECK(to_double_matrix(a) == extract_coefficients(to_double_matrix(w1), to_double_matrix(w2)));
}
