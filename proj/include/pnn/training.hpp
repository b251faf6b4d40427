// Gradient-descent training of the (2,2,3) quadratic network on synthetic
// quadratic data, extraction of the learned coefficients, clustering of the
// learned functions and a perturbation test for local minimality.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/network.hpp"
#include "pnn/scalar.hpp"

namespace pnn {

struct ExperimentConfig {
  int num_datasets = 5000;
  int points_per_dataset = 50;
  double input_lo = -1.0;
  double input_hi = 1.0;
  double lr0 = 0.1;
  int lr_halving_period = 1000;
  int max_epochs = 15000;
  /// Stop when max |dL/dw| falls below this.
  double grad_norm_threshold = 1e-4;
  /// Max-norm distance under which two learned functions coincide.
  double cluster_eps = 0.1;
  double perturbation_eps = 1e-4;
  int num_perturbations = 200;
  int frequency_floor = 10;
  /// Singular-value threshold (relative to sigma_max) for the rank annotation.
  double rank_tol = 1e-3;
  double init_std = 0.5;
  /// Global gradient norm cap; 0 disables clipping.
  double clip_norm = 1.0;
  /// Points per gradient step; 0 means the whole dataset.
  int batch_size = 0;
  /// All datasets share one ground-truth coefficient matrix drawn from the
  /// master seed; otherwise each dataset draws its own.
  bool shared_target = true;
  std::uint64_t seed = 1;

  static ExperimentConfig paper_scale() { return {}; }
  static ExperimentConfig desk_scale();

  /// Throws std::invalid_argument on a non-positive or inconsistent field.
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& c);

/// The fixed architecture of the experiment, (2,2,3) with r = 2.
const Architecture& experiment_arch();

struct Dataset {
  std::uint64_t seed = 0;
  /// N x 2 inputs, N x 3 outputs.
  Matrix<double> x;
  Matrix<double> y;
  /// 3 x 3, row j holds (c_{j,1}, c_{j,2}, c_{j,3}) for x1^2, x1x2, x2^2.
  Matrix<double> c;
};

/// Standard normal 3 x 3 coefficient matrix.
Matrix<double> random_target(Rng& rng);

/// Inputs uniform on [input_lo, input_hi]^2 and coefficients from `seed`.
Dataset generate_dataset(std::uint64_t seed, const ExperimentConfig& config);
/// Inputs from `seed`, coefficients fixed to `target`.
Dataset generate_dataset(std::uint64_t seed, const ExperimentConfig& config, const Matrix<double>& target);

/// (1/N) sum ||p_w(x) - y||^2.
double mse_loss(const Weights<double>& w, const Dataset& data);
/// Loss and its gradient in flat weight order.
double loss_gradient(const Weights<double>& w, const Dataset& data, std::vector<double>& grad);

struct TrainedRun {
  std::size_t index = 0;
  std::uint64_t dataset_seed = 0;
  std::uint64_t init_seed = 0;
  Matrix<double> c{3, 3};
  Weights<double> weights;
  double loss = 0.0;
  int epochs = 0;
  bool converged = false;
  /// Loss became non-finite at epoch `fail_epoch`.
  bool failed = false;
  int fail_epoch = -1;
  /// 3 x 3, a(i, j) = a_{i+1, j+1}: row i is the monomial, column j the output.
  Matrix<double> a{3, 3};
};

/// Weights drawn i.i.d. normal(0, init_std^2) from `init_seed`.
TrainedRun train_sgd(const Dataset& data, const ExperimentConfig& config, std::uint64_t init_seed);
/// Continue from given weights with the same schedule.
TrainedRun train_from(const Dataset& data, const ExperimentConfig& config, Weights<double> w);

/// W1 = (w_kl) 2 x 2 and W2 = (v_jk) 3 x 2:
///   a_1j = v_j1 w_11^2 + v_j2 w_21^2
///   a_2j = 2 (v_j1 w_11 w_12 + v_j2 w_21 w_22)
///   a_3j = v_j1 w_12^2 + v_j2 w_22^2
template <class T>
Matrix<T> extract_coefficients(const Matrix<T>& w1, const Matrix<T>& w2);

/// Number of singular values above rank_tol * max(sigma_max, 1); the unit
/// floor keeps the near-zero function at rank 0.
std::size_t coefficient_rank(const Matrix<double>& a, double rank_tol);

struct LocalMinVerdict {
  bool local_min = false;
  double loss = 0.0;
  double min_perturbed_loss = 0.0;
  int perturbations = 0;
  /// Max-norm distance between the polished coefficients and the cluster
  /// representative; a polish that leaves the cluster voids the verdict.
  double drift = 0.0;
};

/// Drives the gradient down to `grad_tol` by plain gradient descent from w.
Weights<double> polish(const Weights<double>& w, const Dataset& data, double grad_tol = 1e-11, int max_iters = 200000);

/// Loss at w against the loss at `num_perturbations` points w + delta with
/// delta uniform in [-eps, eps]^P, all on `data`. Local minimum iff the base
/// loss does not exceed any perturbed loss (up to rounding).
LocalMinVerdict local_min_check(const Weights<double>& w, const Dataset& data, double eps, int num_perturbations,
                                std::uint64_t seed);

struct FunctionCluster {
  Matrix<double> representative{3, 3};
  std::size_t leader = 0;
  int frequency = 0;
  /// Majority rank over the members (see rank_votes).
  std::size_t rank = 0;
  /// Members with coefficient rank 0, 1, 2, 3.
  std::array<int, 4> rank_votes{};
  std::vector<double> singular_values;
  double mean_loss = 0.0;
  std::optional<LocalMinVerdict> local_min;
};

struct FunctionCensus {
  /// Clusters with frequency >= frequency_floor, most frequent first.
  std::vector<FunctionCluster> clusters;
  /// Clusters and runs below the floor.
  int residual_clusters = 0;
  int residual_runs = 0;
  int failed_runs = 0;
  double eps = 0.0;
  int frequency_floor = 0;

  [[nodiscard]] std::size_t count_rank(std::size_t r) const;
};

/// Greedy leader clustering in run order: a run joins the first cluster
/// whose leader is within eps in max-norm, else starts a new one. Failed runs
/// are skipped. Ranks are annotated (majority over members); local-min
/// verdicts are not.
FunctionCensus cluster_functions(const std::vector<TrainedRun>& runs, double eps, int frequency_floor,
                                 double rank_tol);

/// Fills in local_min for every rank-`rank` cluster (all clusters when
/// rank is 0) using its leader's dataset and polished weights.
void annotate_local_min(FunctionCensus& census, const std::vector<TrainedRun>& runs, const ExperimentConfig& config,
                        std::size_t rank = 2);

struct ExperimentResult {
  ExperimentConfig config;
  std::optional<Matrix<double>> target;
  std::vector<TrainedRun> runs;
  FunctionCensus census;
};

std::uint64_t dataset_seed(const ExperimentConfig& config, std::size_t i);
std::uint64_t init_seed(const ExperimentConfig& config, std::size_t i);
Matrix<double> shared_target(const ExperimentConfig& config);

/// Trains every dataset in parallel, then clusters and checks the rank-2
/// clusters for local minimality.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// index,dataset_seed,init_seed,loss,epochs,converged,failed,c11..c33,w11..w22,v11..v32,a11..a33
void write_runs_csv(std::ostream& os, const std::vector<TrainedRun>& runs);
std::vector<TrainedRun> read_runs_csv(std::istream& is);
/// cluster,frequency,rank,local_min,mean_loss,leader,a11..a33
void write_census_csv(std::ostream& os, const FunctionCensus& census);

}  // namespace pnn
