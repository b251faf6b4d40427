// pnn: command-line front end. Exit codes: 0 ok, 1 usage, 2 computation
// failure, 3 oracle mismatch.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pnn/catalog.hpp"
#include "pnn/dimension.hpp"
#include "pnn/learning_degree.hpp"
#include "pnn/membership.hpp"
#include "pnn/training.hpp"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailure = 2;
constexpr int kMismatch = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rows with a fixed header plus metadata (seeds, options) printed first.
struct Table {
  ordered_json meta = ordered_json::object();
  std::vector<std::string> header;
  std::vector<std::vector<ordered_json>> rows;
};

std::string cell(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_null()) return "";
  return v.dump();
}

void print(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    ordered_json out;
    out["meta"] = t.meta;
    out["rows"] = ordered_json::array();
    for (const auto& r : t.rows) {
      ordered_json o;
      for (std::size_t i = 0; i < t.header.size(); ++i) o[t.header[i]] = r[i];
      out["rows"].push_back(o);
    }
    os << out.dump(2) << '\n';
    return;
  }
  os << '#';
  for (const auto& [k, v] : t.meta.items()) os << ' ' << k << '=' << cell(v);
  os << '\n';
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell(r[i]);
    os << '\n';
  }
}

ordered_json big(const pnn::BigInt& v) {
  if (v >= 0 && v <= std::numeric_limits<std::uint64_t>::max()) return static_cast<std::uint64_t>(v);
  return v.str();
}

pnn::Architecture parse_arch(const std::string& text) {
  try {
    return pnn::Architecture::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

struct DimFlags {
  std::string backend = "ff";
  int trials = 5;
  std::uint64_t seed = 1;

  [[nodiscard]] pnn::DimensionOptions options() const {
    pnn::DimensionOptions o;
    try {
      o.backend = pnn::parse_backend(backend);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    if (trials < 1) throw UsageError("--trials must be at least 1");
    o.trials = trials;
    o.seed = seed;
    return o;
  }

  void add(CLI::App* app) {
    app->add_option("--backend", backend, "Rank backend: ff, float or rat")->capture_default_str();
    app->add_option("--trials", trials, "Random weight vectors tried")->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
  }

  void describe(ordered_json& meta) const {
    meta["seed"] = seed;
    meta["backend"] = backend;
    meta["trials"] = trials;
  }
};

const std::vector<std::string> kDimHeader = {"arch", "r", "dim", "edim", "ambient", "defect", "filling", "certified"};

std::vector<ordered_json> dim_row(const pnn::DimensionReport& r) {
  return {r.arch.widths_string(), r.arch.r, r.dim, r.edim, big(r.ambient), r.defect, r.filling, r.certified};
}

int cmd_dim(const std::string& arch_text, const DimFlags& flags, bool bound, const std::string& format) {
  const auto arch = parse_arch(arch_text);
  const auto opts = flags.options();
  const auto rep = pnn::neurovariety_dim(arch, opts);
  Table t;
  flags.describe(t.meta);
  t.header = kDimHeader;
  t.rows.push_back(dim_row(rep));
  if (bound && arch.depth() >= 2) {
    const auto b = pnn::recursive_bound_min(arch, opts);
    t.header.insert(t.header.end(), {"bound_split", "recursive_bound"});
    t.rows.back().insert(t.rows.back().end(), {b.split, b.bound});
  }
  print(std::cout, t, format);
  return kOk;
}

int cmd_sweep(pnn::SweepOptions opts, const DimFlags& flags, const std::string& format) {
  opts.dim = flags.options();
  const auto reports = pnn::conjecture_sweep(opts);
  Table t;
  flags.describe(t.meta);
  t.meta["widths"] = std::to_string(opts.min_width) + ".." + std::to_string(opts.max_width);
  t.meta["depths"] = std::to_string(opts.min_depth) + ".." + std::to_string(opts.max_depth);
  t.meta["r"] = std::to_string(opts.min_r) + ".." + std::to_string(opts.max_r);
  std::size_t defective = 0;
  for (const auto& r : reports) defective += r.defect != 0 ? 1 : 0;
  t.meta["architectures"] = reports.size();
  t.meta["defective"] = defective;
  t.header = kDimHeader;
  for (const auto& r : reports) t.rows.push_back(dim_row(r));
  print(std::cout, t, format);
  return kOk;
}

std::vector<pnn::RationalPoly> read_matrix_polys(const std::string& text) {
  // Rows separated by ';', entries by ','; row j holds the coefficients of
  // x1^2, x1x2, x2^2 of output j.
  std::vector<pnn::RationalPoly> out;
  std::stringstream rows(text);
  std::string row;
  const auto basis = pnn::enumerate_multiindices(2, 2);
  while (std::getline(rows, row, ';')) {
    std::stringstream cells(row);
    std::string c;
    pnn::RationalPoly p(2, 2);
    std::size_t k = 0;
    while (std::getline(cells, c, ',')) {
      if (k >= 3) throw UsageError("--matrix rows need exactly 3 entries");
      try {
        p.set(basis[k++], pnn::parse_rational(c));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    if (k != 3) throw UsageError("--matrix rows need exactly 3 entries");
    out.push_back(std::move(p));
  }
  return out;
}

int cmd_member(const std::string& arch_text, const std::string& file, const std::string& matrix, bool exact,
               double tol, std::uint64_t seed, const std::string& format) {
  const auto arch = parse_arch(arch_text);
  std::vector<pnn::RationalPoly> polys;
  if (!matrix.empty()) {
    polys = read_matrix_polys(matrix);
  } else if (file.empty() || file == "-") {
    polys = pnn::read_polys(std::cin);
  } else {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot open " + file);
    polys = pnn::read_polys(in);
  }
  const auto v = pnn::membership(arch, polys, exact, tol, seed);
  Table t;
  t.meta["seed"] = seed;
  t.meta["mode"] = exact ? "exact" : "float";
  t.meta["tol"] = tol;
  t.header = {"arch", "r", "in_variety", "in_manifold", "boundary", "certificate"};
  t.rows.push_back({arch.widths_string(), arch.r, pnn::to_string(v.in_variety), pnn::to_string(v.in_manifold),
                    v.boundary, v.certificate});
  print(std::cout, t, format);
  return kOk;
}

int cmd_eddeg(long long k_from, long long k_to, bool census, int starts, std::uint64_t seed,
              const std::string& format) {
  if (k_from < 2) throw UsageError("k must be at least 2");
  if (k_to < k_from) k_to = k_from;
  Table t;
  if (!census) {
    t.meta["seed"] = "none";
    t.header = {"k", "closed_form", "polar_sum", "polar_sum_rearranged", "match", "chern_mather"};
    bool ok = true;
    for (long long k = k_from; k <= k_to; ++k) {
      const auto closed = pnn::eddeg_closed_form(k);
      const auto polar = pnn::eddeg_polar_sum(k);
      const auto rearranged = pnn::eddeg_polar_sum_rearranged(k);
      const bool match = closed == polar && polar == rearranged;
      ok = ok && match;
      t.rows.push_back({k, big(closed), big(polar), big(rearranged), match, pnn::chern_mather_22k(k).to_string()});
    }
    print(std::cout, t, format);
    return ok ? kOk : kMismatch;
  }
  t.meta["seed"] = seed;
  t.meta["starts"] = starts;
  t.header = {"k", "point", "loss", "multiplicity", "rank", "regular", "non_convergent", "merged", "eddeg_bound"};
  for (long long k = k_from; k <= k_to; ++k) {
    pnn::Rng rng(pnn::derive_seed(seed, static_cast<std::uint64_t>(k)));
    pnn::Matrix<double> target(static_cast<std::size_t>(k), 3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : target.data()) v = g(rng);
    const auto e = pnn::random_spd(3, rng);
    pnn::CensusOptions opts;
    opts.starts = starts;
    opts.seed = pnn::derive_seed(seed, 1000 + static_cast<std::uint64_t>(k));
    const auto c = pnn::critical_census(target, e, opts);
    const auto bound = big(pnn::eddeg_closed_form(k));
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const auto& p = c.points[i];
      t.rows.push_back({k, i, p.loss, p.multiplicity, p.rank, p.regular, c.non_convergent.size(), c.merged.size(), bound});
    }
    if (c.points.empty())
      t.rows.push_back({k, "none", "", 0, "", false, c.non_convergent.size(), c.merged.size(), bound});
  }
  print(std::cout, t, format);
  return kOk;
}

int cmd_known(const std::string& arch_text, const std::string& format) {
  const auto arch = parse_arch(arch_text);
  Table t;
  t.meta["seed"] = "none";
  t.header = {"arch", "r", "dim", "edim", "ambient", "defect", "filling", "manifold_equals_variety", "source",
              "confidence", "normal_form", "typical_rank_filling", "closure", "chain"};
  const auto f = pnn::lookup(arch);
  std::optional<pnn::TypicalRankFact> tr;
  if (arch.depth() == 2 && arch.outputs() == 1) tr = pnn::typical_rank_filling(arch.widths[0], arch.widths[1], arch.r);
  if (!f && !tr) {
    t.meta["found"] = false;
    print(std::cout, t, format);
    return kOk;
  }
  t.meta["found"] = true;
  std::vector<ordered_json> row = {arch.widths_string(), arch.r};
  if (f) {
    row.push_back(f->dim ? ordered_json(*f->dim) : ordered_json());
    row.push_back(f->edim);
    row.push_back(f->ambient);
    row.push_back(f->defect() ? ordered_json(*f->defect()) : ordered_json());
    row.push_back(f->filling ? ordered_json(*f->filling) : ordered_json());
    row.push_back(f->manifold_equals_variety ? ordered_json(*f->manifold_equals_variety) : ordered_json());
    row.push_back(pnn::to_string(f->source));
    row.push_back(f->confidence == pnn::Confidence::proven ? "proven" : "remark");
    row.push_back(f->rewritten_from ? ordered_json(f->rewritten_from->widths_string()) : ordered_json());
  } else {
    row.insert(row.end(), {nullptr, arch.expected_dim(), arch.ambient_dim(), nullptr, nullptr, nullptr,
                           pnn::to_string(pnn::FactSource::typical_rank), "proven", nullptr});
  }
  if (tr) {
    row.push_back(tr->filling);
    row.push_back(pnn::to_string(tr->closure));
    row.push_back(tr->chain);
  } else {
    row.insert(row.end(), {nullptr, nullptr, nullptr});
  }
  t.rows.push_back(std::move(row));
  print(std::cout, t, format);
  return kOk;
}

int cmd_table1(const DimFlags& flags, const std::string& format) {
  const auto opts = flags.options();
  Table t;
  flags.describe(t.meta);
  t.header = {"arch", "r", "dim", "edim", "ambient", "filling", "known_dim", "match"};
  const auto& rows = pnn::table1();
  std::vector<pnn::DimensionReport> reps(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) reps[i] = pnn::neurovariety_dim(rows[i].arch, opts);
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    const auto& r = reps[i];
    const bool match = r.dim == *f.dim && r.edim == f.edim && r.ambient == f.ambient;
    if (!match) bad.push_back(f.arch.widths_string());
    t.rows.push_back({f.arch.widths_string(), f.arch.r, r.dim, r.edim, big(r.ambient), r.filling, *f.dim, match});
  }
  t.meta["rows"] = rows.size();
  t.meta["mismatches"] = bad.size();
  print(std::cout, t, format);
  for (const auto& b : bad) std::cerr << "mismatch: " << b << '\n';
  return bad.empty() ? kOk : kMismatch;
}

Table census_table(const pnn::FunctionCensus& c, std::uint64_t seed) {
  Table t;
  t.meta["seed"] = seed;
  t.meta["eps"] = c.eps;
  t.meta["frequency_floor"] = c.frequency_floor;
  t.meta["clusters"] = c.clusters.size();
  t.meta["rank2_clusters"] = c.count_rank(2);
  t.meta["rank1_clusters"] = c.count_rank(1);
  t.meta["residual_clusters"] = c.residual_clusters;
  t.meta["residual_runs"] = c.residual_runs;
  t.meta["failed_runs"] = c.failed_runs;
  t.header = {"cluster", "frequency", "rank", "local_min", "mean_loss", "leader"};
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) t.header.push_back("a" + std::to_string(i) + std::to_string(j));
  for (std::size_t i = 0; i < c.clusters.size(); ++i) {
    const auto& fc = c.clusters[i];
    std::vector<ordered_json> row = {i, fc.frequency, fc.rank,
                                     fc.local_min ? ordered_json(fc.local_min->local_min ? "yes" : "no")
                                                  : ordered_json("unchecked"),
                                     fc.mean_loss, fc.leader};
    for (const double v : fc.representative.data()) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int cmd_experiment_run(const std::string& config_path, const std::string& profile, const std::string& out_dir,
                       const std::optional<std::uint64_t>& seed, const std::optional<int>& datasets,
                       const std::optional<int>& epochs, const std::string& format) {
  pnn::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = pnn::load_config(config_path);
  } else if (profile == "desk") {
    cfg = pnn::ExperimentConfig::desk_scale();
  } else if (profile == "paper") {
    cfg = pnn::ExperimentConfig::paper_scale();
  } else {
    throw UsageError("--profile must be desk or paper");
  }
  if (seed) cfg.seed = *seed;
  if (datasets) cfg.num_datasets = *datasets;
  if (epochs) cfg.max_epochs = *epochs;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto res = pnn::run_experiment(cfg);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "config.json", pnn::config_to_json(cfg) + "\n");
    std::ostringstream runs;
    pnn::write_runs_csv(runs, res.runs);
    write_text(fs::path(out_dir) / "runs.csv", runs.str());
    std::ostringstream census;
    pnn::write_census_csv(census, res.census);
    write_text(fs::path(out_dir) / "census.csv", census.str());
  }
  print(std::cout, census_table(res.census, cfg.seed), format);
  return kOk;
}

int cmd_experiment_census(const std::string& in_dir, const std::optional<double>& eps,
                          const std::optional<int>& floor, const std::string& format) {
  const fs::path dir(in_dir);
  const auto cfg_path = dir / "config.json";
  const auto runs_path = dir / "runs.csv";
  if (!fs::exists(cfg_path) || !fs::exists(runs_path))
    throw UsageError(in_dir + " must contain config.json and runs.csv");
  auto cfg = pnn::load_config(cfg_path);
  if (eps) cfg.cluster_eps = *eps;
  if (floor) cfg.frequency_floor = *floor;
  std::ifstream in(runs_path);
  const auto runs = pnn::read_runs_csv(in);
  auto census = pnn::cluster_functions(runs, cfg.cluster_eps, cfg.frequency_floor, cfg.rank_tol);
  pnn::annotate_local_min(census, runs, cfg);
  print(std::cout, census_table(census, cfg.seed), format);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dimensions, membership and training of polynomial neural networks"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "csv";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  int status = kOk;
  std::function<int()> action;

  std::string arch_text;
  DimFlags dim_flags;
  bool bound = false;
  auto* dim = app.add_subcommand("dim", "Neurovariety dimension by Jacobian rank");
  dim->add_option("arch", arch_text, "Architecture, e.g. 2-2-3:2")->required();
  dim_flags.add(dim);
  dim->add_flag("--bound", bound, "Also print the smallest recursive bound");
  dim->callback([&] { action = [&] { return cmd_dim(arch_text, dim_flags, bound, format); }; });

  pnn::SweepOptions sweep_opts;
  bool sweep_all = false;
  bool sweep_single = false;
  auto* sweep = app.add_subcommand("sweep", "Dimension of every architecture in a width/depth/degree box");
  sweep->add_option("--min-width", sweep_opts.min_width)->capture_default_str();
  sweep->add_option("--max-width", sweep_opts.max_width)->capture_default_str();
  sweep->add_option("--min-depth", sweep_opts.min_depth, "Number of weight layers")->capture_default_str();
  sweep->add_option("--max-depth", sweep_opts.max_depth)->capture_default_str();
  sweep->add_option("--min-r", sweep_opts.min_r)->capture_default_str();
  sweep->add_option("--max-r", sweep_opts.max_r)->capture_default_str();
  sweep->add_flag("--all-widths", sweep_all, "Do not restrict to non-increasing widths");
  sweep->add_flag("--single-output", sweep_single, "Also include d_L = 1");
  dim_flags.add(sweep);
  sweep->callback([&] {
    action = [&] {
      sweep_opts.non_increasing = !sweep_all;
      sweep_opts.multi_output = !sweep_single;
      if (sweep_opts.min_width < 1 || sweep_opts.max_width < sweep_opts.min_width || sweep_opts.min_depth < 1 ||
          sweep_opts.max_depth < sweep_opts.min_depth || sweep_opts.min_r < 1 || sweep_opts.max_r < sweep_opts.min_r)
        throw UsageError("sweep: empty or invalid range");
      return cmd_sweep(sweep_opts, dim_flags, format);
    };
  });

  std::string member_file;
  std::string member_matrix;
  bool member_exact = false;
  double member_tol = 1e-9;
  std::uint64_t member_seed = 1;
  auto* member = app.add_subcommand("member", "Neuromanifold / neurovariety membership of a polynomial tuple");
  member->add_option("arch", arch_text, "Architecture")->required();
  member->add_option("--file", member_file, "Polynomial file ('-' for stdin)");
  member->add_option("--matrix", member_matrix, "Binary quadrics as rows 'c11,c12,c22;...'");
  member->add_flag("--exact", member_exact, "Exact rational arithmetic");
  member->add_option("--tol", member_tol, "Relative tolerance in float mode")->capture_default_str();
  member->add_option("--seed", member_seed, "Seed for exact fitting")->capture_default_str();
  member->callback([&] {
    action = [&] {
      return cmd_member(arch_text, member_file, member_matrix, member_exact, member_tol, member_seed, format);
    };
  });

  long long k_from = 0;
  long long k_to = 0;
  bool ed_census = false;
  int ed_starts = 500;
  std::uint64_t ed_seed = 1;
  auto* eddeg = app.add_subcommand("eddeg", "Generic ED degree of the (2,2,k) neurovariety");
  eddeg->add_option("k", k_from, "k >= 2")->required();
  eddeg->add_option("--to", k_to, "Last k of a range");
  eddeg->add_flag("--census", ed_census, "Multistart census of critical points instead");
  eddeg->add_option("--starts", ed_starts, "Census starts")->capture_default_str();
  eddeg->add_option("--seed", ed_seed, "Census seed")->capture_default_str();
  eddeg->callback([&] { action = [&] { return cmd_eddeg(k_from, k_to, ed_census, ed_starts, ed_seed, format); }; });

  auto* experiment = app.add_subcommand("experiment", "Training experiment on the (2,2,3) quadratic network");
  experiment->require_subcommand(1);
  experiment->fallthrough();
  std::string config_path;
  std::string profile = "desk";
  std::string out_dir;
  std::optional<std::uint64_t> exp_seed;
  std::optional<int> exp_datasets;
  std::optional<int> exp_epochs;
  auto* run = experiment->add_subcommand("run", "Train all datasets and cluster the learned functions");
  run->add_option("--config", config_path, "JSON config");
  run->add_option("--profile", profile, "desk or paper (ignored with --config)")->capture_default_str();
  run->add_option("--out", out_dir, "Directory for config.json, runs.csv, census.csv");
  run->add_option("--seed", exp_seed, "Override the master seed");
  run->add_option("--datasets", exp_datasets, "Override the number of datasets");
  run->add_option("--epochs", exp_epochs, "Override max epochs");
  run->callback([&] {
    action = [&] {
      return cmd_experiment_run(config_path, profile, out_dir, exp_seed, exp_datasets, exp_epochs, format);
    };
  });
  std::string in_dir;
  std::optional<double> census_eps;
  std::optional<int> census_floor;
  auto* census = experiment->add_subcommand("census", "Re-cluster the runs of a previous experiment");
  census->add_option("--in", in_dir, "Directory written by 'experiment run --out'")->required();
  census->add_option("--eps", census_eps, "Override the clustering tolerance");
  census->add_option("--floor", census_floor, "Override the frequency floor");
  census->callback([&] { action = [&] { return cmd_experiment_census(in_dir, census_eps, census_floor, format); }; });

  auto* known = app.add_subcommand("known", "Catalogued facts for an architecture");
  known->add_option("arch", arch_text, "Architecture")->required();
  known->callback([&] { action = [&] { return cmd_known(arch_text, format); }; });

  auto* table = app.add_subcommand("table1", "Recompute the 27 shallow r = 2 architectures and compare");
  dim_flags.add(table);
  table->callback([&] { action = [&] { return cmd_table1(dim_flags, format); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  try {
    status = action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return status;
}
