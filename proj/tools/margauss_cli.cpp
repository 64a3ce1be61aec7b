// Command-line front end: synthetic streams, single runs, grids, timing and
// oracle checks.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "margauss/approx_math.hpp"
#include "margauss/datagen.hpp"
#include "margauss/harness.hpp"
#include "margauss/registry.hpp"

namespace {

using namespace margauss;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenOptions {
  std::string gen;
  std::size_t d = 200;
  double alpha = 0.1;
  std::vector<std::size_t> categories;
  std::size_t pow2_categories = 0;
  std::size_t draws_per_category = 1;
  std::string selector = "zipf";
  double zipf_exponent = 1.75;
  double geometric_ratio = 0.9;
  double weight_std = 1.0;
};

struct AlgoOptions {
  std::string algo = "gauss-taylor-laplace";
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double eta = 0.1;
  double l2 = 0.0;
  double adagrad_eps = 1e-6;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
  std::string mode = "covariance";
  std::size_t dense_dim = 0;
  double vb_tol = 1e-8;
  int vb_max_iters = 20;
};

struct Common {
  std::optional<std::uint64_t> seed;
  std::uint64_t T = 0;
  std::string out;
  std::string replay;
  std::string weights;
  double checkpoint_ratio = 1.25;
};

void add_gen_options(CLI::App* app, GenOptions& g) {
  app->add_option("--gen", g.gen,
                  "Generator: random_binary | random_uniform | categorical");
  app->add_option("--d", g.d, "Number of features (random kinds)");
  app->add_option("--alpha", g.alpha, "Per-feature activation probability");
  app->add_option("--categories", g.categories, "Category sizes (categorical)");
  app->add_option("--pow2-categories", g.pow2_categories,
                  "Use categories of sizes 2^1 .. 2^N (categorical)");
  app->add_option("--draws-per-category", g.draws_per_category,
                  "Features drawn from each category per example");
  app->add_option("--selector", g.selector, "Category selector: zipf | geometric");
  app->add_option("--zipf-exponent", g.zipf_exponent, "Zipf exponent s in c/(n+1)^s");
  app->add_option("--geometric-ratio", g.geometric_ratio,
                  "Decay ratio for the geometric selector");
  app->add_option("--weight-std", g.weight_std, "Std of the true log-odds weights");
}

void add_algo_options(CLI::App* app, AlgoOptions& a) {
  app->add_option("--algo", a.algo, "Algorithm id (see `run --list-algos`)");
  app->add_option("--prior-mean", a.prior_mean, "Prior mean mu0");
  app->add_option("--prior-var", a.prior_var, "Prior variance sigma0^2");
  app->add_option("--eta", a.eta, "SGD learning rate");
  app->add_option("--l2", a.l2, "SGD L2 strength");
  app->add_option("--adagrad-eps", a.adagrad_eps, "AdaGrad epsilon");
  app->add_option("--newton-tol", a.newton_tol, "Newton tolerance");
  app->add_option("--newton-max-iters", a.newton_max_iters, "Newton iteration cap");
  app->add_option("--mode", a.mode, "dimgauss algebra: covariance | precision");
  app->add_option("--dense-dim", a.dense_dim, "Dimension for dimgauss-dense-*");
  app->add_option("--vb-tol", a.vb_tol, "VB Newton tolerance");
  app->add_option("--vb-max-iters", a.vb_max_iters, "VB Newton iteration cap");
}

void add_common(CLI::App* app, Common& c, bool with_replay) {
  app->add_option("--seed", c.seed, "Random seed (required when sampling)");
  app->add_option("--T", c.T, "Number of rounds");
  app->add_option("--out", c.out, "Output path");
  if (with_replay) {
    app->add_option("--replay", c.replay, "Replay a stream file instead of generating");
    app->add_option("--weights", c.weights, "Comparator weights for --replay");
  }
  app->add_option("--checkpoint-ratio", c.checkpoint_ratio,
                  "Geometric ratio between checkpoints");
}

std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  const char* dir = std::getenv("MARGAUSS_OUT_DIR");
  std::filesystem::path p(path);
  if (dir && *dir && p.is_relative()) return (std::filesystem::path(dir) / p).string();
  return path;
}

GenConfig build_gen(const GenOptions& g, std::uint64_t seed) {
  GenConfig cfg;
  try {
    cfg.kind = parse_gen_kind(g.gen);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.d = g.d;
  cfg.alpha = g.alpha;
  cfg.category_sizes = g.categories;
  for (std::size_t j = 1; j <= g.pow2_categories; ++j)
    cfg.category_sizes.push_back(std::size_t{1} << j);
  cfg.draws_per_category = g.draws_per_category;
  if (g.selector == "zipf") {
    cfg.selector = CategorySelector::zipf;
  } else if (g.selector == "geometric") {
    cfg.selector = CategorySelector::geometric;
  } else {
    throw ConfigError("--selector must be zipf or geometric");
  }
  cfg.zipf_exponent = g.zipf_exponent;
  cfg.geometric_ratio = g.geometric_ratio;
  cfg.weight_std = g.weight_std;
  cfg.seed = seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

AlgorithmSpec build_algo(const AlgoOptions& a, std::uint64_t seed) {
  AlgorithmSpec spec;
  spec.id = a.algo;
  spec.prior.mu0 = a.prior_mean;
  spec.prior.sigma0_sq = a.prior_var;
  spec.newton_tol = a.newton_tol;
  spec.newton_max_iters = a.newton_max_iters;
  if (a.mode == "covariance") {
    spec.multi_mode = MultiMode::covariance;
  } else if (a.mode == "precision") {
    spec.multi_mode = MultiMode::precision;
  } else {
    throw ConfigError("--mode must be covariance or precision");
  }
  spec.dense_dim = a.dense_dim;
  spec.sgd = {a.eta, a.l2, a.adagrad_eps};
  spec.vb.newton_tol = a.vb_tol;
  spec.vb.newton_max_iters = a.vb_max_iters;
  spec.vb.rng_seed = substream_seed(seed, 100);
  try {
    make_learner(spec);  // validates id and parameters
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

std::uint64_t require_seed(const Common& c, const std::string& why) {
  if (!c.seed) throw ConfigError("--seed is required " + why);
  return *c.seed;
}

void print_algos() {
  for (const auto& id : known_algorithm_ids()) std::cout << id << '\n';
}

// Runs one (algorithm, data) pair described by the options.
RegretSeries run_once(const AlgorithmSpec& spec, const GenOptions& g,
                      const Common& c, std::uint64_t seed) {
  auto learner = make_learner(spec);
  RunOptions opts;
  if (!c.replay.empty()) {
    std::ifstream in(c.replay);
    if (!in) throw std::runtime_error("cannot open replay file '" + c.replay + "'");
    std::unordered_map<FeatureId, double> weights;
    if (!c.weights.empty()) {
      std::ifstream win(c.weights);
      if (!win) throw std::runtime_error("cannot open weights file '" + c.weights + "'");
      weights = read_weights(win);
    }
    ReplaySource src(in, std::move(weights));
    opts.max_rounds = c.T;
    // schedule needs a horizon; record densely enough for any replay length
    opts.checkpoints = geometric_checkpoints(c.T ? c.T : std::uint64_t{1} << 40,
                                             c.checkpoint_ratio);
    return run_stream(*learner, src, opts);
  }
  GeneratedSource src(gen_true_model(build_gen(g, seed)), c.T);
  opts.max_rounds = c.T;
  opts.checkpoints = geometric_checkpoints(c.T, c.checkpoint_ratio);
  return run_stream(*learner, src, opts);
}

std::map<std::string, std::vector<double>> parse_grid(const std::string& text) {
  // key=v1,v2;key2=v3
  std::map<std::string, std::vector<double>> axes;
  std::stringstream ss(text);
  std::string axis;
  while (std::getline(ss, axis, ';')) {
    if (axis.empty()) continue;
    const auto eq = axis.find('=');
    if (eq == std::string::npos)
      throw ConfigError("grid axis must look like key=v1,v2 (got '" + axis + "')");
    const std::string key = axis.substr(0, eq);
    std::stringstream vs(axis.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      try {
        std::size_t used = 0;
        axes[key].push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw ConfigError("grid value '" + v + "' for '" + key + "' is not a number");
      }
    }
  }
  if (axes.empty()) throw ConfigError("--grid is empty");
  return axes;
}

void apply_param(AlgoOptions& a, std::uint64_t& seed, const std::string& key,
                 double v) {
  if (key == "prior-var") a.prior_var = v;
  else if (key == "prior-mean") a.prior_mean = v;
  else if (key == "eta") a.eta = v;
  else if (key == "l2") a.l2 = v;
  else if (key == "adagrad-eps") a.adagrad_eps = v;
  else if (key == "seed") seed = static_cast<std::uint64_t>(v);
  else throw ConfigError("unknown grid key '" + key +
                         "' (use prior-var, prior-mean, eta, l2, adagrad-eps, seed)");
}

int cmd_simulate(const GenOptions& g, const Common& c) {
  const std::uint64_t seed = require_seed(c, "for simulate");
  if (c.out.empty()) throw ConfigError("--out is required for simulate");
  if (c.T == 0) throw ConfigError("--T must be positive for simulate");
  const TrueModel model = gen_true_model(build_gen(g, seed));
  StreamGenerator gen(model);
  std::ofstream os(resolve_out(c.out), std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + c.out + "' for writing");
  for (std::uint64_t t = 0; t < c.T; ++t) os << format_example(gen.next()) << '\n';
  if (!c.weights.empty()) {
    std::ofstream ws(resolve_out(c.weights), std::ios::binary);
    if (!ws) throw std::runtime_error("cannot open '" + c.weights + "' for writing");
    write_weights(ws, model.weights);
  }
  return 0;
}

int cmd_run(const AlgoOptions& a, const GenOptions& g, const Common& c) {
  std::uint64_t seed = 0;
  if (c.replay.empty()) {
    if (g.gen.empty()) throw ConfigError("run needs --gen or --replay");
    if (c.T == 0) throw ConfigError("--T must be positive when generating");
    seed = require_seed(c, "when generating data");
  } else if (is_stochastic(a.algo)) {
    seed = require_seed(c, "for sampling-based algorithms");
  } else {
    seed = c.seed.value_or(0);
  }
  const AlgorithmSpec spec = build_algo(a, seed);
  const RegretSeries series = run_once(spec, g, c, seed);
  if (!c.out.empty()) emit_csv(series, resolve_out(c.out));
  std::printf("algo=%s rounds=%llu regret=%.6f r_T=%.6f warnings=%zu seconds=%.3f\n",
              a.algo.c_str(), static_cast<unsigned long long>(series.rounds),
              series.final_regret, series.r_T, series.warnings, series.seconds);
  return 0;
}

int cmd_grid(const AlgoOptions& a, const GenOptions& g, const Common& c,
             const std::string& grid_text, unsigned threads) {
  const auto axes = parse_grid(grid_text);
  std::uint64_t base_seed = 0;
  if (c.replay.empty()) {
    if (g.gen.empty()) throw ConfigError("grid needs --gen or --replay");
    if (c.T == 0) throw ConfigError("--T must be positive when generating");
    base_seed = require_seed(c, "for grid with generated data");
  } else {
    base_seed = c.seed.value_or(0);
  }
  // validate every point before spending time on any
  const auto lattice = make_lattice(axes);
  for (const auto& point : lattice) {
    AlgoOptions probe = a;
    std::uint64_t s = base_seed;
    for (const auto& [k, v] : point) apply_param(probe, s, k, v);
    build_algo(probe, s);
  }
  auto results = grid_search(
      lattice,
      [&](const ParamSet& point) {
        AlgoOptions local = a;
        std::uint64_t s = base_seed;
        for (const auto& [k, v] : point) apply_param(local, s, k, v);
        return run_once(build_algo(local, s), g, c, s);
      },
      threads);
  if (!c.out.empty()) {
    emit_csv(results, resolve_out(c.out));
  } else {
    emit_csv(results, std::cout);
  }
  for (const auto& r : results)
    if (!r.ok) std::fprintf(stderr, "grid point %zu failed: %s\n", r.index, r.error.c_str());
  return 0;
}

int cmd_bench(std::vector<std::string> algos, const AlgoOptions& a,
              const GenOptions& g, const Common& c) {
  const std::uint64_t seed = require_seed(c, "for bench");
  if (g.gen.empty()) throw ConfigError("bench needs --gen");
  if (c.T == 0) throw ConfigError("--T must be positive for bench");
  if (algos.empty()) algos = {a.algo};
  std::vector<AlgorithmSpec> specs;
  for (const auto& id : algos) {
    AlgoOptions local = a;
    local.algo = id;
    specs.push_back(build_algo(local, seed));
  }
  std::ostringstream table;
  table << "algo,seconds,examples_per_sec,r_T\n";
  for (const auto& spec : specs) {
    const RegretSeries s = run_once(spec, g, c, seed);
    char line[256];
    std::snprintf(line, sizeof line, "%s,%.3f,%.1f,%.6f\n", spec.id.c_str(), s.seconds,
                  static_cast<double>(s.rounds) / std::max(s.seconds, 1e-9), s.r_T);
    table << line;
    std::cout << line << std::flush;
  }
  if (!c.out.empty()) {
    std::ofstream os(resolve_out(c.out), std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + c.out + "' for writing");
    os << table.str();
  }
  return 0;
}

int cmd_oracle(const std::string& out, int n_mu, int n_var) {
  std::ostringstream os;
  os << "likelihood,mu,sigma_sq,closed_form,quadrature,abs_diff\n";
  double worst[2] = {0.0, 0.0};
  for (int kind = 0; kind < 2; ++kind) {
    const Likelihood lik = kind == 0 ? Likelihood::logistic : Likelihood::probit;
    for (int i = 0; i < n_mu; ++i)
      for (int j = 0; j < n_var; ++j) {
        const double mu = -4.0 + 8.0 * i / std::max(1, n_mu - 1);
        const double var = 10.0 * j / std::max(1, n_var - 1);
        const double closed = shrunk_prediction(1, mu, var, lik).p;
        const double quad = quadrature_mixture_oracle(1, mu, var, lik);
        const double diff = std::abs(closed - quad);
        worst[kind] = std::max(worst[kind], diff);
        char line[200];
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g,%.3e\n",
                      kind == 0 ? "logistic" : "probit", mu, var, closed, quad, diff);
        os << line;
      }
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(resolve_out(out), std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
    f << os.str();
  }
  std::fprintf(stderr, "max |closed - quadrature|: logistic %.3e, probit %.3e\n",
               worst[0], worst[1]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate Bayesian online logistic/probit regression toolkit"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "INI/TOML config file; command-line flags override it");

  GenOptions gen;
  AlgoOptions algo;
  Common common;
  bool list_algos = false;
  std::string grid_text;
  unsigned threads = 0;
  std::vector<std::string> bench_algos;
  std::string oracle_out;
  int oracle_mu = 41, oracle_var = 41;

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic stream to a file");
  add_gen_options(simulate, gen);
  add_common(simulate, common, false);
  simulate->add_option("--weights-out", common.weights, "Also write the true weights");

  auto* run = app.add_subcommand("run", "Run one algorithm and record its regret curve");
  add_gen_options(run, gen);
  add_algo_options(run, algo);
  add_common(run, common, true);
  run->add_flag("--list-algos", list_algos, "Print algorithm ids and exit");

  auto* grid = app.add_subcommand("grid", "Sweep a hyperparameter lattice");
  add_gen_options(grid, gen);
  add_algo_options(grid, algo);
  add_common(grid, common, true);
  grid->add_option("--grid", grid_text, "Lattice, e.g. 'prior-var=0.8,0.9,1;eta=0.1'")
      ->required();
  grid->add_option("--threads", threads, "Worker threads (0: hardware)");

  auto* bench = app.add_subcommand("bench", "Time algorithms on one generated stream");
  add_gen_options(bench, gen);
  add_algo_options(bench, algo);
  add_common(bench, common, false);
  bench->add_option("--algos", bench_algos, "Algorithm ids to time");

  auto* oracle = app.add_subcommand("oracle", "Compare closed-form predictions with quadrature");
  oracle->add_option("--out", oracle_out, "CSV output path (default stdout)");
  oracle->add_option("--n-mu", oracle_mu, "Grid points in mu over [-4, 4]");
  oracle->add_option("--n-var", oracle_var, "Grid points in sigma^2 over [0, 10]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(gen, common);
    if (*run) {
      if (list_algos) {
        print_algos();
        return 0;
      }
      return cmd_run(algo, gen, common);
    }
    if (*grid) return cmd_grid(algo, gen, common, grid_text, threads);
    if (*bench) return cmd_bench(bench_algos, algo, gen, common);
    if (*oracle) return cmd_oracle(oracle_out, oracle_mu, oracle_var);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
