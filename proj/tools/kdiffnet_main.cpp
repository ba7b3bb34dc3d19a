// kdiffnet command-line front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid spec or parameter,
// 3 knowledge missing for the chosen method, 4 file I/O, 5 some sweep points failed.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kdiffnet/error.hpp"
#include "kdiffnet/eval.hpp"
#include "kdiffnet/io.hpp"

namespace fs = std::filesystem;
using namespace kdiffnet;

namespace {

enum Exit { kOk = 0, kOther = 1, kSpec = 2, kKnowledge = 3, kIo = 4, kSweepFailures = 5 };

/// Flag values as given on the command line, keyed like the config file.
struct Flags {
  std::string config;
  std::string out;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
};

/// Effective configuration: defaults < config file < --set < explicit flags.
io::KeyValues resolve(const Flags& flags) {
  io::KeyValues cfg;
  if (!flags.config.empty()) cfg = io::read_key_values(flags.config);
  for (const std::string& s : flags.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("--set expects KEY=VALUE, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : flags.values) cfg.set(k, v);
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double num(const std::string& key, const std::string& text) {
  try {
    return io::parse_double(text);
  } catch (const IoError&) {
    throw ParameterError(key + ": expected a number, got '" + text + "'");
  }
}

double get_num(const io::KeyValues& cfg, const std::string& key, double fallback) {
  return cfg.has(key) ? num(key, cfg.get(key)) : fallback;
}

int get_int(const io::KeyValues& cfg, const std::string& key, int fallback) {
  if (!cfg.has(key)) return fallback;
  const double x = num(key, cfg.get(key));
  if (x != std::floor(x) || std::abs(x) > 1e9) throw ParameterError(key + ": expected an integer");
  return static_cast<int>(x);
}

std::vector<double> get_list(const io::KeyValues& cfg, const std::string& key) {
  std::vector<double> out;
  if (!cfg.has(key)) return out;
  for (const std::string& s : split_list(cfg.get(key))) out.push_back(num(key, s));
  return out;
}

std::uint64_t get_seed(const io::KeyValues& cfg) {
  if (!cfg.has("seed")) return 0;
  try {
    std::size_t used = 0;
    const std::string& s = cfg.get("seed");
    const auto seed = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return seed;
  } catch (const std::exception&) {
    throw ParameterError("seed: expected a non-negative integer");
  }
}

SolverConfig solver_config(const io::KeyValues& cfg) {
  SolverConfig c;
  c.lambda_n = get_num(cfg, "lambda", c.lambda_n);
  c.eps = get_num(cfg, "eps", c.eps);
  c.gamma = get_num(cfg, "gamma", c.gamma);
  c.rho = get_num(cfg, "rho", c.rho);
  c.max_iter = get_int(cfg, "max_iter", c.max_iter);
  c.tol = get_num(cfg, "tol", c.tol);
  c.cond_limit = get_num(cfg, "cond_limit", c.cond_limit);
  const std::string v = cfg.get_or("v", "auto");
  if (v != "auto") c.v = num("v", v);
  c.validate();
  return c;
}

io::MatrixFormat matrix_format(const io::KeyValues& cfg) {
  const std::string f = cfg.get_or("format", "text");
  if (f == "text" || f == "csv") return io::MatrixFormat::Text;
  if (f == "bin" || f == "binary") return io::MatrixFormat::Binary;
  throw ParameterError("format: expected text or bin, got '" + f + "'");
}

fs::path out_dir(const Flags& flags, const char* fallback) {
  const fs::path dir = flags.out.empty() ? fs::path(fallback) : fs::path(flags.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    std::map<std::string, std::string> inputs, const io::KeyValues& cfg) {
  io::RunManifest m;
  m.command = command;
  m.seed = get_seed(cfg);
  m.tool_version = KDIFFNET_VERSION;
  for (auto& [name, path] : inputs) {
    if (!fs::exists(path)) throw IoError("input " + name + " does not exist: " + path);
    path = fs::absolute(path).string();
  }
  m.inputs = std::move(inputs);
  m.config = cfg;
  io::write_key_values(dir / "manifest.kv", m.to_kv(), "kdiffnet run manifest");
}

struct Extras {
  std::optional<EdgeWeightMatrix> w2;
  std::optional<NodeGroupSet> groups2;
  std::map<std::string, std::string> inputs;
};

Extras second_source(const io::KeyValues& cfg, int p) {
  Extras x;
  if (cfg.has("w2")) {
    x.w2 = EdgeWeightMatrix(io::read_matrix(cfg.get("w2")));
    x.inputs["w2"] = cfg.get("w2");
  }
  if (cfg.has("groups2")) {
    x.groups2 = io::read_node_groups(cfg.get("groups2"), p);
    x.inputs["groups2"] = cfg.get("groups2");
  }
  return x;
}

SimulatedDataset load_data(const io::KeyValues& cfg) {
  if (!cfg.has("data")) throw ParameterError("data: a dataset bundle directory is required (--data)");
  return io::load_dataset(cfg.get("data"));
}

void print_score(std::ostream& os, const EdgeScore& s) {
  os << "tpr\t" << io::format_double(s.tpr()) << "\n"
     << "fpr\t" << io::format_double(s.fpr()) << "\n"
     << "precision\t" << io::format_double(s.precision) << "\n"
     << "recall\t" << io::format_double(s.recall) << "\n"
     << "f1\t" << io::format_double(s.f1) << "\n";
}

int cmd_simulate(const Flags& flags) {
  const io::KeyValues cfg = resolve(flags);
  const SimulationSpec spec = io::spec_from_kv(cfg);
  std::optional<Matrix> dist;
  std::map<std::string, std::string> inputs;
  if (cfg.has("distances")) {
    dist = io::read_matrix(cfg.get("distances"));
    inputs["distances"] = cfg.get("distances");
  }
  const SimulatedDataset ds = dist ? gen_dataset(spec, *dist) : gen_dataset(spec);
  const fs::path dir = out_dir(flags, "kdiffnet-data");
  io::save_dataset(dir, ds, matrix_format(cfg));
  write_manifest(dir, "simulate", inputs, cfg);
  std::cout << dir.string() << "\n";
  return kOk;
}

int cmd_fit(const Flags& flags) {
  const io::KeyValues cfg = resolve(flags);
  const SimulatedDataset ds = load_data(cfg);
  const Method method = parse_method(cfg.get_or("method", "kdiffnet-e"));
  const SolverConfig sc = solver_config(cfg);
  Extras extra = second_source(cfg, static_cast<int>(ds.x_c.cols()));
  SweepOptions opts;
  opts.base = sc;
  opts.w2 = extra.w2;
  opts.groups2 = extra.groups2;
  opts.eps_e = get_num(cfg, "eps_e", opts.eps_e);

  const auto start = std::chrono::steady_clock::now();
  FitContext ctx(ds, method, opts);
  const double v = sc.v ? *sc.v : ctx.auto_v(default_v_grid(), sc.cond_limit);
  const BackwardMap& b = ctx.backward(v);
  io::ResultBundle r;
  r.network = ctx.fit(b, sc.lambda_n, sc.eps, sc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (ds.true_delta.size() > 0) r.truth = ds.true_delta;
  r.meta.set("method", to_string(method));
  r.meta.set("lambda_n", sc.lambda_n);
  r.meta.set("eps", sc.eps);
  r.meta.set("v", v);
  r.meta.set("fit_seconds", seconds);
  if (!r.network.converged) {
    std::cerr << "warning: solver did not converge within " << sc.max_iter << " iterations\n";
  }
  const fs::path dir = out_dir(flags, "kdiffnet-fit");
  io::save_result(dir, r, matrix_format(cfg));
  extra.inputs["data"] = cfg.get("data");
  write_manifest(dir, "fit", extra.inputs, cfg);
  std::cout << dir.string() << "\n";
  return kOk;
}

int cmd_sweep(const Flags& flags) {
  const io::KeyValues cfg = resolve(flags);
  const SimulatedDataset ds = load_data(cfg);
  const Method method = parse_method(cfg.get_or("method", "kdiffnet-e"));
  SweepOptions opts;
  opts.workers = get_int(cfg, "workers", 1);
  if (opts.workers < 1) throw ParameterError("workers: must be at least 1");
  opts.eps_e = get_num(cfg, "eps_e", opts.eps_e);
  Extras extra = second_source(cfg, static_cast<int>(ds.x_c.cols()));
  opts.w2 = extra.w2;
  opts.groups2 = extra.groups2;
  std::optional<SimulatedDataset> validation;
  if (cfg.has("validation")) {
    validation = io::load_dataset(cfg.get("validation"));
    opts.validation = &*validation;
    extra.inputs["validation"] = cfg.get("validation");
  }

  SweepGrid grid;
  grid.lambdas = get_list(cfg, "lambda");
  if (grid.lambdas.empty()) {
    grid.lambdas = lambda_grid(static_cast<double>(ds.x_c.cols()), static_cast<int>(ds.x_c.rows()),
                               static_cast<int>(ds.x_d.rows()), get_num(cfg, "grid_base", 0.1),
                               get_int(cfg, "grid_steps", 10));
  }
  if (cfg.has("eps")) grid.eps = get_list(cfg, "eps");
  const std::vector<std::string> vs = split_list(cfg.get_or("v", "auto"));
  if (vs.size() == 1 && vs[0] == "auto") {
    grid.v = VPolicy::automatic();
  } else {
    std::vector<double> values;
    for (const std::string& s : vs) values.push_back(num("v", s));
    grid.v = VPolicy::fixed(values);
  }
  // The list-valued keys are grids here, not the single-fit values.
  io::KeyValues single = cfg;
  single.set("lambda", io::format_double(grid.lambdas.front()));
  single.set("eps", io::format_double(grid.eps.front()));
  single.set("v", vs.front() == "auto" ? "auto" : vs.front());
  opts.base = solver_config(single);

  const SweepResult r = sweep(ds, method, grid, opts);
  const fs::path dir = out_dir(flags, "kdiffnet-sweep");
  io::write_sweep_table(dir / "sweep.tsv", r);
  io::write_sweep_summary(dir / "summary.kv", r, method);
  extra.inputs["data"] = cfg.get("data");
  write_manifest(dir, "sweep", extra.inputs, cfg);

  std::size_t unconverged = 0;
  for (const SweepPoint& pt : r.points) {
    if (pt.ok() && !pt.converged) ++unconverged;
    if (!pt.ok()) std::cerr << "error at lambda=" << pt.lambda_n << " eps=" << pt.eps << " v=" << pt.v
                            << ": " << pt.error << "\n";
  }
  if (unconverged) std::cerr << "warning: " << unconverged << " grid points did not converge\n";
  std::cout << "auc\t" << io::format_double(r.auc) << "\n";
  if (r.has_best) std::cout << "best_f1\t" << io::format_double(r.best_f1) << "\n";
  return r.failures() ? kSweepFailures : kOk;
}

int cmd_rate(const Flags& flags) {
  const io::KeyValues cfg = resolve(flags);
  const int p = get_int(cfg, "p", 50);
  std::vector<int> n_list;
  for (const double n : get_list(cfg, "n_list")) {
    if (n != std::floor(n)) throw ParameterError("n_list: expected integers");
    n_list.push_back(static_cast<int>(n));
  }
  if (n_list.empty()) n_list = {100, 200, 400, 800};
  RateOptions opts;
  opts.sparsity = get_num(cfg, "sparsity", opts.sparsity);
  opts.background_prob = get_num(cfg, "background_prob", opts.background_prob);
  opts.edge_value = get_num(cfg, "edge_value", *opts.edge_value);
  opts.lambda_scale = get_num(cfg, "lambda_scale", opts.lambda_scale);
  opts.v_scale = get_num(cfg, "v_scale", opts.v_scale);
  const RateResult r = rate_experiment(p, n_list, get_int(cfg, "trials", 5), get_seed(cfg), opts);

  const fs::path dir = out_dir(flags, "kdiffnet-rate");
  {
    std::ofstream out(dir / "rate.tsv");
    if (!out) throw IoError("cannot write " + (dir / "rate.tsv").string());
    out << "n\tmean_error\tstddev_error\n";
    for (const RateRow& row : r.rows) {
      out << row.n << "\t" << io::format_double(row.mean_error) << "\t"
          << io::format_double(row.stddev_error) << "\n";
    }
    out << "# slope\t" << io::format_double(r.slope) << "\n";
  }
  io::KeyValues summary;
  summary.set("p", p);
  summary.set("slope", r.slope);
  io::write_key_values(dir / "rate_summary.kv", summary);
  write_manifest(dir, "rate", {}, cfg);
  std::cout << "slope\t" << io::format_double(r.slope) << "\n";
  return kOk;
}

int cmd_bench(const Flags& flags) {
  const io::KeyValues cfg = resolve(flags);
  SimulationSpec spec;
  spec.setting = Setting::EG;
  spec.p = get_int(cfg, "p", 200);
  spec.n_c = spec.n_d = get_int(cfg, "n", spec.p / 2);
  spec.num_groups = std::max(1, spec.p / 50);
  spec.seed = get_seed(cfg);
  const SimulatedDataset ds = gen_dataset(spec);

  std::vector<Method> methods;
  for (const std::string& m : split_list(cfg.get_or("methods", "diffee,kdiffnet-e,kdiffnet-g"))) {
    methods.push_back(parse_method(m));
  }
  std::vector<double> lambdas = get_list(cfg, "lambda");
  if (lambdas.empty()) lambdas = lambda_grid(spec.p, spec.n_c, spec.n_d, 0.1, 5);
  const int repeats = get_int(cfg, "repeats", 3);
  SweepOptions opts;
  opts.base = solver_config(io::KeyValues{});
  opts.base.max_iter = get_int(cfg, "max_iter", opts.base.max_iter);
  opts.base.tol = get_num(cfg, "tol", opts.base.tol);
  opts.base.validate();
  const double eps = cfg.has("eps") ? get_list(cfg, "eps").front() : 1.0;

  // One backward map shared by every method.
  FitContext shared(ds, methods.front(), opts);
  const std::string v_text = cfg.get_or("v", "auto");
  const double v = v_text == "auto" ? shared.auto_v(default_v_grid(), opts.base.cond_limit)
                                    : num("v", v_text);
  const BackwardMap b = shared.backward(v);

  const fs::path dir = out_dir(flags, "kdiffnet-bench");
  std::ofstream out(dir / "bench.tsv");
  if (!out) throw IoError("cannot write " + (dir / "bench.tsv").string());
  out << "method\tp\tlambdas\tmean_seconds_per_lambda\tstddev_seconds\tlog10_ms_per_lambda\n";
  for (const Method m : methods) {
    const FitContext ctx(ds, m, opts);
    const TimingStats t = time_harness(
        [&] {
          for (const double lam : lambdas) (void)ctx.fit(b, lam, eps, opts.base);
        },
        repeats);
    const double per = t.mean_seconds / static_cast<double>(lambdas.size());
    out << to_string(m) << "\t" << spec.p << "\t" << lambdas.size() << "\t" << io::format_double(per)
        << "\t" << io::format_double(t.stddev_seconds / static_cast<double>(lambdas.size())) << "\t"
        << io::format_double(std::log10(per * 1e3)) << "\n";
    std::cout << to_string(m) << "\t" << io::format_double(per) << "\n";
  }
  write_manifest(dir, "bench", {}, cfg);
  return kOk;
}

int cmd_score(const Flags& flags) {
  const io::KeyValues cfg = resolve(flags);
  if (!cfg.has("result")) throw ParameterError("result: a result bundle directory is required (--result)");
  const io::ResultBundle r = io::load_result(cfg.get("result"));
  Matrix truth;
  if (cfg.has("truth")) {
    truth = io::read_matrix(cfg.get("truth"));
  } else if (r.truth) {
    truth = *r.truth;
  } else {
    throw IoError("result bundle has no true_delta; pass --truth");
  }
  const EdgeScore s = score_edges(r.network.delta, true_support(truth, 0.0));
  print_score(std::cout, s);
  if (!flags.out.empty()) {
    const fs::path dir = out_dir(flags, ".");
    io::KeyValues kv;
    kv.set("tpr", s.tpr());
    kv.set("fpr", s.fpr());
    kv.set("precision", s.precision);
    kv.set("recall", s.recall);
    kv.set("f1", s.f1);
    io::write_key_values(dir / "score.kv", kv);
  }
  return kOk;
}

/// Options registered as strings so that only explicitly given flags override the config file.
void add_value(CLI::App* sub, Flags& flags, const std::string& flag, const std::string& key,
               const std::string& help) {
  sub->add_option_function<std::string>(
      flag, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
}

void add_list(CLI::App* sub, Flags& flags, const std::string& flag, const std::string& key,
              const std::string& help) {
  sub->add_option_function<std::vector<std::string>>(
         flag,
         [&flags, key](const std::vector<std::string>& v) {
           std::string joined;
           for (const auto& s : v) joined += (joined.empty() ? "" : ",") + s;
           flags.values[key] = joined;
         },
         help)
      ->delimiter(',');
}

void add_shared(CLI::App* sub, Flags& flags, bool lists) {
  sub->add_option("--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", flags.out, "output directory");
  sub->add_option("--set", flags.sets, "extra KEY=VALUE configuration entries");
  add_value(sub, flags, "--seed", "seed", "random seed");
  add_value(sub, flags, "--method", "method", "diffee, kdiffnet-e, kdiffnet-g, kdiffnet-eg or kdiffnet-multi");
  if (lists) {
    add_list(sub, flags, "--lambda", "lambda", "lambda_n value(s)");
    add_list(sub, flags, "--eps", "eps", "eps value(s)");
    add_list(sub, flags, "--v", "v", "auto or thresholding level(s)");
  } else {
    add_value(sub, flags, "--lambda", "lambda", "lambda_n");
    add_value(sub, flags, "--eps", "eps", "group weight eps");
    add_value(sub, flags, "--v", "v", "auto or thresholding level");
  }
  add_value(sub, flags, "--max-iter", "max_iter", "iteration cap of the proximal solvers");
  add_value(sub, flags, "--tol", "tol", "stopping tolerance of the proximal solvers");
  add_value(sub, flags, "--workers", "workers", "concurrent grid points");
  add_value(sub, flags, "--format", "format", "matrix files: text or bin");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential Gaussian graphical models with edge and group knowledge"};
  app.set_version_flag("--version", std::string(KDIFFNET_VERSION));
  app.require_subcommand(1);
  Flags flags;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset bundle");
  add_shared(sim, flags, false);
  for (const char* key : {"p", "n_c", "n_d", "setting", "sparsity", "group_size", "num_groups",
                          "edge_value", "background_prob", "delta_c", "delta_d", "knowledge",
                          "er_prob", "distances"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    add_value(sim, flags, flag, key, std::string("simulation ") + key);
  }

  auto* fit = app.add_subcommand("fit", "fit one estimator to a dataset bundle");
  add_shared(fit, flags, false);
  add_value(fit, flags, "--data", "data", "dataset bundle directory");
  add_value(fit, flags, "--w2", "w2", "second edge weight matrix (multi)");
  add_value(fit, flags, "--groups2", "groups2", "second node group file (multi)");

  auto* sw = app.add_subcommand("sweep", "fit over a lambda x eps x v grid and score");
  add_shared(sw, flags, true);
  add_value(sw, flags, "--data", "data", "dataset bundle directory");
  add_value(sw, flags, "--validation", "validation", "held-out bundle used to pick the best point");
  add_value(sw, flags, "--w2", "w2", "second edge weight matrix (multi)");
  add_value(sw, flags, "--groups2", "groups2", "second node group file (multi)");

  auto* rate = app.add_subcommand("rate", "error against sample size at theory-scaled lambda");
  add_shared(rate, flags, false);
  add_value(rate, flags, "--p", "p", "dimension");
  add_list(rate, flags, "--n-list", "n_list", "sample sizes");
  add_value(rate, flags, "--trials", "trials", "datasets per sample size");

  auto* bench = app.add_subcommand("bench", "time estimators on one shared backward map");
  add_shared(bench, flags, true);
  add_value(bench, flags, "--p", "p", "dimension");
  add_value(bench, flags, "--n", "n", "samples per condition");
  add_list(bench, flags, "--methods", "methods", "methods to time");
  add_value(bench, flags, "--repeats", "repeats", "timed repetitions");

  auto* score = app.add_subcommand("score", "score a saved result bundle against its truth");
  add_shared(score, flags, false);
  add_value(score, flags, "--result", "result", "result bundle directory");
  add_value(score, flags, "--truth", "truth", "true delta matrix overriding the bundled one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kSpec;
  }

  try {
    if (sim->parsed()) return cmd_simulate(flags);
    if (fit->parsed()) return cmd_fit(flags);
    if (sw->parsed()) return cmd_sweep(flags);
    if (rate->parsed()) return cmd_rate(flags);
    if (bench->parsed()) return cmd_bench(flags);
    if (score->parsed()) return cmd_score(flags);
  } catch (const SpecError& e) {
    std::cerr << "error: invalid spec: " << e.what() << "\n";
    return kSpec;
  } catch (const MissingKnowledgeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kKnowledge;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSpec;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSpec;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
