#include "kdiffnet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "kdiffnet/error.hpp"

namespace kdiffnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool needs_weights(Method m) {
  return m == Method::KDiffNetE || m == Method::KDiffNetEG || m == Method::KDiffNetMulti;
}

bool needs_groups(Method m) {
  return m == Method::KDiffNetG || m == Method::KDiffNetEG || m == Method::KDiffNetMulti;
}

bool uses_eps(Method m) { return m == Method::KDiffNetEG || m == Method::KDiffNetMulti; }

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(n_threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

EdgeScore EdgeScore::from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                 std::int64_t tn) {
  EdgeScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.tn = tn;
  s.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

EdgeScore score_edges(const Matrix& estimated, const std::vector<EdgeIndex>& truth,
                      double threshold, bool exclude_diagonal, bool symmetric) {
  const Eigen::Index p = estimated.rows();
  if (estimated.cols() != p) throw InputError("estimate must be square");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> is_true =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, p, false);
  for (const EdgeIndex& e : truth) {
    if (e.row < 0 || e.row >= p || e.col < 0 || e.col >= p) {
      throw InputError("truth edge index out of range");
    }
    is_true(e.row, e.col) = true;
  }
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  auto tally = [&](bool est, bool tru) {
    if (est && tru) ++tp;
    else if (est) ++fp;
    else if (tru) ++fn;
    else ++tn;
  };
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == j) {
        if (!exclude_diagonal) tally(std::abs(estimated(i, i)) > threshold, is_true(i, i));
        continue;
      }
      if (symmetric) {
        if (i > j) continue;
        const bool est = std::max(std::abs(estimated(i, j)), std::abs(estimated(j, i))) > threshold;
        tally(est, is_true(i, j) || is_true(j, i));
      } else {
        tally(std::abs(estimated(i, j)) > threshold, is_true(i, j));
      }
    }
  }
  return EdgeScore::from_counts(tp, fp, fn, tn);
}

std::vector<double> lambda_grid(double p, int n_c, int n_d, double base, int steps) {
  if (steps < 1) throw ParameterError("lambda grid needs at least one step");
  if (!(p > 1.0)) throw ParameterError("lambda grid needs p > 1");
  if (n_c < 1 || n_d < 1) throw ParameterError("sample counts must be positive");
  if (!(base > 0.0)) throw ParameterError("lambda grid base must be positive");
  const double unit = base * std::sqrt(std::log(p) / double(std::min(n_c, n_d)));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps));
  for (int i = 1; i <= steps; ++i) grid.push_back(unit * i);
  return grid;
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const SweepPoint& pt) { return !pt.ok(); }));
}

void require_knowledge(const SimulatedDataset& ds, Method method) {
  if (needs_weights(method) && !ds.w_e) {
    throw MissingKnowledgeError(to_string(method) + " requires an edge weight matrix (w_e)");
  }
  if (needs_groups(method) && !ds.node_groups) {
    throw MissingKnowledgeError(to_string(method) + " requires node groups");
  }
}

FitContext::FitContext(const SimulatedDataset& ds, Method method, const SweepOptions& opts)
    : method_(method),
      sigma_c_(sample_covariance(SampleBlock(ds.x_c))),
      sigma_d_(sample_covariance(SampleBlock(ds.x_d))),
      cond_limit_(opts.base.cond_limit),
      eps_e_(opts.eps_e) {
  require_knowledge(ds, method);
  if (ds.w_e) w_ = *ds.w_e;
  if (ds.node_groups) eg_ = expand_node_groups(*ds.node_groups);
  if (method == Method::KDiffNetMulti) {
    w2_ = opts.w2 ? *opts.w2 : *w_;
    eg2_ = opts.groups2 ? expand_node_groups(*opts.groups2) : *eg_;
  }
}

const BackwardMap& FitContext::backward(double v) {
  for (const auto& [key, b] : cache_) {
    if (key == v) return b;
  }
  cache_.emplace_back(v, proxy_backward_mapping(sigma_c_, sigma_d_, v, cond_limit_));
  return cache_.back().second;
}

double FitContext::auto_v(const std::vector<double>& grid, double cond_limit) {
  return select_v(sigma_c_, sigma_d_, grid, cond_limit);
}

DifferentialNetwork FitContext::fit(const BackwardMap& b, double lambda_n, double eps,
                                    const SolverConfig& base) const {
  SolverConfig cfg = base;
  cfg.lambda_n = lambda_n;
  cfg.eps = eps;
  switch (method_) {
    case Method::Diffee: return solve_diffee(b, lambda_n, false);
    case Method::KDiffNetE: return solve_kdiffnet_e(b, *w_, lambda_n);
    case Method::KDiffNetG: return solve_kdiffnet_g(b, *eg_, lambda_n);
    case Method::KDiffNetEG: return solve_kdiffnet_eg(b, *w_, *eg_, cfg);
    case Method::KDiffNetMulti:
      return solve_kdiffnet_multi(b, *w_, *w2_, *eg_, *eg2_, eps_e_, eps, eps, cfg);
  }
  throw ParameterError("unknown method");
}

double roc_auc(std::vector<std::pair<double, double>> pts) {
  pts.emplace_back(0.0, 0.0);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  // Unique fpr values keep their best tpr; the envelope is then made monotone.
  std::vector<std::pair<double, double>> env;
  for (const auto& pt : pts) {
    if (!env.empty() && env.back().first == pt.first) {
      env.back().second = std::max(env.back().second, pt.second);
    } else {
      env.push_back(pt);
    }
  }
  for (std::size_t k = 1; k < env.size(); ++k) {
    env[k].second = std::max(env[k].second, env[k - 1].second);
  }
  double area = 0.0;
  for (std::size_t k = 1; k < env.size(); ++k) {
    area += (env[k].first - env[k - 1].first) * 0.5 * (env[k].second + env[k - 1].second);
  }
  return std::clamp(area, 0.0, 1.0);
}

SweepResult sweep(const SimulatedDataset& ds, Method method, const SweepGrid& grid,
                  const SweepOptions& opts) {
  if (grid.lambdas.empty()) throw ParameterError("lambda grid is empty");
  opts.base.validate();
  FitContext ctx(ds, method, opts);
  std::optional<FitContext> val_ctx;
  if (opts.validation) val_ctx.emplace(*opts.validation, method, opts);

  const auto truth = true_support(ds, 0.0, opts.exclude_diagonal);
  std::vector<EdgeIndex> val_truth;
  if (opts.validation) val_truth = true_support(*opts.validation, 0.0, opts.exclude_diagonal);

  // Resolve v levels and build their backward maps once, before any fit.
  std::vector<double> vs;
  std::vector<std::string> v_errors;
  if (grid.v.kind == VPolicy::Kind::Auto) {
    try {
      vs.push_back(ctx.auto_v(grid.v.auto_grid, opts.base.cond_limit));
      v_errors.emplace_back();
    } catch (const Error& e) {
      vs.push_back(std::numeric_limits<double>::quiet_NaN());
      v_errors.emplace_back(e.what());
    }
  } else {
    if (grid.v.values.empty()) throw ParameterError("v policy lists no values");
    vs = grid.v.values;
    v_errors.assign(vs.size(), {});
  }
  std::vector<const BackwardMap*> maps(vs.size(), nullptr);
  std::vector<const BackwardMap*> val_maps(vs.size(), nullptr);
  for (std::size_t k = 0; k < vs.size(); ++k) {
    if (!v_errors[k].empty()) continue;
    try {
      maps[k] = &ctx.backward(vs[k]);
      if (val_ctx) val_maps[k] = &val_ctx->backward(vs[k]);
    } catch (const Error& e) {
      v_errors[k] = e.what();
    }
  }

  const std::vector<double> eps_values =
      uses_eps(method) ? grid.eps : std::vector<double>{opts.base.eps};
  if (eps_values.empty()) throw ParameterError("eps grid is empty");

  SweepResult res;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    for (const double eps : eps_values) {
      for (const double lam : grid.lambdas) {
        SweepPoint pt;
        pt.lambda_n = lam;
        pt.eps = eps;
        pt.v = vs[k];
        pt.error = v_errors[k];
        res.points.push_back(pt);
      }
    }
  }
  // Map each point back to its v slot.
  std::vector<std::size_t> slot(res.points.size());
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    slot[i] = i / (eps_values.size() * grid.lambdas.size());
  }

  parallel_for(res.points.size(), opts.workers, [&](std::size_t i) {
    SweepPoint& pt = res.points[i];
    if (!pt.ok()) return;
    try {
      const auto start = Clock::now();
      const DifferentialNetwork fit = ctx.fit(*maps[slot[i]], pt.lambda_n, pt.eps, opts.base);
      pt.wall_time_seconds = seconds_since(start);
      const EdgeScore s = score_edges(fit.delta, truth, kSupportThreshold, opts.exclude_diagonal);
      pt.tpr = s.tpr();
      pt.fpr = s.fpr();
      pt.precision = s.precision;
      pt.recall = s.recall;
      pt.f1 = s.f1;
      pt.iterations = fit.iterations_run;
      pt.converged = fit.converged;
      if (opts.score_hook) pt.hook_score = opts.score_hook(fit);
      if (val_ctx) {
        const DifferentialNetwork vfit =
            val_ctx->fit(*val_maps[slot[i]], pt.lambda_n, pt.eps, opts.base);
        pt.validation_f1 =
            score_edges(vfit.delta, val_truth, kSupportThreshold, opts.exclude_diagonal).f1;
      }
    } catch (const Error& e) {
      pt.error = e.what();
    }
  });

  std::stable_sort(res.points.begin(), res.points.end(), [](const SweepPoint& a, const SweepPoint& b) {
    if (a.lambda_n != b.lambda_n) return a.lambda_n < b.lambda_n;
    if (a.eps != b.eps) return a.eps < b.eps;
    return a.v < b.v;
  });

  std::vector<std::pair<double, double>> roc;
  double best_key = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const SweepPoint& pt = res.points[i];
    if (!pt.ok()) continue;
    roc.emplace_back(pt.fpr, pt.tpr);
    double key = pt.f1;
    if (pt.validation_f1) key = *pt.validation_f1;
    else if (pt.hook_score) key = *pt.hook_score;
    if (key > best_key) {
      best_key = key;
      res.best_index = i;
      res.has_best = true;
    }
  }
  res.auc = roc_auc(std::move(roc));
  if (res.has_best) {
    const SweepPoint& b = res.points[res.best_index];
    res.best_lambda = b.lambda_n;
    res.best_eps = b.eps;
    res.best_v = b.v;
    res.best_f1 = b.f1;
  }
  return res;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ParameterError("log-log slope needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ParameterError("log-log slope needs distinct x values");
  return sxy / sxx;
}

RateResult rate_experiment(int p, const std::vector<int>& n_list, int trials, std::uint64_t seed,
                           const RateOptions& opts) {
  if (trials < 1) throw ParameterError("trials must be positive");
  if (n_list.empty()) throw ParameterError("n_list is empty");
  for (std::size_t k = 1; k < n_list.size(); ++k) {
    if (n_list[k] <= n_list[k - 1]) throw ParameterError("n_list must be ascending");
  }
  RateResult res;
  std::vector<double> ns, errs;
  for (const int n : n_list) {
    const double rate = std::sqrt(std::log(double(p)) / double(n));
    std::vector<double> errors;
    for (int t = 0; t < trials; ++t) {
      SimulationSpec spec;
      spec.p = p;
      spec.n_c = n;
      spec.n_d = n;
      spec.setting = opts.setting;
      spec.sparsity = opts.sparsity;
      spec.background_prob = opts.background_prob;
      spec.edge_value = opts.edge_value;
      spec.group_size = std::max(1, p / 10);
      spec.num_groups = 2;
      // The structure is fixed per trial index; only the samples change with n.
      spec.seed = seed + static_cast<std::uint64_t>(t);
      const SimulatedDataset ds = gen_dataset(spec);
      const CovarianceMatrix sc = sample_covariance(SampleBlock(ds.x_c));
      const CovarianceMatrix sd = sample_covariance(SampleBlock(ds.x_d));
      const BackwardMap b = proxy_backward_mapping(sc, sd, opts.v_scale * rate);
      const EdgeWeightMatrix w = ds.w_e ? *ds.w_e : EdgeWeightMatrix::ones(p);
      const DifferentialNetwork fit = solve_kdiffnet_e(b, w, opts.lambda_scale * rate);
      errors.push_back((fit.delta - ds.true_delta).norm());
    }
    const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / double(trials);
    double var = 0.0;
    for (const double e : errors) var += (e - mean) * (e - mean);
    const double sd = trials > 1 ? std::sqrt(var / double(trials - 1)) : 0.0;
    res.rows.push_back({n, mean, sd});
    ns.push_back(double(n));
    errs.push_back(mean);
  }
  res.slope = n_list.size() >= 2 ? log_log_slope(ns, errs) : 0.0;
  return res;
}

TimingStats time_harness(const std::function<void()>& fit, int repeats) {
  if (repeats < 1) throw ParameterError("repeats must be at least 1");
  TimingStats t;
  for (int r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    fit();
    t.samples.push_back(seconds_since(start));
  }
  t.mean_seconds = std::accumulate(t.samples.begin(), t.samples.end(), 0.0) / double(repeats);
  if (repeats > 1) {
    double var = 0.0;
    for (const double s : t.samples) var += (s - t.mean_seconds) * (s - t.mean_seconds);
    t.stddev_seconds = std::sqrt(var / double(repeats - 1));
  }
  return t;
}

}  // namespace kdiffnet
