#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kdiffnet/simulate.hpp"
#include "kdiffnet/solvers.hpp"

namespace kdiffnet {

inline constexpr double kSupportThreshold = 1e-6;

struct EdgeScore {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  double tpr() const { return recall; }
  double fpr() const { return fp + tn > 0 ? double(fp) / double(fp + tn) : 0.0; }

  static EdgeScore from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn);
};

/// Binarizes |estimated| > threshold and compares with `truth`.  When
/// `symmetric` is set each unordered pair {i, j} is counted once; an edge is
/// present if either orientation is.
EdgeScore score_edges(const Matrix& estimated, const std::vector<EdgeIndex>& truth,
                      double threshold = kSupportThreshold, bool exclude_diagonal = true,
                      bool symmetric = true);

/// {base * sqrt(log p / min(n_c, n_d)) * i : i = 1..steps}.  `p` is real so the
/// grid can be evaluated at non-integer dimensions.
std::vector<double> lambda_grid(double p, int n_c, int n_d, double base, int steps);

inline const std::vector<double> kDefaultEpsGrid = {0.0001, 0.01, 1.0, 100.0};

/// How the thresholding level v is chosen for a sweep.
struct VPolicy {
  enum class Kind { Auto, Values } kind = Kind::Auto;
  /// Candidate values for Kind::Values; each gets its own backward map.
  std::vector<double> values;
  /// Grid searched by Kind::Auto.
  std::vector<double> auto_grid = default_v_grid();

  static VPolicy automatic() { return {}; }
  static VPolicy fixed(std::vector<double> vs) { return {Kind::Values, std::move(vs), {}}; }
};

struct SweepGrid {
  std::vector<double> lambdas;
  /// Only the proximal methods read eps; others evaluate a single eps.
  std::vector<double> eps = kDefaultEpsGrid;
  VPolicy v;
};

struct SweepPoint {
  double lambda_n = 0.0;
  double eps = 0.0;
  double v = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// F1 on the validation dataset, when one was supplied.
  std::optional<double> validation_f1;
  /// Value of the user scoring hook, when one was supplied.
  std::optional<double> hook_score;
  double wall_time_seconds = 0.0;
  int iterations = 0;
  bool converged = true;
  /// Empty when the fit succeeded.
  std::string error;

  bool ok() const { return error.empty(); }
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double auc = 0.0;
  double best_lambda = 0.0;
  double best_eps = 0.0;
  double best_v = 0.0;
  double best_f1 = 0.0;
  std::size_t best_index = 0;
  /// False when no grid point produced a fit.
  bool has_best = false;

  std::size_t failures() const;
};

/// Truth-free model-selection score: larger is better.
using ScoreHook = std::function<double(const DifferentialNetwork&)>;

struct SweepOptions {
  SolverConfig base;
  /// When set, each grid point is also fitted on this dataset and the best
  /// point is chosen by its F1 there.
  const SimulatedDataset* validation = nullptr;
  /// When set (and no validation dataset is given), the best point maximizes it.
  ScoreHook score_hook;
  int workers = 1;
  bool exclude_diagonal = true;
  /// Second knowledge source for the multi solver; defaults to the dataset's own.
  std::optional<EdgeWeightMatrix> w2;
  std::optional<NodeGroupSet> groups2;
  double eps_e = 1.0;
};

/// Knowledge objects and backward maps needed to fit one dataset, built once.
class FitContext {
 public:
  FitContext(const SimulatedDataset& ds, Method method, const SweepOptions& opts);

  /// Backward map for level v (cached).
  const BackwardMap& backward(double v);
  /// Level chosen by the auto policy.
  double auto_v(const std::vector<double>& grid, double cond_limit);

  DifferentialNetwork fit(const BackwardMap& b, double lambda_n, double eps,
                          const SolverConfig& base) const;

  Method method() const { return method_; }

 private:
  Method method_;
  CovarianceMatrix sigma_c_;
  CovarianceMatrix sigma_d_;
  double cond_limit_;
  std::optional<EdgeWeightMatrix> w_;
  std::optional<EdgeGroupSet> eg_;
  std::optional<EdgeWeightMatrix> w2_;
  std::optional<EdgeGroupSet> eg2_;
  double eps_e_;
  std::deque<std::pair<double, BackwardMap>> cache_;
};

/// Throws MissingKnowledgeError when `method` needs knowledge `ds` lacks.
void require_knowledge(const SimulatedDataset& ds, Method method);

/// ROC area by trapezoid over the upper envelope of (fpr, tpr) points with
/// (0, 0) and (1, 1) appended.
double roc_auc(std::vector<std::pair<double, double>> fpr_tpr);

/// Fits every grid point.  Failures are recorded per point; the sweep continues.
SweepResult sweep(const SimulatedDataset& ds, Method method, const SweepGrid& grid,
                  const SweepOptions& opts = {});

struct RateRow {
  int n = 0;
  double mean_error = 0.0;
  double stddev_error = 0.0;
};

struct RateResult {
  std::vector<RateRow> rows;
  /// Least-squares slope of log(mean_error) against log(n).
  double slope = 0.0;
};

struct RateOptions {
  Setting setting = Setting::E;
  double sparsity = 0.02;
  double background_prob = 0.02;
  /// Differential entry magnitude; nullopt keeps the simulation default.
  std::optional<double> edge_value = 0.3;
  /// lambda_n = lambda_scale * sqrt(log p / n)
  double lambda_scale = 1.0;
  /// v = v_scale * sqrt(log p / n)
  double v_scale = 0.5;
};

/// Mean Frobenius error ||Delta_hat - Delta*||_F of KDiffNet-E at
/// theory-scaled lambda_n for each n (n_c = n_d = n).
RateResult rate_experiment(int p, const std::vector<int>& n_list, int trials, std::uint64_t seed,
                           const RateOptions& opts = {});

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct TimingStats {
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
  std::vector<double> samples;
};

/// Runs `fit` `repeats` times back to back; sample standard deviation.
TimingStats time_harness(const std::function<void()>& fit, int repeats);

}  // namespace kdiffnet
