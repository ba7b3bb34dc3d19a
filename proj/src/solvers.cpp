#include "kdiffnet/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "kdiffnet/error.hpp"
#include "kdiffnet/prox.hpp"

namespace kdiffnet {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterError(std::string(name) + " must be positive");
  }
}

void require_backward(const BackwardMap& b, Eigen::Index p) {
  if (b.values.rows() != p || b.values.cols() != p) {
    throw InputError("backward map is " + std::to_string(b.values.rows()) + "x" +
                     std::to_string(b.values.cols()) + ", expected " + std::to_string(p) + "x" +
                     std::to_string(p));
  }
}

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

using Blocks = std::vector<Matrix>;
// Replaces its argument by prox_{N gamma f_j}(argument).
using BlockProx = std::function<void(Blocks&)>;
// Largest constraint violation of a candidate, in absolute units.
using Violation = std::function<double(const Blocks&)>;

struct ConsensusResult {
  Blocks x;
  int iterations = 0;
  bool converged = false;
};

double frobenius(const Blocks& b) {
  double sq = 0.0;
  for (const Matrix& m : b) sq += m.squaredNorm();
  return std::sqrt(sq);
}

double distance(const Blocks& a, const Blocks& b) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]).squaredNorm();
  return std::sqrt(sq);
}

// Parallel proximal algorithm over N terms sharing one stacked variable of
// `num_blocks` p x p blocks.  Each term's prox already includes the N gamma
// step.  Stops when the relative change of the consensus variable and the
// spread of the N prox outputs around their mean both fall below tol and the
// consensus variable violates no constraint by more than tol (1 + lambda_n).
ConsensusResult run_consensus(Eigen::Index p, std::size_t num_blocks,
                              const std::vector<BlockProx>& terms, const Violation& violation,
                              const SolverConfig& cfg) {
  const std::size_t n_terms = terms.size();
  const Blocks zero(num_blocks, Matrix::Zero(p, p));
  std::vector<Blocks> y(n_terms, zero);
  std::vector<Blocks> prox_out(n_terms, zero);
  ConsensusResult res{zero, 0, false};
  Blocks mean = zero;

  for (int it = 0; it < cfg.max_iter; ++it) {
    // The N evaluations are independent of each other.
    for (std::size_t j = 0; j < n_terms; ++j) {
      prox_out[j] = y[j];
      terms[j](prox_out[j]);
    }
    for (std::size_t k = 0; k < num_blocks; ++k) {
      mean[k] = prox_out[0][k];
      for (std::size_t j = 1; j < n_terms; ++j) mean[k] += prox_out[j][k];
      mean[k] /= double(n_terms);
    }
    for (std::size_t j = 0; j < n_terms; ++j) {
      for (std::size_t k = 0; k < num_blocks; ++k) {
        y[j][k] += cfg.rho * (2.0 * mean[k] - res.x[k] - prox_out[j][k]);
      }
    }
    const double scale = std::max(1.0, frobenius(res.x));
    Blocks next = res.x;
    for (std::size_t k = 0; k < num_blocks; ++k) next[k] += cfg.rho * (mean[k] - res.x[k]);
    const double change = distance(next, res.x) / scale;
    res.x = std::move(next);
    res.iterations = it + 1;

    double spread = 0.0;
    for (std::size_t j = 0; j < n_terms; ++j) spread = std::max(spread, distance(prox_out[j], mean));
    spread /= std::max(1.0, frobenius(mean));
    if (change < cfg.tol && spread < cfg.tol &&
        violation(res.x) <= cfg.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

void SolverConfig::validate() const {
  if (v && (!(*v >= 0.0) || !std::isfinite(*v))) throw ParameterError("v must be non-negative");
  require_positive(lambda_n, "lambda_n");
  require_positive(eps, "eps");
  require_positive(gamma, "gamma");
  if (!(rho > 0.0 && rho < 2.0)) throw ParameterError("rho must lie in (0, 2)");
  if (max_iter < 1) throw ParameterError("max_iter must be positive");
  require_positive(tol, "tol");
  require_positive(cond_limit, "cond_limit");
}

DifferentialNetwork solve_kdiffnet_e(const BackwardMap& backward, const EdgeWeightMatrix& w,
                                     double lambda_n) {
  require_positive(lambda_n, "lambda_n");
  require_backward(backward, w.p());
  const Matrix& b = backward.values;
  const Matrix& wm = w.weights();
  DifferentialNetwork out;
  out.delta.resize(b.rows(), b.cols());
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    out.delta.data()[k] = soft(b.data()[k], lambda_n * wm.data()[k]);
  }
  out.delta_e = out.delta;
  out.objective = weighted_l1_norm(out.delta, w);
  return out;
}

DifferentialNetwork solve_kdiffnet_g(const BackwardMap& backward, const EdgeGroupSet& eg,
                                     double lambda_n) {
  require_positive(lambda_n, "lambda_n");
  require_backward(backward, eg.p());
  if (!eg.singleton_complement()) {
    throw ValidationError("group-only estimator needs every entry covered (singleton complement)");
  }
  DifferentialNetwork out;
  // With eps = 1 the group prox is exactly the group soft-threshold at lambda_n.
  out.delta = prox_group_l2(backward.values, eg, 1.0, lambda_n);
  out.delta_g = out.delta;
  out.objective = group_l2_norm(out.delta, eg);
  return out;
}

DifferentialNetwork solve_diffee(const BackwardMap& backward, double lambda_n,
                                 bool off_diagonal_only) {
  require_positive(lambda_n, "lambda_n");
  const Matrix& b = backward.values;
  if (b.rows() != b.cols() || b.rows() == 0) throw InputError("backward map must be square");
  DifferentialNetwork out;
  out.delta = b.unaryExpr([lambda_n](double x) { return soft(x, lambda_n); });
  if (off_diagonal_only) out.delta.diagonal() = b.diagonal();
  out.delta_e = out.delta;
  Matrix penalized = out.delta;
  if (off_diagonal_only) penalized.diagonal().setZero();
  out.objective = penalized.cwiseAbs().sum();
  return out;
}

DifferentialNetwork solve_kdiffnet_eg(const BackwardMap& backward, const EdgeWeightMatrix& w,
                                      const EdgeGroupSet& eg, const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index p = w.p();
  if (eg.p() != p) throw InputError("weight matrix and edge groups disagree on p");
  require_backward(backward, p);

  const KevProblem problem{backward.values, w, eg, cfg.eps, cfg.lambda_n};
  const double step = 4.0 * cfg.gamma;
  // Blocks are {Delta_e, Delta_g}.
  const std::vector<BlockProx> terms = {
      [&](Blocks& y) { y[0] = prox_weighted_l1(y[0], w, step); },
      [&](Blocks& y) { y[1] = prox_group_l2(y[1], eg, cfg.eps, step); },
      [&](Blocks& y) {
        lift_through_sum(y, [&](const Matrix& s) {
          return proj_weighted_linf_ball(s, problem.backward, w, cfg.lambda_n);
        });
      },
      [&](Blocks& y) {
        lift_through_sum(y, [&](const Matrix& s) {
          return proj_group_dual_ball(s, problem.backward, eg, cfg.eps, cfg.lambda_n);
        });
      },
  };
  const Violation violation = [&](const Blocks& x) {
    const Matrix r = x[0] + x[1] - problem.backward;
    return std::max(weighted_linf_norm(r, w) - cfg.lambda_n,
                    group_dual_norm(r, eg) - cfg.eps * cfg.lambda_n);
  };
  ConsensusResult res = run_consensus(p, 2, terms, violation, cfg);

  DifferentialNetwork out;
  out.delta = res.x[0] + res.x[1];
  out.objective = kev_norm(res.x[0], res.x[1], w, eg, cfg.eps);
  out.delta_e = std::move(res.x[0]);
  out.delta_g = std::move(res.x[1]);
  out.iterations_run = res.iterations;
  out.converged = res.converged;
  return out;
}

DifferentialNetwork solve_kdiffnet_multi(const BackwardMap& backward, const EdgeWeightMatrix& w1,
                                         const EdgeWeightMatrix& w2, const EdgeGroupSet& eg1,
                                         const EdgeGroupSet& eg2, double eps_e, double eps_1,
                                         double eps_2, const SolverConfig& cfg) {
  cfg.validate();
  require_positive(eps_e, "eps_e");
  require_positive(eps_1, "eps_1");
  require_positive(eps_2, "eps_2");
  const Eigen::Index p = w1.p();
  if (w2.p() != p || eg1.p() != p || eg2.p() != p) {
    throw InputError("knowledge inputs disagree on p");
  }
  require_backward(backward, p);

  const Matrix& b = backward.values;
  const double lam = cfg.lambda_n;
  const double step = 8.0 * cfg.gamma;
  // Blocks are {Delta_e1, Delta_e2, Delta_g1, Delta_g2}.
  const std::vector<BlockProx> terms = {
      [&](Blocks& y) { y[0] = prox_weighted_l1(y[0], w1, step); },
      [&](Blocks& y) { y[2] = prox_group_l2(y[2], eg1, eps_1, step); },
      [&](Blocks& y) {
        lift_through_sum(y, [&](const Matrix& s) { return proj_weighted_linf_ball(s, b, w1, lam); });
      },
      [&](Blocks& y) {
        lift_through_sum(
            y, [&](const Matrix& s) { return proj_group_dual_ball(s, b, eg1, eps_1, lam); });
      },
      [&](Blocks& y) { y[1] = prox_weighted_l1(y[1], w2, step * eps_e); },
      [&](Blocks& y) { y[3] = prox_group_l2(y[3], eg2, eps_2, step); },
      [&](Blocks& y) {
        lift_through_sum(
            y, [&](const Matrix& s) { return proj_weighted_linf_ball(s, b, w2, eps_e * lam); });
      },
      [&](Blocks& y) {
        lift_through_sum(
            y, [&](const Matrix& s) { return proj_group_dual_ball(s, b, eg2, eps_2, lam); });
      },
  };
  const Violation violation = [&](const Blocks& x) {
    const Matrix r = x[0] + x[1] + x[2] + x[3] - b;
    return std::max({weighted_linf_norm(r, w1) - lam, weighted_linf_norm(r, w2) - eps_e * lam,
                     group_dual_norm(r, eg1) - eps_1 * lam, group_dual_norm(r, eg2) - eps_2 * lam});
  };
  ConsensusResult res = run_consensus(p, 4, terms, violation, cfg);

  DifferentialNetwork out;
  out.delta = res.x[0] + res.x[1] + res.x[2] + res.x[3];
  out.delta_e = res.x[0] + res.x[1];
  out.delta_g = res.x[2] + res.x[3];
  out.objective = weighted_l1_norm(res.x[0], w1) + eps_e * weighted_l1_norm(res.x[1], w2) +
                  eps_1 * group_l2_norm(res.x[2], eg1) + eps_2 * group_l2_norm(res.x[3], eg2);
  out.components = std::move(res.x);
  out.iterations_run = res.iterations;
  out.converged = res.converged;
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Diffee: return "diffee";
    case Method::KDiffNetE: return "kdiffnet-e";
    case Method::KDiffNetG: return "kdiffnet-g";
    case Method::KDiffNetEG: return "kdiffnet-eg";
    case Method::KDiffNetMulti: return "kdiffnet-multi";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "diffee") return Method::Diffee;
  if (name == "kdiffnet-e") return Method::KDiffNetE;
  if (name == "kdiffnet-g") return Method::KDiffNetG;
  if (name == "kdiffnet-eg") return Method::KDiffNetEG;
  if (name == "kdiffnet-multi") return Method::KDiffNetMulti;
  throw ParameterError("unknown method '" + name + "'");
}

}  // namespace kdiffnet
