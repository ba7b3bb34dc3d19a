#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kdiffnet/knowledge.hpp"
#include "kdiffnet/linalg.hpp"

namespace kdiffnet {

/// Hyperparameters shared by every estimator.  The closed forms only read
/// lambda_n; the proximal solvers read all of it.
struct SolverConfig {
  /// Thresholding level for the backward mapping; nullopt selects it with select_v.
  std::optional<double> v;
  double lambda_n = 0.1;
  double eps = 1.0;
  double gamma = 1.0;
  double rho = 1.0;
  int max_iter = 1000;
  double tol = 1e-6;
  double cond_limit = kDefaultCondLimit;

  /// Throws ParameterError on any out-of-range field.
  void validate() const;
};

/// Estimated Delta = Omega_d - Omega_c.
struct DifferentialNetwork {
  Matrix delta;
  std::optional<Matrix> delta_e;
  std::optional<Matrix> delta_g;
  /// Every block of the multi-knowledge solver, in the order
  /// {Delta_e1, Delta_e2, Delta_g1, Delta_g2}; empty otherwise.
  std::vector<Matrix> components;
  int iterations_run = 0;
  bool converged = true;
  double objective = 0.0;
};

/// Delta = S_{lambda_n W}(B*): entrywise soft-threshold at lambda_n * w_ij.
DifferentialNetwork solve_kdiffnet_e(const BackwardMap& backward, const EdgeWeightMatrix& w,
                                     double lambda_n);

/// Group soft-threshold of B* at lambda_n.  The edge groups must carry the
/// singleton complement so every entry is covered.
DifferentialNetwork solve_kdiffnet_g(const BackwardMap& backward, const EdgeGroupSet& eg,
                                     double lambda_n);

/// Parallel proximal (consensus) solver for the edge + group program.
/// Non-convergence within cfg.max_iter is reported through `converged`.
DifferentialNetwork solve_kdiffnet_eg(const BackwardMap& backward, const EdgeWeightMatrix& w,
                                      const EdgeGroupSet& eg, const SolverConfig& cfg);

/// Two weight matrices and two group sets; eight-term consensus.
/// cfg.eps is ignored in favour of eps_e, eps_1, eps_2.
DifferentialNetwork solve_kdiffnet_multi(const BackwardMap& backward, const EdgeWeightMatrix& w1,
                                         const EdgeWeightMatrix& w2, const EdgeGroupSet& eg1,
                                         const EdgeGroupSet& eg2, double eps_e, double eps_1,
                                         double eps_2, const SolverConfig& cfg);

/// Entrywise soft-threshold at lambda_n.  With off_diagonal_only the diagonal
/// of B* is copied through untouched.
DifferentialNetwork solve_diffee(const BackwardMap& backward, double lambda_n,
                                 bool off_diagonal_only = false);

enum class Method { Diffee, KDiffNetE, KDiffNetG, KDiffNetEG, KDiffNetMulti };

std::string to_string(Method m);
/// Accepts the CLI spellings: diffee, kdiffnet-e, kdiffnet-g, kdiffnet-eg, kdiffnet-multi.
Method parse_method(const std::string& name);

}  // namespace kdiffnet
