#pragma once

#include <functional>
#include <span>

#include "kdiffnet/knowledge.hpp"
#include "kdiffnet/linalg.hpp"

namespace kdiffnet {

/// Delta_tot = [Delta_e; Delta_g].
struct StackedVariable {
  Matrix delta_e;
  Matrix delta_g;

  static StackedVariable zeros(Eigen::Index p) {
    return {Matrix::Zero(p, p), Matrix::Zero(p, p)};
  }

  Matrix total() const { return delta_e + delta_g; }
};

/// Entrywise soft-threshold at level gamma * w_ij; the prox of gamma ||W o .||_1.
Matrix prox_weighted_l1(const Matrix& x, const EdgeWeightMatrix& w, double gamma);

/// Block soft-threshold x_g * max(1 - eps gamma / ||x_g||, 0); the prox of
/// gamma * eps * ||.||_{G,2}.
Matrix prox_group_l2(const Matrix& x, const EdgeGroupSet& eg, double eps, double gamma);

/// Projection onto {u : |u_ij - c_ij| <= w_ij lambda}.
Matrix proj_weighted_linf_ball(const Matrix& x, const Matrix& center, const EdgeWeightMatrix& w,
                               double lambda);

/// Projection onto {u : ||u_g - c_g||_2 <= eps lambda for every group g}.
Matrix proj_group_dual_ball(const Matrix& x, const Matrix& center, const EdgeGroupSet& eg,
                            double eps, double lambda);

/// The four summands of the distributed formulation:
///   F1 = ||W o Delta_e||_1,  F2 = eps ||Delta_g||_{G,2},
///   G1 = indicator(||(1/W) o (Delta_e + Delta_g - B)||_inf <= lambda),
///   G2 = indicator(||Delta_e + Delta_g - B||*_{G,2} <= eps lambda).
enum class ProxTerm { F1, F2, G1, G2 };

/// Everything the four terms depend on.  Holds references; the referenced
/// objects must outlive it.
struct KevProblem {
  const Matrix& backward;
  const EdgeWeightMatrix& w;
  const EdgeGroupSet& eg;
  double eps;
  double lambda_n;
};

/// prox_{gamma h}(y) for h = term o A where A is A_e = [I 0], A_g = [0 I] or
/// A_tot = [I I].  Uses prox_h(y) = y + beta^-1 A^T (prox_{beta gamma g}(Ay) - Ay)
/// with beta = A A^T, i.e. beta = 1 for F1/F2 and beta = 2 for G1/G2.
StackedVariable affine_prox_lift(const StackedVariable& y, ProxTerm which,
                                 const KevProblem& problem, double gamma);

/// Lifts a projection on the sum of k blocks (A = [I ... I], A A^T = k I)
/// back onto the blocks, in place.
void lift_through_sum(std::span<Matrix> blocks,
                      const std::function<Matrix(const Matrix&)>& project_sum);

}  // namespace kdiffnet
