#include "kdiffnet/prox.hpp"

#include <cmath>
#include <string>

#include "kdiffnet/error.hpp"

namespace kdiffnet {

namespace {

void require_shape(const Matrix& x, Eigen::Index p) {
  if (x.rows() != p || x.cols() != p) {
    throw InputError("expected a " + std::to_string(p) + "x" + std::to_string(p) + " matrix");
  }
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterError(std::string(name) + " must be positive");
  }
}

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

Matrix prox_weighted_l1(const Matrix& x, const EdgeWeightMatrix& w, double gamma) {
  require_positive(gamma, "gamma");
  require_shape(x, w.p());
  Matrix out(x.rows(), x.cols());
  const double* xs = x.data();
  const double* ws = w.weights().data();
  double* os = out.data();
  for (Eigen::Index k = 0; k < x.size(); ++k) os[k] = soft(xs[k], gamma * ws[k]);
  return out;
}

Matrix prox_group_l2(const Matrix& x, const EdgeGroupSet& eg, double eps, double gamma) {
  require_positive(gamma, "gamma");
  require_positive(eps, "eps");
  require_shape(x, eg.p());
  const double t = eps * gamma;
  Matrix out = x;
  double* os = out.data();
  for (std::size_t k = 0; k < eg.num_groups(); ++k) {
    const auto entries = eg.group_entries(k);
    double sq = 0.0;
    for (const Eigen::Index lin : entries) sq += os[lin] * os[lin];
    const double norm = std::sqrt(sq);
    const double scale = norm > t ? 1.0 - t / norm : 0.0;
    for (const Eigen::Index lin : entries) os[lin] *= scale;
  }
  for (const Eigen::Index lin : eg.ungrouped_entries()) {
    os[lin] = eg.singleton_complement() ? soft(os[lin], t) : 0.0;
  }
  return out;
}

Matrix proj_weighted_linf_ball(const Matrix& x, const Matrix& center, const EdgeWeightMatrix& w,
                               double lambda) {
  require_positive(lambda, "lambda");
  require_shape(x, w.p());
  require_shape(center, w.p());
  Matrix out(x.rows(), x.cols());
  const double* xs = x.data();
  const double* cs = center.data();
  const double* ws = w.weights().data();
  double* os = out.data();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double r = ws[k] * lambda;
    os[k] = std::min(std::max(xs[k] - cs[k], -r), r) + cs[k];
  }
  return out;
}

Matrix proj_group_dual_ball(const Matrix& x, const Matrix& center, const EdgeGroupSet& eg,
                            double eps, double lambda) {
  require_positive(lambda, "lambda");
  require_positive(eps, "eps");
  require_shape(x, eg.p());
  require_shape(center, eg.p());
  const double radius = eps * lambda;
  Matrix out = x;
  const double* cs = center.data();
  double* os = out.data();
  for (std::size_t k = 0; k < eg.num_groups(); ++k) {
    const auto entries = eg.group_entries(k);
    double sq = 0.0;
    for (const Eigen::Index lin : entries) {
      const double d = os[lin] - cs[lin];
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    if (norm <= radius) continue;  // interior, including the zero offset
    const double scale = radius / norm;
    for (const Eigen::Index lin : entries) os[lin] = cs[lin] + scale * (os[lin] - cs[lin]);
  }
  if (eg.singleton_complement()) {
    for (const Eigen::Index lin : eg.ungrouped_entries()) {
      os[lin] = std::min(std::max(os[lin] - cs[lin], -radius), radius) + cs[lin];
    }
  }
  return out;
}

void lift_through_sum(std::span<Matrix> blocks,
                      const std::function<Matrix(const Matrix&)>& project_sum) {
  if (blocks.empty()) return;
  Matrix sum = blocks[0];
  for (std::size_t k = 1; k < blocks.size(); ++k) sum += blocks[k];
  const Matrix correction = (project_sum(sum) - sum) / double(blocks.size());
  for (Matrix& b : blocks) b += correction;
}

StackedVariable affine_prox_lift(const StackedVariable& y, ProxTerm which,
                                 const KevProblem& problem, double gamma) {
  require_positive(gamma, "gamma");
  const Eigen::Index p = problem.w.p();
  require_shape(y.delta_e, p);
  require_shape(y.delta_g, p);
  require_shape(problem.backward, p);

  StackedVariable out = y;
  switch (which) {
    case ProxTerm::F1:
      out.delta_e = prox_weighted_l1(y.delta_e, problem.w, gamma);
      break;
    case ProxTerm::F2:
      out.delta_g = prox_group_l2(y.delta_g, problem.eg, problem.eps, gamma);
      break;
    case ProxTerm::G1: {
      Matrix blocks[2] = {y.delta_e, y.delta_g};
      lift_through_sum(blocks, [&](const Matrix& s) {
        return proj_weighted_linf_ball(s, problem.backward, problem.w, problem.lambda_n);
      });
      out.delta_e = std::move(blocks[0]);
      out.delta_g = std::move(blocks[1]);
      break;
    }
    case ProxTerm::G2: {
      Matrix blocks[2] = {y.delta_e, y.delta_g};
      lift_through_sum(blocks, [&](const Matrix& s) {
        return proj_group_dual_ball(s, problem.backward, problem.eg, problem.eps,
                                    problem.lambda_n);
      });
      out.delta_e = std::move(blocks[0]);
      out.delta_g = std::move(blocks[1]);
      break;
    }
  }
  return out;
}

}  // namespace kdiffnet
