#include <gtest/gtest.h>

#include <cmath>

#include "../test_util.hpp"
#include "kdiffnet/error.hpp"
#include "kdiffnet/solvers.hpp"

namespace kdiffnet {
namespace {

using testing::load_json;
using testing::max_abs_diff;
using testing::random_node_groups;
using testing::random_symmetric;
using testing::random_weights;
using testing::to_groups;
using testing::to_matrix;

BackwardMap bmap(Matrix m) { return BackwardMap{std::move(m), 0.0}; }

std::size_t nnz(const Matrix& m) { return static_cast<std::size_t>((m.array() != 0.0).count()); }

// Worst violation of the two constraints, relative to their radii.
struct Violation {
  double edge;
  double group;
};

Violation violation(const DifferentialNetwork& d, const Matrix& b, const EdgeWeightMatrix& w,
                    const EdgeGroupSet& eg, double eps, double lambda) {
  const Matrix r = d.delta - b;
  return {weighted_linf_norm(r, w) - lambda, group_dual_norm(r, eg) - eps * lambda};
}

TEST(KDiffNetE, Examples) {
  const auto w = EdgeWeightMatrix(Matrix::Constant(1, 1, 0.6));
  EXPECT_NEAR(solve_kdiffnet_e(bmap(Matrix::Constant(1, 1, 1.0)), w, 1.0).delta(0, 0), 0.4, 1e-15);
  EXPECT_EQ(solve_kdiffnet_e(bmap(Matrix::Zero(3, 3)), EdgeWeightMatrix::ones(3), 0.1).delta,
            Matrix::Zero(3, 3));
  EXPECT_THROW(solve_kdiffnet_e(bmap(Matrix::Zero(3, 3)), EdgeWeightMatrix::ones(2), 0.1),
               InputError);
  EXPECT_THROW(solve_kdiffnet_e(bmap(Matrix::Zero(2, 2)), EdgeWeightMatrix::ones(2), 0.0),
               ParameterError);
}

TEST(KDiffNetE, FeasibleByConstruction) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix b = random_symmetric(rng, 6, 2.0);
    const auto w = random_weights(rng, 6);
    const double lam = 0.05 + 0.01 * trial;
    const auto d = solve_kdiffnet_e(bmap(b), w, lam);
    EXPECT_LE(weighted_linf_norm(d.delta - b, w), lam * (1 + 1e-12));
    ASSERT_TRUE(d.delta_e);
    EXPECT_EQ(*d.delta_e, d.delta);
  }
}

TEST(KDiffNetE, OnesWeightMatchesDiffee) {
  std::mt19937_64 rng(42);
  const Matrix b = random_symmetric(rng, 8);
  EXPECT_EQ(solve_kdiffnet_e(bmap(b), EdgeWeightMatrix::ones(8), 0.3).delta,
            solve_diffee(bmap(b), 0.3).delta);
}

TEST(KDiffNetG, Examples) {
  const auto eg = EdgeGroupSet(2, {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}});
  Matrix b(2, 2);
  b << 3, 0, 4, 0;
  const Matrix d = solve_kdiffnet_g(bmap(b), eg, 2.5).delta;
  EXPECT_NEAR(d(0, 0), 1.5, 1e-15);
  EXPECT_NEAR(d(1, 0), 2.0, 1e-15);
  EXPECT_EQ(d(0, 1), 0.0);
  EXPECT_EQ(solve_kdiffnet_g(bmap(b), eg, 5.0).delta, Matrix::Zero(2, 2));
  EXPECT_THROW(solve_kdiffnet_g(bmap(b), EdgeGroupSet(2, {{{0, 0}}}, false), 1.0),
               ValidationError);
}

TEST(KDiffNetG, SingletonsMatchUnweightedE) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix b = random_symmetric(rng, 7);
    const double t = 0.1 + 0.05 * trial;
    EXPECT_LT(max_abs_diff(solve_kdiffnet_g(bmap(b), EdgeGroupSet::singletons(7), t).delta,
                           solve_kdiffnet_e(bmap(b), EdgeWeightMatrix::ones(7), t).delta),
              1e-15);
  }
}

TEST(Diffee, Examples) {
  EXPECT_NEAR(solve_diffee(bmap(Matrix::Constant(1, 1, 0.9)), 0.4).delta(0, 0), 0.5, 1e-15);
  Matrix b(2, 2);
  b << 1, 0.3, 0.3, -2;
  EXPECT_EQ(solve_diffee(bmap(b), 5.0).delta, Matrix::Zero(2, 2));
  const Matrix off = solve_diffee(bmap(b), 5.0, true).delta;
  EXPECT_EQ(off(0, 1), 0.0);
  EXPECT_EQ(off(0, 0), 1.0);
  EXPECT_EQ(off(1, 1), -2.0);
}

TEST(ClosedForms, MonotoneShrinkageAndSymmetry) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 4 + trial % 5;
    const Matrix b = random_symmetric(rng, p, 1.5);
    const auto w = random_weights(rng, p);
    const auto eg = expand_node_groups(random_node_groups(rng, p));
    std::size_t last_e = nnz(b) + 1, last_g = last_e, last_d = last_e;
    for (double lam = 0.05; lam < 3.0; lam *= 1.4) {
      const auto e = solve_kdiffnet_e(bmap(b), w, lam).delta;
      const auto g = solve_kdiffnet_g(bmap(b), eg, lam).delta;
      const auto d = solve_diffee(bmap(b), lam).delta;
      EXPECT_LE(nnz(e), last_e);
      EXPECT_LE(nnz(g), last_g);
      EXPECT_LE(nnz(d), last_d);
      last_e = nnz(e);
      last_g = nnz(g);
      last_d = nnz(d);
      EXPECT_EQ(e, e.transpose());
      EXPECT_LE(max_abs_diff(g, g.transpose()), 1e-15);
      EXPECT_EQ(d, d.transpose());
    }
  }
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  for (double rho : {0.0, 2.0, -1.0}) {
    cfg = {};
    cfg.rho = rho;
    EXPECT_THROW(cfg.validate(), ParameterError);
  }
  cfg = {};
  cfg.v = -0.1;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.max_iter = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(KDiffNetEG, ZeroBackwardIsFixedPoint) {
  const auto w = EdgeWeightMatrix::ones(4);
  const auto eg = expand_node_groups(NodeGroupSet({{0, 1}}, 4));
  const auto d = solve_kdiffnet_eg(bmap(Matrix::Zero(4, 4)), w, eg, SolverConfig{});
  EXPECT_TRUE(d.converged);
  EXPECT_EQ(d.iterations_run, 1);
  EXPECT_EQ(d.delta, Matrix::Zero(4, 4));
}

TEST(KDiffNetEG, HugeEpsReducesToEdgeOnly) {
  std::mt19937_64 rng(45);
  const Matrix b = random_symmetric(rng, 10, 1.5);
  const auto w = random_weights(rng, 10);
  SolverConfig cfg;
  cfg.lambda_n = 0.3;
  cfg.eps = 1e4;
  cfg.max_iter = 5000;
  cfg.tol = 1e-9;
  const auto d = solve_kdiffnet_eg(bmap(b), w, EdgeGroupSet::singletons(10), cfg);
  EXPECT_TRUE(d.converged);
  EXPECT_LT(d.delta_g->cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(max_abs_diff(d.delta, solve_kdiffnet_e(bmap(b), w, 0.3).delta), 1e-4);
}

TEST(KDiffNetEG, MatchesConvexOracle) {
  const auto data = load_json("eg_oracles.json");
  ASSERT_EQ(data.size(), 10u);
  for (const auto& c : data) {
    const Matrix b = to_matrix(c["backward"]);
    const EdgeWeightMatrix w(to_matrix(c["w"]));
    const auto eg = expand_node_groups(NodeGroupSet(to_groups(c["node_groups"]), 4));
    SolverConfig cfg;
    cfg.lambda_n = c["lambda"];
    cfg.eps = c["eps"];
    cfg.max_iter = 20000;
    const auto d = solve_kdiffnet_eg(bmap(b), w, eg, cfg);
    const double expected = c["objective"];
    EXPECT_TRUE(d.converged);
    EXPECT_LE(std::abs(d.objective - expected), 1e-3 * expected);
    const Violation v = violation(d, b, w, eg, cfg.eps, cfg.lambda_n);
    EXPECT_LE(v.edge, cfg.tol * (1 + cfg.lambda_n));
    EXPECT_LE(v.group, cfg.tol * (1 + cfg.lambda_n));
  }
}

TEST(KDiffNetEG, RandomFeasibilitySymmetryConsensus) {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> unif(0.1, 0.8);
  int converged = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 3 + trial % 4;
    const Matrix b = random_symmetric(rng, p, 1.5);
    const auto w = random_weights(rng, p);
    const auto eg = expand_node_groups(random_node_groups(rng, p));
    SolverConfig cfg;
    cfg.lambda_n = unif(rng);
    cfg.eps = 2 * unif(rng);
    cfg.max_iter = 20000;
    const auto d = solve_kdiffnet_eg(bmap(b), w, eg, cfg);
    if (!d.converged) continue;
    ++converged;
    const Violation v = violation(d, b, w, eg, cfg.eps, cfg.lambda_n);
    EXPECT_LE(v.edge, cfg.tol * (1 + cfg.lambda_n));
    EXPECT_LE(v.group, cfg.tol * (1 + cfg.lambda_n));
    EXPECT_LE(max_abs_diff(d.delta, d.delta.transpose()), 1e-8);
    EXPECT_LT(max_abs_diff(d.delta, *d.delta_e + *d.delta_g), 1e-10);
  }
  EXPECT_GE(converged, 95);
}

TEST(KDiffNetEG, NonConvergenceIsReported) {
  std::mt19937_64 rng(47);
  const Matrix b = random_symmetric(rng, 5, 2.0);
  SolverConfig cfg;
  cfg.max_iter = 2;
  const auto d = solve_kdiffnet_eg(bmap(b), EdgeWeightMatrix::ones(5),
                                   expand_node_groups(NodeGroupSet({{0, 1, 2}}, 5)), cfg);
  EXPECT_FALSE(d.converged);
  EXPECT_EQ(d.iterations_run, 2);
  cfg.rho = 2.5;
  EXPECT_THROW(solve_kdiffnet_eg(bmap(b), EdgeWeightMatrix::ones(5), EdgeGroupSet::singletons(5), cfg),
               ParameterError);
}

TEST(KDiffNetMulti, ZeroBackward) {
  const auto w = EdgeWeightMatrix::ones(3);
  const auto eg = EdgeGroupSet::singletons(3);
  const auto d = solve_kdiffnet_multi(bmap(Matrix::Zero(3, 3)), w, w, eg, eg, 1, 1, 1, {});
  EXPECT_EQ(d.delta, Matrix::Zero(3, 3));
  ASSERT_EQ(d.components.size(), 4u);
}

TEST(KDiffNetMulti, DuplicatedKnowledgeMatchesEG) {
  std::mt19937_64 rng(48);
  const Matrix b = random_symmetric(rng, 6, 1.5);
  const auto w = random_weights(rng, 6);
  const auto eg = expand_node_groups(NodeGroupSet({{0, 1, 2}, {4, 5}}, 6));
  SolverConfig cfg;
  cfg.lambda_n = 0.3;
  cfg.eps = 0.8;
  cfg.max_iter = 50000;
  cfg.tol = 1e-9;
  const auto eg_fit = solve_kdiffnet_eg(bmap(b), w, eg, cfg);
  const auto multi = solve_kdiffnet_multi(bmap(b), w, w, eg, eg, 1.0, 0.8, 0.8, cfg);
  EXPECT_TRUE(eg_fit.converged);
  EXPECT_TRUE(multi.converged);
  EXPECT_LT(max_abs_diff(multi.delta, eg_fit.delta), 1e-3);
  EXPECT_NEAR(multi.objective, eg_fit.objective, 1e-3 * eg_fit.objective);
}

TEST(KDiffNetMulti, InertSecondSourceMatchesEG) {
  std::mt19937_64 rng(49);
  const Matrix b = random_symmetric(rng, 6, 1.5);
  const auto w = random_weights(rng, 6);
  const auto eg = expand_node_groups(NodeGroupSet({{1, 2, 3}}, 6));
  SolverConfig cfg;
  cfg.lambda_n = 0.25;
  cfg.eps = 1.2;
  cfg.max_iter = 50000;
  cfg.tol = 1e-9;
  const auto eg_fit = solve_kdiffnet_eg(bmap(b), w, eg, cfg);
  const auto huge = EdgeWeightMatrix(Matrix::Constant(6, 6, 1e6));
  const auto multi = solve_kdiffnet_multi(bmap(b), w, huge, eg, EdgeGroupSet::singletons(6), 1.0,
                                          1.2, 1e6, cfg);
  EXPECT_LT(max_abs_diff(multi.delta, eg_fit.delta), 1e-3);
  EXPECT_LT(multi.components[1].cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(multi.components[3].cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Method, NamesRoundTrip) {
  for (const Method m : {Method::Diffee, Method::KDiffNetE, Method::KDiffNetG, Method::KDiffNetEG,
                         Method::KDiffNetMulti}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("lasso"), ParameterError);
}

}  // namespace
}  // namespace kdiffnet
