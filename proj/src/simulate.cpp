#include "kdiffnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Eigenvalues>

#include "kdiffnet/error.hpp"

namespace kdiffnet {

namespace {

constexpr double kPositiveMargin = 0.2;

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Matrix draw_gaussian(const Matrix& omega, int n, std::mt19937_64& rng) {
  const Eigen::Index p = omega.rows();
  const Eigen::LLT<Matrix> omega_llt(omega);
  Matrix sigma = omega_llt.solve(Matrix::Identity(p, p));
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  const Eigen::LLT<Matrix> sigma_llt(sigma);
  if (sigma_llt.info() != Eigen::Success) throw InputError("covariance factorization failed");
  const Matrix lower = sigma_llt.matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal(rng);
  }
  return z * lower.transpose();
}

}  // namespace

std::string to_string(Setting s) {
  switch (s) {
    case Setting::E: return "E";
    case Setting::G: return "G";
    case Setting::EG: return "EG";
  }
  return "?";
}

Setting parse_setting(const std::string& name) {
  if (name == "E" || name == "e") return Setting::E;
  if (name == "G" || name == "g") return Setting::G;
  if (name == "EG" || name == "eg") return Setting::EG;
  throw SpecError("setting", "expected one of E, G, EG but got '" + name + "'");
}

std::string to_string(KnowledgeSource s) {
  switch (s) {
    case KnowledgeSource::Spatial: return "spatial";
    case KnowledgeSource::ErdosRenyi: return "erdos-renyi";
    case KnowledgeSource::Given: return "given";
  }
  return "?";
}

KnowledgeSource parse_knowledge_source(const std::string& name) {
  if (name == "spatial") return KnowledgeSource::Spatial;
  if (name == "erdos-renyi") return KnowledgeSource::ErdosRenyi;
  if (name == "given") return KnowledgeSource::Given;
  throw SpecError("knowledge", "expected spatial, erdos-renyi or given but got '" + name + "'");
}

double SimulationSpec::resolved_edge_value() const {
  if (edge_value) return *edge_value;
  return setting == Setting::EG ? 1.0 / 3.0 : 0.5;
}

void SimulationSpec::validate() const {
  if (p < 2) throw SpecError("p", "must be at least 2");
  if (n_c < 2) throw SpecError("n_c", "must be at least 2");
  if (n_d < 2) throw SpecError("n_d", "must be at least 2");
  const bool edges = setting != Setting::G;
  const bool groups = setting != Setting::E;
  if (edges && !(sparsity > 0.0 && sparsity < 1.0)) {
    throw SpecError("sparsity", "must lie in (0, 1)");
  }
  if (groups) {
    if (group_size < 1) throw SpecError("group_size", "must be positive");
    if (num_groups < 1) throw SpecError("num_groups", "must be positive");
    if (static_cast<long long>(num_groups) * group_size > p) {
      throw SpecError("num_groups", "num_groups * group_size exceeds p");
    }
  }
  if (edge_value && !std::isfinite(*edge_value)) throw SpecError("edge_value", "must be finite");
  if (!(background_prob >= 0.0 && background_prob < 1.0)) {
    throw SpecError("background_prob", "must lie in [0, 1)");
  }
  if (delta_c && !(*delta_c > 0.0)) throw SpecError("delta_c", "must be positive");
  if (delta_d && !(*delta_d > 0.0)) throw SpecError("delta_d", "must be positive");
  if (edges && knowledge == KnowledgeSource::ErdosRenyi && !(er_prob > 0.0 && er_prob <= 1.0)) {
    throw SpecError("er_prob", "must lie in (0, 1]");
  }
}

DistanceWeights gen_weight_from_distance(const Matrix& dist) {
  if (dist.rows() != dist.cols() || dist.rows() == 0) {
    throw InputError("distance matrix must be square and non-empty");
  }
  if (!dist.allFinite()) throw InputError("distance matrix contains non-finite entries");
  if (dist.minCoeff() < 0.0) throw InputError("distances must be non-negative");
  const double scale = std::max(1.0, dist.maxCoeff());
  if ((dist - dist.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("distance matrix must be symmetric");
  }
  Matrix w_d = dist.unaryExpr([](double d) { return 1.0 / (1.0 + std::exp(d)); });
  return {EdgeWeightMatrix(dist.cwiseMax(kDistanceFloor)), std::move(w_d)};
}

Matrix spatial_distances(int p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix pts(p, 3);
  for (int i = 0; i < p; ++i) {
    for (int k = 0; k < 3; ++k) pts(i, k) = unif(rng);
  }
  Matrix dist = Matrix::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int i = j + 1; i < p; ++i) {
      dist(i, j) = dist(j, i) = (pts.row(i) - pts.row(j)).norm();
    }
  }
  return dist;
}

Matrix erdos_renyi_distances(int p, double prob, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(prob);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (coin(rng)) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  Matrix dist = Matrix::Constant(p, p, double(p));
  for (int s = 0; s < p; ++s) {
    dist(s, s) = 0.0;
    std::deque<int> queue{s};
    std::vector<int> hops(static_cast<std::size_t>(p), -1);
    hops[s] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (const int v : adj[u]) {
        if (hops[v] >= 0) continue;
        hops[v] = hops[u] + 1;
        dist(s, v) = hops[v];
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::mt19937_64 sub_stream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

SimulatedDataset gen_dataset(const SimulationSpec& spec, const std::optional<Matrix>& distances) {
  spec.validate();
  const int p = spec.p;
  const double value = spec.resolved_edge_value();
  const bool edges = spec.setting != Setting::G;
  const bool groups = spec.setting != Setting::E;

  SimulatedDataset ds;
  ds.spec = spec;
  ds.edge_level = std::numeric_limits<double>::quiet_NaN();

  Matrix planted = Matrix::Zero(p, p);
  if (edges) {
    auto rng = sub_stream(spec.seed, "knowledge");
    Matrix dist;
    switch (spec.knowledge) {
      case KnowledgeSource::Spatial: dist = spatial_distances(p, rng); break;
      case KnowledgeSource::ErdosRenyi: dist = erdos_renyi_distances(p, spec.er_prob, rng); break;
      case KnowledgeSource::Given:
        if (!distances) throw SpecError("knowledge", "a distance matrix is required");
        if (distances->rows() != p || distances->cols() != p) {
          throw SpecError("knowledge", "distance matrix does not match p");
        }
        dist = *distances;
        break;
    }
    DistanceWeights dw = gen_weight_from_distance(dist);
    // s_l is the (1 - s) quantile of the off-diagonal W^d values, so a
    // fraction s of the pairs lies strictly above it.
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < j; ++i) upper.push_back(dw.w_d(i, j));
    }
    std::sort(upper.begin(), upper.end(), std::greater<>());
    const auto active = static_cast<std::size_t>(std::llround(spec.sparsity * double(upper.size())));
    ds.edge_level = active < upper.size() ? upper[active] : upper.back() - 1.0;
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < p; ++i) {
        if (i != j && dw.w_d(i, j) > ds.edge_level) planted(i, j) = value;
      }
    }
    ds.w_e = std::move(dw.w_e);
  }
  if (groups) {
    std::vector<std::vector<int>> node_groups;
    for (int g = 0; g < spec.num_groups; ++g) {
      std::vector<int> nodes;
      for (int k = 0; k < spec.group_size; ++k) nodes.push_back(g * spec.group_size + k);
      for (const int i : nodes) {
        for (const int j : nodes) planted(i, j) += value;
      }
      node_groups.push_back(std::move(nodes));
    }
    ds.node_groups = NodeGroupSet(std::move(node_groups), p);
  }

  Matrix background = Matrix::Zero(p, p);
  if (spec.background_prob > 0.0) {
    auto rng = sub_stream(spec.seed, "background");
    std::bernoulli_distribution coin(spec.background_prob);
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < j; ++i) {
        if (coin(rng)) background(i, j) = background(j, i) = value;
      }
    }
  }

  const Matrix base_c = background;
  const Matrix base_d = planted + background;
  ds.resolved_delta_c =
      spec.delta_c ? *spec.delta_c : std::abs(min_eigenvalue(base_c)) + kPositiveMargin;
  ds.resolved_delta_d =
      spec.delta_d ? *spec.delta_d : std::abs(min_eigenvalue(base_d)) + kPositiveMargin;
  ds.true_omega_c = base_c + ds.resolved_delta_c * Matrix::Identity(p, p);
  ds.true_omega_d = base_d + ds.resolved_delta_d * Matrix::Identity(p, p);
  if (!(min_eigenvalue(ds.true_omega_c) > 1e-8)) {
    throw SpecError("delta_c", "Omega_c is not positive definite");
  }
  if (!(min_eigenvalue(ds.true_omega_d) > 1e-8)) {
    throw SpecError("delta_d", "Omega_d is not positive definite");
  }
  ds.true_delta = ds.true_omega_d - ds.true_omega_c;

  auto rng_c = sub_stream(spec.seed, "sampling-c");
  auto rng_d = sub_stream(spec.seed, "sampling-d");
  ds.x_c = draw_gaussian(ds.true_omega_c, spec.n_c, rng_c);
  ds.x_d = draw_gaussian(ds.true_omega_d, spec.n_d, rng_d);
  return ds;
}

std::vector<EdgeIndex> true_support(const Matrix& true_delta, double tol, bool exclude_diagonal) {
  std::vector<EdgeIndex> out;
  for (Eigen::Index i = 0; i < true_delta.rows(); ++i) {
    for (Eigen::Index j = 0; j < true_delta.cols(); ++j) {
      if (exclude_diagonal && i == j) continue;
      if (std::abs(true_delta(i, j)) > tol) {
        out.push_back({static_cast<int>(i), static_cast<int>(j)});
      }
    }
  }
  return out;
}

std::vector<EdgeIndex> true_support(const SimulatedDataset& ds, double tol,
                                    bool exclude_diagonal) {
  return true_support(ds.true_delta, tol, exclude_diagonal);
}

}  // namespace kdiffnet
