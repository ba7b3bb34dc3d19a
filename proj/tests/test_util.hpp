#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdiffnet/knowledge.hpp"
#include "kdiffnet/linalg.hpp"

namespace kdiffnet::testing {

inline nlohmann::json load_json(const std::string& name) {
  const std::filesystem::path path = std::filesystem::path(KDIFFNET_TEST_DATA_DIR) / name;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing test data " + path.string());
  return nlohmann::json::parse(in);
}

inline Matrix to_matrix(const nlohmann::json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.at(0).size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

inline std::vector<std::vector<int>> to_groups(const nlohmann::json& g) {
  return g.get<std::vector<std::vector<int>>>();
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

inline Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index p, double scale = 1.0) {
  const Matrix a = random_matrix(rng, p, p, scale);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index p) {
  const Matrix a = random_matrix(rng, p, p);
  return a * a.transpose() / double(p) + Matrix::Identity(p, p);
}

inline EdgeWeightMatrix random_weights(std::mt19937_64& rng, Eigen::Index p, double lo = 0.2,
                                       double hi = 2.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix w(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) w(i, j) = w(j, i) = unif(rng);
  }
  return EdgeWeightMatrix(w);
}

// Disjoint random node groups over a random subset of the nodes.
inline NodeGroupSet random_node_groups(std::mt19937_64& rng, int p, int max_size = 3) {
  std::vector<int> perm(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> groups;
  std::size_t pos = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (pos < perm.size() && unif(rng) < 0.8) {
    const int room = static_cast<int>(perm.size() - pos);
    std::uniform_int_distribution<int> size_dist(1, std::min(max_size, room));
    const int size = size_dist(rng);
    groups.emplace_back(perm.begin() + pos, perm.begin() + pos + size);
    pos += static_cast<std::size_t>(size);
  }
  return NodeGroupSet(std::move(groups), p);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace kdiffnet::testing
