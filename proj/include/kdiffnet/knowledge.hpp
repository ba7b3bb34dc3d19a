#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "kdiffnet/linalg.hpp"

namespace kdiffnet {

/// Edge-level prior knowledge W_E: larger weight means a stronger penalty on
/// that entry.  Entries must be strictly positive and the matrix symmetric.
class EdgeWeightMatrix {
 public:
  explicit EdgeWeightMatrix(Matrix weights);

  static EdgeWeightMatrix ones(Eigen::Index p);

  const Matrix& weights() const noexcept { return weights_; }
  Eigen::Index p() const noexcept { return weights_.rows(); }

 private:
  Matrix weights_;
};

/// Disjoint groups of zero-based node indices.
class NodeGroupSet {
 public:
  NodeGroupSet(std::vector<std::vector<int>> groups, int p);

  const std::vector<std::vector<int>>& groups() const noexcept { return groups_; }
  int p() const noexcept { return p_; }

 private:
  std::vector<std::vector<int>> groups_;
  int p_;
};

struct EdgeIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const EdgeIndex&, const EdgeIndex&) = default;
  friend auto operator<=>(const EdgeIndex&, const EdgeIndex&) = default;
};

/// Disjoint groups of matrix entries.
///
/// When singleton_complement is set (the default, and what
/// expand_node_groups produces) every entry that belongs to no listed group
/// acts as its own group of size one.  Without it, ungrouped entries lie
/// outside the group structure: they contribute nothing to the group norm or
/// its dual, and the group prox forces them to zero.
class EdgeGroupSet {
 public:
  EdgeGroupSet(int p, std::vector<std::vector<EdgeIndex>> groups,
               bool singleton_complement = true);

  /// No explicit groups; every entry is a singleton.
  static EdgeGroupSet singletons(int p);

  int p() const noexcept { return p_; }
  bool singleton_complement() const noexcept { return singleton_complement_; }
  std::size_t num_groups() const noexcept { return offsets_.size() - 1; }

  std::vector<EdgeIndex> group(std::size_t k) const;

  /// Column-major linear indices of the entries in group k.
  std::span<const Eigen::Index> group_entries(std::size_t k) const {
    return {entries_.data() + offsets_[k], entries_.data() + offsets_[k + 1]};
  }

  /// Column-major linear indices of entries in no listed group.
  std::span<const Eigen::Index> ungrouped_entries() const { return ungrouped_; }

  /// Total number of entries across listed groups.
  std::size_t grouped_size() const noexcept { return entries_.size(); }

 private:
  int p_;
  bool singleton_complement_;
  std::vector<std::size_t> offsets_;
  std::vector<Eigen::Index> entries_;
  std::vector<Eigen::Index> ungrouped_;
};

/// Each node group {a, b, ...} becomes the edge group of all ordered pairs
/// drawn from it, diagonal pairs included.
EdgeGroupSet expand_node_groups(const NodeGroupSet& ng);

/// sum_ij w_ij |x_ij|
double weighted_l1_norm(const Matrix& x, const EdgeWeightMatrix& w);
/// max_ij |x_ij| / w_ij
double weighted_linf_norm(const Matrix& x, const EdgeWeightMatrix& w);
/// sum_k ||x_{g_k}||_2
double group_l2_norm(const Matrix& x, const EdgeGroupSet& eg);
/// max_k ||x_{g_k}||_2
double group_dual_norm(const Matrix& x, const EdgeGroupSet& eg);

/// ||W o delta_e||_1 + eps * ||delta_g||_{G,2}
double kev_norm(const Matrix& delta_e, const Matrix& delta_g, const EdgeWeightMatrix& w,
                const EdgeGroupSet& eg, double eps);

/// max(||(1 / W) o u||_inf, ||u||*_{G,2} / eps)
double kev_dual_norm(const Matrix& u, const EdgeWeightMatrix& w, const EdgeGroupSet& eg,
                     double eps);

}  // namespace kdiffnet
