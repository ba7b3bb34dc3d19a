#include "kdiffnet/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kdiffnet/error.hpp"

namespace kdiffnet {

namespace {

void require_square(const Matrix& x, Eigen::Index p, const char* what) {
  if (x.rows() != p || x.cols() != p) {
    throw InputError(std::string(what) + " must be " + std::to_string(p) + "x" +
                     std::to_string(p));
  }
}

void require_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("eps must be positive");
}

}  // namespace

EdgeWeightMatrix::EdgeWeightMatrix(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() == 0) {
    throw ValidationError("weight matrix must be square and non-empty");
  }
  if (!weights_.allFinite()) throw ValidationError("weight matrix contains non-finite entries");
  if (!(weights_.minCoeff() > 0.0)) {
    throw ValidationError("weight matrix entries must be strictly positive");
  }
  const double scale = std::max(1.0, weights_.maxCoeff());
  if ((weights_ - weights_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("weight matrix must be symmetric");
  }
}

EdgeWeightMatrix EdgeWeightMatrix::ones(Eigen::Index p) {
  return EdgeWeightMatrix(Matrix::Ones(p, p));
}

NodeGroupSet::NodeGroupSet(std::vector<std::vector<int>> groups, int p)
    : groups_(std::move(groups)), p_(p) {
  if (p_ < 1) throw ValidationError("node group set needs p >= 1");
  std::vector<int> owner(static_cast<std::size_t>(p_), -1);
  for (std::size_t k = 0; k < groups_.size(); ++k) {
    if (groups_[k].empty()) throw ValidationError("node group " + std::to_string(k) + " is empty");
    for (const int node : groups_[k]) {
      if (node < 0 || node >= p_) {
        throw ValidationError("node index " + std::to_string(node) + " out of range [0, " +
                              std::to_string(p_) + ")");
      }
      int& o = owner[static_cast<std::size_t>(node)];
      if (o == static_cast<int>(k)) {
        throw ValidationError("node " + std::to_string(node) + " repeated in group " +
                              std::to_string(k));
      }
      if (o >= 0) {
        throw ValidationError("node groups overlap at node " + std::to_string(node) + " (groups " +
                              std::to_string(o) + " and " + std::to_string(k) + ")");
      }
      o = static_cast<int>(k);
    }
  }
}

EdgeGroupSet::EdgeGroupSet(int p, std::vector<std::vector<EdgeIndex>> groups,
                           bool singleton_complement)
    : p_(p), singleton_complement_(singleton_complement) {
  if (p_ < 1) throw ValidationError("edge group set needs p >= 1");
  const auto pp = static_cast<std::size_t>(p_) * static_cast<std::size_t>(p_);
  std::vector<bool> taken(pp, false);
  offsets_.reserve(groups.size() + 1);
  offsets_.push_back(0);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) throw ValidationError("edge group " + std::to_string(k) + " is empty");
    for (const EdgeIndex& e : groups[k]) {
      if (e.row < 0 || e.row >= p_ || e.col < 0 || e.col >= p_) {
        throw ValidationError("edge index out of range in group " + std::to_string(k));
      }
      const Eigen::Index lin = Eigen::Index(e.row) + Eigen::Index(e.col) * p_;
      if (taken[static_cast<std::size_t>(lin)]) {
        throw ValidationError("edge groups overlap at (" + std::to_string(e.row) + "," +
                              std::to_string(e.col) + ")");
      }
      taken[static_cast<std::size_t>(lin)] = true;
      entries_.push_back(lin);
    }
    offsets_.push_back(entries_.size());
  }
  for (std::size_t lin = 0; lin < pp; ++lin) {
    if (!taken[lin]) ungrouped_.push_back(static_cast<Eigen::Index>(lin));
  }
}

EdgeGroupSet EdgeGroupSet::singletons(int p) { return EdgeGroupSet(p, {}, true); }

std::vector<EdgeIndex> EdgeGroupSet::group(std::size_t k) const {
  std::vector<EdgeIndex> out;
  for (const Eigen::Index lin : group_entries(k)) {
    out.push_back({static_cast<int>(lin % p_), static_cast<int>(lin / p_)});
  }
  return out;
}

EdgeGroupSet expand_node_groups(const NodeGroupSet& ng) {
  std::vector<std::vector<EdgeIndex>> groups;
  groups.reserve(ng.groups().size());
  for (const auto& nodes : ng.groups()) {
    std::vector<EdgeIndex> g;
    g.reserve(nodes.size() * nodes.size());
    for (const int i : nodes) {
      for (const int j : nodes) g.push_back({i, j});
    }
    groups.push_back(std::move(g));
  }
  return EdgeGroupSet(ng.p(), std::move(groups), true);
}

double weighted_l1_norm(const Matrix& x, const EdgeWeightMatrix& w) {
  require_square(x, w.p(), "matrix");
  return w.weights().cwiseProduct(x.cwiseAbs()).sum();
}

double weighted_linf_norm(const Matrix& x, const EdgeWeightMatrix& w) {
  require_square(x, w.p(), "matrix");
  return x.cwiseAbs().cwiseQuotient(w.weights()).maxCoeff();
}

double group_l2_norm(const Matrix& x, const EdgeGroupSet& eg) {
  require_square(x, eg.p(), "matrix");
  const double* d = x.data();
  double total = 0.0;
  for (std::size_t k = 0; k < eg.num_groups(); ++k) {
    double sq = 0.0;
    for (const Eigen::Index lin : eg.group_entries(k)) sq += d[lin] * d[lin];
    total += std::sqrt(sq);
  }
  if (eg.singleton_complement()) {
    for (const Eigen::Index lin : eg.ungrouped_entries()) total += std::abs(d[lin]);
  }
  return total;
}

double group_dual_norm(const Matrix& x, const EdgeGroupSet& eg) {
  require_square(x, eg.p(), "matrix");
  const double* d = x.data();
  double best = 0.0;
  for (std::size_t k = 0; k < eg.num_groups(); ++k) {
    double sq = 0.0;
    for (const Eigen::Index lin : eg.group_entries(k)) sq += d[lin] * d[lin];
    best = std::max(best, std::sqrt(sq));
  }
  if (eg.singleton_complement()) {
    for (const Eigen::Index lin : eg.ungrouped_entries()) best = std::max(best, std::abs(d[lin]));
  }
  return best;
}

double kev_norm(const Matrix& delta_e, const Matrix& delta_g, const EdgeWeightMatrix& w,
                const EdgeGroupSet& eg, double eps) {
  require_eps(eps);
  if (w.p() != eg.p()) throw InputError("weight matrix and edge groups disagree on p");
  return weighted_l1_norm(delta_e, w) + eps * group_l2_norm(delta_g, eg);
}

double kev_dual_norm(const Matrix& u, const EdgeWeightMatrix& w, const EdgeGroupSet& eg,
                     double eps) {
  require_eps(eps);
  if (w.p() != eg.p()) throw InputError("weight matrix and edge groups disagree on p");
  return std::max(weighted_linf_norm(u, w), group_dual_norm(u, eg) / eps);
}

}  // namespace kdiffnet
