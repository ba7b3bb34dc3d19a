#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kdiffnet/knowledge.hpp"
#include "kdiffnet/linalg.hpp"

namespace kdiffnet {

enum class Setting { E, G, EG };

std::string to_string(Setting s);
Setting parse_setting(const std::string& name);

/// Where the edge-level knowledge comes from when the setting needs it.
enum class KnowledgeSource {
  /// Euclidean distances between p points drawn uniformly in the unit cube.
  Spatial,
  /// Hop distances on an Erdos-Renyi graph with edge probability er_prob
  /// (unreachable pairs get distance p).
  ErdosRenyi,
  /// A caller-supplied distance matrix.
  Given,
};

std::string to_string(KnowledgeSource s);
KnowledgeSource parse_knowledge_source(const std::string& name);

struct SimulationSpec {
  int p = 50;
  int n_c = 100;
  int n_d = 100;
  Setting setting = Setting::E;
  /// Fraction of off-diagonal pairs activated in the edge component.
  double sparsity = 0.125;
  int group_size = 5;
  int num_groups = 2;
  /// Differential and background entry magnitude; nullopt means 0.5 for E/G
  /// and 1/3 for EG.
  std::optional<double> edge_value;
  double background_prob = 0.05;
  /// Diagonal loading; nullopt means |lambda_min| + 0.2.
  std::optional<double> delta_c;
  std::optional<double> delta_d;
  KnowledgeSource knowledge = KnowledgeSource::Spatial;
  double er_prob = 0.05;
  std::uint64_t seed = 0;

  double resolved_edge_value() const;

  /// Throws SpecError naming the offending field.
  void validate() const;
};

struct DistanceWeights {
  /// The penalty matrix handed to the estimators (distances, zeros floored).
  EdgeWeightMatrix w_e;
  /// inv.logit(-dist): the edge-occurrence propensity used to plant edges.
  Matrix w_d;
};

inline constexpr double kDistanceFloor = 1e-3;

/// W_E = max(dist, floor) and W^d_ij = 1 / (1 + exp(dist_ij)).
DistanceWeights gen_weight_from_distance(const Matrix& dist);

/// Spatial distance matrix from `p` uniform points in [0, 1]^3.
Matrix spatial_distances(int p, std::mt19937_64& rng);
/// Hop-distance matrix of an Erdos-Renyi graph.
Matrix erdos_renyi_distances(int p, double prob, std::mt19937_64& rng);

/// Named, independent random stream derived from one seed.
std::mt19937_64 sub_stream(std::uint64_t seed, std::string_view name);

struct SimulatedDataset {
  SimulationSpec spec;
  Matrix x_c;
  Matrix x_d;
  std::optional<EdgeWeightMatrix> w_e;
  std::optional<NodeGroupSet> node_groups;
  Matrix true_delta;
  Matrix true_omega_c;
  Matrix true_omega_d;
  double resolved_delta_c = 0.0;
  double resolved_delta_d = 0.0;
  /// Activation level s_l on W^d (NaN when the setting has no edge component).
  double edge_level = 0.0;
};

/// Builds Omega_c = B_I + delta_c I and Omega_d = Delta^d + Delta^g + B_I + delta_d I,
/// then samples x_c ~ N(0, Omega_c^-1) and x_d ~ N(0, Omega_d^-1).
/// `distances` is required when spec.knowledge == Given and ignored otherwise.
SimulatedDataset gen_dataset(const SimulationSpec& spec,
                             const std::optional<Matrix>& distances = std::nullopt);

/// Entries with |true_delta| > tol.
std::vector<EdgeIndex> true_support(const Matrix& true_delta, double tol,
                                    bool exclude_diagonal = true);
std::vector<EdgeIndex> true_support(const SimulatedDataset& ds, double tol,
                                    bool exclude_diagonal = true);

}  // namespace kdiffnet
