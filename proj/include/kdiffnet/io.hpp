#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kdiffnet/eval.hpp"
#include "kdiffnet/simulate.hpp"
#include "kdiffnet/solvers.hpp"

namespace kdiffnet::io {

namespace fs = std::filesystem;

enum class MatrixFormat { Text, Binary };

/// Eight-byte header of the binary matrix format, followed by little-endian
/// uint64 rows, uint64 cols and rows*cols little-endian doubles in row-major order.
inline constexpr char kBinaryMagic[8] = {'K', 'D', 'N', 'M', 'A', 'T', '0', '1'};

/// 17 significant digits, enough for an exact double round trip.
std::string format_double(double x);
/// Throws IoError on anything that is not a complete number.
double parse_double(const std::string& s);

void write_matrix_text(const fs::path& path, const Matrix& m, char delimiter = ',');
/// Blank lines and lines starting with '#' are skipped.  With `header` the
/// first non-comment line is discarded.  A space delimiter accepts any run of
/// whitespace.
Matrix read_matrix_text(const fs::path& path, char delimiter = ',', bool header = false);

void write_matrix_binary(const fs::path& path, const Matrix& m);
Matrix read_matrix_binary(const fs::path& path);

/// Dispatches on the extension: ".bin" is binary, anything else text.
void write_matrix(const fs::path& path, const Matrix& m);
Matrix read_matrix(const fs::path& path);

/// One group per line, whitespace-separated zero-based node indices; '#' starts a comment.
NodeGroupSet read_node_groups(const fs::path& path, int p);
void write_node_groups(const fs::path& path, const NodeGroupSet& groups);

/// Ordered "key = value" text; '#' lines are comments.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Overwrites / appends every entry of `other`.
  void merge(const KeyValues& other);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  bool operator==(const KeyValues&) const = default;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

KeyValues read_key_values(const fs::path& path);
void write_key_values(const fs::path& path, const KeyValues& kv, const std::string& comment = {});

KeyValues spec_to_kv(const SimulationSpec& spec);
/// Missing keys keep their defaults; malformed values raise SpecError naming the key.
SimulationSpec spec_from_kv(const KeyValues& kv);

/// Bundle layout: x_c, x_d, true_delta, true_omega_c, true_omega_d, w_e (when
/// present) as matrices (".csv" or ".bin"), groups.txt (when present) and
/// metadata.kv holding the simulation spec, resolved diagonal loadings and edge level.
void save_dataset(const fs::path& dir, const SimulatedDataset& ds,
                  MatrixFormat format = MatrixFormat::Text);
SimulatedDataset load_dataset(const fs::path& dir);

struct ResultBundle {
  DifferentialNetwork network;
  /// method, lambda_n, eps, v, iterations, converged, objective, fit_seconds, ...
  KeyValues meta;
  /// Copy of the dataset's true_delta so the bundle can be scored on its own.
  std::optional<Matrix> truth;
};

void save_result(const fs::path& dir, const ResultBundle& r,
                 MatrixFormat format = MatrixFormat::Text);
ResultBundle load_result(const fs::path& dir);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> inputs;
  KeyValues config;
  std::uint64_t seed = 0;
  std::string tool_version;

  KeyValues to_kv() const;
  static RunManifest from_kv(const KeyValues& kv);
  bool operator==(const RunManifest&) const = default;
};

/// Sweep table: one row per grid point, tab-separated, columns
/// lambda_n eps v tpr fpr precision recall f1 wall_time_seconds iterations converged error.
void write_sweep_table(const fs::path& path, const SweepResult& r);
void write_sweep_summary(const fs::path& path, const SweepResult& r, Method method);

}  // namespace kdiffnet::io
