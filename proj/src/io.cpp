#include "kdiffnet/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "kdiffnet/error.hpp"

namespace kdiffnet::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(x);
  return x;
}

void put_u64(std::ostream& out, std::uint64_t x) {
  x = to_little(x);
  out.write(reinterpret_cast<const char*>(&x), sizeof x);
}

std::uint64_t get_u64(std::istream& in, const fs::path& path) {
  std::uint64_t x = 0;
  if (!in.read(reinterpret_cast<char*>(&x), sizeof x)) {
    throw IoError("truncated binary matrix '" + path.string() + "'");
  }
  return to_little(x);
}

const char* matrix_ext(MatrixFormat f) { return f == MatrixFormat::Binary ? ".bin" : ".csv"; }

// Finds "<stem>.bin" or "<stem>.csv" inside dir.
std::optional<fs::path> find_matrix(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".bin", ".csv"}) {
    const fs::path candidate = dir / (stem + ext);
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

Matrix require_matrix(const fs::path& dir, const std::string& stem) {
  const auto path = find_matrix(dir, stem);
  if (!path) throw IoError("bundle '" + dir.string() + "' has no " + stem + " matrix");
  return read_matrix(*path);
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  double x = 0.0;
  const auto res = std::from_chars(first, s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("not a number: '" + s + "'");
  }
  return x;
}

void write_matrix_text(const fs::path& path, const Matrix& m, char delimiter) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << delimiter;
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Matrix read_matrix_text(const fs::path& path, char delimiter, bool header) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool skipped_header = !header;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<double> row;
    if (delimiter == ' ') {
      std::istringstream ss(t);
      std::string tok;
      while (ss >> tok) row.push_back(parse_double(tok));
    } else {
      std::size_t start = 0;
      while (true) {
        const auto pos = t.find(delimiter, start);
        row.push_back(parse_double(t.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged row in '" + path.string() + "'");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  }
  return m;
}

void write_matrix_binary(const fs::path& path, const Matrix& m) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Matrix read_matrix_binary(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  char magic[sizeof kBinaryMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) {
    throw IoError("'" + path.string() + "' is not a binary matrix file");
  }
  const std::uint64_t rows = get_u64(in, path);
  const std::uint64_t cols = get_u64(in, path);
  if (rows > (1u << 30) || cols > (1u << 30)) throw IoError("implausible matrix size in '" + path.string() + "'");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std::bit_cast<double>(get_u64(in, path));
  }
  return m;
}

void write_matrix(const fs::path& path, const Matrix& m) {
  if (path.extension() == ".bin") write_matrix_binary(path, m);
  else write_matrix_text(path, m);
}

Matrix read_matrix(const fs::path& path) {
  return path.extension() == ".bin" ? read_matrix_binary(path) : read_matrix_text(path);
}

NodeGroupSet read_node_groups(const fs::path& path, int p) {
  auto in = open_in(path);
  std::vector<std::vector<int>> groups;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<int> g;
    std::string tok;
    while (ss >> tok) {
      int node = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), node);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw IoError("bad node index '" + tok + "' in '" + path.string() + "'");
      }
      g.push_back(node);
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return NodeGroupSet(std::move(groups), p);
}

void write_node_groups(const fs::path& path, const NodeGroupSet& groups) {
  auto out = open_out(path);
  out << "# node groups, p = " << groups.p() << '\n';
  for (const auto& g : groups.groups()) {
    for (std::size_t k = 0; k < g.size(); ++k) out << (k ? " " : "") << g[k];
    out << '\n';
  }
}

void KeyValues::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

bool KeyValues::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KeyValues::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw IoError("missing key '" + key + "'");
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KeyValues::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const IoError&) {
    throw IoError("key '" + key + "' is not a number: '" + get(key) + "'");
  }
}

long long KeyValues::get_int(const std::string& key) const {
  const std::string& s = get(key);
  long long x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("key '" + key + "' is not an integer: '" + s + "'");
  }
  return x;
}

bool KeyValues::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw IoError("key '" + key + "' is not a boolean: '" + s + "'");
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [k, v] : other.entries_) set(k, v);
}

KeyValues read_key_values(const fs::path& path) {
  auto in = open_in(path);
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

void write_key_values(const fs::path& path, const KeyValues& kv, const std::string& comment) {
  auto out = open_out(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& [k, v] : kv.entries()) out << k << " = " << v << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

KeyValues spec_to_kv(const SimulationSpec& spec) {
  KeyValues kv;
  kv.set("p", spec.p);
  kv.set("n_c", spec.n_c);
  kv.set("n_d", spec.n_d);
  kv.set("setting", to_string(spec.setting));
  kv.set("sparsity", spec.sparsity);
  kv.set("group_size", spec.group_size);
  kv.set("num_groups", spec.num_groups);
  kv.set("edge_value", spec.edge_value ? format_double(*spec.edge_value) : std::string("auto"));
  kv.set("background_prob", spec.background_prob);
  kv.set("delta_c", spec.delta_c ? format_double(*spec.delta_c) : std::string("auto"));
  kv.set("delta_d", spec.delta_d ? format_double(*spec.delta_d) : std::string("auto"));
  kv.set("knowledge", to_string(spec.knowledge));
  kv.set("er_prob", spec.er_prob);
  kv.set("seed", spec.seed);
  return kv;
}

SimulationSpec spec_from_kv(const KeyValues& kv) {
  SimulationSpec spec;
  auto num = [&](const std::string& key, auto& field) {
    if (!kv.has(key)) return;
    try {
      using T = std::decay_t<decltype(field)>;
      if constexpr (std::is_same_v<T, double>) {
        field = kv.get_double(key);
      } else {
        const long long x = kv.get_int(key);
        if (x < 0 || x > static_cast<long long>(std::numeric_limits<int>::max())) {
          throw IoError("out of range");
        }
        field = static_cast<T>(x);
      }
    } catch (const IoError&) {
      throw SpecError(key, "malformed value '" + kv.get(key) + "'");
    }
  };
  auto opt = [&](const std::string& key, std::optional<double>& field) {
    if (!kv.has(key) || kv.get(key) == "auto") return;
    try {
      field = kv.get_double(key);
    } catch (const IoError&) {
      throw SpecError(key, "malformed value '" + kv.get(key) + "'");
    }
  };
  num("p", spec.p);
  num("n_c", spec.n_c);
  num("n_d", spec.n_d);
  if (kv.has("setting")) spec.setting = parse_setting(kv.get("setting"));
  num("sparsity", spec.sparsity);
  num("group_size", spec.group_size);
  num("num_groups", spec.num_groups);
  opt("edge_value", spec.edge_value);
  num("background_prob", spec.background_prob);
  opt("delta_c", spec.delta_c);
  opt("delta_d", spec.delta_d);
  if (kv.has("knowledge")) spec.knowledge = parse_knowledge_source(kv.get("knowledge"));
  num("er_prob", spec.er_prob);
  if (kv.has("seed")) {
    const std::string& s = kv.get("seed");
    std::uint64_t seed = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw SpecError("seed", "malformed value '" + s + "'");
    }
    spec.seed = seed;
  }
  return spec;
}

void save_dataset(const fs::path& dir, const SimulatedDataset& ds, MatrixFormat format) {
  fs::create_directories(dir);
  const std::string ext = matrix_ext(format);
  write_matrix(dir / ("x_c" + ext), ds.x_c);
  write_matrix(dir / ("x_d" + ext), ds.x_d);
  write_matrix(dir / ("true_delta" + ext), ds.true_delta);
  write_matrix(dir / ("true_omega_c" + ext), ds.true_omega_c);
  write_matrix(dir / ("true_omega_d" + ext), ds.true_omega_d);
  if (ds.w_e) write_matrix(dir / ("w_e" + ext), ds.w_e->weights());
  if (ds.node_groups) write_node_groups(dir / "groups.txt", *ds.node_groups);
  KeyValues meta = spec_to_kv(ds.spec);
  meta.set("resolved_delta_c", ds.resolved_delta_c);
  meta.set("resolved_delta_d", ds.resolved_delta_d);
  meta.set("edge_level", ds.edge_level);
  meta.set("matrix_format", std::string(format == MatrixFormat::Binary ? "binary" : "text"));
  write_key_values(dir / "metadata.kv", meta, "kdiffnet simulated dataset");
}

SimulatedDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a dataset directory");
  SimulatedDataset ds;
  const fs::path meta_path = dir / "metadata.kv";
  KeyValues meta;
  if (fs::exists(meta_path)) meta = read_key_values(meta_path);
  ds.spec = spec_from_kv(meta);
  ds.x_c = require_matrix(dir, "x_c");
  ds.x_d = require_matrix(dir, "x_d");
  if (ds.x_c.cols() != ds.x_d.cols()) throw IoError("x_c and x_d have different column counts");
  const int p = static_cast<int>(ds.x_c.cols());
  ds.spec.p = p;
  ds.spec.n_c = static_cast<int>(ds.x_c.rows());
  ds.spec.n_d = static_cast<int>(ds.x_d.rows());
  if (auto path = find_matrix(dir, "true_delta")) ds.true_delta = read_matrix(*path);
  if (auto path = find_matrix(dir, "true_omega_c")) ds.true_omega_c = read_matrix(*path);
  if (auto path = find_matrix(dir, "true_omega_d")) ds.true_omega_d = read_matrix(*path);
  if (auto path = find_matrix(dir, "w_e")) ds.w_e = EdgeWeightMatrix(read_matrix(*path));
  if (fs::exists(dir / "groups.txt")) ds.node_groups = read_node_groups(dir / "groups.txt", p);
  if (meta.has("resolved_delta_c")) ds.resolved_delta_c = meta.get_double("resolved_delta_c");
  if (meta.has("resolved_delta_d")) ds.resolved_delta_d = meta.get_double("resolved_delta_d");
  if (meta.has("edge_level")) ds.edge_level = meta.get_double("edge_level");
  return ds;
}

void save_result(const fs::path& dir, const ResultBundle& r, MatrixFormat format) {
  fs::create_directories(dir);
  const std::string ext = matrix_ext(format);
  write_matrix(dir / ("delta" + ext), r.network.delta);
  if (r.network.delta_e) write_matrix(dir / ("delta_e" + ext), *r.network.delta_e);
  if (r.network.delta_g) write_matrix(dir / ("delta_g" + ext), *r.network.delta_g);
  for (std::size_t k = 0; k < r.network.components.size(); ++k) {
    write_matrix(dir / ("component_" + std::to_string(k) + ext), r.network.components[k]);
  }
  if (r.truth) write_matrix(dir / ("true_delta" + ext), *r.truth);
  KeyValues meta = r.meta;
  meta.set("iterations", r.network.iterations_run);
  meta.set("converged", r.network.converged);
  meta.set("objective", r.network.objective);
  meta.set("components", static_cast<int>(r.network.components.size()));
  write_key_values(dir / "result.kv", meta, "kdiffnet fit result");
}

ResultBundle load_result(const fs::path& dir) {
  ResultBundle r;
  r.network.delta = require_matrix(dir, "delta");
  if (auto path = find_matrix(dir, "delta_e")) r.network.delta_e = read_matrix(*path);
  if (auto path = find_matrix(dir, "delta_g")) r.network.delta_g = read_matrix(*path);
  if (auto path = find_matrix(dir, "true_delta")) r.truth = read_matrix(*path);
  r.meta = read_key_values(dir / "result.kv");
  if (r.meta.has("iterations")) r.network.iterations_run = static_cast<int>(r.meta.get_int("iterations"));
  if (r.meta.has("converged")) r.network.converged = r.meta.get_bool("converged");
  if (r.meta.has("objective")) r.network.objective = r.meta.get_double("objective");
  const long long n_components = r.meta.has("components") ? r.meta.get_int("components") : 0;
  for (long long k = 0; k < n_components; ++k) {
    r.network.components.push_back(require_matrix(dir, "component_" + std::to_string(k)));
  }
  return r;
}

KeyValues RunManifest::to_kv() const {
  KeyValues kv;
  kv.set("command", command);
  kv.set("seed", seed);
  kv.set("tool_version", tool_version);
  for (const auto& [name, path] : inputs) kv.set("input." + name, path);
  for (const auto& [k, v] : config.entries()) kv.set("config." + k, v);
  return kv;
}

RunManifest RunManifest::from_kv(const KeyValues& kv) {
  RunManifest m;
  m.command = kv.get("command");
  m.seed = static_cast<std::uint64_t>(std::stoull(kv.get("seed")));
  m.tool_version = kv.get("tool_version");
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind("input.", 0) == 0) m.inputs[k.substr(6)] = v;
    else if (k.rfind("config.", 0) == 0) m.config.set(k.substr(7), v);
  }
  return m;
}

void write_sweep_table(const fs::path& path, const SweepResult& r) {
  auto out = open_out(path);
  out << "lambda_n\teps\tv\ttpr\tfpr\tprecision\trecall\tf1\twall_time_seconds\titerations\tconverged\terror\n";
  for (const SweepPoint& pt : r.points) {
    std::string err = pt.error;
    std::replace(err.begin(), err.end(), '\t', ' ');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << format_double(pt.lambda_n) << '\t' << format_double(pt.eps) << '\t'
        << format_double(pt.v) << '\t' << format_double(pt.tpr) << '\t' << format_double(pt.fpr)
        << '\t' << format_double(pt.precision) << '\t' << format_double(pt.recall) << '\t'
        << format_double(pt.f1) << '\t' << format_double(pt.wall_time_seconds) << '\t'
        << pt.iterations << '\t' << (pt.converged ? "true" : "false") << '\t' << err << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_sweep_summary(const fs::path& path, const SweepResult& r, Method method) {
  KeyValues kv;
  kv.set("method", to_string(method));
  kv.set("points", static_cast<int>(r.points.size()));
  kv.set("failures", static_cast<int>(r.failures()));
  kv.set("auc", r.auc);
  kv.set("has_best", r.has_best);
  kv.set("best_lambda", r.best_lambda);
  kv.set("best_eps", r.best_eps);
  kv.set("best_v", r.best_v);
  kv.set("best_f1", r.best_f1);
  write_key_values(path, kv, "kdiffnet sweep summary");
}

}  // namespace kdiffnet::io
