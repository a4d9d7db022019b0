#include "enc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace enc {

namespace {

std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::ifstream open_input(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing or unreadable file " + file.string());
  return in;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& file) {
  std::ifstream in = open_input(file);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError(where(file, lineno) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

long long meta_int(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::filesystem::path& file) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError(file.string() + ": missing key '" + key + "'");
  long long v = 0;
  if (!parse_number(std::string_view(it->second), v)) {
    throw DataError(file.string() + ": key '" + key + "' is not an integer");
  }
  return v;
}

void shuffle_ids(std::vector<NodeId>& ids, Rng& rng) { std::shuffle(ids.begin(), ids.end(), rng); }

}  // namespace

void Split::validate(NodeId n) const {
  if (train.empty()) throw DataError("split: empty training set");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto* part : {&train, &val, &test}) {
    for (NodeId id : *part) {
      if (id < 0 || id >= n) throw DataError("split: node id out of range");
      if (seen[static_cast<std::size_t>(id)]++) throw DataError("split: node " + std::to_string(id) + " in two parts");
    }
  }
}

Matrix row_normalize(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Real s = out.row(r).sum();
    if (s != Real(0)) out.row(r) /= s;
  }
  return out;
}

Dataset load_canonical(const std::filesystem::path& dir, LoadReport* report) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  LoadReport local;

  const auto meta_path = dir / "meta";
  const auto kv = read_meta(meta_path);
  Dataset ds;
  ds.name = kv.count("name") ? kv.at("name") : dir.filename().string();
  const long long n = meta_int(kv, "n", meta_path);
  const long long c_in = meta_int(kv, "num_features", meta_path);
  const long long k = meta_int(kv, "num_classes", meta_path);
  const long long m = meta_int(kv, "num_edges", meta_path);
  if (n <= 0 || c_in <= 0 || k <= 0 || m < 0) throw DataError(meta_path.string() + ": counts must be positive");
  ds.num_classes = static_cast<int>(k);
  ds.declared_edges = static_cast<std::size_t>(m);
  if (kv.count("normalize_features")) {
    const std::string& flag = kv.at("normalize_features");
    if (flag != "0" && flag != "1") throw DataError(meta_path.string() + ": normalize_features must be 0 or 1");
    ds.normalize_features = flag == "1";
  }

  {
    const auto path = dir / "features.tsv";
    std::ifstream in = open_input(path);
    ds.raw_features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c_in));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (static_cast<long long>(lineno) > n) throw DataError(where(path, lineno) + ": more rows than n = " + std::to_string(n));
      const auto fields = split_tabs(line);
      if (static_cast<long long>(fields.size()) != c_in) {
        throw DataError(where(path, lineno) + ": expected " + std::to_string(c_in) + " values, found " +
                        std::to_string(fields.size()));
      }
      for (std::size_t c = 0; c < fields.size(); ++c) {
        double v = 0;
        if (!parse_number(fields[c], v)) throw DataError(where(path, lineno) + ": malformed value '" + std::string(fields[c]) + "'");
        ds.raw_features(static_cast<Eigen::Index>(lineno - 1), static_cast<Eigen::Index>(c)) = static_cast<Real>(v);
      }
    }
    if (static_cast<long long>(lineno) != n) {
      throw DataError(path.string() + ": " + std::to_string(lineno) + " rows, meta says n = " + std::to_string(n));
    }
  }

  {
    const auto path = dir / "labels.tsv";
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      int y = 0;
      if (!parse_number(std::string_view(line), y)) throw DataError(where(path, lineno) + ": malformed label '" + line + "'");
      if (y < 0 || y >= k) throw DataError(where(path, lineno) + ": label " + line + " outside [0, " + std::to_string(k) + ")");
      ds.labels.push_back(y);
    }
    if (static_cast<long long>(ds.labels.size()) != n) {
      throw DataError(path.string() + ": " + std::to_string(ds.labels.size()) + " labels, meta says n = " + std::to_string(n));
    }
  }

  {
    const auto path = dir / "edges.tsv";
    std::ifstream in = open_input(path);
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::string line;
    std::size_t lineno = 0;
    bool canonical = true;
    std::pair<NodeId, NodeId> previous{-1, -1};
    while (std::getline(in, line)) {
      ++lineno;
      const auto fields = split_tabs(line);
      NodeId a = 0, b = 0;
      if (fields.size() != 2 || !parse_number(fields[0], a) || !parse_number(fields[1], b)) {
        throw DataError(where(path, lineno) + ": expected 'i<TAB>j'");
      }
      if (a < 0 || b < 0 || a >= n || b >= n) throw DataError(where(path, lineno) + ": node id out of range");
      if (!(a < b) || !(previous < std::pair{a, b})) canonical = false;
      previous = {a, b};
      pairs.emplace_back(a, b);
    }
    Graph::BuildReport br;
    ds.graph = Graph::build(static_cast<NodeId>(n), pairs, &br);
    if (!canonical) local.warnings.push_back(path.string() + ": edges not in canonical sorted i<j form; canonicalised");
    if (ds.graph.num_edges() != ds.declared_edges) {
      local.warnings.push_back("edge count: meta declares " + std::to_string(ds.declared_edges) + ", deduplicated graph has " +
                               std::to_string(ds.graph.num_edges()));
    }
  }

  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.rfind("split-", 0) != 0 || entry.path().extension() != ".tsv") continue;
    const std::string split_name = fname.substr(6, fname.size() - 6 - 4);
    std::ifstream in = open_input(entry.path());
    Split s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (static_cast<long long>(lineno) > n) throw DataError(where(entry.path(), lineno) + ": more rows than n");
      const auto id = static_cast<NodeId>(lineno - 1);
      if (line == "train") s.train.push_back(id);
      else if (line == "val") s.val.push_back(id);
      else if (line == "test") s.test.push_back(id);
      else if (line != "none") throw DataError(where(entry.path(), lineno) + ": unknown split tag '" + line + "'");
    }
    if (static_cast<long long>(lineno) != n) throw DataError(entry.path().string() + ": row count does not match n");
    s.validate(static_cast<NodeId>(n));
    ds.splits.emplace(split_name, std::move(s));
  }

  ds.features = ds.normalize_features ? row_normalize(ds.raw_features) : ds.raw_features;
  if (report != nullptr) *report = std::move(local);
  return ds;
}

void write_canonical(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("meta");
    out << "name=" << ds.name << '\n'
        << "n=" << ds.num_nodes() << '\n'
        << "num_features=" << ds.raw_features.cols() << '\n'
        << "num_classes=" << ds.num_classes << '\n'
        << "num_edges=" << ds.graph.num_edges() << '\n'
        << "normalize_features=" << (ds.normalize_features ? 1 : 0) << '\n';
  }
  {
    auto out = open("features.tsv");
    for (Eigen::Index r = 0; r < ds.raw_features.rows(); ++r) {
      for (Eigen::Index c = 0; c < ds.raw_features.cols(); ++c) {
        if (c > 0) out << '\t';
        out << format_double(static_cast<double>(ds.raw_features(r, c)));
      }
      out << '\n';
    }
  }
  {
    auto out = open("labels.tsv");
    for (int y : ds.labels) out << y << '\n';
  }
  {
    auto out = open("edges.tsv");
    for (const Edge& e : ds.graph.edges()) out << e.i << '\t' << e.j << '\n';
  }
  for (const auto& [name, split] : ds.splits) {
    std::vector<const char*> tag(static_cast<std::size_t>(ds.num_nodes()), "none");
    for (NodeId id : split.train) tag[static_cast<std::size_t>(id)] = "train";
    for (NodeId id : split.val) tag[static_cast<std::size_t>(id)] = "val";
    for (NodeId id : split.test) tag[static_cast<std::size_t>(id)] = "test";
    std::ofstream out(dir / ("split-" + name + ".tsv"), std::ios::binary);
    if (!out) throw DataError("cannot write split " + name);
    for (const char* t : tag) out << t << '\n';
  }
}

Split per_class_split(std::span<const int> labels, int num_classes, int per_class, int n_val, int n_test, Rng& rng) {
  if (per_class < 1 || n_val < 0 || n_test < 0) throw DataError("per_class_split: invalid sizes");
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw DataError("per_class_split: label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] < per_class) {
      throw DataError("per_class_split: class " + std::to_string(c) + " has " +
                      std::to_string(counts[static_cast<std::size_t>(c)]) + " nodes, need " + std::to_string(per_class));
    }
  }
  std::vector<NodeId> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_ids(order, rng);

  Split s;
  std::vector<int> taken(static_cast<std::size_t>(num_classes), 0);
  std::vector<NodeId> rest;
  for (NodeId id : order) {
    int& t = taken[static_cast<std::size_t>(labels[static_cast<std::size_t>(id)])];
    if (t < per_class) {
      s.train.push_back(id);
      ++t;
    } else {
      rest.push_back(id);
    }
  }
  const auto v = std::min(rest.size(), static_cast<std::size_t>(n_val));
  const auto t = std::min(rest.size() - v, static_cast<std::size_t>(n_test));
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(v));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(v), rest.begin() + static_cast<std::ptrdiff_t>(v + t));
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Split fully_supervised_split(std::span<const int> labels, int num_classes, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 5) throw DataError("fully_supervised_split: need at least 5 nodes");
  Rng rng(seed);
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) throw DataError("fully_supervised_split: label out of range");
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<NodeId>(i));
  }
  Split s;
  std::size_t cum = 0;
  auto boundary = [](std::size_t count, double frac) {
    return static_cast<std::size_t>(std::llround(frac * static_cast<double>(count)));
  };
  for (auto& ids : by_class) {
    shuffle_ids(ids, rng);
    const std::size_t lo = cum;
    cum += ids.size();
    const std::size_t n_train = boundary(cum, 0.48) - boundary(lo, 0.48);
    const std::size_t n_trval = boundary(cum, 0.80) - boundary(lo, 0.80);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (r < n_train) s.train.push_back(ids[r]);
      else if (r < n_trval) s.val.push_back(ids[r]);
      else s.test.push_back(ids[r]);
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Split resolve_split(const Dataset& ds, const std::string& name, std::uint64_t seed) {
  if (const auto it = ds.splits.find(name); it != ds.splits.end()) return it->second;
  if (name == "public" || name == "random") {
    Rng rng(seed);
    return per_class_split(ds.labels, ds.num_classes, 20, 500, 1000, rng);
  }
  if (name == "full") return fully_supervised_split(ds.labels, ds.num_classes, seed);
  if (name.rfind("geom-", 0) == 0) {
    std::uint64_t index = 0;
    if (!parse_number(std::string_view(name).substr(5), index)) throw DataError("bad split name '" + name + "'");
    return fully_supervised_split(ds.labels, ds.num_classes, index);
  }
  throw DataError("dataset " + ds.name + " has no split '" + name + "'");
}

}  // namespace enc
