#include "fedgm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "fedgm/random.hpp"

namespace fedgm {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kNone: break;
  }
  return "none";
}

Mask Graph::mask(Split s) const {
  Mask m(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) m[i] = split[i] == s;
  return m;
}

int Graph::count(Split s) const {
  return static_cast<int>(std::count(split.begin(), split.end(), s));
}

std::vector<std::vector<int>> Graph::adjacency_lists() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes));
  for (auto [u, v] : edges) {
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  return adj;
}

void Graph::validate() const {
  if (num_nodes < 0) throw Error("graph: negative node count");
  if (features.rows() != num_nodes) throw Error("graph: feature rows != N");
  if (labels.size() != static_cast<std::size_t>(num_nodes)) throw Error("graph: label count != N");
  if (split.size() != static_cast<std::size_t>(num_nodes)) throw Error("graph: mask count != N");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw Error("graph: label " + std::to_string(y) + " outside [0, C)");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [u, v] = edges[i];
    if (u < 0 || v >= num_nodes || u >= v) throw Error("graph: edge (" + std::to_string(u) + "," + std::to_string(v) + ") is not u < v within [0, N)");
    if (i > 0 && !(edges[i - 1] < edges[i])) throw Error("graph: edge list not sorted and unique");
  }
}

std::vector<std::pair<int, int>> canonical_edges(std::vector<std::pair<int, int>> raw, int* self_loops,
                                                 int* duplicates) {
  int loops = 0;
  std::vector<std::pair<int, int>> out;
  out.reserve(raw.size());
  for (auto [u, v] : raw) {
    if (u == v) {
      ++loops;
      continue;
    }
    out.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.begin(), out.end());
  const auto before = out.size();
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (self_loops) *self_loops = loops;
  if (duplicates) *duplicates = static_cast<int>(before - out.size());
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-blank line with comments stripped; false at EOF.
  bool next(std::string& out) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const auto b = raw.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = raw.find_last_not_of(" \t\r");
      out = raw.substr(b, e - b + 1);
      return true;
    }
    return false;
  }

  std::string expect(const char* what) {
    std::string s;
    if (!next(s)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_ + 1);
    return s;
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 0;
};

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

long parse_int(const std::string& s, int line) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("expected integer, got '" + s + "'", line);
  }
  if (pos != s.size()) throw ParseError("expected integer, got '" + s + "'", line);
  return v;
}

double parse_double(const std::string& s, int line) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("expected number, got '" + s + "'", line);
  }
  if (pos != s.size() || !std::isfinite(v)) throw ParseError("expected finite number, got '" + s + "'", line);
  return v;
}

void expect_keyword(LineReader& r, const char* keyword, std::vector<std::string>& toks) {
  const std::string l = r.expect(keyword);
  toks = tokens(l);
  if (toks.empty() || toks[0] != keyword) {
    throw ParseError(std::string("expected section '") + keyword + "', got '" + l + "'", r.line());
  }
}

}  // namespace

LoadResult parse_graph(std::istream& in) {
  LineReader r(in);
  LoadResult result;
  Graph& g = result.graph;

  if (r.expect("GRAPH v1") != "GRAPH v1") throw ParseError("missing 'GRAPH v1' magic", r.line());

  std::string line = r.expect("header");
  auto t = tokens(line);
  if (!t.empty() && t[0] == "CONDENSED") {
    if (t.size() != 5 || t[1] != "client" || t[3] != "ratio") {
      throw ParseError("malformed CONDENSED line", r.line());
    }
    result.condensed = CondensedHeader{static_cast<int>(parse_int(t[2], r.line())), parse_double(t[4], r.line())};
    line = r.expect("header");
    t = tokens(line);
  }
  if (t.size() != 6 || t[0] != "N" || t[2] != "D" || t[4] != "C") {
    throw ParseError("malformed header, expected 'N <n> D <d> C <c>'", r.line());
  }
  const long n = parse_int(t[1], r.line());
  const long d = parse_int(t[3], r.line());
  const long c = parse_int(t[5], r.line());
  if (n < 0 || d < 0 || c < 1) throw ParseError("header values out of range", r.line());
  g.num_nodes = static_cast<int>(n);
  g.num_classes = static_cast<int>(c);

  expect_keyword(r, "FEATURES", t);
  g.features.resize(n, d);
  for (long i = 0; i < n; ++i) {
    t = tokens(r.expect("feature row"));
    if (static_cast<long>(t.size()) != d) {
      throw ParseError("feature row has " + std::to_string(t.size()) + " values, header says D=" + std::to_string(d),
                       r.line());
    }
    for (long j = 0; j < d; ++j) g.features(i, j) = parse_double(t[static_cast<std::size_t>(j)], r.line());
  }

  expect_keyword(r, "LABELS", t);
  g.labels.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    t = tokens(r.expect("label"));
    if (t.size() != 1) throw ParseError("expected one label per line", r.line());
    const long y = parse_int(t[0], r.line());
    if (y < 0 || y >= c) throw ParseError("label " + t[0] + " outside [0, C)", r.line());
    g.labels[static_cast<std::size_t>(i)] = static_cast<int>(y);
  }

  expect_keyword(r, "EDGES", t);
  if (t.size() != 2) throw ParseError("expected 'EDGES <M>'", r.line());
  const long m = parse_int(t[1], r.line());
  if (m < 0) throw ParseError("negative edge count", r.line());
  std::vector<std::pair<int, int>> raw;
  raw.reserve(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    t = tokens(r.expect("edge"));
    const bool weighted = result.condensed.has_value();
    if (t.size() != (weighted ? 3u : 2u)) {
      throw ParseError(weighted ? "expected 'u v w'" : "expected 'u v'", r.line());
    }
    const long u = parse_int(t[0], r.line());
    const long v = parse_int(t[1], r.line());
    if (u < 0 || u >= n || v < 0 || v >= n) throw ParseError("edge endpoint out of range", r.line());
    if (weighted) {
      result.weighted_edges.emplace_back(static_cast<int>(std::min(u, v)), static_cast<int>(std::max(u, v)),
                                         parse_double(t[2], r.line()));
    }
    raw.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  g.edges = canonical_edges(std::move(raw), &result.dropped_self_loops, &result.dropped_duplicates);

  expect_keyword(r, "MASKS", t);
  g.split.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const std::string s = r.expect("mask");
    Split sp;
    if (s == "train") sp = Split::kTrain;
    else if (s == "val") sp = Split::kVal;
    else if (s == "test") sp = Split::kTest;
    else if (s == "none") sp = Split::kNone;
    else throw ParseError("mask must be one of train|val|test|none, got '" + s + "'", r.line());
    g.split[static_cast<std::size_t>(i)] = sp;
  }

  std::string extra;
  if (r.next(extra)) throw ParseError("trailing content after MASKS section: '" + extra + "'", r.line());
  g.validate();
  return result;
}

LoadResult load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file " + path.string());
  return parse_graph(in);
}

namespace {

void write_body(std::ostream& out, const Graph& g, const std::vector<std::tuple<int, int, double>>* weighted) {
  out << "N " << g.num_nodes << " D " << g.num_features() << " C " << g.num_classes << "\n";
  out << std::setprecision(17);
  out << "FEATURES\n";
  for (Index i = 0; i < g.features.rows(); ++i) {
    for (Index j = 0; j < g.features.cols(); ++j) {
      if (j) out << ' ';
      out << g.features(i, j);
    }
    out << "\n";
  }
  out << "LABELS\n";
  for (int y : g.labels) out << y << "\n";
  if (weighted) {
    out << "EDGES " << weighted->size() << "\n";
    for (const auto& [u, v, w] : *weighted) out << u << ' ' << v << ' ' << w << "\n";
  } else {
    out << "EDGES " << g.edges.size() << "\n";
    for (auto [u, v] : g.edges) out << u << ' ' << v << "\n";
  }
  out << "MASKS\n";
  for (Split s : g.split) out << split_name(s) << "\n";
}

}  // namespace

void write_graph(std::ostream& out, const Graph& g) {
  out << "GRAPH v1\n";
  write_body(out, g, nullptr);
}

void save_graph(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write graph file " + path.string());
  write_graph(out, g);
}

void write_condensed_graph(std::ostream& out, const Graph& g, const CondensedHeader& header,
                           const std::vector<std::tuple<int, int, double>>& weighted_edges) {
  out << "GRAPH v1\n";
  out << "CONDENSED client " << header.client << " ratio " << std::setprecision(17) << header.ratio << "\n";
  write_body(out, g, &weighted_edges);
}

// ---------------------------------------------------------------------------
// Structure

SparseTensor normalized_adjacency(const Graph& g) {
  const int n = g.num_nodes;
  std::vector<double> degree(static_cast<std::size_t>(n), 1.0);
  for (auto [u, v] : g.edges) {
    degree[static_cast<std::size_t>(u)] += 1.0;
    degree[static_cast<std::size_t>(v)] += 1.0;
  }
  std::vector<double> inv_sqrt(degree.size());
  for (std::size_t i = 0; i < degree.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) + 2 * g.edges.size());
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(i)]);
  for (auto [u, v] : g.edges) {
    const double w = inv_sqrt[static_cast<std::size_t>(u)] * inv_sqrt[static_cast<std::size_t>(v)];
    trips.emplace_back(u, v, w);
    trips.emplace_back(v, u, w);
  }
  SparseTensor a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

Tensor normalized_adjacency_dense(const Graph& g) { return Tensor(normalized_adjacency(g)); }

Graph induce_subgraph(const Graph& g, std::span<const int> nodes) {
  if (nodes.empty()) throw Error("induce_subgraph: empty node set");
  std::vector<int> local(static_cast<std::size_t>(g.num_nodes), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int v = nodes[i];
    if (v < 0 || v >= g.num_nodes) throw Error("induce_subgraph: node id " + std::to_string(v) + " out of range");
    if (local[static_cast<std::size_t>(v)] != -1) throw Error("induce_subgraph: duplicate node id " + std::to_string(v));
    local[static_cast<std::size_t>(v)] = static_cast<int>(i);
  }
  Graph out;
  out.num_nodes = static_cast<int>(nodes.size());
  out.num_classes = g.num_classes;
  out.features.resize(out.num_nodes, g.features.cols());
  out.labels.resize(nodes.size());
  out.split.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto v = static_cast<std::size_t>(nodes[i]);
    out.features.row(static_cast<Index>(i)) = g.features.row(static_cast<Index>(v));
    out.labels[i] = g.labels[v];
    out.split[i] = g.split[v];
  }
  std::vector<std::pair<int, int>> kept;
  for (auto [u, v] : g.edges) {
    const int lu = local[static_cast<std::size_t>(u)];
    const int lv = local[static_cast<std::size_t>(v)];
    if (lu >= 0 && lv >= 0) kept.emplace_back(lu, lv);
  }
  out.edges = canonical_edges(std::move(kept));
  return out;
}

Graph class_neighborhood_subgraph(const Graph& g, int c) {
  std::set<int> members;
  std::vector<bool> is_target(static_cast<std::size_t>(g.num_nodes), false);
  for (int i = 0; i < g.num_nodes; ++i) {
    if (g.split[static_cast<std::size_t>(i)] == Split::kTrain && g.labels[static_cast<std::size_t>(i)] == c) {
      members.insert(i);
      is_target[static_cast<std::size_t>(i)] = true;
    }
  }
  if (members.empty()) {
    throw Error("class_neighborhood_subgraph: class " + std::to_string(c) + " absent from training mask");
  }
  for (auto [u, v] : g.edges) {
    if (is_target[static_cast<std::size_t>(u)]) members.insert(v);
    if (is_target[static_cast<std::size_t>(v)]) members.insert(u);
  }
  const std::vector<int> nodes(members.begin(), members.end());
  Graph sub = induce_subgraph(g, nodes);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sub.split[i] = is_target[static_cast<std::size_t>(nodes[i])] ? Split::kTrain : Split::kNone;
  }
  return sub;
}

void stratified_split(Graph& g, double train_frac, double val_frac, std::uint64_t seed) {
  if (train_frac < 0 || val_frac < 0 || train_frac + val_frac > 1.0) {
    throw Error("stratified_split: fractions must be non-negative and sum to at most 1");
  }
  Rng rng(seed);
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(g.num_classes));
  for (int i = 0; i < g.num_nodes; ++i) by_class[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(i)])].push_back(i);
  for (auto& nodes : by_class) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const auto n = static_cast<double>(nodes.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * n));
    const auto n_val = std::min(nodes.size() - n_train, static_cast<std::size_t>(std::llround(val_frac * n)));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto v = static_cast<std::size_t>(nodes[k]);
      g.split[v] = k < n_train ? Split::kTrain : (k < n_train + n_val ? Split::kVal : Split::kTest);
    }
  }
}

}  // namespace fedgm
