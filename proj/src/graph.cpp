#include "pgos/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pgos {

namespace fs = std::filesystem;
using nlohmann::json;

void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[warn] %s\n", msg.c_str());
}

void log_info(const std::string& msg) {
  std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

int Graph::num_edges() const {
  int e = 0;
  for (int i = 0; i < num_nodes(); ++i)
    for (int j = i + 1; j < num_nodes(); ++j)
      if (adjacency(i, j) != 0.0) ++e;
  return e;
}

void validate_graph(const Graph& g, const std::string& context) {
  auto fail = [&](const std::string& what) {
    throw ValidationError(context.empty() ? what : context + ": " + what);
  };
  const Matrix& a = g.adjacency;
  if (a.rows() < 1) fail("graph has no nodes");
  if (a.rows() != a.cols()) fail("adjacency is not square");
  if (g.features.rows() != a.rows())
    fail("feature row count does not match node count");
  for (int i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) fail("nonzero diagonal in adjacency");
    for (int j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) != a(j, i)) fail("adjacency is not symmetric");
      if (a(i, j) != 0.0 && a(i, j) != 1.0) fail("adjacency entry not in {0,1}");
    }
  }
  if (!g.features.allFinite()) fail("non-finite feature entry");
}

void validate_dataset(const GraphDataset& ds, bool is_training_split) {
  if (ds.has_labels() && ds.labels.size() != ds.graphs.size())
    throw ValidationError("dataset '" + ds.name +
                          "': labels do not align 1:1 with graphs");
  if (is_training_split)
    for (GraphLabel l : ds.labels)
      if (l == GraphLabel::OOD)
        throw ValidationError("dataset '" + ds.name +
                              "': training split contains OOD-labeled graphs");
  int d = -1;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    validate_graph(ds.graphs[i], ds.name + " graph " + std::to_string(i));
    if (d < 0) d = ds.graphs[i].feature_dim();
    if (ds.graphs[i].feature_dim() != d)
      throw ValidationError("dataset '" + ds.name +
                            "': inconsistent feature dimension");
  }
}

Matrix structural_features(const Graph& g) {
  const int n = g.num_nodes();
  const Matrix& a = g.adjacency;
  Matrix out(n, 2);
  for (int v = 0; v < n; ++v) {
    std::vector<int> nbrs;
    for (int u = 0; u < n; ++u)
      if (a(v, u) != 0.0) nbrs.push_back(u);
    double deg = static_cast<double>(nbrs.size());
    double tri = 0.0;
    for (std::size_t x = 0; x < nbrs.size(); ++x)
      for (std::size_t y = x + 1; y < nbrs.size(); ++y)
        if (a(nbrs[x], nbrs[y]) != 0.0) tri += 1.0;
    double clust = deg >= 2.0 ? 2.0 * tri / (deg * (deg - 1.0)) : 0.0;
    out(v, 0) = deg;
    out(v, 1) = clust;
  }
  return out;
}

void feature_stats(const std::vector<Graph>& graphs, RowVector& mean,
                   RowVector& std) {
  Eigen::Index d = graphs.front().features.cols();
  mean = RowVector::Zero(d);
  std = RowVector::Zero(d);
  double count = 0;
  for (const Graph& g : graphs) {
    mean += g.features.colwise().sum();
    count += static_cast<double>(g.features.rows());
  }
  mean /= count;
  for (const Graph& g : graphs)
    std += (g.features.rowwise() - mean).array().square().colwise().sum().matrix();
  std = (std / count).array().sqrt();
}

void assign_standardized_features(std::vector<Graph>& graphs,
                                  const RowVector& mean,
                                  const RowVector& std) {
  RowVector safe = std;
  for (Eigen::Index j = 0; j < safe.size(); ++j)
    if (safe(j) < 1e-12) safe(j) = 1.0;
  for (Graph& g : graphs) {
    g.features = (g.features.rowwise() - mean).array().rowwise() /
                 safe.array();
  }
}

// --- JSON dump ---

namespace {

json graph_to_json(const Graph& g) {
  json jg;
  jg["n"] = g.num_nodes();
  json adj = json::array();
  for (int i = 0; i < g.num_nodes(); ++i) {
    json row = json::array();
    for (int j = i + 1; j < g.num_nodes(); ++j)
      if (g.adjacency(i, j) != 0.0) row.push_back(j);
    adj.push_back(row);
  }
  jg["adj"] = adj;  // upper-triangular neighbor lists
  json feats = json::array();
  for (int i = 0; i < g.features.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < g.features.cols(); ++j) row.push_back(g.features(i, j));
    feats.push_back(row);
  }
  jg["features"] = feats;
  return jg;
}

Graph graph_from_json(const json& jg) {
  Graph g;
  int n = jg.at("n").get<int>();
  if (n < 1) throw ValidationError("dataset dump: graph with n < 1");
  g.adjacency = Matrix::Zero(n, n);
  const json& adj = jg.at("adj");
  for (int i = 0; i < static_cast<int>(adj.size()); ++i) {
    for (const auto& jj : adj[i]) {
      int j = jj.get<int>();
      if (j < 0 || j >= n)
        throw ValidationError("dataset dump: edge endpoint out of range");
      g.adjacency(i, j) = 1.0;
      g.adjacency(j, i) = 1.0;
    }
  }
  g.adjacency.diagonal().setZero();
  const json& feats = jg.at("features");
  int d = feats.empty() ? 0 : static_cast<int>(feats[0].size());
  g.features = Matrix::Zero(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) g.features(i, j) = feats[i][j].get<double>();
  return g;
}

}  // namespace

std::string dataset_to_json(const GraphDataset& ds, const std::string& origin,
                            const std::string& config_hash) {
  json out;
  out["format_version"] = 1;
  out["name"] = ds.name;
  if (!origin.empty()) out["origin"] = origin;
  if (!config_hash.empty()) out["config_hash"] = config_hash;
  json graphs = json::array();
  for (const Graph& g : ds.graphs) graphs.push_back(graph_to_json(g));
  out["graphs"] = graphs;
  if (ds.has_labels()) {
    json labels = json::array();
    for (GraphLabel l : ds.labels)
      labels.push_back(l == GraphLabel::ID ? "ID" : "OOD");
    out["labels"] = labels;
  }
  return out.dump(2);
}

GraphDataset dataset_from_json(const std::string& text,
                               std::string* config_hash, std::string* origin) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset dump: ") + e.what());
  }
  if (in.at("format_version").get<int>() != 1)
    throw ValidationError("dataset dump: unsupported format_version");
  if (config_hash)
    *config_hash = in.value("config_hash", std::string());
  if (origin) *origin = in.value("origin", std::string());
  GraphDataset ds;
  ds.name = in.at("name").get<std::string>();
  for (const auto& jg : in.at("graphs")) ds.graphs.push_back(graph_from_json(jg));
  if (in.contains("labels")) {
    for (const auto& jl : in["labels"]) {
      std::string s = jl.get<std::string>();
      if (s != "ID" && s != "OOD")
        throw ValidationError("dataset dump: unknown label '" + s + "'");
      ds.labels.push_back(s == "ID" ? GraphLabel::ID : GraphLabel::OOD);
    }
  }
  validate_dataset(ds, false);
  return ds;
}

void save_dataset(const GraphDataset& ds, const std::string& path,
                  const std::string& origin, const std::string& config_hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << dataset_to_json(ds, origin, config_hash) << "\n";
}

GraphDataset load_dataset(const std::string& path, std::string* config_hash,
                          std::string* origin) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return dataset_from_json(ss.str(), config_hash, origin);
}

// --- TU text convention ---

namespace {

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ValidationError("missing file: " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

std::vector<double> parse_csv_row(const std::string& line, const fs::path& file,
                                  std::size_t lineno) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (...) {
      throw ParseError(file.string() + ":" + std::to_string(lineno) +
                       ": cannot parse value '" + tok + "'");
    }
  }
  if (vals.empty())
    throw ParseError(file.string() + ":" + std::to_string(lineno) +
                     ": empty row");
  return vals;
}

}  // namespace

GraphDataset load_tudataset(const std::string& dir) {
  fs::path base(dir);
  std::string name = base.filename().string();
  if (name.empty()) name = base.parent_path().filename().string();
  fs::path f_ind = base / (name + "_graph_indicator.txt");
  fs::path f_a = base / (name + "_A.txt");
  fs::path f_lab = base / (name + "_node_labels.txt");
  fs::path f_att = base / (name + "_node_attributes.txt");

  // graph indicator: line k (1-indexed) holds the graph id of node k
  std::vector<std::string> ind_lines = read_lines(f_ind);
  int num_nodes = static_cast<int>(ind_lines.size());
  if (num_nodes == 0) throw ParseError(f_ind.string() + ":1: file is empty");
  std::vector<int> node_graph(num_nodes);
  int max_gid = 0;
  for (int k = 0; k < num_nodes; ++k) {
    int gid;
    try {
      gid = std::stoi(ind_lines[k]);
    } catch (...) {
      throw ParseError(f_ind.string() + ":" + std::to_string(k + 1) +
                       ": cannot parse graph id '" + ind_lines[k] + "'");
    }
    if (gid < 1)
      throw ParseError(f_ind.string() + ":" + std::to_string(k + 1) +
                       ": graph id must be >= 1");
    node_graph[k] = gid;
    max_gid = std::max(max_gid, gid);
  }
  std::vector<int> graph_size(max_gid, 0);
  std::vector<int> node_local(num_nodes);
  for (int k = 0; k < num_nodes; ++k) {
    node_local[k] = graph_size[node_graph[k] - 1]++;
  }
  for (int g = 0; g < max_gid; ++g)
    if (graph_size[g] == 0)
      throw ParseError(f_ind.string() + ": graph ids are not contiguous (id " +
                       std::to_string(g + 1) + " has no nodes)");

  std::vector<Graph> graphs(max_gid);
  for (int g = 0; g < max_gid; ++g)
    graphs[g].adjacency = Matrix::Zero(graph_size[g], graph_size[g]);

  // edges, 1-indexed global node ids
  std::vector<std::string> edge_lines = read_lines(f_a);
  for (std::size_t ln = 0; ln < edge_lines.size(); ++ln) {
    if (is_blank(edge_lines[ln])) continue;
    std::vector<double> vals = parse_csv_row(edge_lines[ln], f_a, ln + 1);
    if (vals.size() != 2)
      throw ParseError(f_a.string() + ":" + std::to_string(ln + 1) +
                       ": expected 'i, j' edge pair");
    long u = static_cast<long>(vals[0]), v = static_cast<long>(vals[1]);
    if (u < 1 || u > num_nodes || v < 1 || v > num_nodes)
      throw ParseError(f_a.string() + ":" + std::to_string(ln + 1) +
                       ": edge references unknown node");
    if (u == v)
      throw ParseError(f_a.string() + ":" + std::to_string(ln + 1) +
                       ": self-loop rejected");
    if (node_graph[u - 1] != node_graph[v - 1])
      throw ParseError(f_a.string() + ":" + std::to_string(ln + 1) +
                       ": edge crosses graph boundary");
    Graph& g = graphs[node_graph[u - 1] - 1];
    g.adjacency(node_local[u - 1], node_local[v - 1]) = 1.0;
    g.adjacency(node_local[v - 1], node_local[u - 1]) = 1.0;
  }

  // features: attributes, one-hot labels, or both concatenated
  bool has_lab = fs::exists(f_lab);
  bool has_att = fs::exists(f_att);
  Matrix attrs, onehot;
  if (has_att) {
    std::vector<std::string> lines = read_lines(f_att);
    if (static_cast<int>(lines.size()) != num_nodes)
      throw ParseError(f_att.string() + ": expected " +
                       std::to_string(num_nodes) + " rows, found " +
                       std::to_string(lines.size()));
    std::vector<double> first = parse_csv_row(lines[0], f_att, 1);
    attrs = Matrix::Zero(num_nodes, static_cast<int>(first.size()));
    for (int k = 0; k < num_nodes; ++k) {
      std::vector<double> vals = parse_csv_row(lines[k], f_att, k + 1);
      if (vals.size() != first.size())
        throw ParseError(f_att.string() + ":" + std::to_string(k + 1) +
                         ": inconsistent attribute count");
      for (std::size_t j = 0; j < vals.size(); ++j) attrs(k, j) = vals[j];
    }
  }
  if (has_lab) {
    std::vector<std::string> lines = read_lines(f_lab);
    if (static_cast<int>(lines.size()) != num_nodes)
      throw ParseError(f_lab.string() + ": expected " +
                       std::to_string(num_nodes) + " rows, found " +
                       std::to_string(lines.size()));
    std::vector<int> raw(num_nodes);
    std::set<int> values;
    for (int k = 0; k < num_nodes; ++k) {
      try {
        raw[k] = std::stoi(lines[k]);
      } catch (...) {
        throw ParseError(f_lab.string() + ":" + std::to_string(k + 1) +
                         ": cannot parse node label '" + lines[k] + "'");
      }
      values.insert(raw[k]);
    }
    std::map<int, int> index;
    int at = 0;
    for (int v : values) index[v] = at++;
    onehot = Matrix::Zero(num_nodes, static_cast<int>(values.size()));
    for (int k = 0; k < num_nodes; ++k) onehot(k, index[raw[k]]) = 1.0;
  }

  GraphDataset ds;
  ds.name = name;
  ds.graphs = std::move(graphs);
  if (has_att || has_lab) {
    int d = (has_att ? static_cast<int>(attrs.cols()) : 0) +
            (has_lab ? static_cast<int>(onehot.cols()) : 0);
    for (Graph& g : ds.graphs) g.features = Matrix::Zero(g.num_nodes(), d);
    for (int k = 0; k < num_nodes; ++k) {
      Graph& g = ds.graphs[node_graph[k] - 1];
      int at = 0;
      if (has_att) {
        g.features.row(node_local[k]).segment(0, attrs.cols()) = attrs.row(k);
        at = static_cast<int>(attrs.cols());
      }
      if (has_lab)
        g.features.row(node_local[k]).segment(at, onehot.cols()) =
            onehot.row(k);
    }
  } else {
    for (Graph& g : ds.graphs) g.features = structural_features(g);
    RowVector mean, std;
    feature_stats(ds.graphs, mean, std);
    assign_standardized_features(ds.graphs, mean, std);
  }
  validate_dataset(ds, false);
  return ds;
}

}  // namespace pgos
