#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgos/types.hpp"

namespace pgos {

/// Undirected attributed graph: binary symmetric adjacency with zero
/// diagonal and one feature row per node.
struct Graph {
  Matrix adjacency;  // n x n, entries in {0,1}
  Matrix features;   // n x d

  int num_nodes() const { return static_cast<int>(adjacency.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  int num_edges() const;  // undirected edge count
};

/// Throws ValidationError if any Graph invariant is violated.
void validate_graph(const Graph& g, const std::string& context = "");

enum class GraphLabel { ID, OOD };

struct GraphDataset {
  std::vector<Graph> graphs;
  std::vector<GraphLabel> labels;  // empty, or one per graph
  std::string name;

  std::size_t size() const { return graphs.size(); }
  bool has_labels() const { return !labels.empty(); }
};

void validate_dataset(const GraphDataset& ds, bool is_training_split);

/// Per-node [degree, local clustering coefficient] rows.
Matrix structural_features(const Graph& g);

/// Degree + clustering features standardized column-wise with the given
/// mean/std (std entries below 1e-12 are treated as 1).
void assign_standardized_features(std::vector<Graph>& graphs,
                                  const RowVector& mean, const RowVector& std);
void feature_stats(const std::vector<Graph>& graphs, RowVector& mean,
                   RowVector& std);

// --- JSON dump format (dataset interchange, format_version 1) ---
// `origin` and `config_hash` are optional provenance tags; loaders surface
// them so pipeline stages can refuse mismatched inputs.
std::string dataset_to_json(const GraphDataset& ds,
                            const std::string& origin = "",
                            const std::string& config_hash = "");
GraphDataset dataset_from_json(const std::string& json_text,
                               std::string* config_hash = nullptr,
                               std::string* origin = nullptr);
void save_dataset(const GraphDataset& ds, const std::string& path,
                  const std::string& origin = "",
                  const std::string& config_hash = "");
GraphDataset load_dataset(const std::string& path,
                          std::string* config_hash = nullptr,
                          std::string* origin = nullptr);

/// Reads a TU-format dataset directory: <name>_A.txt,
/// <name>_graph_indicator.txt and optionally <name>_node_labels.txt /
/// <name>_node_attributes.txt, where <name> is the directory basename.
/// Node labels are one-hot encoded; when both labels and attributes exist
/// they are concatenated; with neither, standardized structural features
/// are used.
GraphDataset load_tudataset(const std::string& dir);

}  // namespace pgos
