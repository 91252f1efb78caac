#pragma once

#include <string>
#include <vector>

#include "pgos/graph.hpp"
#include "pgos/rng.hpp"

namespace pgos {

/// One random-graph family. `kind` selects which parameters are read.
struct FamilySpec {
  std::string kind;  // "erdos_renyi" | "barabasi_albert" | "two_community"
  double p = 0.0;        // erdos_renyi
  int m = 0;             // barabasi_albert: edges per new node
  double p_in = 0.0;     // two_community
  double p_out = 0.0;
};

struct SyntheticSpec {
  std::vector<FamilySpec> id_families;
  std::vector<FamilySpec> ood_families;  // usually one; may be empty
  int graphs_per_family = 100;           // per ID family
  int ood_count = 0;                     // total OOD graphs
  int n_min = 20;
  int n_max = 40;
};

void validate_spec(const SyntheticSpec& spec);

/// Draws one graph from a family; structural features, not yet standardized.
Graph sample_graph(const FamilySpec& fam, int n, RngStream& rng);

/// Deterministic in (spec, seed): each graph uses an independently derived
/// per-index stream. Features are [degree, clustering] standardized over
/// the generated dataset. ID graphs come first, then OOD.
GraphDataset generate_synthetic_dataset(const SyntheticSpec& spec,
                                        std::uint64_t seed);

/// Per-family generator index of each graph in generation order (ID
/// families first, then OOD families offset by id_families.size()).
std::vector<int> family_index(const SyntheticSpec& spec);

/// The three pipeline splits, with test features standardized using the
/// training split's statistics.
struct BenchmarkSplits {
  GraphDataset train;    // ID only
  GraphDataset test_id;  // ID only
  GraphDataset test_ood; // OOD only
};

BenchmarkSplits generate_benchmark(const SyntheticSpec& spec, int train_per_family,
                                   int test_per_family, int test_ood_count,
                                   std::uint64_t seed);

/// Empirical node-count histogram of a graph collection.
std::vector<int> node_count_histogram(const std::vector<Graph>& graphs);

}  // namespace pgos
