#include "pgos/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace pgos {

namespace {

void validate_family(const FamilySpec& fam) {
  if (fam.kind == "erdos_renyi") {
    if (!(fam.p > 0.0 && fam.p < 1.0))
      throw ValidationError("erdos_renyi: p must lie in (0,1), got " +
                            std::to_string(fam.p));
  } else if (fam.kind == "barabasi_albert") {
    if (fam.m < 1)
      throw ValidationError("barabasi_albert: m must be >= 1");
  } else if (fam.kind == "two_community") {
    if (!(fam.p_in > 0.0 && fam.p_in < 1.0) ||
        !(fam.p_out >= 0.0 && fam.p_out < 1.0))
      throw ValidationError("two_community: p_in in (0,1), p_out in [0,1)");
  } else {
    throw ValidationError("unknown family kind '" + fam.kind + "'");
  }
}

Graph erdos_renyi(int n, double p, RngStream& rng) {
  Graph g;
  g.adjacency = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
  return g;
}

Graph barabasi_albert(int n, int m, RngStream& rng) {
  Graph g;
  g.adjacency = Matrix::Zero(n, n);
  int m0 = std::min(std::max(m, 1) + 1, n);
  // seed clique of m0 nodes
  std::vector<int> targets;  // nodes repeated by degree
  for (int i = 0; i < m0; ++i)
    for (int j = i + 1; j < m0; ++j) {
      g.adjacency(i, j) = 1.0;
      g.adjacency(j, i) = 1.0;
      targets.push_back(i);
      targets.push_back(j);
    }
  for (int v = m0; v < n; ++v) {
    std::vector<int> chosen;
    int attempts = 0;
    while (static_cast<int>(chosen.size()) < std::min(m, v) &&
           attempts < 1000) {
      ++attempts;
      int pick = targets[static_cast<std::size_t>(
          rng.uniform_u64(0, targets.size() - 1))];
      if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end())
        chosen.push_back(pick);
    }
    for (int u : chosen) {
      g.adjacency(v, u) = 1.0;
      g.adjacency(u, v) = 1.0;
      targets.push_back(v);
      targets.push_back(u);
    }
  }
  return g;
}

Graph two_community(int n, double p_in, double p_out, RngStream& rng) {
  Graph g;
  g.adjacency = Matrix::Zero(n, n);
  int half = n / 2;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool same = (i < half) == (j < half);
      if (rng.bernoulli(same ? p_in : p_out)) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
    }
  return g;
}

}  // namespace

void validate_spec(const SyntheticSpec& spec) {
  if (spec.id_families.empty())
    throw ValidationError("synthetic spec: need at least one ID family");
  for (const FamilySpec& f : spec.id_families) validate_family(f);
  for (const FamilySpec& f : spec.ood_families) validate_family(f);
  if (spec.ood_count > 0 && spec.ood_families.empty())
    throw ValidationError("synthetic spec: ood_count > 0 but no OOD family");
  if (spec.n_min < 2 || spec.n_max < spec.n_min)
    throw ValidationError("synthetic spec: node range [" +
                          std::to_string(spec.n_min) + "," +
                          std::to_string(spec.n_max) + "] is degenerate");
  if (spec.graphs_per_family < 1)
    throw ValidationError("synthetic spec: graphs_per_family must be >= 1");
}

Graph sample_graph(const FamilySpec& fam, int n, RngStream& rng) {
  Graph g;
  if (fam.kind == "erdos_renyi")
    g = erdos_renyi(n, fam.p, rng);
  else if (fam.kind == "barabasi_albert")
    g = barabasi_albert(n, fam.m, rng);
  else if (fam.kind == "two_community")
    g = two_community(n, fam.p_in, fam.p_out, rng);
  else
    throw ValidationError("unknown family kind '" + fam.kind + "'");
  g.features = structural_features(g);
  return g;
}

std::vector<int> family_index(const SyntheticSpec& spec) {
  std::vector<int> idx;
  for (std::size_t f = 0; f < spec.id_families.size(); ++f)
    for (int k = 0; k < spec.graphs_per_family; ++k)
      idx.push_back(static_cast<int>(f));
  if (!spec.ood_families.empty()) {
    int per = spec.ood_count / static_cast<int>(spec.ood_families.size());
    int rem = spec.ood_count % static_cast<int>(spec.ood_families.size());
    for (std::size_t f = 0; f < spec.ood_families.size(); ++f) {
      int cnt = per + (static_cast<int>(f) < rem ? 1 : 0);
      for (int k = 0; k < cnt; ++k)
        idx.push_back(static_cast<int>(spec.id_families.size() + f));
    }
  }
  return idx;
}

GraphDataset generate_synthetic_dataset(const SyntheticSpec& spec,
                                        std::uint64_t seed) {
  validate_spec(spec);
  RngStream root(seed);
  GraphDataset ds;
  ds.name = "synthetic";
  std::vector<int> fams = family_index(spec);
  const std::size_t num_id = spec.id_families.size() * spec.graphs_per_family;
  for (std::size_t i = 0; i < fams.size(); ++i) {
    RngStream g_rng = root.derive("graph", i);
    int n = g_rng.uniform_int(spec.n_min, spec.n_max);
    bool ood = i >= num_id;
    const FamilySpec& fam =
        ood ? spec.ood_families[fams[i] - spec.id_families.size()]
            : spec.id_families[fams[i]];
    ds.graphs.push_back(sample_graph(fam, n, g_rng));
    ds.labels.push_back(ood ? GraphLabel::OOD : GraphLabel::ID);
  }
  RowVector mean, std;
  feature_stats(ds.graphs, mean, std);
  assign_standardized_features(ds.graphs, mean, std);
  validate_dataset(ds, false);
  return ds;
}

BenchmarkSplits generate_benchmark(const SyntheticSpec& spec,
                                   int train_per_family, int test_per_family,
                                   int test_ood_count, std::uint64_t seed) {
  validate_spec(spec);
  RngStream root(seed);

  auto gen_raw = [&](const char* tag, int per_family, int ood_count,
                     std::uint64_t salt) {
    SyntheticSpec s = spec;
    s.graphs_per_family = per_family;
    s.ood_count = ood_count;
    if (ood_count == 0) s.ood_families.clear();
    GraphDataset ds;
    ds.name = std::string("synthetic_") + tag;
    RngStream split_root = root.derive(tag, salt);
    std::vector<int> fams = family_index(s);
    const std::size_t num_id = s.id_families.size() * s.graphs_per_family;
    for (std::size_t i = 0; i < fams.size(); ++i) {
      RngStream g_rng = split_root.derive("graph", i);
      int n = g_rng.uniform_int(s.n_min, s.n_max);
      bool ood = i >= num_id;
      const FamilySpec& fam =
          ood ? s.ood_families[fams[i] - s.id_families.size()]
              : s.id_families[fams[i]];
      ds.graphs.push_back(sample_graph(fam, n, g_rng));
      ds.labels.push_back(ood ? GraphLabel::OOD : GraphLabel::ID);
    }
    return ds;
  };

  BenchmarkSplits out;
  out.train = gen_raw("train", train_per_family, 0, 0);
  out.test_id = gen_raw("test_id", test_per_family, 0, 1);
  GraphDataset ood = gen_raw("test_ood", 0, test_ood_count, 2);
  out.test_ood = std::move(ood);

  // standardize all splits with training statistics
  RowVector mean, std;
  feature_stats(out.train.graphs, mean, std);
  assign_standardized_features(out.train.graphs, mean, std);
  assign_standardized_features(out.test_id.graphs, mean, std);
  assign_standardized_features(out.test_ood.graphs, mean, std);

  validate_dataset(out.train, true);
  validate_dataset(out.test_id, false);
  validate_dataset(out.test_ood, false);
  return out;
}

std::vector<int> node_count_histogram(const std::vector<Graph>& graphs) {
  std::vector<int> counts;
  for (const Graph& g : graphs) counts.push_back(g.num_nodes());
  std::sort(counts.begin(), counts.end());
  return counts;
}

}  // namespace pgos
