#include <doctest.h>

#include <cmath>

#include "pgos/synthesis.hpp"
#include "test_support.hpp"

using namespace pgos;

namespace {

GlobalBoundary unit_boundary(int dim, double r = 1.0) {
  GlobalBoundary b;
  b.mu_g = RowVector::Zero(dim);
  b.r_max = r;
  return b;
}

}  // namespace

TEST_CASE("synthesize_graphs: count, invariants, determinism") {
  EmbedderModel m = testsup::tiny_embedder(2, 301);
  RngStream rng(302);
  Matrix latents(9, 3);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 3; ++j) latents(i, j) = 0.5 * rng.normal();
  std::vector<int> hist = {5, 6, 7, 8, 9};
  SynthConfig cfg;

  GraphDataset a = synthesize_graphs(latents, m.decoder, hist, cfg, 42);
  REQUIRE(a.size() == 9);
  validate_dataset(a, false);
  for (GraphLabel l : a.labels) CHECK(l == GraphLabel::OOD);
  for (const Graph& g : a.graphs) {
    bool known = false;
    for (int h : hist) known = known || g.num_nodes() == h;
    CHECK(known);
  }

  GraphDataset b = synthesize_graphs(latents, m.decoder, hist, cfg, 42);
  CHECK(dataset_to_json(a) == dataset_to_json(b));
  GraphDataset c = synthesize_graphs(latents, m.decoder, hist, cfg, 43);
  CHECK(dataset_to_json(a) != dataset_to_json(c));

  CHECK_THROWS_AS(
      synthesize_graphs(Matrix(0, 3), m.decoder, hist, cfg, 1),
      ValidationError);
  CHECK_THROWS_AS(
      synthesize_graphs(latents, m.decoder, {}, cfg, 1), ValidationError);
  SynthConfig bad;
  bad.edge_threshold = 1.0;
  CHECK_THROWS_AS(synthesize_graphs(latents, m.decoder, hist, bad, 1),
                  ValidationError);
}

TEST_CASE("edge threshold binarizes the decoded probabilities") {
  EmbedderModel m = testsup::tiny_embedder(2, 303);
  RowVector z(3);
  z << 0.4, -0.2, 0.1;
  std::vector<int> hist = {6};
  SynthConfig strict;
  strict.edge_threshold = 0.999999;
  SynthConfig loose;
  loose.edge_threshold = 1e-6;
  Matrix one = z;
  GraphDataset none_ds = synthesize_graphs(one, m.decoder, hist, strict, 7);
  GraphDataset full_ds = synthesize_graphs(one, m.decoder, hist, loose, 7);
  // extreme thresholds bracket the edge count
  CHECK(none_ds.graphs[0].num_edges() <= full_ds.graphs[0].num_edges());
  CHECK(full_ds.graphs[0].num_edges() == 6 * 5 / 2);
}

TEST_CASE("gaussian midpoint sampler: degenerate sigma and CLT mean") {
  PrototypeSet protos;
  protos.tau = 0.2;
  protos.c = Matrix(2, 2);
  protos.c << 0.6, 0.0, 0.0, 0.6;
  GlobalBoundary b = unit_boundary(2, 1.0);

  // sigma = 0, K = 2: every sample is the single midpoint
  Matrix exact = gaussian_midpoint_sampler(protos, b, 50, 0.0, 11);
  RowVector mid = 0.5 * (protos.c.row(0) + protos.c.row(1));
  for (int i = 0; i < 50; ++i) CHECK((exact.row(i) - mid).norm() < 1e-12);

  // CLT oracle: per-coordinate mean within 3 sigma / sqrt(N)
  const int n = 100000;
  const double sigma = 0.01;  // small enough that projection never clips
  Matrix samples = gaussian_midpoint_sampler(protos, b, n, sigma, 12);
  for (int d = 0; d < 2; ++d) {
    double mean = samples.col(d).mean();
    CHECK(std::abs(mean - mid(d)) <= 3.0 * sigma / std::sqrt(n));
  }
  // all inside the boundary
  for (int i = 0; i < n; ++i)
    CHECK((samples.row(i) - b.mu_g).norm() <= b.r_max + 1e-12);

  PrototypeSet one;
  one.tau = 0.2;
  one.c = Matrix::Ones(1, 2);
  CHECK_THROWS_AS(gaussian_midpoint_sampler(one, b, 5, 0.1, 1),
                  ValidationError);
}

TEST_CASE("uniform boundary sampler: radius law and determinism") {
  GlobalBoundary b = unit_boundary(2, 2.0);
  const int n = 100000;
  Matrix s = uniform_boundary_sampler(b, n, 21);
  double mean_r = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = (s.row(i) - b.mu_g).norm();
    CHECK(r <= b.r_max + 1e-12);
    mean_r += r;
  }
  mean_r /= n;
  // E[r] = D/(D+1) R; Var(r) = R^2 (D/(D+2) - (D/(D+1))^2) = R^2/18 for D=2
  double expect = 2.0 / 3.0 * b.r_max;
  double sd = std::sqrt(b.r_max * b.r_max / 18.0 / n);
  CHECK(std::abs(mean_r - expect) <= 3.0 * sd);

  Matrix again = uniform_boundary_sampler(b, 100, 21);
  Matrix first100 = s.topRows(100);
  CHECK(again == first100);
}
