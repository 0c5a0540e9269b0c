#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "fairgraph/augment.hpp"
#include "fairgraph/errors.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/rng.hpp"
#include "fairgraph/synth.hpp"

using namespace fairgraph;

TEST_CASE("perturb_attributes leaves the sensitive column alone") {
  Matrix attrs(50, 4);
  Rng fill(1);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 3; ++j) attrs(i, j) = fill.normal();
    attrs(i, 3) = fill.bernoulli(0.5) ? 1.0 : 0.0;
  }
  Rng rng(2);
  Matrix noisy = perturb_attributes(attrs, 3, 1.0, 1.0, rng);
  REQUIRE(noisy.same_shape(attrs));
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(noisy(i, 3) == attrs(i, 3));
  }
  // With probability 1 every non-sensitive entry moves.
  std::size_t moved = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (noisy(i, j) != attrs(i, j)) ++moved;
    }
  }
  CHECK(moved == 150);
}

TEST_CASE("perturb_attributes respects probability and stddev") {
  Matrix attrs(100, 3, 0.0);
  SUBCASE("probability zero changes nothing") {
    Rng rng(3);
    Matrix out = perturb_attributes(attrs, 2, 0.0, 1.0, rng);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
  }
  SUBCASE("stddev zero changes nothing") {
    Rng rng(3);
    Matrix out = perturb_attributes(attrs, 2, 1.0, 0.0, rng);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
  }
  SUBCASE("hit fraction tracks the probability") {
    Rng rng(4);
    Matrix out = perturb_attributes(attrs, 2, 0.5, 1.0, rng);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        if (out(i, j) != 0.0) ++moved;
      }
    }
    const double frac = moved / 200.0;
    CHECK(frac > 0.38);
    CHECK(frac < 0.62);
  }
  SUBCASE("same rng seed reproduces the draw") {
    Rng r1(9), r2(9);
    Matrix a = perturb_attributes(attrs, 2, 0.3, 2.0, r1);
    Matrix b = perturb_attributes(attrs, 2, 0.3, 2.0, r2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
  }
}

TEST_CASE("flip_sensitive is an involution on the sensitive column") {
  Matrix attrs = Matrix::from_rows({{0.5, 0.0}, {1.5, 1.0}, {2.5, 1.0}});
  Matrix once = flip_sensitive(attrs, 1);
  CHECK(once(0, 1) == 1.0);
  CHECK(once(1, 1) == 0.0);
  CHECK(once(2, 1) == 0.0);
  CHECK(once(0, 0) == 0.5);
  CHECK(once(1, 0) == 1.5);
  Matrix twice = flip_sensitive(once, 1);
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    CHECK(twice.data()[i] == attrs.data()[i]);
  }
  Matrix bad = Matrix::from_rows({{0.0, 0.5}});
  CHECK_THROWS_AS(flip_sensitive(bad, 1), ValidationError);
}

TEST_CASE("drop_edges keeps the adjacency symmetric") {
  Graph g = synth_dataset(200, 4, 0.7, 0.5, 6);

  SUBCASE("probability zero keeps every edge") {
    Rng rng(1);
    auto [row_ptr, col_idx] = drop_edges(g, 0.0, rng);
    CHECK(row_ptr == g.row_ptr());
    CHECK(col_idx == g.col_idx());
  }
  SUBCASE("probability one removes every edge") {
    Rng rng(1);
    auto [row_ptr, col_idx] = drop_edges(g, 1.0, rng);
    CHECK(col_idx.empty());
    for (auto v : row_ptr) CHECK(v == 0);
  }
  SUBCASE("surviving arcs come in symmetric pairs") {
    Rng rng(2);
    auto [row_ptr, col_idx] = drop_edges(g, 0.4, rng);
    std::set<std::pair<std::uint32_t, std::uint32_t>> arcs;
    for (std::uint32_t u = 0; u + 1 < row_ptr.size(); ++u) {
      for (std::uint32_t k = row_ptr[u]; k < row_ptr[u + 1]; ++k) {
        arcs.insert({u, col_idx[k]});
      }
    }
    for (auto [u, v] : arcs) {
      CHECK(arcs.count({v, u}) == 1);
    }
    // Dropped roughly the requested fraction.
    const double kept = static_cast<double>(arcs.size()) / 2.0;
    const double frac = kept / static_cast<double>(g.n_edges());
    CHECK(frac > 0.5);
    CHECK(frac < 0.7);
  }
}

TEST_CASE("make_views builds one noisy and one counterfactual view") {
  Graph g = synth_dataset(80, 5, 0.7, 0.5, 8);
  AugmentConfig cfg;
  cfg.attr_noise_prob = 0.3;
  cfg.edge_drop_prob = 0.05;
  cfg.noise_stddev = 0.5;
  cfg.seed = 17;

  ViewPair vp = make_views(g, cfg, 0);

  CHECK(vp.noisy.kind == ViewKind::noisy);
  CHECK(vp.counterfactual.kind == ViewKind::counterfactual);

  // Counterfactual: sensitive column flipped, everything else untouched.
  const std::size_t s = g.sensitive_idx();
  Matrix expect_cf = flip_sensitive(g.attrs(), s);
  for (std::size_t i = 0; i < expect_cf.size(); ++i) {
    CHECK(vp.counterfactual.attrs.data()[i] == expect_cf.data()[i]);
  }
  CHECK(vp.counterfactual.row_ptr == g.row_ptr());
  CHECK(vp.counterfactual.col_idx == g.col_idx());

  // Noisy: sensitive column untouched, edges a subset of the original.
  for (std::size_t u = 0; u < g.n_nodes(); ++u) {
    CHECK(vp.noisy.attrs(u, s) == g.attrs()(u, s));
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> orig;
  for (std::uint32_t u = 0; u + 1 < g.row_ptr().size(); ++u) {
    for (std::uint32_t k = g.row_ptr()[u]; k < g.row_ptr()[u + 1]; ++k) {
      orig.insert({u, g.col_idx()[k]});
    }
  }
  for (std::uint32_t u = 0; u + 1 < vp.noisy.row_ptr.size(); ++u) {
    for (std::uint32_t k = vp.noisy.row_ptr[u]; k < vp.noisy.row_ptr[u + 1]; ++k) {
      CHECK(orig.count({u, vp.noisy.col_idx[k]}) == 1);
    }
  }
}

TEST_CASE("make_views is deterministic per epoch and varies across epochs") {
  Graph g = synth_dataset(60, 4, 0.7, 0.5, 9);
  AugmentConfig cfg;
  cfg.seed = 5;
  cfg.attr_noise_prob = 0.5;

  ViewPair a = make_views(g, cfg, 3);
  ViewPair b = make_views(g, cfg, 3);
  for (std::size_t i = 0; i < a.noisy.attrs.size(); ++i) {
    CHECK(a.noisy.attrs.data()[i] == b.noisy.attrs.data()[i]);
  }
  CHECK(a.noisy.col_idx == b.noisy.col_idx);

  ViewPair c = make_views(g, cfg, 4);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.noisy.attrs.size(); ++i) {
    if (a.noisy.attrs.data()[i] != c.noisy.attrs.data()[i]) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("make_views over an external attribute matrix") {
  Graph g = synth_dataset(40, 3, 0.7, 0.5, 10);
  Matrix scaled = g.attrs();
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < scaled.cols(); ++j) scaled(i, j) *= 0.25;
  }
  AugmentConfig cfg;
  cfg.seed = 4;
  cfg.attr_noise_prob = 0.0;
  cfg.edge_drop_prob = 0.0;
  ViewPair vp = make_views(g, scaled, cfg, 0);
  // No noise, no drops: the noisy view is the supplied matrix verbatim.
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    CHECK(vp.noisy.attrs.data()[i] == scaled.data()[i]);
  }
  Matrix cf = flip_sensitive(scaled, g.sensitive_idx());
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    CHECK(vp.counterfactual.attrs.data()[i] == cf.data()[i]);
  }
}
