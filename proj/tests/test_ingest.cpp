#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "fairgraph/errors.hpp"
#include "fairgraph/graph_io.hpp"
#include "fairgraph/rng.hpp"
#include "fairgraph/similarity.hpp"
#include "fairgraph/synth.hpp"
#include "fairgraph/table.hpp"
#include "helpers.hpp"

using namespace fairgraph;
using testutil::TempDir;

TEST_CASE("read_csv handles quoting, CRLF and embedded separators") {
  TempDir dir("csv");
  testutil::spit(dir.file("a.csv"),
                 "name,note\r\n"
                 "alpha,\"hello, world\"\r\n"
                 "beta,\"line\nbreak\"\n"
                 "gamma,\"doubled \"\"quotes\"\"\"\n");
  auto rows = read_csv(dir.file("a.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"name", "note"});
  CHECK(rows[1][1] == "hello, world");
  CHECK(rows[2][1] == "line\nbreak");
  CHECK(rows[3][1] == "doubled \"quotes\"");
}

TEST_CASE("read_csv reports the record of a ragged row") {
  TempDir dir("csv_bad");
  testutil::spit(dir.file("bad.csv"), "a,b\n1,2\n3\n");
  try {
    read_csv(dir.file("bad.csv"));
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), IngestError);
}

namespace {

const char* kToyCsv =
    "age,color,gender,score,approved\n"
    "25,red,male,1.5,yes\n"
    "32,blue,female,2.5,no\n"
    "47,red,male,3.5,yes\n"
    "51,green,female,0.5,\n";

TableSchema toy_schema() {
  TableSchema s;
  s.sensitive = "gender";
  s.label = "approved";
  s.sensitive_map = {{"male", 0}, {"female", 1}};
  s.label_map = {{"no", 0}, {"yes", 1}};
  return s;
}

}  // namespace

TEST_CASE("load_table encodes categoricals and maps sensitive/label") {
  TempDir dir("table");
  testutil::spit(dir.file("t.csv"), kToyCsv);
  AttributeTable t = load_table(dir.file("t.csv"), toy_schema());

  // Sensitive column first, then the rest in header order; categorical
  // levels one-hot expand in place, lexicographically.
  std::vector<std::string> expect = {"gender",      "age",       "color=blue",
                                     "color=green", "color=red", "score"};
  CHECK(t.column_names == expect);
  CHECK(t.sensitive_idx == 0);
  CHECK(t.sensitive_name == "gender");
  CHECK(t.label_name == "approved");

  CHECK(t.attrs(0, 0) == 0.0);  // male -> 0
  CHECK(t.attrs(1, 0) == 1.0);
  CHECK(t.attrs(0, 1) == 25.0);
  CHECK(t.attrs(0, 4) == 1.0);  // row 0 is red
  CHECK(t.attrs(0, 2) == 0.0);
  CHECK(t.attrs(1, 2) == 1.0);  // row 1 is blue
  CHECK(t.attrs(3, 3) == 1.0);  // row 3 is green
  CHECK(t.attrs(0, 5) == 1.5);
  CHECK(t.labels == std::vector<std::uint8_t>{1, 0, 1, kUnlabeled});
}

TEST_CASE("load_table drop list removes raw columns before encoding") {
  TempDir dir("table_drop");
  testutil::spit(dir.file("t.csv"), kToyCsv);
  TableSchema s = toy_schema();
  s.drop = {"color"};
  AttributeTable t = load_table(dir.file("t.csv"), s);
  CHECK(t.column_names == std::vector<std::string>{"gender", "age", "score"});
  CHECK(t.sensitive_idx == 0);
}

TEST_CASE("load_table errors name the offending cell") {
  TempDir dir("table_err");
  testutil::spit(dir.file("gap.csv"), "a,gender,approved\n1,male,yes\n,female,no\n");
  TableSchema s = toy_schema();
  try {
    load_table(dir.file("gap.csv"), s);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a") != std::string::npos);
  }

  testutil::spit(dir.file("nomap.csv"), "a,gender,approved\n1,other,yes\n2,male,no\n");
  CHECK_THROWS_AS(load_table(dir.file("nomap.csv"), s), IngestError);

  TableSchema missing = s;
  missing.sensitive = "nope";
  testutil::spit(dir.file("ok.csv"), "a,gender,approved\n1,male,yes\n2,female,no\n");
  CHECK_THROWS_AS(load_table(dir.file("ok.csv"), missing), IngestError);
}

TEST_CASE("similarity closed forms") {
  std::vector<double> x = {0.0, 0.0};
  std::vector<double> y = {3.0, 4.0};
  CHECK(similarity(x, y, 2.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(similarity(x, y, 1.0) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
  CHECK(similarity(x, x, 2.0) == 1.0);
  CHECK_THROWS_AS(similarity(x, y, 0.0), ValidationError);
}

namespace {

// Brute-force reference for the graph builder: every pair whose similarity
// reaches fraction * (overall max similarity).
EdgeList oracle_edges(const Matrix& x, double fraction, double p) {
  const std::size_t n = x.rows();
  double max_sim = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist = 0.0;
      if (p == 2.0) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double t = x(i, c) - x(j, c);
          dist += t * t;
        }
        dist = std::sqrt(dist);
      } else {
        for (std::size_t c = 0; c < x.cols(); ++c) {
          dist += std::pow(std::fabs(x(i, c) - x(j, c)), p);
        }
        dist = std::pow(dist, 1.0 / p);
      }
      max_sim = std::max(max_sim, 1.0 / (1.0 + dist));
    }
  }
  EdgeList edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist = 0.0;
      if (p == 2.0) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double t = x(i, c) - x(j, c);
          dist += t * t;
        }
        dist = std::sqrt(dist);
      } else {
        for (std::size_t c = 0; c < x.cols(); ++c) {
          dist += std::pow(std::fabs(x(i, c) - x(j, c)), p);
        }
        dist = std::pow(dist, 1.0 / p);
      }
      if (1.0 / (1.0 + dist) >= fraction * max_sim) {
        edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  }
  return edges;
}

AttributeTable random_table(std::size_t n, std::size_t d, std::uint64_t seed) {
  AttributeTable t;
  t.attrs = Matrix(n, d + 1);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) t.attrs(i, j) = rng.normal();
    t.attrs(i, d) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < d; ++j) t.column_names.push_back("c" + std::to_string(j));
  t.column_names.push_back("s");
  t.sensitive_idx = d;
  t.sensitive_name = "s";
  t.label_name = "y";
  t.labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) t.labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  return t;
}

}  // namespace

TEST_CASE("build_similarity_graph matches the brute-force oracle") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    for (double fraction : {0.5, 0.8, 1.0}) {
      for (double p : {1.0, 2.0, 3.0}) {
        AttributeTable t = random_table(14, 3, seed * 10 + static_cast<int>(p));
        SimilarityConfig cfg;
        cfg.threshold_fraction = fraction;
        cfg.minkowski_p = p;
        cfg.seed = seed;
        cfg.split = SplitFractions{0.5, 0.2, 0.3};
        Graph g = build_similarity_graph(t, cfg);
        CHECK(undirected_edges(g) == oracle_edges(t.attrs, fraction, p));
      }
    }
  }
}

TEST_CASE("build_similarity_graph respects exclude and standardize") {
  AttributeTable t = random_table(12, 3, 5);
  // Give one column a huge scale so standardization visibly changes edges.
  for (std::size_t i = 0; i < t.attrs.rows(); ++i) t.attrs(i, 0) *= 1000.0;

  SimilarityConfig cfg;
  cfg.threshold_fraction = 0.7;
  cfg.seed = 1;

  SUBCASE("exclude removes a column from the distance") {
    cfg.exclude = {"c0"};
    Graph g = build_similarity_graph(t, cfg);
    Matrix sub(t.attrs.rows(), 3);
    for (std::size_t i = 0; i < t.attrs.rows(); ++i) {
      sub(i, 0) = t.attrs(i, 1);
      sub(i, 1) = t.attrs(i, 2);
      sub(i, 2) = t.attrs(i, 3);
    }
    CHECK(undirected_edges(g) == oracle_edges(sub, 0.7, 2.0));
    // The graph still carries the full attribute matrix.
    CHECK(g.n_attrs() == 4);
  }

  SUBCASE("standardize z-scores the distance columns") {
    cfg.standardize = true;
    Graph g = build_similarity_graph(t, cfg);
    Matrix z = t.attrs;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, j);
      mean /= static_cast<double>(z.rows());
      double var = 0.0;
      for (std::size_t i = 0; i < z.rows(); ++i) {
        const double d = z(i, j) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(z.rows()));
      for (std::size_t i = 0; i < z.rows(); ++i) {
        z(i, j) = sd < 1e-12 ? 0.0 : (z(i, j) - mean) / sd;
      }
    }
    CHECK(undirected_edges(g) == oracle_edges(z, 0.7, 2.0));
  }

  SUBCASE("unknown exclude name is an error") {
    cfg.exclude = {"nope"};
    CHECK_THROWS_AS(build_similarity_graph(t, cfg), IngestError);
  }
}

TEST_CASE("build_similarity_graph is independent of the worker count") {
  AttributeTable t = random_table(40, 4, 9);
  SimilarityConfig cfg;
  cfg.threshold_fraction = 0.75;
  cfg.seed = 2;
  cfg.n_threads = 1;
  Graph g1 = build_similarity_graph(t, cfg);
  cfg.n_threads = 4;
  Graph g4 = build_similarity_graph(t, cfg);
  CHECK(graph_fingerprint(g1) == graph_fingerprint(g4));
}

TEST_CASE("build_similarity_graph guards and thread resolution") {
  AttributeTable t = random_table(12, 2, 1);
  SimilarityConfig cfg;
  cfg.max_nodes = 10;
  CHECK_THROWS_AS(build_similarity_graph(t, cfg), CapacityError);

  cfg.max_nodes = 50000;
  cfg.threshold_fraction = 1.5;
  CHECK_THROWS_AS(build_similarity_graph(t, cfg), ValidationError);

  CHECK(resolve_thread_count(3) == 3);
  ::setenv("FAIRGRAPH_THREADS", "2", 1);
  CHECK(resolve_thread_count(0) == 2);
  ::setenv("FAIRGRAPH_THREADS", "junk", 1);
  CHECK(resolve_thread_count(0) >= 1);
  ::unsetenv("FAIRGRAPH_THREADS");
  CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("save_graph and load_graph round-trip") {
  Graph g = synth_dataset(60, 4, 0.7, 0.6, 21);
  GraphMeta meta;
  for (std::size_t c = 0; c < g.n_attrs(); ++c) {
    meta.attr_names.push_back("a" + std::to_string(c));
  }
  meta.attr_names.back() = "sens";
  meta.label_name = "target";
  meta.seed = 21;
  meta.recipe_json = "{\"threshold_fraction\":0.8}";

  TempDir dir("roundtrip");
  save_graph(g, meta, dir.file("g"));
  auto [g2, meta2] = load_graph(dir.file("g"));

  CHECK(graph_fingerprint(g2) == graph_fingerprint(g));
  CHECK(meta2.attr_names == meta.attr_names);
  CHECK(meta2.label_name == "target");
  CHECK(meta2.seed == 21);
  CHECK(meta2.recipe_json.find("threshold_fraction") != std::string::npos);

  // Rewrite must be byte-identical.
  const std::string edges_a = testutil::slurp(dir.file("g/edges.tsv"));
  const std::string attrs_a = testutil::slurp(dir.file("g/attrs.csv"));
  const std::string meta_a = testutil::slurp(dir.file("g/meta.json"));
  save_graph(g, meta, dir.file("g"));
  CHECK(testutil::slurp(dir.file("g/edges.tsv")) == edges_a);
  CHECK(testutil::slurp(dir.file("g/attrs.csv")) == attrs_a);
  CHECK(testutil::slurp(dir.file("g/meta.json")) == meta_a);
}

TEST_CASE("load_graph rejects missing and damaged directories") {
  TempDir dir("io_err");
  CHECK_THROWS_AS(load_graph(dir.file("absent")), IngestError);

  Graph g = synth_dataset(30, 3, 0.7, 0.6, 2);
  GraphMeta meta;
  for (std::size_t c = 0; c < g.n_attrs(); ++c) {
    meta.attr_names.push_back("a" + std::to_string(c));
  }
  save_graph(g, meta, dir.file("g"));
  testutil::spit(dir.file("g/edges.tsv"), "0\t999999\n");
  CHECK_THROWS(load_graph(dir.file("g")));
}

TEST_CASE("format_double is shortest-round-trip") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5) == "-2.5");
  const double v = 0.30000000000000004;
  CHECK(std::stod(format_double(v)) == v);
}
