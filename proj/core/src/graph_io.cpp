#include "fairgraph/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fairgraph/errors.hpp"
#include "fairgraph/table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fairgraph {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ValidationError("format_double: conversion failed");
  return std::string(buf, ptr);
}

namespace {

std::string csv_quote(const std::string& s) {
  bool needs = s.find_first_of(",\"\n\r") != std::string::npos ||
               (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::uint32_t> mask_to_ids(const Mask& m) {
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) ids.push_back(static_cast<std::uint32_t>(i));
  }
  return ids;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

void save_graph(const Graph& g, const GraphMeta& meta, const std::string& dir) {
  if (meta.attr_names.size() != g.n_attrs()) {
    throw ValidationError("save_graph: attr_names size != graph attribute count");
  }
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "edges.tsv", std::ios::binary);
    if (!out) throw IngestError("cannot write " + dir + "/edges.tsv");
    for (auto [u, v] : undirected_edges(g)) {
      out << u << '\t' << v << '\n';
    }
  }

  {
    std::ofstream out(fs::path(dir) / "attrs.csv", std::ios::binary);
    if (!out) throw IngestError("cannot write " + dir + "/attrs.csv");
    for (std::size_t c = 0; c < meta.attr_names.size(); ++c) {
      out << csv_quote(meta.attr_names[c]) << ',';
    }
    out << csv_quote(meta.label_name) << '\n';
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      for (std::size_t c = 0; c < g.n_attrs(); ++c) {
        out << format_double(g.attrs()(i, c)) << ',';
      }
      if (g.labels()[i] != kUnlabeled) out << int(g.labels()[i]);
      out << '\n';
    }
  }

  {
    json j;
    j["schema_version"] = 1;
    j["sensitive"] = meta.attr_names[g.sensitive_idx()];
    j["label"] = meta.label_name;
    j["seed"] = meta.seed;
    j["masks"] = {{"train", mask_to_ids(g.masks().train)},
                  {"val", mask_to_ids(g.masks().val)},
                  {"test", mask_to_ids(g.masks().test)}};
    if (!meta.recipe_json.empty()) {
      try {
        j["recipe"] = json::parse(meta.recipe_json);
      } catch (const json::exception& e) {
        throw ValidationError(std::string("save_graph: recipe_json is not valid JSON: ") +
                              e.what());
      }
    }
    std::ofstream out(fs::path(dir) / "meta.json", std::ios::binary);
    if (!out) throw IngestError("cannot write " + dir + "/meta.json");
    out << j.dump(2) << '\n';
  }
}

std::pair<Graph, GraphMeta> load_graph(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "meta.json")) {
    throw IngestError("graph directory " + dir + " is missing meta.json");
  }
  json meta_j = load_json_file(root / "meta.json");
  for (const char* key : {"sensitive", "label", "masks"}) {
    if (!meta_j.contains(key)) {
      throw IngestError(dir + "/meta.json: missing key '" + key + "'");
    }
  }

  auto records = read_csv((root / "attrs.csv").string());
  const auto& header = records[0];
  const std::string label_name = meta_j["label"].get<std::string>();
  const std::string sensitive_name = meta_j["sensitive"].get<std::string>();
  if (header.empty() || header.back() != label_name) {
    throw IngestError(dir + "/attrs.csv: last column must be the label column '" +
                      label_name + "'");
  }
  const std::size_t n_attrs = header.size() - 1;
  auto sens_it = std::find(header.begin(), header.end() - 1, sensitive_name);
  if (sens_it == header.end() - 1) {
    throw IngestError(dir + "/attrs.csv: sensitive column '" + sensitive_name +
                      "' not found");
  }
  const auto sensitive_idx = static_cast<std::size_t>(sens_it - header.begin());

  const std::size_t n = records.size() - 1;
  Matrix attrs(n, n_attrs);
  std::vector<std::uint8_t> labels(n, kUnlabeled);
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t c = 0; c < n_attrs; ++c) {
      const std::string& cell = records[r][c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw IngestError(dir + "/attrs.csv row " + std::to_string(r + 1) + ", column '" +
                          header[c] + "': not a number: '" + cell + "'");
      }
      attrs(r - 1, c) = v;
    }
    const std::string& lab = records[r][n_attrs];
    if (!lab.empty()) {
      if (lab != "0" && lab != "1") {
        throw IngestError(dir + "/attrs.csv row " + std::to_string(r + 1) +
                          ": label must be 0, 1 or empty, got '" + lab + "'");
      }
      labels[r - 1] = static_cast<std::uint8_t>(lab == "1" ? 1 : 0);
    }
  }

  EdgeList edges;
  {
    std::ifstream in(root / "edges.tsv", std::ios::binary);
    if (!in) throw IngestError("cannot open " + dir + "/edges.tsv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::uint32_t u = 0, v = 0;
      const char* b = line.data();
      const char* e = line.data() + line.size();
      auto r1 = std::from_chars(b, e, u);
      if (r1.ec != std::errc() || r1.ptr == e || *r1.ptr != '\t') {
        throw IngestError(dir + "/edges.tsv line " + std::to_string(line_no) +
                          ": expected 'u<TAB>v'");
      }
      auto r2 = std::from_chars(r1.ptr + 1, e, v);
      if (r2.ec != std::errc() || r2.ptr != e) {
        throw IngestError(dir + "/edges.tsv line " + std::to_string(line_no) +
                          ": expected 'u<TAB>v'");
      }
      edges.emplace_back(u, v);
    }
  }

  auto ids_to_mask = [&](const json& arr) {
    Mask m(n, 0);
    for (const auto& id : arr) {
      auto i = id.get<std::uint64_t>();
      if (i >= n) {
        throw IngestError(dir + "/meta.json: mask id " + std::to_string(i) +
                          " out of range");
      }
      m[i] = 1;
    }
    return m;
  };
  Masks masks;
  masks.train = ids_to_mask(meta_j["masks"]["train"]);
  masks.val = ids_to_mask(meta_j["masks"]["val"]);
  masks.test = ids_to_mask(meta_j["masks"]["test"]);

  GraphMeta meta;
  meta.attr_names.assign(header.begin(), header.end() - 1);
  meta.label_name = label_name;
  meta.seed = meta_j.value("seed", std::uint64_t{0});
  if (meta_j.contains("recipe")) meta.recipe_json = meta_j["recipe"].dump();

  Graph g = build_graph(edges, std::move(attrs), sensitive_idx, std::move(labels),
                        std::move(masks));
  return {std::move(g), std::move(meta)};
}

}  // namespace fairgraph
