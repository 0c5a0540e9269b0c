// Command-line front end: dataset building, training, evaluation, lambda
// sweeps and ablation comparisons. Every run writes machine-readable
// artifacts (report.json, log.jsonl, checkpoint.json) plus a one-line
// summary on stdout.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairgraph/checkpoint.hpp"
#include "fairgraph/config.hpp"
#include "fairgraph/errors.hpp"
#include "fairgraph/graph_io.hpp"
#include "fairgraph/metrics.hpp"
#include "fairgraph/model.hpp"
#include "fairgraph/report.hpp"
#include "fairgraph/similarity.hpp"
#include "fairgraph/synth.hpp"
#include "fairgraph/table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairgraph;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IngestError("write to '" + path.string() + "' failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) {
      if (key == k) ok = true;
    }
    if (!ok) throw IngestError(where + ": unknown key '" + key + "'");
  }
}

struct BuildRecipe {
  TableSchema schema;
  SimilarityConfig sim;
  std::string echo;  // normalized recipe, stored in the graph directory
};

BuildRecipe parse_build_recipe(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IngestError(path + ": not valid JSON: " + std::string(e.what()));
  }
  check_keys(doc,
             {"sensitive", "label", "sensitive_map", "label_map", "drop",
              "threshold_fraction", "minkowski_p", "exclude", "standardize", "seed",
              "split", "max_nodes"},
             path);
  BuildRecipe r;
  if (!doc.contains("sensitive") || !doc.contains("label")) {
    throw IngestError(path + ": 'sensitive' and 'label' column names are required");
  }
  r.schema.sensitive = doc["sensitive"].get<std::string>();
  r.schema.label = doc["label"].get<std::string>();
  if (doc.contains("sensitive_map")) {
    r.schema.sensitive_map = doc["sensitive_map"].get<std::map<std::string, int>>();
  }
  if (doc.contains("label_map")) {
    r.schema.label_map = doc["label_map"].get<std::map<std::string, int>>();
  }
  if (doc.contains("drop")) {
    r.schema.drop = doc["drop"].get<std::vector<std::string>>();
  }
  if (doc.contains("threshold_fraction")) {
    r.sim.threshold_fraction = doc["threshold_fraction"].get<double>();
  }
  if (doc.contains("minkowski_p")) {
    r.sim.minkowski_p = doc["minkowski_p"].get<double>();
  }
  if (doc.contains("exclude")) {
    r.sim.exclude = doc["exclude"].get<std::vector<std::string>>();
  }
  if (doc.contains("standardize")) {
    r.sim.standardize = doc["standardize"].get<bool>();
  }
  if (doc.contains("seed")) r.sim.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("max_nodes")) r.sim.max_nodes = doc["max_nodes"].get<std::size_t>();
  if (doc.contains("split")) {
    const json& sp = doc["split"];
    check_keys(sp, {"train", "val", "test"}, path + ": split");
    if (sp.contains("train")) r.sim.split.train = sp["train"].get<double>();
    if (sp.contains("val")) r.sim.split.val = sp["val"].get<double>();
    if (sp.contains("test")) r.sim.split.test = sp["test"].get<double>();
  }
  r.echo = doc.dump();
  return r;
}

int cmd_build_graph(const std::string& csv_path, const std::string& meta_path,
                    const std::string& out_dir, std::uint64_t* seed_override) {
  BuildRecipe recipe = parse_build_recipe(meta_path);
  if (seed_override) recipe.sim.seed = *seed_override;

  AttributeTable table = load_table(csv_path, recipe.schema);
  Graph g = build_similarity_graph(table, recipe.sim);

  GraphMeta gm;
  gm.attr_names = table.column_names;
  gm.label_name = table.label_name;
  gm.seed = recipe.sim.seed;
  gm.recipe_json = recipe.echo;
  fs::create_directories(out_dir);
  save_graph(g, gm, out_dir);

  double mean = 0.0;
  for (std::size_t u = 0; u < g.n_nodes(); ++u) mean += static_cast<double>(g.degree(static_cast<std::uint32_t>(u)));
  mean /= static_cast<double>(g.n_nodes());
  double var = 0.0;
  for (std::size_t u = 0; u < g.n_nodes(); ++u) {
    const double d = static_cast<double>(g.degree(static_cast<std::uint32_t>(u))) - mean;
    var += d * d;
  }
  var /= static_cast<double>(g.n_nodes());

  std::cout << "nodes: " << g.n_nodes() << "\n"
            << "edges: " << g.n_edges() << "\n"
            << "attributes: " << g.n_attrs() << "\n"
            << "mean degree: " << format_double(mean) << "\n"
            << "degree stddev: " << format_double(std::sqrt(var)) << "\n"
            << "graph written to " << out_dir << "\n";
  return 0;
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.eval.seed = seed;
  cfg.dataset.synth.seed = seed;
}

Graph load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.is_synth) return synth_dataset(cfg.dataset.synth);
  return load_graph(cfg.dataset.graph_dir).first;
}

RunMetadata metadata_for(const ExperimentConfig& cfg, const Graph& g) {
  RunMetadata meta;
  meta.dataset = cfg.dataset.is_synth ? "synthetic" : cfg.dataset.graph_dir;
  meta.graph_fingerprint = graph_fingerprint(g);
  meta.seed = cfg.seed;
  return meta;
}

std::string summary_line(const MetricsReport& r) {
  std::string s = "auroc=" + format_double(r.auroc);
  s += " f1=" + format_double(r.f1);
  s += " unfairness=" + format_double(r.unfairness_pct) + "%";
  s += " instability=" + format_double(r.instability_pct) + "%";
  s += " delta_sp=" + format_double(r.delta_sp);
  s += " delta_eo=" + format_double(r.delta_eo);
  s += " sigma_product=" + format_double(r.bound.sigma_product);
  return s;
}

// Trains one model and writes the full artifact set into `dir`.
MetricsReport run_single(const ExperimentConfig& cfg, const Graph& g,
                         const fs::path& dir) {
  fs::create_directories(dir);
  NiftyModel model(g.n_attrs(), cfg.train);
  TrainResult tr = train(model, g, cfg.train);
  MetricsReport rep = evaluate(model, g, cfg.eval);

  write_file(dir / "config.json", experiment_config_to_json(cfg));
  write_file(dir / "log.jsonl", training_log_jsonl(tr));
  save_checkpoint((dir / "checkpoint.json").string(), model);
  write_file(dir / "report.json",
             report_to_json(rep, cfg.train, cfg.eval, metadata_for(cfg, g)));
  return rep;
}

int cmd_train(const ExperimentConfig& cfg) {
  Graph g = load_dataset(cfg);
  MetricsReport rep = run_single(cfg, g, cfg.output_dir);
  std::cout << summary_line(rep) << "\n"
            << "artifacts in " << cfg.output_dir << "\n";
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  Graph g = load_dataset(cfg);
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  MetricsReport rep = evaluate(loaded.model, g, cfg.eval);
  fs::create_directories(cfg.output_dir);
  write_file(fs::path(cfg.output_dir) / "report.json",
             report_to_json(rep, cfg.train, cfg.eval, metadata_for(cfg, g)));
  std::cout << summary_line(rep) << "\n"
            << "report in " << cfg.output_dir << "\n";
  return 0;
}

// Runs jobs 0..n-1 on up to `workers` threads; returns one error string per
// job ("" = success). Job i writes only its own slot, so no locking.
template <typename Fn>
std::vector<std::string> run_jobs(std::size_t n, unsigned workers, Fn job) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n_workers =
      std::min<unsigned>(workers, static_cast<unsigned>(n));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

std::string csv_table_header() {
  std::string h = report_csv_header();
  h.pop_back();  // newline
  return h + ",status\n";
}

int cmd_sweep_lambda(const ExperimentConfig& base, std::vector<double> lambdas) {
  if (lambdas.empty()) throw ValidationError("sweep-lambda: no lambda values given");
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw ValidationError("sweep-lambda: lambda " + format_double(l) +
                            " outside [0, 1]");
    }
  }
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  Graph g = load_dataset(base);
  const fs::path out(base.output_dir);
  fs::create_directories(out);

  std::vector<std::string> rows(lambdas.size());
  auto errors = run_jobs(lambdas.size(), resolve_thread_count(0), [&](std::size_t i) {
    ExperimentConfig cfg = base;
    cfg.train.lambda = lambdas[i];
    MetricsReport rep =
        run_single(cfg, g, out / ("lambda_" + format_double(lambdas[i])));
    std::string row = report_csv_row(rep, cfg.train, cfg.seed);
    row.pop_back();
    rows[i] = row + ",ok\n";
  });

  std::string csv = csv_table_header();
  bool all_ok = true;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (errors[i].empty()) {
      csv += rows[i];
    } else {
      all_ok = false;
      std::string msg = errors[i];
      for (char& c : msg) {
        if (c == '"') c = '\'';
      }
      csv += to_string(base.train.ablation) + "," + format_double(lambdas[i]) + "," +
             std::to_string(base.seed) + ",,,,,,,,\"failed: " + msg + "\"\n";
      std::cerr << "lambda " << format_double(lambdas[i]) << " failed: " << errors[i]
                << "\n";
    }
  }
  write_file(out / "sweep.csv", csv);
  std::cout << "sweep of " << lambdas.size() << " lambda values written to "
            << (out / "sweep.csv").string() << "\n";
  return all_ok ? 0 : 1;
}

int cmd_compare(const ExperimentConfig& base) {
  const Ablation modes[] = {Ablation::full, Ablation::no_objective,
                            Ablation::no_architecture, Ablation::baseline};
  Graph g = load_dataset(base);
  const fs::path out(base.output_dir);
  fs::create_directories(out);

  std::vector<MetricsReport> reports(4);
  auto errors = run_jobs(4, resolve_thread_count(0), [&](std::size_t i) {
    ExperimentConfig cfg = base;
    cfg.train.ablation = modes[i];
    reports[i] = run_single(cfg, g, out / to_string(modes[i]));
  });

  std::string csv = csv_table_header();
  json rows = json::array();
  bool all_ok = true;
  for (std::size_t i = 0; i < 4; ++i) {
    ExperimentConfig cfg = base;
    cfg.train.ablation = modes[i];
    if (!errors[i].empty()) {
      all_ok = false;
      std::cerr << to_string(modes[i]) << " failed: " << errors[i] << "\n";
      csv += to_string(modes[i]) + ",,,,,,,,,,\"failed\"\n";
      rows.push_back({{"ablation", to_string(modes[i])}, {"error", errors[i]}});
      continue;
    }
    std::string row = report_csv_row(reports[i], cfg.train, cfg.seed);
    row.pop_back();
    csv += row + ",ok\n";
    const MetricsReport& r = reports[i];
    rows.push_back({{"ablation", to_string(modes[i])},
                    {"lambda", cfg.train.lambda},
                    {"effective_lambda", cfg.train.effective_lambda()},
                    {"lipschitz_enabled", cfg.train.lipschitz_enabled()},
                    {"seed", cfg.seed},
                    {"auroc", r.auroc},
                    {"f1", r.f1},
                    {"unfairness_pct", r.unfairness_pct},
                    {"instability_pct", r.instability_pct},
                    {"delta_sp", r.delta_sp},
                    {"delta_eo", r.delta_eo},
                    {"sigma_product", r.bound.sigma_product}});
  }
  write_file(out / "compare.csv", csv);
  json doc = {{"schema_version", 1}, {"rows", rows}};
  write_file(out / "compare.json", doc.dump(2) + "\n");
  std::cout << "ablation comparison written to " << out.string() << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair and stable graph representations"};
  app.require_subcommand(1);

  // --- build-graph ---
  auto* sc_build = app.add_subcommand(
      "build-graph", "build a similarity graph directory from a CSV table");
  std::string bg_csv, bg_meta, bg_out;
  std::uint64_t bg_seed = 0;
  sc_build->add_option("csv", bg_csv, "input CSV file")->required();
  sc_build->add_option("meta", bg_meta, "build recipe JSON")->required();
  sc_build->add_option("out", bg_out, "output graph directory")->required();
  auto* bg_seed_opt = sc_build->add_option("--seed", bg_seed, "override recipe seed");

  // --- shared run flags ---
  std::string cfg_path, out_dir, ablation_str, checkpoint_path;
  std::uint64_t seed = 0;
  double lambda = -1.0;
  bool per_node = false;
  std::vector<double> lambdas;

  auto add_common = [&](CLI::App* sc, bool with_model_flags) {
    sc->add_option("--config", cfg_path, "experiment config JSON")->required();
    sc->add_option("--out", out_dir, "output directory (overrides config)");
    auto* s = sc->add_option("--seed", seed, "master seed (overrides config)");
    CLI::Option* a = nullptr;
    CLI::Option* l = nullptr;
    if (with_model_flags) {
      a = sc->add_option("--ablation", ablation_str,
                         "full, no-objective, no-architecture or baseline");
      l = sc->add_option("--lambda", lambda, "invariance weight in [0, 1]");
    }
    auto* p = sc->add_flag("--per-node", per_node,
                           "exact per-node sensitive flips for unfairness");
    return std::tuple{s, a, l, p};
  };

  auto* sc_train = app.add_subcommand("train", "train one model and evaluate it");
  auto [train_seed, train_abl, train_lam, train_pn] = add_common(sc_train, true);

  auto* sc_eval =
      app.add_subcommand("evaluate", "evaluate a saved checkpoint on a dataset");
  auto [eval_seed, eval_abl, eval_lam, eval_pn] = add_common(sc_eval, false);
  sc_eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();

  auto* sc_sweep =
      app.add_subcommand("sweep-lambda", "train once per lambda value, emit a CSV");
  auto [sweep_seed, sweep_abl, sweep_lam, sweep_pn] = add_common(sc_sweep, true);
  sc_sweep->add_option("--lambdas", lambdas, "comma-separated lambda values")
      ->required()
      ->delimiter(',');

  auto* sc_cmp = app.add_subcommand(
      "compare", "train all four ablation modes with shared seeds");
  auto [cmp_seed, cmp_abl, cmp_lam, cmp_pn] = add_common(sc_cmp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sc_build) {
      return cmd_build_graph(bg_csv, bg_meta, bg_out,
                             bg_seed_opt->count() ? &bg_seed : nullptr);
    }

    ExperimentConfig cfg = load_experiment_config(cfg_path);
    auto finalize = [&](CLI::Option* s_opt, CLI::Option* a_opt, CLI::Option* l_opt,
                        CLI::Option* p_opt) {
      if (s_opt->count()) apply_seed(cfg, seed);
      if (a_opt && a_opt->count()) {
        cfg.train.ablation = ablation_from_string(ablation_str);
      }
      if (l_opt && l_opt->count()) {
        cfg.train.lambda = lambda;
        cfg.train.validate();
      }
      if (p_opt->count()) cfg.eval.per_node_unfairness = true;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
    };

    if (*sc_train) {
      finalize(train_seed, train_abl, train_lam, train_pn);
      return cmd_train(cfg);
    }
    if (*sc_eval) {
      finalize(eval_seed, eval_abl, eval_lam, eval_pn);
      return cmd_evaluate(cfg, checkpoint_path);
    }
    if (*sc_sweep) {
      finalize(sweep_seed, sweep_abl, sweep_lam, sweep_pn);
      return cmd_sweep_lambda(cfg, lambdas);
    }
    if (*sc_cmp) {
      finalize(cmp_seed, cmp_abl, cmp_lam, cmp_pn);
      return cmd_compare(cfg);
    }
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
