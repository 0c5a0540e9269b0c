#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "fairgraph/graph.hpp"
#include "fairgraph/graph_io.hpp"
#include "fairgraph/similarity.hpp"
#include "fairgraph/table.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairgraph;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
  const char* bin = std::getenv("FAIRGRAPH_CLI");
  REQUIRE_MESSAGE(bin != nullptr, "FAIRGRAPH_CLI must point at the binary");
  const std::string cmd = "\"" + std::string(bin) + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  return r;
}

const char* kToyCsv =
    "age,income,gender,approved\n"
    "25,40,male,yes\n"
    "32,55,female,no\n"
    "47,80,male,yes\n"
    "51,75,female,yes\n"
    "29,35,male,no\n"
    "38,60,female,yes\n"
    "44,90,male,yes\n"
    "23,30,female,no\n";

const char* kToyMeta = R"({
  "sensitive": "gender",
  "label": "approved",
  "sensitive_map": {"male": 0, "female": 1},
  "label_map": {"no": 0, "yes": 1},
  "threshold_fraction": 0.5,
  "standardize": true,
  "seed": 3
})";

// Small synthetic experiment; every run-shaped test reuses it.
const char* kSynthCfg = R"({
  "seed": 5,
  "dataset": {
    "synth": {"n_nodes": 80, "n_attrs": 5, "homophily": 0.8, "bias": 0.8,
              "expected_degree": 8.0}
  },
  "train": {"lambda": 0.6, "epochs": 15, "hidden": 8},
  "eval": {"n_trials": 1, "bound_samples": 10}
})";

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("help exits cleanly and parse failures exit 2") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("--help").output.find("build-graph") != std::string::npos);
  CHECK(run_cli("train --help").exit_code == 0);

  CHECK(run_cli("").exit_code == 2);             // a subcommand is required
  CHECK(run_cli("frobnicate").exit_code == 2);   // unknown subcommand
  CHECK(run_cli("train").exit_code == 2);        // missing --config
  CHECK(run_cli("evaluate --config x.json").exit_code == 2);  // missing --checkpoint
}

TEST_CASE("build-graph writes a loadable directory that matches the library") {
  testutil::TempDir tmp("cli_build");
  const fs::path csv = tmp.file("toy.csv");
  const fs::path meta = tmp.file("meta.json");
  testutil::spit(csv.string(), kToyCsv);
  testutil::spit(meta.string(), kToyMeta);

  const fs::path out1 = tmp.path() / "g1";
  RunResult r = run_cli("build-graph " + q(csv) + " " + q(meta) + " " + q(out1));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("nodes: 8") != std::string::npos);
  CHECK(fs::exists(out1 / "edges.tsv"));
  CHECK(fs::exists(out1 / "attrs.csv"));
  CHECK(fs::exists(out1 / "meta.json"));

  // The directory must hold exactly the graph the library builds from the
  // same recipe.
  TableSchema schema;
  schema.sensitive = "gender";
  schema.label = "approved";
  schema.sensitive_map = {{"male", 0}, {"female", 1}};
  schema.label_map = {{"no", 0}, {"yes", 1}};
  AttributeTable table = load_table(csv.string(), schema);
  SimilarityConfig sim;
  sim.threshold_fraction = 0.5;
  sim.standardize = true;
  sim.seed = 3;
  Graph expect = build_similarity_graph(table, sim);
  Graph got = load_graph(out1.string()).first;
  CHECK(graph_fingerprint(got) == graph_fingerprint(expect));

  // A second run produces byte-identical files.
  const fs::path out2 = tmp.path() / "g2";
  CHECK(run_cli("build-graph " + q(csv) + " " + q(meta) + " " + q(out2)).exit_code == 0);
  CHECK(testutil::slurp((out1 / "edges.tsv").string()) ==
        testutil::slurp((out2 / "edges.tsv").string()));
  CHECK(testutil::slurp((out1 / "attrs.csv").string()) ==
        testutil::slurp((out2 / "attrs.csv").string()));

  // A different seed changes only the split, and the tool accepts the
  // override flag.
  const fs::path out3 = tmp.path() / "g3";
  CHECK(run_cli("build-graph " + q(csv) + " " + q(meta) + " " + q(out3) +
                " --seed 11")
            .exit_code == 0);
  Graph reseeded = load_graph(out3.string()).first;
  CHECK(graph_fingerprint(reseeded) != graph_fingerprint(expect));
}

TEST_CASE("build-graph rejects broken inputs with exit code 2") {
  testutil::TempDir tmp("cli_badbuild");
  const fs::path csv = tmp.file("toy.csv");
  testutil::spit(csv.string(), kToyCsv);

  RunResult missing = run_cli("build-graph " + q(csv) + " " +
                              q(tmp.path() / "absent.json") + " " +
                              q(tmp.path() / "out"));
  CHECK(missing.exit_code == 2);

  const fs::path bad = tmp.file("bad.json");
  testutil::spit(bad.string(), R"({"sensitive": "gender", "label": "approved",
    "sensitive_map": {"male":0,"female":1}, "label_map": {"no":0,"yes":1},
    "typo_key": 1})");
  RunResult typo =
      run_cli("build-graph " + q(csv) + " " + q(bad) + " " + q(tmp.path() / "out"));
  CHECK(typo.exit_code == 2);
  CHECK(typo.output.find("unknown key") != std::string::npos);
}

TEST_CASE("train writes the artifact set and reruns byte-identically") {
  testutil::TempDir tmp("cli_train");
  const fs::path cfg = tmp.file("cfg.json");
  testutil::spit(cfg.string(), kSynthCfg);

  const fs::path run1 = tmp.path() / "run1";
  RunResult r = run_cli("train --config " + q(cfg) + " --out " + q(run1));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("auroc=") != std::string::npos);
  CHECK(r.output.find("sigma_product=") != std::string::npos);

  for (const char* name : {"config.json", "log.jsonl", "checkpoint.json", "report.json"}) {
    CHECK_MESSAGE(fs::exists(run1 / name), name);
  }

  json rep = json::parse(testutil::slurp((run1 / "report.json").string()));
  CHECK(rep["schema_version"] == 1);
  CHECK(rep["train_config"]["lambda"] == 0.6);
  CHECK(rep["train_config"]["effective_lambda"] == 0.6);
  CHECK(rep["train_config"]["lipschitz_enabled"] == true);
  CHECK(rep["train_config"]["epochs"] == 15);
  for (const char* key : {"auroc", "f1", "unfairness_pct", "instability_pct",
                          "delta_sp", "delta_eo"}) {
    CHECK_MESSAGE(rep["metrics"].contains(key), key);
  }
  CHECK(rep["bound"]["n_samples"] == 10);
  CHECK(rep["dataset"]["path"] == "synthetic");
  CHECK(rep["dataset"]["seed"] == 5);

  const std::string log = testutil::slurp((run1 / "log.jsonl").string());
  CHECK(std::count(log.begin(), log.end(), '\n') == 15);

  const fs::path run2 = tmp.path() / "run2";
  CHECK(run_cli("train --config " + q(cfg) + " --out " + q(run2)).exit_code == 0);
  CHECK(testutil::slurp((run1 / "report.json").string()) ==
        testutil::slurp((run2 / "report.json").string()));
  CHECK(testutil::slurp((run1 / "checkpoint.json").string()) ==
        testutil::slurp((run2 / "checkpoint.json").string()));

  // evaluate on the saved checkpoint reproduces the training-run report.
  const fs::path ev = tmp.path() / "eval1";
  RunResult er = run_cli("evaluate --config " + q(cfg) + " --checkpoint " +
                         q(run1 / "checkpoint.json") + " --out " + q(ev));
  CHECK(er.exit_code == 0);
  CHECK(testutil::slurp((ev / "report.json").string()) ==
        testutil::slurp((run1 / "report.json").string()));

  // --seed overrides everything derived from the master seed.
  const fs::path run3 = tmp.path() / "run3";
  CHECK(run_cli("train --config " + q(cfg) + " --out " + q(run3) + " --seed 9")
            .exit_code == 0);
  json rep3 = json::parse(testutil::slurp((run3 / "report.json").string()));
  CHECK(rep3["dataset"]["seed"] == 9);
  CHECK(rep3["train_config"]["seed"] == 9);
  CHECK(rep3["metrics"] != rep["metrics"]);

  // --per-node is recorded in the evaluation echo.
  const fs::path run4 = tmp.path() / "run4";
  CHECK(run_cli("train --config " + q(cfg) + " --out " + q(run4) + " --per-node")
            .exit_code == 0);
  json rep4 = json::parse(testutil::slurp((run4 / "report.json").string()));
  CHECK(rep4["eval_config"]["per_node_unfairness"] == true);
}

TEST_CASE("train flags switch the ablation and reject bad values") {
  testutil::TempDir tmp("cli_flags");
  const fs::path cfg = tmp.file("cfg.json");
  testutil::spit(cfg.string(), kSynthCfg);

  const fs::path runb = tmp.path() / "runb";
  RunResult r = run_cli("train --config " + q(cfg) + " --out " + q(runb) +
                        " --ablation baseline");
  CHECK(r.exit_code == 0);
  json rep = json::parse(testutil::slurp((runb / "report.json").string()));
  CHECK(rep["train_config"]["ablation"] == "baseline");
  CHECK(rep["train_config"]["effective_lambda"] == 0.0);
  CHECK(rep["train_config"]["lipschitz_enabled"] == false);

  CHECK(run_cli("train --config " + q(cfg) + " --out " + q(tmp.path() / "x") +
                " --ablation bogus")
            .exit_code == 2);
  CHECK(run_cli("train --config " + q(cfg) + " --out " + q(tmp.path() / "y") +
                " --lambda 2")
            .exit_code == 2);
  CHECK(run_cli("train --config " + q(tmp.path() / "absent.json"))
            .exit_code == 2);

  const fs::path badcfg = tmp.file("bad.json");
  testutil::spit(badcfg.string(),
                 R"({"dataset": {"synth": {"n_nodes": 40}}, "train": {"epochz": 3}})");
  RunResult typo = run_cli("train --config " + q(badcfg));
  CHECK(typo.exit_code == 2);
  CHECK(typo.output.find("epochz") != std::string::npos);

  const fs::path nods = tmp.file("nods.json");
  testutil::spit(nods.string(), R"({"train": {"epochs": 3}})");
  RunResult missing_ds = run_cli("train --config " + q(nods));
  CHECK(missing_ds.exit_code == 2);
  CHECK(missing_ds.output.find("dataset") != std::string::npos);
}

TEST_CASE("sweep-lambda emits ordered rows and per-value run directories") {
  testutil::TempDir tmp("cli_sweep");
  const fs::path cfg = tmp.file("cfg.json");
  testutil::spit(cfg.string(), kSynthCfg);

  const fs::path out = tmp.path() / "sweep";
  RunResult r = run_cli("sweep-lambda --config " + q(cfg) + " --out " + q(out) +
                        " --lambdas 0.5,0");
  CHECK(r.exit_code == 0);

  const std::string csv = testutil::slurp((out / "sweep.csv").string());
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    const std::size_t nl = csv.find('\n', start);
    lines.push_back(csv.substr(start, nl - start));
    start = nl + 1;
  }
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "ablation,lambda,seed,auroc,f1,unfairness_pct,instability_pct,"
        "delta_sp,delta_eo,sigma_product,status");
  // CSV numbers are JSON renderings, so the lambda column reads 0.0 and 0.5.
  CHECK(lines[1].substr(0, 9) == "full,0.0,");
  CHECK(lines[2].substr(0, 9) == "full,0.5,");
  CHECK(lines[1].substr(lines[1].size() - 3) == ",ok");
  CHECK(lines[2].substr(lines[2].size() - 3) == ",ok");
  CHECK(fs::exists(out / "lambda_0" / "report.json"));
  CHECK(fs::exists(out / "lambda_0.5" / "report.json"));

  CHECK(run_cli("sweep-lambda --config " + q(cfg) + " --out " + q(out) +
                " --lambdas 0.2,1.5")
            .exit_code == 2);
}

TEST_CASE("compare trains the four modes in a fixed order") {
  testutil::TempDir tmp("cli_compare");
  const fs::path cfg = tmp.file("cfg.json");
  testutil::spit(cfg.string(), kSynthCfg);

  const fs::path out = tmp.path() / "cmp";
  RunResult r = run_cli("compare --config " + q(cfg) + " --out " + q(out));
  CHECK(r.exit_code == 0);

  const std::string csv = testutil::slurp((out / "compare.csv").string());
  CHECK(csv.find("\nfull,") != std::string::npos);
  const std::size_t p_full = csv.find("\nfull,");
  const std::size_t p_noobj = csv.find("\nno-objective,");
  const std::size_t p_noarch = csv.find("\nno-architecture,");
  const std::size_t p_base = csv.find("\nbaseline,");
  REQUIRE(p_base != std::string::npos);
  CHECK(p_full < p_noobj);
  CHECK(p_noobj < p_noarch);
  CHECK(p_noarch < p_base);

  json doc = json::parse(testutil::slurp((out / "compare.json").string()));
  CHECK(doc["schema_version"] == 1);
  REQUIRE(doc["rows"].size() == 4);
  CHECK(doc["rows"][0]["ablation"] == "full");
  CHECK(doc["rows"][1]["ablation"] == "no-objective");
  CHECK(doc["rows"][1]["effective_lambda"] == 0.0);
  CHECK(doc["rows"][1]["lipschitz_enabled"] == true);
  CHECK(doc["rows"][2]["lipschitz_enabled"] == false);
  CHECK(doc["rows"][3]["ablation"] == "baseline");
  CHECK(doc["rows"][3]["lipschitz_enabled"] == false);
  for (int i = 0; i < 4; ++i) {
    CHECK(doc["rows"][i].contains("unfairness_pct"));
    CHECK(fs::exists(out / doc["rows"][i]["ablation"].get<std::string>() /
                     "report.json"));
  }
}
