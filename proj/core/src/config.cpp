#include "fairgraph/config.hpp"

#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/errors.hpp"

namespace fairgraph {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& where, const std::string& origin) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) {
      if (key == k) ok = true;
    }
    if (!ok) {
      throw IngestError(origin + ": unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end()) out = it->get<T>();
}

void read_augment(const json& j, const std::string& where, const std::string& origin,
                  AugmentConfig& out) {
  check_keys(j, {"attr_noise_prob", "edge_drop_prob", "noise_stddev"}, where, origin);
  read(j, "attr_noise_prob", out.attr_noise_prob);
  read(j, "edge_drop_prob", out.edge_drop_prob);
  read(j, "noise_stddev", out.noise_stddev);
}

json augment_to_json(const AugmentConfig& a) {
  return {{"attr_noise_prob", a.attr_noise_prob},
          {"edge_drop_prob", a.edge_drop_prob},
          {"noise_stddev", a.noise_stddev}};
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IngestError(origin + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw IngestError(origin + ": top level must be an object");
  check_keys(doc, {"dataset", "train", "eval", "seed", "output_dir"}, "the top level",
             origin);

  ExperimentConfig cfg;
  read(doc, "seed", cfg.seed);
  read(doc, "output_dir", cfg.output_dir);

  auto ds = doc.find("dataset");
  if (ds == doc.end()) throw IngestError(origin + ": missing 'dataset'");
  check_keys(*ds, {"graph_dir", "synth"}, "dataset", origin);
  const bool has_dir = ds->contains("graph_dir");
  const bool has_synth = ds->contains("synth");
  if (has_dir == has_synth) {
    throw IngestError(origin +
                      ": dataset needs exactly one of 'graph_dir' or 'synth'");
  }
  if (has_dir) {
    cfg.dataset.graph_dir = ds->at("graph_dir").get<std::string>();
  } else {
    cfg.dataset.is_synth = true;
    const json& sy = ds->at("synth");
    check_keys(sy,
               {"n_nodes", "n_attrs", "homophily", "bias", "expected_degree",
                "cluster_separation", "attr_scale", "split"},
               "dataset.synth", origin);
    read(sy, "n_nodes", cfg.dataset.synth.n_nodes);
    read(sy, "n_attrs", cfg.dataset.synth.n_attrs);
    read(sy, "homophily", cfg.dataset.synth.homophily);
    read(sy, "bias", cfg.dataset.synth.bias);
    read(sy, "expected_degree", cfg.dataset.synth.expected_degree);
    read(sy, "cluster_separation", cfg.dataset.synth.cluster_separation);
    read(sy, "attr_scale", cfg.dataset.synth.attr_scale);
    if (sy.contains("split")) {
      const json& sp = sy.at("split");
      check_keys(sp, {"train", "val", "test"}, "dataset.synth.split", origin);
      read(sp, "train", cfg.dataset.synth.split.train);
      read(sp, "val", cfg.dataset.synth.split.val);
      read(sp, "test", cfg.dataset.synth.split.test);
    }
  }

  if (auto tr = doc.find("train"); tr != doc.end()) {
    check_keys(*tr,
               {"lambda", "epochs", "lr", "weight_decay", "hidden", "encoder_layers",
                "ablation", "feature_scaling", "augment"},
               "train", origin);
    read(*tr, "lambda", cfg.train.lambda);
    read(*tr, "epochs", cfg.train.epochs);
    read(*tr, "lr", cfg.train.lr);
    read(*tr, "weight_decay", cfg.train.weight_decay);
    read(*tr, "hidden", cfg.train.hidden);
    read(*tr, "encoder_layers", cfg.train.encoder_layers);
    if (tr->contains("ablation")) {
      cfg.train.ablation = ablation_from_string(tr->at("ablation").get<std::string>());
    }
    if (tr->contains("feature_scaling")) {
      cfg.train.feature_scaling =
          feature_scaling_from_string(tr->at("feature_scaling").get<std::string>());
    }
    if (tr->contains("augment")) {
      read_augment(tr->at("augment"), "train.augment", origin, cfg.train.augment);
    }
  }

  // The instability noise law mirrors the training augmentation unless the
  // config overrides it.
  cfg.eval.noise = cfg.train.augment;
  if (auto ev = doc.find("eval"); ev != doc.end()) {
    check_keys(*ev, {"n_trials", "bound_samples", "per_node_unfairness", "noise"},
               "eval", origin);
    read(*ev, "n_trials", cfg.eval.n_trials);
    read(*ev, "bound_samples", cfg.eval.bound_samples);
    read(*ev, "per_node_unfairness", cfg.eval.per_node_unfairness);
    if (ev->contains("noise")) {
      read_augment(ev->at("noise"), "eval.noise", origin, cfg.eval.noise);
    }
  }

  // One master seed feeds every stream.
  cfg.train.seed = cfg.seed;
  cfg.eval.seed = cfg.seed;
  cfg.dataset.synth.seed = cfg.seed;

  cfg.train.validate();
  if (cfg.eval.n_trials < 1) {
    throw ValidationError(origin + ": eval.n_trials must be >= 1");
  }
  if (cfg.eval.bound_samples < 1) {
    throw ValidationError(origin + ": eval.bound_samples must be >= 1");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_experiment_config(text, path);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json doc;
  if (cfg.dataset.is_synth) {
    const SynthConfig& sy = cfg.dataset.synth;
    doc["dataset"] = {{"synth",
                       {{"n_nodes", sy.n_nodes},
                        {"n_attrs", sy.n_attrs},
                        {"homophily", sy.homophily},
                        {"bias", sy.bias},
                        {"expected_degree", sy.expected_degree},
                        {"cluster_separation", sy.cluster_separation},
                        {"attr_scale", sy.attr_scale},
                        {"split",
                         {{"train", sy.split.train},
                          {"val", sy.split.val},
                          {"test", sy.split.test}}}}}};
  } else {
    doc["dataset"] = {{"graph_dir", cfg.dataset.graph_dir}};
  }
  doc["train"] = {{"lambda", cfg.train.lambda},
                  {"epochs", cfg.train.epochs},
                  {"lr", cfg.train.lr},
                  {"weight_decay", cfg.train.weight_decay},
                  {"hidden", cfg.train.hidden},
                  {"encoder_layers", cfg.train.encoder_layers},
                  {"ablation", to_string(cfg.train.ablation)},
                  {"feature_scaling", to_string(cfg.train.feature_scaling)},
                  {"augment", augment_to_json(cfg.train.augment)}};
  doc["eval"] = {{"n_trials", cfg.eval.n_trials},
                 {"bound_samples", cfg.eval.bound_samples},
                 {"per_node_unfairness", cfg.eval.per_node_unfairness},
                 {"noise", augment_to_json(cfg.eval.noise)}};
  doc["seed"] = cfg.seed;
  doc["output_dir"] = cfg.output_dir;
  return doc.dump(2) + "\n";
}

}  // namespace fairgraph
