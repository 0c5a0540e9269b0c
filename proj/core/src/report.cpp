#include "fairgraph/report.hpp"

#include <nlohmann/json.hpp>

namespace fairgraph {

namespace {

using nlohmann::json;

json augment_json(const AugmentConfig& a) {
  return {{"attr_noise_prob", a.attr_noise_prob},
          {"edge_drop_prob", a.edge_drop_prob},
          {"noise_stddev", a.noise_stddev}};
}

json train_config_json(const TrainConfig& t) {
  return {{"ablation", to_string(t.ablation)},
          {"augment", augment_json(t.augment)},
          {"effective_lambda", t.effective_lambda()},
          {"encoder_layers", t.encoder_layers},
          {"epochs", t.epochs},
          {"feature_scaling", to_string(t.feature_scaling)},
          {"hidden", t.hidden},
          {"lambda", t.lambda},
          {"lipschitz_enabled", t.lipschitz_enabled()},
          {"lr", t.lr},
          {"seed", t.seed},
          {"weight_decay", t.weight_decay}};
}

// CSV cells reuse the JSON number renderer for stable shortest-round-trip
// output.
std::string num(double v) { return json(v).dump(); }

}  // namespace

std::string report_to_json(const MetricsReport& r, const TrainConfig& train_cfg,
                           const EvalConfig& eval_cfg, const RunMetadata& meta) {
  json doc;
  doc["schema_version"] = 1;
  doc["dataset"] = {{"path", meta.dataset},
                    {"graph_fingerprint", meta.graph_fingerprint},
                    {"seed", meta.seed}};
  doc["train_config"] = train_config_json(train_cfg);
  doc["eval_config"] = {{"bound_samples", eval_cfg.bound_samples},
                        {"n_trials", eval_cfg.n_trials},
                        {"noise", augment_json(eval_cfg.noise)},
                        {"per_node_unfairness", eval_cfg.per_node_unfairness},
                        {"seed", eval_cfg.seed}};
  doc["metrics"] = {{"auroc", r.auroc},
                    {"delta_eo", r.delta_eo},
                    {"delta_sp", r.delta_sp},
                    {"f1", r.f1},
                    {"instability_pct", r.instability_pct},
                    {"unfairness_pct", r.unfairness_pct}};
  doc["bound"] = {{"max_counterfactual_ratio", r.bound.max_counterfactual_ratio},
                  {"max_stability_ratio", r.bound.max_stability_ratio},
                  {"n_samples", r.bound.n_samples},
                  {"sigma_product", r.bound.sigma_product}};
  doc["counts"] = {{"group0", r.counts.group0},
                   {"group0_pos", r.counts.group0_pos},
                   {"group1", r.counts.group1},
                   {"group1_pos", r.counts.group1_pos},
                   {"n_test", r.counts.n_test},
                   {"n_test_neg", r.counts.n_test_neg},
                   {"n_test_pos", r.counts.n_test_pos}};
  return doc.dump(2) + "\n";
}

std::string training_log_jsonl(const TrainResult& result) {
  std::string out;
  for (const auto& e : result.history) {
    json line = {{"epoch", e.epoch},
                 {"loss_classification", e.l_c},
                 {"loss_invariance", e.l_s},
                 {"loss_total", e.total},
                 {"sigma_product", e.sigma_prod}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string report_csv_header() {
  return "ablation,lambda,seed,auroc,f1,unfairness_pct,instability_pct,"
         "delta_sp,delta_eo,sigma_product\n";
}

std::string report_csv_row(const MetricsReport& r, const TrainConfig& train_cfg,
                           std::uint64_t seed) {
  std::string row = to_string(train_cfg.ablation);
  row += ',';
  row += num(train_cfg.lambda);
  row += ',';
  row += std::to_string(seed);
  row += ',';
  row += num(r.auroc);
  row += ',';
  row += num(r.f1);
  row += ',';
  row += num(r.unfairness_pct);
  row += ',';
  row += num(r.instability_pct);
  row += ',';
  row += num(r.delta_sp);
  row += ',';
  row += num(r.delta_eo);
  row += ',';
  row += num(r.bound.sigma_product);
  row += '\n';
  return row;
}

}  // namespace fairgraph
