#include "fairgraph/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fairgraph/errors.hpp"

namespace fairgraph {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data")) {
    throw IngestError("checkpoint: " + what + " is not a matrix object");
  }
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto& data = j.at("data");
  if (!data.is_array() || data.size() != rows * cols) {
    throw IngestError("checkpoint: " + what + " data length does not match shape");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = data[i].get<double>();
  return m;
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw IngestError("checkpoint: missing key '" + std::string(key) + "' in " + where);
  }
  return *it;
}

}  // namespace

void save_checkpoint(const std::string& path, NiftyModel& model,
                     const Adam* optimizer) {
  json doc;
  doc["format"] = "fairgraph-checkpoint";
  doc["version"] = 1;
  doc["arch"] = {{"in_dim", model.in_dim()},
                 {"hidden", model.hidden()},
                 {"encoder_layers", model.n_layers()},
                 {"lipschitz", model.lipschitz_enabled()}};

  const FeatureScaler& sc = model.scaler();
  doc["scaler"] = {{"kind", to_string(sc.kind())},
                   {"sensitive_idx", sc.sensitive_idx()},
                   {"col_min", sc.col_min()},
                   {"col_max", sc.col_max()}};

  auto params = model.parameters();
  auto names = model.parameter_names();
  json pj;
  for (std::size_t i = 0; i < params.size(); ++i) {
    pj[names[i]] = matrix_json(params[i].value());
  }
  doc["params"] = std::move(pj);

  const auto& bn = model.proj_bn();
  doc["batchnorm"] = {{"running_mean", matrix_json(bn.running_mean)},
                      {"running_var", matrix_json(bn.running_var)},
                      {"momentum", bn.momentum},
                      {"eps", bn.eps}};

  if (optimizer) {
    json mj, vj;
    for (std::size_t i = 0; i < optimizer->size(); ++i) {
      mj[names[i]] = matrix_json(optimizer->m(i));
      vj[names[i]] = matrix_json(optimizer->v(i));
    }
    doc["adam"] = {{"t", optimizer->t()}, {"m", std::move(mj)}, {"v", std::move(vj)}};
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("checkpoint: cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IngestError("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("checkpoint: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IngestError("checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }

  if (require(doc, "format", "document").get<std::string>() != "fairgraph-checkpoint") {
    throw IngestError("checkpoint: '" + path + "' has the wrong format tag");
  }
  if (require(doc, "version", "document").get<int>() != 1) {
    throw IngestError("checkpoint: unsupported version in '" + path + "'");
  }

  const json& arch = require(doc, "arch", "document");
  TrainConfig cfg;
  cfg.hidden = require(arch, "hidden", "arch").get<std::size_t>();
  cfg.encoder_layers = require(arch, "encoder_layers", "arch").get<std::size_t>();
  cfg.ablation = require(arch, "lipschitz", "arch").get<bool>() ? Ablation::full
                                                                : Ablation::baseline;
  const auto in_dim = require(arch, "in_dim", "arch").get<std::size_t>();

  LoadedCheckpoint loaded{NiftyModel(in_dim, cfg), false, 0, {}, {}};
  NiftyModel& model = loaded.model;

  const json& sj = require(doc, "scaler", "document");
  model.scaler() = FeatureScaler::restore(
      feature_scaling_from_string(require(sj, "kind", "scaler").get<std::string>()),
      require(sj, "sensitive_idx", "scaler").get<std::size_t>(),
      require(sj, "col_min", "scaler").get<std::vector<double>>(),
      require(sj, "col_max", "scaler").get<std::vector<double>>());
  if (model.scaler().width() != in_dim) {
    throw IngestError("checkpoint: scaler width does not match in_dim");
  }

  const json& pj = require(doc, "params", "document");
  auto params = model.parameters();
  auto names = model.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix m = matrix_from_json(require(pj, names[i].c_str(), "params"), names[i]);
    if (!m.same_shape(params[i].value())) {
      throw IngestError("checkpoint: parameter '" + names[i] + "' has shape " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", expected " + std::to_string(params[i].value().rows()) + "x" +
                        std::to_string(params[i].value().cols()));
    }
    params[i].value() = std::move(m);
  }

  const json& bj = require(doc, "batchnorm", "document");
  auto& bn = model.proj_bn();
  Matrix rm = matrix_from_json(require(bj, "running_mean", "batchnorm"), "running_mean");
  Matrix rv = matrix_from_json(require(bj, "running_var", "batchnorm"), "running_var");
  if (!rm.same_shape(bn.running_mean) || !rv.same_shape(bn.running_var)) {
    throw IngestError("checkpoint: batchnorm statistics have the wrong shape");
  }
  bn.running_mean = std::move(rm);
  bn.running_var = std::move(rv);
  bn.momentum = require(bj, "momentum", "batchnorm").get<double>();
  bn.eps = require(bj, "eps", "batchnorm").get<double>();
  model.set_training(false);

  if (doc.contains("adam")) {
    const json& aj = doc["adam"];
    loaded.has_optimizer = true;
    loaded.adam_t = require(aj, "t", "adam").get<std::int64_t>();
    const json& mj = require(aj, "m", "adam");
    const json& vj = require(aj, "v", "adam");
    for (std::size_t i = 0; i < names.size(); ++i) {
      loaded.adam_m.push_back(
          matrix_from_json(require(mj, names[i].c_str(), "adam.m"), names[i]));
      loaded.adam_v.push_back(
          matrix_from_json(require(vj, names[i].c_str(), "adam.v"), names[i]));
    }
  }
  return loaded;
}

}  // namespace fairgraph
