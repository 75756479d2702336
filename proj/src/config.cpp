// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/config.hpp"

#include <filesystem>
#include <fstream>

namespace ifcn {

using nlohmann::json;

json RunConfig::default_tree() {
  const ModelConfig m;
  const LossConfig l;
  const TrainConfig t;
  const DataConfig d;
  return json{
      {"model",
       {{"L", m.L},
        {"C", m.C},
        {"B", m.B},
        {"C_H", m.C_H},
        {"K", m.K},
        {"n_heads", m.n_heads},
        {"input_variant", to_string(m.input_variant)},
        {"output_variant", to_string(m.output_variant)},
        {"macaron_scale", m.macaron_scale},
        {"beta", m.beta},
        {"epsilon", m.epsilon},
        {"n_fft", m.n_fft},
        {"hop", m.hop}}},
      {"loss",
       {{"fft_sizes", l.fft_sizes}, {"weight_time", l.weight_time}, {"weight_tf", l.weight_tf}}},
      {"train",
       {{"lr", t.lr},
        {"weight_decay", t.weight_decay},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"adam_eps", t.adam_eps},
        {"grad_clip", t.grad_clip},
        {"max_epochs", t.max_epochs},
        {"segment_seconds", t.segment_seconds},
        {"batch_size", t.batch_size},
        {"seed", t.seed},
        {"val_fraction", t.val_fraction},
        {"schedule", t.schedule},
        {"warmup_steps", t.warmup_steps}}},
      {"data",
       {{"n_utts", d.n_utts},
        {"utt_seconds", d.utt_seconds},
        {"t60_min", d.t60_min},
        {"t60_max", d.t60_max},
        {"snr_db", d.snr_db},
        {"drr_db", d.drr_db},
        {"rir_seconds", d.rir_seconds},
        {"noise_kind", to_string(d.noise_kind)},
        {"rir_method", to_string(d.rir_method)},
        {"seed", d.seed},
        {"t60_grid", d.t60_grid}}}};
}

namespace {

void merge_checked(json& base, const json& user, const std::string& prefix) {
  IFCN_CHECK_CFG(user.is_object(), "config: expected an object at " +
                                       (prefix.empty() ? std::string("the top level") : prefix));
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    IFCN_CHECK_CFG(base.contains(it.key()), "config: unknown key '" + path + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), path);
    } else {
      IFCN_CHECK_CFG(!it.value().is_object(),
                     "config: '" + path + "' does not take a nested object");
      slot = it.value();
    }
  }
}

void apply_override(json& base, const std::string& kv) {
  const auto eq = kv.find('=');
  IFCN_CHECK_CFG(eq != std::string::npos && eq > 0, "config: override must be key=value: " + kv);
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // bare strings like schedule=constant
  }

  json* node = &base;
  size_t start = 0;
  for (;;) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    IFCN_CHECK_CFG(!part.empty(), "config: empty key segment in '" + key + "'");
    IFCN_CHECK_CFG(node->is_object() && node->contains(part),
                   "config: unknown key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  IFCN_CHECK_CFG(!node->is_object(), "config: '" + key + "' names a section, not a value");
  *node = value;
}

}  // namespace

RunConfig RunConfig::load(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig rc;
  rc.tree = default_tree();
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    IFCN_CHECK_CFG(f.good(), "config: cannot open " + config_path);
    json user;
    try {
      user = json::parse(f);
    } catch (const json::exception& e) {
      throw ConfigError("config: parse error in " + config_path + ": " + e.what());
    }
    merge_checked(rc.tree, user, "");
  }
  for (const std::string& kv : overrides) apply_override(rc.tree, kv);
  return rc;
}

ModelConfig RunConfig::model() const {
  const json& j = tree.at("model");
  ModelConfig c;
  try {
    c.L = j.at("L").get<int>();
    c.C = j.at("C").get<int>();
    c.B = j.at("B").get<int>();
    c.C_H = j.at("C_H").get<int>();
    c.K = j.at("K").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.input_variant = input_variant_from_string(j.at("input_variant").get<std::string>());
    c.output_variant = output_variant_from_string(j.at("output_variant").get<std::string>());
    c.macaron_scale = j.at("macaron_scale").get<double>();
    c.beta = j.at("beta").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.n_fft = j.at("n_fft").get<int>();
    c.hop = j.at("hop").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad model section: ") + e.what());
  }
  c.validate();
  return c;
}

LossConfig RunConfig::loss() const {
  const json& j = tree.at("loss");
  LossConfig c;
  try {
    c.fft_sizes = j.at("fft_sizes").get<std::vector<int>>();
    c.weight_time = j.at("weight_time").get<double>();
    c.weight_tf = j.at("weight_tf").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad loss section: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig RunConfig::train() const {
  const json& j = tree.at("train");
  TrainConfig c;
  try {
    c.lr = j.at("lr").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.grad_clip = j.at("grad_clip").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.segment_seconds = j.at("segment_seconds").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.schedule = j.at("schedule").get<std::string>();
    c.warmup_steps = j.at("warmup_steps").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad train section: ") + e.what());
  }
  return c;
}

DataConfig RunConfig::data() const {
  const json& j = tree.at("data");
  DataConfig c;
  try {
    c.n_utts = j.at("n_utts").get<int>();
    c.utt_seconds = j.at("utt_seconds").get<double>();
    c.t60_min = j.at("t60_min").get<double>();
    c.t60_max = j.at("t60_max").get<double>();
    c.snr_db = j.at("snr_db").get<double>();
    c.drr_db = j.at("drr_db").get<double>();
    c.rir_seconds = j.at("rir_seconds").get<double>();
    c.noise_kind = noise_kind_from_string(j.at("noise_kind").get<std::string>());
    c.rir_method = rir_method_from_string(j.at("rir_method").get<std::string>());
    c.seed = j.at("seed").get<uint64_t>();
    c.t60_grid = j.at("t60_grid").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad data section: ") + e.what());
  }
  c.validate();
  return c;
}

void RunConfig::set_seed(uint64_t seed) {
  tree["train"]["seed"] = seed;
  tree["data"]["seed"] = seed;
}

std::string RunConfig::dump() const { return tree.dump(2) + "\n"; }

void RunConfig::echo(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / "resolved.json").string();
  std::ofstream f(path, std::ios::trunc);
  IFCN_CHECK_CFG(f.good(), "config: cannot write " + path);
  f << dump();
  IFCN_CHECK_CFG(f.good(), "config: write failed: " + path);
}

}  // namespace ifcn
