// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/model.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

#include "ifcorrnet/rng.hpp"

namespace ifcn {

using nlohmann::json;

std::string to_string(InputVariant v) {
  return v == InputVariant::kIfCorr ? "if-corr" : "sf-raw";
}

std::string to_string(OutputVariant v) {
  switch (v) {
    case OutputVariant::kMfFilter: return "mf-filter";
    case OutputVariant::kSfMask: return "sf-mask";
    default: return "mapping";
  }
}

InputVariant input_variant_from_string(const std::string& s) {
  if (s == "if-corr") return InputVariant::kIfCorr;
  if (s == "sf-raw") return InputVariant::kSfRaw;
  throw ConfigError("unknown input variant: " + s);
}

OutputVariant output_variant_from_string(const std::string& s) {
  if (s == "mf-filter") return OutputVariant::kMfFilter;
  if (s == "sf-mask") return OutputVariant::kSfMask;
  if (s == "mapping") return OutputVariant::kMapping;
  throw ConfigError("unknown output variant: " + s);
}

void ModelConfig::validate() const {
  IFCN_CHECK_CFG(L >= 0, "model: L must be >= 0");
  IFCN_CHECK_CFG(C > 0 && B >= 1 && C_H > 0, "model: C, B, C_H must be positive");
  IFCN_CHECK_CFG(K > 0 && K % 2 == 1, "model: K must be odd and positive");
  IFCN_CHECK_CFG(n_heads >= 1 && C % n_heads == 0,
                 "model: C must be divisible by n_heads");
  IFCN_CHECK_CFG((C / n_heads) % 2 == 0,
                 "model: head dimension must be even for the rotary encoding");
  IFCN_CHECK_CFG(std::isfinite(macaron_scale), "model: macaron_scale must be finite");
  IFCN_CHECK_CFG(beta >= 0.0 && beta <= 1.0, "model: beta must lie in [0,1]");
  IFCN_CHECK_CFG(epsilon > 0.0, "model: epsilon must be positive");
  IFCN_CHECK_CFG(n_fft > 0 && n_fft % 2 == 0 && hop > 0 && n_fft % hop == 0,
                 "model: invalid STFT parameters");
  const bool pair_ok =
      (input_variant == InputVariant::kIfCorr && output_variant == OutputVariant::kMfFilter) ||
      (input_variant == InputVariant::kSfRaw);
  IFCN_CHECK_CFG(pair_ok,
                 "model: the correlation input pairs only with the multi-frame filter output");
}

void stack_to_tensors(const MultiFrameStack& s, Tensor* re, Tensor* im) {
  const int64_t taps = s.taps();
  *re = Tensor({s.T, s.F, taps});
  *im = Tensor({s.T, s.F, taps});
  for (size_t i = 0; i < s.v.size(); ++i) {
    re->data[i] = s.v[i].real();
    im->data[i] = s.v[i].imag();
  }
}

namespace {

Param make_param(const std::string& name, std::vector<int64_t> shape) {
  return Param(name, Tensor(std::move(shape)));
}

BlockParams make_block(const std::string& prefix, const ModelConfig& c) {
  const int64_t C = c.C, CH = c.C_H, K = c.K;
  BlockParams b;
  auto ln = [&](const std::string& n) {
    return LayerNormParams{make_param(prefix + n + ".gamma", {C}),
                           make_param(prefix + n + ".beta", {C})};
  };
  b.ln1 = ln("ln1");
  b.ln2 = ln("ln2");
  b.ln3 = ln("ln3");
  b.ln4 = ln("ln4");
  auto ffn = [&](const std::string& n) {
    return ConvFfnParams{
        ConvParams{make_param(prefix + n + ".conv1.w", {2 * CH, C, K}),
                   make_param(prefix + n + ".conv1.b", {2 * CH})},
        ConvParams{make_param(prefix + n + ".conv2.w", {C, CH, K}),
                   make_param(prefix + n + ".conv2.b", {C})}};
  };
  b.ffn1 = ffn("ffn1");
  b.ffn2 = ffn("ffn2");
  auto proj = [&](const std::string& n) {
    return ConvParams{make_param(prefix + "attn." + n + ".w", {C, C}),
                      make_param(prefix + "attn." + n + ".b", {C})};
  };
  b.attn = AttentionParams{proj("q"), proj("k"), proj("v"), proj("o")};
  return b;
}

}  // namespace

Model::Model(ModelConfig c) : cfg(c) {
  cfg.validate();
  const int64_t C = cfg.C;
  const int64_t Cin = cfg.input_channels();
  const int64_t Cho = cfg.output_channels();
  in1 = ConvParams{make_param("input.conv1.w", {4 * C, Cin, 1, 1}),
                   make_param("input.conv1.b", {4 * C})};
  in2 = ConvParams{make_param("input.conv2.w", {C, 2 * C, 3, 3}),
                   make_param("input.conv2.b", {C})};
  in_ln = LayerNormParams{make_param("input.ln.gamma", {C}), make_param("input.ln.beta", {C})};
  blocks.reserve(static_cast<size_t>(2 * cfg.B));
  for (int i = 0; i < 2 * cfg.B; ++i) {
    const char* kind = (i % 2 == 0) ? "freq" : "time";
    std::string prefix = "block" + std::to_string(i / 2) + "." + kind + ".";
    blocks.push_back(make_block(prefix, cfg));
  }
  head = ConvParams{make_param("head.w", {Cho, C, 1, 1}), make_param("head.b", {Cho})};
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  auto push = [&](Param& p) { out.push_back(&p); };
  push(in1.w);
  push(in1.b);
  push(in2.w);
  push(in2.b);
  push(in_ln.gamma);
  push(in_ln.beta);
  for (BlockParams& b : blocks) {
    push(b.ln1.gamma);
    push(b.ln1.beta);
    push(b.ffn1.conv1.w);
    push(b.ffn1.conv1.b);
    push(b.ffn1.conv2.w);
    push(b.ffn1.conv2.b);
    push(b.ln2.gamma);
    push(b.ln2.beta);
    push(b.attn.q.w);
    push(b.attn.q.b);
    push(b.attn.k.w);
    push(b.attn.k.b);
    push(b.attn.v.w);
    push(b.attn.v.b);
    push(b.attn.o.w);
    push(b.attn.o.b);
    push(b.ln3.gamma);
    push(b.ln3.beta);
    push(b.ffn2.conv1.w);
    push(b.ffn2.conv1.b);
    push(b.ffn2.conv2.w);
    push(b.ffn2.conv2.b);
    push(b.ln4.gamma);
    push(b.ln4.beta);
  }
  push(head.w);
  push(head.b);
  return out;
}

int64_t Model::parameter_count() {
  int64_t n = 0;
  for (Param* p : params())
    if (p->trainable) n += p->value.numel();
  return n;
}

int64_t Model::expected_parameter_count(const ModelConfig& c) {
  const int64_t C = c.C, CH = c.C_H, K = c.K;
  const int64_t Cin = c.input_channels();
  const int64_t Cho = c.output_channels();
  const int64_t input_layer = (4 * C * Cin + 4 * C) + (C * 2 * C * 9 + C) + 2 * C;
  const int64_t ffn = (2 * CH * C * K + 2 * CH) + (C * CH * K + C);
  const int64_t attn = 4 * (C * C + C);
  const int64_t block = 4 * (2 * C) + 2 * ffn + attn;
  const int64_t head = Cho * C + Cho;
  return input_layer + 2 * c.B * block + head;
}

void Model::init_params(uint64_t seed) {
  Rng rng(seed);
  for (Param* p : params()) {
    const std::string& n = p->name;
    const bool is_weight = n.size() >= 2 && n.compare(n.size() - 2, 2, ".w") == 0;
    const bool is_gamma = n.size() >= 6 && n.compare(n.size() - 6, 6, ".gamma") == 0;
    const bool is_head = n.rfind("head.", 0) == 0;
    if (is_head) {
      std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    } else if (is_weight) {
      for (double& v : p->value.data) v = rng.truncated_normal(0.02);
    } else if (is_gamma) {
      std::fill(p->value.data.begin(), p->value.data.end(), 1.0);
    } else {
      std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    }
    p->zero_grad();
  }
}

NetworkInput Model::featurize(const ComplexSpectrogram& X) const {
  if (cfg.input_variant == InputVariant::kSfRaw) return raw_input(X);
  MultiFrameStack st = build_stack(X, cfg.L);
  CorrelationTensor Z = correlate(st);
  phat_beta_weight(Z, cfg.beta, cfg.epsilon);
  return flatten_input(Z);
}

namespace {

constexpr char kMagic[4] = {'I', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

json config_to_json(const ModelConfig& c) {
  return json{{"L", c.L},
              {"C", c.C},
              {"B", c.B},
              {"C_H", c.C_H},
              {"K", c.K},
              {"n_heads", c.n_heads},
              {"input_variant", to_string(c.input_variant)},
              {"output_variant", to_string(c.output_variant)},
              {"macaron_scale", c.macaron_scale},
              {"beta", c.beta},
              {"epsilon", c.epsilon},
              {"n_fft", c.n_fft},
              {"hop", c.hop}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
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
  return c;
}

}  // namespace

void Model::save_checkpoint(const std::string& path) {
  json tensors = json::array();
  for (Param* p : params()) {
    tensors.push_back(json{{"name", p->name}, {"shape", p->value.shape}});
  }
  json header{{"format", "ifcorrnet-checkpoint"},
              {"config", config_to_json(cfg)},
              {"flatten_order", kFlattenOrderDescriptor},
              {"tensors", tensors}};
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  IFCN_CHECK_DATA(f.good(), "cannot open checkpoint for writing: " + path);
  f.write(kMagic, 4);
  uint32_t ver = kVersion;
  f.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (Param* p : params()) {
    f.write(reinterpret_cast<const char*>(p->value.data.data()),
            static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
  }
  IFCN_CHECK_DATA(f.good(), "checkpoint write failed: " + path);
}

Model Model::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  IFCN_CHECK_DATA(f.good(), "cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  IFCN_CHECK_DATA(f.good() && std::memcmp(magic, kMagic, 4) == 0,
                  "not a checkpoint file: " + path);
  uint32_t ver = 0;
  f.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  IFCN_CHECK_DATA(ver == kVersion, "unsupported checkpoint version in " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  IFCN_CHECK_DATA(f.good() && hlen > 0 && hlen < (1ULL << 30), "corrupt checkpoint header");
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  IFCN_CHECK_DATA(f.good(), "truncated checkpoint header");

  json header = json::parse(hs);
  Model m(config_from_json(header.at("config")));
  const json& tensors = header.at("tensors");
  std::vector<Param*> ps = m.params();
  IFCN_CHECK_DATA(tensors.size() == ps.size(), "checkpoint tensor count mismatch");
  for (size_t i = 0; i < ps.size(); ++i) {
    const json& t = tensors.at(i);
    IFCN_CHECK_DATA(t.at("name").get<std::string>() == ps[i]->name,
                    "checkpoint tensor name mismatch at index " + std::to_string(i));
    std::vector<int64_t> shape = t.at("shape").get<std::vector<int64_t>>();
    IFCN_CHECK_DATA(shape == ps[i]->value.shape, "checkpoint tensor shape mismatch: " + ps[i]->name);
    f.read(reinterpret_cast<char*>(ps[i]->value.data.data()),
           static_cast<std::streamsize>(ps[i]->value.data.size() * sizeof(double)));
    IFCN_CHECK_DATA(f.good(), "truncated checkpoint data at " + ps[i]->name);
  }
  return m;
}

}  // namespace ifcn
