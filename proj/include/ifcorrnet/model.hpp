// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ifcorrnet/autodiff.hpp"
#include "ifcorrnet/features.hpp"
#include "ifcorrnet/signal.hpp"

namespace ifcn {

enum class InputVariant { kIfCorr, kSfRaw };
enum class OutputVariant { kMfFilter, kSfMask, kMapping };

std::string to_string(InputVariant v);
std::string to_string(OutputVariant v);
InputVariant input_variant_from_string(const std::string& s);
OutputVariant output_variant_from_string(const std::string& s);

// Architecture plus the input-pipeline knobs that a checkpoint must pin down
// for its weights to be reusable.
struct ModelConfig {
  int L = 3;
  int C = 96;
  int B = 6;
  int C_H = 192;
  int K = 7;
  int n_heads = 4;
  InputVariant input_variant = InputVariant::kIfCorr;
  OutputVariant output_variant = OutputVariant::kMfFilter;
  double macaron_scale = 0.5;
  double beta = 0.5;
  double epsilon = 1e-8;
  int n_fft = 512;
  int hop = 256;

  int taps() const { return 2 * L + 1; }
  int filter_taps() const { return output_variant == OutputVariant::kMfFilter ? taps() : 1; }
  int input_channels() const {
    return input_variant == InputVariant::kIfCorr ? 2 * taps() * taps() : 2;
  }
  int output_channels() const {
    return output_variant == OutputVariant::kMfFilter ? 2 * taps() : 2;
  }

  void validate() const;

  static ModelConfig full() { return ModelConfig{}; }
  static ModelConfig small_variant() {
    ModelConfig c;
    c.C = 64;
    c.C_H = 128;
    c.K = 3;
    return c;
  }
};

struct ConvParams {
  Param w, b;
};
struct LayerNormParams {
  Param gamma, beta;
};
struct ConvFfnParams {
  ConvParams conv1, conv2;
};
struct AttentionParams {
  ConvParams q, k, v, o;  // linear projections
};
struct BlockParams {
  LayerNormParams ln1, ln2, ln3, ln4;
  ConvFfnParams ffn1, ffn2;
  AttentionParams attn;
};

// Everything a forward pass produces: the raw head tensor (the filter, mask,
// or direct spectrum real/imag channels), the estimated spectrogram, and the
// synthesized waveform.
template <class Ctx>
struct ForwardOut {
  typename Ctx::V head;
  typename Ctx::V spec;
  typename Ctx::V wave;
  ops::StftMeta meta;
};

// Copies a multi-frame stack into real/imag tensors of shape (T, F, taps) for
// the filter-application op.
void stack_to_tensors(const MultiFrameStack& s, Tensor* re, Tensor* im);

class Model {
 public:
  explicit Model(ModelConfig c);

  // Truncated-normal(0.02) convolution/projection weights, unit LayerNorm
  // gains, zero biases, zero output head.
  void init_params(uint64_t seed);

  // Stable enumeration order; checkpoint layout and optimizer state follow it.
  std::vector<Param*> params();
  int64_t parameter_count();
  static int64_t expected_parameter_count(const ModelConfig& c);

  void save_checkpoint(const std::string& path);
  static Model load_checkpoint(const std::string& path);

  // Full pipeline from a waveform: STFT, featurization, network, output
  // pathway, synthesis. The Mapping variant normalizes by utterance RMS here
  // and rescales its output.
  template <class Ctx>
  ForwardOut<Ctx> forward(Ctx& cx, const Waveform& x) {
    double rms = 1.0;
    if (cfg.output_variant == OutputVariant::kMapping) {
      double p = 0.0;
      for (double v : x.samples) p += v * v;
      rms = std::sqrt(p / static_cast<double>(x.size()));
      if (rms < 1e-12) rms = 1.0;
    }
    ComplexSpectrogram X = stft(x, cfg.n_fft, cfg.hop);
    return forward_spec(cx, X, rms);
  }

  // Spectrogram entry point; rms_scale only matters for the Mapping variant
  // (input spectrum divided by it, output multiplied back).
  template <class Ctx>
  ForwardOut<Ctx> forward_spec(Ctx& cx, const ComplexSpectrogram& X, double rms_scale = 1.0) {
    IFCN_CHECK_CFG(X.n_fft == cfg.n_fft && X.hop == cfg.hop,
                   "forward: spectrogram STFT parameters do not match the model config");
    const ComplexSpectrogram* Xin = &X;
    ComplexSpectrogram Xnorm;
    if (cfg.output_variant == OutputVariant::kMapping && rms_scale != 1.0) {
      Xnorm = X;
      for (auto& z : Xnorm.values) z /= rms_scale;
      Xin = &Xnorm;
    }

    NetworkInput ni = featurize(*Xin);
    auto fm = input_layer_fwd(cx, cx.constant(std::move(ni.tensor)));
    for (int i = 0; i < 2 * cfg.B; ++i) {
      fm = run_module(cx, fm, blocks[static_cast<size_t>(i)], /*along_time=*/i % 2 == 1);
    }
    auto head_v = cx.conv2d(fm, head.w, head.b);

    typename Ctx::V spec;
    if (cfg.output_variant == OutputVariant::kMapping) {
      spec = (rms_scale != 1.0) ? cx.scale(head_v, rms_scale) : head_v;
    } else {
      MultiFrameStack st =
          build_stack(X, cfg.output_variant == OutputVariant::kMfFilter ? cfg.L : 0);
      Tensor sre, sim;
      stack_to_tensors(st, &sre, &sim);
      spec = cx.apply_filter(head_v, cx.constant(std::move(sre)), cx.constant(std::move(sim)));
    }

    ops::StftMeta meta{cfg.n_fft, cfg.hop, X.orig_len};
    auto wave = cx.istft(spec, meta);
    return {head_v, spec, wave, meta};
  }

  // Plain inference: no tape, intermediate buffers freed as they fall out of
  // scope.
  Waveform enhance(const Waveform& x) {
    EvalCtx ev;
    auto out = forward(ev, x);
    Waveform y;
    y.sample_rate = x.sample_rate;
    y.samples = ev.val(out.wave).data;
    return y;
  }

  NetworkInput featurize(const ComplexSpectrogram& X) const;

  ModelConfig cfg;
  ConvParams in1, in2;  // 1x1 and 3x3 input convolutions
  LayerNormParams in_ln;
  std::vector<BlockParams> blocks;  // 2*B entries, alternating freq/time
  ConvParams head;

 private:
  template <class Ctx>
  typename Ctx::V input_layer_fwd(Ctx& cx, const typename Ctx::V& inp) {
    auto h = cx.conv2d(inp, in1.w, in1.b);  // (4C, T, F)
    h = cx.swiglu(h, 0);                    // (2C, T, F)
    h = cx.conv2d(h, in2.w, in2.b);         // (C, T, F)
    return cx.layer_norm(h, 0, in_ln.gamma, in_ln.beta);
  }

  template <class Ctx>
  typename Ctx::V run_ffn(Ctx& cx, const typename Ctx::V& x, ConvFfnParams& p) {
    auto h = cx.conv1d(x, p.conv1.w, p.conv1.b);  // (N, L, 2*C_H)
    h = cx.swiglu(h, 2);                          // (N, L, C_H)
    return cx.conv1d(h, p.conv2.w, p.conv2.b);    // (N, L, C)
  }

  template <class Ctx>
  typename Ctx::V run_attention(Ctx& cx, const typename Ctx::V& x, AttentionParams& p) {
    const Tensor& xv = cx.val(x);
    const int64_t N = xv.dim(0), Ls = xv.dim(1), C = xv.dim(2);
    const int64_t H = cfg.n_heads, Dh = C / H;
    auto split_heads = [&](const typename Ctx::V& v) {
      auto r = cx.reshape(v, {N, Ls, H, Dh});
      r = cx.permute(r, {0, 2, 1, 3});
      return cx.reshape(r, {N * H, Ls, Dh});
    };
    auto q = cx.rope(split_heads(cx.linear(x, p.q.w, p.q.b)));
    auto k = cx.rope(split_heads(cx.linear(x, p.k.w, p.k.b)));
    auto v = split_heads(cx.linear(x, p.v.w, p.v.b));
    auto attnw = cx.softmax(cx.matmul(q, k, /*trans_b=*/true,
                                      1.0 / std::sqrt(static_cast<double>(Dh))));
    auto o = cx.matmul(attnw, v, /*trans_b=*/false, 1.0);
    o = cx.reshape(o, {N, H, Ls, Dh});
    o = cx.permute(o, {0, 2, 1, 3});
    o = cx.reshape(o, {N, Ls, C});
    return cx.linear(o, p.o.w, p.o.b);
  }

  // x arrives as (N, seq, C); macaron sandwich with pre-norm and a final norm.
  template <class Ctx>
  typename Ctx::V run_block(Ctx& cx, typename Ctx::V x, BlockParams& p) {
    const double s = cfg.macaron_scale;
    x = cx.add(x, cx.scale(run_ffn(cx, cx.layer_norm(x, 2, p.ln1.gamma, p.ln1.beta), p.ffn1), s));
    x = cx.add(x, run_attention(cx, cx.layer_norm(x, 2, p.ln2.gamma, p.ln2.beta), p.attn));
    x = cx.add(x, cx.scale(run_ffn(cx, cx.layer_norm(x, 2, p.ln3.gamma, p.ln3.beta), p.ffn2), s));
    return cx.layer_norm(x, 2, p.ln4.gamma, p.ln4.beta);
  }

  // Frequency module: T independent sequences of length F. Time module: F
  // independent sequences of length T.
  template <class Ctx>
  typename Ctx::V run_module(Ctx& cx, const typename Ctx::V& fm, BlockParams& p,
                             bool along_time) {
    std::vector<int> perm = along_time ? std::vector<int>{2, 1, 0} : std::vector<int>{1, 2, 0};
    auto x = cx.permute(fm, perm);
    x = run_block(cx, x, p);
    return cx.permute(x, ops::inverse_perm(perm));
  }
};

}  // namespace ifcn
