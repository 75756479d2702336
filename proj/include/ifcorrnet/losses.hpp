// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "ifcorrnet/autodiff.hpp"
#include "ifcorrnet/signal.hpp"

namespace ifcn {

struct LossConfig {
  std::vector<int> fft_sizes = {256, 512, 768, 1024};
  double weight_time = 1.0;
  double weight_tf = 1.0;

  int max_fft() const;
  void validate() const;  // sizes even and >= 64
};

struct LossParts {
  double time = 0.0;
  double tf = 0.0;
  double total = 0.0;
};

// Plain evaluations for reporting.
double time_l1(const Waveform& est, const Waveform& ref);
double multires_tf_l1(const Waveform& est, const Waveform& ref, const LossConfig& cfg);
LossParts total_loss(const Waveform& est, const Waveform& ref, const LossConfig& cfg);

// Graph builder: est is a waveform node, ref a fixed target. Each resolution
// contributes the mean absolute real/imag difference over its bins; the TF
// term is the mean across resolutions.
template <class Ctx>
typename Ctx::V total_loss_graph(Ctx& cx, const typename Ctx::V& est, const Waveform& ref,
                                 const LossConfig& cfg, LossParts* parts = nullptr) {
  cfg.validate();
  const int64_t len = cx.val(est).numel();
  IFCN_CHECK_DATA(len == ref.size(), "loss: estimate/reference length mismatch");
  IFCN_CHECK_DATA(len >= cfg.max_fft(), "loss: signal shorter than the largest FFT window");

  Tensor ref_t({len});
  ref_t.data = ref.samples;

  auto time_term = cx.l1(est, cx.constant(ref_t));

  typename Ctx::V tf_sum;
  bool first = true;
  for (int s : cfg.fft_sizes) {
    auto est_spec = cx.stft(est, s, s / 2);
    auto ref_spec = cx.constant(ops::stft_fwd(ref_t, s, s / 2));
    auto term = cx.l1(est_spec, ref_spec);
    tf_sum = first ? term : cx.add(tf_sum, term);
    first = false;
  }
  auto tf_term = cx.scale(tf_sum, 1.0 / static_cast<double>(cfg.fft_sizes.size()));

  auto total = cx.add(cx.scale(time_term, cfg.weight_time), cx.scale(tf_term, cfg.weight_tf));
  if (parts) {
    parts->time = cx.val(time_term).data[0];
    parts->tf = cx.val(tf_term).data[0];
    parts->total = cx.val(total).data[0];
  }
  return total;
}

}  // namespace ifcn
