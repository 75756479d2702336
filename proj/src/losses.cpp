// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/losses.hpp"

#include <algorithm>
#include <cmath>

namespace ifcn {

int LossConfig::max_fft() const {
  int m = 0;
  for (int s : fft_sizes) m = std::max(m, s);
  return m;
}

void LossConfig::validate() const {
  IFCN_CHECK_CFG(!fft_sizes.empty(), "loss: fft_sizes must not be empty");
  for (int s : fft_sizes) {
    IFCN_CHECK_CFG(s >= 64 && s % 2 == 0, "loss: fft sizes must be even and >= 64");
  }
  IFCN_CHECK_CFG(weight_time >= 0.0 && weight_tf >= 0.0, "loss: weights must be nonnegative");
}

double time_l1(const Waveform& est, const Waveform& ref) {
  IFCN_CHECK_DATA(est.size() == ref.size(), "time_l1: length mismatch");
  IFCN_CHECK_DATA(est.size() > 0, "time_l1: empty signals");
  double s = 0.0;
  for (size_t i = 0; i < est.samples.size(); ++i) s += std::abs(est.samples[i] - ref.samples[i]);
  return s / static_cast<double>(est.size());
}

double multires_tf_l1(const Waveform& est, const Waveform& ref, const LossConfig& cfg) {
  cfg.validate();
  IFCN_CHECK_DATA(est.size() == ref.size(), "multires_tf_l1: length mismatch");
  IFCN_CHECK_DATA(est.size() >= cfg.max_fft(),
                  "multires_tf_l1: signal shorter than the largest FFT window");
  double sum = 0.0;
  for (int s : cfg.fft_sizes) {
    ComplexSpectrogram E = stft(est, s, s / 2);
    ComplexSpectrogram R = stft(ref, s, s / 2);
    double acc = 0.0;
    for (size_t i = 0; i < E.values.size(); ++i) {
      acc += std::abs(E.values[i].real() - R.values[i].real()) +
             std::abs(E.values[i].imag() - R.values[i].imag());
    }
    sum += acc / static_cast<double>(2 * E.values.size());
  }
  return sum / static_cast<double>(cfg.fft_sizes.size());
}

LossParts total_loss(const Waveform& est, const Waveform& ref, const LossConfig& cfg) {
  LossParts p;
  p.time = time_l1(est, ref);
  p.tf = multires_tf_l1(est, ref, cfg);
  p.total = cfg.weight_time * p.time + cfg.weight_tf * p.tf;
  return p;
}

}  // namespace ifcn
