// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

#include "ifcorrnet/signal.hpp"
#include "ifcorrnet/tensor.hpp"

namespace ifcn {

// Per-(t,f) vector of 2L+1 adjacent-frame STFT values. Tap m holds frame
// t-L+m of the same frequency bin; frames outside [0, T) are zero.
struct MultiFrameStack {
  int L = 0;
  int64_t T = 0;
  int64_t F = 0;
  std::vector<std::complex<double>> v;  // (t, f, tap)

  int taps() const { return 2 * L + 1; }
  std::complex<double>& at(int64_t t, int64_t f, int m) {
    return v[static_cast<size_t>((t * F + f) * taps() + m)];
  }
  const std::complex<double>& at(int64_t t, int64_t f, int m) const {
    return v[static_cast<size_t>((t * F + f) * taps() + m)];
  }
};

// Per-(t,f) (2L+1)x(2L+1) inter-frame correlation matrix Z = x x^H, with
// optional PHAT-beta magnitude compression applied in place.
struct CorrelationTensor {
  int L = 0;
  int64_t T = 0;
  int64_t F = 0;
  double beta = 0.0;      // 0 until phat_beta_weight is applied
  double epsilon = 1e-8;  // magnitude floor inside the weighting
  bool weighted = false;
  std::vector<std::complex<double>> m;  // (t, f, row, col)

  int taps() const { return 2 * L + 1; }
  std::complex<double>& at(int64_t t, int64_t f, int r, int c) {
    return m[static_cast<size_t>(((t * F + f) * taps() + r) * taps() + c)];
  }
  const std::complex<double>& at(int64_t t, int64_t f, int r, int c) const {
    return m[static_cast<size_t>(((t * F + f) * taps() + r) * taps() + c)];
  }
};

// Real-valued network input of shape (channels, T, F). For the correlation
// input, channels = 2*(2L+1)^2: the real parts of Z in row-major (m,n) order
// followed by the imaginary parts in the same order. For the raw-STFT input,
// channels = 2: [Re X; Im X].
struct NetworkInput {
  int64_t channels = 0;
  int64_t T = 0;
  int64_t F = 0;
  Tensor tensor;  // (channels, T, F)
};

// Fixed flatten-order descriptor, stored in checkpoints so exported weights
// are unambiguous.
extern const char* kFlattenOrderDescriptor;

MultiFrameStack build_stack(const ComplexSpectrogram& X, int L);

// Z_tf = x_tf x_tf^H for every (t,f).
CorrelationTensor correlate(const MultiFrameStack& stack);

// In-place generalized PHAT-beta: z <- z / max(|z|, epsilon)^beta. Zero
// entries stay zero; beta must lie in [0,1].
void phat_beta_weight(CorrelationTensor& Z, double beta, double epsilon = 1e-8);

NetworkInput flatten_input(const CorrelationTensor& Z);

// Inverse of flatten_input; test-and-tooling helper.
CorrelationTensor unflatten_input(const NetworkInput& inp, int L);

// 2-channel [Re X; Im X] input for the single-frame raw-STFT variant.
NetworkInput raw_input(const ComplexSpectrogram& X);

}  // namespace ifcn
