// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/features.hpp"

#include <cmath>

namespace ifcn {

const char* kFlattenOrderDescriptor =
    "real-block-then-imag-block;row-major(m,n);taps=[t-L..t+L]";

MultiFrameStack build_stack(const ComplexSpectrogram& X, int L) {
  IFCN_CHECK_CFG(L >= 0, "build_stack: L must be >= 0");
  IFCN_CHECK(X.T >= 1, "build_stack: empty spectrogram");
  MultiFrameStack s;
  s.L = L;
  s.T = X.T;
  s.F = X.F;
  const int taps = 2 * L + 1;
  s.v.assign(static_cast<size_t>(X.T * X.F * taps), {0.0, 0.0});
  for (int64_t t = 0; t < X.T; ++t) {
    for (int m = 0; m < taps; ++m) {
      int64_t src = t - L + m;
      if (src < 0 || src >= X.T) continue;
      const std::complex<double>* row = &X.values[static_cast<size_t>(src * X.F)];
      for (int64_t f = 0; f < X.F; ++f) {
        s.v[static_cast<size_t>((t * X.F + f) * taps + m)] = row[static_cast<size_t>(f)];
      }
    }
  }
  return s;
}

CorrelationTensor correlate(const MultiFrameStack& stack) {
  const int taps = stack.taps();
  CorrelationTensor Z;
  Z.L = stack.L;
  Z.T = stack.T;
  Z.F = stack.F;
  Z.m.assign(static_cast<size_t>(stack.T * stack.F * taps * taps), {0.0, 0.0});
  for (int64_t tf = 0; tf < stack.T * stack.F; ++tf) {
    const std::complex<double>* x = &stack.v[static_cast<size_t>(tf * taps)];
    std::complex<double>* z = &Z.m[static_cast<size_t>(tf * taps * taps)];
    for (int r = 0; r < taps; ++r) {
      for (int c = 0; c < taps; ++c) {
        z[r * taps + c] = x[r] * std::conj(x[c]);
      }
    }
  }
  return Z;
}

void phat_beta_weight(CorrelationTensor& Z, double beta, double epsilon) {
  IFCN_CHECK_CFG(beta >= 0.0 && beta <= 1.0, "phat_beta_weight: beta must be in [0,1]");
  IFCN_CHECK_CFG(epsilon > 0.0, "phat_beta_weight: epsilon must be > 0");
  for (auto& z : Z.m) {
    double mag = std::abs(z);
    if (mag == 0.0) continue;
    z /= std::pow(std::max(mag, epsilon), beta);
  }
  Z.beta = beta;
  Z.epsilon = epsilon;
  Z.weighted = true;
}

NetworkInput flatten_input(const CorrelationTensor& Z) {
  const int taps = Z.taps();
  const int64_t half = static_cast<int64_t>(taps) * taps;
  NetworkInput out;
  out.channels = 2 * half;
  out.T = Z.T;
  out.F = Z.F;
  out.tensor = Tensor({out.channels, Z.T, Z.F});
  double* d = out.tensor.ptr();
  const int64_t plane = Z.T * Z.F;
  for (int64_t tf = 0; tf < plane; ++tf) {
    const std::complex<double>* z = &Z.m[static_cast<size_t>(tf * half)];
    for (int64_t c = 0; c < half; ++c) {
      d[c * plane + tf] = z[c].real();
      d[(half + c) * plane + tf] = z[c].imag();
    }
  }
  return out;
}

CorrelationTensor unflatten_input(const NetworkInput& inp, int L) {
  const int taps = 2 * L + 1;
  const int64_t half = static_cast<int64_t>(taps) * taps;
  IFCN_CHECK(inp.channels == 2 * half, "unflatten_input: channel count mismatch");
  CorrelationTensor Z;
  Z.L = L;
  Z.T = inp.T;
  Z.F = inp.F;
  Z.m.assign(static_cast<size_t>(inp.T * inp.F * half), {0.0, 0.0});
  const double* d = inp.tensor.ptr();
  const int64_t plane = inp.T * inp.F;
  for (int64_t tf = 0; tf < plane; ++tf) {
    std::complex<double>* z = &Z.m[static_cast<size_t>(tf * half)];
    for (int64_t c = 0; c < half; ++c) {
      z[c] = {d[c * plane + tf], d[(half + c) * plane + tf]};
    }
  }
  return Z;
}

NetworkInput raw_input(const ComplexSpectrogram& X) {
  NetworkInput out;
  out.channels = 2;
  out.T = X.T;
  out.F = X.F;
  out.tensor = Tensor({2, X.T, X.F});
  double* d = out.tensor.ptr();
  const int64_t plane = X.T * X.F;
  for (int64_t tf = 0; tf < plane; ++tf) {
    d[tf] = X.values[static_cast<size_t>(tf)].real();
    d[plane + tf] = X.values[static_cast<size_t>(tf)].imag();
  }
  return out;
}

}  // namespace ifcn
