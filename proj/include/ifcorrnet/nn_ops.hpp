// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "ifcorrnet/tensor.hpp"

namespace ifcn {

// Forward kernels allocate and return their outputs. Backward kernels
// accumulate (+=) into caller-provided gradient tensors, which must already
// be allocated with the matching shape; a null pointer skips that gradient.
namespace ops {

constexpr double kLayerNormEps = 1e-5;
constexpr double kRopeBase = 10000.0;

// ---- convolution / linear ----

// x (Cin, T, F), w (Cout, Cin, kh, kw) with odd kernel dims, b (Cout).
// Zero same-padding. Returns (Cout, T, F).
Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b);
void conv2d_bwd(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                Tensor* gw, Tensor* gb);

// x (N, L, Cin), w (Cout, Cin, K) with odd K, b (Cout). 1-D convolution along
// L with zero same-padding, independent per sequence n. Returns (N, L, Cout).
Tensor conv1d_fwd(const Tensor& x, const Tensor& w, const Tensor& b);
void conv1d_bwd(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                Tensor* gw, Tensor* gb);

// x (..., Cin), w (Cout, Cin), b (Cout): y = x w^T + b over the last axis.
Tensor linear_fwd(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_bwd(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                Tensor* gw, Tensor* gb);

// ---- normalization / activations ----

struct NormStats {
  std::vector<double> mu;    // one per normalized vector
  std::vector<double> rstd;  // 1/sqrt(var + eps)
};

// Layer normalization across the given axis with learned per-element affine.
// gamma/beta have length shape[axis]. Statistics are computed per position
// (all other axes), i.e. per time-frequency bin for (C,T,F) with axis 0.
Tensor layer_norm_fwd(const Tensor& x, int axis, const Tensor& gamma,
                      const Tensor& beta, NormStats* stats);
void layer_norm_bwd(const Tensor& x, int axis, const Tensor& gamma,
                    const NormStats& stats, const Tensor& gy, Tensor* gx,
                    Tensor* ggamma, Tensor* gbeta);

// SwiGLU along the given axis: the first half of the axis is the value, the
// second half the gate; y = value * gate * sigmoid(gate). Output axis length
// is halved.
Tensor swiglu_fwd(const Tensor& x, int axis);
void swiglu_bwd(const Tensor& x, int axis, const Tensor& gy, Tensor* gx);

// ---- shape reorganization ----

// y.shape[i] = x.shape[perm[i]], y[i0,..] = x[perm applied].
Tensor permute_fwd(const Tensor& x, const std::vector<int>& perm);
std::vector<int> inverse_perm(const std::vector<int>& perm);

// ---- attention pieces ----

// Batched matmul on 3-D tensors: a (B, M, K), b (B, K, N) or (B, N, K) if
// trans_b. Returns alpha * a @ op(b), shape (B, M, N).
Tensor matmul_fwd(const Tensor& a, const Tensor& b, bool trans_b, double alpha);
void matmul_bwd(const Tensor& a, const Tensor& b, bool trans_b, double alpha,
                const Tensor& gy, Tensor* ga, Tensor* gb);

// Softmax over the last axis.
Tensor softmax_fwd(const Tensor& x);
void softmax_bwd(const Tensor& y, const Tensor& gy, Tensor* gx);

// Rotary positional encoding on (B, L, D) with D even: feature pair (2p,2p+1)
// at position l is rotated by l * base^(-2p/D).
Tensor rope_fwd(const Tensor& x, double base = kRopeBase);
void rope_bwd(const Tensor& gy, double base, Tensor* gx);

// ---- filtering / transforms ----

// wch (2*taps, T, F): real filter taps then imaginary ones. sre/sim
// (T, F, taps): the multi-frame stack. Returns (2, T, F) with
// y = sum_m w_m * x_m (plain transpose, no conjugation).
Tensor apply_filter_fwd(const Tensor& wch, const Tensor& sre, const Tensor& sim);
void apply_filter_bwd(const Tensor& sre, const Tensor& sim, const Tensor& gy,
                      Tensor* gw);

struct StftMeta {
  int n_fft = 512;
  int hop = 256;
  int64_t orig_len = 0;
};

// WOLA synthesis of a (2, T, F) real/imag spectrogram tensor; matches
// ifcn::istft bit for bit. Imaginary parts of DC and Nyquist are ignored
// (their gradients are zero).
Tensor istft_fwd(const Tensor& y, const StftMeta& m);
void istft_bwd(const StftMeta& m, const Tensor& gwave, Tensor* gy);

// STFT of a waveform tensor (len) to (2, T, F); matches ifcn::stft.
Tensor stft_fwd(const Tensor& wave, int n_fft, int hop);
void stft_bwd(int n_fft, int hop, int64_t len, const Tensor& gY, Tensor* gwave);

// ---- reductions ----

// Mean absolute difference; subgradient at zero is 0.
double l1_mean(const Tensor& a, const Tensor& b);
void l1_mean_bwd(const Tensor& a, const Tensor& b, double g, Tensor* ga);

}  // namespace ops
}  // namespace ifcn
