// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/nn_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

#include "ifcorrnet/fft.hpp"
#include "ifcorrnet/signal.hpp"

namespace ifcn {
namespace ops {
namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<MatRM>;
using CMap = Eigen::Map<const MatRM>;
using DynStride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
using StridedMap = Eigen::Map<MatRM, Eigen::Unaligned, DynStride>;
using CStridedMap = Eigen::Map<const MatRM, Eigen::Unaligned, DynStride>;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void ln_dims(const Tensor& x, int axis, int64_t* outer, int64_t* n, int64_t* inner) {
  IFCN_CHECK(axis >= 0 && axis < x.ndim(), "layer_norm: axis out of range");
  *n = x.dim(axis);
  *outer = 1;
  for (int i = 0; i < axis; ++i) *outer *= x.dim(i);
  *inner = 1;
  for (int i = axis + 1; i < x.ndim(); ++i) *inner *= x.dim(i);
}

}  // namespace

// ---- convolution / linear ----

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  IFCN_CHECK(x.ndim() == 3 && w.ndim() == 4 && b.ndim() == 1, "conv2d: rank mismatch");
  const int64_t Cin = x.dim(0), T = x.dim(1), F = x.dim(2);
  const int64_t Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  IFCN_CHECK(w.dim(1) == Cin && b.dim(0) == Cout, "conv2d: channel mismatch");
  IFCN_CHECK(kh % 2 == 1 && kw % 2 == 1, "conv2d: kernel dims must be odd");

  Tensor y({Cout, T, F});
  Map Y(y.ptr(), Cout, T * F);
  for (int64_t co = 0; co < Cout; ++co) Y.row(co).setConstant(b.data[static_cast<size_t>(co)]);

  CMap X(x.ptr(), Cin, T * F);
  for (int64_t ph = 0; ph < kh; ++ph) {
    const int64_t dy = ph - kh / 2;
    const int64_t t0 = std::max<int64_t>(0, -dy);
    const int64_t t1 = std::min<int64_t>(T, T - dy);
    if (t0 >= t1) continue;
    for (int64_t pw = 0; pw < kw; ++pw) {
      const int64_t dx = pw - kw / 2;
      const int64_t f0 = std::max<int64_t>(0, -dx);
      const int64_t f1 = std::min<int64_t>(F, F - dx);
      if (f0 >= f1) continue;
      CStridedMap Woff(w.ptr() + ph * kw + pw, Cout, Cin, DynStride(Cin * kh * kw, kh * kw));
      if (dx == 0) {
        // Full rows are contiguous in the flattened (t,f) axis: one GEMM.
        Y.middleCols(t0 * F, (t1 - t0) * F).noalias() +=
            Woff * X.middleCols((t0 + dy) * F, (t1 - t0) * F);
      } else {
        for (int64_t t = t0; t < t1; ++t) {
          Y.block(0, t * F + f0, Cout, f1 - f0).noalias() +=
              Woff * X.block(0, (t + dy) * F + f0 + dx, Cin, f1 - f0);
        }
      }
    }
  }
  return y;
}

void conv2d_bwd(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                Tensor* gw, Tensor* gb) {
  const int64_t Cin = x.dim(0), T = x.dim(1), F = x.dim(2);
  const int64_t Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  CMap GY(gy.ptr(), Cout, T * F);
  CMap X(x.ptr(), Cin, T * F);

  if (gb) {
    Map GB(gb->ptr(), Cout, 1);
    GB.noalias() += GY.rowwise().sum();
  }

  for (int64_t ph = 0; ph < kh; ++ph) {
    const int64_t dy = ph - kh / 2;
    const int64_t t0 = std::max<int64_t>(0, -dy);
    const int64_t t1 = std::min<int64_t>(T, T - dy);
    if (t0 >= t1) continue;
    for (int64_t pw = 0; pw < kw; ++pw) {
      const int64_t dx = pw - kw / 2;
      const int64_t f0 = std::max<int64_t>(0, -dx);
      const int64_t f1 = std::min<int64_t>(F, F - dx);
      if (f0 >= f1) continue;
      if (gx) {
        CStridedMap Woff(w.ptr() + ph * kw + pw, Cout, Cin, DynStride(Cin * kh * kw, kh * kw));
        Map GX(gx->ptr(), Cin, T * F);
        if (dx == 0) {
          GX.middleCols((t0 + dy) * F, (t1 - t0) * F).noalias() +=
              Woff.transpose() * GY.middleCols(t0 * F, (t1 - t0) * F);
        } else {
          for (int64_t t = t0; t < t1; ++t) {
            GX.block(0, (t + dy) * F + f0 + dx, Cin, f1 - f0).noalias() +=
                Woff.transpose() * GY.block(0, t * F + f0, Cout, f1 - f0);
          }
        }
      }
      if (gw) {
        StridedMap GWoff(gw->ptr() + ph * kw + pw, Cout, Cin, DynStride(Cin * kh * kw, kh * kw));
        if (dx == 0) {
          GWoff.noalias() += GY.middleCols(t0 * F, (t1 - t0) * F) *
                             X.middleCols((t0 + dy) * F, (t1 - t0) * F).transpose();
        } else {
          for (int64_t t = t0; t < t1; ++t) {
            GWoff.noalias() += GY.block(0, t * F + f0, Cout, f1 - f0) *
                               X.block(0, (t + dy) * F + f0 + dx, Cin, f1 - f0).transpose();
          }
        }
      }
    }
  }
}

Tensor conv1d_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  IFCN_CHECK(x.ndim() == 3 && w.ndim() == 3 && b.ndim() == 1, "conv1d: rank mismatch");
  const int64_t N = x.dim(0), L = x.dim(1), Cin = x.dim(2);
  const int64_t Cout = w.dim(0), K = w.dim(2);
  IFCN_CHECK(w.dim(1) == Cin && b.dim(0) == Cout, "conv1d: channel mismatch");
  IFCN_CHECK(K % 2 == 1, "conv1d: kernel size must be odd");

  Tensor y({N, L, Cout});
  {
    Map Yall(y.ptr(), N * L, Cout);
    Yall = CMap(b.ptr(), 1, Cout).replicate(N * L, 1);
  }
  for (int64_t n = 0; n < N; ++n) {
    CMap Xn(x.ptr() + n * L * Cin, L, Cin);
    Map Yn(y.ptr() + n * L * Cout, L, Cout);
    for (int64_t k = 0; k < K; ++k) {
      const int64_t dk = k - K / 2;
      const int64_t l0 = std::max<int64_t>(0, -dk);
      const int64_t l1 = std::min<int64_t>(L, L - dk);
      if (l0 >= l1) continue;
      CStridedMap Wk(w.ptr() + k, Cout, Cin, DynStride(Cin * K, K));
      Yn.middleRows(l0, l1 - l0).noalias() += Xn.middleRows(l0 + dk, l1 - l0) * Wk.transpose();
    }
  }
  return y;
}

void conv1d_bwd(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                Tensor* gw, Tensor* gb) {
  const int64_t N = x.dim(0), L = x.dim(1), Cin = x.dim(2);
  const int64_t Cout = w.dim(0), K = w.dim(2);

  if (gb) {
    CMap GYall(gy.ptr(), N * L, Cout);
    Map GB(gb->ptr(), Cout, 1);
    GB.noalias() += GYall.colwise().sum().transpose();
  }
  for (int64_t n = 0; n < N; ++n) {
    CMap Xn(x.ptr() + n * L * Cin, L, Cin);
    CMap GYn(gy.ptr() + n * L * Cout, L, Cout);
    for (int64_t k = 0; k < K; ++k) {
      const int64_t dk = k - K / 2;
      const int64_t l0 = std::max<int64_t>(0, -dk);
      const int64_t l1 = std::min<int64_t>(L, L - dk);
      if (l0 >= l1) continue;
      if (gx) {
        CStridedMap Wk(w.ptr() + k, Cout, Cin, DynStride(Cin * K, K));
        Map GXn(gx->ptr() + n * L * Cin, L, Cin);
        GXn.middleRows(l0 + dk, l1 - l0).noalias() += GYn.middleRows(l0, l1 - l0) * Wk;
      }
      if (gw) {
        StridedMap GWk(gw->ptr() + k, Cout, Cin, DynStride(Cin * K, K));
        GWk.noalias() +=
            GYn.middleRows(l0, l1 - l0).transpose() * Xn.middleRows(l0 + dk, l1 - l0);
      }
    }
  }
}

Tensor linear_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  IFCN_CHECK(x.ndim() >= 1 && w.ndim() == 2 && b.ndim() == 1, "linear: rank mismatch");
  const int64_t Cin = x.dim(x.ndim() - 1);
  const int64_t Cout = w.dim(0);
  IFCN_CHECK(w.dim(1) == Cin && b.dim(0) == Cout, "linear: shape mismatch");
  const int64_t R = x.numel() / Cin;

  std::vector<int64_t> os = x.shape;
  os.back() = Cout;
  Tensor y(std::move(os));
  CMap X(x.ptr(), R, Cin);
  CMap W(w.ptr(), Cout, Cin);
  Map Y(y.ptr(), R, Cout);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += CMap(b.ptr(), 1, Cout).row(0);
  return y;
}

void linear_bwd(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                Tensor* gw, Tensor* gb) {
  const int64_t Cin = w.dim(1), Cout = w.dim(0);
  const int64_t R = x.numel() / Cin;
  CMap X(x.ptr(), R, Cin);
  CMap W(w.ptr(), Cout, Cin);
  CMap GY(gy.ptr(), R, Cout);
  if (gx) {
    Map GX(gx->ptr(), R, Cin);
    GX.noalias() += GY * W;
  }
  if (gw) {
    Map GW(gw->ptr(), Cout, Cin);
    GW.noalias() += GY.transpose() * X;
  }
  if (gb) {
    Map GB(gb->ptr(), Cout, 1);
    GB.noalias() += GY.colwise().sum().transpose();
  }
}

// ---- normalization / activations ----

Tensor layer_norm_fwd(const Tensor& x, int axis, const Tensor& gamma,
                      const Tensor& beta, NormStats* stats) {
  int64_t outer, n, inner;
  ln_dims(x, axis, &outer, &n, &inner);
  IFCN_CHECK(gamma.numel() == n && beta.numel() == n, "layer_norm: affine size mismatch");

  Tensor y(x.shape);
  if (stats) {
    stats->mu.assign(static_cast<size_t>(outer * inner), 0.0);
    stats->rstd.assign(static_cast<size_t>(outer * inner), 0.0);
  }
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const double* xp = x.ptr() + o * n * inner + i;
      double* yp = y.ptr() + o * n * inner + i;
      double mu = 0.0;
      for (int64_t j = 0; j < n; ++j) mu += xp[j * inner];
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const double d = xp[j * inner] - mu;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
      if (stats) {
        stats->mu[static_cast<size_t>(o * inner + i)] = mu;
        stats->rstd[static_cast<size_t>(o * inner + i)] = rstd;
      }
      for (int64_t j = 0; j < n; ++j) {
        yp[j * inner] = (xp[j * inner] - mu) * rstd * gamma.data[static_cast<size_t>(j)] +
                        beta.data[static_cast<size_t>(j)];
      }
    }
  }
  return y;
}

void layer_norm_bwd(const Tensor& x, int axis, const Tensor& gamma,
                    const NormStats& stats, const Tensor& gy, Tensor* gx,
                    Tensor* ggamma, Tensor* gbeta) {
  int64_t outer, n, inner;
  ln_dims(x, axis, &outer, &n, &inner);
  std::vector<double> xhat(static_cast<size_t>(n)), dxh(static_cast<size_t>(n));

  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const double* xp = x.ptr() + o * n * inner + i;
      const double* gp = gy.ptr() + o * n * inner + i;
      const double mu = stats.mu[static_cast<size_t>(o * inner + i)];
      const double rstd = stats.rstd[static_cast<size_t>(o * inner + i)];
      double m1 = 0.0, m2 = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const double xh = (xp[j * inner] - mu) * rstd;
        const double d = gp[j * inner] * gamma.data[static_cast<size_t>(j)];
        xhat[static_cast<size_t>(j)] = xh;
        dxh[static_cast<size_t>(j)] = d;
        m1 += d;
        m2 += d * xh;
      }
      m1 /= static_cast<double>(n);
      m2 /= static_cast<double>(n);
      if (gx) {
        double* gxp = gx->ptr() + o * n * inner + i;
        for (int64_t j = 0; j < n; ++j) {
          gxp[j * inner] += rstd * (dxh[static_cast<size_t>(j)] - m1 -
                                    xhat[static_cast<size_t>(j)] * m2);
        }
      }
      if (ggamma) {
        for (int64_t j = 0; j < n; ++j) {
          ggamma->data[static_cast<size_t>(j)] += gp[j * inner] * xhat[static_cast<size_t>(j)];
        }
      }
      if (gbeta) {
        for (int64_t j = 0; j < n; ++j) {
          gbeta->data[static_cast<size_t>(j)] += gp[j * inner];
        }
      }
    }
  }
}

Tensor swiglu_fwd(const Tensor& x, int axis) {
  int64_t outer, n, inner;
  ln_dims(x, axis, &outer, &n, &inner);
  IFCN_CHECK(n % 2 == 0, "swiglu: axis length must be even");
  const int64_t half = n / 2;

  std::vector<int64_t> os = x.shape;
  os[static_cast<size_t>(axis)] = half;
  Tensor y(std::move(os));
  for (int64_t o = 0; o < outer; ++o) {
    const double* xp = x.ptr() + o * n * inner;
    double* yp = y.ptr() + o * half * inner;
    for (int64_t j = 0; j < half; ++j) {
      for (int64_t i = 0; i < inner; ++i) {
        const double v = xp[j * inner + i];
        const double g = xp[(half + j) * inner + i];
        yp[j * inner + i] = v * g * sigmoid(g);
      }
    }
  }
  return y;
}

void swiglu_bwd(const Tensor& x, int axis, const Tensor& gy, Tensor* gx) {
  int64_t outer, n, inner;
  ln_dims(x, axis, &outer, &n, &inner);
  const int64_t half = n / 2;
  for (int64_t o = 0; o < outer; ++o) {
    const double* xp = x.ptr() + o * n * inner;
    const double* gp = gy.ptr() + o * half * inner;
    double* gxp = gx->ptr() + o * n * inner;
    for (int64_t j = 0; j < half; ++j) {
      for (int64_t i = 0; i < inner; ++i) {
        const double v = xp[j * inner + i];
        const double g = xp[(half + j) * inner + i];
        const double s = sigmoid(g);
        const double gs = g * s;
        const double grad = gp[j * inner + i];
        gxp[j * inner + i] += grad * gs;
        gxp[(half + j) * inner + i] += grad * v * (s + gs * (1.0 - s));
      }
    }
  }
}

// ---- shape reorganization ----

Tensor permute_fwd(const Tensor& x, const std::vector<int>& perm) {
  const int nd = x.ndim();
  IFCN_CHECK(static_cast<int>(perm.size()) == nd, "permute: rank mismatch");
  std::vector<char> seen(static_cast<size_t>(nd), 0);
  for (int p : perm) {
    IFCN_CHECK(p >= 0 && p < nd && !seen[static_cast<size_t>(p)], "permute: invalid permutation");
    seen[static_cast<size_t>(p)] = 1;
  }

  std::vector<int64_t> xs(static_cast<size_t>(nd), 1);
  for (int i = nd - 2; i >= 0; --i) xs[static_cast<size_t>(i)] = xs[static_cast<size_t>(i + 1)] * x.dim(i + 1);

  std::vector<int64_t> os(static_cast<size_t>(nd));
  std::vector<int64_t> ostride(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    os[static_cast<size_t>(i)] = x.dim(perm[static_cast<size_t>(i)]);
    ostride[static_cast<size_t>(i)] = xs[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  }

  Tensor y(os);
  std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
  int64_t src = 0;
  const int64_t total = y.numel();
  for (int64_t lin = 0; lin < total; ++lin) {
    y.data[static_cast<size_t>(lin)] = x.data[static_cast<size_t>(src)];
    for (int a = nd - 1; a >= 0; --a) {
      ++idx[static_cast<size_t>(a)];
      src += ostride[static_cast<size_t>(a)];
      if (idx[static_cast<size_t>(a)] < os[static_cast<size_t>(a)]) break;
      src -= ostride[static_cast<size_t>(a)] * os[static_cast<size_t>(a)];
      idx[static_cast<size_t>(a)] = 0;
    }
  }
  return y;
}

std::vector<int> inverse_perm(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[static_cast<size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

// ---- attention pieces ----

Tensor matmul_fwd(const Tensor& a, const Tensor& b, bool trans_b, double alpha) {
  IFCN_CHECK(a.ndim() == 3 && b.ndim() == 3 && a.dim(0) == b.dim(0), "matmul: batch mismatch");
  const int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
  const int64_t N = trans_b ? b.dim(1) : b.dim(2);
  IFCN_CHECK((trans_b ? b.dim(2) : b.dim(1)) == K, "matmul: inner dim mismatch");

  Tensor y({B, M, N});
  for (int64_t i = 0; i < B; ++i) {
    CMap A(a.ptr() + i * M * K, M, K);
    Map Y(y.ptr() + i * M * N, M, N);
    if (trans_b) {
      CMap Bm(b.ptr() + i * N * K, N, K);
      Y.noalias() = alpha * (A * Bm.transpose());
    } else {
      CMap Bm(b.ptr() + i * K * N, K, N);
      Y.noalias() = alpha * (A * Bm);
    }
  }
  return y;
}

void matmul_bwd(const Tensor& a, const Tensor& b, bool trans_b, double alpha,
                const Tensor& gy, Tensor* ga, Tensor* gb) {
  const int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
  const int64_t N = trans_b ? b.dim(1) : b.dim(2);
  for (int64_t i = 0; i < B; ++i) {
    CMap A(a.ptr() + i * M * K, M, K);
    CMap GY(gy.ptr() + i * M * N, M, N);
    if (trans_b) {
      CMap Bm(b.ptr() + i * N * K, N, K);
      if (ga) {
        Map GA(ga->ptr() + i * M * K, M, K);
        GA.noalias() += alpha * (GY * Bm);
      }
      if (gb) {
        Map GB(gb->ptr() + i * N * K, N, K);
        GB.noalias() += alpha * (GY.transpose() * A);
      }
    } else {
      CMap Bm(b.ptr() + i * K * N, K, N);
      if (ga) {
        Map GA(ga->ptr() + i * M * K, M, K);
        GA.noalias() += alpha * (GY * Bm.transpose());
      }
      if (gb) {
        Map GB(gb->ptr() + i * K * N, K, N);
        GB.noalias() += alpha * (A.transpose() * GY);
      }
    }
  }
}

Tensor softmax_fwd(const Tensor& x) {
  const int64_t n = x.dim(x.ndim() - 1);
  const int64_t R = x.numel() / n;
  Tensor y(x.shape);
  for (int64_t r = 0; r < R; ++r) {
    const double* xp = x.ptr() + r * n;
    double* yp = y.ptr() + r * n;
    double mx = xp[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, xp[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      yp[j] = std::exp(xp[j] - mx);
      sum += yp[j];
    }
    const double inv = 1.0 / sum;
    for (int64_t j = 0; j < n; ++j) yp[j] *= inv;
  }
  return y;
}

void softmax_bwd(const Tensor& y, const Tensor& gy, Tensor* gx) {
  const int64_t n = y.dim(y.ndim() - 1);
  const int64_t R = y.numel() / n;
  for (int64_t r = 0; r < R; ++r) {
    const double* yp = y.ptr() + r * n;
    const double* gp = gy.ptr() + r * n;
    double* gxp = gx->ptr() + r * n;
    double dot = 0.0;
    for (int64_t j = 0; j < n; ++j) dot += gp[j] * yp[j];
    for (int64_t j = 0; j < n; ++j) gxp[j] += yp[j] * (gp[j] - dot);
  }
}

Tensor rope_fwd(const Tensor& x, double base) {
  IFCN_CHECK(x.ndim() == 3 && x.dim(2) % 2 == 0, "rope: need (B,L,D) with even D");
  const int64_t B = x.dim(0), L = x.dim(1), D = x.dim(2), P = D / 2;
  std::vector<double> cs(static_cast<size_t>(L * P)), sn(static_cast<size_t>(L * P));
  for (int64_t p = 0; p < P; ++p) {
    const double invf = std::pow(base, -2.0 * static_cast<double>(p) / static_cast<double>(D));
    for (int64_t l = 0; l < L; ++l) {
      const double th = static_cast<double>(l) * invf;
      cs[static_cast<size_t>(l * P + p)] = std::cos(th);
      sn[static_cast<size_t>(l * P + p)] = std::sin(th);
    }
  }
  Tensor y(x.shape);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t l = 0; l < L; ++l) {
      const double* xp = x.ptr() + (b * L + l) * D;
      double* yp = y.ptr() + (b * L + l) * D;
      for (int64_t p = 0; p < P; ++p) {
        const double c = cs[static_cast<size_t>(l * P + p)];
        const double s = sn[static_cast<size_t>(l * P + p)];
        const double x0 = xp[2 * p], x1 = xp[2 * p + 1];
        yp[2 * p] = x0 * c - x1 * s;
        yp[2 * p + 1] = x0 * s + x1 * c;
      }
    }
  }
  return y;
}

void rope_bwd(const Tensor& gy, double base, Tensor* gx) {
  const int64_t B = gy.dim(0), L = gy.dim(1), D = gy.dim(2), P = D / 2;
  std::vector<double> cs(static_cast<size_t>(L * P)), sn(static_cast<size_t>(L * P));
  for (int64_t p = 0; p < P; ++p) {
    const double invf = std::pow(base, -2.0 * static_cast<double>(p) / static_cast<double>(D));
    for (int64_t l = 0; l < L; ++l) {
      const double th = static_cast<double>(l) * invf;
      cs[static_cast<size_t>(l * P + p)] = std::cos(th);
      sn[static_cast<size_t>(l * P + p)] = std::sin(th);
    }
  }
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t l = 0; l < L; ++l) {
      const double* gp = gy.ptr() + (b * L + l) * D;
      double* gxp = gx->ptr() + (b * L + l) * D;
      for (int64_t p = 0; p < P; ++p) {
        const double c = cs[static_cast<size_t>(l * P + p)];
        const double s = sn[static_cast<size_t>(l * P + p)];
        const double g0 = gp[2 * p], g1 = gp[2 * p + 1];
        gxp[2 * p] += g0 * c + g1 * s;
        gxp[2 * p + 1] += -g0 * s + g1 * c;
      }
    }
  }
}

// ---- filtering / transforms ----

Tensor apply_filter_fwd(const Tensor& wch, const Tensor& sre, const Tensor& sim) {
  IFCN_CHECK(wch.ndim() == 3 && sre.ndim() == 3 && sim.ndim() == 3, "apply_filter: rank mismatch");
  check_same_shape(sre, sim, "apply_filter");
  const int64_t T = sre.dim(0), F = sre.dim(1), taps = sre.dim(2);
  IFCN_CHECK(wch.dim(0) == 2 * taps && wch.dim(1) == T && wch.dim(2) == F,
             "apply_filter: filter/stack shape mismatch");

  Tensor y({2, T, F});
  const int64_t TF = T * F;
  for (int64_t tf = 0; tf < TF; ++tf) {
    const double* xr = sre.ptr() + tf * taps;
    const double* xi = sim.ptr() + tf * taps;
    double yre = 0.0, yim = 0.0;
    for (int64_t m = 0; m < taps; ++m) {
      const double wr = wch.data[static_cast<size_t>(m * TF + tf)];
      const double wi = wch.data[static_cast<size_t>((taps + m) * TF + tf)];
      yre += wr * xr[m] - wi * xi[m];
      yim += wr * xi[m] + wi * xr[m];
    }
    y.data[static_cast<size_t>(tf)] = yre;
    y.data[static_cast<size_t>(TF + tf)] = yim;
  }
  return y;
}

void apply_filter_bwd(const Tensor& sre, const Tensor& sim, const Tensor& gy,
                      Tensor* gw) {
  const int64_t T = sre.dim(0), F = sre.dim(1), taps = sre.dim(2);
  const int64_t TF = T * F;
  for (int64_t tf = 0; tf < TF; ++tf) {
    const double* xr = sre.ptr() + tf * taps;
    const double* xi = sim.ptr() + tf * taps;
    const double gre = gy.data[static_cast<size_t>(tf)];
    const double gim = gy.data[static_cast<size_t>(TF + tf)];
    for (int64_t m = 0; m < taps; ++m) {
      gw->data[static_cast<size_t>(m * TF + tf)] += gre * xr[m] + gim * xi[m];
      gw->data[static_cast<size_t>((taps + m) * TF + tf)] += -gre * xi[m] + gim * xr[m];
    }
  }
}

Tensor istft_fwd(const Tensor& y, const StftMeta& m) {
  IFCN_CHECK(y.ndim() == 3 && y.dim(0) == 2, "istft_fwd: need (2,T,F)");
  const int64_t T = y.dim(1), F = y.dim(2);
  IFCN_CHECK(F == m.n_fft / 2 + 1, "istft_fwd: bin count mismatch");
  IFCN_CHECK(T == stft_num_frames(m.orig_len, m.hop), "istft_fwd: frame count mismatch");

  ComplexSpectrogram S;
  S.n_fft = m.n_fft;
  S.hop = m.hop;
  S.orig_len = m.orig_len;
  S.T = T;
  S.F = F;
  S.values.resize(static_cast<size_t>(T * F));
  const int64_t TF = T * F;
  for (int64_t k = 0; k < TF; ++k) {
    S.values[static_cast<size_t>(k)] = {y.data[static_cast<size_t>(k)],
                                        y.data[static_cast<size_t>(TF + k)]};
  }
  Waveform w = istft(S);
  Tensor out({m.orig_len});
  std::copy(w.samples.begin(), w.samples.end(), out.data.begin());
  return out;
}

void istft_bwd(const StftMeta& m, const Tensor& gwave, Tensor* gy) {
  const int64_t T = stft_num_frames(m.orig_len, m.hop);
  const int64_t F = m.n_fft / 2 + 1;
  const int pad = m.n_fft / 2;
  const int64_t padded_len = m.orig_len + m.n_fft;
  const std::vector<double> win = hann_window(m.n_fft);
  const std::vector<double> den = wola_denominator(win, m.hop, T, padded_len);

  std::vector<double> gacc(static_cast<size_t>(padded_len), 0.0);
  for (int64_t i = 0; i < m.orig_len; ++i) {
    gacc[static_cast<size_t>(i + pad)] =
        gwave.data[static_cast<size_t>(i)] / std::max(den[static_cast<size_t>(i + pad)], 1e-12);
  }

  std::vector<double> gframe(static_cast<size_t>(m.n_fft));
  std::vector<std::complex<double>> G(static_cast<size_t>(F));
  const int64_t TF = T * F;
  for (int64_t t = 0; t < T; ++t) {
    const int64_t start = t * m.hop;
    for (int i = 0; i < m.n_fft; ++i) {
      gframe[static_cast<size_t>(i)] =
          (start + i < padded_len)
              ? gacc[static_cast<size_t>(start + i)] * win[static_cast<size_t>(i)] / m.n_fft
              : 0.0;
    }
    rfft(gframe.data(), G.data(), m.n_fft);
    for (int64_t k = 0; k < F; ++k) {
      // Spectrum entries for 0 < k < n_fft/2 appear twice in the implied
      // two-sided transform; DC and Nyquist once, with no imaginary freedom.
      const bool edge = (k == 0 || k == F - 1);
      const double mult = edge ? 1.0 : 2.0;
      gy->data[static_cast<size_t>(t * F + k)] += mult * G[static_cast<size_t>(k)].real();
      if (!edge) {
        gy->data[static_cast<size_t>(TF + t * F + k)] += mult * G[static_cast<size_t>(k)].imag();
      }
    }
  }
}

Tensor stft_fwd(const Tensor& wave, int n_fft, int hop) {
  IFCN_CHECK(wave.ndim() == 1, "stft_fwd: need 1-D waveform");
  Waveform w;
  w.samples = wave.data;
  ComplexSpectrogram S = stft(w, n_fft, hop);
  Tensor y({2, S.T, S.F});
  const int64_t TF = S.T * S.F;
  for (int64_t k = 0; k < TF; ++k) {
    y.data[static_cast<size_t>(k)] = S.values[static_cast<size_t>(k)].real();
    y.data[static_cast<size_t>(TF + k)] = S.values[static_cast<size_t>(k)].imag();
  }
  return y;
}

void stft_bwd(int n_fft, int hop, int64_t len, const Tensor& gY, Tensor* gwave) {
  const int64_t T = stft_num_frames(len, hop);
  const int64_t F = n_fft / 2 + 1;
  const int pad = n_fft / 2;
  const int64_t plen = len + 2 * pad;
  const std::vector<double> win = hann_window(n_fft);

  std::vector<double> gpad(static_cast<size_t>(plen), 0.0);
  std::vector<std::complex<double>> c(static_cast<size_t>(F));
  std::vector<double> gframe(static_cast<size_t>(n_fft));
  const int64_t TF = T * F;
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t k = 0; k < F; ++k) {
      const bool edge = (k == 0 || k == F - 1);
      const double mult = edge ? 1.0 : 2.0;
      c[static_cast<size_t>(k)] = {
          gY.data[static_cast<size_t>(t * F + k)] / mult,
          edge ? 0.0 : gY.data[static_cast<size_t>(TF + t * F + k)] / mult};
    }
    irfft(c.data(), gframe.data(), n_fft);
    const int64_t start = t * hop;
    for (int i = 0; i < n_fft; ++i) {
      gpad[static_cast<size_t>(start + i)] += gframe[static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
    }
  }
  // Fold the padding gradient back through the reflection.
  for (int64_t j = 0; j < plen; ++j) {
    int64_t src = j - pad;
    if (src < 0) src = -src;
    if (src >= len) src = 2 * (len - 1) - src;
    gwave->data[static_cast<size_t>(src)] += gpad[static_cast<size_t>(j)];
  }
}

// ---- reductions ----

double l1_mean(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l1_mean");
  IFCN_CHECK(a.numel() > 0, "l1_mean: empty input");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.numel());
}

void l1_mean_bwd(const Tensor& a, const Tensor& b, double g, Tensor* ga) {
  const double inv = g / static_cast<double>(a.numel());
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    if (d > 0.0) {
      ga->data[i] += inv;
    } else if (d < 0.0) {
      ga->data[i] -= inv;
    }
  }
}

}  // namespace ops
}  // namespace ifcn
