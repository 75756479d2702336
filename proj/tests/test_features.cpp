// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <complex>

#include <Eigen/Dense>

#include "doctest.h"

#include "ifcorrnet/features.hpp"
#include "ifcorrnet/rng.hpp"

using namespace ifcn;

namespace {

ComplexSpectrogram random_spec(int64_t T, int64_t F, uint64_t seed) {
  ComplexSpectrogram X;
  X.n_fft = 2 * (static_cast<int>(F) - 1);
  X.hop = X.n_fft / 2;
  X.orig_len = (T - 1) * X.hop;
  X.T = T;
  X.F = F;
  X.values.resize(static_cast<size_t>(T * F));
  Rng rng(seed);
  for (auto& z : X.values) z = {rng.normal(), rng.normal()};
  return X;
}

using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

CMat corr_matrix(const CorrelationTensor& Z, int64_t t, int64_t f) {
  const int n = Z.taps();
  CMat M(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) M(r, c) = Z.at(t, f, r, c);
  }
  return M;
}

}  // namespace

TEST_CASE("stack taps map to neighboring frames") {
  const auto X = random_spec(9, 5, 11);
  const int L = 2;
  const auto s = build_stack(X, L);
  CHECK(s.taps() == 5);
  for (int64_t t = 0; t < X.T; ++t) {
    for (int64_t f = 0; f < X.F; ++f) {
      for (int m = 0; m < s.taps(); ++m) {
        const int64_t src = t - L + m;
        const std::complex<double> want =
            (src >= 0 && src < X.T) ? X.at(src, f) : std::complex<double>(0.0, 0.0);
        CHECK(s.at(t, f, m) == want);
      }
    }
  }
}

TEST_CASE("stack center tap is the current frame") {
  const auto X = random_spec(6, 4, 3);
  for (int L : {0, 1, 3}) {
    const auto s = build_stack(X, L);
    for (int64_t t = 0; t < X.T; ++t) {
      for (int64_t f = 0; f < X.F; ++f) CHECK(s.at(t, f, L) == X.at(t, f));
    }
  }
}

TEST_CASE("correlation is Hermitian, PSD, and rank one") {
  for (int L : {0, 1, 3}) {
    const auto X = random_spec(8, 6, 40 + static_cast<uint64_t>(L));
    const auto Z = correlate(build_stack(X, L));
    const int n = Z.taps();
    for (int64_t t = 0; t < X.T; t += 3) {
      for (int64_t f = 0; f < X.F; f += 2) {
        const CMat M = corr_matrix(Z, t, f);
        CHECK((M - M.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<CMat> es(M);
        const auto& ev = es.eigenvalues();
        const double scale = std::max(1.0, ev(n - 1));
        CHECK(ev(0) >= -1e-9 * scale);
        // Rank one: all but the top eigenvalue vanish.
        for (int i = 0; i + 1 < n; ++i) CHECK(std::abs(ev(i)) <= 1e-9 * scale);
      }
    }
  }
}

TEST_CASE("correlation diagonal carries squared magnitudes") {
  const auto X = random_spec(5, 4, 99);
  const int L = 1;
  const auto s = build_stack(X, L);
  const auto Z = correlate(s);
  for (int64_t t = 0; t < X.T; ++t) {
    for (int64_t f = 0; f < X.F; ++f) {
      for (int m = 0; m < Z.taps(); ++m) {
        CHECK(Z.at(t, f, m, m).real() == doctest::Approx(std::norm(s.at(t, f, m))));
        CHECK(Z.at(t, f, m, m).imag() == doctest::Approx(0.0));
      }
    }
  }
}

TEST_CASE("phat weighting preserves phase and compresses magnitude") {
  const auto X = random_spec(6, 5, 17);
  auto Z = correlate(build_stack(X, 2));
  const auto raw = Z;
  const double beta = 0.5, eps = 1e-8;
  phat_beta_weight(Z, beta, eps);
  CHECK(Z.weighted);
  CHECK(Z.beta == beta);
  for (size_t i = 0; i < Z.m.size(); ++i) {
    const auto z0 = raw.m[i];
    const auto z1 = Z.m[i];
    const double mag0 = std::abs(z0);
    if (mag0 < 1e-12) {
      CHECK(std::abs(z1) == 0.0);
      continue;
    }
    CHECK(std::abs(z1) == doctest::Approx(mag0 / std::pow(std::max(mag0, eps), beta)));
    // Phase untouched: z1 is a positive real multiple of z0.
    const std::complex<double> ratio = z1 / z0;
    CHECK(ratio.imag() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ratio.real() > 0.0);
  }
}

TEST_CASE("phat beta=1 gives unit modulus, beta=0 is identity") {
  const auto X = random_spec(4, 4, 23);
  auto Z1 = correlate(build_stack(X, 1));
  const auto raw = Z1;
  phat_beta_weight(Z1, 1.0);
  for (size_t i = 0; i < Z1.m.size(); ++i) {
    if (std::abs(raw.m[i]) > 1e-6) CHECK(std::abs(Z1.m[i]) == doctest::Approx(1.0));
  }
  auto Z0 = raw;
  phat_beta_weight(Z0, 0.0);
  for (size_t i = 0; i < Z0.m.size(); ++i) {
    CHECK(std::abs(Z0.m[i] - raw.m[i]) <= 1e-12 * std::max(1.0, std::abs(raw.m[i])));
  }
}

TEST_CASE("flatten layout and channel count") {
  const auto X = random_spec(5, 3, 8);
  const int L = 1;
  auto Z = correlate(build_stack(X, L));
  phat_beta_weight(Z, 0.5);
  const auto ni = flatten_input(Z);
  const int taps = 2 * L + 1;
  CHECK(ni.channels == 2 * taps * taps);
  CHECK(ni.T == X.T);
  CHECK(ni.F == X.F);
  // Channel c < taps^2 is Re Z at (row, col) = (c / taps, c % taps); the
  // imaginary block follows in the same order.
  for (int64_t t = 0; t < ni.T; ++t) {
    for (int64_t f = 0; f < ni.F; ++f) {
      for (int r = 0; r < taps; ++r) {
        for (int c = 0; c < taps; ++c) {
          const int64_t ch = static_cast<int64_t>(r) * taps + c;
          const double re = ni.tensor.data[static_cast<size_t>((ch * ni.T + t) * ni.F + f)];
          const double im = ni.tensor.data[static_cast<size_t>(
              ((ch + taps * taps) * ni.T + t) * ni.F + f)];
          CHECK(re == doctest::Approx(Z.at(t, f, r, c).real()));
          CHECK(im == doctest::Approx(Z.at(t, f, r, c).imag()));
        }
      }
    }
  }
  const auto back = unflatten_input(ni, L);
  for (size_t i = 0; i < Z.m.size(); ++i) CHECK(back.m[i] == Z.m[i]);
}

TEST_CASE("raw input carries Re and Im planes") {
  const auto X = random_spec(4, 6, 5);
  const auto ni = raw_input(X);
  CHECK(ni.channels == 2);
  for (int64_t t = 0; t < X.T; ++t) {
    for (int64_t f = 0; f < X.F; ++f) {
      CHECK(ni.tensor.data[static_cast<size_t>(t * X.F + f)] ==
            doctest::Approx(X.at(t, f).real()));
      CHECK(ni.tensor.data[static_cast<size_t>((X.T + t) * X.F + f)] ==
            doctest::Approx(X.at(t, f).imag()));
    }
  }
}
