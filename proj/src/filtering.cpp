// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/filtering.hpp"

#include <Eigen/Dense>

namespace ifcn {

DeepFilter filter_from_head(const Tensor& head, OutputVariant variant, int L) {
  IFCN_CHECK(head.ndim() == 3, "filter_from_head: head must be (channels, T, F)");
  const int taps = variant == OutputVariant::kMfFilter ? 2 * L + 1 : 1;
  IFCN_CHECK(head.dim(0) == 2 * taps, "filter_from_head: channel count mismatch");
  DeepFilter w;
  w.L = variant == OutputVariant::kMfFilter ? L : 0;
  w.T = head.dim(1);
  w.F = head.dim(2);
  w.variant = variant;
  w.w.resize(static_cast<size_t>(w.T * w.F * taps));
  const int64_t TF = w.T * w.F;
  for (int64_t tf = 0; tf < TF; ++tf) {
    for (int m = 0; m < taps; ++m) {
      w.w[static_cast<size_t>(tf * taps + m)] = {
          head.data[static_cast<size_t>(m * TF + tf)],
          head.data[static_cast<size_t>((taps + m) * TF + tf)]};
    }
  }
  return w;
}

FilteredSpectrum apply_filter(const DeepFilter& w, const MultiFrameStack& stack,
                              const ComplexSpectrogram& geometry) {
  FilteredSpectrum out;
  out.source = w.variant;
  out.Y = geometry;
  IFCN_CHECK(w.T == geometry.T && w.F == geometry.F, "apply_filter: shape mismatch");

  if (w.variant == OutputVariant::kMapping) {
    for (int64_t t = 0; t < w.T; ++t)
      for (int64_t f = 0; f < w.F; ++f) out.Y.at(t, f) = w.at(t, f, 0);
    return out;
  }

  IFCN_CHECK(w.taps() == stack.taps() && w.T == stack.T && w.F == stack.F,
             "apply_filter: filter and stack tap counts differ");
  const int taps = w.taps();
  for (int64_t t = 0; t < w.T; ++t) {
    for (int64_t f = 0; f < w.F; ++f) {
      std::complex<double> acc = 0.0;
      for (int m = 0; m < taps; ++m) acc += w.at(t, f, m) * stack.at(t, f, m);
      out.Y.at(t, f) = acc;
    }
  }
  return out;
}

namespace {

double lambda_for(const Eigen::MatrixXcd& AhA, int taps) {
  return 1e-6 * AhA.trace().real() / taps;
}

}  // namespace

DeepFilter oracle_ls_filter(const MultiFrameStack& stack, const ComplexSpectrogram& target,
                            bool per_frequency) {
  IFCN_CHECK(stack.T == target.T && stack.F == target.F, "oracle: shape mismatch");
  const int taps = stack.taps();
  IFCN_CHECK(stack.T >= taps, "oracle: need at least as many frames as taps");

  DeepFilter w;
  w.L = stack.L;
  w.T = stack.T;
  w.F = stack.F;
  w.variant = stack.L == 0 ? OutputVariant::kSfMask : OutputVariant::kMfFilter;
  w.w.assign(static_cast<size_t>(w.T * w.F * taps), {0.0, 0.0});

  auto broadcast = [&](int64_t f, const Eigen::VectorXcd& wf) {
    for (int64_t t = 0; t < w.T; ++t)
      for (int m = 0; m < taps; ++m) w.at(t, f, m) = wf(m);
  };

  if (per_frequency) {
    for (int64_t f = 0; f < stack.F; ++f) {
      Eigen::MatrixXcd AhA = Eigen::MatrixXcd::Zero(taps, taps);
      Eigen::VectorXcd Ahb = Eigen::VectorXcd::Zero(taps);
      Eigen::VectorXcd x(taps);
      for (int64_t t = 0; t < stack.T; ++t) {
        for (int m = 0; m < taps; ++m) x(m) = stack.at(t, f, m);
        AhA.noalias() += x.conjugate() * x.transpose();
        Ahb.noalias() += x.conjugate() * target.at(t, f);
      }
      const double lam = lambda_for(AhA, taps);
      if (lam <= 0.0) continue;  // silent bin, zero filter
      AhA.diagonal().array() += lam;
      broadcast(f, AhA.ldlt().solve(Ahb));
    }
  } else {
    Eigen::MatrixXcd AhA = Eigen::MatrixXcd::Zero(taps, taps);
    Eigen::VectorXcd Ahb = Eigen::VectorXcd::Zero(taps);
    Eigen::VectorXcd x(taps);
    for (int64_t t = 0; t < stack.T; ++t) {
      for (int64_t f = 0; f < stack.F; ++f) {
        for (int m = 0; m < taps; ++m) x(m) = stack.at(t, f, m);
        AhA.noalias() += x.conjugate() * x.transpose();
        Ahb.noalias() += x.conjugate() * target.at(t, f);
      }
    }
    const double lam = lambda_for(AhA, taps);
    if (lam > 0.0) {
      AhA.diagonal().array() += lam;
      Eigen::VectorXcd wf = AhA.ldlt().solve(Ahb);
      for (int64_t f = 0; f < stack.F; ++f) broadcast(f, wf);
    }
  }
  return w;
}

double oracle_objective(const DeepFilter& w, const MultiFrameStack& stack,
                        const ComplexSpectrogram& target) {
  const int taps = stack.taps();
  IFCN_CHECK(w.taps() == taps && w.T == stack.T && w.F == stack.F,
             "oracle_objective: shape mismatch");
  double obj = 0.0;
  for (int64_t f = 0; f < stack.F; ++f) {
    double trace = 0.0;
    for (int64_t t = 0; t < stack.T; ++t)
      for (int m = 0; m < taps; ++m) trace += std::norm(stack.at(t, f, m));
    const double lam = 1e-6 * trace / taps;
    for (int64_t t = 0; t < stack.T; ++t) {
      std::complex<double> acc = 0.0;
      for (int m = 0; m < taps; ++m) acc += w.at(t, f, m) * stack.at(t, f, m);
      obj += std::norm(acc - target.at(t, f));
    }
    // Time-invariant filter: the penalty reads the first frame's copy.
    for (int m = 0; m < taps; ++m) obj += lam * std::norm(w.at(0, f, m));
  }
  return obj;
}

}  // namespace ifcn
