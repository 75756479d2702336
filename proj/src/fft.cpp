// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>

namespace ifcn {
namespace {

struct PlanCache {
  std::mutex mu;
  std::map<int, fftw_plan> r2c;
  std::map<int, fftw_plan> c2r;
  std::map<int, fftw_plan> c2c_fwd;
  std::map<int, fftw_plan> c2c_bwd;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_plan get_plan(std::map<int, fftw_plan>& m, int n, int kind) {
  PlanCache& c = cache();
  std::lock_guard<std::mutex> lock(c.mu);
  auto it = m.find(n);
  if (it != m.end()) return it->second;
  // Scratch buffers only for planning; execution uses the new-array API.
  fftw_plan p = nullptr;
  if (kind == 0) {
    double* ri = fftw_alloc_real(static_cast<size_t>(n));
    fftw_complex* co = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    p = fftw_plan_dft_r2c_1d(n, ri, co, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(ri);
    fftw_free(co);
  } else if (kind == 1) {
    fftw_complex* ci = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    double* ro = fftw_alloc_real(static_cast<size_t>(n));
    p = fftw_plan_dft_c2r_1d(n, ci, ro, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(ci);
    fftw_free(ro);
  } else {
    fftw_complex* b = fftw_alloc_complex(static_cast<size_t>(n));
    p = fftw_plan_dft_1d(n, b, b, kind == 2 ? FFTW_FORWARD : FFTW_BACKWARD,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(b);
  }
  m.emplace(n, p);
  return p;
}

}  // namespace

void rfft(const double* in, std::complex<double>* out, int n) {
  fftw_plan p = get_plan(cache().r2c, n, 0);
  // r2c with out-of-place buffers preserves the input; const_cast is safe.
  fftw_execute_dft_r2c(p, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void irfft(const std::complex<double>* in, double* out, int n) {
  fftw_plan p = get_plan(cache().c2r, n, 1);
  // c2r may clobber its input, so run it on a local copy.
  std::vector<std::complex<double>> tmp(in, in + (n / 2 + 1));
  tmp[0] = std::complex<double>(tmp[0].real(), 0.0);
  if (n % 2 == 0) tmp[static_cast<size_t>(n / 2)] = std::complex<double>(tmp[static_cast<size_t>(n / 2)].real(), 0.0);
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(tmp.data()), out);
}

void cfft(std::complex<double>* buf, int n, int sign) {
  fftw_plan p = sign < 0 ? get_plan(cache().c2c_fwd, n, 2)
                         : get_plan(cache().c2c_bwd, n, 3);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf),
                   reinterpret_cast<fftw_complex*>(buf));
}

}  // namespace ifcn
