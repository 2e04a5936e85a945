#include "delrec/kernels.hpp"

#include "delrec/check.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define DELREC_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define DELREC_HAVE_AVX2_TU 0
#endif

// This translation unit is compiled with -mavx2 -mfma; nothing here may be
// called unless the CPU reports both features at runtime.

namespace delrec::kernels {

#if DELREC_HAVE_AVX2_TU
namespace {

// Plain mul+add (no FMA) so results stay bit-compatible with the scalar
// reference; the buffered/dense equivalence checks lean on that.
void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void lif_charge_avx2(std::size_t n, double leak, double gain, const double* v,
                     const double* x, double* h) {
  const __m256d vleak = _mm256_set1_pd(leak);
  const __m256d vgain = _mm256_set1_pd(gain);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lv = _mm256_mul_pd(vleak, _mm256_loadu_pd(v + i));
    const __m256d gx = _mm256_mul_pd(vgain, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(h + i, _mm256_add_pd(lv, gx));
  }
  for (; i < n; ++i) h[i] = leak * v[i] + gain * x[i];
}

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      __m256d acc = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p), _mm256_loadu_pd(bj + p),
                              acc);
      double s = hsum(acc);
      for (; p < k; ++p) s += ai[p] * bj[p];
      double* cij = c + i * n + j;
      *cij = accumulate ? *cij + s : s;
    }
  }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const __m256d va = _mm256_set1_pd(aip);
      const double* bp = b + p * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d cj = _mm256_loadu_pd(ci + j);
        _mm256_storeu_pd(ci + j,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), cj));
      }
      for (; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      const __m256d va = _mm256_set1_pd(api);
      double* ci = c + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d cj = _mm256_loadu_pd(ci + j);
        _mm256_storeu_pd(ci + j,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), cj));
      }
      for (; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

}  // namespace

bool avx2_compiled() { return true; }

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Backend& avx2_backend() {
  static const Backend backend{
      "avx2",        axpy_avx2,    lif_charge_avx2,
      gemm_nt_avx2,  gemm_nn_avx2, gemm_tn_avx2,
  };
  return backend;
}

#else

bool avx2_compiled() { return false; }
bool avx2_supported() { return false; }

const Backend& avx2_backend() {
  fail("AVX2 backend not compiled in on this architecture");
}

#endif

}  // namespace delrec::kernels
