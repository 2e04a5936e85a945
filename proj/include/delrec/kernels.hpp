#pragma once

#include <cstddef>
#include <string>

namespace delrec::kernels {

// Hot inner loops, selected once at startup. Every entry has a scalar
// reference implementation and (on x86-64 with AVX2+FMA) a vectorized one;
// the two are equivalence-tested against each other.
//
// Matrix arguments are row-major and contiguous.
struct Backend {
  const char* name;

  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);

  // h[i] = leak * v[i] + gain * x[i]
  void (*lif_charge)(std::size_t n, double leak, double gain, const double* v,
                     const double* x, double* h);

  // C(m,n) = A(m,k) * B(n,k)^T        (accumulate: C += ...)
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);

  // C(m,n) = A(m,k) * B(k,n)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);

  // C(m,n) = A(k,m)^T * B(k,n)
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
};

const Backend& scalar_backend();

bool avx2_compiled();   // built with the AVX2 translation unit
bool avx2_supported();  // CPU reports AVX2+FMA at runtime
const Backend& avx2_backend();  // throws if !avx2_compiled()

// Active backend for this process. Honors DELREC_SIMD=scalar|avx2|auto
// (default auto: AVX2 when compiled in and supported). Resolved once.
const Backend& active_backend();

// Resolution logic, exposed for tests; `mode` as in DELREC_SIMD.
const Backend& resolve_backend(const std::string& mode);

}  // namespace delrec::kernels
