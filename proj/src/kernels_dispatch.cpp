#include <cstdlib>

#include "delrec/check.hpp"
#include "delrec/kernels.hpp"

namespace delrec::kernels {

const Backend& resolve_backend(const std::string& mode) {
  if (mode == "scalar") return scalar_backend();
  if (mode == "avx2") {
    DELREC_CHECK(avx2_compiled(), "DELREC_SIMD=avx2 but AVX2 not compiled in");
    DELREC_CHECK(avx2_supported(),
                 "DELREC_SIMD=avx2 but the CPU lacks AVX2/FMA");
    return avx2_backend();
  }
  if (mode == "auto" || mode.empty()) {
    if (avx2_compiled() && avx2_supported()) return avx2_backend();
    return scalar_backend();
  }
  fail_arg("DELREC_SIMD: unknown mode '" + mode + "' (scalar|avx2|auto)");
}

const Backend& active_backend() {
  static const Backend& backend = [] -> const Backend& {
    const char* env = std::getenv("DELREC_SIMD");
    return resolve_backend(env ? env : "auto");
  }();
  return backend;
}

}  // namespace delrec::kernels
