#pragma once

#include <cmath>
#include <string>

#include "delrec/rng.hpp"
#include "delrec/tensor.hpp"

namespace delrec {

enum class InitKind {
  zeros,
  default_uniform,   // U(+-sqrt(1/fan_in)), linear weights and biases
  kaiming_uniform,   // U(+-sqrt(6/fan_in))
  bias_uniform,      // U(+-1/sqrt(fan_in))
  uniform_range,     // U(a, b)
  half_gaussian,     // |N(0, a^2)|
};

InitKind init_kind_from_string(const std::string& s);

// Fills t elementwise. `a`/`b` carry the distribution parameters: fan_in for
// the fan-based kinds, (lo, hi) for uniform_range, the sd for half_gaussian.
inline void init_params(InitKind kind, Tensor& t, Rng& rng, double a = 0.0,
                        double b = 0.0) {
  switch (kind) {
    case InitKind::zeros:
      t.zero();
      return;
    case InitKind::default_uniform: {
      DELREC_CHECK_ARG(a > 0.0, "init_params: fan_in must be positive");
      const double bound = std::sqrt(1.0 / a);
      for (std::size_t e = 0; e < t.size(); ++e)
        t(e) = rng.uniform(-bound, bound);
      return;
    }
    case InitKind::kaiming_uniform: {
      DELREC_CHECK_ARG(a > 0.0, "init_params: fan_in must be positive");
      const double bound = std::sqrt(6.0 / a);
      for (std::size_t e = 0; e < t.size(); ++e)
        t(e) = rng.uniform(-bound, bound);
      return;
    }
    case InitKind::bias_uniform: {
      DELREC_CHECK_ARG(a > 0.0, "init_params: fan_in must be positive");
      const double bound = 1.0 / std::sqrt(a);
      for (std::size_t e = 0; e < t.size(); ++e)
        t(e) = rng.uniform(-bound, bound);
      return;
    }
    case InitKind::uniform_range:
      DELREC_CHECK_ARG(b >= a, "init_params: empty uniform range");
      for (std::size_t e = 0; e < t.size(); ++e) t(e) = rng.uniform(a, b);
      return;
    case InitKind::half_gaussian:
      DELREC_CHECK_ARG(a >= 0.0, "init_params: negative sd");
      for (std::size_t e = 0; e < t.size(); ++e) t(e) = rng.half_normal(a);
      return;
  }
  fail_arg("init_params: unknown init kind");
}

inline InitKind init_kind_from_string(const std::string& s) {
  if (s == "zeros") return InitKind::zeros;
  if (s == "default_uniform") return InitKind::default_uniform;
  if (s == "kaiming_uniform") return InitKind::kaiming_uniform;
  if (s == "bias_uniform") return InitKind::bias_uniform;
  if (s == "uniform") return InitKind::uniform_range;
  if (s == "half_gaussian") return InitKind::half_gaussian;
  fail_arg("unknown init kind '" + s + "'");
}

}  // namespace delrec
