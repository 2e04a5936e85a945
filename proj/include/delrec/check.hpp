#pragma once

#include <stdexcept>
#include <string>

namespace delrec {

// Raised when arithmetic goes bad at runtime (NaN loss, oracle deviation,
// failed gradient verification); the CLI maps it to exit code 2.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contract failures surface as exceptions; the CLI maps them to exit codes.
[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

[[noreturn]] inline void fail_arg(const std::string& msg) {
  throw std::invalid_argument(msg);
}

}  // namespace delrec

#define DELREC_CHECK(cond, msg) \
  do {                          \
    if (!(cond)) ::delrec::fail(msg); \
  } while (0)

#define DELREC_CHECK_ARG(cond, msg) \
  do {                              \
    if (!(cond)) ::delrec::fail_arg(msg); \
  } while (0)
