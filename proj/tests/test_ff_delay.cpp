#include <doctest.h>

#include <cmath>

#include "delrec/init.hpp"
#include "delrec/layers.hpp"
#include "delrec/rng.hpp"

using namespace delrec;

namespace {

// Brute-force reference: each synapse as an explicit temporal kernel over
// delay taps, convolved with the input train.
Tensor conv_kernel_oracle(const Tensor& w, const Tensor& d, const Tensor& in) {
  const std::size_t t_steps = in.dim(0), batch = in.dim(1);
  const std::size_t out_n = w.dim(0), in_n = w.dim(1);
  Tensor out(t_steps, batch, out_n);
  for (std::size_t i = 0; i < out_n; ++i)
    for (std::size_t j = 0; j < in_n; ++j) {
      const long k = static_cast<long>(std::floor(d(i, j)));
      const double f = d(i, j) - static_cast<double>(k);
      // kernel taps: weight (1-f) at lag k, weight f at lag k+1
      for (std::size_t t = 0; t < t_steps; ++t)
        for (std::size_t b = 0; b < batch; ++b) {
          double acc = 0.0;
          if (static_cast<long>(t) - k >= 0)
            acc += (1.0 - f) * in(static_cast<std::size_t>(t - k), b, j);
          if (static_cast<long>(t) - k - 1 >= 0)
            acc += f * in(static_cast<std::size_t>(t - k - 1), b, j);
          out(t, b, i) += w(i, j) * acc;
        }
    }
  return out;
}

}  // namespace

TEST_CASE("zero delays reduce to a plain linear map") {
  Rng rng(1);
  FeedforwardDelayLayer ffd("ffd", 3, 2);
  for (std::size_t e = 0; e < ffd.weight().value.size(); ++e)
    ffd.weight().value(e) = rng.uniform(-1.0, 1.0);

  Tensor in(6, 2, 3);
  for (std::size_t e = 0; e < in.size(); ++e) in(e) = rng.uniform(0.0, 1.0);
  Context ctx;
  const Tensor out = ffd.forward(in, ctx);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t i = 0; i < 2; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
          acc += ffd.weight().value(i, j) * in(t, b, j);
        CHECK(out(t, b, i) == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("single synapse interpolation") {
  FeedforwardDelayLayer ffd("ffd", 1, 1);
  ffd.weight().value(0, 0) = 1.0;
  ffd.delays().value(0, 0) = 2.25;
  Tensor in(12, 1, 1);
  in(5, 0, 0) = 1.0;
  Context ctx;
  const Tensor out = ffd.forward(in, ctx);
  CHECK(out(7, 0, 0) == doctest::Approx(0.75));
  CHECK(out(8, 0, 0) == doctest::Approx(0.25));
  CHECK(out(6, 0, 0) == 0.0);
  CHECK(out(9, 0, 0) == 0.0);
}

TEST_CASE("matches the temporal-kernel convolution oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in_n = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const std::size_t out_n = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const std::size_t t_steps =
        static_cast<std::size_t>(rng.uniform_int(4, 24));
    FeedforwardDelayLayer ffd("ffd", in_n, out_n);
    for (std::size_t e = 0; e < ffd.weight().value.size(); ++e)
      ffd.weight().value(e) = rng.uniform(-1.0, 1.0);
    for (std::size_t e = 0; e < ffd.delays().value.size(); ++e)
      ffd.delays().value(e) = rng.uniform(0.0, 8.0);

    Tensor in(t_steps, 2, in_n);
    for (std::size_t e = 0; e < in.size(); ++e)
      in(e) = rng.bernoulli(0.3) ? 1.0 : 0.0;
    Context ctx;
    const Tensor got = ffd.forward(in, ctx);
    const Tensor want =
        conv_kernel_oracle(ffd.weight().value, ffd.delays().value, in);
    for (std::size_t e = 0; e < got.size(); ++e)
      CHECK(std::abs(got(e) - want(e)) < 1e-9);
  }
}

TEST_CASE("interpolation weights sum to one for any real delay") {
  // a constant input train makes the output equal the weight once the
  // delay horizon has passed
  Rng rng(9);
  FeedforwardDelayLayer ffd("ffd", 1, 1);
  ffd.weight().value(0, 0) = 1.0;
  const double d = rng.uniform(0.0, 6.0);
  ffd.delays().value(0, 0) = d;
  Tensor in(32, 1, 1);
  in.fill(1.0);
  Context ctx;
  const Tensor out = ffd.forward(in, ctx);
  for (std::size_t t = 10; t < 32; ++t)
    CHECK(out(t, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("causality") {
  Rng rng(11);
  FeedforwardDelayLayer ffd("ffd", 2, 2);
  for (std::size_t e = 0; e < ffd.weight().value.size(); ++e)
    ffd.weight().value(e) = rng.uniform(-1.0, 1.0);
  for (std::size_t e = 0; e < ffd.delays().value.size(); ++e)
    ffd.delays().value(e) = rng.uniform(0.0, 3.0);

  Tensor a(16, 1, 2), b;
  for (std::size_t e = 0; e < a.size(); ++e) a(e) = rng.uniform(0.0, 1.0);
  b = a;
  const std::size_t t_change = 10;
  for (std::size_t c = 0; c < 2; ++c) b(t_change, 0, c) += 1.0;
  Context ctx;
  const Tensor oa = ffd.forward(a, ctx);
  const Tensor ob = ffd.forward(b, ctx);
  for (std::size_t t = 0; t < t_change; ++t)
    for (std::size_t c = 0; c < 2; ++c) CHECK(oa(t, 0, c) == ob(t, 0, c));
}

TEST_CASE("delay initialization U(0, 50)") {
  Rng rng(13);
  Tensor d(400, 250);  // 1e5 draws
  init_params(InitKind::uniform_range, d, rng, 0.0, 50.0);
  double mean = 0.0;
  for (std::size_t e = 0; e < d.size(); ++e) {
    CHECK(d(e) >= 0.0);
    CHECK(d(e) <= 50.0);
    mean += d(e);
  }
  mean /= static_cast<double>(d.size());
  CHECK(std::abs(mean - 25.0) < 0.5);

  // seed-fixed draws are reproducible
  Rng r1(77), r2(77);
  Tensor d1(16), d2(16);
  init_params(InitKind::uniform_range, d1, r1, 0.0, 50.0);
  init_params(InitKind::uniform_range, d2, r2, 0.0, 50.0);
  for (std::size_t e = 0; e < d1.size(); ++e) CHECK(d1(e) == d2(e));
}

TEST_CASE("rounding for evaluation") {
  FeedforwardDelayLayer ffd("ffd", 2, 1);
  ffd.delays().value(0, 0) = 3.5;
  ffd.delays().value(0, 1) = 1.2;
  ffd.round_delays_for_eval();
  CHECK(ffd.delays().value(0, 0) == 4.0);
  CHECK(ffd.delays().value(0, 1) == 1.0);
  CHECK_THROWS(ffd.round_delays_for_eval());
}

TEST_CASE("negative delays are rejected, clamp repairs them") {
  FeedforwardDelayLayer ffd("ffd", 1, 1);
  ffd.delays().value(0, 0) = -0.5;
  Tensor in(4, 1, 1);
  Context ctx;
  CHECK_THROWS(ffd.forward(in, ctx));
  ffd.clamp_delays(100.0);
  CHECK(ffd.delays().value(0, 0) == 0.0);
  CHECK_NOTHROW(ffd.forward(in, ctx));
}
