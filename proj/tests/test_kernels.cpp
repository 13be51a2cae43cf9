#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aste/kernels.hpp"
#include "aste/rng.hpp"

using namespace aste;

namespace {

std::vector<double> random_block(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("matmul_nn matches a naive triple loop") {
  Rng rng(7);
  const int m = 5, k = 7, n = 4;
  const auto a = random_block(rng, m * k);
  const auto b = random_block(rng, k * n);
  std::vector<double> c(static_cast<std::size_t>(m) * n), ref(c.size(), 0.0);
  kernels::serial::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < k; ++p)
        ref[static_cast<std::size_t>(i) * n + j] += a[static_cast<std::size_t>(i) * k + p] *
                                                    b[static_cast<std::size_t>(p) * n + j];
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("nt and tn variants agree with explicit transposes") {
  Rng rng(11);
  const int m = 6, k = 3, n = 5;
  const auto a = random_block(rng, m * k);
  const auto b = random_block(rng, n * k);
  std::vector<double> c(static_cast<std::size_t>(m) * n);
  kernels::serial::matmul_nt(a.data(), b.data(), c.data(), m, k, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(j) * k + p];
      CHECK(c[static_cast<std::size_t>(i) * n + j] == doctest::Approx(acc).epsilon(1e-12));
    }

  const auto a2 = random_block(rng, m * k);
  const auto b2 = random_block(rng, m * n);
  std::vector<double> c2(static_cast<std::size_t>(k) * n);
  kernels::serial::matmul_tn(a2.data(), b2.data(), c2.data(), m, k, n);
  for (int r = 0; r < k; ++r)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i)
        acc += a2[static_cast<std::size_t>(i) * k + r] * b2[static_cast<std::size_t>(i) * n + j];
      CHECK(c2[static_cast<std::size_t>(r) * n + j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(42);
  // Odd sizes on purpose so rows split unevenly across threads.
  for (const auto& [m, k, n] : {std::tuple{1, 1, 1}, {3, 17, 5}, {64, 33, 29}, {129, 64, 63}}) {
    const auto a = random_block(rng, m * k);
    const auto b = random_block(rng, k * n);
    std::vector<double> cs(static_cast<std::size_t>(m) * n), cp(cs.size());
    kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n);
    kernels::parallel::matmul_nn(a.data(), b.data(), cp.data(), m, k, n);
    CHECK(cs == cp);

    const auto bt = random_block(rng, n * k);
    std::vector<double> ds(static_cast<std::size_t>(m) * n), dp(ds.size());
    kernels::serial::matmul_nt(a.data(), bt.data(), ds.data(), m, k, n);
    kernels::parallel::matmul_nt(a.data(), bt.data(), dp.data(), m, k, n);
    CHECK(ds == dp);

    const auto g = random_block(rng, m * n);
    std::vector<double> es(static_cast<std::size_t>(k) * n), ep(es.size());
    kernels::serial::matmul_tn(a.data(), g.data(), es.data(), m, k, n);
    kernels::parallel::matmul_tn(a.data(), g.data(), ep.data(), m, k, n);
    CHECK(es == ep);
  }
}

TEST_CASE("parallel masked softmax is bit-identical to serial") {
  Rng rng(5);
  const int rows = 37, cols = 23;
  const auto scores = random_block(rng, rows * cols);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    bool any = false;
    for (int c = 0; c < cols; ++c) {
      const bool v = rng.uniform() < 0.6;
      mask[static_cast<std::size_t>(r) * cols + c] = v;
      any = any || v;
    }
    if (!any) mask[static_cast<std::size_t>(r) * cols] = 1;
  }
  std::vector<double> outs(scores.size()), outp(scores.size());
  kernels::serial::softmax_rows_masked(scores.data(), mask.data(), outs.data(), rows, cols);
  kernels::parallel::softmax_rows_masked(scores.data(), mask.data(), outp.data(), rows, cols);
  CHECK(outs == outp);
}

TEST_CASE("exec mode switches the dispatched kernels") {
  Rng rng(9);
  const int m = 8, k = 8, n = 8;
  const auto a = random_block(rng, m * k);
  const auto b = random_block(rng, k * n);
  std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1.size());

  kernels::set_exec_mode(kernels::ExecMode::Serial);
  kernels::matmul_nn(a.data(), b.data(), c1.data(), m, k, n);
  kernels::set_exec_mode(kernels::ExecMode::Parallel);
  kernels::matmul_nn(a.data(), b.data(), c2.data(), m, k, n);
  CHECK(c1 == c2);
}
