// Compares the serial reference kernels against the OpenMP versions and
// times a full encoder pass both ways. Parallel results must stay
// bit-identical to serial; the benchmark aborts if they ever diverge.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <vector>

#include "aste/encoder.hpp"
#include "aste/kernels.hpp"
#include "aste/rng.hpp"

using namespace aste;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> random_block(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

void bench_matmul(int m, int k, int n, int reps) {
  Rng rng(1);
  const auto a = random_block(rng, static_cast<std::size_t>(m) * k);
  const auto b = random_block(rng, static_cast<std::size_t>(k) * n);
  std::vector<double> cs(static_cast<std::size_t>(m) * n), cp(cs.size());

  const double ts = time_best_of(reps, [&] {
    kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n);
  });
  const double tp = time_best_of(reps, [&] {
    kernels::parallel::matmul_nn(a.data(), b.data(), cp.data(), m, k, n);
  });
  if (std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(double)) != 0) {
    std::cerr << "FATAL: parallel matmul diverged from the serial reference\n";
    std::exit(1);
  }
  std::cout << "matmul " << std::setw(4) << m << "x" << std::setw(4) << k << "x" << std::setw(4)
            << n << "  serial " << std::setw(8) << std::fixed << std::setprecision(2) << ts
            << " ms  parallel " << std::setw(8) << tp << " ms  speedup " << std::setprecision(2)
            << ts / tp << "x\n";
}

void bench_softmax(int rows, int cols, int reps) {
  Rng rng(2);
  const auto scores = random_block(rng, static_cast<std::size_t>(rows) * cols);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < 0.7;
  for (int r = 0; r < rows; ++r) mask[static_cast<std::size_t>(r) * cols] = 1;
  std::vector<double> outs(scores.size()), outp(scores.size());

  const double ts = time_best_of(reps, [&] {
    kernels::serial::softmax_rows_masked(scores.data(), mask.data(), outs.data(), rows, cols);
  });
  const double tp = time_best_of(reps, [&] {
    kernels::parallel::softmax_rows_masked(scores.data(), mask.data(), outp.data(), rows, cols);
  });
  if (std::memcmp(outs.data(), outp.data(), outs.size() * sizeof(double)) != 0) {
    std::cerr << "FATAL: parallel softmax diverged from the serial reference\n";
    std::exit(1);
  }
  std::cout << "masked softmax " << rows << "x" << cols << "  serial " << std::setw(8)
            << std::fixed << std::setprecision(2) << ts << " ms  parallel " << std::setw(8) << tp
            << " ms  speedup " << std::setprecision(2) << ts / tp << "x\n";
}

void bench_encoder(int seq, int reps) {
  EncoderConfig cfg;
  cfg.hidden = 64;
  cfg.layers = 2;
  cfg.heads = 4;
  cfg.ffn = 256;
  cfg.max_len = seq;
  cfg.vocab = 64;
  cfg.dropout = 0.0;

  nn::ParamStore store;
  Rng rng(3);
  Encoder enc(cfg, store, rng);
  std::vector<int> tokens, positions, segments;
  for (int i = 0; i < seq; ++i) {
    tokens.push_back(8 + i % 48);
    positions.push_back(i);
    segments.push_back(0);
  }
  BoolMatrix mask(seq, seq, true);

  Array hs, hp;
  kernels::set_exec_mode(kernels::ExecMode::Serial);
  const double ts = time_best_of(reps, [&] {
    hs = enc.encode(enc.embed(tokens, positions, segments), mask).hidden.value();
  });
  kernels::set_exec_mode(kernels::ExecMode::Parallel);
  const double tp = time_best_of(reps, [&] {
    hp = enc.encode(enc.embed(tokens, positions, segments), mask).hidden.value();
  });
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (hs[i] != hp[i]) {
      std::cerr << "FATAL: encoder output diverged between exec modes\n";
      std::exit(1);
    }
  std::cout << "encoder forward seq=" << seq << " d=64 L=2  serial " << std::setw(8) << std::fixed
            << std::setprecision(2) << ts << " ms  parallel " << std::setw(8) << tp
            << " ms  speedup " << std::setprecision(2) << ts / tp << "x\n";
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  if (argc > 1) reps = std::atoi(argv[1]);
  std::cout << "threads: " << kernels::thread_count() << ", best of " << reps << " reps\n";

  bench_matmul(128, 128, 128, reps);
  bench_matmul(256, 256, 256, reps);
  bench_matmul(512, 256, 256, reps);
  bench_softmax(2048, 256, reps);
  bench_encoder(128, reps);
  bench_encoder(256, reps);

  std::cout << "parallel results bit-identical to serial: yes\n";
  return 0;
}
