#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pimpc {

struct CheckRecord {
  std::string name;
  double predicted = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Implicit-Euler contraction rate of the non-constant component equals
/// 1/(1 + dt k lambda_2) on path/complete/star fixtures plus random
/// connected graphs (n <= 50).
std::vector<CheckRecord> verify_lemma1(int random_trials, std::uint64_t seed);

/// Frequency synchronization at K = 2 K_c and non-synchronization at
/// K = 0.05 K_c with omega spread 1, on a two-node fixture plus random
/// connected graphs (n <= 20).
std::vector<CheckRecord> verify_lemma2(int random_trials, std::uint64_t seed);

/// lambda_2/2 <= h_G <= sqrt(2 lambda_2) with brute-force h_G on random
/// connected graphs (n <= n_max <= 10); also path/K4/cycle fixtures.
std::vector<CheckRecord> verify_cheeger(int trials, int n_max,
                                        std::uint64_t seed);

/// Trained ensemble base weights against the closed-form softmax over
/// negative loss gradients on a frozen-phase toy problem.
std::vector<CheckRecord> verify_theorem2(std::uint64_t seed);

/// Monte-Carlo all-phases-wrong probability against the product of the
/// per-phase error rates.
std::vector<CheckRecord> verify_theorem3(std::array<double, 3> error_rates,
                                         long samples, std::uint64_t seed);

/// Wall-clock growth of the model forward across graph sizes at fixed
/// average degree (PASS when sub-quadratic), plus a diffusion-only
/// step-count doubling probe. Also appends CSV rows to `csv` when
/// non-null.
std::vector<CheckRecord> scaling_probe(const std::vector<int>& sizes,
                                       std::uint64_t seed, std::string* csv);

bool all_pass(const std::vector<CheckRecord>& records);

void write_verify_report(const std::vector<CheckRecord>& records,
                         const std::string& path);

}  // namespace pimpc
