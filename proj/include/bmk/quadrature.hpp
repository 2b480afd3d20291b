#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmk/types.hpp"

namespace bmk {

/// A (possibly complex) integral value with its error estimate and the
/// budget that produced it.
struct IntegralEstimate {
  Complex value{0.0, 0.0};
  double error = 0.0;
  std::uint64_t count = 0;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::vector<std::string> warnings;

  double real() const { return value.real(); }
};

nlohmann::json to_json(const IntegralEstimate& e);

/// Trapezoid weight of node i on an axis with `count` nodes and spacing h.
inline double trapezoid_weight(std::size_t i, std::size_t count, double h) {
  return (i == 0 || i + 1 == count) ? 0.5 * h : h;
}

/// Gauss-Legendre nodes and weights on [a, b].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(std::size_t count, double a = -1.0, double b = 1.0);

/// Split [0, n) into a fixed number of contiguous chunks (independent of the
/// worker count) and run `body(begin, end, chunk)` for each, on up to
/// `workers` threads. Reductions over chunks in index order are therefore
/// identical for every worker count.
void parallel_chunks(std::size_t n, std::size_t chunks, int workers,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

/// Workers from BMK_WORKERS, defaulting to 1.
int default_workers();

/// SplitMix64 mix of a seed and a stream index, for per-shard generators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

using Rng = std::mt19937_64;

/// Uniform deviate in [0, 1) with 53 random bits, reproducible across
/// standard libraries (unlike std::uniform_real_distribution).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double standard_normal(Rng& rng);

}  // namespace bmk
