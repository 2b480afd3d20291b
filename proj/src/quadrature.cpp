#include "bmk/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "bmk/error.hpp"

namespace bmk {

nlohmann::json to_json(const IntegralEstimate& e) {
  nlohmann::json j = {{"value", e.value.real()}, {"error", e.error}, {"count", e.count}, {"method", e.method}};
  if (e.value.imag() != 0.0) j["imag"] = e.value.imag();
  if (e.seed) j["seed"] = *e.seed;
  if (!e.warnings.empty()) j["warnings"] = e.warnings;
  return j;
}

GaussRule gauss_legendre(std::size_t count, double a, double b) {
  if (count == 0) throw InvalidArgument("gauss_legendre: need at least one node");
  GaussRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const std::size_t half = (count + 1) / 2;
  const double nd = static_cast<double>(count);
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= count; ++k) {
        const double kd = static_cast<double>(k);
        const double p2 = ((2 * kd - 1) * x * p1 - (kd - 1) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      if (count == 1) p0 = 1.0, p1 = x;
      dp = nd * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[count - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[count - 1 - i] = w;
  }
  const double mid = 0.5 * (a + b), half_len = 0.5 * (b - a);
  for (std::size_t i = 0; i < count; ++i) {
    rule.nodes[i] = mid + half_len * rule.nodes[i];
    rule.weights[i] *= half_len;
  }
  return rule;
}

void parallel_chunks(std::size_t n, std::size_t chunks, int workers,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  chunks = std::max<std::size_t>(1, std::min(chunks, n));
  auto bounds = [&](std::size_t c) { return std::pair{n * c / chunks, n * (c + 1) / chunks}; };
  if (workers <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [b, e] = bounds(c);
      body(b, e, c);
    }
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          auto [b, e] = bounds(c);
          body(b, e, c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int default_workers() {
  if (const char* env = std::getenv("BMK_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double standard_normal(Rng& rng) {
  // Box-Muller; one deviate per call keeps the stream position simple.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace bmk
