#include "fedsel/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedsel {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; full-period mixer over 64-bit state.
std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t absorb_label(std::uint64_t h, std::string_view label) {
  for (unsigned char c : label) {
    h = mix64(h ^ static_cast<std::uint64_t>(c));
  }
  // Finalize so "a" and "a\0"-style prefixes cannot collide with short labels.
  return mix64(h ^ static_cast<std::uint64_t>(label.size()));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string label, std::uint64_t state)
    : seed_(seed), label_(std::move(label)), state_(state) {}

RngStream RngStream::derive(std::uint64_t seed, std::string_view label) {
  if (label.empty()) {
    throw std::invalid_argument("RngStream label must be non-empty");
  }
  std::uint64_t h = absorb_label(mix64(seed), label);
  return RngStream(seed, std::string(label), h);
}

RngStream RngStream::derive(std::string_view suffix) const {
  std::string child = label_;
  child += '.';
  child += suffix;
  return derive(seed_, child);
}

RngStream derive_stream(std::uint64_t seed, std::string_view label) {
  return RngStream::derive(seed, label);
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + uniform01() * (hi - lo);
}

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform_below bound must be positive");
  }
  // Rejection sampling: discard the sliver of the 2^64 range that would bias
  // the modulo.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t x = next_u64();
    if (x >= threshold) return x % bound;
  }
}

double RngStream::normal() {
  // u1 in (0, 1] keeps the log finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("gamma shape must be positive");
  }
  if (shape < 1.0) {
    double u = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

std::vector<double> RngStream::dirichlet(double alpha, std::size_t n) {
  std::vector<double> draws(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    draws[i] = gamma(alpha);
    total += draws[i];
  }
  if (total <= 0.0) {
    // All-zero gammas only happen through underflow at extreme alpha.
    for (double& d : draws) d = 1.0 / static_cast<double>(n);
    return draws;
  }
  for (double& d : draws) d /= total;
  return draws;
}

std::vector<std::uint32_t> RngStream::sample_without_replacement(
    std::uint32_t population, std::uint32_t k) {
  if (k > population) {
    throw std::invalid_argument("sample_without_replacement: k > population");
  }
  std::vector<std::uint32_t> pool(population);
  for (std::uint32_t i = 0; i < population; ++i) pool[i] = i;
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uint32_t j =
        i + static_cast<std::uint32_t>(uniform_below(population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace fedsel
