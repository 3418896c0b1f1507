#include "sparse_lq/rng.h"

#include <cmath>
#include <numbers>

#include "sparse_lq/errors.h"

namespace sparse_lq {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  return Mix64(master ^ Mix64(index + 1));
}

CounterRng::CounterRng(std::uint64_t seed) : seed_(seed), key_(Mix64(seed)) {}

std::uint64_t CounterRng::NextU64() {
  return Mix64(key_ + (counter_++) * kGolden);
}

double CounterRng::NextUniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::NextBelow(std::uint64_t bound) {
  Require(bound > 0, "NextBelow: bound must be positive");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = NextU64();
  } while (v >= limit);
  return v % bound;
}

double CounterRng::NextNormal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = NextUniform();
  const double u2 = NextUniform();
  const double radius = std::sqrt(-2.0 * std::log1p(-u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

void GaussianNoise::Fill(Eigen::Ref<Eigen::VectorXd> w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng_.NextNormal();
}

void ScriptedNoise::Fill(Eigen::Ref<Eigen::VectorXd> w) {
  if (next_ >= columns_.cols()) {
    throw InvalidArgument("ScriptedNoise: script exhausted");
  }
  Require(w.size() == columns_.rows(), "ScriptedNoise: dimension mismatch");
  w = columns_.col(next_++);
}

}  // namespace sparse_lq
