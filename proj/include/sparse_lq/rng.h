#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace sparse_lq {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t Mix64(std::uint64_t z);

/// Derives the seed of trial `index` from a master seed:
///   seed = Mix64(master ^ Mix64(index + 1)).
/// Results depend only on (master, index), never on scheduling.
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index);

/// Counter-based generator. Word number c of the stream keyed by `seed` is
/// Mix64(key + c * 0x9E3779B97F4A7C15) with key = Mix64(seed). Uniforms take
/// the top 53 bits. Normal variates come in Box-Muller pairs built from two
/// consecutive uniforms (u1, u2):
///   z0 = sqrt(-2 log(1 - u1)) cos(2 pi u2),  z1 = ... sin(2 pi u2).
/// The object is a plain value; copying it forks an identical stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t NextU64();
  /// Uniform on [0, 1).
  double NextUniform();
  /// Uniform integer in [0, bound).
  std::uint64_t NextBelow(std::uint64_t bound);
  double NextNormal();

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Source of the process noise w(t+1).
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual void Fill(Eigen::Ref<Eigen::VectorXd> w) = 0;
};

/// i.i.d. standard Normal entries.
class GaussianNoise final : public NoiseSource {
 public:
  explicit GaussianNoise(std::uint64_t seed) : rng_(seed) {}
  explicit GaussianNoise(CounterRng rng) : rng_(rng) {}

  void Fill(Eigen::Ref<Eigen::VectorXd> w) override;

  const CounterRng& rng() const { return rng_; }

 private:
  CounterRng rng_;
};

class ZeroNoise final : public NoiseSource {
 public:
  void Fill(Eigen::Ref<Eigen::VectorXd> w) override { w.setZero(); }
};

/// Replays a fixed sequence of noise vectors (columns), then fails.
class ScriptedNoise final : public NoiseSource {
 public:
  explicit ScriptedNoise(Eigen::MatrixXd columns)
      : columns_(std::move(columns)) {}

  void Fill(Eigen::Ref<Eigen::VectorXd> w) override;

 private:
  Eigen::MatrixXd columns_;
  Eigen::Index next_ = 0;
};

}  // namespace sparse_lq
