#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace gibbsmh {

//! Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
//! as easy as 1, 2, 3"). Stateless: output is a pure function of
//! (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

//! Independent sub-streams of one chain. Each purpose draws from a disjoint
//! region of counter space so adding draws of one kind never perturbs another.
enum class StreamPurpose : std::uint32_t {
  proposal = 0,
  acceptance = 1,
  initial_state = 2,
  oracle = 3,
  user = 4,
};

//! Symmetric, mean-zero, unit-variance increment laws for proposals.
enum class IncrementFamily { standard_normal, uniform };

//! 53-bit uniform in [0, 1).
inline double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

//! Counter-based generator addressed by (seed, chain, step, index). Two
//! CounterRng values with the same (seed, chain) produce identical draws for
//! the same address regardless of call order or thread.
class CounterRng {
 public:
  CounterRng() : CounterRng(0, 0) {}
  CounterRng(std::uint64_t seed, std::uint64_t chain_id) : seed_(seed), chain_(chain_id) {
    const std::uint64_t k = splitmix64(splitmix64(seed) ^ splitmix64(chain_id + 0x632BE59BD9B4E019ull));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t chain_id() const noexcept { return chain_; }

  //! Child generator for a derived chain (replica r of chain c, and so on).
  CounterRng split(std::uint64_t child) const {
    return CounterRng(splitmix64(seed_ ^ 0xA0761D6478BD642Full) ^ child, splitmix64(chain_) + child);
  }

  //! Raw 128-bit block as two 64-bit words.
  std::array<std::uint64_t, 2> block(StreamPurpose purpose, std::uint64_t step,
                                     std::uint32_t index) const noexcept {
    const auto out = Philox4x32::generate(
        {index, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
         static_cast<std::uint32_t>(purpose)},
        key_);
    return {std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32),
            std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32)};
  }

  double uniform(StreamPurpose purpose, std::uint64_t step, std::uint32_t index = 0) const noexcept {
    return to_unit_interval(block(purpose, step, index)[0]);
  }

  //! Fills `out` with i.i.d. standard normals; element i depends only on
  //! (purpose, step, i / 2). Box-Muller on one 128-bit block per pair.
  void fill_normal(StreamPurpose purpose, std::uint64_t step, std::span<double> out) const noexcept {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; i += 2) {
      const auto b = block(purpose, step, static_cast<std::uint32_t>(i / 2));
      const double u1 = 1.0 - to_unit_interval(b[0]);  // (0, 1]
      const double u2 = to_unit_interval(b[1]);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      out[i] = radius * std::cos(angle);
      if (i + 1 < n) out[i + 1] = radius * std::sin(angle);
    }
  }

  //! Uniform on [-sqrt(3), sqrt(3)] (mean 0, variance 1); two values per block.
  void fill_uniform_unit_variance(StreamPurpose purpose, std::uint64_t step,
                                  std::span<double> out) const noexcept {
    constexpr double half_width = std::numbers::sqrt3;
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; i += 2) {
      const auto b = block(purpose, step, static_cast<std::uint32_t>(i / 2));
      out[i] = (2.0 * to_unit_interval(b[0]) - 1.0) * half_width;
      if (i + 1 < n) out[i + 1] = (2.0 * to_unit_interval(b[1]) - 1.0) * half_width;
    }
  }

  double normal(StreamPurpose purpose, std::uint64_t step, std::uint32_t index = 0) const noexcept {
    const auto b = block(purpose, step, index);
    const double u1 = 1.0 - to_unit_interval(b[0]);
    const double u2 = to_unit_interval(b[1]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool operator==(const CounterRng& o) const noexcept { return seed_ == o.seed_ && chain_ == o.chain_; }

 private:
  std::uint64_t seed_;
  std::uint64_t chain_;
  Philox4x32::Key key_{};
};

}  // namespace gibbsmh
