#include "pcflow/rng.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pcflow {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

// 128-layer ziggurat for the standard normal; rectangle edges x[i], with
// x[0] = v / f(r) the width of the base strip and x[128] = 0.
constexpr int kZigLayers = 128;
constexpr double kZigR = 3.442619855899;
constexpr double kZigV = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kZigLayers + 1> x{};
  std::array<double, kZigLayers> ratio{};
  ZigguratTables() {
    const auto f = [](double t) { return std::exp(-0.5 * t * t); };
    x[0] = kZigV / f(kZigR);
    x[1] = kZigR;
    for (int i = 2; i < kZigLayers; ++i) x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f(x[i - 1])));
    x[kZigLayers] = 0.0;
    for (int i = 0; i < kZigLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& zig() {
  static const ZigguratTables tables;
  return tables;
}

std::uint32_t checked_u32(std::uint64_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw std::out_of_range(std::string("RngStream: ") + what + " exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamId id) : seed_(seed), id_(id) {
  const std::uint64_t k = splitmix64(seed);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  // counter_[0] is the block counter; the remaining words carry the identity.
  counter_ = {0u, checked_u32(id.step, "step"), static_cast<std::uint32_t>(id.phase),
              checked_u32(id.particle, "particle")};
}

void RngStream::refill() {
  block_ = philox4x32_10(counter_, key_);
  if (++counter_[0] == 0) {
    throw std::overflow_error("RngStream: draw counter exhausted");
  }
  block_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (block_pos_ >= 4) refill();
  const std::uint64_t lo = block_[block_pos_];
  const std::uint64_t hi = block_[block_pos_ + 1];
  block_pos_ += 2;
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const ZigguratTables& t = zig();
  for (;;) {
    // One 64-bit draw: the top 53 bits give u in (-1, 1), the low 7 bits the layer.
    const std::uint64_t bits = next_u64();
    const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    const int i = static_cast<int>(bits & (kZigLayers - 1));
    if (std::abs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      double x, y;
      do {
        x = std::log(uniform()) / kZigR;
        y = std::log(uniform());
      } while (-2.0 * y < x * x);
      return u < 0.0 ? x - kZigR : kZigR - x;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

void fill_gaussian(RngStream& rng, std::span<double> out) {
  for (double& v : out) v = rng.normal();
}

Vec gaussian_vector(RngStream& rng, std::size_t d) {
  if (d == 0) throw std::invalid_argument("gaussian_vector: dimension must be >= 1");
  Vec out(d);
  fill_gaussian(rng, out);
  return out;
}

}  // namespace pcflow
