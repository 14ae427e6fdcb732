#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcflow/vec.hpp"

namespace pcflow {

/// Purpose tag folded into every random stream identity.
enum class Phase : std::uint32_t {
  init = 1,
  corrector_noise = 2,
  corrector_velocity = 3,
  data_component = 4,
  data_noise = 5,
  reference = 6,
  projection = 7,
  diagnostic = 8,
  direction = 9,
};

struct StreamId {
  std::uint64_t particle = 0;
  Phase phase = Phase::init;
  std::uint64_t step = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Philox4x32-10 counter-based generator keyed by (seed, particle, phase, step).
///
/// Two streams with the same seed and id produce bit-identical draws; the
/// draw counter is the only mutable state, so streams can be created in any
/// order or on any thread.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via a 128-layer ziggurat; usually one 64-bit draw.
  double normal();

  const StreamId& id() const noexcept { return id_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  void refill();

  std::uint64_t seed_;
  StreamId id_;
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
};

/// d i.i.d. standard normal entries. Throws std::invalid_argument for d == 0.
Vec gaussian_vector(RngStream& rng, std::size_t d);

void fill_gaussian(RngStream& rng, std::span<double> out);

}  // namespace pcflow
