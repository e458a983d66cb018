#pragma once

#include "ldpe/types.hpp"

#include <cstdint>

namespace ldpe {

/// Identifies one reproducible random stream. Distinct (master_seed, stream_id)
/// pairs give independent sequences; equal pairs always replay the same one.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

/// Counter-seeded xoshiro256++ generator. Construction from an RngStream is the
/// only way to obtain state, so draws are reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(RngStream stream);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the Marsaglia polar method (deterministic, no libm
  /// distribution objects whose draw order is implementation-defined).
  double normal();

  void fill_normal(Vector& out);

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// len i.i.d. N(0,1) draws; a fresh generator is derived from the stream, so the
/// same stream always returns the same vector.
Vector gaussian_vector(RngStream stream, Index len);

}  // namespace ldpe
