#include "ldpe/rng.hpp"

#include <cmath>

namespace ldpe {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(RngStream stream) {
  // Mix both key words through splitmix so that nearby stream ids land far
  // apart in state space.
  std::uint64_t s = stream.master_seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream.stream_id * 0xD2B74407B1CE6E93ULL + 0x9E3779B97F4A7C15ULL;
  s ^= a;
  for (auto& w : state_) w = splitmix64(s);
  bool all_zero = true;
  for (auto w : state_) all_zero = all_zero && w == 0;
  if (all_zero) state_[0] = 0x1ULL;  // xoshiro state must not be identically zero
}

std::uint64_t Rng::next_u64() {
  // xoshiro256++ step (Blackman & Vigna).
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

void Rng::fill_normal(Vector& out) {
  for (Index i = 0; i < out.size(); ++i) out[i] = normal();
}

Vector gaussian_vector(RngStream stream, Index len) {
  Rng rng(stream);
  Vector out(len);
  rng.fill_normal(out);
  return out;
}

}  // namespace ldpe
