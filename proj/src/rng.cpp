#include "pvar/rng.hpp"

#include <cmath>

#include "pvar/errors.hpp"

namespace pvar {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// One keyed 10-round block: counter (c0,c1,c2,c3), key (k0,k1) -> out[4].
inline void philox_block(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2,
                         std::uint64_t c3, std::uint64_t k0, std::uint64_t k1,
                         std::uint64_t out[4]) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c0, hi0, lo0);
    mulhilo(kMul1, c2, hi1, lo1);
    std::uint64_t n0 = hi1 ^ c1 ^ k0;
    std::uint64_t n1 = lo1;
    std::uint64_t n2 = hi0 ^ c3 ^ k1;
    std::uint64_t n3 = lo0;
    c0 = n0; c1 = n1; c2 = n2; c3 = n3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
}

}  // namespace

SeedStream SeedStream::sub(std::uint64_t salt) const {
  // Hash the salt into a fresh stream id through one Philox block so that
  // sub-streams of sub-streams stay collision free.
  std::uint64_t out[4];
  philox_block(salt, 0x5b5ad4f1u, 0, 0, master_seed, stream_id, out);
  return SeedStream{master_seed, out[0]};
}

void CounterRng::refill() {
  philox_block(block_, 0, 0, 0, key0_, key1_, buf_);
  ++block_;
  idx_ = 0;
}

std::uint64_t CounterRng::next_u64() {
  if (idx_ >= 4) refill();
  return buf_[idx_++];
}

double CounterRng::uniform01() {
  // 53 random bits, centered in its cell: strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::exponential() { return -std::log(uniform01()); }

std::uint64_t CounterRng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw domain_error("poisson: mean must be finite and >= 0");
  if (mean > 1e7)
    throw domain_error("poisson: mean too large for arrival counting");
  std::uint64_t n = 0;
  double acc = exponential();
  while (acc <= mean) {
    ++n;
    acc += exponential();
  }
  return n;
}

}  // namespace pvar
