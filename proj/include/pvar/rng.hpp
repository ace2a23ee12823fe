#ifndef PVAR_RNG_HPP_
#define PVAR_RNG_HPP_

#include <cstdint>
#include <vector>

namespace pvar {

// Identifies one logical random stream.  Streams with the same master_seed
// and different stream_id are statistically independent, and a stream is a
// pure function of (master_seed, stream_id, draw index): replaying a stream
// from the same point yields byte-identical values on every platform and
// for every worker layout.
struct SeedStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  // Derive a sub-stream; used to hand each replication / component its own
  // independent stream without coordination.
  SeedStream sub(std::uint64_t salt) const;
};

// Counter-based generator (Philox 4x64, 10 rounds).  The 256-bit counter is
// (block_index, 0, 0, 0) and the key is (master_seed, stream_id), so skipping
// ahead is O(1) and there is no shared state between streams.
class CounterRng {
 public:
  explicit CounterRng(SeedStream s) : key0_(s.master_seed), key1_(s.stream_id) {}

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1); never returns an endpoint.
  double uniform01();

  // Uniform on (a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double exponential();  // mean 1

  // Exact Poisson(mean) by counting unit-exponential arrivals.  Cost O(mean);
  // intended for the moderate means used by jump records.
  std::uint64_t poisson(double mean);

  // Number of next_u64() results handed out so far.  The buffer starts in
  // the exhausted state (idx_ == 4, block_ == 0), hence the constant offset.
  std::uint64_t draws_consumed() const { return 4 * block_ + idx_ - 4; }

 private:
  void refill();

  std::uint64_t key0_, key1_;
  std::uint64_t block_ = 0;   // counter word 0 of the next block to generate
  std::uint64_t buf_[4] = {0, 0, 0, 0};
  unsigned idx_ = 4;          // position in buf_; 4 means empty
};

}  // namespace pvar

#endif  // PVAR_RNG_HPP_
