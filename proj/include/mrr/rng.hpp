#pragma once

#include <array>
#include <cstdint>

namespace mrr {

// Philox4x32-10 counter-based generator (Salmon et al., Random123). A
// substream is keyed by (seed, stream id), so per-individual draws are
// reproducible regardless of evaluation order or threading.
class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double next_uniform();        // (0, 1)
  double next_normal();         // Box-Muller
  // Uniform integer in {lo, ..., hi}.
  int next_int(int lo, int hi);
  bool next_bernoulli(double prob);

  static std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                                 std::array<std::uint32_t, 2> key);

 private:
  void refill();
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int have_ = 0;
};

}  // namespace mrr
