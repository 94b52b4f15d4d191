#pragma once

#include <array>
#include <cstdint>

namespace hre {

// Philox4x32-10 block: 128-bit counter, 64-bit key. Exposed for known-answer
// tests; most code wants RngStream.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based random stream. The key is the 64-bit seed and the upper half
// of the counter is the stream id, so (seed, stream_id) pairs address
// disjoint sequences without any shared state. Single owner; copy to fork.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
};

// Uniform on the open interval (0, 1); 53 random bits.
double rng_uniform(RngStream& stream);
// Standard normal by inversion of the CDF (one uniform per draw).
double rng_normal(RngStream& stream);

}  // namespace hre
