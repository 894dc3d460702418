#pragma once

#include <array>
#include <cstdint>

namespace fleetcast {

// Philox4x64-10 counter-based generator.  Every draw is a pure function of
// (key, counter), which gives two properties the pipeline depends on:
// random access (parallel workers can draw element i without generating
// elements 0..i-1) and bit-for-bit reproducibility independent of thread
// count or evaluation order.
struct Philox4x64 {
    std::array<std::uint64_t, 2> key{0, 0};

    // Returns the 256-bit block for a given counter value.
    std::array<std::uint64_t, 4> block(std::uint64_t counter) const;
    std::array<std::uint64_t, 4> block(
        const std::array<std::uint64_t, 4>& counter) const;
};

// SplitMix64 finalizer; used to derive well-separated stream keys.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

// A named random stream addressed by (seed, stream id).  Draws are random
// access: uniform_at(i) is the i-th variate of the stream regardless of
// what was drawn before.
class RngStream {
  public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    // Uniform on the open interval (0, 1); cannot return 0 or 1 exactly.
    double uniform_at(std::uint64_t i) const;

    // Standard normal variate via the inverse CDF of uniform_at(i).
    double normal_at(std::uint64_t i) const;

    // Raw 64-bit word i of the stream.
    std::uint64_t bits_at(std::uint64_t i) const;

    // Derives a child stream; `tag` values must differ between children.
    RngStream substream(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    Philox4x64 engine_{};
};

// Stable stream ids for the pipeline's independent randomness consumers.
namespace stream_tag {
inline constexpr std::uint64_t kCopulaSampling = 0x636f70756c61ULL;  // "copula"
inline constexpr std::uint64_t kSynthTruth = 0x7472757468ULL;        // "truth"
inline constexpr std::uint64_t kSynthSystem = 0x73797374656dULL;     // "system"
}  // namespace stream_tag

// Combines a stream tag with a timestamp (or any per-slot discriminator)
// into a stream id, so each hour of the backtest owns an independent
// stream whose draws do not depend on how many hours preceded it.
std::uint64_t derive_stream_id(std::uint64_t tag, std::int64_t slot);

}  // namespace fleetcast
