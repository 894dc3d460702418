#include "fleetcast/rng.hpp"

#include "fleetcast/normal.hpp"

namespace fleetcast {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b,
                             std::uint64_t* hi) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    *hi = static_cast<std::uint64_t>(p >> 64);
    return static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> Philox4x64::block(
    const std::array<std::uint64_t, 4>& counter) const {
    std::array<std::uint64_t, 4> ctr = counter;
    std::array<std::uint64_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, hi1;
        const std::uint64_t lo0 = mulhilo(kPhiloxM0, ctr[0], &hi0);
        const std::uint64_t lo1 = mulhilo(kPhiloxM1, ctr[2], &hi1);
        ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return ctr;
}

std::array<std::uint64_t, 4> Philox4x64::block(std::uint64_t counter) const {
    return block({counter, 0, 0, 0});
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    // Decorrelate key halves; raw (seed, stream) pairs are often small
    // integers that would otherwise share most key bits.
    std::uint64_t s = seed ^ 0x5DEECE66DF1ED2A9ULL;
    const std::uint64_t k0 = splitmix64(s);
    s ^= mix64(stream_id);
    const std::uint64_t k1 = splitmix64(s);
    engine_.key = {k0, k1};
}

std::uint64_t RngStream::bits_at(std::uint64_t i) const {
    const std::array<std::uint64_t, 4> blk = engine_.block(i >> 2);
    return blk[static_cast<std::size_t>(i & 3)];
}

double RngStream::uniform_at(std::uint64_t i) const {
    // 53-bit mantissa plus half-ulp offset keeps the value strictly inside
    // (0, 1); both endpoints would break the probit transform downstream.
    const std::uint64_t bits = bits_at(i) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal_at(std::uint64_t i) const {
    return normal_quantile(uniform_at(i));
}

RngStream RngStream::substream(std::uint64_t tag) const {
    return RngStream(seed_, derive_stream_id(stream_id_,
                                             static_cast<std::int64_t>(tag)));
}

std::uint64_t derive_stream_id(std::uint64_t tag, std::int64_t slot) {
    std::uint64_t s = tag;
    const std::uint64_t a = splitmix64(s);
    s ^= mix64(static_cast<std::uint64_t>(slot));
    const std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
}

}  // namespace fleetcast
