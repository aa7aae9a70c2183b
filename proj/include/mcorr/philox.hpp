#pragma once

#include <array>
#include <cstdint>

namespace mcorr {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Output block b of stream s under seed k is philox(counter = {b_lo, b_hi,
/// s_lo, s_hi}, key = {k_lo, k_hi}). Streams are independent and can be
/// generated in any order or in parallel.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            buffer_ = block({static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                            key_);
            ++index_;
            pos_ = 0;
        }
        return buffer_[pos_++];
    }

    /// Uniform on (0, 1): 53 random bits, offset by half an ulp so 0 never occurs.
    double next_uniform() {
        const std::uint64_t hi = next_u32() >> 5;  // 27 bits
        const std::uint64_t lo = next_u32() >> 6;  // 26 bits
        const std::uint64_t bits = (hi << 26) | lo;
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    Key key_;
    std::uint64_t stream_;
    std::uint64_t index_ = 0;
    Counter buffer_{};
    int pos_ = 4;
};

} // namespace mcorr
