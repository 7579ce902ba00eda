#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace qslab {

/// Seed for a whole experiment. Identical seeds reproduce identical reports
/// bit for bit, regardless of worker count.
struct MasterSeed {
    std::uint64_t value = 0;
};

/// Counter-based uniform stream on the open interval (0,1).
///
/// One Threefry-4x64-20 block cipher call (Salmon, Moraes, Dror, Shaw,
/// "Parallel random numbers: as easy as 1, 2, 3", SC'11) produces four
/// 64-bit words per counter increment. The (seed, stream_index) pair forms
/// the cipher key, so streams with distinct indices are distinct keyed
/// permutations of the counter space and never overlap. Substreams are
/// index-addressable without sequential skipping.
class UniformStream {
public:
    UniformStream() : UniformStream(MasterSeed{0}, 0) {}

    UniformStream(MasterSeed seed, std::uint64_t stream_index)
        : index_(stream_index) {
        key_[0] = seed.value;
        key_[1] = stream_index;
        key_[2] = 0;
        key_[3] = 0;
        key_[4] = 0x1BD11BDAA9FC1A22ull ^ key_[0] ^ key_[1] ^ key_[2] ^ key_[3];
    }

    std::uint64_t stream_index() const { return index_; }

    std::uint64_t next_u64() {
        if (pos_ == 4) refill();
        return buffer_[pos_++];
    }

    /// Uniform draw strictly inside (0,1): ((k >> 12) + 1/2) * 2^-52 maps the
    /// top 52 bits to the centered grid {2^-53, 3*2^-53, ..., 1 - 2^-53}.
    /// Endpoints are impossible by construction, so log(u) and log(1-u)
    /// stay finite.
    double next_uniform() {
        constexpr double scale = 1.0 / 4503599627370496.0;  // 2^-52
        return (static_cast<double>(next_u64() >> 12) + 0.5) * scale;
    }

    /// Unbiased integer in [0, bound) via Lemire's multiply-and-reject.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t cutoff = (0 - bound) % bound;
            while (lo < cutoff) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    void refill() {
        // Threefry-4x64-20: rotation schedule repeats with period 8, key
        // injection every fourth round.
        static constexpr int rot[8][2] = {{14, 16}, {52, 57}, {23, 40}, {5, 37},
                                          {25, 33}, {46, 12}, {58, 22}, {32, 32}};
        std::uint64_t x0 = block_ + key_[0];
        std::uint64_t x1 = key_[1];
        std::uint64_t x2 = key_[2];
        std::uint64_t x3 = key_[3];
        for (int round = 0; round < 20; ++round) {
            const int r0 = rot[round % 8][0];
            const int r1 = rot[round % 8][1];
            if (round % 2 == 0) {
                x0 += x1; x1 = rotl(x1, r0); x1 ^= x0;
                x2 += x3; x3 = rotl(x3, r1); x3 ^= x2;
            } else {
                x0 += x3; x3 = rotl(x3, r0); x3 ^= x0;
                x2 += x1; x1 = rotl(x1, r1); x1 ^= x2;
            }
            if (round % 4 == 3) {
                const int j = round / 4 + 1;
                x0 += key_[j % 5];
                x1 += key_[(j + 1) % 5];
                x2 += key_[(j + 2) % 5];
                x3 += key_[(j + 3) % 5] + static_cast<std::uint64_t>(j);
            }
        }
        buffer_ = {x0, x1, x2, x3};
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint64_t, 5> key_{};
    std::uint64_t index_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 4> buffer_{};
    unsigned pos_ = 4;
};

/// The addressable substream for one trial.
inline UniformStream substream(MasterSeed seed, std::uint64_t trial_index) {
    return UniformStream(seed, trial_index);
}

}  // namespace qslab
