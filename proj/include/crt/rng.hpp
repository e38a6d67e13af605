#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace crt {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
//
// The 64-bit key holds the seed and the upper half of the 128-bit counter holds
// the stream id, so every (seed, stream) pair addresses a disjoint, reproducible
// sequence without any shared state between replicas.
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
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Identifies one independent random stream.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    friend bool operator==(const RngStream&, const RngStream&) = default;
};

// UniformRandomBitGenerator producing 64-bit words from a Philox stream.
class StreamEngine {
public:
    using result_type = std::uint64_t;

    explicit StreamEngine(RngStream stream) : stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (cursor_ == 2) refill();
        return words_[cursor_++];
    }

    const RngStream& stream() const { return stream_; }

private:
    void refill() {
        const Philox4x32::Counter ctr{
            static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
            static_cast<std::uint32_t>(stream_.stream_id),
            static_cast<std::uint32_t>(stream_.stream_id >> 32)};
        const Philox4x32::Key key{static_cast<std::uint32_t>(stream_.seed),
                                  static_cast<std::uint32_t>(stream_.seed >> 32)};
        const auto out = Philox4x32::block(ctr, key);
        words_[0] = (std::uint64_t{out[1]} << 32) | out[0];
        words_[1] = (std::uint64_t{out[3]} << 32) | out[2];
        ++position_;
        cursor_ = 0;
    }

    RngStream stream_;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 2> words_{};
    int cursor_ = 2;
};

// Convenience draws. Boost distributions are used instead of <random> ones so that
// the variates are identical across standard library implementations.
class Rng {
public:
    explicit Rng(RngStream stream) : engine_(stream) {}
    Rng(std::uint64_t seed, std::uint64_t stream_id) : engine_(RngStream{seed, stream_id}) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double exponential(double rate) {
        return boost::random::exponential_distribution<double>(rate)(engine_);
    }
    std::uint64_t below(std::uint64_t bound) {
        return boost::random::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
    }
    bool coin() { return (engine_() >> 63) != 0; }

    StreamEngine& engine() { return engine_; }

private:
    StreamEngine engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
};

}  // namespace crt
