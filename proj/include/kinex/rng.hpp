#pragma once

#include <cstdint>
#include <cmath>

namespace kinex {

// Philox4x32-10 counter-based generator. Streams are cheap: a (seed, stream)
// pair plus a 64-bit counter fully determines every draw, so substreams for
// workers or ensemble shards never overlap and replay is exact.
class Philox {
  public:
    Philox() = default;
    Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          ctr_hi_(stream) {}

    // Raw 64-bit draw for counter value `ctr`.
    std::uint64_t at(std::uint64_t ctr) const {
        std::uint32_t c0 = static_cast<std::uint32_t>(ctr);
        std::uint32_t c1 = static_cast<std::uint32_t>(ctr >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi_);
        std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi_ >> 32);
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = 0xD2511F53ull * c0;
            std::uint64_t p1 = 0xCD9E8D57ull * c2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n1 = lo1;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;   // Weyl constants from the reference design
            k1 += 0xBB67AE85u;
        }
        return (static_cast<std::uint64_t>(c0) << 32) | c1;
    }

    // Sequential convenience interface.
    std::uint64_t next_u64() { return at(next_++); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) by rejection, bias-free.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % bound;
    }

    // Standard normal via Box-Muller (uses two draws).
    double next_normal() {
        double u1 = next_double(), u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t counter() const { return next_; }
    void seek(std::uint64_t ctr) { next_ = ctr; }

  private:
    std::uint32_t key0_ = 0, key1_ = 0;
    std::uint64_t ctr_hi_ = 0;
    std::uint64_t next_ = 0;
};

} // namespace kinex
