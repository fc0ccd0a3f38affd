#pragma once

#include <cmath>
#include <cstdint>

namespace gopt {

// Counter-based RNG (Philox4x32-10). A generator is addressed by (seed,
// stream); draws depend only on that address and the draw position, never
// on thread scheduling, so per-path substreams reproduce bit-identically
// under any parallel schedule.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream)
        : k0_(static_cast<std::uint32_t>(seed)),
          k1_(static_cast<std::uint32_t>(seed >> 32)) {
        ctr_[0] = 0;
        ctr_[1] = 0;
        ctr_[2] = static_cast<std::uint32_t>(stream);
        ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
    }

    std::uint32_t next_u32() {
        if (idx_ == 4) {
            block();
            idx_ = 0;
        }
        return out_[idx_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t lo = next_u32();
        std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // uniform on (0, 1]; never returns 0, safe under log()
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
    }

    // standard normal via Box-Muller; pairs are consumed in fixed order
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.28318530717958647692 * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                        std::uint32_t& lo) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    void block() {
        std::uint32_t x0 = ctr_[0], x1 = ctr_[1], x2 = ctr_[2], x3 = ctr_[3];
        std::uint32_t k0 = k0_, k1 = k1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, x0, hi0, lo0);
            mulhilo(0xCD9E8D57u, x2, hi1, lo1);
            std::uint32_t y0 = hi1 ^ x1 ^ k0;
            std::uint32_t y1 = lo1;
            std::uint32_t y2 = hi0 ^ x3 ^ k1;
            std::uint32_t y3 = lo0;
            x0 = y0;
            x1 = y1;
            x2 = y2;
            x3 = y3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_[0] = x0;
        out_[1] = x1;
        out_[2] = x2;
        out_[3] = x3;
        // 64-bit block counter within the stream; stream id occupies the
        // upper counter words and is never carried into
        if (++ctr_[0] == 0) ++ctr_[1];
    }

    std::uint32_t k0_, k1_;
    std::uint32_t ctr_[4];
    std::uint32_t out_[4] = {0, 0, 0, 0};
    int idx_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gopt
