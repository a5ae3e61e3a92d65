#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>

namespace dryfric {

// splitmix64; used only to expand seeds into generator state
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t s) : state(s) {}
    std::uint64_t operator()() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++ (Blackman/Vigna, public domain). Chosen over the standard
// library engines because its output sequence is pinned by this header, which
// the byte-identical rerun contract needs, and it is fast enough for the
// 1e10-draw validation budgets.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1), 53 random bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // (0, 1], safe under log()
    double uniform_pos() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// one independent stream per path: distinct seeds fed through splitmix64, so
// results depend only on (master, path_index), never on thread scheduling
inline Xoshiro256pp path_stream(std::uint64_t master, std::uint64_t path_index) {
    return Xoshiro256pp(master + 0x9E3779B97F4A7C15ULL * path_index);
}

namespace detail {

// 256-strip ziggurat for exp(-x^2/2). Strip edges X[1] = r down to X[256] = 0
// by equal-area recursion; X[0] = v/f(r) is the virtual base width whose
// rectangle fraction r/X[0] routes between the base slab and the tail.
struct ZigTables {
    static constexpr double r = 3.6541528853610088;
    static constexpr double v = 0.00492867323399228;  // area of each strip

    double wscaled[256];      // X[i] * 2^-54: sample = k * wscaled[strip]
    std::int64_t thresh[256]; // accept |k| below 2^54 * X[i+1]/X[i]
    double fx[257];           // exp(-X[i]^2/2), fx[256] = 1

    ZigTables() {
        auto f = [](double t) { return std::exp(-0.5 * t * t); };
        double x[257];
        x[0] = v / f(r);
        x[1] = r;
        for (int i = 2; i <= 255; ++i)
            x[i] = std::sqrt(-2.0 * std::log(f(x[i - 1]) + v / x[i - 1]));
        x[256] = 0.0;
        for (int i = 0; i <= 256; ++i) fx[i] = f(x[i]);
        for (int i = 0; i < 256; ++i) {
            wscaled[i] = x[i] * 0x1.0p-54;
            thresh[i] = static_cast<std::int64_t>(0x1.0p54 * (x[i + 1] / x[i]));
        }
    }
};

inline const ZigTables& zig_tables() {
    static const ZigTables t;
    return t;
}

inline double normal_tail(Xoshiro256pp& g, bool negative) {
    // Marsaglia tail: exponential proposal beyond r
    double x, y;
    do {
        x = -std::log(g.uniform_pos()) / ZigTables::r;
        y = -std::log(g.uniform_pos());
    } while (y + y < x * x);
    return negative ? -(ZigTables::r + x) : (ZigTables::r + x);
}

}  // namespace detail

// standard normal draw; one next() and one multiply on the fast path
inline double standard_normal(Xoshiro256pp& g) {
    const auto& t = detail::zig_tables();
    for (;;) {
        const std::uint64_t u = g.next();
        const int i = static_cast<int>(u & 255);
        // 55 high bits as a signed integer in [-2^54, 2^54)
        const std::int64_t k =
            static_cast<std::int64_t>(u >> 9) - (std::int64_t(1) << 54);
        const double x = static_cast<double>(k) * t.wscaled[i];
        if (std::llabs(k) < t.thresh[i]) return x;
        if (i == 0) return detail::normal_tail(g, k < 0);
        if (t.fx[i] + g.uniform() * (t.fx[i + 1] - t.fx[i]) <
            std::exp(-0.5 * x * x))
            return x;
    }
}

}
