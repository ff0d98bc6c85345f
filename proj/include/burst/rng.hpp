#pragma once

#include <cstdint>
#include <random>

namespace burst {

// Seeded generator with hand-rolled draws. std::mt19937_64 output is pinned
// by the standard; the std distributions are not, so uniform draws are
// implemented here to keep identical seeds byte-reproducible everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform01() {  // [0, 1), 53-bit resolution
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive integer range via 128-bit multiply (no modulo bias worth
    // caring about at these range sizes).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto scaled = static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * span) >> 64);
        return lo + static_cast<std::int64_t>(scaled);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace burst
