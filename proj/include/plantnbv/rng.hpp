#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace plantnbv {

// SplitMix64 step, used both as a stream seeder and as a mixer for
// deterministic seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    std::uint64_t s = seed ^ (value + 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

inline std::uint64_t hash_string(std::uint64_t seed, std::string_view text) {
    std::uint64_t h = seed;
    for (unsigned char c : text) h = hash_combine(h, c);
    return hash_combine(h, text.size());
}

// mt19937_64 wrapper with explicit uniform draws. The standard distributions
// are not pinned across library implementations, so draws are derived from
// raw engine output directly.
class Rng {
   public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double gaussian(double mean, double stddev) {
        // Box-Muller; consumes two draws per pair, second draw discarded to
        // keep the call count independent of history.
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

   private:
    std::mt19937_64 engine_;
};

}  // namespace plantnbv
