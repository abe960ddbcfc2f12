#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pf {

// All randomness in the project flows through this wrapper. The uniform and
// normal mappings are written out explicitly because the standard
// distributions are implementation-defined; mt19937_64 itself is bit-exact
// everywhere, so streams reproduce across compilers.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Box-Muller; the cosine/sine pair is consumed one value per call.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Index in [0, n); slight modulo bias is irrelevant here.
    size_t below(size_t n) { return n == 0 ? 0 : static_cast<size_t>(eng_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives an independent, named seed stream from a base seed.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    return splitmix64(seed ^ fnv1a64(tag) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace pf
