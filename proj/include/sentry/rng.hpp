#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace sentry {

// Deterministic random stream. mt19937_64 is fully specified by the standard;
// the distributions here are hand-coded so draws are identical across
// standard libraries (std:: distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), unbiased via rejection
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    // standard normal via Box-Muller; two uniforms per draw, no cached spare
    // so the stream state is the engine alone
    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::string save_state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

private:
    std::mt19937_64 engine_;
};

// Derives a stream seed from a base seed and a purpose label, so independent
// parts of a run (sampling, augmentation, init) never share draws.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view purpose) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ull;  // splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace sentry
