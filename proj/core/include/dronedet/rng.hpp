#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace dronedet {

// Deterministic RNG with library-independent sampling. std::*_distribution
// algorithms vary between standard libraries, so uniform/normal draws are
// implemented directly on top of the mt19937_64 stream.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) {
        if (n <= 1) return 0;
        // rejection sampling to avoid modulo bias
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t x;
        do { x = gen_(); } while (x >= limit);
        return static_cast<int>(x % un);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller; one fresh pair per call keeps the stream stateless.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Independent child stream; advances this generator.
    Rng fork(uint64_t salt = 0) {
        uint64_t s = gen_() ^ (salt * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
        return Rng(s);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> gen_;
    }

private:
    explicit Rng(std::mt19937_64 g) : gen_(g) {}
    std::mt19937_64 gen_;
};

} // namespace dronedet
