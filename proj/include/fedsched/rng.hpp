#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <vector>

namespace fedsched {

// splitmix64 finalizer, used to derive independent stream keys from a seed
// plus a tag path. Streams keyed by distinct tag paths are uncorrelated.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, std::initializer_list<uint64_t> keys) {
    uint64_t h = splitmix64(seed);
    for (uint64_t k : keys) h = splitmix64(h ^ k);
    return h;
}

// Stream tags. Every consumer of randomness owns a tag so that adding a new
// consumer never shifts the draws of an existing one.
namespace rng_tag {
constexpr uint64_t init = 0x01;
constexpr uint64_t sample_clients = 0x02;
constexpr uint64_t local_update = 0x03;
constexpr uint64_t fine_tune = 0x04;
constexpr uint64_t partition = 0x10;
constexpr uint64_t dirichlet_class = 0x11;
constexpr uint64_t class_shuffle = 0x12;
constexpr uint64_t client_split = 0x13;
constexpr uint64_t synthetic = 0x20;
constexpr uint64_t grad_check = 0x30;
}  // namespace rng_tag

// Deterministic random stream. The engine (mt19937_64) is fully specified by
// the standard; all distribution transforms are implemented here so results
// never depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t key) : eng_(key) {}

    static Rng stream(uint64_t seed, std::initializer_list<uint64_t> keys) {
        return Rng(mix_seed(seed, keys));
    }

    uint64_t next_u64() { return eng_(); }

    // uniform in [0,1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1], safe as a log/pow argument
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, two uniforms consumed
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Marsaglia-Tsang (2000); alpha < 1 handled by the boost transform
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be positive");
        if (alpha < 1.0) {
            double u = uniform_pos();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // unbiased integer in [0, bound) by rejection
    uint64_t below(uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("below: bound must be positive");
        const uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from 0..n-1, returned ascending
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 eng_;
};

}  // namespace fedsched
