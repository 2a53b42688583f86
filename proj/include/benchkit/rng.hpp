#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace benchkit {

// Deterministic sampling helpers over std::mt19937_64. The engine itself is
// bit-exact per the standard; the std::*_distribution adapters are not, so
// every artifact that must reproduce byte-for-byte across platforms goes
// through these instead.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n) via rejection sampling.
    size_t uniform_index(size_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return static_cast<size_t>(v % n);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1), safe as argument to log().
    double uniform_open() {
        double u = uniform();
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Standard logistic via inverse CDF.
    double logistic() {
        double u = uniform_open();
        return std::log(u / (1.0 - u));
    }

    // Standard normal, Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<size_t> sample_without_replacement(size_t n, size_t k);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Derives a child seed for an independent stream (e.g. per bootstrap round).
uint64_t derive_seed(uint64_t base, uint64_t stream);

}  // namespace benchkit
