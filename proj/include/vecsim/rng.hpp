#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "vecsim/errors.hpp"

namespace vecsim {

// One SplitMix64 step.  Used only to derive independent stream seeds from a
// single master seed; the streams themselves run on std::mt19937_64, whose
// output sequence is fixed by the C++ standard.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministically derive the seed of a named sub-stream from the master
// seed.  Different tags give statistically independent streams, and the
// derivation is stable across platforms.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_tag) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64_next(s);
    s ^= stream_tag * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2));
}

// Stream tags used by the simulator and the learner.  Keeping them in one
// enum documents the full set of random streams a run consumes.
enum class StreamTag : std::uint64_t {
    arrivals = 1,
    fading = 2,
    exploration_noise = 3,
    replay_sampling = 4,
    weight_init = 5,
    evaluation = 6,
};

inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, StreamTag tag) {
    return derive_stream_seed(master_seed, static_cast<std::uint64_t>(tag));
}

// Deterministic random source.  Wraps std::mt19937_64 and implements every
// distribution by hand so that generated sequences are identical across
// standard libraries and platforms (libstdc++/libc++ are free to implement
// std::*_distribution differently, so those are avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw ContractViolation("uniform_index: empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw;
        do {
            draw = gen_();
        } while (draw >= limit);
        return draw % n;
    }

    // Standard normal via Box-Muller; generates two values per transform and
    // caches the second.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Circularly-symmetric complex normal with unit total variance
    // (real and imaginary parts each N(0, 1/2)).
    std::complex<double> complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

    // Poisson sample.  Multiplication-based inversion for small means and
    // Hörmann's transformed rejection (PTRS) for large ones, so the cost is
    // O(1) in the mean.
    std::int64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw ContractViolation("poisson: mean must be non-negative");
        if (mean == 0.0) return 0;
        if (mean < 30.0) return poisson_inversion(mean);
        return poisson_ptrs(mean);
    }

private:
    std::int64_t poisson_inversion(double mean) {
        const double threshold = std::exp(-mean);
        std::int64_t count = -1;
        double product = 1.0;
        do {
            ++count;
            product *= uniform_pos();
        } while (product > threshold);
        return count;
    }

    std::int64_t poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
                k * loglam - mean - std::lgamma(k + 1.0)) {
                return static_cast<std::int64_t>(k);
            }
        }
    }

    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace vecsim
