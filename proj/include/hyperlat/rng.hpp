#pragma once

#include <cmath>
#include <cstdint>

#include "hyperlat/geometry.hpp"

namespace hyperlat {

// Deterministic, platform-independent RNG. Replica substreams are derived
// from (master seed, stream id, replica index) so results do not depend on
// how replicas are scheduled across worker threads.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    Rng() : Rng(0, 0, 0) {}

    Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) {
        std::uint64_t sm = seed;
        sm ^= 0x6a09e667f3bcc908ULL + splitmix64(sm);
        sm ^= stream * 0xd1b54a32d192ed03ULL;
        sm ^= replica * 0x9e3779b97f4a7c15ULL + 0x1234567;
        for (auto& w : s_) w = splitmix64(sm);
        if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
    }

    std::uint64_t next_u64() {
        // xoshiro256++
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

    // Uniform on [0, 1).
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log/pow argument.
    double u01_open() { return 1.0 - u01(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift; bias is < 2^-64 * n, irrelevant at our sizes.
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Marsaglia polar method.
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double exponential() { return -std::log(u01_open()); }

    // Pareto with survival P(X > x) = (scale/x)^a for x >= scale.
    double pareto(double tail_index, double scale) {
        return scale * std::pow(u01_open(), -1.0 / tail_index);
    }

    // Exact Poisson sampling. Knuth's product method, chunked so the
    // running product never underflows for large means.
    std::int64_t poisson(double mean) {
        std::int64_t total = 0;
        while (mean > 400.0) {
            total += poisson_small(400.0);
            mean -= 400.0;
        }
        return total + poisson_small(mean);
    }

    // Uniform direction on the unit sphere in `dim` dimensions.
    Vec unit_vector(int dim) {
        if (dim == 1) return Vec{u01() < 0.5 ? -1.0 : 1.0, 0.0, 0.0, 0.0};
        while (true) {
            Vec v = zero_vec();
            for (int i = 0; i < dim; ++i) v[i] = normal();
            const double n = norm(v, dim);
            if (n > 1e-12) return scale(v, 1.0 / n, dim);
        }
    }

    // Uniform point in the ball of radius r (rejection from the cube).
    Vec in_ball(int dim, double r) {
        while (true) {
            Vec v = zero_vec();
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                v[i] = uniform(-r, r);
                s += v[i] * v[i];
            }
            if (s <= r * r) return v;
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::int64_t poisson_small(double mean) {
        const double limit = std::exp(-mean);
        double prod = u01_open();
        std::int64_t k = 0;
        while (prod > limit) {
            prod *= u01_open();
            ++k;
        }
        return k;
    }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hyperlat
