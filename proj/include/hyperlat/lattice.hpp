#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hyperlat/geometry.hpp"
#include "hyperlat/rng.hpp"

namespace hyperlat {

// Full-rank lattice with covolume normalized to 1. Immutable after
// construction; safe to share across threads.
struct Lattice {
    int dim = 0;
    Mat basis;      // columns generate the lattice, |det| == 1
    Mat inv_basis;  // basis^-1
    bool is_integer = false;  // basis == identity, fast paths apply

    Vec point(const IVec& n) const { return is_integer ? int_to_vec(n) : basis.apply_int(n); }

  private:
    static Vec int_to_vec(const IVec& n) {
        Vec v = zero_vec();
        for (int i = 0; i < kMaxDim; ++i) v[i] = static_cast<double>(n[i]);
        return v;
    }
};

struct FundamentalDomainPoint {
    int dim = 0;
    Vec coords = zero_vec();  // B t with t in [0,1)^dim
};

struct CountReport {
    double radius = 0.0;
    std::int64_t count = 0;
    double lebesgue = 0.0;  // volume of the ball, intensity-1 reference
    double residual = 0.0;  // count - lebesgue
};

inline constexpr std::int64_t kDefaultCountCap = 100'000'000;

// Builds a covolume-1 lattice from `basis` (column generators); the input
// basis is rescaled by |det|^(-1/dim). Throws std::invalid_argument on a
// singular, non-finite or badly conditioned basis.
Lattice make_lattice(int dim, const Mat& basis);

// Named shorthands: "Z1", "Z2", "Z3", "triangular".
Lattice make_lattice(const std::string& name);

Lattice dual_lattice(const Lattice& lat);

// t = x + u with x in the lattice and u in the fundamental domain.
struct Decomposition {
    IVec lattice_coords{};  // integer coordinates of x in the basis
    Vec lattice_point = zero_vec();
    FundamentalDomainPoint fractional;
};
Decomposition decompose(const Lattice& lat, const Vec& t);

FundamentalDomainPoint sample_fundamental(const Lattice& lat, Rng& rng);

// Streams every lattice point x with |x - center| <= R (closed ball) in a
// fixed enumeration order. Throws std::length_error when the bounding-box
// candidate count exceeds `cap`.
void for_each_point_in_ball(const Lattice& lat, const Vec& center, double R,
                            const std::function<void(const IVec&, const Vec&)>& fn,
                            std::int64_t cap = kDefaultCountCap);

std::vector<Vec> points_in_ball(const Lattice& lat, const Vec& center, double R,
                                std::int64_t cap = kDefaultCountCap);

std::int64_t count_points_in_ball(const Lattice& lat, const Vec& center, double R,
                                  std::int64_t cap = kDefaultCountCap);

// |{x in L : R - width <= |x| <= R + width}| around the origin.
std::int64_t count_annulus(const Lattice& lat, double R, double width,
                           std::int64_t cap = kDefaultCountCap);

CountReport gauss_residual(const Lattice& lat, const Vec& center, double R);

// Gaussian Poisson-summation pairing, used by tests and self-checks:
// sum_{x in L, |x|<=cut} exp(-|x|^2/(2s))  vs  the dual-side sum.
double gaussian_lattice_sum(const Lattice& lat, double s, double cut);
double gaussian_dual_sum(const Lattice& lat, double s, double cut);

// sup_{t in [0,1)^d} |B t|: how far the fundamental-domain shift U can move
// a point (attained at a vertex of the parallelotope).
double fundamental_domain_diameter(const Lattice& lat);

}  // namespace hyperlat
