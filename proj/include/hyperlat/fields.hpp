#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperlat/geometry.hpp"
#include "hyperlat/lattice.hpp"
#include "hyperlat/rng.hpp"

namespace hyperlat {

// ---------------------------------------------------------------------------
// i.i.d. displacement distributions
// ---------------------------------------------------------------------------

// Single-site displacement law. All laws are centered: Gaussian/Uniform per
// coordinate, Pareto isotropically (magnitude ~ Pareto, uniform direction),
// PointMass by subtracting its own value at construction.
struct IidDistribution {
    enum class Kind { PointMass, Gaussian, Uniform, Pareto };

    Kind kind = Kind::PointMass;
    int dim = 1;
    double sd = 0.0;          // Gaussian: per-coordinate standard deviation
    double half_width = 0.0;  // Uniform: per-coordinate half width
    double tail_index = 0.0;  // Pareto magnitude law
    double pareto_scale = 0.0;

    static IidDistribution point_mass(int dim);
    static IidDistribution gaussian(int dim, double sd);
    static IidDistribution uniform(int dim, double half_width);
    static IidDistribution pareto(int dim, double tail_index, double scale);

    Vec sample(Rng& rng) const;

    // sup |p|, or +inf for unbounded laws.
    double bound() const;

    // Quantile of |p| (exact CDF inversion, bisection for the Gaussian).
    double quantile_abs(double q) const;

    // E[|p|^m 1{|p| >= cut}]; +inf when the moment diverges.
    double tail_moment(double m, double cut) const;
};

// ---------------------------------------------------------------------------
// Block-size laws for the cube-collapse / radial-push constructions
// ---------------------------------------------------------------------------

struct BlockLaw {
    enum class Kind { Fixed, ParetoCeil, Table };

    Kind kind = Kind::Fixed;
    std::int64_t fixed_n = 10;
    double tail_index = 0.0;  // ParetoCeil: N = max(10, ceil(Pareto(a, scale)))
    double scale = 0.0;
    std::vector<std::int64_t> table_n;  // Table: support and normalized weights
    std::vector<double> table_w;
    std::vector<double> table_cdf;

    static BlockLaw fixed(std::int64_t n);
    static BlockLaw pareto_ceil(double tail_index, double scale);
    static BlockLaw table(std::vector<std::int64_t> n, std::vector<double> w);
    // P[N = n] proportional to n^exponent on the integer range [lo, hi].
    static BlockLaw power_range(double exponent, std::int64_t lo, std::int64_t hi);

    std::int64_t min_support() const;
    std::int64_t sample(Rng& rng) const;
};

// Mixture weights alpha_N ~ (sigma~(N) - sigma~(N+1)) / N^d restricted to
// 10 <= N <= n_max and renormalized. `sigma_tilde[i]` holds the value at
// integer argument i+1, i = 0..n_max (so arguments 1..n_max+1).
struct MixtureWeights {
    std::vector<std::int64_t> n;  // support
    std::vector<double> alpha;    // normalized weights on the support
    double normalizer = 0.0;      // S: sum of raw weights over 1..n_max
    double truncated_mass = 0.0;  // raw-weight mass lost to the truncation
};
MixtureWeights mixture_weights(const std::vector<double>& sigma_tilde, int dim,
                               std::int64_t n_max);

// ---------------------------------------------------------------------------
// Field specification
// ---------------------------------------------------------------------------

struct FieldSpec {
    enum class Kind {
        Iid,
        SpectralGaussian,
        CubeCollapse,
        RadialPush,
        SlowDecayMixture,
        Poisson,  // reference process, not a perturbed lattice
    };

    Kind kind = Kind::Iid;
    IidDistribution iid;

    // SpectralGaussian
    double delta = 0.0;
    int grid = 0;
    double amplitude = 0.0;

    // Block constructions
    BlockLaw block_law;
    double epsilon = 0.0;  // RadialPush displacement norm

    // SlowDecayMixture provenance (block_law carries the compiled table)
    double mixture_normalizer = 0.0;
    double mixture_truncated_mass = 0.0;

    // Poisson reference
    double intensity = 1.0;

    bool is_block_construction() const {
        return kind == Kind::CubeCollapse || kind == Kind::SlowDecayMixture ||
               kind == Kind::RadialPush;
    }
    bool collapses_blocks() const {
        return kind == Kind::CubeCollapse || kind == Kind::SlowDecayMixture;
    }

    static FieldSpec make_iid(IidDistribution dist);
    static FieldSpec spectral_gaussian(double delta, int grid, double amplitude);
    static FieldSpec cube_collapse(BlockLaw law);
    static FieldSpec radial_push(double epsilon, BlockLaw law);
    static FieldSpec slow_decay_mixture(const std::vector<double>& sigma_tilde, int dim,
                                        std::int64_t n_max);
    static FieldSpec poisson(double intensity);
};

// ---------------------------------------------------------------------------
// Realized fields and configurations
// ---------------------------------------------------------------------------

// Latent variables of one block-field draw; the displacement map is a
// deterministic function of these.
struct BlockLatents {
    std::int64_t n = 0;                 // realized block side
    Vec tau = zero_vec();               // stationarizing shift, uniform in the N-cube
    std::map<IVec, Vec> centers;        // block index -> realized center
};

struct TorusFieldLatents {
    int grid = 0;
    std::vector<std::vector<double>> coord_fields;  // one grid^dim array per coordinate
};

struct FieldSample {
    Lattice lattice;
    double window_radius = 0.0;
    std::vector<IVec> site_coords;      // integer coordinates, enumeration order
    std::vector<Vec> sites;             // lattice points in the window
    std::vector<Vec> displacements;     // one per site
    std::optional<BlockLatents> block;  // block constructions only
    std::optional<TorusFieldLatents> torus;
};

struct Configuration {
    int dim = 0;
    std::vector<Vec> points;
    double window_radius = 0.0;
    Vec origin_shift = zero_vec();  // the realized U
};

FieldSample sample_field(const FieldSpec& spec, const Lattice& lat, double window_radius,
                         Rng& rng);

// Draws one field realization over precomputed window sites; this is the
// estimator's hot path, and sample_field wraps it with a fresh enumeration.
// Latent pointers may be null when the caller does not need the audit trail.
void fill_displacements(const FieldSpec& spec, std::span<const Vec> sites,
                        std::span<const IVec> site_coords, int dim, double window_radius,
                        Rng& rng, std::vector<Vec>& out, BlockLatents* block_latents,
                        TorusFieldLatents* torus_latents);

// Re-evaluates the displacement map of a block field from stored latents;
// bit-identical to the original sample.
std::vector<Vec> block_displacements_from_latents(const FieldSpec& spec, const BlockLatents& lat,
                                                  std::span<const Vec> sites, int dim);

Configuration realize_configuration(const Lattice& lat, const FieldSample& field,
                                    const FundamentalDomainPoint& u);

// eps * (y + tau - center) / |y + tau - center|; resamples the direction
// uniformly in the probability-zero coincident case.
Vec radial_push_displacement(const Vec& y, const Vec& tau, const Vec& center, double epsilon,
                             int dim, Rng& rng);

// ---------------------------------------------------------------------------
// Exact counting for collapse-type fields
// ---------------------------------------------------------------------------

// Counts |PL ∩ B_r(center)| for one realized cube-collapse draw without
// enumerating lattice points: every block contributes its full multiplicity
// at its single image point. Works for arbitrarily large N.
// `radii` must be sorted ascending; writes one count per radius.
void cube_collapse_exact_counts(int dim, std::int64_t n, const Vec& tau, const Vec& u,
                                const Vec& center, std::span<const double> radii,
                                std::span<std::int64_t> out_counts, Rng& rng);

// Same, but with caller-provided block centers (queried in a deterministic
// block order); lets tests replay one latent draw through both count paths.
void cube_collapse_exact_counts(int dim, std::int64_t n, const Vec& tau, const Vec& u,
                                const Vec& center, std::span<const double> radii,
                                std::span<std::int64_t> out_counts,
                                const std::function<Vec(const IVec&)>& center_of);

// Stationary Gaussian field on the Z^dim torus of side `grid` (power of two)
// with spectral density rho(omega) = amplitude * |omega|^(delta - 2) at the
// nonzero torus frequencies omega = 2 pi m / grid, and rho(0) = 0.
std::vector<double> gaussian_field_synthesize(int dim, double delta, int grid, double amplitude,
                                              Rng& rng);

// Exact lag covariance of that field: (1/grid^dim) sum_m rho(omega_m) cos(omega_m . h).
double gaussian_field_exact_covariance(int dim, double delta, int grid, double amplitude,
                                       const IVec& lag);

}  // namespace hyperlat
