#pragma once

#include <cstdint>
#include <vector>

#include "hyperlat/fields.hpp"
#include "hyperlat/lattice.hpp"
#include "hyperlat/rng.hpp"

namespace hyperlat {

struct MarginPolicy {
    enum class Kind { Adaptive, Fixed };
    Kind kind = Kind::Adaptive;
    double fixed_value = 0.0;
};

struct ExperimentConfig {
    Lattice lattice;
    FieldSpec field;
    std::vector<double> radii;  // strictly increasing
    std::int64_t replicas = 0;
    std::uint64_t seed = 0;
    int batch_count = 20;
    MarginPolicy margin;
    int threads = 0;  // 0: HYPERLAT_THREADS env, then hardware

    void validate() const;  // throws std::invalid_argument with the field name
};

struct RadiusStats {
    double r = 0.0;
    double mean_count = 0.0;
    double variance = 0.0;  // unbiased sample variance of the counts
    double sigma = 0.0;     // variance / |B_r|
    double std_error = 0.0;  // batch-means standard error of sigma
    double median_batch_sigma = 0.0;
    std::int64_t replicas = 0;
};

struct VarianceCurve {
    std::vector<RadiusStats> points;
    std::int64_t total_replicas = 0;
    std::int64_t flagged_replicas = 0;  // margin violations, excluded from stats
    bool reliable = true;               // false when the violation rate exceeds 1%
    double margin = 0.0;
    double window_radius = 0.0;
};

// Monte Carlo estimate of the number-variance curve. Deterministic for a
// fixed (config, seed) regardless of the worker count: replica substreams
// are index-derived and the reduction order is fixed.
VarianceCurve estimate_variance(const ExperimentConfig& cfg);

// Margin implied by the config (exact bound for bounded fields, a
// point-count-aware quantile for unbounded ones).
double resolve_margin(const ExperimentConfig& cfg);

// Homogeneous Poisson sample on the window ball.
Configuration poisson_reference(double intensity, int dim, double window_radius, Rng& rng);

// Exact count of configuration points in the closed ball B_r(center).
std::int64_t count_in_ball(const Configuration& cfg, const Vec& center, double r);

// Weighted least squares of log sigma on log r for radii >= r_min.
struct DecayFit {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    int points_used = 0;
};
DecayFit fit_decay_exponent(const VarianceCurve& curve, double r_min);

// Partial sums of sigma(2^n) over the curve's dyadic radii, with propagated
// uncertainty. `flattened` is the desk-scale star-hyperuniformity signature:
// the last increment contributes less than 10% of the total.
struct StarHuSums {
    std::vector<double> radii;
    std::vector<double> partial_sum;
    std::vector<double> std_error;
    bool flattened = false;
};
StarHuSums star_hu_partial_sum(const VarianceCurve& curve);

// Running-variance probe for infinite-variance detection.
struct ProbeConfig {
    Lattice lattice;
    FieldSpec field;
    double radius = 1.0;
    std::vector<std::int64_t> schedule;  // strictly increasing replica counts
    std::uint64_t seed = 0;
};
struct DivergenceProbe {
    std::vector<std::int64_t> schedule;
    std::vector<double> running_variance;   // after each schedule point
    std::vector<double> segment_variance;   // within each schedule segment
    double trend_slope = 0.0;               // LS slope of log var vs log n
};
DivergenceProbe divergence_probe(const ProbeConfig& cfg);

// Empirical structure factor of one configuration at the given nonzero wave
// vectors: |sum_j exp(-i k . x_j)|^2 / n.
std::vector<double> structure_factor(const Configuration& cfg, const std::vector<Vec>& ks);

// Replica-averaged structure factor on the dual grid k = 2 pi m / L of a box
// of integer side L inscribed in the window (integer sides make the
// unperturbed-lattice and Poisson window leakage vanish on the grid).
struct SkResult {
    std::vector<Vec> ks;
    std::vector<double> s;
    double box_side = 0.0;
    std::int64_t replicas = 0;
};
SkResult run_structure_factor(const ExperimentConfig& cfg, int max_index);

}  // namespace hyperlat
