#include "hyperlat/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hyperlat/parallel.hpp"

namespace hyperlat {

namespace {

// Certified envelope constant: x * J1(x)^2 <= kJ1SquaredEnvelope for x >= 1
// (the limsup is 2/pi ~ 0.6366; checked on a fine grid in the test suite).
constexpr double kJ1SquaredEnvelope = 0.7;

double bessel_j1_series(double x) {
    const double q = 0.25 * x * x;
    double term = 0.5 * x;
    double sum = term;
    for (int k = 1; k <= 60; ++k) {
        term *= -q / (static_cast<double>(k) * (k + 1));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_j1_hankel(double x) {
    // J1(x) = sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)], chi = x - 3 pi / 4,
    // with the asymptotic coefficient ladder a_k = a_{k-1} (mu - (2k-1)^2)/(8k).
    constexpr double mu = 4.0;
    const double inv_x = 1.0 / x;
    double a = 1.0, xpow = 1.0;
    double p = 1.0, q = 0.0;
    double prev = 1.0;
    for (int k = 1; k <= 40; ++k) {
        const double odd = 2.0 * k - 1.0;
        a *= (mu - odd * odd) / (8.0 * k);
        xpow *= inv_x;
        const double term = a * xpow;
        if (std::abs(term) > prev) break;  // past the optimal truncation point
        prev = std::abs(term);
        const int phase = k % 4;
        if (phase == 1) q += term;
        else if (phase == 2) p -= term;
        else if (phase == 3) q -= term;
        else p += term;
        if (std::abs(term) < 1e-17) break;
    }
    const double chi = x - 0.75 * M_PI;
    return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j1(double x) {
    const double ax = std::abs(x);
    const double v = ax <= 12.0 ? bessel_j1_series(ax) : bessel_j1_hankel(ax);
    return x < 0.0 ? -v : v;  // J1 is odd
}

double jr_hat(const KernelEval& k, double t_norm) {
    const double t = std::abs(t_norm);
    if (t >= 2.0 * k.r) return 0.0;
    if (k.dim == 1) return 1.0 - t / (2.0 * k.r);
    if (k.dim == 2) {
        const double s = t / (2.0 * k.r);
        return 1.0 - 2.0 / M_PI * (std::asin(s) + s * std::sqrt(1.0 - s * s));
    }
    throw std::invalid_argument("jr_hat supports dimensions 1 and 2");
}

double jr(const KernelEval& k, double t_norm) {
    const double t = std::abs(t_norm);
    if (k.dim == 1) {
        if (t == 0.0) return k.r / M_PI;
        const double s = std::sin(k.r * t);
        return s * s / (M_PI * k.r * t * t);
    }
    if (k.dim == 2) {
        if (t == 0.0) return k.r * k.r / (4.0 * M_PI);
        const double b = bessel_j1(k.r * t);
        return b * b / (M_PI * t * t);
    }
    throw std::invalid_argument("jr supports dimensions 1 and 2");
}

namespace {

// Specialization for the integer dual lattice: enumerate one octant and
// weight by the orbit size under the 8-fold square symmetry.
double dual_annulus_sum_z2(double r, double lo, double hi, int threads, std::int64_t& terms) {
    const std::int64_t kmax = static_cast<std::int64_t>(std::floor(hi));
    const double lo2 = lo * lo, hi2 = hi * hi;
    const double w = 2.0 * M_PI * r;
    const std::int64_t rows = kmax;
    if (rows <= 0) return 0.0;
    std::vector<double> row_sum(rows, 0.0);
    std::vector<std::int64_t> row_terms(rows, 0);
    parallel_for(rows, threads, [&](std::int64_t row) {
        const std::int64_t n0 = row + 1;
        double acc = 0.0;
        std::int64_t cnt = 0;
        for (std::int64_t n1 = 0; n1 <= n0; ++n1) {
            const double k2 = static_cast<double>(n0 * n0 + n1 * n1);
            if (k2 <= lo2 || k2 > hi2) continue;
            const double b = bessel_j1(w * std::sqrt(k2));
            const double mult = (n1 == 0 || n1 == n0) ? 4.0 : 8.0;
            acc += mult * b * b / (M_PI * k2);
            cnt += static_cast<std::int64_t>(mult);
        }
        row_sum[row] = acc;
        row_terms[row] = cnt;
    });
    double total = 0.0;
    for (std::int64_t i = 0; i < rows; ++i) {
        total += row_sum[i];
        terms += row_terms[i];
    }
    return total;
}

// Sum of J1(2 pi r |k|)^2 / (pi |k|^2) over dual points with lo < |k| <= hi.
// Rows of the integer index are processed in parallel; per-row partial sums
// are reduced in index order, so the result is thread-count independent.
double dual_annulus_sum(const Lattice& dual, double r, double lo, double hi, int threads,
                        std::int64_t& terms) {
    if (dual.is_integer) return dual_annulus_sum_z2(r, lo, hi, threads, terms);
    const Vec origin = zero_vec();
    const double rad0 = hi * dual.inv_basis.row_norm(0);
    const double rad1 = hi * dual.inv_basis.row_norm(1);
    const std::int64_t lo0 = static_cast<std::int64_t>(std::ceil(-rad0));
    const std::int64_t hi0 = static_cast<std::int64_t>(std::floor(rad0));
    const std::int64_t lo1 = static_cast<std::int64_t>(std::ceil(-rad1));
    const std::int64_t hi1 = static_cast<std::int64_t>(std::floor(rad1));
    const std::int64_t rows = hi0 - lo0 + 1;
    if (rows <= 0) {
        terms = 0;
        return 0.0;
    }

    const double lo2 = lo * lo, hi2 = hi * hi;
    const double w = 2.0 * M_PI * r;
    std::vector<double> row_sum(rows, 0.0);
    std::vector<std::int64_t> row_terms(rows, 0);

    parallel_for(rows, threads, [&](std::int64_t row) {
        const std::int64_t n0 = lo0 + row;
        const double b00 = dual.basis.at(0, 0), b10 = dual.basis.at(1, 0);
        const double b01 = dual.basis.at(0, 1), b11 = dual.basis.at(1, 1);
        double acc = 0.0;
        std::int64_t cnt = 0;
        for (std::int64_t n1 = lo1; n1 <= hi1; ++n1) {
            const double kx = b00 * n0 + b01 * n1;
            const double ky = b10 * n0 + b11 * n1;
            const double k2 = kx * kx + ky * ky;
            if (k2 <= lo2 || k2 > hi2 || k2 == 0.0) continue;
            const double kn = std::sqrt(k2);
            const double b = bessel_j1(w * kn);
            acc += b * b / (M_PI * k2);
            ++cnt;
        }
        row_sum[row] = acc;
        row_terms[row] = cnt;
    });

    (void)origin;
    double total = 0.0;
    for (std::int64_t i = 0; i < rows; ++i) {
        total += row_sum[i];
        terms += row_terms[i];
    }
    return total;
}

double dual_tail_bound(const Lattice& dual, double r, double K) {
    // sum_{|k| > K} J1(2 pi r |k|)^2/(pi |k|^2)
    //   <= C/(2 pi^2 r) * sum_{|k| > K} |k|^-3
    // and the lattice sum compares against an integral after padding by the
    // covering radius of the dual (unit-covolume Voronoi cells).
    double rho = 0.0;
    for (int c = 0; c < dual.dim; ++c) rho += dual.basis.column_norm(c);
    rho *= 0.5;
    const double k0 = K - 2.0 * rho;
    if (k0 <= 0.5) return std::numeric_limits<double>::infinity();
    const double lattice_sum_bound = 2.0 * M_PI * (1.0 / k0 + 0.5 * rho / (k0 * k0));
    return kJ1SquaredEnvelope / (2.0 * M_PI * M_PI * r) * lattice_sum_bound;
}

}  // namespace

ATermResult lattice_A_term(const Lattice& lat, double r, double rel_tol, double abs_tol,
                           int threads) {
    if (lat.dim != 2)
        throw std::invalid_argument("lattice_A_term is the d=2 route; use exact_sigma_1d in d=1");
    if (!(r > 0.0)) throw std::invalid_argument("radius must be > 0");

    const Lattice dual = dual_lattice(lat);
    ATermResult res;
    double K_prev = 0.0;
    double K = 64.0;
    constexpr double kMaxCutoff = 4.0e6;
    while (true) {
        res.value += dual_annulus_sum(dual, r, K_prev, K, threads, res.terms);
        res.tail_bound = dual_tail_bound(dual, r, K);
        res.cutoff = K;
        const double target = std::max(rel_tol * std::abs(res.value), abs_tol);
        if (res.tail_bound <= target && target > 0.0) break;
        if (K >= kMaxCutoff) break;  // keep the reported bound honest instead of looping
        K_prev = K;
        K *= 2.0;
    }
    return res;
}

double lattice_sigma_direct(const Lattice& lat, double r) {
    if (lat.dim > 2) throw std::invalid_argument("direct kernel sum supports dimensions 1 and 2");
    const KernelEval k{lat.dim, r};
    double total = 0.0;
    for_each_point_in_ball(lat, zero_vec(), 2.0 * r, [&](const IVec&, const Vec& x) {
        total += jr_hat(k, norm(x, lat.dim));
    });
    return total - ball_volume(lat.dim, r);
}

double exact_sigma_1d(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("radius must be > 0");
    const double f = 2.0 * r - std::floor(2.0 * r);
    return f * (1.0 - f);
}

OracleResult iid_sigma_oracle(const Lattice& lat, double r, const IidDistribution& dist,
                              double M, std::int64_t pair_samples, Rng& rng, int batches) {
    const int d = lat.dim;
    if (d != 1 && d != 2)
        throw std::invalid_argument("iid_sigma_oracle supports dimensions 1 and 2");
    if (!(M >= 20.0 * r))
        throw std::invalid_argument("truncation radius too small: need M >= 20 r");
    if (pair_samples < batches || batches < 2)
        throw std::invalid_argument("need pair_samples >= batches >= 2");

    OracleResult res;
    res.a_term = d == 2 ? lattice_A_term(lat, r).value : exact_sigma_1d(r);
    res.remainder_bound = dist.tail_moment(static_cast<double>(d), M / 4.0);

    // Terms with jr_hat(x + Delta) = jr_hat(x) = 0 vanish identically, so the
    // x-sum is restricted to the reach of the kernel support.
    const double b = dist.bound();
    const double delta_cut = std::isfinite(b) ? 2.0 * b : 2.0 * dist.quantile_abs(1.0 - 1e-9);
    const double x_cut = std::min(M, 2.0 * r + delta_cut + 1.0);

    const KernelEval kern{d, r};
    std::vector<Vec> sites;
    double base_sum = 0.0;
    for_each_point_in_ball(lat, zero_vec(), x_cut, [&](const IVec&, const Vec& x) {
        if (norm2(x, d) == 0.0) return;
        sites.push_back(x);
        base_sum += jr_hat(kern, norm(x, d));
    });

    // Pre-draw the pair differences (common random numbers live with the
    // caller's rng seed), then evaluate sample sums in parallel.
    std::vector<Vec> deltas(pair_samples);
    for (auto& dv : deltas) dv = sub(dist.sample(rng), dist.sample(rng), d);

    std::vector<double> sample_sum(pair_samples, 0.0);
    parallel_for(pair_samples, 0, [&](std::int64_t s) {
        const Vec& dv = deltas[s];
        double acc = 0.0;
        for (const Vec& x : sites) acc += jr_hat(kern, norm(add(x, dv, d), d));
        sample_sum[s] = acc - base_sum;
    });

    std::vector<double> batch_mean(batches, 0.0);
    for (int bi = 0; bi < batches; ++bi) {
        const std::int64_t lo = pair_samples * bi / batches;
        const std::int64_t hi = pair_samples * (bi + 1) / batches;
        double m = 0.0;
        for (std::int64_t s = lo; s < hi; ++s) m += sample_sum[s];
        batch_mean[bi] = m / static_cast<double>(hi - lo);
    }
    double mean = 0.0;
    for (double m : batch_mean) mean += m;
    mean /= batches;
    double var = 0.0;
    for (double m : batch_mean) var += (m - mean) * (m - mean);
    var /= (batches - 1);

    res.b_term = mean;
    res.std_error = std::sqrt(var / batches);
    res.sigma = res.a_term + res.b_term;
    return res;
}

}  // namespace hyperlat
