#include "hyperlat/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "hyperlat/parallel.hpp"

namespace hyperlat {

namespace {

// Fixed stream ids keep replica substreams disjoint across uses of one seed.
constexpr std::uint64_t kStreamReplica = 1;
constexpr std::uint64_t kStreamSk = 3;

void bump_counts(double dist2, const std::vector<double>& radii2, std::int64_t* counts) {
    for (std::size_t j = radii2.size(); j-- > 0;) {
        if (dist2 <= radii2[j]) ++counts[j];
        else break;
    }
}

struct WindowSites {
    std::vector<Vec> sites;
    std::vector<IVec> coords;
};

WindowSites enumerate_window(const Lattice& lat, double window) {
    WindowSites w;
    for_each_point_in_ball(lat, zero_vec(), window, [&](const IVec& n, const Vec& x) {
        w.coords.push_back(n);
        w.sites.push_back(x);
    });
    return w;
}

double unbounded_margin(int dim, const IidDistribution& marginal, double r_max) {
    // Quantile floor per the window policy, tightened so the expected number
    // of per-replica exceedances stays near 1e-4 for this window size.
    const double q_base = marginal.quantile_abs(1.0 - 1e-5);
    const double n_est = std::max(1.0, ball_volume(dim, r_max + q_base));
    const double level = std::max(1.0 - 1e-4 / n_est, 1.0 - 1e-5);
    return std::max(q_base, marginal.quantile_abs(level));
}

}  // namespace

void ExperimentConfig::validate() const {
    if (radii.empty()) throw std::invalid_argument("radii: need at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !std::isfinite(radii[i]))
            throw std::invalid_argument("radii: entries must be positive and finite");
        if (i > 0 && !(radii[i] > radii[i - 1]))
            throw std::invalid_argument("radii: must be strictly increasing");
    }
    if (batch_count < 2) throw std::invalid_argument("batch_count: must be >= 2");
    if (replicas < 2 * static_cast<std::int64_t>(batch_count))
        throw std::invalid_argument("replicas: need at least 2 * batch_count");
    if (margin.kind == MarginPolicy::Kind::Fixed && !(margin.fixed_value >= 0.0))
        throw std::invalid_argument("window_margin: fixed margin must be >= 0");
}

double resolve_margin(const ExperimentConfig& cfg) {
    if (cfg.margin.kind == MarginPolicy::Kind::Fixed) return cfg.margin.fixed_value;
    const double r_max = cfg.radii.back();
    switch (cfg.field.kind) {
        case FieldSpec::Kind::Poisson:
            return 0.0;
        case FieldSpec::Kind::CubeCollapse:
        case FieldSpec::Kind::SlowDecayMixture:
            return 0.0;  // counted exactly, no window
        case FieldSpec::Kind::RadialPush:
            return cfg.field.epsilon;
        case FieldSpec::Kind::Iid: {
            const double b = cfg.field.iid.bound();
            if (std::isfinite(b)) return b;
            return unbounded_margin(cfg.lattice.dim, cfg.field.iid, r_max);
        }
        case FieldSpec::Kind::SpectralGaussian: {
            const double var = gaussian_field_exact_covariance(
                cfg.lattice.dim, cfg.field.delta, cfg.field.grid, cfg.field.amplitude, IVec{});
            const auto marginal =
                IidDistribution::gaussian(cfg.lattice.dim, std::sqrt(std::max(var, 0.0)));
            return unbounded_margin(cfg.lattice.dim, marginal, r_max);
        }
    }
    return 0.0;
}

Configuration poisson_reference(double intensity, int dim, double window_radius, Rng& rng) {
    if (!(intensity > 0.0)) throw std::invalid_argument("poisson intensity must be > 0");
    Configuration cfg;
    cfg.dim = dim;
    cfg.window_radius = window_radius;
    const std::int64_t n = rng.poisson(intensity * ball_volume(dim, window_radius));
    cfg.points.resize(n);
    for (auto& p : cfg.points) p = rng.in_ball(dim, window_radius);
    return cfg;
}

std::int64_t count_in_ball(const Configuration& cfg, const Vec& center, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("radius must be >= 0");
    const double r2 = r * r;
    std::int64_t n = 0;
    for (const Vec& p : cfg.points)
        if (norm2(sub(p, center, cfg.dim), cfg.dim) <= r2) ++n;
    return n;
}

VarianceCurve estimate_variance(const ExperimentConfig& cfg) {
    cfg.validate();
    const int dim = cfg.lattice.dim;
    const std::size_t nr = cfg.radii.size();
    const double margin = resolve_margin(cfg);
    const double r_max = cfg.radii.back();
    const bool exact_collapse = cfg.field.collapses_blocks();
    const bool poisson = cfg.field.kind == FieldSpec::Kind::Poisson;
    // The window must reach every lattice site whose image can enter the
    // largest ball: |x| <= r + |U| + |p|.
    const double window =
        poisson ? r_max : r_max + margin + fundamental_domain_diameter(cfg.lattice);

    std::vector<double> radii2(nr);
    for (std::size_t j = 0; j < nr; ++j) radii2[j] = cfg.radii[j] * cfg.radii[j];

    WindowSites win;
    if (!exact_collapse && !poisson) win = enumerate_window(cfg.lattice, window);
    const bool check_margin = !exact_collapse && !poisson &&
                              !std::isfinite(cfg.field.kind == FieldSpec::Kind::Iid
                                                 ? cfg.field.iid.bound()
                                                 : (cfg.field.kind == FieldSpec::Kind::RadialPush
                                                        ? cfg.field.epsilon
                                                        : std::numeric_limits<double>::infinity()));
    const double margin2 = margin * margin;

    const std::int64_t n = cfg.replicas;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n) * nr, 0);
    std::vector<unsigned char> flagged(n, 0);

    const int threads = worker_count(cfg.threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = n * t / threads;
        const std::int64_t hi = n * (t + 1) / threads;
        pool.emplace_back([&, lo, hi] {
            std::vector<Vec> disp;
            for (std::int64_t i = lo; i < hi; ++i) {
                Rng rng(cfg.seed, kStreamReplica, static_cast<std::uint64_t>(i));
                std::int64_t* row = counts.data() + static_cast<std::size_t>(i) * nr;
                if (poisson) {
                    const std::int64_t pts =
                        rng.poisson(cfg.field.intensity * ball_volume(dim, window));
                    for (std::int64_t p = 0; p < pts; ++p)
                        bump_counts(norm2(rng.in_ball(dim, window), dim), radii2, row);
                    continue;
                }
                const FundamentalDomainPoint u = sample_fundamental(cfg.lattice, rng);
                if (exact_collapse) {
                    const std::int64_t nblock = cfg.field.block_law.sample(rng);
                    Vec tau = zero_vec();
                    for (int c = 0; c < dim; ++c)
                        tau[c] = rng.uniform(-0.5 * static_cast<double>(nblock),
                                             0.5 * static_cast<double>(nblock));
                    cube_collapse_exact_counts(dim, nblock, tau, u.coords, zero_vec(), cfg.radii,
                                               {row, nr}, rng);
                    continue;
                }
                fill_displacements(cfg.field, win.sites, win.coords, dim, window, rng, disp,
                                   nullptr, nullptr);
                bool bad = false;
                for (std::size_t s = 0; s < win.sites.size(); ++s) {
                    const Vec& p = disp[s];
                    if (check_margin && norm2(p, dim) > margin2) bad = true;
                    Vec pt = zero_vec();
                    double d2 = 0.0;
                    for (int c = 0; c < dim; ++c) {
                        pt[c] = win.sites[s][c] + u.coords[c] + p[c];
                        d2 += pt[c] * pt[c];
                    }
                    bump_counts(d2, radii2, row);
                }
                flagged[i] = bad ? 1 : 0;
            }
        });
    }
    for (auto& th : pool) th.join();

    VarianceCurve curve;
    curve.total_replicas = n;
    curve.margin = margin;
    curve.window_radius = window;
    for (std::int64_t i = 0; i < n; ++i) curve.flagged_replicas += flagged[i];
    curve.reliable = curve.flagged_replicas <= n / 100;

    const std::int64_t used = n - curve.flagged_replicas;
    if (used < 2) throw std::runtime_error("too many flagged replicas: no usable data");

    for (std::size_t j = 0; j < nr; ++j) {
        RadiusStats st;
        st.r = cfg.radii[j];
        st.replicas = used;
        std::int64_t sum = 0;
        for (std::int64_t i = 0; i < n; ++i)
            if (!flagged[i]) sum += counts[static_cast<std::size_t>(i) * nr + j];
        const double mean = static_cast<double>(sum) / static_cast<double>(used);
        double m2 = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            if (flagged[i]) continue;
            const double d = static_cast<double>(counts[static_cast<std::size_t>(i) * nr + j]) - mean;
            m2 += d * d;
        }
        st.mean_count = mean;
        st.variance = m2 / static_cast<double>(used - 1);
        const double vol = ball_volume(dim, st.r);
        st.sigma = st.variance / vol;

        // Batch means over contiguous replica ranges.
        std::vector<double> batch_var;
        batch_var.reserve(cfg.batch_count);
        for (int b = 0; b < cfg.batch_count; ++b) {
            const std::int64_t blo = n * b / cfg.batch_count;
            const std::int64_t bhi = n * (b + 1) / cfg.batch_count;
            std::int64_t bs = 0, bn = 0;
            for (std::int64_t i = blo; i < bhi; ++i)
                if (!flagged[i]) {
                    bs += counts[static_cast<std::size_t>(i) * nr + j];
                    ++bn;
                }
            if (bn < 2) continue;
            const double bm = static_cast<double>(bs) / static_cast<double>(bn);
            double bm2 = 0.0;
            for (std::int64_t i = blo; i < bhi; ++i) {
                if (flagged[i]) continue;
                const double d =
                    static_cast<double>(counts[static_cast<std::size_t>(i) * nr + j]) - bm;
                bm2 += d * d;
            }
            batch_var.push_back(bm2 / static_cast<double>(bn - 1));
        }
        if (batch_var.size() >= 2) {
            double bmean = 0.0;
            for (double v : batch_var) bmean += v;
            bmean /= static_cast<double>(batch_var.size());
            double bvar = 0.0;
            for (double v : batch_var) bvar += (v - bmean) * (v - bmean);
            bvar /= static_cast<double>(batch_var.size() - 1);
            st.std_error = std::sqrt(bvar / static_cast<double>(batch_var.size())) / vol;
            std::vector<double> sorted = batch_var;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t h = sorted.size() / 2;
            const double med = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
            st.median_batch_sigma = med / vol;
        }
        curve.points.push_back(st);
    }
    return curve;
}

DecayFit fit_decay_exponent(const VarianceCurve& curve, double r_min) {
    std::vector<double> x, y, w;
    bool have_se = true;
    for (const RadiusStats& p : curve.points) {
        if (p.r < r_min) continue;
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) continue;
        x.push_back(std::log(p.r));
        y.push_back(std::log(p.sigma));
        if (p.std_error > 0.0) {
            const double se_log = p.std_error / p.sigma;
            w.push_back(1.0 / (se_log * se_log));
        } else {
            have_se = false;
            w.push_back(1.0);
        }
    }
    const int m = static_cast<int>(x.size());
    if (m < 4) throw std::invalid_argument("fit_decay_exponent: fewer than 4 usable points");
    if (!have_se) std::fill(w.begin(), w.end(), 1.0);

    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (int i = 0; i < m; ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xb = swx / sw, yb = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < m; ++i) {
        sxx += w[i] * (x[i] - xb) * (x[i] - xb);
        sxy += w[i] * (x[i] - xb) * (y[i] - yb);
    }
    DecayFit fit;
    fit.points_used = m;
    fit.slope = sxy / sxx;
    fit.intercept = yb - fit.slope * xb;
    if (have_se) {
        fit.std_error = std::sqrt(1.0 / sxx);
    } else {
        double rss = 0.0;
        for (int i = 0; i < m; ++i) {
            const double e = y[i] - (fit.intercept + fit.slope * x[i]);
            rss += e * e;
        }
        fit.std_error = m > 2 ? std::sqrt(rss / (m - 2) / sxx) : 0.0;
    }
    return fit;
}

StarHuSums star_hu_partial_sum(const VarianceCurve& curve) {
    StarHuSums out;
    double acc = 0.0, acc_var = 0.0;
    for (const RadiusStats& p : curve.points) {
        const double n = std::log2(p.r);
        if (std::abs(n - std::round(n)) > 1e-9) continue;  // keep dyadic radii only
        acc += p.sigma;
        acc_var += p.std_error * p.std_error;
        out.radii.push_back(p.r);
        out.partial_sum.push_back(acc);
        out.std_error.push_back(std::sqrt(acc_var));
    }
    if (out.partial_sum.empty())
        throw std::invalid_argument("star_hu_partial_sum: no dyadic radii in curve");
    const std::size_t k = out.partial_sum.size();
    if (k >= 2) {
        const double inc = out.partial_sum[k - 1] - out.partial_sum[k - 2];
        out.flattened = inc < 0.1 * out.partial_sum[k - 1];
    }
    return out;
}

DivergenceProbe divergence_probe(const ProbeConfig& cfg) {
    if (cfg.schedule.size() < 2)
        throw std::invalid_argument("divergence probe needs at least two schedule points");
    for (std::size_t i = 1; i < cfg.schedule.size(); ++i)
        if (cfg.schedule[i] <= cfg.schedule[i - 1])
            throw std::invalid_argument("schedule must be strictly increasing");

    const int dim = cfg.lattice.dim;
    const bool exact_collapse = cfg.field.collapses_blocks();
    const bool poisson = cfg.field.kind == FieldSpec::Kind::Poisson;

    double window = cfg.radius;
    WindowSites win;
    if (!exact_collapse && !poisson) {
        ExperimentConfig tmp;
        tmp.lattice = cfg.lattice;
        tmp.field = cfg.field;
        tmp.radii = {cfg.radius};
        tmp.replicas = 100;
        tmp.batch_count = 2;
        window = cfg.radius + resolve_margin(tmp) + fundamental_domain_diameter(cfg.lattice);
        win = enumerate_window(cfg.lattice, window);
    }

    DivergenceProbe probe;
    probe.schedule = cfg.schedule;

    double mean = 0.0, m2 = 0.0;
    double seg_mean = 0.0, seg_m2 = 0.0;
    std::int64_t seg_n = 0;
    std::size_t next = 0;
    std::vector<Vec> disp;
    const std::int64_t total = cfg.schedule.back();
    const std::vector<double> radii{cfg.radius};
    const std::vector<double> radii2{cfg.radius * cfg.radius};

    for (std::int64_t i = 0; i < total; ++i) {
        Rng rng(cfg.seed, kStreamReplica, static_cast<std::uint64_t>(i));
        std::int64_t c = 0;
        if (poisson) {
            const std::int64_t pts = rng.poisson(cfg.field.intensity * ball_volume(dim, window));
            for (std::int64_t p = 0; p < pts; ++p)
                if (norm2(rng.in_ball(dim, window), dim) <= radii2[0]) ++c;
        } else {
            const FundamentalDomainPoint u = sample_fundamental(cfg.lattice, rng);
            if (exact_collapse) {
                const std::int64_t nblock = cfg.field.block_law.sample(rng);
                Vec tau = zero_vec();
                for (int d = 0; d < dim; ++d)
                    tau[d] = rng.uniform(-0.5 * static_cast<double>(nblock),
                                         0.5 * static_cast<double>(nblock));
                cube_collapse_exact_counts(dim, nblock, tau, u.coords, zero_vec(), radii, {&c, 1},
                                           rng);
            } else {
                fill_displacements(cfg.field, win.sites, win.coords, dim, window, rng, disp,
                                   nullptr, nullptr);
                for (std::size_t s = 0; s < win.sites.size(); ++s) {
                    const Vec pt = add(add(win.sites[s], u.coords, dim), disp[s], dim);
                    if (norm2(pt, dim) <= radii2[0]) ++c;
                }
            }
        }
        const double cd = static_cast<double>(c);
        const std::int64_t nn = i + 1;
        double d1 = cd - mean;
        mean += d1 / static_cast<double>(nn);
        m2 += d1 * (cd - mean);
        ++seg_n;
        d1 = cd - seg_mean;
        seg_mean += d1 / static_cast<double>(seg_n);
        seg_m2 += d1 * (cd - seg_mean);

        if (nn == cfg.schedule[next]) {
            probe.running_variance.push_back(nn > 1 ? m2 / static_cast<double>(nn - 1) : 0.0);
            probe.segment_variance.push_back(seg_n > 1 ? seg_m2 / static_cast<double>(seg_n - 1)
                                                       : 0.0);
            seg_mean = 0.0;
            seg_m2 = 0.0;
            seg_n = 0;
            ++next;
        }
    }

    // Least-squares trend of log running variance against log replica count.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < probe.schedule.size(); ++i) {
        if (!(probe.running_variance[i] > 0.0)) continue;
        const double x = std::log(static_cast<double>(probe.schedule[i]));
        const double y = std::log(probe.running_variance[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    probe.trend_slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    return probe;
}

std::vector<double> structure_factor(const Configuration& cfg, const std::vector<Vec>& ks) {
    if (cfg.points.empty()) throw std::invalid_argument("structure factor needs a nonempty set");
    std::vector<double> out(ks.size(), 0.0);
    for (std::size_t j = 0; j < ks.size(); ++j) {
        const Vec& k = ks[j];
        if (norm2(k, cfg.dim) == 0.0)
            throw std::invalid_argument("structure factor rejects k = 0");
        double cr = 0.0, ci = 0.0;
        for (const Vec& p : cfg.points) {
            const double ph = dot(k, p, cfg.dim);
            cr += std::cos(ph);
            ci -= std::sin(ph);
        }
        out[j] = (cr * cr + ci * ci) / static_cast<double>(cfg.points.size());
    }
    return out;
}

SkResult run_structure_factor(const ExperimentConfig& cfg, int max_index) {
    cfg.validate();
    if (max_index < 1) throw std::invalid_argument("sk needs max_index >= 1");
    if (cfg.field.collapses_blocks() && cfg.field.block_law.kind == BlockLaw::Kind::ParetoCeil)
        throw std::invalid_argument("sk does not support unbounded block laws");

    const int dim = cfg.lattice.dim;
    const double margin = resolve_margin(cfg);
    const double window =
        cfg.radii.back() + margin + fundamental_domain_diameter(cfg.lattice);
    std::int64_t box = static_cast<std::int64_t>(
        std::floor(2.0 * cfg.radii.back() / std::sqrt(static_cast<double>(dim))));
    if (box < 2) throw std::invalid_argument("window too small for a structure-factor box");

    SkResult res;
    res.box_side = static_cast<double>(box);
    res.replicas = cfg.replicas;

    // Half of the dual grid 2 pi m / L (S is symmetric under k -> -k).
    std::vector<Vec> ks;
    const double step = 2.0 * M_PI / static_cast<double>(box);
    IVec m{};
    std::function<void(int)> build = [&](int i) {
        if (i == dim) {
            bool zero = true, neg = false;
            for (int c = 0; c < dim; ++c) {
                if (m[c] != 0) {
                    neg = m[c] < 0;
                    zero = false;
                    break;
                }
            }
            if (zero || neg) return;
            Vec k = zero_vec();
            for (int c = 0; c < dim; ++c) k[c] = step * static_cast<double>(m[c]);
            ks.push_back(k);
            return;
        }
        for (std::int64_t v = -max_index; v <= max_index; ++v) {
            m[i] = v;
            build(i + 1);
        }
    };
    build(0);
    res.ks = ks;

    WindowSites win;
    const bool poisson = cfg.field.kind == FieldSpec::Kind::Poisson;
    if (!poisson) win = enumerate_window(cfg.lattice, window);

    const double half = 0.5 * static_cast<double>(box);
    std::vector<double> all(static_cast<std::size_t>(cfg.replicas) * ks.size(), 0.0);
    parallel_for(cfg.replicas, cfg.threads, [&](std::int64_t i) {
        Rng rng(cfg.seed, kStreamSk, static_cast<std::uint64_t>(i));
        Configuration c;
        if (poisson) {
            c = poisson_reference(cfg.field.intensity, dim, window, rng);
        } else {
            const FundamentalDomainPoint u = sample_fundamental(cfg.lattice, rng);
            std::vector<Vec> disp;
            fill_displacements(cfg.field, win.sites, win.coords, dim, window, rng, disp, nullptr,
                               nullptr);
            c.dim = dim;
            c.window_radius = window;
            c.origin_shift = u.coords;
            c.points.reserve(win.sites.size());
            for (std::size_t s = 0; s < win.sites.size(); ++s)
                c.points.push_back(add(add(win.sites[s], u.coords, dim), disp[s], dim));
        }
        Configuration boxed;
        boxed.dim = dim;
        boxed.window_radius = half;
        for (const Vec& p : c.points) {
            bool in = true;
            for (int d = 0; d < dim; ++d)
                if (!(p[d] >= -half && p[d] < half)) in = false;
            if (in) boxed.points.push_back(p);
        }
        std::vector<double> s =
            boxed.points.empty() ? std::vector<double>(ks.size(), 0.0) : structure_factor(boxed, ks);
        std::copy(s.begin(), s.end(), all.begin() + static_cast<std::size_t>(i) * ks.size());
    });

    res.s.assign(ks.size(), 0.0);
    for (std::int64_t i = 0; i < cfg.replicas; ++i)
        for (std::size_t j = 0; j < ks.size(); ++j)
            res.s[j] += all[static_cast<std::size_t>(i) * ks.size() + j];
    for (double& v : res.s) v /= static_cast<double>(cfg.replicas);
    return res;
}

}  // namespace hyperlat
