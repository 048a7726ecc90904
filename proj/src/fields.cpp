#include "hyperlat/fields.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

namespace hyperlat {

namespace {

double erf_based_abs_cdf(int dim, double sd, double x) {
    // CDF of |p| for p with i.i.d. N(0, sd^2) coordinates, dim <= 4.
    const double t = x / (sd * std::sqrt(2.0));
    switch (dim) {
        case 1:
            return std::erf(t);
        case 2:
            return 1.0 - std::exp(-t * t);
        case 3:
            return std::erf(t) - 2.0 / std::sqrt(M_PI) * t * std::exp(-t * t);
        case 4:
            return 1.0 - (1.0 + t * t) * std::exp(-t * t);
        default:
            throw std::invalid_argument("gaussian norm CDF: unsupported dimension");
    }
}

double chi_density(int dim, double sd, double x) {
    // Density of |p| for i.i.d. N(0, sd^2) coordinates.
    const double y = x / sd;
    const double c = 2.0 / (std::pow(2.0, 0.5 * dim) * std::tgamma(0.5 * dim));
    return c * std::pow(y, dim - 1) * std::exp(-0.5 * y * y) / sd;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (b <= a) return 0.0;
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// ---------------------------------------------------------------------------
// Minimal in-place radix-2 FFT (power-of-two sizes only)
// ---------------------------------------------------------------------------

void fft_1d(std::complex<double>* a, int n, int stride, int sign) {
    // Bit-reversal permutation.
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i * stride], a[j * stride]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                auto& u = a[(i + j) * stride];
                auto& v = a[(i + j + len / 2) * stride];
                const auto t = v * w;
                v = u - t;
                u += t;
                w *= wl;
            }
        }
    }
}

void fft_nd(std::vector<std::complex<double>>& a, int dim, int grid, int sign) {
    if (dim == 1) {
        fft_1d(a.data(), grid, 1, sign);
        return;
    }
    // dim == 2: rows then columns.
    for (int r = 0; r < grid; ++r) fft_1d(a.data() + static_cast<std::size_t>(r) * grid, grid, 1, sign);
    for (int c = 0; c < grid; ++c) fft_1d(a.data() + c, grid, grid, sign);
}

double torus_frequency_norm(int dim, int grid, const std::int64_t* m) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        std::int64_t mi = m[i];
        if (mi > grid / 2) mi -= grid;
        const double w = 2.0 * M_PI * static_cast<double>(mi) / grid;
        s += w * w;
    }
    return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// IidDistribution
// ---------------------------------------------------------------------------

IidDistribution IidDistribution::point_mass(int dim) {
    IidDistribution d;
    d.kind = Kind::PointMass;
    d.dim = dim;
    return d;
}

IidDistribution IidDistribution::gaussian(int dim, double sd) {
    if (!(sd >= 0.0)) throw std::invalid_argument("gaussian sd must be >= 0");
    IidDistribution d;
    d.kind = Kind::Gaussian;
    d.dim = dim;
    d.sd = sd;
    return d;
}

IidDistribution IidDistribution::uniform(int dim, double half_width) {
    if (!(half_width >= 0.0)) throw std::invalid_argument("uniform half width must be >= 0");
    IidDistribution d;
    d.kind = Kind::Uniform;
    d.dim = dim;
    d.half_width = half_width;
    return d;
}

IidDistribution IidDistribution::pareto(int dim, double tail_index, double scale) {
    if (!(tail_index > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("pareto needs tail_index > 0 and scale > 0");
    IidDistribution d;
    d.kind = Kind::Pareto;
    d.dim = dim;
    d.tail_index = tail_index;
    d.pareto_scale = scale;
    return d;
}

Vec IidDistribution::sample(Rng& rng) const {
    Vec p = zero_vec();
    switch (kind) {
        case Kind::PointMass:
            break;  // centered point mass is identically zero
        case Kind::Gaussian:
            for (int i = 0; i < dim; ++i) p[i] = sd * rng.normal();
            break;
        case Kind::Uniform:
            for (int i = 0; i < dim; ++i) p[i] = rng.uniform(-half_width, half_width);
            break;
        case Kind::Pareto: {
            const double r = rng.pareto(tail_index, pareto_scale);
            p = scale(rng.unit_vector(dim), r, dim);
            break;
        }
    }
    return p;
}

double IidDistribution::bound() const {
    switch (kind) {
        case Kind::PointMass:
            return 0.0;
        case Kind::Uniform:
            return half_width * std::sqrt(static_cast<double>(dim));
        default:
            return std::numeric_limits<double>::infinity();
    }
}

double IidDistribution::quantile_abs(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must be in (0,1)");
    switch (kind) {
        case Kind::PointMass:
            return 0.0;
        case Kind::Uniform:
            return bound();
        case Kind::Pareto:
            return pareto_scale * std::pow(1.0 - q, -1.0 / tail_index);
        case Kind::Gaussian: {
            if (sd == 0.0) return 0.0;
            double lo = 0.0, hi = sd;
            while (erf_based_abs_cdf(dim, sd, hi) < q) hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (erf_based_abs_cdf(dim, sd, mid) < q ? lo : hi) = mid;
            }
            return hi;
        }
    }
    return 0.0;
}

double IidDistribution::tail_moment(double m, double cut) const {
    switch (kind) {
        case Kind::PointMass:
            return 0.0;
        case Kind::Uniform: {
            const double b = bound();
            return cut >= b ? 0.0 : std::pow(b, m);  // crude upper bound inside the support
        }
        case Kind::Pareto: {
            const double a = tail_index;
            if (m >= a) return std::numeric_limits<double>::infinity();
            const double c0 = std::max(cut, pareto_scale);
            return a / (a - m) * std::pow(pareto_scale, a) * std::pow(c0, m - a);
        }
        case Kind::Gaussian: {
            if (sd == 0.0) return 0.0;
            const double hi = std::max(cut, 0.0) + 14.0 * sd;
            return simpson([&](double x) { return std::pow(x, m) * chi_density(dim, sd, x); },
                           std::max(cut, 0.0), hi, 4096);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// BlockLaw
// ---------------------------------------------------------------------------

BlockLaw BlockLaw::fixed(std::int64_t n) {
    BlockLaw l;
    l.kind = Kind::Fixed;
    l.fixed_n = n;
    return l;
}

BlockLaw BlockLaw::pareto_ceil(double tail_index, double scale) {
    if (!(tail_index > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("pareto block law needs tail_index > 0 and scale > 0");
    BlockLaw l;
    l.kind = Kind::ParetoCeil;
    l.tail_index = tail_index;
    l.scale = scale;
    return l;
}

BlockLaw BlockLaw::table(std::vector<std::int64_t> n, std::vector<double> w) {
    if (n.size() != w.size() || n.empty()) throw std::invalid_argument("empty block-law table");
    BlockLaw l;
    l.kind = Kind::Table;
    double tot = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw std::invalid_argument("block-law weights must be >= 0");
        tot += x;
    }
    if (!(tot > 0.0)) throw std::invalid_argument("block-law weights sum to zero");
    l.table_n = std::move(n);
    l.table_w = std::move(w);
    l.table_cdf.resize(l.table_w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < l.table_w.size(); ++i) {
        l.table_w[i] /= tot;
        acc += l.table_w[i];
        l.table_cdf[i] = acc;
    }
    l.table_cdf.back() = 1.0;
    return l;
}

BlockLaw BlockLaw::power_range(double exponent, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("empty block-law range");
    std::vector<std::int64_t> n;
    std::vector<double> w;
    for (std::int64_t v = lo; v <= hi; ++v) {
        n.push_back(v);
        w.push_back(std::pow(static_cast<double>(v), exponent));
    }
    return table(std::move(n), std::move(w));
}

std::int64_t BlockLaw::min_support() const {
    switch (kind) {
        case Kind::Fixed:
            return fixed_n;
        case Kind::ParetoCeil:
            return std::max<std::int64_t>(10, static_cast<std::int64_t>(std::ceil(scale)));
        case Kind::Table:
            return *std::min_element(table_n.begin(), table_n.end());
    }
    return 0;
}

std::int64_t BlockLaw::sample(Rng& rng) const {
    switch (kind) {
        case Kind::Fixed:
            return fixed_n;
        case Kind::ParetoCeil: {
            const double x = rng.pareto(tail_index, scale);
            return std::max<std::int64_t>(10, static_cast<std::int64_t>(std::ceil(x)));
        }
        case Kind::Table: {
            const double u = rng.u01();
            const auto it = std::upper_bound(table_cdf.begin(), table_cdf.end(), u);
            const std::size_t i = std::min<std::size_t>(it - table_cdf.begin(), table_n.size() - 1);
            return table_n[i];
        }
    }
    return 10;
}

// ---------------------------------------------------------------------------
// Mixture weights
// ---------------------------------------------------------------------------

MixtureWeights mixture_weights(const std::vector<double>& sigma_tilde, int dim,
                               std::int64_t n_max) {
    if (n_max < 10) throw std::invalid_argument("mixture needs n_max >= 10");
    if (static_cast<std::int64_t>(sigma_tilde.size()) < n_max + 1)
        throw std::invalid_argument("sigma_tilde must tabulate arguments 1..n_max+1");
    for (std::int64_t i = 0; i + 1 <= n_max; ++i) {
        if (!(sigma_tilde[i] > 0.0))
            throw std::invalid_argument("sigma_tilde must be positive");
        if (sigma_tilde[i + 1] > sigma_tilde[i] * (1.0 + 1e-12))
            throw std::invalid_argument("sigma_tilde must be non-increasing");
    }

    MixtureWeights out;
    double total = 0.0, kept = 0.0;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        const double diff = sigma_tilde[n - 1] - sigma_tilde[n];
        const double raw = diff / std::pow(static_cast<double>(n), dim);
        total += raw;
        if (n >= 10) {
            out.n.push_back(n);
            out.alpha.push_back(raw);
            kept += raw;
        }
    }
    if (!(kept > 0.0)) throw std::invalid_argument("degenerate sigma_tilde: no mass on N >= 10");
    for (double& a : out.alpha) a /= kept;
    // Mass beyond n_max is bounded by telescoping the remaining decrements.
    const double tail_bound =
        sigma_tilde[n_max] / std::pow(static_cast<double>(n_max + 1), dim);
    out.normalizer = total;
    out.truncated_mass = (total - kept + tail_bound) / (total + tail_bound);
    return out;
}

// ---------------------------------------------------------------------------
// FieldSpec factories
// ---------------------------------------------------------------------------

FieldSpec FieldSpec::make_iid(IidDistribution dist) {
    FieldSpec s;
    s.kind = Kind::Iid;
    s.iid = dist;
    return s;
}

FieldSpec FieldSpec::spectral_gaussian(double delta, int grid, double amplitude) {
    if (!(delta > 0.0)) throw std::invalid_argument("spectral field needs delta > 0");
    if (grid < 4 || (grid & (grid - 1)) != 0)
        throw std::invalid_argument("spectral field grid must be a power of two >= 4");
    FieldSpec s;
    s.kind = Kind::SpectralGaussian;
    s.delta = delta;
    s.grid = grid;
    s.amplitude = amplitude;
    return s;
}

FieldSpec FieldSpec::cube_collapse(BlockLaw law) {
    if (law.min_support() < 10)
        throw std::invalid_argument("block law support must satisfy N >= 10");
    FieldSpec s;
    s.kind = Kind::CubeCollapse;
    s.block_law = std::move(law);
    return s;
}

FieldSpec FieldSpec::radial_push(double epsilon, BlockLaw law) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("radial push needs epsilon > 0");
    if (law.min_support() < 10)
        throw std::invalid_argument("block law support must satisfy N >= 10");
    FieldSpec s;
    s.kind = Kind::RadialPush;
    s.epsilon = epsilon;
    s.block_law = std::move(law);
    return s;
}

FieldSpec FieldSpec::slow_decay_mixture(const std::vector<double>& sigma_tilde, int dim,
                                        std::int64_t n_max) {
    const MixtureWeights w = mixture_weights(sigma_tilde, dim, n_max);
    FieldSpec s;
    s.kind = Kind::SlowDecayMixture;
    s.block_law = BlockLaw::table(w.n, w.alpha);
    s.mixture_normalizer = w.normalizer;
    s.mixture_truncated_mass = w.truncated_mass;
    return s;
}

FieldSpec FieldSpec::poisson(double intensity) {
    if (!(intensity > 0.0)) throw std::invalid_argument("poisson intensity must be > 0");
    FieldSpec s;
    s.kind = Kind::Poisson;
    s.intensity = intensity;
    return s;
}

// ---------------------------------------------------------------------------
// Field realization
// ---------------------------------------------------------------------------

namespace {

IVec block_index_of(const Vec& y, std::int64_t n, int dim) {
    IVec b{};
    for (int i = 0; i < dim; ++i)
        b[i] = static_cast<std::int64_t>(std::floor(y[i] / static_cast<double>(n) + 0.5));
    return b;
}

Vec block_center_point(const IVec& b, std::int64_t n, int dim) {
    Vec k = zero_vec();
    for (int i = 0; i < dim; ++i) k[i] = static_cast<double>(b[i] * n);
    return k;
}

}  // namespace

Vec radial_push_displacement(const Vec& y, const Vec& tau, const Vec& center, double epsilon,
                             int dim, Rng& rng) {
    Vec d = zero_vec();
    for (int i = 0; i < dim; ++i) d[i] = y[i] + tau[i] - center[i];
    const double nh = norm(d, dim);
    if (nh < 1e-14) return scale(rng.unit_vector(dim), epsilon, dim);
    return scale(d, epsilon / nh, dim);
}

std::vector<Vec> block_displacements_from_latents(const FieldSpec& spec, const BlockLatents& lat,
                                                  std::span<const Vec> sites, int dim) {
    std::vector<Vec> out(sites.size(), zero_vec());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        Vec y = add(sites[i], lat.tau, dim);
        const IVec b = block_index_of(y, lat.n, dim);
        const auto it = lat.centers.find(b);
        if (it == lat.centers.end())
            throw std::logic_error("block latents are missing a center for a window site");
        const Vec& c = it->second;
        if (spec.kind == FieldSpec::Kind::RadialPush) {
            Vec d = sub(y, c, dim);
            const double nh = norm(d, dim);
            if (nh < 1e-14)
                throw std::logic_error("coincident site/center in latent replay");
            out[i] = scale(d, spec.epsilon / nh, dim);
        } else {
            out[i] = sub(c, y, dim);
        }
    }
    return out;
}

namespace {

void fill_block_field(const FieldSpec& spec, std::span<const Vec> sites, int dim, Rng& rng,
                      std::vector<Vec>& out, BlockLatents& latents) {
    const std::int64_t n = spec.block_law.sample(rng);
    latents.n = n;
    latents.tau = zero_vec();
    for (int i = 0; i < dim; ++i)
        latents.tau[i] = rng.uniform(-0.5 * static_cast<double>(n), 0.5 * static_cast<double>(n));
    latents.centers.clear();

    out.resize(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const Vec y = add(sites[i], latents.tau, dim);
        const IVec b = block_index_of(y, n, dim);
        auto it = latents.centers.find(b);
        if (it == latents.centers.end()) {
            Vec c = block_center_point(b, n, dim);
            for (int j = 0; j < dim; ++j)
                c[j] += rng.uniform(-0.5 * static_cast<double>(n), 0.5 * static_cast<double>(n));
            it = latents.centers.emplace(b, c).first;
        }
        const Vec& c = it->second;
        if (spec.kind == FieldSpec::Kind::RadialPush) {
            Vec d = sub(y, c, dim);
            const double nh = norm(d, dim);
            out[i] = nh < 1e-14 ? scale(rng.unit_vector(dim), spec.epsilon, dim)
                                : scale(d, spec.epsilon / nh, dim);
        } else {
            out[i] = sub(c, y, dim);
        }
    }
}

void fill_spectral_field(const FieldSpec& spec, std::span<const IVec> coords, int dim,
                         double window_radius, Rng& rng, std::vector<Vec>& out,
                         TorusFieldLatents& latents) {
    if (window_radius > spec.grid / 4.0)
        throw std::invalid_argument("spectral field window exceeds grid/4");
    latents.grid = spec.grid;
    latents.coord_fields.clear();
    for (int j = 0; j < dim; ++j)
        latents.coord_fields.push_back(
            gaussian_field_synthesize(dim, spec.delta, spec.grid, spec.amplitude, rng));

    const int g = spec.grid;
    out.resize(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        std::size_t idx = 0;
        for (int j = 0; j < dim; ++j) {
            std::int64_t m = coords[i][j] % g;
            if (m < 0) m += g;
            idx = idx * g + static_cast<std::size_t>(m);
        }
        Vec p = zero_vec();
        for (int j = 0; j < dim; ++j) p[j] = latents.coord_fields[j][idx];
        out[i] = p;
    }
}

}  // namespace

void fill_displacements(const FieldSpec& spec, std::span<const Vec> sites,
                        std::span<const IVec> site_coords, int dim, double window_radius,
                        Rng& rng, std::vector<Vec>& out, BlockLatents* block_latents,
                        TorusFieldLatents* torus_latents) {
    switch (spec.kind) {
        case FieldSpec::Kind::Iid: {
            out.resize(sites.size());
            for (auto& p : out) p = spec.iid.sample(rng);
            return;
        }
        case FieldSpec::Kind::SpectralGaussian: {
            TorusFieldLatents local;
            fill_spectral_field(spec, site_coords, dim, window_radius, rng, out,
                                torus_latents ? *torus_latents : local);
            return;
        }
        case FieldSpec::Kind::CubeCollapse:
        case FieldSpec::Kind::SlowDecayMixture:
        case FieldSpec::Kind::RadialPush: {
            BlockLatents local;
            fill_block_field(spec, sites, dim, rng, out, block_latents ? *block_latents : local);
            return;
        }
        case FieldSpec::Kind::Poisson:
            throw std::invalid_argument("the poisson reference is not a displacement field");
    }
}

FieldSample sample_field(const FieldSpec& spec, const Lattice& lat, double window_radius,
                         Rng& rng) {
    if (!(window_radius > 0.0)) throw std::invalid_argument("window radius must be > 0");
    if (spec.kind == FieldSpec::Kind::Poisson)
        throw std::invalid_argument("the poisson reference is not a displacement field");
    if (spec.is_block_construction() || spec.kind == FieldSpec::Kind::SpectralGaussian) {
        if (!lat.is_integer)
            throw std::invalid_argument("block and spectral constructions require Z^d");
    }

    FieldSample fs;
    fs.lattice = lat;
    fs.window_radius = window_radius;
    for_each_point_in_ball(lat, zero_vec(), window_radius, [&](const IVec& n, const Vec& x) {
        fs.site_coords.push_back(n);
        fs.sites.push_back(x);
    });
    if (fs.sites.empty())
        throw std::invalid_argument("window too small: it contains no lattice site");

    if (spec.is_block_construction()) fs.block.emplace();
    if (spec.kind == FieldSpec::Kind::SpectralGaussian) fs.torus.emplace();
    fill_displacements(spec, fs.sites, fs.site_coords, lat.dim, window_radius, rng,
                       fs.displacements, fs.block ? &*fs.block : nullptr,
                       fs.torus ? &*fs.torus : nullptr);
    return fs;
}

Configuration realize_configuration(const Lattice& lat, const FieldSample& field,
                                    const FundamentalDomainPoint& u) {
    if (field.lattice.dim != lat.dim)
        throw std::invalid_argument("field/lattice dimension mismatch");
    Configuration cfg;
    cfg.dim = lat.dim;
    cfg.window_radius = field.window_radius;
    cfg.origin_shift = u.coords;
    cfg.points.resize(field.sites.size());
    for (std::size_t i = 0; i < field.sites.size(); ++i)
        cfg.points[i] = add(add(field.sites[i], u.coords, lat.dim), field.displacements[i], lat.dim);
    return cfg;
}

// ---------------------------------------------------------------------------
// Exact collapse counting
// ---------------------------------------------------------------------------

void cube_collapse_exact_counts(int dim, std::int64_t n, const Vec& tau, const Vec& u,
                                const Vec& center, std::span<const double> radii,
                                std::span<std::int64_t> out_counts,
                                const std::function<Vec(const IVec&)>& center_of) {
    const double rmax = radii.empty() ? 0.0 : radii.back();
    for (auto& c : out_counts) c = 0;

    // Candidate blocks: the image point C - tau + u lies within N/2 (in each
    // coordinate) of the block center k, so only nearby blocks can reach B_r.
    std::int64_t blo[kMaxDim], bhi[kMaxDim];
    const double nd = static_cast<double>(n);
    for (int i = 0; i < dim; ++i) {
        const double anchor = tau[i] - u[i] + center[i];
        blo[i] = static_cast<std::int64_t>(std::floor((anchor - rmax - 0.5 * nd) / nd));
        bhi[i] = static_cast<std::int64_t>(std::ceil((anchor + rmax + 0.5 * nd) / nd));
    }

    IVec b{};
    std::function<void(int)> walk = [&](int i) {
        if (i == dim) {
            // Multiplicity: lattice points x with x + tau in the block.
            std::int64_t mult = 1;
            for (int j = 0; j < dim; ++j) {
                const double kj = static_cast<double>(b[j] * n);
                const std::int64_t hi = static_cast<std::int64_t>(std::ceil(kj + 0.5 * nd - tau[j]));
                const std::int64_t lo = static_cast<std::int64_t>(std::ceil(kj - 0.5 * nd - tau[j]));
                mult *= (hi - lo);
                if (mult <= 0) return;
            }
            const Vec c = center_of(b);
            Vec img = zero_vec();
            for (int j = 0; j < dim; ++j) img[j] = c[j] - tau[j] + u[j] - center[j];
            const double dist = norm(img, dim);
            for (std::size_t j = 0; j < radii.size(); ++j)
                if (dist <= radii[j]) out_counts[j] += mult;
            return;
        }
        for (std::int64_t v = blo[i]; v <= bhi[i]; ++v) {
            b[i] = v;
            walk(i + 1);
        }
    };
    walk(0);
}

void cube_collapse_exact_counts(int dim, std::int64_t n, const Vec& tau, const Vec& u,
                                const Vec& center, std::span<const double> radii,
                                std::span<std::int64_t> out_counts, Rng& rng) {
    const double nd = static_cast<double>(n);
    cube_collapse_exact_counts(dim, n, tau, u, center, radii, out_counts,
                               [&](const IVec& b) {
                                   Vec c = block_center_point(b, n, dim);
                                   for (int j = 0; j < dim; ++j)
                                       c[j] += rng.uniform(-0.5 * nd, 0.5 * nd);
                                   return c;
                               });
}

// ---------------------------------------------------------------------------
// Spectral Gaussian synthesis
// ---------------------------------------------------------------------------

std::vector<double> gaussian_field_synthesize(int dim, double delta, int grid, double amplitude,
                                              Rng& rng) {
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("spectral synthesis supports dimensions 1 and 2");
    if (grid < 4 || (grid & (grid - 1)) != 0)
        throw std::invalid_argument("grid must be a power of two >= 4");

    const std::size_t total = dim == 1 ? grid : static_cast<std::size_t>(grid) * grid;
    std::vector<std::complex<double>> a(total);
    for (auto& z : a) z = std::complex<double>(rng.normal(), 0.0);

    // White noise -> Fourier space: hermitian coefficients with E|W_m|^2 = G^d.
    fft_nd(a, dim, grid, -1);

    std::int64_t m[kMaxDim] = {0, 0, 0, 0};
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (dim == 1) {
            m[0] = static_cast<std::int64_t>(idx);
        } else {
            m[0] = static_cast<std::int64_t>(idx / grid);
            m[1] = static_cast<std::int64_t>(idx % grid);
        }
        const double w = torus_frequency_norm(dim, grid, m);
        const double rho = w == 0.0 ? 0.0 : amplitude * std::pow(w, delta - 2.0);
        a[idx] *= std::sqrt(rho);
    }

    fft_nd(a, dim, grid, +1);
    std::vector<double> field(total);
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i) field[i] = a[i].real() * inv;
    return field;
}

double gaussian_field_exact_covariance(int dim, double delta, int grid, double amplitude,
                                       const IVec& lag) {
    const std::size_t total = dim == 1 ? grid : static_cast<std::size_t>(grid) * grid;
    double acc = 0.0;
    std::int64_t m[kMaxDim] = {0, 0, 0, 0};
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (dim == 1) {
            m[0] = static_cast<std::int64_t>(idx);
        } else {
            m[0] = static_cast<std::int64_t>(idx / grid);
            m[1] = static_cast<std::int64_t>(idx % grid);
        }
        const double w = torus_frequency_norm(dim, grid, m);
        if (w == 0.0) continue;
        double phase = 0.0;
        for (int i = 0; i < dim; ++i) {
            std::int64_t mi = m[i];
            if (mi > grid / 2) mi -= grid;
            phase += 2.0 * M_PI * static_cast<double>(mi) * static_cast<double>(lag[i]) / grid;
        }
        acc += amplitude * std::pow(w, delta - 2.0) * std::cos(phase);
    }
    return acc / static_cast<double>(total);
}

}  // namespace hyperlat
