#include "hyperlat/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace hyperlat {

namespace {

bool basis_is_identity(const Mat& m) {
    for (int c = 0; c < m.dim; ++c)
        for (int r = 0; r < m.dim; ++r)
            if (m.at(r, c) != (r == c ? 1.0 : 0.0)) return false;
    return true;
}

}  // namespace

Lattice make_lattice(int dim, const Mat& basis) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("lattice dimension must be in 1.." + std::to_string(kMaxDim));
    if (basis.dim != dim) throw std::invalid_argument("basis dimension mismatch");
    for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r)
            if (!std::isfinite(basis.at(r, c)))
                throw std::invalid_argument("basis has non-finite entries");

    const double det = determinant(basis);
    double scale_mag = 0.0;
    for (int c = 0; c < dim; ++c) scale_mag = std::max(scale_mag, basis.column_norm(c));
    if (scale_mag == 0.0 || std::abs(det) < 1e-14 * std::pow(scale_mag, dim))
        throw std::invalid_argument("basis is singular or numerically degenerate");

    Lattice lat;
    lat.dim = dim;
    lat.basis = basis;
    const double f = std::pow(std::abs(det), -1.0 / dim);
    for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r) lat.basis.at(r, c) *= f;
    lat.inv_basis = inverse(lat.basis);

    // Crude condition estimate; rejects bases no downstream loop can survive.
    double bn = 0.0, in = 0.0;
    for (int c = 0; c < dim; ++c) {
        bn = std::max(bn, lat.basis.column_norm(c));
        in = std::max(in, lat.inv_basis.column_norm(c));
    }
    if (bn * in > 1e12) throw std::invalid_argument("basis condition number too large");

    lat.is_integer = basis_is_identity(lat.basis);
    return lat;
}

Lattice make_lattice(const std::string& name) {
    if (name == "Z1") return make_lattice(1, identity_mat(1));
    if (name == "Z2") return make_lattice(2, identity_mat(2));
    if (name == "Z3") return make_lattice(3, identity_mat(3));
    if (name == "triangular") {
        Mat b;
        b.dim = 2;
        b.at(0, 0) = 1.0;
        b.at(1, 0) = 0.0;
        b.at(0, 1) = 0.5;
        b.at(1, 1) = std::sqrt(3.0) / 2.0;
        return make_lattice(2, b);
    }
    throw std::invalid_argument("unknown lattice name: " + name);
}

Lattice dual_lattice(const Lattice& lat) {
    // Dual basis is the inverse transpose; covolume stays 1.
    return make_lattice(lat.dim, lat.inv_basis.transposed());
}

Decomposition decompose(const Lattice& lat, const Vec& t) {
    Decomposition d;
    const Vec f = lat.inv_basis.apply(t);
    Vec frac = zero_vec();
    for (int i = 0; i < lat.dim; ++i) {
        const double fl = std::floor(f[i]);
        d.lattice_coords[i] = static_cast<std::int64_t>(fl);
        frac[i] = f[i] - fl;
        if (frac[i] >= 1.0) {  // guard against floor rounding at integer inputs
            frac[i] -= 1.0;
            d.lattice_coords[i] += 1;
        }
    }
    d.lattice_point = lat.basis.apply_int(d.lattice_coords);
    d.fractional.dim = lat.dim;
    d.fractional.coords = lat.basis.apply(frac);
    return d;
}

FundamentalDomainPoint sample_fundamental(const Lattice& lat, Rng& rng) {
    Vec t = zero_vec();
    for (int i = 0; i < lat.dim; ++i) t[i] = rng.u01();
    FundamentalDomainPoint u;
    u.dim = lat.dim;
    u.coords = lat.basis.apply(t);
    return u;
}

void for_each_point_in_ball(const Lattice& lat, const Vec& center, double R,
                            const std::function<void(const IVec&, const Vec&)>& fn,
                            std::int64_t cap) {
    if (!(R >= 0.0)) throw std::invalid_argument("radius must be non-negative");
    const int d = lat.dim;
    const Vec fc = lat.inv_basis.apply(center);

    // Integer bounding box: |n_i - fc_i| <= R * |row_i(B^-1)|.
    std::int64_t lo[kMaxDim], hi[kMaxDim];
    std::int64_t box = 1;
    for (int i = 0; i < d; ++i) {
        const double rad = R * lat.inv_basis.row_norm(i);
        lo[i] = static_cast<std::int64_t>(std::ceil(fc[i] - rad));
        hi[i] = static_cast<std::int64_t>(std::floor(fc[i] + rad));
        if (hi[i] < lo[i]) return;
        const std::int64_t w = hi[i] - lo[i] + 1;
        if (box > cap / w + 1) throw std::length_error("point enumeration exceeds capacity cap");
        box *= w;
    }
    if (box > cap) throw std::length_error("point enumeration exceeds capacity cap");

    const double R2 = R * R;
    IVec n{};
    Vec x = zero_vec();
    // Nested integer loops, innermost dimension last; order is deterministic.
    std::function<void(int)> walk = [&](int i) {
        if (i == d) {
            x = lat.point(n);
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                const double dj = x[j] - center[j];
                s += dj * dj;
            }
            if (s <= R2) fn(n, x);
            return;
        }
        for (std::int64_t v = lo[i]; v <= hi[i]; ++v) {
            n[i] = v;
            walk(i + 1);
        }
    };
    walk(0);
}

std::vector<Vec> points_in_ball(const Lattice& lat, const Vec& center, double R,
                                std::int64_t cap) {
    std::vector<Vec> pts;
    for_each_point_in_ball(lat, center, R, [&](const IVec&, const Vec& x) { pts.push_back(x); },
                           cap);
    return pts;
}

std::int64_t count_points_in_ball(const Lattice& lat, const Vec& center, double R,
                                  std::int64_t cap) {
    std::int64_t c = 0;
    for_each_point_in_ball(lat, center, R, [&](const IVec&, const Vec&) { ++c; }, cap);
    return c;
}

std::int64_t count_annulus(const Lattice& lat, double R, double width, std::int64_t cap) {
    if (!(width >= 0.0 && width <= R)) throw std::invalid_argument("need 0 <= width <= R");
    const double inner2 = (R - width) * (R - width);
    std::int64_t c = 0;
    for_each_point_in_ball(lat, zero_vec(), R + width,
                           [&](const IVec&, const Vec& x) {
                               if (norm2(x, lat.dim) >= inner2) ++c;
                           },
                           cap);
    return c;
}

CountReport gauss_residual(const Lattice& lat, const Vec& center, double R) {
    CountReport rep;
    rep.radius = R;
    rep.count = count_points_in_ball(lat, center, R);
    rep.lebesgue = ball_volume(lat.dim, R);
    rep.residual = static_cast<double>(rep.count) - rep.lebesgue;
    return rep;
}

double gaussian_lattice_sum(const Lattice& lat, double s, double cut) {
    double total = 0.0;
    for_each_point_in_ball(lat, zero_vec(), cut, [&](const IVec&, const Vec& x) {
        total += std::exp(-norm2(x, lat.dim) / (2.0 * s));
    });
    return total;
}

double fundamental_domain_diameter(const Lattice& lat) {
    double best = 0.0;
    for (int mask = 1; mask < (1 << lat.dim); ++mask) {
        Vec v = zero_vec();
        for (int i = 0; i < lat.dim; ++i) {
            if (!(mask & (1 << i))) continue;
            for (int r = 0; r < lat.dim; ++r) v[r] += lat.basis.at(r, i);
        }
        best = std::max(best, norm(v, lat.dim));
    }
    return best;
}

double gaussian_dual_sum(const Lattice& lat, double s, double cut) {
    // Fourier transform of exp(-|x|^2 / 2s) is (2 pi s)^(d/2) exp(-s|k|^2 / 2),
    // evaluated on 2*pi*(dual lattice).
    const Lattice dual = dual_lattice(lat);
    const int d = lat.dim;
    const double pref = std::pow(2.0 * M_PI * s, 0.5 * d);
    double total = 0.0;
    for_each_point_in_ball(dual, zero_vec(), cut, [&](const IVec&, const Vec& k) {
        const double w = 2.0 * M_PI;
        total += pref * std::exp(-s * w * w * norm2(k, d) / 2.0);
    });
    return total;
}

}  // namespace hyperlat
