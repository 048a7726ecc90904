#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyperlat {

// Points live in dimension 1..kMaxDim. A fixed-size array avoids heap
// traffic in the counting loops; unused components stay at zero.
inline constexpr int kMaxDim = 4;

using Vec = std::array<double, kMaxDim>;
using IVec = std::array<std::int64_t, kMaxDim>;

inline Vec zero_vec() { return Vec{0.0, 0.0, 0.0, 0.0}; }

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a, int dim) { return dot(a, a, dim); }

inline double norm(const Vec& a, int dim) { return std::sqrt(norm2(a, dim)); }

inline Vec add(const Vec& a, const Vec& b, int dim) {
    Vec r = zero_vec();
    for (int i = 0; i < dim; ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b, int dim) {
    Vec r = zero_vec();
    for (int i = 0; i < dim; ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(const Vec& a, double c, int dim) {
    Vec r = zero_vec();
    for (int i = 0; i < dim; ++i) r[i] = c * a[i];
    return r;
}

// Volume of the Euclidean ball of radius r in dimension dim.
inline double ball_volume(int dim, double r) {
    return std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0) * std::pow(r, dim);
}

// Square d x d matrix, column-major, d <= kMaxDim.
struct Mat {
    int dim = 0;
    std::array<double, kMaxDim * kMaxDim> a{};  // a[col * kMaxDim + row]

    double& at(int row, int col) { return a[col * kMaxDim + row]; }
    double at(int row, int col) const { return a[col * kMaxDim + row]; }

    Vec apply(const Vec& v) const {
        Vec r = zero_vec();
        for (int c = 0; c < dim; ++c)
            for (int rw = 0; rw < dim; ++rw) r[rw] += at(rw, c) * v[c];
        return r;
    }

    Vec apply_int(const IVec& v) const {
        Vec r = zero_vec();
        for (int c = 0; c < dim; ++c)
            for (int rw = 0; rw < dim; ++rw) r[rw] += at(rw, c) * static_cast<double>(v[c]);
        return r;
    }

    Mat transposed() const {
        Mat t;
        t.dim = dim;
        for (int c = 0; c < dim; ++c)
            for (int r = 0; r < dim; ++r) t.at(c, r) = at(r, c);
        return t;
    }

    double column_norm(int col) const {
        double s = 0.0;
        for (int r = 0; r < dim; ++r) s += at(r, col) * at(r, col);
        return std::sqrt(s);
    }

    double row_norm(int row) const {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) s += at(row, c) * at(row, c);
        return std::sqrt(s);
    }
};

inline Mat identity_mat(int dim) {
    Mat m;
    m.dim = dim;
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
}

// Determinant by Gaussian elimination with partial pivoting; dims are tiny.
inline double determinant(const Mat& m) {
    Mat w = m;
    const int d = w.dim;
    double det = 1.0;
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::abs(w.at(r, c)) > std::abs(w.at(piv, c))) piv = r;
        if (w.at(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (int k = 0; k < d; ++k) std::swap(w.a[k * kMaxDim + piv], w.a[k * kMaxDim + c]);
            det = -det;
        }
        det *= w.at(c, c);
        for (int r = c + 1; r < d; ++r) {
            double f = w.at(r, c) / w.at(c, c);
            for (int k = c; k < d; ++k) w.at(r, k) -= f * w.at(c, k);
        }
    }
    return det;
}

// Inverse by Gauss-Jordan with partial pivoting. Throws on singular input.
inline Mat inverse(const Mat& m) {
    const int d = m.dim;
    Mat w = m;
    Mat inv = identity_mat(d);
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::abs(w.at(r, c)) > std::abs(w.at(piv, c))) piv = r;
        if (w.at(piv, c) == 0.0) throw std::invalid_argument("matrix is singular");
        if (piv != c) {
            for (int k = 0; k < d; ++k) {
                std::swap(w.at(c, k), w.at(piv, k));
                std::swap(inv.at(c, k), inv.at(piv, k));
            }
        }
        const double p = w.at(c, c);
        for (int k = 0; k < d; ++k) {
            w.at(c, k) /= p;
            inv.at(c, k) /= p;
        }
        for (int r = 0; r < d; ++r) {
            if (r == c) continue;
            const double f = w.at(r, c);
            if (f == 0.0) continue;
            for (int k = 0; k < d; ++k) {
                w.at(r, k) -= f * w.at(c, k);
                inv.at(r, k) -= f * inv.at(c, k);
            }
        }
    }
    return inv;
}

}  // namespace hyperlat
