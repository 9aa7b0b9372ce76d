#pragma once

// Dense kernel: vectors, small block rotations, one-sided Jacobi SVD.
// Everything is 64-bit real and row-major.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "unibi/common.hpp"

namespace unibi {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // row-major, rows*cols

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions disagree (", a.cols, " vs ", b.rows, ")");
    DenseMatrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
        }
    return out;
}

inline DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
    return out;
}

inline std::vector<double> matvec(const DenseMatrix& m, std::span<const double> x) {
    require(m.cols == static_cast<int>(x.size()), "matvec: size mismatch");
    std::vector<double> y(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m.at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double frobenius_norm(const DenseMatrix& m) {
    return l2_norm(std::span<const double>(m.data));
}

inline double spectral_radius(std::span<const double> sigma) {
    require(!sigma.empty(), "spectral_radius: empty singular spectrum");
    return *std::max_element(sigma.begin(), sigma.end());
}

// Imbalance degree of a singular spectrum: sum of squared deviations of
// sigma_i / sigma_max from 1. Zero exactly when the spectrum is balanced,
// invariant under uniform positive scaling.
inline double imbalance_degree(std::span<const double> sigma) {
    double s_max = spectral_radius(sigma);
    require(s_max > 0.0, "imbalance_degree: all singular values are zero");
    double sum = 0.0;
    for (double s : sigma) {
        double d = s / s_max - 1.0;
        sum += d * d;
    }
    return sum;
}

// Returns (unit vector, original norm). Callers decide what to do with
// degenerate inputs; the kernel only refuses to divide by ~0.
inline std::pair<std::vector<double>, double> normalize(std::span<const double> v) {
    double n = l2_norm(v);
    require(n >= 1e-12, "degenerate vector: norm ", n, " below 1e-12");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return {std::move(out), n};
}

// ---------------------------------------------------------------------------
// Block rotations. A block of size 2 carries (x, y) with x^2+y^2 = 1 and
// denotes [[x,-y],[y,x]]; a block of size 4 carries a unit quaternion
// (p, q, u, v) and denotes its left-multiplication matrix. Both are linear
// in their parameters, so each is a sum of fixed basis matrices; gradients
// reuse the same tables.

namespace rot {

inline constexpr double kBasis2[2][4] = {
    {1, 0, 0, 1},  // x
    {0, -1, 1, 0}, // y
};

inline constexpr double kBasis4[4][16] = {
    {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1},     // p
    {0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, -1, 0},   // q
    {0, 0, -1, 0, 0, 0, 0, -1, 1, 0, 0, 0, 0, 1, 0, 0},   // u
    {0, 0, 0, -1, 0, 0, 1, 0, 0, -1, 0, 0, 1, 0, 0, 0},   // v
};

inline const double* basis(int k, int c) {
    return k == 2 ? kBasis2[c] : kBasis4[c];
}

// Dense k-by-k matrix for one block, written into out (row-major).
inline void build(int k, const double* params, double* out) {
    const int kk = k * k;
    for (int e = 0; e < kk; ++e) out[e] = 0.0;
    for (int c = 0; c < k; ++c) {
        const double* b = basis(k, c);
        const double p = params[c];
        for (int e = 0; e < kk; ++e) out[e] += p * b[e];
    }
}

// y = R x (or R^T x). Safe for y aliasing nothing; x and y must not overlap.
inline void apply(int k, const double* params, const double* x, double* y, bool transposed) {
    double r[16];
    build(k, params, r);
    for (int i = 0; i < k; ++i) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += (transposed ? r[j * k + i] : r[i * k + j]) * x[j];
        y[i] = s;
    }
}

// Gradient of sum_i gy_i * (R(params) x)_i with respect to params,
// accumulated into gparams. Mirrors apply()'s transposed flag.
inline void param_grad(int k, const double* x, const double* gy, bool transposed, double* gparams) {
    for (int c = 0; c < k; ++c) {
        const double* b = basis(k, c);
        double s = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                s += gy[i] * (transposed ? b[j * k + i] : b[i * k + j]) * x[j];
        gparams[c] += s;
    }
}

} // namespace rot

struct RotationBlock {
    int block_size = 2;       // 2 or 4
    std::array<double, 4> params{1, 0, 0, 0};

    std::span<const double> param_span() const {
        return {params.data(), static_cast<std::size_t>(block_size)};
    }
    double param_norm() const { return l2_norm(param_span()); }
    bool is_normalized(double tol = 1e-12) const { return std::abs(param_norm() - 1.0) <= tol; }
};

inline DenseMatrix materialize_rotation(const RotationBlock& block) {
    require(block.block_size == 2 || block.block_size == 4,
            "rotation block size must be 2 or 4, got ", block.block_size);
    require(block.is_normalized(), "rotation block parameters are not normalized");
    DenseMatrix m(block.block_size, block.block_size);
    rot::build(block.block_size, block.params.data(), m.data.data());
    return m;
}

inline std::vector<double> apply_block_rotation(std::span<const RotationBlock> blocks,
                                                std::span<const double> x, bool transposed) {
    std::size_t total = 0;
    for (const auto& b : blocks) total += static_cast<std::size_t>(b.block_size);
    require(total == x.size(), "apply_block_rotation: blocks cover ", total,
            " dims but input has ", x.size());
    std::vector<double> y(x.size());
    std::size_t off = 0;
    for (const auto& b : blocks) {
        require(b.is_normalized(), "rotation block parameters are not normalized");
        rot::apply(b.block_size, b.params.data(), x.data() + off, y.data() + off, transposed);
        off += static_cast<std::size_t>(b.block_size);
    }
    return y;
}

// Dominant singular triple (sigma, u, v) by power iteration on M^T M.
// Deterministic: fixed start vector and iteration count.
struct TopSingularPair {
    double sigma = 0.0;
    std::vector<double> u, v;
};

inline TopSingularPair top_singular_pair(const DenseMatrix& m, int iterations = 500) {
    require(m.rows == m.cols, "top_singular_pair: matrix must be square");
    const int n = m.rows;
    std::vector<double> v(static_cast<std::size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> mv;
    for (int it = 0; it < iterations; ++it) {
        mv = matvec(m, v);
        std::vector<double> w(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] += m.at(i, j) * mv[static_cast<std::size_t>(i)];
        double nw = l2_norm(w);
        if (nw < 1e-300) break;
        for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j)] / nw;
    }
    TopSingularPair out;
    mv = matvec(m, v);
    out.sigma = l2_norm(mv);
    out.v = std::move(v);
    out.u.assign(static_cast<std::size_t>(n), 0.0);
    if (out.sigma > 1e-300)
        for (int i = 0; i < n; ++i) out.u[static_cast<std::size_t>(i)] = mv[static_cast<std::size_t>(i)] / out.sigma;
    return out;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD for square matrices.

struct SvdResult {
    DenseMatrix u;             // orthogonal
    std::vector<double> sigma; // nonnegative, nonincreasing
    DenseMatrix v;             // orthogonal
};

inline SvdResult jacobi_svd(const DenseMatrix& m) {
    require(m.rows == m.cols, "jacobi_svd: matrix must be square, got ", m.rows, "x", m.cols);
    require(m.rows >= 1 && m.rows <= 4096, "jacobi_svd: order out of range: ", m.rows);
    for (double x : m.data) require(std::isfinite(x), "jacobi_svd: non-finite entry");

    const int n = m.rows;
    DenseMatrix b = m;                      // columns get orthogonalized in place
    DenseMatrix v = DenseMatrix::identity(n);
    const double tol = 1e-12;
    const int max_sweeps = 60;

    auto col_dot = [&](const DenseMatrix& a, int p, int q) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += a.at(i, p) * a.at(i, q);
        return s;
    };

    bool converged = (n == 1);
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double alpha = col_dot(b, p, p);
                double beta = col_dot(b, q, q);
                double gamma = col_dot(b, p, q);
                double denom = std::sqrt(alpha * beta);
                if (denom == 0.0 || std::abs(gamma) <= tol * denom) continue;
                rotated = true;
                double tau = (beta - alpha) / (2.0 * gamma);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (int i = 0; i < n; ++i) {
                    double bp = b.at(i, p), bq = b.at(i, q);
                    b.at(i, p) = c * bp - s * bq;
                    b.at(i, q) = s * bp + c * bq;
                    double vp = v.at(i, p), vq = v.at(i, q);
                    v.at(i, p) = c * vp - s * vq;
                    v.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) converged = true;
    }
    if (!converged) {
        double worst = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                double denom = std::sqrt(col_dot(b, p, p) * col_dot(b, q, q));
                if (denom > 0.0) worst = std::max(worst, std::abs(col_dot(b, p, q)) / denom);
            }
        fail("jacobi_svd did not converge after ", max_sweeps, " sweeps; residual ", worst);
    }

    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(b, j, j));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a2, int b2) { return sigma[a2] > sigma[b2]; });

    SvdResult res;
    res.u = DenseMatrix(n, n);
    res.v = DenseMatrix(n, n);
    res.sigma.resize(n);
    double sig_max = sigma[order[0]];
    for (int j = 0; j < n; ++j) {
        int src = order[j];
        res.sigma[j] = sigma[src];
        for (int i = 0; i < n; ++i) res.v.at(i, j) = v.at(i, src);
        if (sigma[src] > sig_max * 1e-14 && sigma[src] > 0.0) {
            for (int i = 0; i < n; ++i) res.u.at(i, j) = b.at(i, src) / sigma[src];
        }
    }
    // Complete U where columns vanished (rank-deficient input): take the
    // coordinate direction with the largest residual after projecting out
    // the columns already placed.
    for (int j = 0; j < n; ++j) {
        int src = order[j];
        if (sigma[src] > sig_max * 1e-14 && sigma[src] > 0.0) continue;
        std::vector<double> best;
        double best_norm = -1.0;
        for (int cand = 0; cand < n; ++cand) {
            std::vector<double> w(n, 0.0);
            w[cand] = 1.0;
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                double proj = 0.0;
                for (int i = 0; i < n; ++i) proj += res.u.at(i, k) * w[i];
                for (int i = 0; i < n; ++i) w[i] -= proj * res.u.at(i, k);
            }
            double nw = l2_norm(w);
            if (nw > best_norm) {
                best_norm = nw;
                best = std::move(w);
            }
        }
        require(best_norm > 1e-8, "jacobi_svd: failed to complete orthogonal basis");
        for (int i = 0; i < n; ++i) res.u.at(i, j) = best[i] / best_norm;
    }
    return res;
}

} // namespace unibi
