#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mloz/error.hpp"

namespace mloz::linalg {

// Dense symmetric kernels sized for per-column ridge systems (order <= ~100).
// Matrices are row-major n x n.

// In-place Cholesky A = L * L^T, lower triangle; returns false when a pivot
// is not strictly positive, i.e. the matrix is not positive definite within
// roundoff. The strict test is what routes alpha = 0 singular systems to the
// spectral fallback.
inline bool cholesky(std::vector<double>& a, int n) {
    for (int j = 0; j < n; ++j) {
        double d = a[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            double ljk = a[static_cast<std::size_t>(j) * n + k];
            d -= ljk * ljk;
        }
        if (!(d > 0.0) || !std::isfinite(d)) {
            return false;
        }
        double ljj = std::sqrt(d);
        a[static_cast<std::size_t>(j) * n + j] = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k) {
                s -= a[static_cast<std::size_t>(i) * n + k] *
                     a[static_cast<std::size_t>(j) * n + k];
            }
            a[static_cast<std::size_t>(i) * n + j] = s / ljj;
        }
    }
    return true;
}

// Solves L * L^T x = b given the factor from cholesky(); b becomes x.
inline void cholesky_solve(const std::vector<double>& l, int n, std::vector<double>& b) {
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) {
            s -= l[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
        }
        b[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) {
            s -= l[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
        }
        b[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
    }
}

struct SymEig {
    std::vector<double> values;   // ascending not guaranteed; paired with columns
    std::vector<double> vectors;  // row-major; column j is eigenvector j
};

// Cyclic Jacobi for symmetric matrices. Slow but bulletproof at these sizes.
inline SymEig jacobi_eigh(std::vector<double> a, int n) {
    SymEig e;
    e.values.assign(static_cast<std::size_t>(n), 0.0);
    e.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        e.vectors[static_cast<std::size_t>(i) * n + i] = 1.0;
    }
    auto idx = [n](int r, int c) { return static_cast<std::size_t>(r) * n + c; };
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                off += a[idx(p, q)] * a[idx(p, q)];
            }
        }
        if (off <= 1e-28 * static_cast<double>(n) * n) {
            break;
        }
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a[idx(p, q)];
                if (apq == 0.0) {
                    continue;
                }
                double app = a[idx(p, p)];
                double aqq = a[idx(q, q)];
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[idx(k, p)];
                    double akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[idx(p, k)];
                    double aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = e.vectors[idx(k, p)];
                    double vkq = e.vectors[idx(k, q)];
                    e.vectors[idx(k, p)] = c * vkp - s * vkq;
                    e.vectors[idx(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        e.values[static_cast<std::size_t>(i)] = a[idx(i, i)];
    }
    return e;
}

// General dense solve with partial pivoting; a is destroyed, b becomes x.
// Returns false on an exactly zero pivot column.
inline bool solve_dense(std::vector<double>& a, int n, std::vector<double>& b) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::abs(a[static_cast<std::size_t>(r) * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) {
            return false;
        }
        if (pivot != col) {
            for (int c = col; c < n; ++c) {
                std::swap(a[static_cast<std::size_t>(col) * n + c],
                          a[static_cast<std::size_t>(pivot) * n + c]);
            }
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
        }
        double inv = 1.0 / a[static_cast<std::size_t>(col) * n + col];
        for (int r = col + 1; r < n; ++r) {
            double f = a[static_cast<std::size_t>(r) * n + col] * inv;
            if (f == 0.0) {
                continue;
            }
            a[static_cast<std::size_t>(r) * n + col] = 0.0;
            for (int c = col + 1; c < n; ++c) {
                a[static_cast<std::size_t>(r) * n + c] -=
                    f * a[static_cast<std::size_t>(col) * n + c];
            }
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c) {
            s -= a[static_cast<std::size_t>(r) * n + c] * b[static_cast<std::size_t>(c)];
        }
        b[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r) * n + r];
    }
    return true;
}

// Minimum-norm solution of A x = b for symmetric positive semidefinite A:
// project b onto the numerically nonzero eigenspace. For A = X^T X and
// b = X^T y this is exactly the minimum-norm least-squares solution.
inline std::vector<double> minnorm_sym_solve(const std::vector<double>& a, int n,
                                             const std::vector<double>& b) {
    SymEig e = jacobi_eigh(a, n);
    double lmax = 0.0;
    for (double v : e.values) {
        lmax = std::max(lmax, std::abs(v));
    }
    const double cutoff = lmax * static_cast<double>(n) * 1e-14;
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        double lambda = e.values[static_cast<std::size_t>(j)];
        if (std::abs(lambda) <= cutoff || lambda <= 0.0) {
            continue;
        }
        double proj = 0.0;
        for (int i = 0; i < n; ++i) {
            proj += e.vectors[static_cast<std::size_t>(i) * n + j] * b[static_cast<std::size_t>(i)];
        }
        proj /= lambda;
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] +=
                proj * e.vectors[static_cast<std::size_t>(i) * n + j];
        }
    }
    return x;
}

}  // namespace mloz::linalg
