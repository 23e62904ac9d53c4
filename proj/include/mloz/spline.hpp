#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mloz/error.hpp"
#include "mloz/linalg.hpp"

namespace mloz {

// Cubic interpolating spline with not-a-knot end conditions. Evaluation at a
// knot abscissa returns the knot ordinate bit for bit (identity grids must
// pass values through unchanged); outside the knot span the boundary value is
// extended as a constant.
class CubicSpline {
public:
    CubicSpline(std::span<const double> x, std::span<const double> y) {
        const int n = static_cast<int>(x.size());
        require(n >= 1, Errc::config, "spline needs at least one knot");
        require(y.size() == x.size(), Errc::config, "spline knot arrays differ in length");
        for (int i = 1; i < n; ++i) {
            require(x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(i - 1)],
                    Errc::config, "spline knots must be strictly increasing");
        }
        x_.assign(x.begin(), x.end());
        y_.assign(y.begin(), y.end());
        if (n == 1) {
            return;
        }
        // m holds second derivatives at the knots; n <= 3 degenerates to the
        // unique polynomial through the points, which is what not-a-knot
        // conditions collapse to anyway.
        std::vector<double> m(static_cast<std::size_t>(n), 0.0);
        if (n == 3) {
            double h0 = x_[1] - x_[0];
            double h1 = x_[2] - x_[1];
            double dd = ((y_[2] - y_[1]) / h1 - (y_[1] - y_[0]) / h0) / (h0 + h1);
            m[0] = m[1] = m[2] = 2.0 * dd;
        } else if (n >= 4) {
            std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
            std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
            auto at = [&a, n](int r, int c) -> double& {
                return a[static_cast<std::size_t>(r) * n + c];
            };
            auto h = [this](int i) { return x_[static_cast<std::size_t>(i + 1)] - x_[static_cast<std::size_t>(i)]; };
            // Third derivative continuous across the first and last interior knots.
            at(0, 0) = h(1);
            at(0, 1) = -(h(0) + h(1));
            at(0, 2) = h(0);
            at(n - 1, n - 3) = h(n - 2);
            at(n - 1, n - 2) = -(h(n - 3) + h(n - 2));
            at(n - 1, n - 1) = h(n - 3);
            for (int i = 1; i < n - 1; ++i) {
                at(i, i - 1) = h(i - 1) / 6.0;
                at(i, i) = (h(i - 1) + h(i)) / 3.0;
                at(i, i + 1) = h(i) / 6.0;
                rhs[static_cast<std::size_t>(i)] =
                    (y_[static_cast<std::size_t>(i + 1)] - y_[static_cast<std::size_t>(i)]) / h(i) -
                    (y_[static_cast<std::size_t>(i)] - y_[static_cast<std::size_t>(i - 1)]) / h(i - 1);
            }
            require(linalg::solve_dense(a, n, rhs), Errc::numeric,
                    "singular spline system (degenerate knot spacing)");
            m = std::move(rhs);
        }
        b_.resize(static_cast<std::size_t>(n - 1));
        c_.resize(static_cast<std::size_t>(n - 1));
        d_.resize(static_cast<std::size_t>(n - 1));
        for (int i = 0; i < n - 1; ++i) {
            double hi = x_[static_cast<std::size_t>(i + 1)] - x_[static_cast<std::size_t>(i)];
            b_[static_cast<std::size_t>(i)] =
                (y_[static_cast<std::size_t>(i + 1)] - y_[static_cast<std::size_t>(i)]) / hi -
                hi * (2.0 * m[static_cast<std::size_t>(i)] + m[static_cast<std::size_t>(i + 1)]) / 6.0;
            c_[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] / 2.0;
            d_[static_cast<std::size_t>(i)] =
                (m[static_cast<std::size_t>(i + 1)] - m[static_cast<std::size_t>(i)]) / (6.0 * hi);
        }
    }

    double eval(double t) const {
        const std::size_t n = x_.size();
        if (n == 1) {
            return y_[0];
        }
        if (t <= x_.front()) {
            return y_.front();
        }
        if (t >= x_.back()) {
            return y_.back();
        }
        // upper_bound-1 gives the interval; an exact knot hit returns the
        // stored ordinate so identity mappings stay bit-exact.
        auto it = std::upper_bound(x_.begin(), x_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
        if (t == x_[i]) {
            return y_[i];
        }
        double dt = t - x_[i];
        return y_[i] + dt * (b_[i] + dt * (c_[i] + dt * d_[i]));
    }

private:
    std::vector<double> x_, y_, b_, c_, d_;
};

// One linear-in-height interpolation target: either an exact source level
// (snap) or a convex pair. w_hi = 1 - w_lo exactly, so weights sum to one.
struct LinearWeight {
    int snap = -1;
    int lo = 0;
    double w_lo = 1.0;
};

inline LinearWeight linear_weight(std::span<const double> knots, double t) {
    const int n = static_cast<int>(knots.size());
    LinearWeight w;
    if (t <= knots.front()) {
        if (t == knots.front()) {
            w.snap = 0;
        } else {
            w.lo = 0;
            w.w_lo = 1.0;  // constant extension below
        }
        return w;
    }
    if (t >= knots.back()) {
        if (t == knots.back()) {
            w.snap = n - 1;
        } else {
            w.lo = n - 1;
            w.w_lo = 1.0;  // constant extension above
        }
        return w;
    }
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    int hi = static_cast<int>(it - knots.begin());
    int lo = hi - 1;
    if (t == knots[static_cast<std::size_t>(lo)]) {
        w.snap = lo;
        return w;
    }
    w.lo = lo;
    w.w_lo = (knots[static_cast<std::size_t>(hi)] - t) /
             (knots[static_cast<std::size_t>(hi)] - knots[static_cast<std::size_t>(lo)]);
    return w;
}

inline double apply_linear(const LinearWeight& w, std::span<const double> values) {
    if (w.snap >= 0) {
        return values[static_cast<std::size_t>(w.snap)];
    }
    std::size_t lo = static_cast<std::size_t>(w.lo);
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    return w.w_lo * values[lo] + (1.0 - w.w_lo) * values[hi];
}

}  // namespace mloz
