#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mloz/core.hpp"
#include "mloz/error.hpp"
#include "mloz/parallel.hpp"
#include "mloz/trainer.hpp"

namespace mloz {

struct InferenceContext {
    const CoefficientSet* coeffs = nullptr;
    int day_of_year = 0;
    int block_cols = 16;  // grid columns per work unit
    int nthreads = 1;
};

namespace detail {

// Shared inference kernel: standardize the feature levels once per column,
// then one dot product per output level, descale, clamp at zero. The clamp
// must come after descaling so it acts in physical units. Both the engine and
// the cross-model transfer path run exactly this routine, which is what makes
// a self-transfer reproduce engine output bit for bit.
inline void predict_column_kernel(const CoefficientSet& set, std::size_t col,
                                  std::span<const double> temp_feats,
                                  std::span<const double> x_mean, std::span<const double> x_std,
                                  std::span<double> z_buf, std::span<double> out) {
    const int p = set.nfeat;
    for (int j = 0; j < p; ++j) {
        double v = temp_feats[static_cast<std::size_t>(j)];
        require(std::isfinite(v), Errc::numeric,
                "non-finite temperature input at feature level " + std::to_string(j));
        z_buf[static_cast<std::size_t>(j)] =
            (v - x_mean[static_cast<std::size_t>(j)]) / x_std[static_cast<std::size_t>(j)];
    }
    for (int k = 0; k < set.nlev_out; ++k) {
        auto c = set.coeff_row(col, k);
        double acc = 0.0;
        for (int j = 0; j < p; ++j) {
            acc += c[static_cast<std::size_t>(j)] * z_buf[static_cast<std::size_t>(j)];
        }
        std::size_t idx = col * set.nlev_out + static_cast<std::size_t>(k);
        out[static_cast<std::size_t>(k)] =
            std::max(0.0, acc * set.y_std[idx] + set.y_mean[idx]);
    }
}

}  // namespace detail

// Single-point prediction in physical units: standardize, dot, descale, clamp.
inline double predict_point(std::span<const double> temp_column, const RidgeModel& m) {
    const std::size_t p = m.coeffs.size();
    require(temp_column.size() >= p, Errc::config,
            "temperature column shorter than the model's feature set");
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double v = temp_column[j];
        require(std::isfinite(v), Errc::numeric,
                "non-finite temperature input at feature level " + std::to_string(j));
        acc += m.coeffs[j] * ((v - m.scaling.x_mean[j]) / m.scaling.x_std[j]);
    }
    return std::max(0.0, acc * m.scaling.y_std + m.scaling.y_mean);
}

// Full-grid prediction. Output levels below the ceiling come from the ridge
// models; levels at or above it are copied from the stored climatology for
// the context day, bit for bit. Columns are processed in independent blocks
// writing disjoint output, so any block size or thread count produces
// identical bytes.
inline Field predict_field(const Field& temperature, const GridSpec& grid,
                           const InferenceContext& ctx) {
    require(ctx.coeffs != nullptr, Errc::config, "inference context has no coefficients");
    const CoefficientSet& set = *ctx.coeffs;
    require(grid.same_geometry(set.grid), Errc::data,
            "temperature grid does not match the trained grid");
    require(temperature.size() == grid.npoints(), Errc::data,
            "temperature field size does not match the grid");
    require(ctx.day_of_year >= 0, Errc::config, "negative day of year");
    require(ctx.block_cols >= 1, Errc::config, "block size must be at least one column");

    Field out = make_field(grid);
    const std::size_t nc = grid.ncols();
    const std::size_t block = static_cast<std::size_t>(ctx.block_cols);
    const std::size_t nblocks = (nc + block - 1) / block;
    const int nlev = grid.nlev();
    const int ncap = set.ncap_levels();

    parallel_for(nblocks, ctx.nthreads, [&](std::size_t bi) {
        std::vector<double> z(static_cast<std::size_t>(set.nfeat));
        std::vector<double> pred(static_cast<std::size_t>(set.nlev_out));
        const std::size_t col_end = std::min(nc, (bi + 1) * block);
        for (std::size_t col = bi * block; col < col_end; ++col) {
            const double* column = temperature.data() + col * nlev;
            detail::predict_column_kernel(set, col, {column, static_cast<std::size_t>(set.nfeat)},
                                          set.x_mean_col(col), set.x_std_col(col), z, pred);
            double* out_col = out.data() + col * nlev;
            std::copy(pred.begin(), pred.end(), out_col);
            auto cap = set.cap_row(ctx.day_of_year, col);
            std::copy_n(cap.data(), ncap, out_col + set.nlev_out);
        }
    });
    return out;
}

// Mean of instantaneous slices; with one slice per day this is the identity.
inline Field daily_mean_accumulate(std::span<const Field> instants) {
    require(!instants.empty(), Errc::config, "daily mean of zero samples");
    const std::size_t n = instants.front().size();
    Field mean(n, 0.0);
    for (const Field& f : instants) {
        require(f.size() == n, Errc::data, "daily mean over differently sized fields");
        for (std::size_t i = 0; i < n; ++i) {
            mean[i] += f[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(instants.size());
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] *= inv;
    }
    return mean;
}

}  // namespace mloz
