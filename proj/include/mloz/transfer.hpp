#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mloz/core.hpp"
#include "mloz/engine.hpp"
#include "mloz/error.hpp"
#include "mloz/parallel.hpp"
#include "mloz/spline.hpp"
#include "mloz/trainer.hpp"

namespace mloz {

inline constexpr double kDefaultFillThresholdM = 270.0;

// Precomputed vertical interpolation between a source (training) grid and a
// destination (host) grid. Interpolation is a linear functional of column
// values, so the weights are built once per grid pair and reused every step.
//
//   temperature up:  destination column  -> source feature levels, cubic spline
//   ozone down:      full source profile -> destination levels, linear in height
//
// Exact level coincidences are recorded as snaps and copied bit for bit.
// Destination levels below fill_threshold_m take climatology instead of
// interpolated ozone; levels above the source top extend the top value.
struct VerticalMap {
    int n_src_feat = 0;  // source feature levels (inputs to the models)
    int n_src_lev = 0;   // full source levels (predictions plus cap region)
    int n_dst_lev = 0;
    double fill_threshold_m = kDefaultFillThresholdM;
    std::vector<int> temp_snap;           // [n_src_feat], destination index or -1
    std::vector<double> temp_weights;     // [n_src_feat][n_dst_lev], rows for snap = -1
    std::vector<LinearWeight> ozone_down; // [n_dst_lev]
    std::vector<std::uint8_t> is_fill;    // [n_dst_lev]
    std::vector<int> fill_levels;
};

inline VerticalMap build_vertical_map(const GridSpec& src, const GridSpec& dst,
                                      double fill_threshold_m = kDefaultFillThresholdM) {
    require(std::isfinite(fill_threshold_m) && fill_threshold_m >= 0.0, Errc::config,
            "fill threshold must be finite and non-negative");
    VerticalMap map;
    map.n_src_feat = src.cap_level_index;
    map.n_src_lev = src.nlev();
    map.n_dst_lev = dst.nlev();
    map.fill_threshold_m = fill_threshold_m;
    const auto& sh = src.level_height_m;
    const auto& dh = dst.level_height_m;

    map.temp_snap.assign(static_cast<std::size_t>(map.n_src_feat), -1);
    map.temp_weights.assign(
        static_cast<std::size_t>(map.n_src_feat) * map.n_dst_lev, 0.0);
    std::vector<int> open_targets;
    for (int i = 0; i < map.n_src_feat; ++i) {
        auto it = std::lower_bound(dh.begin(), dh.end(), sh[static_cast<std::size_t>(i)]);
        if (it != dh.end() && *it == sh[static_cast<std::size_t>(i)]) {
            map.temp_snap[static_cast<std::size_t>(i)] = static_cast<int>(it - dh.begin());
        } else {
            open_targets.push_back(i);
        }
    }
    if (!open_targets.empty()) {
        // Column of unit responses: spline the j-th basis vector over the
        // destination levels and read its value at each open target.
        std::vector<double> unit(dh.size(), 0.0);
        for (std::size_t j = 0; j < dh.size(); ++j) {
            unit[j] = 1.0;
            CubicSpline s(dh, unit);
            for (int i : open_targets) {
                map.temp_weights[static_cast<std::size_t>(i) * map.n_dst_lev +
                                 static_cast<std::size_t>(j)] =
                    s.eval(sh[static_cast<std::size_t>(i)]);
            }
            unit[j] = 0.0;
        }
    }

    map.ozone_down.resize(static_cast<std::size_t>(map.n_dst_lev));
    map.is_fill.assign(static_cast<std::size_t>(map.n_dst_lev), 0);
    for (int k = 0; k < map.n_dst_lev; ++k) {
        double h = dh[static_cast<std::size_t>(k)];
        if (h < fill_threshold_m) {
            map.is_fill[static_cast<std::size_t>(k)] = 1;
            map.fill_levels.push_back(k);
            continue;
        }
        require(h >= sh.front(), Errc::config,
                "destination level below the source span must sit under the fill threshold");
        map.ozone_down[static_cast<std::size_t>(k)] = linear_weight(sh, h);
    }
    return map;
}

inline std::vector<double> interp_temperature_up(std::span<const double> dst_column,
                                                 const VerticalMap& map) {
    require(dst_column.size() == static_cast<std::size_t>(map.n_dst_lev), Errc::data,
            "column length does not match the vertical map");
    std::vector<double> out(static_cast<std::size_t>(map.n_src_feat));
    for (int i = 0; i < map.n_src_feat; ++i) {
        int snap = map.temp_snap[static_cast<std::size_t>(i)];
        if (snap >= 0) {
            out[static_cast<std::size_t>(i)] = dst_column[static_cast<std::size_t>(snap)];
            continue;
        }
        const double* w = map.temp_weights.data() +
                          static_cast<std::size_t>(i) * map.n_dst_lev;
        double acc = 0.0;
        for (int j = 0; j < map.n_dst_lev; ++j) {
            acc += w[j] * dst_column[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

// src_profile covers every source level (model output below the ceiling plus
// climatology above). fill_values supplies the destination column used at
// fill levels.
inline std::vector<double> interp_ozone_down(std::span<const double> src_profile,
                                             const VerticalMap& map,
                                             std::span<const double> fill_values) {
    require(src_profile.size() == static_cast<std::size_t>(map.n_src_lev), Errc::data,
            "source profile length does not match the vertical map");
    require(fill_values.size() == static_cast<std::size_t>(map.n_dst_lev), Errc::data,
            "fill column length does not match the vertical map");
    std::vector<double> out(static_cast<std::size_t>(map.n_dst_lev));
    for (int k = 0; k < map.n_dst_lev; ++k) {
        out[static_cast<std::size_t>(k)] =
            map.is_fill[static_cast<std::size_t>(k)] != 0
                ? fill_values[static_cast<std::size_t>(k)]
                : apply_linear(map.ozone_down[static_cast<std::size_t>(k)], src_profile);
    }
    return out;
}

// Per-point normalization of the host model's regridded temperature. Shapes
// follow CoefficientSet: one mean/std pair per column and feature level.
struct RecalibrationParams {
    int nfeat = 0;
    std::vector<double> x_mean;  // [col][nfeat]
    std::vector<double> x_std;   // [col][nfeat]

    std::span<const double> mean_col(std::size_t col) const {
        return {x_mean.data() + col * nfeat, static_cast<std::size_t>(nfeat)};
    }
    std::span<const double> std_col(std::size_t col) const {
        return {x_std.data() + col * nfeat, static_cast<std::size_t>(nfeat)};
    }
};

// Statistics of a temperature series already mapped onto the source feature
// levels. Needs at least one post-spinup year so the seasonal cycle is fully
// represented in the mean.
inline RecalibrationParams recalibrate_scaling(const FieldSeries& regridded_temp) {
    const GridSpec& g = regridded_temp.grid;
    const int nobs = regridded_temp.ntime - regridded_temp.spinup_days;
    require(nobs >= kDaysPerYear, Errc::data,
            "recalibration needs at least one post-spinup year");
    RecalibrationParams rp;
    rp.nfeat = g.nlev();
    const std::size_t nc = g.ncols();
    rp.x_mean.assign(nc * rp.nfeat, 0.0);
    rp.x_std.assign(nc * rp.nfeat, 0.0);
    const int start = regridded_temp.spinup_days;
    for (std::size_t col = 0; col < nc; ++col) {
        for (int k = 0; k < rp.nfeat; ++k) {
            double m = 0.0;
            for (int t = start; t < regridded_temp.ntime; ++t) {
                m += regridded_temp.data[static_cast<std::size_t>(t) * g.npoints() +
                                         col * g.nlev() + static_cast<std::size_t>(k)];
            }
            m /= nobs;
            double acc = 0.0;
            for (int t = start; t < regridded_temp.ntime; ++t) {
                double d = regridded_temp.data[static_cast<std::size_t>(t) * g.npoints() +
                                               col * g.nlev() + static_cast<std::size_t>(k)] - m;
                acc += d * d;
            }
            rp.x_mean[col * rp.nfeat + static_cast<std::size_t>(k)] = m;
            rp.x_std[col * rp.nfeat + static_cast<std::size_t>(k)] =
                std::max(std::sqrt(acc / nobs), kStdFloor);
        }
    }
    return rp;
}

// Source model's own scaling as recalibration parameters: with these, a
// transfer onto the source grid reproduces engine output exactly.
inline RecalibrationParams identity_recalibration(const CoefficientSet& set) {
    RecalibrationParams rp;
    rp.nfeat = set.nfeat;
    rp.x_mean = set.x_mean;
    rp.x_std = set.x_std;
    return rp;
}

// Maps every column of a destination-grid series onto the source feature
// levels; the result lives on a synthetic grid with the destination's
// horizontal axes and the source's feature heights.
inline FieldSeries map_series_to_source_levels(const FieldSeries& dst_series,
                                               const GridSpec& src, const VerticalMap& map) {
    require(dst_series.grid.nlev() == map.n_dst_lev, Errc::data,
            "series grid does not match the vertical map");
    std::vector<double> feat_levels(src.level_height_m.begin(),
                                    src.level_height_m.begin() + map.n_src_feat);
    GridSpec out_grid = GridSpec::make(dst_series.grid.lat_deg, dst_series.grid.lon_deg,
                                       std::move(feat_levels));
    FieldSeries out = make_series(out_grid, dst_series.var, dst_series.ntime,
                                  dst_series.spinup_days);
    const std::size_t nc = out_grid.ncols();
    for (int t = 0; t < dst_series.ntime; ++t) {
        for (std::size_t col = 0; col < nc; ++col) {
            const double* src_col = dst_series.data.data() +
                                    static_cast<std::size_t>(t) * dst_series.grid.npoints() +
                                    col * dst_series.grid.nlev();
            auto mapped = interp_temperature_up(
                {src_col, static_cast<std::size_t>(map.n_dst_lev)}, map);
            std::copy(mapped.begin(), mapped.end(),
                      out.data.begin() +
                          static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * out_grid.npoints() +
                                                      col * out_grid.nlev()));
        }
    }
    return out;
}

// Source climatology carried onto the destination grid, linear in height with
// constant extension beyond the source span; supplies fill values near the
// surface. Horizontal axes must match (this toolkit transfers vertically).
inline Climatology make_fill_climatology(const Climatology& src_clim, const GridSpec& dst) {
    require(src_clim.grid.lat_deg == dst.lat_deg && src_clim.grid.lon_deg == dst.lon_deg,
            Errc::data, "fill climatology requires matching horizontal grids");
    Climatology out;
    out.grid = dst;
    out.var = src_clim.var;
    out.kind = src_clim.kind;
    out.values.assign(static_cast<std::size_t>(out.rows()) * dst.npoints(), 0.0);
    std::vector<LinearWeight> w(static_cast<std::size_t>(dst.nlev()));
    for (int k = 0; k < dst.nlev(); ++k) {
        w[static_cast<std::size_t>(k)] =
            linear_weight(src_clim.grid.level_height_m, dst.level_height_m[static_cast<std::size_t>(k)]);
    }
    const std::size_t nc = dst.ncols();
    for (int row = 0; row < out.rows(); ++row) {
        for (std::size_t col = 0; col < nc; ++col) {
            const double* src_col = src_clim.values.data() +
                                    static_cast<std::size_t>(row) * src_clim.grid.npoints() +
                                    col * src_clim.grid.nlev();
            double* dst_col = out.values.data() + static_cast<std::size_t>(row) * dst.npoints() +
                              col * dst.nlev();
            std::span<const double> src_span{src_col,
                                             static_cast<std::size_t>(src_clim.grid.nlev())};
            for (int k = 0; k < dst.nlev(); ++k) {
                dst_col[k] = apply_linear(w[static_cast<std::size_t>(k)], src_span);
            }
        }
    }
    return out;
}

struct TransferContext {
    const CoefficientSet* coeffs = nullptr;
    const VerticalMap* map = nullptr;
    const RecalibrationParams* recal = nullptr;
    const Climatology* fill_clim = nullptr;  // on the destination grid
    int day_of_year = 0;
    int block_cols = 16;
    int nthreads = 1;
};

// Full cross-model step: regrid temperature up, standardize with the host
// statistics, predict, descale with the source target scaling, clamp, carry
// the profile back down, and fill the sub-threshold levels from climatology.
inline Field transfer_predict(const Field& temp_dst, const GridSpec& dst_grid,
                              const TransferContext& ctx) {
    require(ctx.coeffs != nullptr && ctx.map != nullptr && ctx.recal != nullptr &&
                ctx.fill_clim != nullptr,
            Errc::config, "transfer context is incomplete");
    const CoefficientSet& set = *ctx.coeffs;
    const VerticalMap& map = *ctx.map;
    require(dst_grid.nlev() == map.n_dst_lev && set.grid.nlev() == map.n_src_lev &&
                set.nfeat == map.n_src_feat,
            Errc::data, "vertical map does not match grids or model");
    require(set.grid.lat_deg == dst_grid.lat_deg && set.grid.lon_deg == dst_grid.lon_deg,
            Errc::data, "transfer requires matching horizontal grids");
    require(ctx.fill_clim->grid.same_geometry(dst_grid), Errc::data,
            "fill climatology lives on the wrong grid");
    require(ctx.recal->nfeat == set.nfeat &&
                ctx.recal->x_mean.size() == dst_grid.ncols() * static_cast<std::size_t>(set.nfeat),
            Errc::data, "recalibration parameters do not match the model");
    require(temp_dst.size() == dst_grid.npoints(), Errc::data,
            "temperature field size does not match the grid");

    Field out = make_field(dst_grid);
    const std::size_t nc = dst_grid.ncols();
    const std::size_t block = static_cast<std::size_t>(ctx.block_cols);
    const std::size_t nblocks = (nc + block - 1) / block;
    const int nlev_dst = dst_grid.nlev();
    const int ncap = set.ncap_levels();

    parallel_for(nblocks, ctx.nthreads, [&](std::size_t bi) {
        std::vector<double> z(static_cast<std::size_t>(set.nfeat));
        std::vector<double> pred(static_cast<std::size_t>(set.nlev_out));
        std::vector<double> src_prof(static_cast<std::size_t>(map.n_src_lev));
        const std::size_t col_end = std::min(nc, (bi + 1) * block);
        for (std::size_t col = bi * block; col < col_end; ++col) {
            const double* column = temp_dst.data() + col * nlev_dst;
            auto feats = interp_temperature_up({column, static_cast<std::size_t>(nlev_dst)}, map);
            detail::predict_column_kernel(set, col, feats, ctx.recal->mean_col(col),
                                          ctx.recal->std_col(col), z, pred);
            std::copy(pred.begin(), pred.end(), src_prof.begin());
            auto cap = set.cap_row(ctx.day_of_year, col);
            std::copy_n(cap.data(), ncap, src_prof.begin() + set.nlev_out);
            int ilat = static_cast<int>(col) / dst_grid.nlon();
            int ilon = static_cast<int>(col) % dst_grid.nlon();
            auto fill_col = ctx.fill_clim->column(ctx.day_of_year, ilat, ilon);
            auto mapped = interp_ozone_down(src_prof, map, fill_col);
            std::copy(mapped.begin(), mapped.end(), out.begin() + static_cast<std::ptrdiff_t>(col * nlev_dst));
        }
    });
    return out;
}

}  // namespace mloz
