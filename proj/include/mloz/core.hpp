#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mloz/error.hpp"

namespace mloz {

// Calendar: 365-day years, no leap days. Day-of-year is day % 365.
inline constexpr int kDaysPerYear = 365;

// Predictions stop at this height; levels at or above it carry climatology.
inline constexpr double kCapHeightM = 50000.0;

enum class VarKind : int { temperature_K = 0, ozone_vmr = 1 };
enum class ClimKind : int { annual = 0, day_of_year = 1 };

inline int clim_rows(ClimKind kind) { return kind == ClimKind::annual ? 1 : 366; }

struct GridSpec {
    std::vector<double> lat_deg;
    std::vector<double> lon_deg;
    std::vector<double> level_height_m;
    // First level at or above kCapHeightM; equals nlev when every level is below.
    int cap_level_index = 0;

    static GridSpec make(std::vector<double> lats, std::vector<double> lons,
                         std::vector<double> levels) {
        GridSpec g;
        g.lat_deg = std::move(lats);
        g.lon_deg = std::move(lons);
        g.level_height_m = std::move(levels);
        require(!g.lat_deg.empty() && !g.lon_deg.empty() && !g.level_height_m.empty(),
                Errc::config, "grid axes must be non-empty");
        for (double lat : g.lat_deg) {
            require(std::isfinite(lat) && lat >= -90.0 && lat <= 90.0, Errc::config,
                    "latitude out of range: " + std::to_string(lat));
        }
        for (std::size_t i = 1; i < g.lat_deg.size(); ++i) {
            require(g.lat_deg[i] > g.lat_deg[i - 1], Errc::config,
                    "latitudes must be strictly increasing");
        }
        for (double lon : g.lon_deg) {
            require(std::isfinite(lon) && lon >= -180.0 && lon < 360.0, Errc::config,
                    "longitude out of range: " + std::to_string(lon));
        }
        for (std::size_t i = 1; i < g.lon_deg.size(); ++i) {
            require(g.lon_deg[i] > g.lon_deg[i - 1], Errc::config,
                    "longitudes must be strictly increasing");
        }
        for (double h : g.level_height_m) {
            require(std::isfinite(h) && h >= 0.0, Errc::config,
                    "level height must be finite and non-negative");
        }
        for (std::size_t i = 1; i < g.level_height_m.size(); ++i) {
            require(g.level_height_m[i] > g.level_height_m[i - 1], Errc::config,
                    "level heights must be strictly increasing");
        }
        g.cap_level_index = g.nlev();
        for (int k = 0; k < g.nlev(); ++k) {
            if (g.level_height_m[static_cast<std::size_t>(k)] >= kCapHeightM) {
                g.cap_level_index = k;
                break;
            }
        }
        require(g.cap_level_index > 0, Errc::config,
                "grid has no levels below the prediction ceiling");
        return g;
    }

    int nlat() const { return static_cast<int>(lat_deg.size()); }
    int nlon() const { return static_cast<int>(lon_deg.size()); }
    int nlev() const { return static_cast<int>(level_height_m.size()); }
    std::size_t ncols() const { return lat_deg.size() * lon_deg.size(); }
    std::size_t npoints() const { return ncols() * level_height_m.size(); }

    bool same_geometry(const GridSpec& o) const {
        return lat_deg == o.lat_deg && lon_deg == o.lon_deg &&
               level_height_m == o.level_height_m;
    }
};

// One time slice, laid out [lat][lon][lev] with level fastest.
using Field = std::vector<double>;

inline std::size_t field_index(const GridSpec& g, int ilat, int ilon, int ilev) {
    return (static_cast<std::size_t>(ilat) * g.lon_deg.size() +
            static_cast<std::size_t>(ilon)) * g.level_height_m.size() +
           static_cast<std::size_t>(ilev);
}

inline Field make_field(const GridSpec& g, double fill = 0.0) {
    return Field(g.npoints(), fill);
}

inline std::span<const double> field_column(const GridSpec& g, const Field& f,
                                            int ilat, int ilon) {
    return {f.data() + field_index(g, ilat, ilon, 0), g.level_height_m.size()};
}

inline std::span<double> field_column(const GridSpec& g, Field& f, int ilat, int ilon) {
    return {f.data() + field_index(g, ilat, ilon, 0), g.level_height_m.size()};
}

// Daily archive of one variable: data is [time][lat][lon][lev], level fastest.
// spinup_days flags a leading window that diagnostics and training skip.
struct FieldSeries {
    GridSpec grid;
    VarKind var = VarKind::temperature_K;
    int ntime = 0;
    int spinup_days = 0;
    std::vector<double> data;

    double at(int t, int ilat, int ilon, int ilev) const {
        return data[static_cast<std::size_t>(t) * grid.npoints() +
                    field_index(grid, ilat, ilon, ilev)];
    }
    double& at(int t, int ilat, int ilon, int ilev) {
        return data[static_cast<std::size_t>(t) * grid.npoints() +
                    field_index(grid, ilat, ilon, ilev)];
    }
    std::span<const double> column(int t, int ilat, int ilon) const {
        return {data.data() + static_cast<std::size_t>(t) * grid.npoints() +
                    field_index(grid, ilat, ilon, 0),
                grid.level_height_m.size()};
    }
    std::span<const double> slice(int t) const {
        return {data.data() + static_cast<std::size_t>(t) * grid.npoints(), grid.npoints()};
    }
    void set_slice(int t, const Field& f) {
        std::copy(f.begin(), f.end(),
                  data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * grid.npoints()));
    }
};

inline FieldSeries make_series(GridSpec grid, VarKind var, int ntime, int spinup_days = 0) {
    require(ntime > 0, Errc::config, "series needs at least one time step");
    require(spinup_days >= 0 && spinup_days < ntime, Errc::config,
            "spinup window must leave at least one sample");
    FieldSeries s;
    s.grid = std::move(grid);
    s.var = var;
    s.ntime = ntime;
    s.spinup_days = spinup_days;
    s.data.assign(static_cast<std::size_t>(ntime) * s.grid.npoints(), 0.0);
    return s;
}

// Copy of the day range [t_begin, t_end); the copy's day 0 is the source's
// t_begin, with a fresh spin-up window.
inline FieldSeries crop_series(const FieldSeries& s, int t_begin, int t_end,
                               int spinup_days = 0) {
    require(0 <= t_begin && t_begin < t_end && t_end <= s.ntime, Errc::config,
            "crop range must lie inside the series");
    FieldSeries out = make_series(s.grid, s.var, t_end - t_begin, spinup_days);
    const std::size_t np = s.grid.npoints();
    std::copy_n(s.data.data() + static_cast<std::size_t>(t_begin) * np,
                static_cast<std::size_t>(t_end - t_begin) * np, out.data.data());
    return out;
}

// Per-point climatology; one row for annual, 366 rows for day-of-year
// (row 365 duplicates row 364 so the container has a slot for leap-style
// calendars even though this toolkit never produces one).
struct Climatology {
    GridSpec grid;
    VarKind var = VarKind::ozone_vmr;
    ClimKind kind = ClimKind::day_of_year;
    std::vector<double> values;  // [rows][lat][lon][lev]

    int rows() const { return clim_rows(kind); }
    double at(int day, int ilat, int ilon, int ilev) const {
        int row = kind == ClimKind::annual ? 0 : day % kDaysPerYear;
        return values[static_cast<std::size_t>(row) * grid.npoints() +
                      field_index(grid, ilat, ilon, ilev)];
    }
    std::span<const double> column(int day, int ilat, int ilon) const {
        int row = kind == ClimKind::annual ? 0 : day % kDaysPerYear;
        return {values.data() + static_cast<std::size_t>(row) * grid.npoints() +
                    field_index(grid, ilat, ilon, 0),
                grid.level_height_m.size()};
    }
};

// Supervised samples for one column: inputs are the temperature profile on
// the feature levels at day t, targets the ozone profile at day t+1.
struct TrainingPairs {
    int nsamples = 0;
    int nfeat = 0;
    int ntargets = 0;
    std::vector<double> x;  // [nsamples][nfeat]
    std::vector<double> y;  // [nsamples][ntargets]

    std::span<const double> x_row(int i) const {
        return {x.data() + static_cast<std::size_t>(i) * nfeat, static_cast<std::size_t>(nfeat)};
    }
    std::span<const double> y_row(int i) const {
        return {y.data() + static_cast<std::size_t>(i) * ntargets, static_cast<std::size_t>(ntargets)};
    }
};

struct ValidationIssue {
    enum class Kind { non_finite, out_of_range };
    Kind kind;
    int t, ilat, ilon, ilev;
    double value;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::size_t values_checked = 0;
    bool ok() const { return issues.empty(); }
};

inline bool in_physical_range(VarKind var, double v) {
    if (var == VarKind::temperature_K) {
        return v > 100.0 && v < 400.0;
    }
    return v >= 0.0 && v < 1.0e-4;  // volume mixing ratio
}

inline ValidationReport validate_field(const FieldSeries& s) {
    ValidationReport report;
    const int nlat = s.grid.nlat(), nlon = s.grid.nlon(), nlev = s.grid.nlev();
    require(s.data.size() == static_cast<std::size_t>(s.ntime) * s.grid.npoints(), Errc::data,
            "series payload size does not match its grid and time axis");
    for (int t = 0; t < s.ntime; ++t) {
        for (int i = 0; i < nlat; ++i) {
            for (int j = 0; j < nlon; ++j) {
                for (int k = 0; k < nlev; ++k) {
                    double v = s.at(t, i, j, k);
                    ++report.values_checked;
                    if (!std::isfinite(v)) {
                        report.issues.push_back({ValidationIssue::Kind::non_finite, t, i, j, k, v});
                    } else if (!in_physical_range(s.var, v)) {
                        report.issues.push_back({ValidationIssue::Kind::out_of_range, t, i, j, k, v});
                    }
                }
            }
        }
    }
    return report;
}

// Pairs day t inputs with day t+1 targets over the post-spinup window.
// Rejects non-finite values outright: silently training through NaN would
// poison every coefficient downstream.
inline TrainingPairs build_training_pairs(const FieldSeries& temperature,
                                          const FieldSeries& ozone, int ilat, int ilon) {
    require(temperature.grid.same_geometry(ozone.grid), Errc::data,
            "temperature and ozone archives live on different grids");
    require(temperature.ntime == ozone.ntime, Errc::data,
            "temperature and ozone archives cover different time spans");
    require(temperature.var == VarKind::temperature_K && ozone.var == VarKind::ozone_vmr,
            Errc::data, "training expects a temperature archive and an ozone archive");
    require(ilat >= 0 && ilat < temperature.grid.nlat() && ilon >= 0 &&
                ilon < temperature.grid.nlon(),
            Errc::config, "training column out of grid range");
    const int start = std::max(temperature.spinup_days, ozone.spinup_days);
    const int nsamples = temperature.ntime - start - 1;
    require(nsamples >= 2, Errc::data, "need at least two post-spinup sample pairs");

    const GridSpec& g = temperature.grid;
    TrainingPairs pairs;
    pairs.nsamples = nsamples;
    pairs.nfeat = g.cap_level_index;
    pairs.ntargets = g.cap_level_index;
    pairs.x.resize(static_cast<std::size_t>(nsamples) * pairs.nfeat);
    pairs.y.resize(static_cast<std::size_t>(nsamples) * pairs.ntargets);
    for (int i = 0; i < nsamples; ++i) {
        auto tcol = temperature.column(start + i, ilat, ilon);
        auto ocol = ozone.column(start + i + 1, ilat, ilon);
        for (int k = 0; k < pairs.nfeat; ++k) {
            double v = tcol[static_cast<std::size_t>(k)];
            require(std::isfinite(v), Errc::data, "non-finite temperature in training data");
            pairs.x[static_cast<std::size_t>(i) * pairs.nfeat + k] = v;
        }
        for (int k = 0; k < pairs.ntargets; ++k) {
            double v = ocol[static_cast<std::size_t>(k)];
            require(std::isfinite(v), Errc::data, "non-finite ozone in training data");
            pairs.y[static_cast<std::size_t>(i) * pairs.ntargets + k] = v;
        }
    }
    return pairs;
}

// Mean state over the post-spinup window; day-of-year kind needs a full year
// so every calendar day has at least one sample.
inline Climatology compute_climatology(const FieldSeries& s, ClimKind kind) {
    const int start = s.spinup_days;
    const int nobs = s.ntime - start;
    if (kind == ClimKind::day_of_year) {
        require(nobs >= kDaysPerYear, Errc::data,
                "day-of-year climatology needs at least one full post-spinup year");
    } else {
        require(nobs >= 1, Errc::data, "climatology needs at least one post-spinup sample");
    }
    Climatology clim;
    clim.grid = s.grid;
    clim.var = s.var;
    clim.kind = kind;
    const std::size_t np = s.grid.npoints();
    clim.values.assign(static_cast<std::size_t>(clim.rows()) * np, 0.0);

    if (kind == ClimKind::annual) {
        for (int t = start; t < s.ntime; ++t) {
            auto day = s.slice(t);
            for (std::size_t p = 0; p < np; ++p) {
                clim.values[p] += day[p];
            }
        }
        for (std::size_t p = 0; p < np; ++p) {
            clim.values[p] /= nobs;
        }
        return clim;
    }

    std::vector<int> counts(kDaysPerYear, 0);
    for (int t = start; t < s.ntime; ++t) {
        int doy = t % kDaysPerYear;
        ++counts[static_cast<std::size_t>(doy)];
        auto day = s.slice(t);
        double* row = clim.values.data() + static_cast<std::size_t>(doy) * np;
        for (std::size_t p = 0; p < np; ++p) {
            row[p] += day[p];
        }
    }
    for (int d = 0; d < kDaysPerYear; ++d) {
        require(counts[static_cast<std::size_t>(d)] > 0, Errc::data,
                "calendar day missing from climatology window");
        double* row = clim.values.data() + static_cast<std::size_t>(d) * np;
        for (std::size_t p = 0; p < np; ++p) {
            row[p] /= counts[static_cast<std::size_t>(d)];
        }
    }
    std::copy_n(clim.values.data() + static_cast<std::size_t>(kDaysPerYear - 1) * np, np,
                clim.values.data() + static_cast<std::size_t>(kDaysPerYear) * np);
    return clim;
}

}  // namespace mloz
