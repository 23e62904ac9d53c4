#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mloz/core.hpp"
#include "mloz/error.hpp"

namespace mloz::eval {

// Diagnostics shared by the CLI and the acceptance runs. Spatial averages
// weight columns by cos(latitude) and give band levels equal weight; time
// statistics skip each series' spin-up window.

inline constexpr double kPercentFloor = 1e-10;      // denominator floor, native units
inline constexpr double kSurfacePressurePa = 101325.0;
inline constexpr double kScaleHeightM = 7000.0;
inline constexpr double kGravity = 9.80665;          // m s^-2
inline constexpr double kMolarMassAir = 0.0289644;   // kg mol^-1
inline constexpr double kAvogadro = 6.02214076e23;   // mol^-1
inline constexpr double kDobsonUnit = 2.687e20;      // molecules m^-2

struct Band {
    std::string name;
    double z_low_m = 0.0;
    double z_high_m = 1e9;
    double abs_lat_max_deg = 90.0;
};

inline Band stratosphere_band() { return {"stratosphere", 16000.0, 50000.0, 90.0}; }
inline Band troposphere_band() { return {"troposphere", 0.0, 12000.0, 90.0}; }
inline Band upper_stratosphere_band() { return {"upper-stratosphere", 35000.0, 50000.0, 90.0}; }
inline Band tropical_lower_stratosphere_band() {
    return {"tropical-lower-stratosphere", 16000.0, 28000.0, 25.0};
}

inline Band band_by_name(const std::string& name) {
    for (const Band& b : {stratosphere_band(), troposphere_band(), upper_stratosphere_band(),
                          tropical_lower_stratosphere_band()}) {
        if (b.name == name) return b;
    }
    fail(Errc::config,
         "unknown band: " + name +
             " (expected stratosphere, troposphere, upper-stratosphere, or "
             "tropical-lower-stratosphere)");
}

// Per-point weights: cos(lat) where the point sits inside the band, else 0.
inline std::vector<double> band_weights(const GridSpec& grid, const Band& band) {
    std::vector<double> w(grid.npoints(), 0.0);
    for (int i = 0; i < grid.nlat(); ++i) {
        if (std::abs(grid.lat_deg[i]) > band.abs_lat_max_deg) continue;
        const double cw = std::cos(grid.lat_deg[i] * std::numbers::pi / 180.0);
        for (int j = 0; j < grid.nlon(); ++j) {
            for (int k = 0; k < grid.nlev(); ++k) {
                const double z = grid.level_height_m[k];
                if (z >= band.z_low_m && z <= band.z_high_m) {
                    w[field_index(grid, i, j, k)] = cw;
                }
            }
        }
    }
    return w;
}

inline double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    require(values.size() == weights.size(), Errc::data, "weight vector size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < values.size(); ++p) {
        num += weights[p] * values[p];
        den += weights[p];
    }
    require(den > 0.0, Errc::data, "band selects no grid points");
    return num / den;
}

// Daily band means, spin-up excluded.
inline std::vector<double> band_daily_series(const FieldSeries& s, const Band& band) {
    const std::vector<double> w = band_weights(s.grid, band);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(s.ntime - s.spinup_days));
    for (int t = s.spinup_days; t < s.ntime; ++t) {
        out.push_back(weighted_mean(s.slice(t), w));
    }
    return out;
}

inline double mean_of(std::span<const double> v) {
    require(!v.empty(), Errc::data, "mean of an empty series");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double band_time_mean(const FieldSeries& s, const Band& band) {
    return mean_of(band_daily_series(s, band));
}

// Signed percent difference with a floored denominator.
inline double percent_bias(double test_mean, double reference_mean) {
    return 100.0 * (test_mean - reference_mean) /
           std::max(std::abs(reference_mean), kPercentFloor);
}

// Per-point time mean over the post-spin-up window.
inline Field time_mean_field(const FieldSeries& s) {
    const std::size_t np = s.grid.npoints();
    Field out(np, 0.0);
    const int n = s.ntime - s.spinup_days;
    require(n >= 1, Errc::data, "series has no days past the spin-up window");
    for (int t = s.spinup_days; t < s.ntime; ++t) {
        std::span<const double> day = s.slice(t);
        for (std::size_t p = 0; p < np; ++p) out[p] += day[p];
    }
    for (double& v : out) v /= static_cast<double>(n);
    return out;
}

// Per-point population standard deviation over time.
inline Field std_field(const FieldSeries& s) {
    const std::size_t np = s.grid.npoints();
    const Field mean = time_mean_field(s);
    Field out(np, 0.0);
    const int n = s.ntime - s.spinup_days;
    for (int t = s.spinup_days; t < s.ntime; ++t) {
        std::span<const double> day = s.slice(t);
        for (std::size_t p = 0; p < np; ++p) {
            const double d = day[p] - mean[p];
            out[p] += d * d;
        }
    }
    for (double& v : out) v = std::sqrt(v / static_cast<double>(n));
    return out;
}

// Per-point coefficient of determination of a prediction series against a
// reference series sharing the same grid and time axis.
inline Field r2_field(const FieldSeries& pred, const FieldSeries& truth) {
    require(pred.grid.same_geometry(truth.grid), Errc::data, "r2 needs matching grids");
    require(pred.ntime == truth.ntime, Errc::data, "r2 needs matching time axes");
    const int start = std::max(pred.spinup_days, truth.spinup_days);
    const int n = pred.ntime - start;
    require(n >= 2, Errc::data, "r2 needs at least two shared days");
    const std::size_t np = pred.grid.npoints();
    std::vector<double> tmean(np, 0.0);
    for (int t = start; t < pred.ntime; ++t) {
        std::span<const double> tr = truth.slice(t);
        for (std::size_t p = 0; p < np; ++p) tmean[p] += tr[p];
    }
    for (double& v : tmean) v /= static_cast<double>(n);
    Field ssr(np, 0.0), sst(np, 0.0);
    for (int t = start; t < pred.ntime; ++t) {
        std::span<const double> pr = pred.slice(t);
        std::span<const double> tr = truth.slice(t);
        for (std::size_t p = 0; p < np; ++p) {
            const double e = pr[p] - tr[p];
            const double d = tr[p] - tmean[p];
            ssr[p] += e * e;
            sst[p] += d * d;
        }
    }
    Field out(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
        out[p] = sst[p] > 0.0 ? 1.0 - ssr[p] / sst[p]
                              : (ssr[p] == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
    }
    return out;
}

// cos(lat)-weighted mean of a per-point field restricted to a band.
inline double band_field_mean(const Field& f, const GridSpec& grid, const Band& band) {
    return weighted_mean(f, band_weights(grid, band));
}

inline std::vector<double> annual_means(std::span<const double> daily) {
    require(daily.size() >= static_cast<std::size_t>(kDaysPerYear), Errc::data,
            "trend needs at least one full year");
    const std::size_t nyears = daily.size() / kDaysPerYear;
    std::vector<double> out(nyears, 0.0);
    for (std::size_t y = 0; y < nyears; ++y) {
        double s = 0.0;
        for (int d = 0; d < kDaysPerYear; ++d) s += daily[y * kDaysPerYear + d];
        out[y] = s / kDaysPerYear;
    }
    return out;
}

// Least-squares slope of y against its index.
inline double lsq_slope(std::span<const double> y) {
    const std::size_t n = y.size();
    require(n >= 2, Errc::data, "trend needs at least two points");
    const double xm = (static_cast<double>(n) - 1.0) / 2.0;
    const double ym = mean_of(y);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xm;
        num += dx * (y[i] - ym);
        den += dx * dx;
    }
    return num / den;
}

// Linear trend of the annual band means, in percent of the series mean per
// decade. The long-run stability check requires |drift| below 1 %/decade.
inline double drift_percent_per_decade(const FieldSeries& s, const Band& band) {
    const std::vector<double> daily = band_daily_series(s, band);
    const std::vector<double> yearly = annual_means(daily);
    const double slope_per_year = lsq_slope(yearly);
    const double mean = mean_of(yearly);
    return 100.0 * slope_per_year * 10.0 / std::max(std::abs(mean), kPercentFloor);
}

// Mean seasonal cycle: one value per calendar day, spin-up excluded.
inline std::vector<double> seasonal_cycle(const FieldSeries& s, const Band& band) {
    const std::vector<double> daily = band_daily_series(s, band);
    std::vector<double> sum(kDaysPerYear, 0.0);
    std::vector<int> count(kDaysPerYear, 0);
    for (std::size_t t = 0; t < daily.size(); ++t) {
        const int d = static_cast<int>((s.spinup_days + static_cast<int>(t)) % kDaysPerYear);
        sum[d] += daily[t];
        ++count[d];
    }
    for (int d = 0; d < kDaysPerYear; ++d) {
        require(count[d] > 0, Errc::data, "seasonal cycle needs every calendar day");
        sum[d] /= count[d];
    }
    return sum;
}

struct KdeResult {
    std::vector<double> x;
    std::vector<double> density;
    double bandwidth = 0.0;
};

// Gaussian kernel density on 512 points spanning the sample range plus six
// bandwidths each side; bandwidth is 2% of the supplied reference mean.
inline KdeResult kde_pdf(std::span<const double> samples, double reference_mean) {
    require(!samples.empty(), Errc::data, "density estimate needs samples");
    const double h = 0.02 * std::abs(reference_mean);
    require(h > 0.0 && std::isfinite(h), Errc::data,
            "density bandwidth must be positive; reference mean is degenerate");
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it - 6.0 * h;
    const double hi = *hi_it + 6.0 * h;
    constexpr int kPoints = 512;
    KdeResult r;
    r.bandwidth = h;
    r.x.resize(kPoints);
    r.density.assign(kPoints, 0.0);
    const double step = (hi - lo) / (kPoints - 1);
    const double norm =
        1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    for (int i = 0; i < kPoints; ++i) {
        const double x = lo + step * i;
        r.x[i] = x;
        double acc = 0.0;
        for (double s : samples) {
            const double u = (x - s) / h;
            acc += std::exp(-0.5 * u * u);
        }
        r.density[i] = norm * acc;
    }
    return r;
}

inline double trapezoid_integral(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, Errc::data, "integral needs matched abscissae");
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    return acc;
}

// Total-column ozone in Dobson units from a vmr profile on height levels.
// Pressure follows an isothermal exponential; each level owns the pressure
// slab between the midpoints of its neighbours, the lowest level extends to
// the surface and the highest to zero pressure, so a constant-vmr column is
// integrated exactly.
inline double column_ozone_du(std::span<const double> vmr, std::span<const double> z_m) {
    require(vmr.size() == z_m.size() && !vmr.empty(), Errc::data,
            "column needs one mixing ratio per level");
    const auto pressure = [](double z) { return kSurfacePressurePa * std::exp(-z / kScaleHeightM); };
    double molecules = 0.0;
    const std::size_t n = vmr.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double p_lo = k == 0 ? kSurfacePressurePa : pressure(0.5 * (z_m[k - 1] + z_m[k]));
        const double p_hi = k + 1 == n ? 0.0 : pressure(0.5 * (z_m[k] + z_m[k + 1]));
        molecules += vmr[k] * (p_lo - p_hi) / (kGravity * kMolarMassAir) * kAvogadro;
    }
    return molecules / kDobsonUnit;
}

inline std::vector<double> column_ozone_series_du(const FieldSeries& s, int ilat, int ilon) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(s.ntime - s.spinup_days));
    for (int t = s.spinup_days; t < s.ntime; ++t) {
        out.push_back(column_ozone_du(s.column(t, ilat, ilon), s.grid.level_height_m));
    }
    return out;
}

// Single-frequency discrete Fourier amplitude: 2|X(1/T)|/n.
inline double periodic_amplitude(std::span<const double> values, double period_days) {
    require(period_days > 0.0, Errc::config, "period must be positive");
    require(values.size() >= 2, Errc::data, "amplitude needs at least two samples");
    const double w = 2.0 * std::numbers::pi / period_days;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < values.size(); ++t) {
        acc += values[t] * std::polar(1.0, -w * static_cast<double>(t));
    }
    return 2.0 * std::abs(acc) / static_cast<double>(values.size());
}

// Brute-force spectral peak: scans integer periods and returns the one with
// the largest single-frequency amplitude of the mean-removed series.
inline double dominant_period_days(std::span<const double> values, double min_period,
                                   double max_period) {
    require(min_period >= 2.0 && max_period > min_period, Errc::config,
            "period scan range is empty");
    std::vector<double> anom(values.begin(), values.end());
    const double m = mean_of(anom);
    for (double& v : anom) v -= m;
    double best_period = min_period;
    double best_amp = -1.0;
    for (double period = min_period; period <= max_period; period += 1.0) {
        const double amp = periodic_amplitude(anom, period);
        if (amp > best_amp) {
            best_amp = amp;
            best_period = period;
        }
    }
    return best_period;
}

struct PlotColumn {
    std::string name;
    std::vector<double> values;
};

// Plot-ready CSV: header row, then %.17g values (round-trip exact).
inline void export_csv(const std::filesystem::path& path, std::span<const PlotColumn> columns) {
    require(!columns.empty(), Errc::config, "csv export needs at least one column");
    const std::size_t nrows = columns.front().values.size();
    for (const PlotColumn& c : columns) {
        require(c.values.size() == nrows, Errc::data, "csv columns must share one length");
        require(c.name.find(',') == std::string::npos && c.name.find('\n') == std::string::npos,
                Errc::config, "csv column names must not contain separators");
    }
    std::ofstream out(path);
    if (!out) fail(Errc::io, "cannot open for writing: " + path.string());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out << (c ? "," : "") << columns[c].name;
    }
    out << "\n";
    char buf[64];
    for (std::size_t r = 0; r < nrows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", columns[c].values[r]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    out.flush();
    if (!out) fail(Errc::io, "write failed: " + path.string());
}

}  // namespace mloz::eval
