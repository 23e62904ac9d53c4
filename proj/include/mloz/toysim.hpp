#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "mloz/core.hpp"
#include "mloz/engine.hpp"
#include "mloz/error.hpp"
#include "mloz/rng.hpp"
#include "mloz/transfer.hpp"

namespace mloz::toysim {

// Idealized coupled column world: an AR(1) temperature field relaxing toward
// a seasonal climatology, plus an ozone layer produced by an analytic
// "truth" chemistry. The chemistry is one shared formula for every world;
// worlds differ only in their grid and a fixed temperature offset profile,
// so two worlds presented with identical inputs make identical ozone.
//
// Daily update (all fields per grid point, one day per step):
//   T(t) = clim(d_t) + forcing*(co2-1)/3 + ar1*(T(t-1) - clim(d_{t-1}))
//          + noise + gain*(O(t-1) - O_clim(d_{t-1}))
//   O(t) = chemistry(T(t-1), d_t)            [or a model in its place]
// Ozone reacts to the previous day's temperature, which is exactly the lag
// the learned parameterization uses, so truth and learned runs are
// drop-in replacements for each other.

inline constexpr double kA1 = 0.10;             // seasonal ozone modulation
inline constexpr double kA2 = 0.08;             // QBO ozone modulation
inline constexpr double kSigmaT = 6.0;          // K, chemistry temperature scale
inline constexpr double kChemNoiseFrac = 0.01;  // multiplicative day-to-day noise
inline constexpr int kSolsticeDay = 172;

inline double seasonal_phase(int day_of_year) {
    return std::cos(2.0 * std::numbers::pi * (day_of_year - kSolsticeDay) / kDaysPerYear);
}

// Background ozone: a Gaussian layer peaking near 32 km, thinner at the poles.
inline double base_ozone_vmr(double z_m, double lat_deg) {
    const double s = std::sin(lat_deg * std::numbers::pi / 180.0);
    const double g = (z_m - 32000.0) / 9000.0;
    return (0.03e-6 + 8.0e-6 * std::exp(-g * g)) * (1.0 - 0.3 * s * s);
}

// QBO influence: equatorial, centered near 26 km.
inline double qbo_shape(double z_m, double lat_deg) {
    const double gz = (z_m - 26000.0) / 7000.0;
    const double gl = lat_deg / 25.0;
    return std::exp(-gz * gz) * std::exp(-gl * gl);
}

inline double seasonal_factor(double lat_deg, int day_of_year) {
    return std::sin(lat_deg * std::numbers::pi / 180.0) * seasonal_phase(day_of_year);
}

// d(ozone)/d(temperature) sign profile: warming boosts ozone below ~32 km
// and destroys it above, mimicking the photochemical regime change.
inline double temp_sensitivity(double z_m) {
    if (z_m <= 12000.0) return 0.05;
    if (z_m <= 15000.0) return 0.05 + 0.05 * (z_m - 12000.0) / 3000.0;
    if (z_m <= 30000.0) return 0.10;
    if (z_m <= 35000.0) return 0.10 - 0.20 * (z_m - 30000.0) / 5000.0;
    return -0.10;
}

// Reference temperature profile: surface, tropopause at 12 km, isothermal to
// 20 km, stratopause at 50 km, mesosphere to 80 km; linear between nodes.
inline double base_temperature_K(double z_m, double lat_deg) {
    const double s = std::sin(lat_deg * std::numbers::pi / 180.0);
    const double s2 = s * s;
    const double t_sfc = 288.0 - 30.0 * s2;
    const double nodes_z[5] = {0.0, 12000.0, 20000.0, 50000.0, 80000.0};
    const double nodes_t[5] = {t_sfc, t_sfc - 78.0, t_sfc - 78.0, 265.0 - 10.0 * s2,
                               205.0 - 10.0 * s2};
    if (z_m <= nodes_z[0]) return nodes_t[0];
    for (int i = 1; i < 5; ++i) {
        if (z_m <= nodes_z[i]) {
            const double w = (z_m - nodes_z[i - 1]) / (nodes_z[i] - nodes_z[i - 1]);
            return nodes_t[i - 1] + w * (nodes_t[i] - nodes_t[i - 1]);
        }
    }
    return nodes_t[4];
}

// Surface-trapped seasonal cycle. The profile is deliberately close to
// orthogonal to the greenhouse forcing profile over the stratospheric column,
// mirroring the real separation between solar-driven seasonal variability and
// the vertically monotonic CO2 cooling pattern; without that separation a
// linear model trained on seasonal covariance misattributes a forced shift.
inline double seasonal_amp_K(double z_m) { return 0.85 + 14.0 * std::exp(-z_m / 5000.0); }

// Universal reference climate the chemistry responds to (no world offset).
inline double ref_temperature_K(double z_m, double lat_deg, int day_of_year) {
    return base_temperature_K(z_m, lat_deg) +
           seasonal_amp_K(z_m) * seasonal_factor(lat_deg, day_of_year);
}

// Equilibrium temperature change for a quadrupling: warm troposphere, strongly
// cooled stratosphere, smooth hand-off near 12.5 km.
inline double forcing_equilibrium_K(double z_m) {
    return 4.0 - 12.0 * 0.5 * (1.0 + std::tanh((z_m - 12500.0) / 3000.0));
}

// Radiative heating by ozone anomalies, strongest in the upper stratosphere
// where the chemistry sensitivity is negative. Keeping the gain out of the
// positive-sensitivity band below 32 km makes the coupled ozone-temperature
// loop damping in every world, so a host model rescaled by its own (smaller)
// variance cannot be pushed past the stability boundary.
inline double feedback_gain_K_per_vmr(double z_m, double peak) {
    const double g = (z_m - 40000.0) / 6000.0;
    return peak * std::exp(-g * g);
}

// Expected ozone at reference climate: QBO and temperature-anomaly terms
// average out, so only the seasonal modulation survives.
inline double ozone_clim_vmr(double z_m, double lat_deg, int day_of_year) {
    return base_ozone_vmr(z_m, lat_deg) * (1.0 + kA1 * seasonal_factor(lat_deg, day_of_year));
}

struct WorldConfig {
    std::string name;
    GridSpec grid;
    // Fixed climatology offset, blended in height: offset_low below ~32 km,
    // offset_high above. Zero for the reference world. The hand-off sits at
    // the same height where the chemistry's temperature sensitivity changes
    // sign, so the offset pushes ozone the same way at all heights.
    double offset_low_K = 0.0;
    double offset_high_K = 0.0;
    double ar1 = 0.85;
    double noise_std_K = 1.2;
    double qbo_period_days = 800.0;
    double feedback_peak_K_per_vmr = 6.0e5;
    int spinup_days = kDaysPerYear;
};

inline double world_offset_K(const WorldConfig& w, double z_m) {
    const double blend = 0.5 * (1.0 + std::tanh((z_m - 32000.0) / 3000.0));
    return w.offset_low_K + (w.offset_high_K - w.offset_low_K) * blend;
}

inline double world_clim_temperature_K(const WorldConfig& w, double z_m, double lat_deg,
                                       int day_of_year) {
    return ref_temperature_K(z_m, lat_deg, day_of_year) + world_offset_K(w, z_m);
}

// 48 cell-center latitudes, one longitude, 76 levels every 1000 m from 300 m.
inline GridSpec reference_grid() {
    std::vector<double> lats(48);
    for (int i = 0; i < 48; ++i) lats[i] = -88.125 + 3.75 * i;
    std::vector<double> levels(76);
    for (int k = 0; k < 76; ++k) levels[k] = 300.0 + 1000.0 * k;
    return GridSpec::make(std::move(lats), {0.0}, std::move(levels));
}

// Same horizontal axes, different vertical ladder: six shallow near-surface
// levels, then a stretched spacing up to 70 km.
inline GridSpec target_grid() {
    std::vector<double> lats(48);
    for (int i = 0; i < 48; ++i) lats[i] = -88.125 + 3.75 * i;
    std::vector<double> levels;
    levels.reserve(71);
    for (double h : {10.0, 50.0, 100.0, 150.0, 200.0, 250.0}) levels.push_back(h);
    for (int j = 0; j <= 64; ++j) {
        levels.push_back(400.0 + (70000.0 - 400.0) * std::pow(j / 64.0, 1.15));
    }
    return GridSpec::make(std::move(lats), {0.0}, std::move(levels));
}

inline WorldConfig world_a() {
    WorldConfig w;
    w.name = "a";
    w.grid = reference_grid();
    return w;
}

// Second world: same physics, shifted climatology (+2 K low, -3 K high).
inline WorldConfig world_b() {
    WorldConfig w;
    w.name = "b";
    w.grid = target_grid();
    w.offset_low_K = 2.0;
    w.offset_high_K = -3.0;
    return w;
}

inline WorldConfig world_by_name(const std::string& name) {
    if (name == "a") return world_a();
    if (name == "b") return world_b();
    fail(Errc::config, "unknown world preset: " + name + " (expected a or b)");
}

inline Climatology analytic_temperature_climatology(const WorldConfig& w) {
    Climatology c;
    c.grid = w.grid;
    c.var = VarKind::temperature_K;
    c.kind = ClimKind::day_of_year;
    const std::size_t np = w.grid.npoints();
    c.values.assign(static_cast<std::size_t>(366) * np, 0.0);
    for (int d = 0; d < kDaysPerYear; ++d) {
        double* row = c.values.data() + static_cast<std::size_t>(d) * np;
        for (int i = 0; i < w.grid.nlat(); ++i) {
            for (int j = 0; j < w.grid.nlon(); ++j) {
                double* col = row + field_index(w.grid, i, j, 0);
                for (int k = 0; k < w.grid.nlev(); ++k) {
                    col[k] = world_clim_temperature_K(w, w.grid.level_height_m[k],
                                                      w.grid.lat_deg[i], d);
                }
            }
        }
    }
    std::copy_n(c.values.data() + static_cast<std::size_t>(364) * np, np,
                c.values.data() + static_cast<std::size_t>(365) * np);
    return c;
}

inline Climatology analytic_ozone_climatology(const GridSpec& grid) {
    Climatology c;
    c.grid = grid;
    c.var = VarKind::ozone_vmr;
    c.kind = ClimKind::day_of_year;
    const std::size_t np = grid.npoints();
    c.values.assign(static_cast<std::size_t>(366) * np, 0.0);
    for (int d = 0; d < kDaysPerYear; ++d) {
        double* row = c.values.data() + static_cast<std::size_t>(d) * np;
        for (int i = 0; i < grid.nlat(); ++i) {
            for (int j = 0; j < grid.nlon(); ++j) {
                double* col = row + field_index(grid, i, j, 0);
                for (int k = 0; k < grid.nlev(); ++k) {
                    col[k] = ozone_clim_vmr(grid.level_height_m[k], grid.lat_deg[i], d);
                }
            }
        }
    }
    std::copy_n(c.values.data() + static_cast<std::size_t>(364) * np, np,
                c.values.data() + static_cast<std::size_t>(365) * np);
    return c;
}

enum class Mode {
    truth,              // analytic chemistry
    interactive,        // learned coefficients on the native grid
    fixed_climatology,  // prescribed daily ozone climatology, no feedback
    transferred,        // coefficients from another world via vertical mapping
};

inline Mode mode_by_name(const std::string& name) {
    if (name == "truth") return Mode::truth;
    if (name == "mloz") return Mode::interactive;
    if (name == "fixed") return Mode::fixed_climatology;
    if (name == "transferred") return Mode::transferred;
    fail(Errc::config, "unknown simulation mode: " + name +
                           " (expected truth, mloz, fixed, or transferred)");
}

inline std::string mode_name(Mode m) {
    switch (m) {
        case Mode::truth: return "truth";
        case Mode::interactive: return "mloz";
        case Mode::fixed_climatology: return "fixed";
        case Mode::transferred: return "transferred";
    }
    fail(Errc::config, "invalid mode value");
}

struct RunConfig {
    WorldConfig world;
    Mode mode = Mode::truth;
    int nyears = 1;  // years kept after the spin-up window
    std::uint64_t seed = 1;
    double co2_multiplier = 1.0;
    int nthreads = 1;
    int block_cols = 16;
    // interactive + transferred:
    const CoefficientSet* coeffs = nullptr;
    // transferred only:
    const VerticalMap* vmap = nullptr;
    const RecalibrationParams* recal = nullptr;
    const Climatology* fill_clim = nullptr;
};

struct RunResult {
    FieldSeries temperature;
    FieldSeries ozone;
};

namespace detail {

// Per-run lookup tables; every day of the loop reads these instead of
// re-evaluating the analytic profiles.
struct WorldTables {
    Climatology temp_clim;
    Climatology ozone_clim;
    Field base_ozone;      // B(z, lat)
    Field qbo_q;           // Q(z, lat)
    std::vector<double> sens;          // s(z)
    std::vector<double> gain;          // feedback, K per vmr
    std::vector<double> forcing_step;  // per-day forcing at 4x, K
    std::vector<double> sinlat;
};

inline WorldTables make_tables(const WorldConfig& w) {
    WorldTables t;
    t.temp_clim = analytic_temperature_climatology(w);
    t.ozone_clim = analytic_ozone_climatology(w.grid);
    t.base_ozone = make_field(w.grid);
    t.qbo_q = make_field(w.grid);
    const int nlev = w.grid.nlev();
    t.sens.resize(nlev);
    t.gain.resize(nlev);
    t.forcing_step.resize(nlev);
    for (int k = 0; k < nlev; ++k) {
        const double z = w.grid.level_height_m[k];
        t.sens[k] = temp_sensitivity(z);
        t.gain[k] = feedback_gain_K_per_vmr(z, w.feedback_peak_K_per_vmr);
        t.forcing_step[k] = forcing_equilibrium_K(z) * (1.0 - w.ar1);
    }
    t.sinlat.resize(w.grid.nlat());
    for (int i = 0; i < w.grid.nlat(); ++i) {
        t.sinlat[i] = std::sin(w.grid.lat_deg[i] * std::numbers::pi / 180.0);
        for (int j = 0; j < w.grid.nlon(); ++j) {
            double* b = t.base_ozone.data() + field_index(w.grid, i, j, 0);
            double* q = t.qbo_q.data() + field_index(w.grid, i, j, 0);
            for (int k = 0; k < nlev; ++k) {
                b[k] = base_ozone_vmr(w.grid.level_height_m[k], w.grid.lat_deg[i]);
                q[k] = qbo_shape(w.grid.level_height_m[k], w.grid.lat_deg[i]);
            }
        }
    }
    return t;
}

}  // namespace detail

// Analytic chemistry for one day. temp_prev is the full previous-day field;
// day_prev is its day-of-year. Noise draws are keyed by (absolute day, point)
// so the sequence is independent of evaluation order.
inline void truth_ozone_field(const WorldConfig& w, const detail::WorldTables& t, int day_abs,
                              int day_of_year, int day_prev_of_year, const Field& temp_prev,
                              double qbo_phase, std::uint64_t chem_stream, Field& out) {
    const int nlat = w.grid.nlat();
    const int nlon = w.grid.nlon();
    const int nlev = w.grid.nlev();
    const double qbo_sin = std::sin(qbo_phase);
    const double c_now = seasonal_phase(day_of_year);
    const double c_prev = seasonal_phase(day_prev_of_year);
    for (int i = 0; i < nlat; ++i) {
        for (int j = 0; j < nlon; ++j) {
            const std::size_t base = field_index(w.grid, i, j, 0);
            const double* tp = temp_prev.data() + base;
            const double* b = t.base_ozone.data() + base;
            const double* q = t.qbo_q.data() + base;
            double* o = out.data() + base;
            const double seasonal_now = t.sinlat[i] * c_now;
            for (int k = 0; k < nlev; ++k) {
                const double z = w.grid.level_height_m[k];
                const double t_ref = base_temperature_K(z, w.grid.lat_deg[i]) +
                                     seasonal_amp_K(z) * t.sinlat[i] * c_prev;
                const double anom = (tp[k] - t_ref) / kSigmaT;
                const double shape = 1.0 + kA1 * seasonal_now + kA2 * q[k] * qbo_sin +
                                     t.sens[k] * anom;
                const double xi = counter_normal(chem_stream, static_cast<std::uint64_t>(day_abs),
                                                 base + static_cast<std::size_t>(k));
                o[k] = std::max(0.0, b[k] * std::max(0.0, shape) * (1.0 + kChemNoiseFrac * xi));
            }
        }
    }
}

inline RunResult run_experiment(const RunConfig& cfg) {
    const WorldConfig& w = cfg.world;
    require(cfg.nyears >= 1, Errc::config, "simulation needs at least one year");
    require(cfg.co2_multiplier > 0.0, Errc::config, "co2 multiplier must be positive");
    require(w.qbo_period_days > 1.0, Errc::config, "qbo period must exceed one day");
    require(w.ar1 >= 0.0 && w.ar1 < 1.0, Errc::config, "ar1 must lie in [0, 1)");
    require(w.spinup_days >= 1, Errc::config, "spin-up must cover at least one day");
    if (cfg.mode == Mode::interactive || cfg.mode == Mode::transferred) {
        require(cfg.coeffs != nullptr, Errc::config, "this mode needs trained coefficients");
    }
    if (cfg.mode == Mode::interactive) {
        require(cfg.coeffs->grid.same_geometry(w.grid), Errc::config,
                "coefficients were trained on a different grid");
    }
    if (cfg.mode == Mode::transferred) {
        require(cfg.vmap && cfg.recal && cfg.fill_clim, Errc::config,
                "transferred mode needs a vertical map, recalibration, and fill climatology");
    }

    const detail::WorldTables tables = detail::make_tables(w);
    const int ntime = w.spinup_days + cfg.nyears * kDaysPerYear;
    const std::size_t np = w.grid.npoints();
    RunResult r;
    r.temperature = make_series(w.grid, VarKind::temperature_K, ntime, w.spinup_days);
    r.ozone = make_series(w.grid, VarKind::ozone_vmr, ntime, w.spinup_days);

    const std::uint64_t temp_stream = substream_seed(cfg.seed, "temp-noise");
    const std::uint64_t chem_stream = substream_seed(cfg.seed, "chem-noise");
    const double co2_term = (cfg.co2_multiplier - 1.0) / 3.0;
    const int nlat = w.grid.nlat();
    const int nlon = w.grid.nlon();
    const int nlev = w.grid.nlev();

    // Day 0: climatological start; the spin-up window absorbs the transient.
    {
        const double* tc = tables.temp_clim.values.data();  // day 0 row
        const double* oc = tables.ozone_clim.values.data();
        std::copy_n(tc, np, r.temperature.data.data());
        std::copy_n(oc, np, r.ozone.data.data());
    }

    Field temp_now = make_field(w.grid);
    Field ozone_now = make_field(w.grid);
    for (int t = 1; t < ntime; ++t) {
        const int d_now = t % kDaysPerYear;
        const int d_prev = (t - 1) % kDaysPerYear;
        const double* temp_prev = r.temperature.data.data() + static_cast<std::size_t>(t - 1) * np;
        const double* ozone_prev = r.ozone.data.data() + static_cast<std::size_t>(t - 1) * np;
        const std::size_t clim_now = static_cast<std::size_t>(d_now) * np;
        const std::size_t clim_prev = static_cast<std::size_t>(d_prev) * np;

        for (int i = 0; i < nlat; ++i) {
            for (int j = 0; j < nlon; ++j) {
                const std::size_t base = field_index(w.grid, i, j, 0);
                const double* tclim_now = tables.temp_clim.values.data() + clim_now + base;
                const double* tclim_prev = tables.temp_clim.values.data() + clim_prev + base;
                const double* oclim_prev = tables.ozone_clim.values.data() + clim_prev + base;
                double* tn = temp_now.data() + base;
                for (int k = 0; k < nlev; ++k) {
                    const double eta =
                        counter_normal(temp_stream, static_cast<std::uint64_t>(t),
                                       base + static_cast<std::size_t>(k));
                    tn[k] = tclim_now[k] + tables.forcing_step[k] * co2_term +
                            w.ar1 * (temp_prev[base + k] - tclim_prev[k]) +
                            w.noise_std_K * eta +
                            tables.gain[k] * (ozone_prev[base + k] - oclim_prev[k]);
                }
            }
        }

        Field temp_prev_copy(temp_prev, temp_prev + np);
        switch (cfg.mode) {
            case Mode::truth: {
                const double phase =
                    2.0 * std::numbers::pi * static_cast<double>(t) / w.qbo_period_days;
                truth_ozone_field(w, tables, t, d_now, d_prev, temp_prev_copy, phase, chem_stream,
                                  ozone_now);
                break;
            }
            case Mode::interactive: {
                InferenceContext ctx;
                ctx.coeffs = cfg.coeffs;
                ctx.day_of_year = d_now;
                ctx.block_cols = cfg.block_cols;
                ctx.nthreads = cfg.nthreads;
                ozone_now = predict_field(temp_prev_copy, w.grid, ctx);
                break;
            }
            case Mode::fixed_climatology: {
                std::copy_n(tables.ozone_clim.values.data() + clim_now, np, ozone_now.data());
                break;
            }
            case Mode::transferred: {
                TransferContext ctx;
                ctx.coeffs = cfg.coeffs;
                ctx.map = cfg.vmap;
                ctx.recal = cfg.recal;
                ctx.fill_clim = cfg.fill_clim;
                ctx.day_of_year = d_now;
                ctx.block_cols = cfg.block_cols;
                ctx.nthreads = cfg.nthreads;
                ozone_now = transfer_predict(temp_prev_copy, w.grid, ctx);
                break;
            }
        }

        r.temperature.set_slice(t, temp_now);
        r.ozone.set_slice(t, ozone_now);
    }
    return r;
}

}  // namespace mloz::toysim
