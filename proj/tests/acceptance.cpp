// Acceptance suite: one line per criterion, [PASS]/[FAIL], nonzero exit on
// any failure. Tolerances are pinned next to each check; experiment seeds
// are pre-registered constants. Oracles for the solver and cross-validation
// criteria are implemented in this file, independent of the library's
// linear-algebra code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mloz/mloz.hpp"

namespace {

using namespace mloz;

// Pre-registered experiment seeds. If a criterion fails on these, the
// failure is analyzed and documented, never silently reseeded.
constexpr std::uint64_t kSeedTrain = 1001;       // truth archive used for training
constexpr std::uint64_t kSeedControl = 2002;     // paired piCTRL / 4xCO2 experiments
constexpr std::uint64_t kSeedPrescribed = 3003;  // world-b prescribed-ozone run
constexpr std::uint64_t kSeedTransfer = 4004;    // world-b transfer experiments

constexpr int kSpinupDays = 365;
constexpr int kTrainYears = 10;
constexpr int kEvalYears = 10;
constexpr int kStabilityYears = 50;
constexpr int kRecalYears = 5;
constexpr int kTransferYears = 5;

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] %2d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int id, const char* name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        pass = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(id, name, pass, detail, secs);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// Independent linear-algebra oracle: dense Gaussian elimination with partial
// pivoting on the full augmented matrix. Shares no code with the library.
std::vector<double> oracle_ge_solve(std::vector<double> a, std::vector<double> b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double d = a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return x;
}

// Oracle ridge fit: assemble X'X + aI and X'y with plain loops, then GE.
std::vector<double> oracle_ridge(const std::vector<double>& x, const std::vector<double>& y,
                                 int n, int p, double alpha) {
    std::vector<double> gram(static_cast<std::size_t>(p) * p, 0.0);
    std::vector<double> rhs(p, 0.0);
    for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += x[i * p + j] * x[i * p + k];
            gram[j * p + k] = acc;
        }
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += x[i * p + j] * y[i];
        rhs[j] = acc;
        gram[j * p + j] += alpha;
    }
    return oracle_ge_solve(std::move(gram), std::move(rhs), p);
}

// ---------------------------------------------------------------------------
// Shared experiment state, produced once and reused across criteria.
struct Experiments {
    CoefficientSet coeffs_a;          // trained on the kSeedTrain truth archive
    Climatology clim_a;               // day-of-year ozone climatology of that archive
    FieldSeries train_crop_temp;      // 3-year slice for the determinism criterion
    FieldSeries train_crop_ozone;
    Field sample_temp;                // one real temperature field for predict tests

    Field pi_truth_ozone_mean, pi_truth_temp_mean;
    Field fx4_truth_ozone_mean, fx4_truth_temp_mean;
    Field pi_mloz_ozone_mean, pi_mloz_temp_mean;  // years 1..10 window
    Field fx4_mloz_ozone_mean, fx4_mloz_temp_mean;
    Field pi_fixed_temp_mean, fx4_fixed_temp_mean;

    double drift_percent = 0.0;             // 50-year control drift
    std::size_t negative_ozone = 0;          // over the full 50-year archive
    std::size_t nonfinite = 0;

    double truth_strat_mean = 0.0;           // world-a truth reference for transfer
    double transfer_bias_recal = 0.0;        // percent, stratospheric band
    double transfer_bias_norecal = 0.0;
};

toysim::RunConfig base_run(const toysim::WorldConfig& world, toysim::Mode mode, int years,
                           std::uint64_t seed, double co2) {
    toysim::RunConfig cfg;
    cfg.world = world;
    cfg.world.spinup_days = kSpinupDays;
    cfg.mode = mode;
    cfg.nyears = years;
    cfg.seed = seed;
    cfg.co2_multiplier = co2;
    return cfg;
}

Experiments run_experiments() {
    Experiments ex;
    const toysim::WorldConfig world_a = toysim::world_a();
    const toysim::WorldConfig world_b = toysim::world_b();
    const eval::Band strat = eval::stratosphere_band();

    // Training world: truth chemistry, pre-industrial control.
    {
        toysim::RunResult train =
            toysim::run_experiment(base_run(world_a, toysim::Mode::truth, kTrainYears, kSeedTrain, 1.0));
        ex.clim_a = compute_climatology(train.ozone, ClimKind::day_of_year);
        ex.train_crop_temp = crop_series(train.temperature, 0, 1095, kSpinupDays);
        ex.train_crop_ozone = crop_series(train.ozone, 0, 1095, kSpinupDays);
        std::span<const double> day = train.temperature.slice(500);
        ex.sample_temp.assign(day.begin(), day.end());
        TrainerConfig tcfg;
        tcfg.source_tag = "world-a-truth";
        ex.coeffs_a = train_all(train.temperature, train.ozone, tcfg);
    }

    // Paired control and 4xCO2 experiments, truth chemistry.
    {
        toysim::RunResult pi =
            toysim::run_experiment(base_run(world_a, toysim::Mode::truth, kEvalYears, kSeedControl, 1.0));
        ex.pi_truth_ozone_mean = eval::time_mean_field(pi.ozone);
        ex.pi_truth_temp_mean = eval::time_mean_field(pi.temperature);
        ex.truth_strat_mean = eval::band_field_mean(ex.pi_truth_ozone_mean, pi.ozone.grid, strat);
    }
    {
        toysim::RunResult fx4 =
            toysim::run_experiment(base_run(world_a, toysim::Mode::truth, kEvalYears, kSeedControl, 4.0));
        ex.fx4_truth_ozone_mean = eval::time_mean_field(fx4.ozone);
        ex.fx4_truth_temp_mean = eval::time_mean_field(fx4.temperature);
    }

    // 50-year learned-ozone control: stability plus the climatology window.
    {
        toysim::RunConfig cfg =
            base_run(world_a, toysim::Mode::interactive, kStabilityYears, kSeedControl, 1.0);
        cfg.coeffs = &ex.coeffs_a;
        toysim::RunResult run = toysim::run_experiment(cfg);
        ex.drift_percent = eval::drift_percent_per_decade(run.ozone, strat);
        for (double v : run.ozone.data) {
            if (v < 0.0) ++ex.negative_ozone;
            if (!std::isfinite(v)) ++ex.nonfinite;
        }
        for (double v : run.temperature.data) {
            if (!std::isfinite(v)) ++ex.nonfinite;
        }
        const int w0 = kSpinupDays, w1 = kSpinupDays + kEvalYears * kDaysPerYear;
        ex.pi_mloz_ozone_mean = eval::time_mean_field(crop_series(run.ozone, w0, w1));
        ex.pi_mloz_temp_mean = eval::time_mean_field(crop_series(run.temperature, w0, w1));
    }
    {
        toysim::RunConfig cfg =
            base_run(world_a, toysim::Mode::interactive, kEvalYears, kSeedControl, 4.0);
        cfg.coeffs = &ex.coeffs_a;
        toysim::RunResult run = toysim::run_experiment(cfg);
        ex.fx4_mloz_ozone_mean = eval::time_mean_field(run.ozone);
        ex.fx4_mloz_temp_mean = eval::time_mean_field(run.temperature);
    }

    // Prescribed-climatology pair: no interactive ozone anywhere.
    {
        toysim::RunResult run = toysim::run_experiment(
            base_run(world_a, toysim::Mode::fixed_climatology, kEvalYears, kSeedControl, 1.0));
        ex.pi_fixed_temp_mean = eval::time_mean_field(run.temperature);
    }
    {
        toysim::RunResult run = toysim::run_experiment(
            base_run(world_a, toysim::Mode::fixed_climatology, kEvalYears, kSeedControl, 4.0));
        ex.fx4_fixed_temp_mean = eval::time_mean_field(run.temperature);
    }

    // Cross-world transfer: world B first runs with prescribed ozone to
    // provide recalibration statistics, then with transferred coefficients.
    {
        const VerticalMap vmap = build_vertical_map(ex.coeffs_a.grid, world_b.grid);
        const Climatology fill = make_fill_climatology(ex.clim_a, world_b.grid);
        RecalibrationParams recal;
        {
            toysim::RunResult prescribed = toysim::run_experiment(
                base_run(world_b, toysim::Mode::fixed_climatology, kRecalYears, kSeedPrescribed, 1.0));
            const FieldSeries on_src =
                map_series_to_source_levels(prescribed.temperature, ex.coeffs_a.grid, vmap);
            recal = recalibrate_scaling(on_src);
        }
        const RecalibrationParams identity = identity_recalibration(ex.coeffs_a);
        for (bool use_recal : {true, false}) {
            toysim::RunConfig cfg =
                base_run(world_b, toysim::Mode::transferred, kTransferYears, kSeedTransfer, 1.0);
            cfg.coeffs = &ex.coeffs_a;
            cfg.vmap = &vmap;
            cfg.recal = use_recal ? &recal : &identity;
            cfg.fill_clim = &fill;
            toysim::RunResult run = toysim::run_experiment(cfg);
            const double mean = eval::band_time_mean(run.ozone, strat);
            const double bias = eval::percent_bias(mean, ex.truth_strat_mean);
            (use_recal ? ex.transfer_bias_recal : ex.transfer_bias_norecal) = bias;
        }
    }
    return ex;
}

// Sign-agreement fraction of two response fields over a band.
double sign_agreement(const Field& resp_a, const Field& resp_b, const GridSpec& grid,
                      const eval::Band& band) {
    const std::vector<double> w = eval::band_weights(grid, band);
    std::size_t total = 0, match = 0;
    for (std::size_t p = 0; p < w.size(); ++p) {
        if (w[p] <= 0.0) continue;
        ++total;
        if ((resp_a[p] > 0.0) == (resp_b[p] > 0.0)) ++match;
    }
    return total == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(total);
}

Field field_difference(const Field& a, const Field& b) {
    Field out(a.size());
    for (std::size_t p = 0; p < a.size(); ++p) out[p] = a[p] - b[p];
    return out;
}

std::uint64_t digest_of(const std::vector<double>& v) {
    return fnv1a64(v.data(), v.size() * sizeof(double));
}

// Independent little-endian writer for the container criterion: its own FNV
// and encoding, no shared code with the store module.
namespace indie {

std::uint64_t fnv(const unsigned char* p, std::size_t n, std::uint64_t h) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void write_coeff_file(const CoefficientSet& set, const std::filesystem::path& path,
                      double std_override = -1.0) {
    std::vector<unsigned char> head;
    for (char c : {'M', 'L', 'O', 'Z', 'C', '0', '0', '1'}) {
        head.push_back(static_cast<unsigned char>(c));
    }
    put_u32(head, static_cast<std::uint32_t>(set.grid.nlat()));
    put_u32(head, static_cast<std::uint32_t>(set.grid.nlon()));
    put_u32(head, static_cast<std::uint32_t>(set.nlev_out));
    put_u32(head, static_cast<std::uint32_t>(set.nfeat));
    put_u32(head, static_cast<std::uint32_t>(set.grid.nlev()));
    put_u32(head, static_cast<std::uint32_t>(set.cap_kind));

    std::vector<unsigned char> payload;
    auto put_all = [&](const std::vector<double>& v) {
        for (double d : v) put_f64(payload, d);
    };
    put_all(set.grid.level_height_m);
    put_all(set.grid.lat_deg);
    put_all(set.grid.lon_deg);
    put_all(set.coeffs);
    put_all(set.alpha);
    put_all(set.x_mean);
    if (std_override > -1.0) {
        std::vector<double> broken = set.x_std;
        broken[0] = std_override;
        put_all(broken);
    } else {
        put_all(set.x_std);
    }
    put_all(set.y_mean);
    put_all(set.y_std);
    put_all(set.cap_values);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    const std::uint64_t h = fnv(payload.data(), payload.size(), 14695981039346656037ull);
    unsigned char trailer[8];
    for (int i = 0; i < 8; ++i) trailer[i] = static_cast<unsigned char>(h >> (8 * i));
    out.write(reinterpret_cast<const char*>(trailer), 8);
}

}  // namespace indie

void corrupt_byte(const std::filesystem::path& path, std::uint64_t offset) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekg(static_cast<std::streamoff>(offset));
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x5a);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&c, 1);
}

template <typename Fn>
bool expect_store_error(Fn&& fn, StoreErr want) {
    try {
        fn();
    } catch (const StoreError& e) {
        return e.kind() == want;
    } catch (...) {
        return false;
    }
    return false;
}

}  // namespace

int main() {
    std::printf("acceptance suite: seeds train=%llu control=%llu prescribed=%llu transfer=%llu\n",
                (unsigned long long)kSeedTrain, (unsigned long long)kSeedControl,
                (unsigned long long)kSeedPrescribed, (unsigned long long)kSeedTransfer);

    // --- Criterion 1: ridge solver vs independent GE oracle -----------------
    criterion(1, "ridge-solver oracle equivalence", [&](std::string& detail) {
        const std::vector<double> grid = default_alpha_grid();
        Rng rng(90001);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 10 + static_cast<int>(rng.below(191));   // 10..200
            const int p = 1 + static_cast<int>(rng.below(std::min(n, 76)));  // p <= min(n,76)
            const double alpha = grid[trial % grid.size()];
            std::vector<double> x(static_cast<std::size_t>(n) * p), y(n);
            for (double& v : x) v = rng.normal();
            for (double& v : y) v = rng.normal();
            const std::vector<double> got = ridge_solve(x, n, p, y, alpha);
            const std::vector<double> want = oracle_ridge(x, y, n, p, alpha);
            double num = 0.0, den = 0.0;
            for (int j = 0; j < p; ++j) {
                num = std::max(num, std::abs(got[j] - want[j]));
                den = std::max(den, std::abs(want[j]));
            }
            worst = std::max(worst, num / std::max(den, 1e-300));
        }
        detail = fmt("100 systems, max relative deviation %.2e (tolerance 1e-10)", worst);
        return worst <= 1e-10;
    });

    // --- Criterion 2: best_alpha vs exhaustive fold-loop oracle -------------
    criterion(2, "cross-validation alpha selection vs oracle", [&](std::string& detail) {
        const std::vector<double> grid = default_alpha_grid();
        Rng rng(90002);
        int agree = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 30 + static_cast<int>(rng.below(91));  // 30..120
            const int p = 2 + static_cast<int>(rng.below(9));    // 2..10
            std::vector<double> w(p);
            for (double& v : w) v = rng.normal();
            std::vector<double> x(static_cast<std::size_t>(n) * p), y(n);
            for (double& v : x) v = rng.normal();
            for (int i = 0; i < n; ++i) {
                double acc = 0.5 * rng.normal();
                for (int j = 0; j < p; ++j) acc += x[i * p + j] * w[j];
                y[i] = acc;
            }
            const CvResult got = cross_validate(x, n, p, y, grid, 3);

            // Oracle: contiguous folds, first n%k one sample longer; per-fold
            // ridge fit on the remaining rows via the independent GE path.
            const int k = 3;
            std::vector<double> scores(grid.size(), 0.0);
            int start = 0;
            for (int f = 0; f < k; ++f) {
                const int len = n / k + (f < n % k ? 1 : 0);
                const int v0 = start, v1 = start + len;
                start = v1;
                std::vector<double> xt, yt;
                for (int i = 0; i < n; ++i) {
                    if (i >= v0 && i < v1) continue;
                    for (int j = 0; j < p; ++j) xt.push_back(x[i * p + j]);
                    yt.push_back(y[i]);
                }
                for (std::size_t a = 0; a < grid.size(); ++a) {
                    const std::vector<double> c =
                        oracle_ridge(xt, yt, static_cast<int>(yt.size()), p, grid[a]);
                    double ssr = 0.0;
                    for (int i = v0; i < v1; ++i) {
                        double pred = 0.0;
                        for (int j = 0; j < p; ++j) pred += x[i * p + j] * c[j];
                        ssr += (pred - y[i]) * (pred - y[i]);
                    }
                    scores[a] += ssr / len / k;
                }
            }
            double best_score = scores[0];
            for (double s : scores) best_score = std::min(best_score, s);
            double oracle_alpha = 0.0;
            for (std::size_t a = 0; a < grid.size(); ++a) {
                if (scores[a] <= best_score * (1.0 + 1e-12)) oracle_alpha = std::max(oracle_alpha, grid[a]);
            }
            if (got.best_alpha == oracle_alpha) ++agree;
        }
        detail = fmt("%d/20 problems select the oracle's alpha", agree);
        return agree == 20;
    });

    // --- Shared experiments --------------------------------------------------
    std::printf("running coupled experiments (training world, control pairs, transfer)...\n");
    std::fflush(stdout);
    const auto exp_start = std::chrono::steady_clock::now();
    Experiments ex = run_experiments();
    std::printf("experiments complete (%.1f s)\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - exp_start).count());
    std::fflush(stdout);

    const GridSpec& grid_a = ex.coeffs_a.grid;
    const eval::Band strat = eval::stratosphere_band();
    const eval::Band upper = eval::upper_stratosphere_band();
    const eval::Band trop_lower = eval::tropical_lower_stratosphere_band();

    // --- Criterion 3: 50-year stability --------------------------------------
    criterion(3, "50-year control stability", [&](std::string& detail) {
        detail = fmt("drift %+.3f %%/decade (|.| < 1), %zu negative, %zu non-finite",
                     ex.drift_percent, ex.negative_ozone, ex.nonfinite);
        return std::abs(ex.drift_percent) < 1.0 && ex.negative_ozone == 0 && ex.nonfinite == 0;
    });

    // --- Criterion 4: climatology fidelity ------------------------------------
    criterion(4, "control climatology within 10% of truth", [&](std::string& detail) {
        const std::vector<double> w = eval::band_weights(grid_a, strat);
        double worst = 0.0;
        for (std::size_t p = 0; p < w.size(); ++p) {
            if (w[p] <= 0.0) continue;
            worst = std::max(worst, std::abs(eval::percent_bias(ex.pi_mloz_ozone_mean[p],
                                                                ex.pi_truth_ozone_mean[p])));
        }
        detail = fmt("max |percent bias| %.3f%% over 16-50 km (tolerance 10%%)", worst);
        return worst < 10.0;
    });

    // --- Criterion 5: 4xCO2 response sign pattern -----------------------------
    criterion(5, "4xCO2 ozone response sign pattern", [&](std::string& detail) {
        const Field truth_resp = field_difference(ex.fx4_truth_ozone_mean, ex.pi_truth_ozone_mean);
        const Field mloz_resp = field_difference(ex.fx4_mloz_ozone_mean, ex.pi_mloz_ozone_mean);
        const double upper_match = sign_agreement(mloz_resp, truth_resp, grid_a, upper);
        const double lower_match = sign_agreement(mloz_resp, truth_resp, grid_a, trop_lower);
        const double upper_truth =
            eval::band_field_mean(truth_resp, grid_a, upper);
        const double lower_truth =
            eval::band_field_mean(truth_resp, grid_a, trop_lower);
        detail = fmt("sign agreement upper %.1f%%, tropical-lower %.1f%% (>= 90%%); "
                     "truth band responses %+.2e / %+.2e",
                     100.0 * upper_match, 100.0 * lower_match, upper_truth, lower_truth);
        return upper_match >= 0.9 && lower_match >= 0.9 && upper_truth > 0.0 && lower_truth < 0.0;
    });

    // --- Criterion 6: feedback reduces upper-stratospheric cooling ------------
    criterion(6, "interactive ozone damps 4xCO2 cooling", [&](std::string& detail) {
        const auto band_mean = [&](const Field& f) {
            return eval::band_field_mean(f, grid_a, upper);
        };
        const double d_mloz = band_mean(ex.fx4_mloz_temp_mean) - band_mean(ex.pi_mloz_temp_mean);
        const double d_fixed = band_mean(ex.fx4_fixed_temp_mean) - band_mean(ex.pi_fixed_temp_mean);
        const double d_truth = band_mean(ex.fx4_truth_temp_mean) - band_mean(ex.pi_truth_temp_mean);
        detail = fmt("upper-band cooling: mloz %+.3f K, fixed %+.3f K, truth %+.3f K "
                     "(|mloz| < |fixed|, |mloz-truth| <= 0.25|truth|)",
                     d_mloz, d_fixed, d_truth);
        return std::abs(d_mloz) < std::abs(d_fixed) &&
               std::abs(d_mloz - d_truth) <= 0.25 * std::abs(d_truth);
    });

    // --- Criterion 7: cross-world transfer with recalibration -----------------
    criterion(7, "transfer bias small and improved by recalibration", [&](std::string& detail) {
        detail = fmt("stratospheric bias vs world-a truth: recalibrated %+.3f%%, "
                     "unrecalibrated %+.3f%% (|recal| < 10%% and < |norecal|)",
                     ex.transfer_bias_recal, ex.transfer_bias_norecal);
        return std::abs(ex.transfer_bias_recal) < 10.0 &&
               std::abs(ex.transfer_bias_recal) < std::abs(ex.transfer_bias_norecal);
    });

    // --- Criterion 8: self-transfer is bit-exact -------------------------------
    criterion(8, "self-transfer reproduces the engine bit-exactly", [&](std::string& detail) {
        const VerticalMap self_map = build_vertical_map(grid_a, grid_a);
        const RecalibrationParams identity = identity_recalibration(ex.coeffs_a);
        const Climatology fill = make_fill_climatology(ex.clim_a, grid_a);
        std::size_t compared = 0;
        bool equal = true;
        Rng rng(90008);
        for (int day : {0, 100, 364}) {
            Field temp = ex.sample_temp;
            for (double& v : temp) v += 0.5 * rng.normal();
            InferenceContext ictx;
            ictx.coeffs = &ex.coeffs_a;
            ictx.day_of_year = day;
            TransferContext tctx;
            tctx.coeffs = &ex.coeffs_a;
            tctx.map = &self_map;
            tctx.recal = &identity;
            tctx.fill_clim = &fill;
            tctx.day_of_year = day;
            const Field a = predict_field(temp, grid_a, ictx);
            const Field b = transfer_predict(temp, grid_a, tctx);
            equal = equal && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
            compared += a.size();
        }
        detail = fmt("%zu values compared across 3 days, bitwise %s", compared,
                     equal ? "equal" : "DIFFERENT");
        return equal;
    });

    // --- Criterion 9: clamping and climatology cap ------------------------------
    criterion(9, "outputs non-negative, cap levels from climatology", [&](std::string& detail) {
        std::size_t checked = 0, negatives = 0, cap_mismatches = 0;
        Rng rng(90009);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> lats(10), lons(5);
            for (int i = 0; i < 10; ++i) lats[i] = -81.0 + 18.0 * i + rng.uniform();
            for (int j = 0; j < 5; ++j) lons[j] = 72.0 * j + rng.uniform();
            std::vector<double> levels(40);
            double h = 200.0 + 100.0 * rng.uniform();
            for (int k = 0; k < 40; ++k) {
                levels[k] = h;
                h += 1200.0 + 900.0 * rng.uniform();
            }
            const GridSpec grid = GridSpec::make(lats, lons, levels);
            const CoefficientSet set = bench::make_synthetic_coefficients(grid, 1000 + trial);
            Field temp = make_field(grid);
            for (double& v : temp) v = 230.0 + 400.0 * (rng.uniform() - 0.5);
            InferenceContext ctx;
            ctx.coeffs = &set;
            ctx.day_of_year = static_cast<int>(rng.below(365));
            const Field out = predict_field(temp, grid, ctx);
            const std::size_t ncols = grid.ncols();
            const int ncap = set.ncap_levels();
            for (std::size_t c = 0; c < ncols; ++c) {
                const double* col = out.data() + c * static_cast<std::size_t>(grid.nlev());
                std::span<const double> cap = set.cap_row(ctx.day_of_year, c);
                for (int k = 0; k < grid.nlev(); ++k) {
                    ++checked;
                    if (col[k] < 0.0) ++negatives;
                    if (k >= set.nlev_out &&
                        std::memcmp(&col[k], &cap[static_cast<std::size_t>(k - set.nlev_out)],
                                    sizeof(double)) != 0) {
                        ++cap_mismatches;
                    }
                }
            }
            (void)ncap;
        }
        detail = fmt("%zu values: %zu negative, %zu cap mismatches (need 0/0, >= 1e5 values)",
                     checked, negatives, cap_mismatches);
        return checked >= 100000 && negatives == 0 && cap_mismatches == 0;
    });

    // --- Criterion 10: KDE bandwidth rule and normalization ----------------------
    criterion(10, "density estimate bandwidth and unit integral", [&](std::string& detail) {
        Rng rng(90010);
        double worst_integral = 0.0;
        bool bandwidth_ok = true;
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 50 + static_cast<int>(rng.below(1951));
            std::vector<double> samples(n);
            const double scale = std::exp(3.0 * rng.normal());
            for (double& v : samples) v = scale * (5.0 + rng.normal() + 0.3 * rng.uniform());
            const double ref_mean = eval::mean_of(samples);
            const eval::KdeResult kde = eval::kde_pdf(samples, ref_mean);
            bandwidth_ok = bandwidth_ok && kde.bandwidth == 0.02 * std::abs(ref_mean);
            const double integral = eval::trapezoid_integral(kde.x, kde.density);
            worst_integral = std::max(worst_integral, std::abs(integral - 1.0));
        }
        detail = fmt("20 sample sets: bandwidth rule %s, max |integral-1| %.2e (<= 1e-3)",
                     bandwidth_ok ? "exact" : "VIOLATED", worst_integral);
        return bandwidth_ok && worst_integral <= 1e-3;
    });

    // --- Criterion 11: spline exactness -------------------------------------------
    criterion(11, "spline exactness on linear and cubic profiles", [&](std::string& detail) {
        Rng rng(90011);
        double worst_linear = 0.0, worst_cubic = 0.0, worst_weight = 0.0;
        for (int trial = 0; trial < 30; ++trial) {
            const int n = 4 + static_cast<int>(rng.below(9));
            std::vector<double> x(n);
            double acc = 10.0 * rng.uniform();
            for (int i = 0; i < n; ++i) {
                x[i] = acc;
                acc += 0.5 + 2.0 * rng.uniform();
            }
            const double a = rng.normal(), b = rng.normal(), c = 0.3 * rng.normal(),
                         d = 0.1 * rng.normal();
            std::vector<double> ylin(n), ycub(n);
            for (int i = 0; i < n; ++i) {
                ylin[i] = a + b * x[i];
                ycub[i] = a + x[i] * (b + x[i] * (c + x[i] * d));
            }
            const CubicSpline lin(x, ylin);
            const CubicSpline cub(x, ycub);
            double ylin_scale = 0.0, ycub_scale = 0.0;
            for (int i = 0; i < n; ++i) {
                ylin_scale = std::max(ylin_scale, std::abs(ylin[i]));
                ycub_scale = std::max(ycub_scale, std::abs(ycub[i]));
            }
            for (int probe = 0; probe < 40; ++probe) {
                const double t = x.front() + (x.back() - x.front()) * rng.uniform();
                const double el = std::abs(lin.eval(t) - (a + b * t));
                const double ec = std::abs(cub.eval(t) - (a + t * (b + t * (c + t * d))));
                worst_linear = std::max(worst_linear, el / std::max(ylin_scale, 1.0));
                worst_cubic = std::max(worst_cubic, ec / std::max(ycub_scale, 1.0));
            }
            for (int probe = 0; probe < 20; ++probe) {
                const double t = x.front() - 1.0 + (x.back() - x.front() + 2.0) * rng.uniform();
                const LinearWeight w = linear_weight(x, t);
                if (w.snap < 0) {
                    worst_weight =
                        std::max(worst_weight, std::abs(w.w_lo + (1.0 - w.w_lo) - 1.0));
                }
            }
            const LinearWeight snapped = linear_weight(x, x[n / 2]);
            if (snapped.snap != n / 2) worst_weight = 1.0;
        }
        detail = fmt("max error: linear %.2e (<= 1e-10), cubic %.2e (<= 1e-8), weight sum "
                     "deviation %.2e",
                     worst_linear, worst_cubic, worst_weight);
        return worst_linear <= 1e-10 && worst_cubic <= 1e-8 && worst_weight <= 1e-15;
    });

    // --- Criterion 12: container round-trips and rejection ------------------------
    criterion(12, "containers: round-trip, corruption, byte layout", [&](std::string& detail) {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / "mloz-acceptance-store";
        fs::create_directories(dir);

        // Toy coefficient set: 2x2 columns, 8 levels crossing the 50 km cap.
        std::vector<double> levels(8);
        for (int k = 0; k < 8; ++k) levels[k] = 10000.0 + 7000.0 * k;  // cap at level 6
        const GridSpec toy_grid = GridSpec::make({-30.0, 30.0}, {0.0, 180.0}, levels);
        const CoefficientSet toy = bench::make_synthetic_coefficients(toy_grid, 90012);

        const fs::path cpath = dir / "toy.mlozc";
        write_coefficients(toy, cpath);
        const CoefficientSet back = read_coefficients(cpath);
        const bool coeff_roundtrip =
            back.coeffs == toy.coeffs && back.alpha == toy.alpha && back.x_mean == toy.x_mean &&
            back.x_std == toy.x_std && back.y_mean == toy.y_mean && back.y_std == toy.y_std &&
            back.cap_values == toy.cap_values && back.grid.lat_deg == toy.grid.lat_deg &&
            back.grid.lon_deg == toy.grid.lon_deg &&
            back.grid.level_height_m == toy.grid.level_height_m &&
            back.nlev_out == toy.nlev_out && back.nfeat == toy.nfeat &&
            back.cap_kind == toy.cap_kind;

        // Byte-count formula, evaluated from first principles.
        const std::uint64_t ncols = 4, nlev = 8, nout = static_cast<std::uint64_t>(toy.nlev_out),
                            nfeat = static_cast<std::uint64_t>(toy.nfeat);
        const std::uint64_t coeff_expected =
            8 + 6 * 4 +
            8 * (nlev + 2 + 2 + ncols * nout * nfeat + ncols * nout + 2 * ncols * nfeat +
                 2 * ncols * nout + 1 * ncols * (nlev - nout)) +
            8;
        const bool coeff_bytes = fs::file_size(cpath) == coeff_expected;

        // Field archive: 365 days of 4x4x8.
        std::vector<double> lats4 = {-60.0, -20.0, 20.0, 60.0};
        std::vector<double> lons4 = {0.0, 90.0, 180.0, 270.0};
        std::vector<double> lev8 = {300, 1300, 2300, 3300, 4300, 5300, 6300, 7300};
        FieldSeries fs365 = make_series(GridSpec::make(lats4, lons4, lev8),
                                        VarKind::temperature_K, 365, 30);
        Rng rng(90012);
        for (double& v : fs365.data) v = 250.0 + 10.0 * rng.normal();
        const fs::path fpath = dir / "toy.mlozf";
        write_fields(fs365, fpath);
        const FieldSeries fback = read_fields(fpath);
        const bool field_roundtrip = fback.data == fs365.data && fback.ntime == 365 &&
                                     fback.spinup_days == 30 &&
                                     fback.grid.level_height_m == fs365.grid.level_height_m;
        const std::uint64_t field_expected =
            8 + 6 * 4 + 8 * (8 + 4 + 4 + 365ull * 4 * 4 * 8) + 8;
        const bool field_bytes = fs::file_size(fpath) == field_expected;

        // Corruptions, each with its distinct error class.
        bool rejects = true;
        {
            fs::path p = dir / "bad_magic.mlozc";
            fs::copy_file(cpath, p, fs::copy_options::overwrite_existing);
            corrupt_byte(p, 2);
            rejects = rejects && expect_store_error([&] { (void)read_coefficients(p); },
                                                    StoreErr::bad_magic);
        }
        {
            fs::path p = dir / "bad_payload.mlozc";
            fs::copy_file(cpath, p, fs::copy_options::overwrite_existing);
            corrupt_byte(p, 8 + 24 + 40);  // inside the level-height array
            rejects = rejects && expect_store_error([&] { (void)read_coefficients(p); },
                                                    StoreErr::bad_checksum);
        }
        {
            fs::path p = dir / "truncated.mlozf";
            fs::copy_file(fpath, p, fs::copy_options::overwrite_existing);
            fs::resize_file(p, fs::file_size(p) - 10);
            rejects = rejects && expect_store_error([&] { (void)read_fields(p); },
                                                    StoreErr::bad_length);
        }
        {
            fs::path p = dir / "bad_dim.mlozc";
            fs::copy_file(cpath, p, fs::copy_options::overwrite_existing);
            // Zero out the nlat header field.
            std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
            const char zeros[4] = {0, 0, 0, 0};
            f.seekp(8);
            f.write(zeros, 4);
            f.close();
            rejects = rejects && expect_store_error([&] { (void)read_coefficients(p); },
                                                    StoreErr::bad_dimension);
        }
        {
            fs::path p = dir / "bad_std.mlozc";
            indie::write_coeff_file(toy, p, 0.0);  // x_std[0] = 0: invalid by contract
            rejects = rejects && expect_store_error([&] { (void)read_coefficients(p); },
                                                    StoreErr::bad_value);
        }

        // Independent writer following the documented layout must load bit-equal.
        bool indie_ok = false;
        {
            fs::path p = dir / "indie.mlozc";
            indie::write_coeff_file(toy, p);
            const CoefficientSet iback = read_coefficients(p);
            indie_ok = iback.coeffs == toy.coeffs && iback.x_std == toy.x_std &&
                       iback.cap_values == toy.cap_values &&
                       iback.grid.level_height_m == toy.grid.level_height_m;
        }

        detail = fmt("round-trips %s/%s, byte counts %s/%s, rejections %s, independent writer %s",
                     coeff_roundtrip ? "ok" : "BAD", field_roundtrip ? "ok" : "BAD",
                     coeff_bytes ? "ok" : "BAD", field_bytes ? "ok" : "BAD",
                     rejects ? "ok" : "BAD", indie_ok ? "ok" : "BAD");
        return coeff_roundtrip && field_roundtrip && coeff_bytes && field_bytes && rejects &&
               indie_ok;
    });

    // --- Criterion 13: scheduling invariance ----------------------------------------
    criterion(13, "bit-identical results across thread counts", [&](std::string& detail) {
        const int hw = std::max(1, static_cast<int>(hardware_threads()));
        std::vector<int> threads = {1, 4, hw};

        bool predict_ok = true;
        std::uint64_t want = 0;
        bool first = true;
        for (int t : threads) {
            for (int bc : {1, 16, 48}) {
                InferenceContext ctx;
                ctx.coeffs = &ex.coeffs_a;
                ctx.day_of_year = 17;
                ctx.nthreads = t;
                ctx.block_cols = bc;
                const Field out = predict_field(ex.sample_temp, grid_a, ctx);
                const std::uint64_t d = digest_of(out);
                if (first) {
                    want = d;
                    first = false;
                }
                predict_ok = predict_ok && d == want;
            }
        }

        bool train_ok = true;
        std::uint64_t tdigest = 0;
        bool tfirst = true;
        for (int t : threads) {
            TrainerConfig cfg;
            cfg.nthreads = t;
            const CoefficientSet set = train_all(ex.train_crop_temp, ex.train_crop_ozone, cfg);
            std::uint64_t d = digest_of(set.coeffs);
            d = fnv1a64(set.alpha.data(), set.alpha.size() * sizeof(double), d);
            d = fnv1a64(set.x_mean.data(), set.x_mean.size() * sizeof(double), d);
            d = fnv1a64(set.x_std.data(), set.x_std.size() * sizeof(double), d);
            d = fnv1a64(set.y_mean.data(), set.y_mean.size() * sizeof(double), d);
            d = fnv1a64(set.y_std.data(), set.y_std.size() * sizeof(double), d);
            d = fnv1a64(set.cap_values.data(), set.cap_values.size() * sizeof(double), d);
            if (tfirst) {
                tdigest = d;
                tfirst = false;
            }
            train_ok = train_ok && d == tdigest;
        }
        detail = fmt("inference digests %s over threads {1,4,%d} x blocks {1,16,48}; "
                     "training digests %s over threads {1,4,%d}",
                     predict_ok ? "identical" : "DIFFER", hw,
                     train_ok ? "identical" : "DIFFER", hw);
        return predict_ok && train_ok;
    });

    // --- Criterion 14: throughput floor ----------------------------------------------
    criterion(14, "inference throughput on a 96x144x60 field", [&](std::string& detail) {
        std::vector<double> lats(96), lons(144), levels(60);
        for (int i = 0; i < 96; ++i) lats[i] = -90.0 + 180.0 * (i + 0.5) / 96.0;
        for (int j = 0; j < 144; ++j) lons[j] = 2.5 * j;
        for (int k = 0; k < 60; ++k) levels[k] = 500.0 + 1000.0 * k;
        const GridSpec grid = GridSpec::make(std::move(lats), std::move(lons), std::move(levels));
        const CoefficientSet set = bench::make_synthetic_coefficients(grid, 90014);
        const Field temp = bench::make_synthetic_temperature(grid, 90015);
        const bench::BenchResult r1 = bench::run_inference_bench(set, temp, 3, 1, 16);
        const double per_pass = r1.seconds / r1.iterations;

        // Informational: thread scaling and the coupled-step share.
        const bench::BenchResult r4 = bench::run_inference_bench(set, temp, 3, 4, 16);
        toysim::RunConfig cfg;
        cfg.world = toysim::world_a();
        cfg.world.spinup_days = 1;
        cfg.mode = toysim::Mode::interactive;
        cfg.nyears = 1;
        cfg.seed = 90016;
        cfg.coeffs = &ex.coeffs_a;
        const auto sim_start = std::chrono::steady_clock::now();
        const toysim::RunResult run = toysim::run_experiment(cfg);
        const double sim_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - sim_start).count();
        const bench::BenchResult rw =
            bench::run_inference_bench(ex.coeffs_a, ex.sample_temp, run.ozone.ntime - 1, 1, 16);
        detail = fmt("%.3f s per 96x144x60 pass single-threaded (< 1 s); 4-thread speedup "
                     "%.2fx, digests %s; ozone share of coupled step %.1f%%",
                     per_pass, r4.seconds > 0 ? r1.seconds / r4.seconds : 1.0,
                     r1.output_digest == r4.output_digest ? "equal" : "DIFFER",
                     100.0 * rw.seconds / std::max(sim_seconds, 1e-9));
        return per_pass < 1.0;
    });

    std::printf("acceptance: %d/14 criteria passed\n", 14 - g_failures);
    return g_failures;
}
