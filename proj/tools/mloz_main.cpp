// mloz command-line tool: generate truth data, train coefficients, run
// coupled experiments, evaluate archives, and benchmark inference.
//
// Option precedence: command-line flags override config-file values, which
// override built-in defaults. Every command writes a JSON manifest listing
// its inputs, outputs, parameters, and phase timings.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mloz/mloz.hpp"

namespace {

using mloz::Errc;
using mloz::fail;
using mloz::require;
using nlohmann::json;

class PhaseTimer {
public:
    explicit PhaseTimer(std::map<std::string, double>& sink) : sink_(sink) {}
    template <typename Fn>
    auto time(const std::string& phase, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            sink_[phase] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count();
        } else {
            auto result = fn();
            sink_[phase] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count();
            return result;
        }
    }

private:
    std::map<std::string, double>& sink_;
};

std::filesystem::path manifest_path_for(const std::string& explicit_path,
                                        const std::string& primary_output) {
    if (!explicit_path.empty()) return explicit_path;
    return primary_output + ".manifest.json";
}

// Simulation options shared by `generate` and `simulate`. Values left unset
// on the command line fall back to the config file, then to defaults.
struct SimArgs {
    std::string config_path;
    std::string world;
    std::string mode;
    std::optional<int> years;
    std::optional<std::uint64_t> seed;
    std::optional<double> co2;
    std::optional<int> threads;
    std::optional<int> spinup_days;
    std::optional<int> block_cols;
};

void add_sim_options(CLI::App* cmd, SimArgs& a, bool with_mode,
                     const std::string& mode_choices) {
    cmd->add_option("--config", a.config_path, "JSON config file");
    cmd->add_option("--world", a.world, "world preset: a or b");
    if (with_mode) {
        cmd->add_option("--mode", a.mode, "simulation mode: " + mode_choices);
    }
    cmd->add_option("--years", a.years, "years to keep after spin-up");
    cmd->add_option("--seed", a.seed, "master seed for all noise substreams");
    cmd->add_option("--co2", a.co2, "CO2 multiplier relative to control");
    cmd->add_option("--threads", a.threads, "worker threads");
    cmd->add_option("--spinup-days", a.spinup_days, "days dropped before diagnostics");
    cmd->add_option("--block-cols", a.block_cols, "columns per work block");
}

struct ResolvedSim {
    mloz::toysim::RunConfig run;
    json parameters;  // the effective values, for the manifest
};

ResolvedSim resolve_sim(const SimArgs& a, const std::string& default_mode,
                        const std::vector<std::string>& allowed_modes) {
    json cfg = json::object();
    if (!a.config_path.empty()) {
        cfg = mloz::load_json_file(a.config_path);
        mloz::jsondetail::check_keys(cfg, "config",
                                     {"world", "mode", "years", "seed", "co2_multiplier",
                                      "threads", "block_cols", "trainer"});
    }

    json world_json = cfg.contains("world") ? cfg["world"] : json{{"name", "a"}};
    if (!a.world.empty()) world_json["name"] = a.world;
    mloz::toysim::RunConfig run;
    run.world = mloz::world_from_json(world_json);

    std::string mode = default_mode;
    if (cfg.contains("mode")) mode = mloz::jsondetail::get_as<std::string>(cfg, "config", "mode", mode);
    if (!a.mode.empty()) mode = a.mode;
    bool mode_ok = false;
    for (const std::string& m : allowed_modes) mode_ok = mode_ok || m == mode;
    if (!mode_ok) {
        std::string names;
        for (const std::string& m : allowed_modes) names += names.empty() ? m : ", " + m;
        fail(Errc::config, "mode " + mode + " is not valid here (expected one of " + names + ")");
    }
    run.mode = mloz::toysim::mode_by_name(mode);

    run.nyears = a.years.value_or(mloz::jsondetail::get_as(cfg, "config", "years", 1));
    run.seed = a.seed.value_or(
        mloz::jsondetail::get_as<std::uint64_t>(cfg, "config", "seed", 1));
    run.co2_multiplier =
        a.co2.value_or(mloz::jsondetail::get_as(cfg, "config", "co2_multiplier", 1.0));
    run.nthreads = a.threads.value_or(mloz::jsondetail::get_as(cfg, "config", "threads", 1));
    run.block_cols = a.block_cols.value_or(mloz::jsondetail::get_as(cfg, "config", "block_cols", 16));
    if (a.spinup_days) run.world.spinup_days = *a.spinup_days;

    ResolvedSim r;
    r.run = std::move(run);
    r.parameters = json{{"world", r.run.world.name},
                        {"mode", mode},
                        {"years", r.run.nyears},
                        {"seed", r.run.seed},
                        {"co2_multiplier", r.run.co2_multiplier},
                        {"threads", r.run.nthreads},
                        {"block_cols", r.run.block_cols},
                        {"spinup_days", r.run.world.spinup_days},
                        {"offset_low_K", r.run.world.offset_low_K},
                        {"offset_high_K", r.run.world.offset_high_K},
                        {"ar1", r.run.world.ar1},
                        {"noise_std_K", r.run.world.noise_std_K},
                        {"qbo_period_days", r.run.world.qbo_period_days},
                        {"feedback_peak_K_per_vmr", r.run.world.feedback_peak_K_per_vmr}};
    return r;
}

int cmd_generate(const SimArgs& args, const std::string& out_temp, const std::string& out_ozone,
                 const std::string& manifest_arg) {
    ResolvedSim sim = resolve_sim(args, "truth", {"truth", "fixed"});
    mloz::RunManifest manifest;
    manifest.command = "generate";
    manifest.config_path = args.config_path;
    manifest.parameters = sim.parameters;
    PhaseTimer timer(manifest.timings_s);

    mloz::toysim::RunResult result =
        timer.time("simulate", [&] { return mloz::toysim::run_experiment(sim.run); });
    timer.time("write", [&] {
        mloz::write_fields(result.temperature, out_temp);
        mloz::write_fields(result.ozone, out_ozone);
    });
    manifest.outputs = {out_temp, out_ozone};
    mloz::write_manifest(manifest, manifest_path_for(manifest_arg, out_ozone));
    std::cout << "generate: " << result.ozone.ntime << " days on world "
              << sim.run.world.name << " -> " << out_temp << ", " << out_ozone << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& temp_path,
              const std::string& ozone_path, const std::string& out_path,
              const std::vector<double>& alphas, std::optional<int> folds,
              const std::string& clim, std::optional<int> threads, const std::string& source_tag,
              const std::string& manifest_arg) {
    json cfg = json::object();
    if (!config_path.empty()) {
        cfg = mloz::load_json_file(config_path);
        mloz::jsondetail::check_keys(cfg, "config",
                                     {"world", "mode", "years", "seed", "co2_multiplier",
                                      "threads", "block_cols", "trainer"});
    }
    mloz::TrainerConfig tcfg;
    if (cfg.contains("trainer")) tcfg = mloz::trainer_from_json(cfg["trainer"]);
    if (!alphas.empty()) tcfg.alpha_grid = alphas;
    if (folds) tcfg.nfolds = *folds;
    if (!clim.empty()) tcfg.clim_kind = mloz::clim_kind_by_name(clim);
    if (threads) tcfg.nthreads = *threads;
    if (!source_tag.empty()) tcfg.source_tag = source_tag;

    mloz::RunManifest manifest;
    manifest.command = "train";
    manifest.config_path = config_path;
    manifest.inputs = {temp_path, ozone_path};
    PhaseTimer timer(manifest.timings_s);

    mloz::FieldSeries temperature =
        timer.time("load", [&] { return mloz::read_fields(temp_path); });
    mloz::FieldSeries ozone = timer.time("load", [&] { return mloz::read_fields(ozone_path); });
    require(temperature.var == mloz::VarKind::temperature_K, Errc::data,
            temp_path + " does not hold temperature");
    require(ozone.var == mloz::VarKind::ozone_vmr, Errc::data,
            ozone_path + " does not hold ozone");

    mloz::CoefficientSet set =
        timer.time("train", [&] { return mloz::train_all(temperature, ozone, tcfg); });
    timer.time("write", [&] { mloz::write_coefficients(set, out_path); });

    manifest.outputs = {out_path};
    manifest.parameters = json{{"nfolds", tcfg.nfolds},
                               {"clim_kind", mloz::clim_kind_name(tcfg.clim_kind)},
                               {"threads", tcfg.nthreads},
                               {"training_meta", mloz::training_meta_to_json(set.meta)}};
    mloz::write_manifest(manifest, manifest_path_for(manifest_arg, out_path));
    std::cout << "train: " << set.ncols() << " columns x " << set.nlev_out
              << " levels from " << set.meta.nsamples << " samples -> " << out_path << "\n";
    return 0;
}

int cmd_simulate(const SimArgs& args, const std::string& coeffs_path,
                 const std::string& recal_temp_path, const std::string& source_ozone_path,
                 bool no_recal, const std::string& out_temp, const std::string& out_ozone,
                 const std::string& manifest_arg) {
    ResolvedSim sim = resolve_sim(args, "mloz", {"truth", "mloz", "fixed", "transferred"});
    mloz::RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_path = args.config_path;
    manifest.parameters = sim.parameters;
    manifest.parameters["no_recal"] = no_recal;
    PhaseTimer timer(manifest.timings_s);

    mloz::CoefficientSet coeffs;
    mloz::VerticalMap vmap;
    mloz::RecalibrationParams recal;
    mloz::Climatology fill_clim;
    const bool needs_coeffs = sim.run.mode == mloz::toysim::Mode::interactive ||
                              sim.run.mode == mloz::toysim::Mode::transferred;
    if (needs_coeffs) {
        require(!coeffs_path.empty(), Errc::config, "this mode needs --coeffs");
        manifest.inputs.push_back(coeffs_path);
        coeffs = timer.time("load", [&] { return mloz::read_coefficients(coeffs_path); });
        sim.run.coeffs = &coeffs;
    }
    if (sim.run.mode == mloz::toysim::Mode::transferred) {
        require(!source_ozone_path.empty(), Errc::config,
                "transferred mode needs --source-ozone (the source-world training ozone archive)");
        manifest.inputs.push_back(source_ozone_path);
        vmap = mloz::build_vertical_map(coeffs.grid, sim.run.world.grid);
        mloz::FieldSeries source_ozone =
            timer.time("load", [&] { return mloz::read_fields(source_ozone_path); });
        require(source_ozone.var == mloz::VarKind::ozone_vmr, Errc::data,
                source_ozone_path + " does not hold ozone");
        const mloz::Climatology source_clim =
            mloz::compute_climatology(source_ozone, coeffs.cap_kind);
        fill_clim = mloz::make_fill_climatology(source_clim, sim.run.world.grid);
        if (no_recal) {
            recal = mloz::identity_recalibration(coeffs);
        } else {
            require(!recal_temp_path.empty(), Errc::config,
                    "transferred mode needs --recal-temp (a target-world temperature archive), "
                    "or --no-recal to keep the source statistics");
            manifest.inputs.push_back(recal_temp_path);
            mloz::FieldSeries recal_temp =
                timer.time("load", [&] { return mloz::read_fields(recal_temp_path); });
            require(recal_temp.var == mloz::VarKind::temperature_K, Errc::data,
                    recal_temp_path + " does not hold temperature");
            require(recal_temp.grid.same_geometry(sim.run.world.grid), Errc::config,
                    "recalibration archive grid does not match the simulation world");
            timer.time("recalibrate", [&] {
                const mloz::FieldSeries on_src =
                    mloz::map_series_to_source_levels(recal_temp, coeffs.grid, vmap);
                recal = mloz::recalibrate_scaling(on_src);
            });
        }
        sim.run.vmap = &vmap;
        sim.run.recal = &recal;
        sim.run.fill_clim = &fill_clim;
    }

    mloz::toysim::RunResult result =
        timer.time("simulate", [&] { return mloz::toysim::run_experiment(sim.run); });
    timer.time("write", [&] {
        mloz::write_fields(result.temperature, out_temp);
        mloz::write_fields(result.ozone, out_ozone);
    });
    manifest.outputs = {out_temp, out_ozone};
    mloz::write_manifest(manifest, manifest_path_for(manifest_arg, out_ozone));
    std::cout << "simulate: mode " << mloz::toysim::mode_name(sim.run.mode) << ", "
              << result.ozone.ntime << " days on world " << sim.run.world.name << " -> "
              << out_temp << ", " << out_ozone << "\n";
    return 0;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"bias",   "r2",       "drift",    "response",
                                                   "kde",    "column",   "seasonal", "spectrum"};
    return names;
}

int cmd_evaluate(const std::string& metric, const std::string& test_path,
                 const std::string& reference_path, const std::string& band_name,
                 const std::string& out_path, const std::string& plot_csv,
                 double min_period, double max_period, const std::string& manifest_arg) {
    bool known = false;
    for (const std::string& m : metric_names()) known = known || m == metric;
    if (!known) {
        std::string names;
        for (const std::string& m : metric_names()) names += names.empty() ? m : ", " + m;
        fail(Errc::usage, (metric.empty() ? std::string("missing --metric")
                                          : "unknown metric: " + metric) +
                              " (valid metrics: " + names + ")");
    }
    require(!test_path.empty(), Errc::usage, "evaluate needs --test");
    const bool needs_reference = metric == "bias" || metric == "r2" || metric == "response";
    require(!needs_reference || !reference_path.empty(), Errc::usage,
            "metric " + metric + " needs --reference");

    mloz::RunManifest manifest;
    manifest.command = "evaluate";
    manifest.inputs = {test_path};
    PhaseTimer timer(manifest.timings_s);

    const mloz::FieldSeries test = timer.time("load", [&] { return mloz::read_fields(test_path); });
    std::optional<mloz::FieldSeries> reference;
    if (!reference_path.empty()) {
        manifest.inputs.push_back(reference_path);
        reference = timer.time("load", [&] { return mloz::read_fields(reference_path); });
    }
    const mloz::eval::Band band = mloz::eval::band_by_name(band_name);

    json report{{"metric", metric}, {"band", band.name}, {"test", test_path}};
    std::vector<mloz::eval::PlotColumn> plot;

    timer.time("evaluate", [&] {
        if (metric == "bias") {
            const double test_mean = mloz::eval::band_time_mean(test, band);
            const double ref_mean = mloz::eval::band_time_mean(*reference, band);
            report["test_mean"] = test_mean;
            report["reference_mean"] = ref_mean;
            report["percent_bias"] = mloz::eval::percent_bias(test_mean, ref_mean);
        } else if (metric == "r2") {
            const mloz::Field r2 = mloz::eval::r2_field(test, *reference);
            const std::vector<double> w = mloz::eval::band_weights(test.grid, band);
            double mn = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < r2.size(); ++p) {
                if (w[p] > 0.0) mn = std::min(mn, r2[p]);
            }
            report["band_mean_r2"] = mloz::eval::weighted_mean(r2, w);
            report["band_min_r2"] = mn;
            mloz::eval::PlotColumn lat{"lat_deg", {}}, z{"z_m", {}}, val{"r2", {}};
            for (int i = 0; i < test.grid.nlat(); ++i) {
                for (int j = 0; j < test.grid.nlon(); ++j) {
                    for (int k = 0; k < test.grid.nlev(); ++k) {
                        const std::size_t p = mloz::field_index(test.grid, i, j, k);
                        if (w[p] <= 0.0) continue;
                        lat.values.push_back(test.grid.lat_deg[i]);
                        z.values.push_back(test.grid.level_height_m[k]);
                        val.values.push_back(r2[p]);
                    }
                }
            }
            plot = {lat, z, val};
        } else if (metric == "drift") {
            const double drift = mloz::eval::drift_percent_per_decade(test, band);
            report["drift_percent_per_decade"] = drift;
            report["pass"] = std::abs(drift) < 1.0;
        } else if (metric == "response") {
            const double test_mean = mloz::eval::band_time_mean(test, band);
            const double ref_mean = mloz::eval::band_time_mean(*reference, band);
            report["experiment_mean"] = test_mean;
            report["control_mean"] = ref_mean;
            report["response"] = test_mean - ref_mean;
            report["response_percent"] = mloz::eval::percent_bias(test_mean, ref_mean);
        } else if (metric == "kde") {
            const std::vector<double> daily = mloz::eval::band_daily_series(test, band);
            const double ref_mean =
                reference ? mloz::eval::band_time_mean(*reference, band) : mloz::eval::mean_of(daily);
            const mloz::eval::KdeResult kde = mloz::eval::kde_pdf(daily, ref_mean);
            report["bandwidth"] = kde.bandwidth;
            report["integral"] = mloz::eval::trapezoid_integral(kde.x, kde.density);
            plot = {{"value", kde.x}, {"density", kde.density}};
        } else if (metric == "column") {
            std::vector<double> sums(static_cast<std::size_t>(test.ntime - test.spinup_days), 0.0);
            double wsum = 0.0;
            for (int i = 0; i < test.grid.nlat(); ++i) {
                const double cw =
                    std::cos(test.grid.lat_deg[i] * std::numbers::pi / 180.0);
                for (int j = 0; j < test.grid.nlon(); ++j) {
                    wsum += cw;
                    const std::vector<double> du = mloz::eval::column_ozone_series_du(test, i, j);
                    for (std::size_t t = 0; t < du.size(); ++t) sums[t] += cw * du[t];
                }
            }
            std::vector<double> day(sums.size());
            for (std::size_t t = 0; t < sums.size(); ++t) {
                sums[t] /= wsum;
                day[t] = static_cast<double>(test.spinup_days + static_cast<int>(t));
            }
            report["mean_column_du"] = mloz::eval::mean_of(sums);
            plot = {{"day", day}, {"column_du", sums}};
        } else if (metric == "seasonal") {
            const std::vector<double> cycle = mloz::eval::seasonal_cycle(test, band);
            std::vector<double> day(cycle.size());
            for (std::size_t d = 0; d < cycle.size(); ++d) day[d] = static_cast<double>(d);
            const auto [mn, mx] = std::minmax_element(cycle.begin(), cycle.end());
            report["amplitude"] = *mx - *mn;
            report["mean"] = mloz::eval::mean_of(cycle);
            plot = {{"day_of_year", day}, {"band_mean", cycle}};
        } else if (metric == "spectrum") {
            const std::vector<double> daily = mloz::eval::band_daily_series(test, band);
            const double period = mloz::eval::dominant_period_days(daily, min_period, max_period);
            report["dominant_period_days"] = period;
            report["amplitude"] = mloz::eval::periodic_amplitude(daily, period);
        }
    });

    if (!plot_csv.empty() && !plot.empty()) {
        mloz::eval::export_csv(plot_csv, plot);
        manifest.outputs.push_back(plot_csv);
        report["plot_csv"] = plot_csv;
    }
    {
        std::ofstream out(out_path);
        if (!out) fail(Errc::io, "cannot open for writing: " + out_path);
        out << report.dump(2) << "\n";
        out.flush();
        if (!out) fail(Errc::io, "write failed: " + out_path);
    }
    manifest.outputs.push_back(out_path);
    manifest.parameters = report;
    mloz::write_manifest(manifest, manifest_path_for(manifest_arg, out_path));
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_bench(const std::string& coeffs_path, const std::string& grid_name, int iterations,
              int max_threads, int days, const std::string& out_path,
              const std::string& manifest_arg) {
    require(iterations >= 1, Errc::config, "--iterations must be at least 1");
    require(max_threads >= 1, Errc::config, "--threads must be at least 1");
    require(days >= 1, Errc::config, "--days must be at least 1");

    mloz::RunManifest manifest;
    manifest.command = "bench";
    PhaseTimer timer(manifest.timings_s);

    // Coefficients: load a trained set, or synthesize one on the named grid.
    mloz::CoefficientSet set;
    if (!coeffs_path.empty()) {
        manifest.inputs.push_back(coeffs_path);
        set = timer.time("load", [&] { return mloz::read_coefficients(coeffs_path); });
    } else {
        mloz::GridSpec grid;
        if (grid_name == "a") {
            grid = mloz::toysim::reference_grid();
        } else if (grid_name == "b") {
            grid = mloz::toysim::target_grid();
        } else {
            int ni = 0, nj = 0, nk = 0;
            if (std::sscanf(grid_name.c_str(), "%dx%dx%d", &ni, &nj, &nk) != 3 || ni < 1 ||
                nj < 1 || nk < 2) {
                fail(Errc::config,
                     "--grid must be a, b, or NLATxNLONxNLEV (e.g. 96x144x60), got " + grid_name);
            }
            std::vector<double> lats(ni), lons(nj), levels(nk);
            for (int i = 0; i < ni; ++i) lats[i] = -90.0 + 180.0 * (i + 0.5) / ni;
            for (int j = 0; j < nj; ++j) lons[j] = 360.0 * j / nj;
            for (int k = 0; k < nk; ++k) levels[k] = 500.0 + 1000.0 * k;
            grid = mloz::GridSpec::make(std::move(lats), std::move(lons), std::move(levels));
        }
        set = mloz::bench::make_synthetic_coefficients(grid, 42);
    }
    const mloz::Field temp = mloz::bench::make_synthetic_temperature(set.grid, 43);

    json curve = json::array();
    std::uint64_t digest1 = 0;
    bool bit_identical = true;
    double seconds1 = 0.0;
    std::vector<int> thread_counts{1};
    for (int t = 2; t < max_threads; t *= 2) thread_counts.push_back(t);
    if (max_threads > 1) thread_counts.push_back(max_threads);
    for (int t : thread_counts) {
        const mloz::bench::BenchResult r = timer.time("bench", [&] {
            return mloz::bench::run_inference_bench(set, temp, iterations, t, 16);
        });
        if (t == 1) {
            digest1 = r.output_digest;
            seconds1 = r.seconds;
        }
        bit_identical = bit_identical && r.output_digest == digest1;
        curve.push_back(json{{"threads", t},
                             {"seconds", r.seconds},
                             {"columns_per_second", r.columns_per_second},
                             {"points_per_second", r.points_per_second},
                             {"speedup", r.seconds > 0.0 ? seconds1 / r.seconds : 1.0}});
    }

    // Share of a coupled step spent in ozone prediction: time a short
    // interactive run on the reference world and the same number of
    // prediction calls alone.
    json share = json::object();
    {
        mloz::toysim::RunConfig run;
        run.world = mloz::toysim::world_a();
        run.world.spinup_days = 1;
        run.mode = mloz::toysim::Mode::interactive;
        run.nyears = std::max(1, days / mloz::kDaysPerYear + (days % mloz::kDaysPerYear ? 1 : 0));
        run.seed = 7;
        mloz::CoefficientSet world_set =
            mloz::bench::make_synthetic_coefficients(run.world.grid, 42);
        run.coeffs = &world_set;
        const int ndays = run.world.spinup_days + run.nyears * mloz::kDaysPerYear;
        const auto sim_start = std::chrono::steady_clock::now();
        mloz::toysim::RunResult result = mloz::toysim::run_experiment(run);
        const double sim_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - sim_start).count();
        const mloz::Field world_temp = mloz::bench::make_synthetic_temperature(run.world.grid, 43);
        const mloz::bench::BenchResult pr =
            mloz::bench::run_inference_bench(world_set, world_temp, ndays - 1, 1, 16);
        share = json{{"world", "a"},
                     {"days", ndays},
                     {"coupled_seconds", sim_seconds},
                     {"prediction_seconds", pr.seconds},
                     {"prediction_share",
                      sim_seconds > 0.0 ? pr.seconds / sim_seconds : 0.0}};
        (void)result;
    }

    json report{{"grid",
                 json{{"nlat", set.grid.nlat()},
                      {"nlon", set.grid.nlon()},
                      {"nlev", set.grid.nlev()},
                      {"nlev_out", set.nlev_out}}},
                {"iterations", iterations},
                {"thread_curve", curve},
                {"bit_identical_across_threads", bit_identical},
                {"coupled_step_share", share}};
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) fail(Errc::io, "cannot open for writing: " + out_path);
        out << report.dump(2) << "\n";
        manifest.outputs.push_back(out_path);
    }
    manifest.parameters = report;
    mloz::write_manifest(manifest, manifest_path_for(
                                       manifest_arg, out_path.empty() ? "bench" : out_path));
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mloz: machine-learned ozone parameterization toolkit"};
    app.require_subcommand(1);

    // generate
    SimArgs gen_args;
    std::string gen_out_temp, gen_out_ozone, gen_manifest;
    CLI::App* gen = app.add_subcommand("generate", "run the truth world and archive its fields");
    add_sim_options(gen, gen_args, true, "truth or fixed");
    gen->add_option("--out-temp", gen_out_temp, "temperature archive path")->required();
    gen->add_option("--out-ozone", gen_out_ozone, "ozone archive path")->required();
    gen->add_option("--manifest", gen_manifest, "manifest path (default <out-ozone>.manifest.json)");

    // train
    std::string tr_config, tr_temp, tr_ozone, tr_out, tr_clim, tr_tag, tr_manifest;
    std::vector<double> tr_alphas;
    std::optional<int> tr_folds, tr_threads;
    CLI::App* tr = app.add_subcommand("train", "fit ridge coefficients from archives");
    tr->add_option("--config", tr_config, "JSON config file");
    tr->add_option("--temp", tr_temp, "temperature archive")->required();
    tr->add_option("--ozone", tr_ozone, "ozone archive")->required();
    tr->add_option("--out", tr_out, "coefficient file to write")->required();
    tr->add_option("--alphas", tr_alphas, "ridge penalty grid")->delimiter(',');
    tr->add_option("--folds", tr_folds, "cross-validation folds");
    tr->add_option("--clim", tr_clim, "cap climatology kind: annual or day-of-year");
    tr->add_option("--threads", tr_threads, "worker threads");
    tr->add_option("--source-tag", tr_tag, "provenance tag stored in the manifest");
    tr->add_option("--manifest", tr_manifest, "manifest path (default <out>.manifest.json)");

    // simulate
    SimArgs sim_args;
    std::string sim_coeffs, sim_recal, sim_source_ozone, sim_out_temp, sim_out_ozone, sim_manifest;
    bool sim_no_recal = false;
    CLI::App* sim = app.add_subcommand("simulate", "run the coupled world with modeled ozone");
    add_sim_options(sim, sim_args, true, "truth, mloz, fixed, or transferred");
    sim->add_option("--coeffs", sim_coeffs, "trained coefficient file");
    sim->add_option("--recal-temp", sim_recal,
                    "target-world temperature archive for recalibration (transferred mode)");
    sim->add_option("--source-ozone", sim_source_ozone,
                    "source-world ozone archive for the fill climatology (transferred mode)");
    sim->add_flag("--no-recal", sim_no_recal, "keep source input statistics (transferred mode)");
    sim->add_option("--out-temp", sim_out_temp, "temperature archive path")->required();
    sim->add_option("--out-ozone", sim_out_ozone, "ozone archive path")->required();
    sim->add_option("--manifest", sim_manifest, "manifest path (default <out-ozone>.manifest.json)");

    // evaluate
    std::string ev_metric, ev_test, ev_reference, ev_band = "stratosphere", ev_out = "report.json";
    std::string ev_plot, ev_manifest;
    double ev_min_period = 100.0, ev_max_period = 2000.0;
    CLI::App* ev = app.add_subcommand("evaluate", "compute diagnostics from archives");
    ev->add_option("--metric", ev_metric,
                   "one of: bias, r2, drift, response, kde, column, seasonal, spectrum");
    ev->add_option("--test", ev_test, "archive under evaluation");
    ev->add_option("--reference", ev_reference, "reference archive (bias, r2, response, kde)");
    ev->add_option("--band", ev_band,
                   "stratosphere, troposphere, upper-stratosphere, or "
                   "tropical-lower-stratosphere");
    ev->add_option("--out", ev_out, "JSON report path");
    ev->add_option("--plot-csv", ev_plot, "plot-ready CSV path");
    ev->add_option("--min-period", ev_min_period, "spectrum scan lower bound, days");
    ev->add_option("--max-period", ev_max_period, "spectrum scan upper bound, days");
    ev->add_option("--manifest", ev_manifest, "manifest path (default <out>.manifest.json)");

    // bench
    std::string be_coeffs, be_grid = "a", be_out, be_manifest;
    int be_iterations = 20, be_threads = 4, be_days = 366;
    CLI::App* be = app.add_subcommand("bench", "measure inference throughput and scaling");
    be->add_option("--coeffs", be_coeffs, "trained coefficient file (else synthetic)");
    be->add_option("--grid", be_grid, "a, b, or NLATxNLONxNLEV for synthetic coefficients");
    be->add_option("--iterations", be_iterations, "prediction passes per thread count");
    be->add_option("--threads", be_threads, "maximum thread count in the scaling curve");
    be->add_option("--days", be_days, "coupled days for the step-share measurement");
    be->add_option("--out", be_out, "JSON report path");
    be->add_option("--manifest", be_manifest, "manifest path");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(gen_args, gen_out_temp, gen_out_ozone, gen_manifest);
        if (tr->parsed()) {
            return cmd_train(tr_config, tr_temp, tr_ozone, tr_out, tr_alphas, tr_folds, tr_clim,
                             tr_threads, tr_tag, tr_manifest);
        }
        if (sim->parsed()) {
            return cmd_simulate(sim_args, sim_coeffs, sim_recal, sim_source_ozone, sim_no_recal,
                                sim_out_temp, sim_out_ozone, sim_manifest);
        }
        if (ev->parsed()) {
            return cmd_evaluate(ev_metric, ev_test, ev_reference, ev_band, ev_out, ev_plot,
                                ev_min_period, ev_max_period, ev_manifest);
        }
        if (be->parsed()) {
            return cmd_bench(be_coeffs, be_grid, be_iterations, be_threads, be_days, be_out,
                             be_manifest);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(mloz::Errc::usage);
    } catch (const mloz::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
