#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mloz/error.hpp"
#include "mloz/toysim.hpp"
#include "mloz/trainer.hpp"

namespace mloz {

inline constexpr const char* kVersion = "1.0.0";

// JSON plumbing for the CLI: config documents whose keys mirror the
// WorldConfig / TrainerConfig field names, plus the run manifest every
// command writes next to its outputs. Unknown keys are rejected with their
// path so typos fail loudly instead of silently using defaults.

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::config, "cannot open config file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::config, "invalid JSON in " + path.string() + ": " + e.what());
    }
}

namespace jsondetail {

inline void check_keys(const nlohmann::json& j, const char* where,
                       std::initializer_list<const char*> allowed) {
    require(j.is_object(), Errc::config, std::string(where) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            std::string names;
            for (const char* a : allowed) {
                names += names.empty() ? a : std::string(", ") + a;
            }
            fail(Errc::config,
                 std::string(where) + "." + key + ": unknown key (expected one of " + names + ")");
        }
    }
}

template <typename T>
T get_as(const nlohmann::json& j, const char* where, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(Errc::config, std::string(where) + "." + key + ": wrong type");
    }
}

}  // namespace jsondetail

// World section: a preset name plus optional scalar overrides.
inline toysim::WorldConfig world_from_json(const nlohmann::json& j, const char* where = "world") {
    jsondetail::check_keys(j, where,
                           {"name", "offset_low_K", "offset_high_K", "ar1", "noise_std_K",
                            "qbo_period_days", "feedback_peak_K_per_vmr", "spinup_days"});
    require(j.contains("name"), Errc::config, std::string(where) + ".name is required");
    toysim::WorldConfig w = toysim::world_by_name(jsondetail::get_as<std::string>(j, where, "name", "a"));
    w.offset_low_K = jsondetail::get_as(j, where, "offset_low_K", w.offset_low_K);
    w.offset_high_K = jsondetail::get_as(j, where, "offset_high_K", w.offset_high_K);
    w.ar1 = jsondetail::get_as(j, where, "ar1", w.ar1);
    w.noise_std_K = jsondetail::get_as(j, where, "noise_std_K", w.noise_std_K);
    w.qbo_period_days = jsondetail::get_as(j, where, "qbo_period_days", w.qbo_period_days);
    w.feedback_peak_K_per_vmr =
        jsondetail::get_as(j, where, "feedback_peak_K_per_vmr", w.feedback_peak_K_per_vmr);
    w.spinup_days = jsondetail::get_as(j, where, "spinup_days", w.spinup_days);
    return w;
}

inline ClimKind clim_kind_by_name(const std::string& name) {
    if (name == "annual") return ClimKind::annual;
    if (name == "day-of-year") return ClimKind::day_of_year;
    fail(Errc::config, "unknown climatology kind: " + name + " (expected annual or day-of-year)");
}

inline std::string clim_kind_name(ClimKind k) {
    return k == ClimKind::annual ? "annual" : "day-of-year";
}

inline TrainerConfig trainer_from_json(const nlohmann::json& j, const char* where = "trainer") {
    jsondetail::check_keys(j, where, {"alpha_grid", "nfolds", "clim_kind", "nthreads", "source_tag"});
    TrainerConfig cfg;
    if (j.contains("alpha_grid")) {
        cfg.alpha_grid = jsondetail::get_as(j, where, "alpha_grid", cfg.alpha_grid);
    }
    cfg.nfolds = jsondetail::get_as(j, where, "nfolds", cfg.nfolds);
    if (j.contains("clim_kind")) {
        cfg.clim_kind =
            clim_kind_by_name(jsondetail::get_as<std::string>(j, where, "clim_kind", ""));
    }
    cfg.nthreads = jsondetail::get_as(j, where, "nthreads", cfg.nthreads);
    cfg.source_tag = jsondetail::get_as(j, where, "source_tag", cfg.source_tag);
    return cfg;
}

inline nlohmann::json training_meta_to_json(const TrainingMeta& m) {
    return nlohmann::json{{"alpha_grid", m.alpha_grid},
                          {"nfolds", m.nfolds},
                          {"nsamples", m.nsamples},
                          {"source_tag", m.source_tag},
                          {"solver_fallbacks", m.solver_fallbacks}};
}

// Every command records what it did: inputs, outputs, parameters, phase
// timings. Same inputs + seed reproduce the same outputs.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    nlohmann::json parameters = nlohmann::json::object();
    std::map<std::string, double> timings_s;
};

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::json j{{"command", m.command},       {"config_path", m.config_path},
                     {"inputs", m.inputs},         {"outputs", m.outputs},
                     {"parameters", m.parameters}, {"timings_s", m.timings_s},
                     {"version", kVersion}};
    std::ofstream out(path);
    if (!out) fail(Errc::io, "cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    out.flush();
    if (!out) fail(Errc::io, "write failed: " + path.string());
}

}  // namespace mloz
