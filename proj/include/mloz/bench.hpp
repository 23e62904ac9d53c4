#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

#include "mloz/core.hpp"
#include "mloz/digest.hpp"
#include "mloz/engine.hpp"
#include "mloz/rng.hpp"
#include "mloz/trainer.hpp"

namespace mloz::bench {

// Deterministic synthetic inputs so throughput and reproducibility can be
// measured without a training pass. Values are arbitrary but valid: positive
// scales, finite coefficients, temperatures near a plausible atmosphere.

inline CoefficientSet make_synthetic_coefficients(const GridSpec& grid, std::uint64_t seed) {
    CoefficientSet set;
    set.grid = grid;
    set.nlev_out = grid.cap_level_index;
    set.nfeat = grid.cap_level_index;
    set.cap_kind = ClimKind::annual;
    const std::size_t ncols = grid.npoints() / grid.nlev();
    const std::size_t nout = static_cast<std::size_t>(set.nlev_out);
    const std::size_t nfeat = static_cast<std::size_t>(set.nfeat);
    set.coeffs.resize(ncols * nout * nfeat);
    set.alpha.assign(ncols * nout, 1.0);
    set.x_mean.resize(ncols * nfeat);
    set.x_std.resize(ncols * nfeat);
    set.y_mean.resize(ncols * nout);
    set.y_std.resize(ncols * nout);
    set.cap_values.resize(ncols * (grid.nlev() - set.nlev_out));
    Rng rng(seed, "synthetic-coefficients");
    for (double& v : set.coeffs) v = 0.02 * rng.normal();
    for (double& v : set.x_mean) v = 230.0 + 20.0 * rng.normal();
    for (double& v : set.x_std) v = 2.0 + rng.uniform();
    for (double& v : set.y_mean) v = 5.0e-6 * (0.5 + 0.5 * rng.uniform());
    for (double& v : set.y_std) v = 2.0e-7 * (0.5 + 0.5 * rng.uniform());
    for (double& v : set.cap_values) v = 1.0e-6 * rng.uniform();
    set.meta.nsamples = 0;
    set.meta.nfolds = 0;
    set.meta.source_tag = "synthetic";
    set.validate();
    return set;
}

inline Field make_synthetic_temperature(const GridSpec& grid, std::uint64_t seed) {
    Field f = make_field(grid);
    Rng rng(seed, "synthetic-temperature");
    for (int i = 0; i < grid.nlat(); ++i) {
        for (int j = 0; j < grid.nlon(); ++j) {
            double* col = f.data() + field_index(grid, i, j, 0);
            for (int k = 0; k < grid.nlev(); ++k) {
                col[k] = 240.0 + 30.0 * std::cos(grid.level_height_m[k] / 15000.0) +
                         3.0 * rng.normal();
            }
        }
    }
    return f;
}

struct BenchResult {
    int iterations = 0;
    double seconds = 0.0;
    double columns_per_second = 0.0;
    double points_per_second = 0.0;
    std::uint64_t output_digest = 0;  // FNV over the last pass, for determinism checks
};

inline BenchResult run_inference_bench(const CoefficientSet& set, const Field& temperature,
                                       int iterations, int nthreads, int block_cols) {
    require(iterations >= 1, Errc::config, "benchmark needs at least one iteration");
    InferenceContext ctx;
    ctx.coeffs = &set;
    ctx.day_of_year = 0;
    ctx.nthreads = nthreads;
    ctx.block_cols = block_cols;
    Field out = predict_field(temperature, set.grid, ctx);  // warm-up, also the digest source
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < iterations; ++i) {
        out = predict_field(temperature, set.grid, ctx);
    }
    const auto stop = std::chrono::steady_clock::now();
    BenchResult r;
    r.iterations = iterations;
    r.seconds = std::chrono::duration<double>(stop - start).count();
    const double ncols = static_cast<double>(set.grid.npoints() / set.grid.nlev());
    const double safe = r.seconds > 0.0 ? r.seconds : 1e-9;
    r.columns_per_second = ncols * iterations / safe;
    r.points_per_second = static_cast<double>(set.grid.npoints()) * iterations / safe;
    r.output_digest = fnv1a64(out.data(), out.size() * sizeof(double));
    return r;
}

}  // namespace mloz::bench
