#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mloz/core.hpp"
#include "mloz/error.hpp"
#include "mloz/linalg.hpp"
#include "mloz/parallel.hpp"

namespace mloz {

// Smallest standard deviation accepted during scaling, in native units.
// Constant columns scale by this floor instead of dividing by zero.
inline constexpr double kStdFloor = 1e-12;

// Validation-score ties within this relative window resolve toward the
// stronger regularizer.
inline constexpr double kAlphaTieRel = 1e-12;

inline std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    grid.reserve(13);
    for (int k = 0; k <= 12; ++k) {
        grid.push_back(1e-4 * std::pow(10.0, k));
    }
    return grid;
}

// Column-wise affine normalization. x statistics cover every feature level;
// y statistics describe one target level.
struct ScalingParams {
    std::vector<double> x_mean;
    std::vector<double> x_std;
    double y_mean = 0.0;
    double y_std = 1.0;
};

struct RidgeModel {
    std::vector<double> coeffs;  // standardized space, one weight per feature level
    double alpha = 0.0;
    ScalingParams scaling;
};

struct TrainerConfig {
    std::vector<double> alpha_grid = default_alpha_grid();
    int nfolds = 3;
    ClimKind clim_kind = ClimKind::day_of_year;
    int nthreads = 1;
    std::string source_tag;
};

struct TrainingMeta {
    std::vector<double> alpha_grid;
    int nfolds = 0;
    int nsamples = 0;
    std::string source_tag;
    int solver_fallbacks = 0;
};

// Trained models for a whole grid, stored packed for inference: coefficient
// rows are contiguous per output point, x scaling is stored once per column
// because every output level of a column sees the same inputs.
struct CoefficientSet {
    GridSpec grid;
    int nlev_out = 0;  // predicted levels, 0..nlev_out-1
    int nfeat = 0;     // temperature input levels, 0..nfeat-1
    std::vector<double> coeffs;   // [col][lev_out][feat]
    std::vector<double> alpha;    // [col][lev_out]
    std::vector<double> x_mean;   // [col][feat]
    std::vector<double> x_std;    // [col][feat]
    std::vector<double> y_mean;   // [col][lev_out]
    std::vector<double> y_std;    // [col][lev_out]
    ClimKind cap_kind = ClimKind::day_of_year;
    std::vector<double> cap_values;  // [rows][col][nlev - nlev_out]
    TrainingMeta meta;

    std::size_t ncols() const { return grid.ncols(); }
    int ncap_levels() const { return grid.nlev() - nlev_out; }

    std::size_t coeff_offset(std::size_t col, int lev_out) const {
        return (col * nlev_out + static_cast<std::size_t>(lev_out)) * nfeat;
    }
    std::span<const double> coeff_row(std::size_t col, int lev_out) const {
        return {coeffs.data() + coeff_offset(col, lev_out), static_cast<std::size_t>(nfeat)};
    }
    std::span<const double> x_mean_col(std::size_t col) const {
        return {x_mean.data() + col * nfeat, static_cast<std::size_t>(nfeat)};
    }
    std::span<const double> x_std_col(std::size_t col) const {
        return {x_std.data() + col * nfeat, static_cast<std::size_t>(nfeat)};
    }
    std::span<const double> cap_row(int day, std::size_t col) const {
        int row = cap_kind == ClimKind::annual ? 0 : day % kDaysPerYear;
        std::size_t ncap = static_cast<std::size_t>(ncap_levels());
        return {cap_values.data() + (static_cast<std::size_t>(row) * ncols() + col) * ncap, ncap};
    }

    RidgeModel model_at(int ilat, int ilon, int lev_out) const {
        std::size_t col = static_cast<std::size_t>(ilat) * grid.nlon() + ilon;
        RidgeModel m;
        auto row = coeff_row(col, lev_out);
        m.coeffs.assign(row.begin(), row.end());
        m.alpha = alpha[col * nlev_out + static_cast<std::size_t>(lev_out)];
        auto xm = x_mean_col(col);
        auto xs = x_std_col(col);
        m.scaling.x_mean.assign(xm.begin(), xm.end());
        m.scaling.x_std.assign(xs.begin(), xs.end());
        m.scaling.y_mean = y_mean[col * nlev_out + static_cast<std::size_t>(lev_out)];
        m.scaling.y_std = y_std[col * nlev_out + static_cast<std::size_t>(lev_out)];
        return m;
    }

    void validate() const {
        require(nlev_out >= 1 && nlev_out <= grid.nlev(), Errc::data,
                "coefficient set output levels out of range");
        require(nfeat >= 1 && nfeat <= grid.nlev(), Errc::data,
                "coefficient set feature count out of range");
        const std::size_t nc = ncols();
        require(coeffs.size() == nc * nlev_out * static_cast<std::size_t>(nfeat), Errc::data,
                "coefficient payload size mismatch");
        require(alpha.size() == nc * nlev_out, Errc::data, "alpha payload size mismatch");
        require(x_mean.size() == nc * nfeat && x_std.size() == nc * nfeat, Errc::data,
                "input scaling payload size mismatch");
        require(y_mean.size() == nc * nlev_out && y_std.size() == nc * nlev_out, Errc::data,
                "target scaling payload size mismatch");
        require(cap_values.size() == static_cast<std::size_t>(clim_rows(cap_kind)) * nc *
                                         static_cast<std::size_t>(ncap_levels()),
                Errc::data, "cap climatology payload size mismatch");
        for (double v : coeffs) {
            require(std::isfinite(v), Errc::data, "non-finite coefficient");
        }
        for (double v : alpha) {
            require(std::isfinite(v) && v >= 0.0, Errc::data, "invalid regularization strength");
        }
        for (double v : x_mean) {
            require(std::isfinite(v), Errc::data, "non-finite input mean");
        }
        for (double v : y_mean) {
            require(std::isfinite(v), Errc::data, "non-finite target mean");
        }
        for (double v : x_std) {
            require(std::isfinite(v) && v > 0.0, Errc::data, "input std must be positive");
        }
        for (double v : y_std) {
            require(std::isfinite(v) && v > 0.0, Errc::data, "target std must be positive");
        }
        for (double v : cap_values) {
            require(std::isfinite(v), Errc::data, "non-finite cap climatology value");
        }
    }
};

namespace detail {

// Sample mean and population std (divide by n), floored.
inline void mean_and_std(const double* v, int n, int stride, double& mean, double& sd) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        m += v[static_cast<std::size_t>(i) * stride];
    }
    m /= n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = v[static_cast<std::size_t>(i) * stride] - m;
        acc += d * d;
    }
    mean = m;
    sd = std::max(std::sqrt(acc / n), kStdFloor);
}

// Gram = sum over kept rows of x_i x_i^T; rows [skip_begin, skip_end) are
// excluded. Ascending row order keeps the accumulation deterministic.
inline std::vector<double> accumulate_gram(const double* xs, int n, int p, int skip_begin,
                                           int skip_end) {
    std::vector<double> g(static_cast<std::size_t>(p) * p, 0.0);
    for (int i = 0; i < n; ++i) {
        if (i >= skip_begin && i < skip_end) {
            continue;
        }
        const double* row = xs + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < p; ++j) {
            double xj = row[j];
            double* grow = g.data() + static_cast<std::size_t>(j) * p;
            for (int k = j; k < p; ++k) {
                grow[k] += xj * row[k];
            }
        }
    }
    for (int j = 0; j < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
            g[static_cast<std::size_t>(k) * p + j] = g[static_cast<std::size_t>(j) * p + k];
        }
    }
    return g;
}

inline std::vector<double> accumulate_xty(const double* xs, const double* ys, int n, int p,
                                          int skip_begin, int skip_end) {
    std::vector<double> b(static_cast<std::size_t>(p), 0.0);
    for (int i = 0; i < n; ++i) {
        if (i >= skip_begin && i < skip_end) {
            continue;
        }
        const double* row = xs + static_cast<std::size_t>(i) * p;
        double yi = ys[i];
        for (int j = 0; j < p; ++j) {
            b[static_cast<std::size_t>(j)] += row[j] * yi;
        }
    }
    return b;
}

// (gram + alpha I) c = b by Cholesky; an exactly-singular alpha = 0 system
// falls back to the minimum-norm spectral solution. The fallback is reported,
// not raised: a rank-deficient column is a legitimate training input.
inline std::vector<double> factor_solve(const std::vector<double>& gram, std::vector<double> b,
                                        double alpha, int p, bool* fallback_used) {
    std::vector<double> m = gram;
    for (int j = 0; j < p; ++j) {
        m[static_cast<std::size_t>(j) * p + j] += alpha;
    }
    if (linalg::cholesky(m, p)) {
        linalg::cholesky_solve(m, p, b);
        return b;
    }
    require(alpha == 0.0, Errc::numeric,
            "normal equations not positive definite despite ridge term");
    if (fallback_used != nullptr) {
        *fallback_used = true;
    }
    return linalg::minnorm_sym_solve(gram, p, b);
}

inline void check_alpha_grid(std::span<const double> grid) {
    require(!grid.empty(), Errc::config, "alpha grid is empty");
    for (double a : grid) {
        require(std::isfinite(a) && a >= 0.0, Errc::config,
                "alpha grid entries must be finite and non-negative");
    }
}

// Contiguous time-block folds; the first (n mod k) folds take one extra
// sample. Block folds respect the serial correlation of daily data.
inline std::vector<std::pair<int, int>> make_folds(int n, int k) {
    std::vector<std::pair<int, int>> folds;
    folds.reserve(static_cast<std::size_t>(k));
    int base = n / k;
    int extra = n % k;
    int begin = 0;
    for (int f = 0; f < k; ++f) {
        int len = base + (f < extra ? 1 : 0);
        folds.emplace_back(begin, begin + len);
        begin += len;
    }
    return folds;
}

// Shared per-column state: fold Grams are target-independent, so one solver
// serves every output level of a column.
class ColumnSolver {
public:
    ColumnSolver(const double* xs, int n, int p, int nfolds)
        : xs_(xs), n_(n), p_(p), folds_(make_folds(n, nfolds)) {
        require(nfolds >= 2, Errc::config, "cross-validation needs at least two folds");
        require(n >= 2 * nfolds, Errc::data,
                "cross-validation needs at least two samples per fold");
        fold_grams_.reserve(folds_.size());
        for (auto [b, e] : folds_) {
            fold_grams_.push_back(accumulate_gram(xs_, n_, p_, b, e));
        }
        full_gram_ = accumulate_gram(xs_, n_, p_, 0, 0);
    }

    struct CvResult {
        double best_alpha = 0.0;
        std::vector<double> cv_scores;  // mean validation MSE per grid entry
    };

    CvResult cross_validate(const double* ys, std::span<const double> alpha_grid,
                            bool* fallback_used = nullptr) const {
        check_alpha_grid(alpha_grid);
        const int nfolds = static_cast<int>(folds_.size());
        std::vector<std::vector<double>> fold_b;
        fold_b.reserve(folds_.size());
        for (auto [b, e] : folds_) {
            fold_b.push_back(accumulate_xty(xs_, ys, n_, p_, b, e));
        }
        CvResult result;
        result.cv_scores.assign(alpha_grid.size(), 0.0);
        for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
            double score = 0.0;
            for (int f = 0; f < nfolds; ++f) {
                auto c = factor_solve(fold_grams_[static_cast<std::size_t>(f)],
                                      fold_b[static_cast<std::size_t>(f)], alpha_grid[a], p_,
                                      fallback_used);
                auto [vb, ve] = folds_[static_cast<std::size_t>(f)];
                double ssr = 0.0;
                for (int i = vb; i < ve; ++i) {
                    const double* row = xs_ + static_cast<std::size_t>(i) * p_;
                    double pred = 0.0;
                    for (int j = 0; j < p_; ++j) {
                        pred += row[j] * c[static_cast<std::size_t>(j)];
                    }
                    double r = pred - ys[i];
                    ssr += r * r;
                }
                score += ssr / (ve - vb);
            }
            score /= nfolds;
            require(std::isfinite(score), Errc::numeric, "non-finite cross-validation score");
            result.cv_scores[a] = score;
        }
        double best_score = result.cv_scores[0];
        for (double s : result.cv_scores) {
            best_score = std::min(best_score, s);
        }
        double best_alpha = alpha_grid[0];
        bool found = false;
        for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
            if (result.cv_scores[a] <= best_score + kAlphaTieRel * best_score) {
                if (!found || alpha_grid[a] > best_alpha) {
                    best_alpha = alpha_grid[a];
                    found = true;
                }
            }
        }
        result.best_alpha = best_alpha;
        return result;
    }

    std::vector<double> solve_full(const double* ys, double alpha,
                                   bool* fallback_used = nullptr) const {
        auto b = accumulate_xty(xs_, ys, n_, p_, 0, 0);
        return factor_solve(full_gram_, std::move(b), alpha, p_, fallback_used);
    }

private:
    const double* xs_;
    int n_, p_;
    std::vector<std::pair<int, int>> folds_;
    std::vector<std::vector<double>> fold_grams_;
    std::vector<double> full_gram_;
};

}  // namespace detail

using CvResult = detail::ColumnSolver::CvResult;

inline ScalingParams fit_scaling(const TrainingPairs& pairs, int target) {
    require(pairs.nsamples >= 2, Errc::data, "scaling needs at least two samples");
    require(target >= 0 && target < pairs.ntargets, Errc::config, "target level out of range");
    ScalingParams s;
    s.x_mean.resize(static_cast<std::size_t>(pairs.nfeat));
    s.x_std.resize(static_cast<std::size_t>(pairs.nfeat));
    for (int j = 0; j < pairs.nfeat; ++j) {
        detail::mean_and_std(pairs.x.data() + j, pairs.nsamples, pairs.nfeat,
                             s.x_mean[static_cast<std::size_t>(j)],
                             s.x_std[static_cast<std::size_t>(j)]);
    }
    detail::mean_and_std(pairs.y.data() + target, pairs.nsamples, pairs.ntargets, s.y_mean,
                         s.y_std);
    return s;
}

inline double standardize_value(double v, double mean, double sd) { return (v - mean) / sd; }
inline double destandardize_value(double z, double mean, double sd) { return z * sd + mean; }

// Standardized design matrix for one column, row-major samples x features.
inline std::vector<double> standardize_inputs(const TrainingPairs& pairs,
                                              const ScalingParams& s) {
    std::vector<double> xs(pairs.x.size());
    for (int i = 0; i < pairs.nsamples; ++i) {
        for (int j = 0; j < pairs.nfeat; ++j) {
            std::size_t idx = static_cast<std::size_t>(i) * pairs.nfeat + j;
            xs[idx] = standardize_value(pairs.x[idx], s.x_mean[static_cast<std::size_t>(j)],
                                        s.x_std[static_cast<std::size_t>(j)]);
        }
    }
    return xs;
}

inline std::vector<double> standardize_targets(const TrainingPairs& pairs, int target,
                                               const ScalingParams& s) {
    std::vector<double> ys(static_cast<std::size_t>(pairs.nsamples));
    for (int i = 0; i < pairs.nsamples; ++i) {
        ys[static_cast<std::size_t>(i)] = standardize_value(
            pairs.y[static_cast<std::size_t>(i) * pairs.ntargets + target], s.y_mean, s.y_std);
    }
    return ys;
}

// Solves min over c of |ys - Xs c|^2 + alpha |c|^2 via the normal equations.
// No intercept: standardization centers both sides.
inline std::vector<double> ridge_solve(std::span<const double> xs, int nsamples, int nfeat,
                                       std::span<const double> ys, double alpha,
                                       bool* fallback_used = nullptr) {
    require(std::isfinite(alpha) && alpha >= 0.0, Errc::config,
            "ridge penalty must be finite and non-negative");
    require(nsamples >= 1 && nfeat >= 1, Errc::config, "empty ridge system");
    require(xs.size() == static_cast<std::size_t>(nsamples) * nfeat, Errc::config,
            "design matrix size mismatch");
    require(ys.size() == static_cast<std::size_t>(nsamples), Errc::config,
            "target vector size mismatch");
    auto gram = detail::accumulate_gram(xs.data(), nsamples, nfeat, 0, 0);
    auto b = detail::accumulate_xty(xs.data(), ys.data(), nsamples, nfeat, 0, 0);
    return detail::factor_solve(gram, std::move(b), alpha, nfeat, fallback_used);
}

inline CvResult cross_validate(std::span<const double> xs, int nsamples, int nfeat,
                               std::span<const double> ys, std::span<const double> alpha_grid,
                               int nfolds = 3, bool* fallback_used = nullptr) {
    require(xs.size() == static_cast<std::size_t>(nsamples) * nfeat, Errc::config,
            "design matrix size mismatch");
    require(ys.size() == static_cast<std::size_t>(nsamples), Errc::config,
            "target vector size mismatch");
    detail::ColumnSolver solver(xs.data(), nsamples, nfeat, nfolds);
    return solver.cross_validate(ys.data(), alpha_grid, fallback_used);
}

inline RidgeModel train_grid_point(const TrainingPairs& pairs, int target,
                                   const TrainerConfig& cfg, bool* fallback_used = nullptr) {
    ScalingParams scaling = fit_scaling(pairs, target);
    auto xs = standardize_inputs(pairs, scaling);
    auto ys = standardize_targets(pairs, target, scaling);
    CvResult cv = cross_validate(xs, pairs.nsamples, pairs.nfeat, ys, cfg.alpha_grid,
                                 cfg.nfolds, fallback_used);
    RidgeModel model;
    model.coeffs = ridge_solve(xs, pairs.nsamples, pairs.nfeat, ys, cv.best_alpha, fallback_used);
    model.alpha = cv.best_alpha;
    model.scaling = std::move(scaling);
    return model;
}

// Trains every column independently (embarrassingly parallel) and attaches
// the above-ceiling ozone climatology from the same archive.
inline CoefficientSet train_all(const FieldSeries& temperature, const FieldSeries& ozone,
                                const TrainerConfig& cfg) {
    detail::check_alpha_grid(cfg.alpha_grid);
    const GridSpec& g = temperature.grid;
    CoefficientSet set;
    set.grid = g;
    set.nlev_out = g.cap_level_index;
    set.nfeat = g.cap_level_index;
    const std::size_t nc = set.ncols();
    const int p = set.nfeat;
    set.coeffs.assign(nc * set.nlev_out * static_cast<std::size_t>(p), 0.0);
    set.alpha.assign(nc * set.nlev_out, 0.0);
    set.x_mean.assign(nc * p, 0.0);
    set.x_std.assign(nc * p, 0.0);
    set.y_mean.assign(nc * set.nlev_out, 0.0);
    set.y_std.assign(nc * set.nlev_out, 0.0);

    Climatology clim = compute_climatology(ozone, cfg.clim_kind);
    set.cap_kind = cfg.clim_kind;
    const int ncap = set.ncap_levels();
    set.cap_values.assign(static_cast<std::size_t>(clim.rows()) * nc *
                              static_cast<std::size_t>(ncap),
                          0.0);
    for (int row = 0; row < clim.rows(); ++row) {
        for (std::size_t col = 0; col < nc; ++col) {
            const double* src = clim.values.data() + static_cast<std::size_t>(row) * g.npoints() +
                                col * g.nlev() + set.nlev_out;
            double* dst = set.cap_values.data() +
                          (static_cast<std::size_t>(row) * nc + col) * static_cast<std::size_t>(ncap);
            std::copy_n(src, ncap, dst);
        }
    }

    std::atomic<int> fallbacks{0};
    const int nlon = g.nlon();
    parallel_for(nc, cfg.nthreads, [&](std::size_t col) {
        int ilat = static_cast<int>(col) / nlon;
        int ilon = static_cast<int>(col) % nlon;
        TrainingPairs pairs = build_training_pairs(temperature, ozone, ilat, ilon);
        bool column_fallback = false;

        ScalingParams xonly = fit_scaling(pairs, 0);  // x statistics are target-independent
        auto xs = standardize_inputs(pairs, xonly);
        detail::ColumnSolver solver(xs.data(), pairs.nsamples, p, cfg.nfolds);
        std::copy(xonly.x_mean.begin(), xonly.x_mean.end(), set.x_mean.begin() + col * p);
        std::copy(xonly.x_std.begin(), xonly.x_std.end(), set.x_std.begin() + col * p);

        for (int k = 0; k < set.nlev_out; ++k) {
            double ym, ysd;
            detail::mean_and_std(pairs.y.data() + k, pairs.nsamples, pairs.ntargets, ym, ysd);
            std::vector<double> ys(static_cast<std::size_t>(pairs.nsamples));
            for (int i = 0; i < pairs.nsamples; ++i) {
                ys[static_cast<std::size_t>(i)] = standardize_value(
                    pairs.y[static_cast<std::size_t>(i) * pairs.ntargets + k], ym, ysd);
            }
            CvResult cv = solver.cross_validate(ys.data(), cfg.alpha_grid, &column_fallback);
            auto c = solver.solve_full(ys.data(), cv.best_alpha, &column_fallback);
            std::copy(c.begin(), c.end(), set.coeffs.begin() +
                                              static_cast<std::ptrdiff_t>(set.coeff_offset(col, k)));
            set.alpha[col * set.nlev_out + static_cast<std::size_t>(k)] = cv.best_alpha;
            set.y_mean[col * set.nlev_out + static_cast<std::size_t>(k)] = ym;
            set.y_std[col * set.nlev_out + static_cast<std::size_t>(k)] = ysd;
        }
        if (column_fallback) {
            fallbacks.fetch_add(1, std::memory_order_relaxed);
        }
    });

    set.meta.alpha_grid = cfg.alpha_grid;
    set.meta.nfolds = cfg.nfolds;
    set.meta.nsamples = temperature.ntime - std::max(temperature.spinup_days, ozone.spinup_days) - 1;
    set.meta.source_tag = cfg.source_tag;
    set.meta.solver_fallbacks = fallbacks.load();
    set.validate();
    return set;
}

}  // namespace mloz
