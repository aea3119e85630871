#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "censaft/data.hpp"
#include "censaft/errors.hpp"
#include "censaft/impute.hpp"
#include "censaft/linalg.hpp"
#include "censaft/rng.hpp"

namespace censaft {

struct SimConfig {
    std::size_t n = 100;
    std::size_t p = 5;
    Vector beta;
    double sigma = 1.0;
    double rho = 0.0;
    double target_censoring = 50.0;  // percent
    std::size_t replications = 200;
    std::uint64_t seed = 1;
    double alpha = 0.0;
    std::size_t pilot_size = 10000;
    double calibration_tolerance = 1.0;  // percentage points
};

inline void validate_config(const SimConfig& cfg) {
    if (cfg.n == 0) throw ConfigError("sample size must be positive", "n");
    if (cfg.p == 0) throw ConfigError("dimension must be positive", "p");
    if (cfg.beta.size() != cfg.p) {
        throw ConfigError("coefficient vector length must equal p", "beta");
    }
    if (!(cfg.sigma > 0.0)) throw ConfigError("sigma must be positive", "sigma");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) {
        throw ConfigError("rho must lie in [0, 1)", "rho");
    }
    if (!(cfg.target_censoring >= 0.0 && cfg.target_censoring < 100.0)) {
        throw ConfigError("target censoring must lie in [0, 100)", "target_censoring");
    }
    if (cfg.pilot_size == 0) {
        throw ConfigError("pilot size must be positive", "pilot_size");
    }
    if (!(cfg.calibration_tolerance > 0.0)) {
        throw ConfigError("calibration tolerance must be positive",
                          "calibration_tolerance");
    }
}

// Rows iid zero-mean unit-variance normal with correlation rho^|i-j| between
// components, generated by the triangular factor of that correlation matrix.
inline Matrix gen_covariates(std::size_t n, std::size_t p, double rho, Rng& rng) {
    if (!(std::abs(rho) < 1.0)) {
        throw InvalidDataset("correlation base must lie strictly inside (-1, 1)");
    }
    Matrix x(n, p);
    const double fresh = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        double prev = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double z = rng.normal();
            prev = j == 0 ? z : rho * prev + fresh * z;
            x(i, j) = prev;
        }
    }
    return x;
}

namespace detail {

struct Pilot {
    Vector lifetimes;  // time scale
    Vector u;          // censoring uniforms, C = a (1 + u)
};

inline Pilot draw_pilot(const SimConfig& cfg, Rng& rng) {
    Pilot pilot;
    pilot.lifetimes.resize(cfg.pilot_size);
    pilot.u.resize(cfg.pilot_size);
    for (std::size_t i = 0; i < cfg.pilot_size; ++i) {
        double mean = cfg.alpha;
        double prev = 0.0;
        const double fresh = std::sqrt(1.0 - cfg.rho * cfg.rho);
        for (std::size_t j = 0; j < cfg.p; ++j) {
            const double z = rng.normal();
            prev = j == 0 ? z : cfg.rho * prev + fresh * z;
            mean += cfg.beta[j] * prev;
        }
        pilot.lifetimes[i] = std::exp(mean + cfg.sigma * rng.normal());
        pilot.u[i] = rng.uniform01();
    }
    return pilot;
}

inline double pilot_rate(const Pilot& pilot, double a) {
    std::size_t censored = 0;
    for (std::size_t i = 0; i < pilot.lifetimes.size(); ++i) {
        censored += pilot.lifetimes[i] > a * (1.0 + pilot.u[i]);
    }
    return 100.0 * static_cast<double>(censored) /
           static_cast<double>(pilot.lifetimes.size());
}

}  // namespace detail

// Lower bound a of the U(a, 2a) censoring law hitting the target rate on a
// pilot sample held fixed across the bisection, so the rate is monotone in a.
inline double calibrate_censoring(const SimConfig& cfg, Rng& rng) {
    if (!(cfg.target_censoring > 0.0 && cfg.target_censoring < 100.0)) {
        throw ConfigError("calibration needs a target strictly inside (0, 100)",
                          "target_censoring");
    }
    const detail::Pilot pilot = detail::draw_pilot(cfg, rng);
    double lo = 1e-6;
    double hi = 1.0;
    std::size_t doublings = 0;
    while (detail::pilot_rate(pilot, hi) > cfg.target_censoring) {
        hi *= 2.0;
        if (++doublings > 200 || !std::isfinite(hi)) {
            throw CalibrationFailed("no censoring bound brackets the target rate");
        }
    }
    if (detail::pilot_rate(pilot, lo) < cfg.target_censoring) {
        throw CalibrationFailed("target rate unreachable even at vanishing bound");
    }
    for (std::size_t step = 0; step < 200; ++step) {
        const double mid = 0.5 * (lo + hi);
        const double rate = detail::pilot_rate(pilot, mid);
        if (std::abs(rate - cfg.target_censoring) <= cfg.calibration_tolerance) {
            return mid;
        }
        if (rate > cfg.target_censoring) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw CalibrationFailed("bisection did not reach the target censoring rate");
}

// One synthetic dataset with the maximum observed value forced to be
// censored: the censoring vector is redrawn while lifetimes and covariates
// are retained, then as a last resort maximal uncensored observations have
// their censoring times overwritten just below their lifetimes.
inline SurvivalDataset gen_dataset(const SimConfig& cfg, double a, Rng& rng,
                                   bool force_censored_max = true) {
    const Matrix x = gen_covariates(cfg.n, cfg.p, cfg.rho, rng);
    Vector lifetime(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        double mean = cfg.alpha;
        for (std::size_t j = 0; j < cfg.p; ++j) mean += cfg.beta[j] * x(i, j);
        lifetime[i] = std::exp(mean + cfg.sigma * rng.normal());
    }

    std::vector<double> observed(cfg.n);
    std::vector<int> status(cfg.n);
    auto apply_censoring = [&]() {
        for (std::size_t i = 0; i < cfg.n; ++i) {
            const double c = a * (1.0 + rng.uniform01());
            if (lifetime[i] <= c) {
                observed[i] = lifetime[i];
                status[i] = 1;
            } else {
                observed[i] = c;
                status[i] = 0;
            }
        }
    };
    auto max_is_censored = [&]() {
        const double maxval = *std::max_element(observed.begin(), observed.end());
        for (std::size_t i = 0; i < cfg.n; ++i) {
            if (observed[i] == maxval && status[i] == 0) return true;
        }
        return false;
    };

    apply_censoring();
    if (force_censored_max) {
        for (std::size_t redraw = 0; redraw < 1000 && !max_is_censored(); ++redraw) {
            apply_censoring();
        }
        while (!max_is_censored()) {
            const std::size_t i = static_cast<std::size_t>(
                std::max_element(observed.begin(), observed.end()) -
                observed.begin());
            const double upper = lifetime[i];
            const double lower = std::min(a, 0.999 * upper);
            observed[i] = rng.uniform(lower, upper);
            status[i] = 0;
        }
    }
    return make_dataset(std::move(observed), std::move(status), x);
}

struct MethodStats {
    ImputationMethod method = ImputationMethod::Efron;
    Vector bias;
    Vector variance;
    Vector mse;
    std::size_t successes = 0;
    std::size_t failures = 0;
};

struct StudyReport {
    std::vector<MethodStats> methods;
    std::size_t replications = 0;
    double mean_censoring_rate = 0.0;  // achieved, percent
    double censoring_a = 0.0;
};

inline std::size_t study_thread_count(std::size_t replications) {
    std::size_t want = 0;
    if (const char* env = std::getenv("CENSAFT_THREADS")) {
        char* end = nullptr;
        const unsigned long parsed = std::strtoul(env, &end, 10);
        if (end && *end == '\0') want = static_cast<std::size_t>(parsed);
    }
    if (want == 0) {
        want = std::max<unsigned>(1, std::thread::hardware_concurrency());
    }
    return std::max<std::size_t>(1, std::min(want, replications));
}

// Bias, variance and MSE of every pipeline over independent replications.
// Replication r draws its stream from (seed, r), results land in fixed
// per-replication slots and aggregation follows replication order, so the
// report does not depend on the number of worker threads.
inline StudyReport run_study(const SimConfig& cfg,
                             const std::vector<ImputationMethod>& methods,
                             std::optional<double> lambda2 = std::nullopt) {
    validate_config(cfg);
    if (cfg.replications < 2) {
        throw ConfigError("at least two replications are required", "replications");
    }
    if (methods.empty()) throw InvalidDataset("no estimation methods requested");

    Rng cal_rng(child_seed(cfg.seed, cfg.replications));
    const double a = calibrate_censoring(cfg, cal_rng);

    const std::size_t reps = cfg.replications;
    const std::size_t nm = methods.size();
    std::vector<std::vector<Vector>> estimates(nm,
                                               std::vector<Vector>(reps));
    std::vector<std::vector<char>> ok(nm, std::vector<char>(reps, 0));
    Vector censoring_rate(reps, 0.0);

    auto run_one = [&](std::size_t r) {
        const std::uint64_t rep_seed = child_seed(cfg.seed, r);
        Rng rng(rep_seed);
        const SurvivalDataset ds = gen_dataset(cfg, a, rng);
        double censored = 0.0;
        for (int s : ds.statuses) censored += s == 0;
        censoring_rate[r] = 100.0 * censored / static_cast<double>(cfg.n);
        const OrderedDataset ordered = order_dataset(ds);
        for (std::size_t mi = 0; mi < nm; ++mi) {
            ImputeOptions opts;
            opts.lambda2 = lambda2;
            opts.seed = child_seed(rep_seed, mi);
            try {
                estimates[mi][r] = run_pipeline(ordered, methods[mi], opts).fit.beta;
                ok[mi][r] = 1;
            } catch (const Error&) {
                ok[mi][r] = 0;
            }
        }
    };

    const std::size_t workers = study_thread_count(reps);
    if (workers <= 1) {
        for (std::size_t r = 0; r < reps; ++r) run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&]() {
                for (std::size_t r = next.fetch_add(1); r < reps;
                     r = next.fetch_add(1)) {
                    run_one(r);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    StudyReport report;
    report.replications = reps;
    report.censoring_a = a;
    for (double rate : censoring_rate) report.mean_censoring_rate += rate;
    report.mean_censoring_rate /= static_cast<double>(reps);

    for (std::size_t mi = 0; mi < nm; ++mi) {
        MethodStats stats;
        stats.method = methods[mi];
        stats.bias.assign(cfg.p, 0.0);
        stats.variance.assign(cfg.p, 0.0);
        stats.mse.assign(cfg.p, 0.0);
        Vector mean(cfg.p, 0.0);
        for (std::size_t r = 0; r < reps; ++r) {
            if (!ok[mi][r]) {
                ++stats.failures;
                continue;
            }
            ++stats.successes;
            for (std::size_t j = 0; j < cfg.p; ++j) mean[j] += estimates[mi][r][j];
        }
        if (stats.successes > 0) {
            const double s = static_cast<double>(stats.successes);
            for (std::size_t j = 0; j < cfg.p; ++j) mean[j] /= s;
            for (std::size_t r = 0; r < reps; ++r) {
                if (!ok[mi][r]) continue;
                for (std::size_t j = 0; j < cfg.p; ++j) {
                    const double dm = estimates[mi][r][j] - mean[j];
                    const double db = estimates[mi][r][j] - cfg.beta[j];
                    stats.variance[j] += dm * dm;
                    stats.mse[j] += db * db;
                }
            }
            for (std::size_t j = 0; j < cfg.p; ++j) {
                stats.bias[j] = mean[j] - cfg.beta[j];
                stats.variance[j] /= s;
                stats.mse[j] /= s;
            }
        } else {
            const double nan = std::nan("");
            stats.bias.assign(cfg.p, nan);
            stats.variance.assign(cfg.p, nan);
            stats.mse.assign(cfg.p, nan);
        }
        report.methods.push_back(std::move(stats));
    }
    return report;
}

}  // namespace censaft
