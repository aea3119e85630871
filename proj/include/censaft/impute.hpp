#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "censaft/buckley_james.hpp"
#include "censaft/data.hpp"
#include "censaft/errors.hpp"
#include "censaft/km.hpp"
#include "censaft/rng.hpp"
#include "censaft/swls.hpp"

namespace censaft {

enum class ImputationMethod {
    Efron,
    CondMean,
    CondMedian,
    ResampCondMean,
    ResampCondMedian,
    PredDiff,
};

struct ImputeOptions {
    std::optional<double> lambda2;   // defaults to the log-p ridge rule
    std::size_t n_draws = 100;       // resampling draws behind the point estimate
    std::size_t bj_steps = 3;        // weighted least-squares steps per draw
    std::size_t tau_star_draws = 100;
    std::uint64_t seed = 0;
};

struct ImputationResult {
    ImputationMethod method = ImputationMethod::Efron;
    // Value replacing the largest observation's log time; absent for Efron.
    std::optional<double> imputed_log_time;
    // Added quantity: log-scale tail excess for the conditional methods, the
    // predicted time-scale difference for PredDiff.
    std::optional<double> tau;
    AftFit fit;  // final refit
    bool empty_tail = false;
    bool clamped_nu = false;
};

struct MeanImputedTimes {
    Vector values;                      // modified log failure times
    std::vector<std::size_t> positions; // ordered-dataset indices
};

struct DiffRegression {
    double intercept = 0.0;
    double slope = 0.0;
    Vector weights;
    double predicted = 0.0;  // raw prediction at the largest observation
    double nu = 0.0;         // clamped at zero
    bool clamped = false;
};

namespace detail {

// Product-limit curve over `values` (any monotone transform of time) with
// every censored observation tied at the maximum time reclassified as an
// event, so the distribution is proper and conditional tail masses match the
// survival value at the cut.
inline KmCurve proper_value_curve(const OrderedDataset& data,
                                  const Vector& values) {
    std::vector<int> statuses = data.statuses;
    const double max_time = data.times.back();
    for (std::size_t i = 0; i < statuses.size(); ++i) {
        if (data.times[i] == max_time) statuses[i] = 1;
    }
    return product_limit(values, statuses);
}

inline double curve_tail_mean(const KmCurve& curve, double cut) {
    const double mass = km_survival_at(curve, cut);
    if (mass <= 0.0) {
        throw NoTailMass("no distribution mass beyond the censoring point");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < curve.event_times.size(); ++k) {
        if (curve.event_times[k] > cut) acc += curve.event_times[k] * curve.jumps[k];
    }
    return acc / mass;
}

}  // namespace detail

// Conditional-mean replacements for every censored observation except those
// tied at the maximum time.
inline MeanImputedTimes mean_impute_all(const OrderedDataset& data) {
    const KmCurve curve = detail::proper_value_curve(data, data.log_times);
    const double max_time = data.times.back();
    MeanImputedTimes out;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (data.statuses[i] != 0 || data.times[i] == max_time) continue;
        out.values.push_back(detail::curve_tail_mean(curve, data.log_times[i]));
        out.positions.push_back(i);
    }
    return out;
}

// Weighted line through (value, difference) points; exposed so the fit can be
// checked against hand-computed regressions.
inline DiffRegression fit_diff_regression(const Vector& values, const Vector& diffs,
                                          const Vector& weights, double anchor) {
    const std::size_t k = values.size();
    if (diffs.size() != k || weights.size() != k) {
        throw InvalidDataset("regression inputs must align");
    }
    if (k < 2) throw TooFewCensored("need at least two censored observations");
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = weights[i];
        sw += w;
        sx += w * values[i];
        sy += w * diffs[i];
        sxx += w * values[i] * values[i];
        sxy += w * values[i] * diffs[i];
    }
    const double det = sw * sxx - sx * sx;
    const double scale = sw * sxx + sx * sx;
    if (!(det > 1e-12 * std::max(scale, 1.0))) {
        throw DegenerateRegression("censored observation values do not vary");
    }
    DiffRegression out;
    out.slope = (sw * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / sw;
    out.weights = weights;
    out.predicted = out.intercept + out.slope * anchor;
    out.clamped = out.predicted <= 0.0;
    out.nu = std::max(0.0, out.predicted);
    return out;
}

// Difference regression on the original time scale: for each censored
// observation below the maximum, the gap between its conditional tail mean
// lifetime and its censoring time shrinks as the censoring time approaches the
// maximum; the weighted line extrapolates that gap to the maximum itself.
inline DiffRegression predicted_difference(const OrderedDataset& data) {
    const KmCurve curve = detail::proper_value_curve(data, data.times);
    const double max_time = data.times.back();
    Vector values, diffs, weights;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (data.statuses[i] != 0 || data.times[i] == max_time) continue;
        const double t = data.times[i];
        values.push_back(t);
        diffs.push_back(detail::curve_tail_mean(curve, t) - t);
        weights.push_back(1.0 / (max_time - t));
    }
    if (values.size() < 2) {
        throw TooFewCensored(
            "need at least two censored observations below the maximum");
    }
    return fit_diff_regression(values, diffs, weights, max_time);
}

namespace detail {

inline Vector residuals_at(const OrderedDataset& data, const Vector& beta) {
    Vector resid(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        resid[i] = data.log_times[i] - dot(data.covariates.row(i), beta);
    }
    return resid;
}

inline OrderedDataset replace_largest(const OrderedDataset& data,
                                      double imputed_log_time) {
    OrderedDataset out = data;
    out.log_times.back() = imputed_log_time;
    out.times.back() = std::exp(imputed_log_time);
    out.statuses.back() = 1;
    return out;
}

}  // namespace detail

inline ImputationResult run_pipeline(const OrderedDataset& data,
                                     ImputationMethod method,
                                     const ImputeOptions& options = {}) {
    FitOptions fopts;
    fopts.lambda2 = options.lambda2;

    ImputationResult out;
    out.method = method;
    if (method == ImputationMethod::Efron) {
        out.fit = fit_penalized_swls(data, fopts);
        return out;
    }
    if (data.statuses.back() != 0) {
        throw LargestNotCensored(
            "largest observation is uncensored; only the tail-corrected fit applies");
    }

    double tau = 0.0;
    if (method == ImputationMethod::PredDiff) {
        const DiffRegression dr = predicted_difference(data);
        out.clamped_nu = dr.clamped;
        tau = dr.nu;
        out.tau = tau;
        out.imputed_log_time = std::log(data.times.back() + dr.nu);
    } else if (method == ImputationMethod::CondMean ||
               method == ImputationMethod::CondMedian) {
        const AftFit base = fit_penalized_swls(data, fopts);
        const Vector resid = detail::residuals_at(data, base.beta);
        const ResidualKm km = residual_km(resid, data.statuses);
        const double anchor = resid.back();
        const TailValue tv = method == ImputationMethod::CondMean
                                 ? conditional_tail_mean(km, anchor)
                                 : conditional_tail_median(km, anchor);
        out.empty_tail = tv.empty;
        tau = tv.empty ? 0.0 : tv.value - anchor;
        out.tau = tau;
        out.imputed_log_time = data.log_times.back() + tau;
    } else {
        const double lambda2 =
            options.lambda2 ? *options.lambda2 : default_ridge(data.p());
        const Matrix draws = bj_resample_distribution(
            data, lambda2, options.bj_steps, options.n_draws, options.seed);
        Vector beta_star(data.p(), 0.0);
        for (std::size_t b = 0; b < draws.rows(); ++b) {
            for (std::size_t j = 0; j < data.p(); ++j) beta_star[j] += draws(b, j);
        }
        for (double& v : beta_star) v /= static_cast<double>(draws.rows());

        const Vector resid = detail::residuals_at(data, beta_star);
        const double anchor = resid.back();
        const std::size_t draws_b = std::max<std::size_t>(1, options.tau_star_draws);
        double acc = 0.0;
        std::size_t empty = 0;
        for (std::size_t b = 0; b < draws_b; ++b) {
            Rng rng(child_seed(options.seed, options.n_draws + b));
            Vector z(data.n());
            for (double& v : z) v = rng.exponential();
            const ResidualKm km = residual_km_weighted(resid, data.statuses, z);
            const TailValue tv = method == ImputationMethod::ResampCondMean
                                     ? conditional_tail_mean(km, anchor)
                                     : conditional_tail_median(km, anchor);
            if (tv.empty) {
                ++empty;
            } else {
                acc += tv.value - anchor;
            }
        }
        out.empty_tail = empty == draws_b;
        tau = acc / static_cast<double>(draws_b);
        out.tau = tau;
        out.imputed_log_time = data.log_times.back() + tau;
    }

    out.fit = fit_penalized_swls(detail::replace_largest(data, *out.imputed_log_time),
                                 fopts);
    return out;
}

inline ImputationResult run_pipeline(const SurvivalDataset& data,
                                     ImputationMethod method,
                                     const ImputeOptions& options = {}) {
    return run_pipeline(order_dataset(data), method, options);
}

namespace detail {

inline std::vector<std::size_t> max_tie_positions(const OrderedDataset& data) {
    std::vector<std::size_t> ties;
    const double max_time = data.times.back();
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (data.statuses[i] == 0 && data.times[i] == max_time) ties.push_back(i);
    }
    return ties;
}

}  // namespace detail

// Sequential imputation of the m censored maxima: each step advances the
// current largest value by the predicted difference evaluated there, so later
// imputations build on earlier ones. Returns log times in processing order.
inline Vector tail_ties_iterative(const OrderedDataset& data) {
    const std::size_t m = detail::max_tie_positions(data).size();
    if (m == 0) {
        throw LargestNotCensored("no censored observations tied at the maximum");
    }
    const DiffRegression dr = predicted_difference(data);
    Vector out;
    double v = data.times.back();
    for (std::size_t k = 0; k < m; ++k) {
        v += std::max(0.0, dr.intercept + dr.slope * v);
        out.push_back(std::log(v));
    }
    return out;
}

struct Extrapolation {
    Vector imputed;  // original time units, one per tied maximum
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

// Regression of observed lifetimes on transformed survival probabilities over
// the uncorrected product-limit curve, evaluated on an evenly spaced
// pseudo-probability grid below the last defined survival value.
inline Extrapolation tail_ties_extrapolate(const OrderedDataset& data,
                                           double psi = 1.0) {
    if (!(psi > 0.0)) throw InvalidDataset("survival transform power must be positive");
    const std::size_t m = detail::max_tie_positions(data).size();
    if (m == 0) {
        throw LargestNotCensored("no censored observations tied at the maximum");
    }
    const KmCurve curve = km_estimate(data, false);
    const std::size_t k = curve.event_times.size();
    if (k < 2) {
        throw DegenerateCurve("survival curve needs at least two support points");
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = std::pow(curve.survival[i], psi);
        const double y = curve.event_times[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double n = static_cast<double>(k);
    const double det = n * sxx - sx * sx;
    if (!(det > 0.0)) {
        throw DegenerateCurve("survival values do not vary across support points");
    }
    Extrapolation out;
    out.slope = (n * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double fit = out.intercept + out.slope * std::pow(curve.survival[i], psi);
        const double e = curve.event_times[i] - fit;
        ss_res += e * e;
    }
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

    const double s_last = curve.survival.back();
    for (std::size_t j = 1; j <= m; ++j) {
        const double pk =
            s_last * (1.0 - static_cast<double>(j) / static_cast<double>(m));
        out.imputed.push_back(out.intercept + out.slope * std::pow(pk, psi));
    }
    return out;
}

}  // namespace censaft
