#pragma once

#include <cstddef>
#include <vector>

#include "censaft/data.hpp"

namespace censaft {

struct KmCurve {
    std::vector<double> event_times;  // increasing, distinct
    std::vector<double> survival;     // value just after each event time
    std::vector<double> jumps;        // drop at each event time
    bool defined_beyond_max = false;
};

namespace detail {

// Product-limit over an ordered sequence of (value, status) pairs; statuses
// may already carry a tail reclassification.
inline KmCurve product_limit(const std::vector<double>& values,
                             const std::vector<int>& statuses) {
    const std::size_t n = values.size();
    KmCurve curve;
    double surv = 1.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t events = 0;
        while (j < n && values[j] == values[i]) {
            events += static_cast<std::size_t>(statuses[j] == 1);
            ++j;
        }
        if (events > 0) {
            const std::size_t at_risk = n - i;
            const double next = surv * (1.0 - static_cast<double>(events) /
                                                  static_cast<double>(at_risk));
            curve.event_times.push_back(values[i]);
            curve.jumps.push_back(surv - next);
            curve.survival.push_back(next);
            surv = next;
        }
        i = j;
    }
    curve.defined_beyond_max = n > 0 && statuses[n - 1] == 1;
    return curve;
}

}  // namespace detail

inline KmCurve km_estimate(const OrderedDataset& data, bool tail_correction) {
    std::vector<int> statuses = data.statuses;
    if (tail_correction && !statuses.empty()) statuses.back() = 1;
    KmCurve curve = detail::product_limit(data.times, statuses);
    if (tail_correction && !curve.survival.empty() && curve.survival.back() > 0.0) {
        // Censored observations can share the largest value, in which case
        // grouped risk sets leave mass beyond it.  The corrected distribution
        // is proper by definition, so the largest value absorbs the rest;
        // this keeps the curve's jumps equal to the per-value sums of the
        // positional weights.
        curve.jumps.back() += curve.survival.back();
        curve.survival.back() = 0.0;
    }
    return curve;
}

// Survival value at time t (right-continuous step function).
inline double km_survival_at(const KmCurve& curve, double t) {
    double s = 1.0;
    for (std::size_t k = 0; k < curve.event_times.size(); ++k) {
        if (curve.event_times[k] <= t) s = curve.survival[k];
        else break;
    }
    return s;
}

struct StuteWeights {
    std::vector<double> weights;  // aligned with the ordered dataset
    bool tail_corrected = false;
};

inline StuteWeights stute_weights(const OrderedDataset& data, bool tail_correction) {
    const std::size_t n = data.n();
    std::vector<int> statuses = data.statuses;
    if (tail_correction && !statuses.empty()) statuses.back() = 1;

    StuteWeights out;
    out.tail_corrected = tail_correction;
    out.weights.assign(n, 0.0);
    double prod = 1.0;  // prefix product of ((n-j)/(n-j+1))^{delta_(j)}
    for (std::size_t i = 1; i <= n; ++i) {
        if (i == 1) {
            out.weights[0] = static_cast<double>(statuses[0]) / static_cast<double>(n);
        } else {
            const double nd = static_cast<double>(n);
            const double jd = static_cast<double>(i - 1);
            if (statuses[i - 2] == 1) prod *= (nd - jd) / (nd - jd + 1.0);
            out.weights[i - 1] = static_cast<double>(statuses[i - 1]) /
                                 (nd - jd) * prod;
        }
    }
    return out;
}

}  // namespace censaft
