#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "censaft/data.hpp"
#include "censaft/linalg.hpp"
#include "censaft/rng.hpp"

namespace testutil {

struct RandomDataOptions {
    std::size_t n = 40;
    std::size_t p = 3;
    double censor_fraction = 0.35;
    bool force_censored_max = true;
    bool snap_ties = false;
};

// Small synthetic survival dataset; times come from a log-normal model so the
// fits behave, censoring statuses are drawn directly.
inline censaft::SurvivalDataset random_dataset(censaft::Rng& rng,
                                               const RandomDataOptions& opt) {
    censaft::Matrix x(opt.n, opt.p);
    std::vector<double> times(opt.n);
    std::vector<int> statuses(opt.n);
    for (std::size_t i = 0; i < opt.n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < opt.p; ++j) {
            x(i, j) = rng.normal();
            mean += 0.4 * static_cast<double>(j + 1) * x(i, j);
        }
        double t = std::exp(0.5 + mean + 0.8 * rng.normal());
        if (opt.snap_ties) {
            t = std::max(0.25, std::round(t * 4.0) / 4.0);
        }
        times[i] = t;
        statuses[i] = rng.uniform01() < opt.censor_fraction ? 0 : 1;
    }
    if (opt.force_censored_max) {
        const std::size_t imax = static_cast<std::size_t>(
            std::max_element(times.begin(), times.end()) - times.begin());
        statuses[imax] = 0;
    } else {
        bool any_event = false;
        for (int s : statuses) any_event |= s == 1;
        if (!any_event) statuses[0] = 1;
    }
    return censaft::make_dataset(std::move(times), std::move(statuses), x);
}

inline double max_abs_diff(const censaft::Vector& a, const censaft::Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

}  // namespace testutil
