#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "censaft/errors.hpp"
#include "censaft/linalg.hpp"

namespace censaft {

struct SurvivalDataset {
    std::vector<double> times;
    std::vector<int> statuses;  // 1 = event, 0 = censored
    Matrix covariates;
    std::vector<double> log_times;  // derived by make_dataset; keep in sync with times

    std::size_t n() const { return times.size(); }
    std::size_t p() const { return covariates.cols(); }
};

inline SurvivalDataset make_dataset(std::vector<double> times,
                                    std::vector<int> statuses,
                                    Matrix covariates) {
    const std::size_t n = times.size();
    if (n == 0) throw InvalidDataset("dataset must contain at least one observation");
    if (statuses.size() != n || covariates.rows() != n) {
        throw InvalidDataset("times, statuses and covariate rows must agree in length");
    }
    SurvivalDataset d;
    d.log_times.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(times[i] > 0.0) || !std::isfinite(times[i])) {
            throw InvalidDataset("times must be strictly positive and finite (row " +
                                 std::to_string(i + 1) + ")");
        }
        if (statuses[i] != 0 && statuses[i] != 1) {
            throw InvalidDataset("statuses must be 0 or 1 (row " +
                                 std::to_string(i + 1) + ")");
        }
        d.log_times[i] = std::log(times[i]);
    }
    d.times = std::move(times);
    d.statuses = std::move(statuses);
    d.covariates = std::move(covariates);
    return d;
}

struct OrderedDataset : SurvivalDataset {
    std::vector<std::size_t> permutation;  // ordered position -> original index
};

// Nondecreasing in time; at ties events precede censored; stable otherwise.
inline OrderedDataset order_dataset(const SurvivalDataset& data) {
    const std::size_t n = data.n();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (data.times[a] != data.times[b]) return data.times[a] < data.times[b];
        return data.statuses[a] > data.statuses[b];
    });
    OrderedDataset out;
    out.times.resize(n);
    out.statuses.resize(n);
    out.log_times.resize(n);
    out.covariates = Matrix(n, data.p());
    out.permutation = idx;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = idx[k];
        out.times[k] = data.times[i];
        out.statuses[k] = data.statuses[i];
        out.log_times[k] = data.log_times[i];
        for (std::size_t j = 0; j < data.p(); ++j) {
            out.covariates(k, j) = data.covariates(i, j);
        }
    }
    return out;
}

}  // namespace censaft
