#pragma once

// Independent reference solvers for the isotonic tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "biso/core.hpp"

namespace oracle {

/// Isotonic regression by enumerating every split of the index range into
/// contiguous pools: the optimum is the feasible pooling with least squared
/// error. Exponential; for lengths up to about 12.
inline std::vector<double> isotonic_by_pools(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (unsigned long mask = 0; mask < (1ul << (n - 1)); ++mask) {
        std::vector<double> fit(n);
        std::size_t start = 0;
        double prev_mean = -std::numeric_limits<double>::infinity();
        bool feasible = true;
        for (std::size_t k = 0; k < n && feasible; ++k) {
            const bool cut_after = k + 1 == n || (mask >> k & 1ul);
            if (!cut_after) continue;
            double mean = 0.0;
            for (std::size_t t = start; t <= k; ++t) mean += v[t];
            mean /= static_cast<double>(k + 1 - start);
            if (mean < prev_mean) feasible = false;
            for (std::size_t t = start; t <= k; ++t) fit[t] = mean;
            prev_mean = mean;
            start = k + 1;
        }
        if (!feasible) continue;
        double cost = 0.0;
        for (std::size_t t = 0; t < n; ++t) cost += (fit[t] - v[t]) * (fit[t] - v[t]);
        if (cost < best_cost) {
            best_cost = cost;
            best = fit;
        }
    }
    return best;
}

/// Projection onto the bivariate isotonic class by accelerated projected
/// gradient ascent on the dual of
///   min ½‖x − y‖²  s.t.  x_a − x_b ≤ 0 (monotone pairs), −x ≤ 0, x − 1 ≤ 0.
/// The primal point is x = y − Aᵀλ.
inline biso::Matrix project_by_dual_gradient(const biso::Matrix& y, std::size_t iterations = 200000) {
    const std::size_t r = y.rows(), c = y.cols(), n = y.size();
    struct Pair {
        std::size_t lo, hi;  // constraint x_lo − x_hi ≤ 0
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            if (j + 1 < c) pairs.push_back({i * c + j, i * c + j + 1});
            if (i + 1 < r) pairs.push_back({i * c + j, (i + 1) * c + j});
        }
    }
    const std::size_t m = pairs.size() + 2 * n;
    // Row norms of A are at most sqrt(2) and each variable sits in at most 6
    // constraints, so ‖AAᵀ‖ ≤ 2 · 6.
    const double step = 1.0 / 12.0;
    std::vector<double> lam(m, 0.0), z(m, 0.0), prev(m, 0.0), x(n);
    auto primal = [&](const std::vector<double>& mult) {
        for (std::size_t k = 0; k < n; ++k) x[k] = y.values()[k];
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            x[pairs[p].lo] -= mult[p];
            x[pairs[p].hi] += mult[p];
        }
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += mult[pairs.size() + k];      // −x ≤ 0
            x[k] -= mult[pairs.size() + n + k];  // x ≤ 1
        }
    };
    double t = 1.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        primal(z);
        prev = lam;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            lam[p] = std::max(0.0, z[p] + step * (x[pairs[p].lo] - x[pairs[p].hi]));
        }
        for (std::size_t k = 0; k < n; ++k) {
            lam[pairs.size() + k] = std::max(0.0, z[pairs.size() + k] + step * (-x[k]));
            lam[pairs.size() + n + k] = std::max(0.0, z[pairs.size() + n + k] + step * (x[k] - 1.0));
        }
        const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        for (std::size_t k = 0; k < m; ++k) z[k] = lam[k] + (t - 1.0) / t_next * (lam[k] - prev[k]);
        t = t_next;
    }
    primal(lam);
    return biso::Matrix(r, c, x);
}

inline double max_abs_diff(const biso::Matrix& a, const biso::Matrix& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a.values()[k] - b.values()[k]));
    return d;
}

}  // namespace oracle
