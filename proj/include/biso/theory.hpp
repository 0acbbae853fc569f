#pragma once

// Executable checks of the standalone inequalities behind the estimators,
// used as property oracles and Monte Carlo concentration checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "biso/core.hpp"
#include "biso/sampling.hpp"

namespace biso {

/// ‖v‖₂² ≤ var(v)·‖v‖₁ + ‖v‖₁² / n.
inline bool check_l2_tv_l1(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("check_l2_tv_l1 needs a nonempty vector");
    double l1 = 0.0;
    double l2sq = 0.0;
    for (double x : v) {
        l1 += std::abs(x);
        l2sq += x * x;
    }
    const double rhs = variation(v) * l1 + l1 * l1 / static_cast<double>(v.size());
    // Relative slack for rounding in the two accumulations.
    return l2sq <= rhs + 1e-12 * std::max(1.0, rhs);
}

/// For nondecreasing `a` and a ranking `pi` (index -> position): if pi puts i
/// before j whenever a_j − a_i > tau, then |a_{pi(i)} − a_i| ≤ tau for all i.
/// Returns false only when the premise holds and the conclusion fails.
inline bool check_threshold_sort(std::span<const double> a, const Permutation& pi, double tau) {
    if (pi.size() != a.size()) throw DimensionError("check_threshold_sort: size mismatch");
    if (!(tau > 0.0)) throw std::invalid_argument("check_threshold_sort needs tau > 0");
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i] < a[i - 1]) throw std::invalid_argument("check_threshold_sort needs a nondecreasing sequence");
    }
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (a[j] - a[i] > tau && !(pi(i) < pi(j))) return true;  // premise fails
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(a[pi(i)] - a[i]) > tau) return false;
    }
    return true;
}

struct ConcentrationReport {
    std::size_t trials = 0;
    std::size_t violations = 0;
    double bound_used = 0.0;
    double max_observed_deviation = 0.0;
};

/// Deviation bound for a partial sum over |S| entries:
/// 8(ζ+1)( sqrt(|S| n1 n2 / N · L) + 2 (n1 n2 / N) L ), L = log(n1 n2).
inline double parsum_bound(std::size_t set_size, std::size_t n1, std::size_t n2, std::size_t budget,
                           double zeta) {
    const double area = static_cast<double>(n1) * static_cast<double>(n2);
    const double l = std::log(area);
    const double ratio = area / static_cast<double>(budget);
    return 8.0 * (zeta + 1.0) * (std::sqrt(static_cast<double>(set_size) * ratio * l) + 2.0 * ratio * l);
}

/// Repeatedly samples `truth` under budget N and counts rounds in which
/// |Σ_{(i,j)∈S} (Y − M*)_{ij}| exceeds parsum_bound().
inline ConcentrationReport empirical_parsum_check(const Matrix& truth, std::size_t budget,
                                                  const NoiseSpec& noise,
                                                  std::span<const std::pair<std::size_t, std::size_t>> set,
                                                  std::size_t trials, std::uint64_t seed, double zeta = 0.5) {
    if (set.empty()) throw std::invalid_argument("empirical_parsum_check needs a nonempty index set");
    if (trials < 1) throw std::invalid_argument("empirical_parsum_check needs at least one trial");
    for (const auto& [i, j] : set) {
        if (i >= truth.rows() || j >= truth.cols()) throw DimensionError("index set outside the matrix");
    }
    ConcentrationReport report;
    report.trials = trials;
    report.bound_used = parsum_bound(set.size(), truth.rows(), truth.cols(), budget, zeta);
    std::mt19937_64 seeds(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const Matrix y = aggregate_y(sample_poissonized(truth, budget, noise, seeds()));
        double dev = 0.0;
        for (const auto& [i, j] : set) dev += y(i, j) - truth(i, j);
        dev = std::abs(dev);
        report.max_observed_deviation = std::max(report.max_observed_deviation, dev);
        if (dev > report.bound_used) ++report.violations;
    }
    return report;
}

}  // namespace biso
