#pragma once

// Least-squares projections onto monotone cones.
//
// pava() solves the one-dimensional problem exactly. project_biso() projects
// onto the bivariate isotonic class (rows and columns nondecreasing, entries
// in [0, 1]) with one of two engines:
//
//  - dykstra: Dykstra's algorithm over three convex sets, the row cone, the
//    column cone and the box. Each set projection is exact, so the iterates
//    converge to the projection onto the intersection. Convergence is slow on
//    large noisy inputs.
//  - threshold: exact solver. For every level t the set {x* > t} is the
//    upper set U minimising sum_{v in U} (t - y_v); on a grid an upper set is
//    a staircase, found by dynamic programming in linear time. Bisecting the
//    value range region by region pins every entry to within ~1e-13 of the
//    unconstrained isotonic fit, whose clamp to [0, 1] is the projection.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "biso/core.hpp"

namespace biso {

enum class ProjectionMethod { threshold, dykstra };

struct ProjectionConfig {
    double tol = 1e-8;             // dykstra: max-abs change of the iterate over one sweep
    std::size_t max_iters = 2000;  // dykstra: sweep cap
    ProjectionMethod method = ProjectionMethod::threshold;

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("projection tolerance must be positive");
        if (max_iters < 1) throw std::invalid_argument("projection needs at least one sweep");
    }
};

/// `sweeps` counts Dykstra sweeps, or bisection levels for the threshold
/// engine.
struct Projection {
    Matrix matrix;
    bool converged = false;
    std::size_t sweeps = 0;
};

namespace detail {

// In-place isotonic regression of v with scratch storage reused across calls.
class PoolAdjacentViolators {
public:
    void operator()(std::span<double> v) {
        means_.clear();
        weights_.clear();
        for (double x : v) {
            double mean = x;
            std::size_t weight = 1;
            while (!means_.empty() && means_.back() >= mean) {
                const std::size_t w = weights_.back();
                mean = (means_.back() * static_cast<double>(w) + mean * static_cast<double>(weight)) /
                       static_cast<double>(w + weight);
                weight += w;
                means_.pop_back();
                weights_.pop_back();
            }
            means_.push_back(mean);
            weights_.push_back(weight);
        }
        std::size_t k = 0;
        for (std::size_t b = 0; b < means_.size(); ++b) {
            for (std::size_t r = 0; r < weights_[b]; ++r) v[k++] = means_[b];
        }
    }

private:
    std::vector<double> means_;
    std::vector<std::size_t> weights_;
};

}  // namespace detail

/// Nondecreasing vector closest to `v` in least squares.
inline std::vector<double> pava(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("pava of an empty vector");
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("pava input must be finite");
    }
    std::vector<double> out(v.begin(), v.end());
    detail::PoolAdjacentViolators{}(out);
    return out;
}

namespace detail {

inline void transpose_into(std::span<const double> src, std::span<double> dst, std::size_t rows,
                           std::size_t cols) {
    constexpr std::size_t tile = 32;
    for (std::size_t i0 = 0; i0 < rows; i0 += tile) {
        for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
            const std::size_t i1 = std::min(rows, i0 + tile);
            const std::size_t j1 = std::min(cols, j0 + tile);
            for (std::size_t i = i0; i < i1; ++i) {
                for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
            }
        }
    }
}

// Largest decrease between adjacent entries along a row or column.
inline double max_violation(std::span<const double> x, std::size_t rows, std::size_t cols) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = x[i * cols + j];
            if (j + 1 < cols) worst = std::max(worst, v - x[i * cols + j + 1]);
            if (i + 1 < rows) worst = std::max(worst, v - x[(i + 1) * cols + j]);
        }
    }
    return worst;
}

// Stops once a sweep moves no entry by tol or more and the iterate is
// monotone up to tol / 2, so a second projection moves it by less than tol.
inline Projection project_dykstra(const Matrix& y, const ProjectionConfig& cfg) {
    const std::size_t rows = y.rows();
    const std::size_t cols = y.cols();
    const std::size_t count = y.size();
    // Column-cone state lives in transposed layout so both cones run PAVA on
    // contiguous memory.
    std::vector<double> x(y.values().begin(), y.values().end());
    std::vector<double> work(count), work_t(count), x_t(count);
    std::vector<double> row_corr(count, 0.0), col_corr_t(count, 0.0), box_corr(count, 0.0);
    PoolAdjacentViolators pav;

    Projection result{y, false, 0};
    auto prev = result.matrix.values();
    for (std::size_t sweep = 1; sweep <= cfg.max_iters; ++sweep) {
        for (std::size_t k = 0; k < count; ++k) work[k] = x[k] + row_corr[k];
        for (std::size_t i = 0; i < rows; ++i) pav(std::span(work).subspan(i * cols, cols));
        for (std::size_t k = 0; k < count; ++k) row_corr[k] += x[k] - work[k];

        transpose_into(work, x_t, rows, cols);
        for (std::size_t k = 0; k < count; ++k) work_t[k] = x_t[k] + col_corr_t[k];
        for (std::size_t j = 0; j < cols; ++j) pav(std::span(work_t).subspan(j * rows, rows));
        for (std::size_t k = 0; k < count; ++k) col_corr_t[k] += x_t[k] - work_t[k];
        transpose_into(work_t, work, cols, rows);

        double change = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            const double shifted = work[k] + box_corr[k];
            const double clamped = std::clamp(shifted, 0.0, 1.0);
            box_corr[k] = shifted - clamped;
            x[k] = clamped;
            change = std::max(change, std::abs(clamped - prev[k]));
            prev[k] = clamped;
        }

        result.sweeps = sweep;
        if (change < cfg.tol && max_violation(x, rows, cols) <= cfg.tol / 2.0) {
            result.converged = true;
            break;
        }
    }
    return result;
}

// Threshold engine.
//
// A region holds the entries whose fitted value lies in (lo, hi]. Within each
// row those entries are contiguous, so a region is a list of row segments
// [begin, end). An upper set restricted to a region keeps a suffix
// [cut, end) of every segment with cuts nonincreasing down the rows; rows
// outside the region impose no extra constraint.
class StaircaseSolver {
public:
    explicit StaircaseSolver(const Matrix& y) : y_(y) {}

    Matrix solve(std::size_t& levels) {
        const auto v = y_.values();
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        const double lo = *mn;
        const double hi = *mx;
        Matrix out(y_.rows(), y_.cols());

        Region all{lo - std::max(1.0, hi - lo), hi, {}};
        for (std::size_t i = 0; i < y_.rows(); ++i) all.segs.push_back({i, 0, y_.cols()});
        std::vector<Region> active;
        active.push_back(std::move(all));

        const double resolution = 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi));
        levels = 0;
        while (!active.empty()) {
            ++levels;
            std::vector<Region> next;
            for (auto& r : active) {
                if (finished(r, resolution)) {
                    finalize(r, out);
                    continue;
                }
                split(r, next);
            }
            active = std::move(next);
        }
        return out;
    }

private:
    struct Segment {
        std::size_t row;
        std::size_t begin;
        std::size_t end;
    };
    struct Region {
        double lo;
        double hi;
        std::vector<Segment> segs;
    };

    bool finished(const Region& r, double resolution) const {
        if (r.hi - r.lo <= resolution) return true;
        // A region whose entries all share one value is already a level set.
        const double first = y_(r.segs.front().row, r.segs.front().begin);
        for (const auto& s : r.segs) {
            for (std::size_t j = s.begin; j < s.end; ++j) {
                if (y_(s.row, j) != first) return false;
            }
        }
        return true;
    }

    // The region is a union of level sets whose values lie within the
    // resolution of each other; their pooled mean is within it too.
    void finalize(const Region& r, Matrix& out) const {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& s : r.segs) {
            for (std::size_t j = s.begin; j < s.end; ++j) sum += y_(s.row, j);
            count += s.end - s.begin;
        }
        const double value = sum / static_cast<double>(count);
        for (const auto& s : r.segs) {
            for (std::size_t j = s.begin; j < s.end; ++j) out(s.row, j) = value;
        }
    }

    void split(const Region& r, std::vector<Region>& next) {
        const double t = r.lo + 0.5 * (r.hi - r.lo);
        const std::size_t nseg = r.segs.size();

        // dp values and argmins, one slot per cut option, segment-major.
        offsets_.assign(nseg + 1, 0);
        for (std::size_t k = 0; k < nseg; ++k) {
            offsets_[k + 1] = offsets_[k] + (r.segs[k].end - r.segs[k].begin + 1);
        }
        dp_.assign(offsets_[nseg], 0.0);
        choice_.assign(offsets_[nseg], 0);
        suffix_best_.assign(offsets_[nseg], 0.0);
        suffix_arg_.assign(offsets_[nseg], 0);

        for (std::size_t k = 0; k < nseg; ++k) {
            const auto& s = r.segs[k];
            const std::size_t width = s.end - s.begin;
            double* dp = dp_.data() + offsets_[k];
            // dp[c] for cut = begin + c: cost of keeping [cut, end) above t.
            double tail = 0.0;
            dp[width] = 0.0;
            for (std::size_t c = width; c-- > 0;) {
                tail += t - y_(s.row, s.begin + c);
                dp[c] = tail;
            }
            if (k > 0) {
                const auto& p = r.segs[k - 1];
                const double* best = suffix_best_.data() + offsets_[k - 1];
                const std::size_t* arg = suffix_arg_.data() + offsets_[k - 1];
                std::size_t* ch = choice_.data() + offsets_[k];
                for (std::size_t c = 0; c <= width; ++c) {
                    const std::size_t cut = s.begin + c;
                    const std::size_t from =
                        std::min(cut > p.begin ? cut - p.begin : 0, p.end - p.begin);
                    dp[c] += best[from];
                    ch[c] = arg[from];
                }
            }
            double* best = suffix_best_.data() + offsets_[k];
            std::size_t* arg = suffix_arg_.data() + offsets_[k];
            best[width] = dp[width];
            arg[width] = width;
            for (std::size_t c = width; c-- > 0;) {
                // Strict: ties keep the larger cut, i.e. the smaller upper set.
                if (dp[c] < best[c + 1]) {
                    best[c] = dp[c];
                    arg[c] = c;
                } else {
                    best[c] = best[c + 1];
                    arg[c] = arg[c + 1];
                }
            }
        }

        cuts_.assign(nseg, 0);
        {
            const std::size_t last = nseg - 1;
            std::size_t c = suffix_arg_[offsets_[last]];
            for (std::size_t k = nseg; k-- > 0;) {
                cuts_[k] = c;
                if (k > 0) c = choice_[offsets_[k] + c];
            }
        }

        Region lower{r.lo, t, {}};
        Region upper{t, r.hi, {}};
        for (std::size_t k = 0; k < nseg; ++k) {
            const auto& s = r.segs[k];
            const std::size_t cut = s.begin + cuts_[k];
            if (cut > s.begin) lower.segs.push_back({s.row, s.begin, cut});
            if (cut < s.end) upper.segs.push_back({s.row, cut, s.end});
        }
        if (!lower.segs.empty()) next.push_back(std::move(lower));
        if (!upper.segs.empty()) next.push_back(std::move(upper));
    }

    const Matrix& y_;
    std::vector<std::size_t> offsets_;
    std::vector<double> dp_;
    std::vector<std::size_t> choice_;
    std::vector<double> suffix_best_;
    std::vector<std::size_t> suffix_arg_;
    std::vector<std::size_t> cuts_;
};

inline Projection project_threshold(const Matrix& y) {
    std::size_t levels = 0;
    Matrix fit = StaircaseSolver(y).solve(levels);
    for (double& v : fit.values()) v = std::clamp(v, 0.0, 1.0);
    return {std::move(fit), true, levels};
}

}  // namespace detail

/// Least-squares projection of `y` onto the bivariate isotonic class.
/// A Dykstra result with converged == false is still the last iterate.
inline Projection project_biso(const Matrix& y, const ProjectionConfig& cfg = {}) {
    cfg.validate();
    if (!y.all_finite()) throw std::invalid_argument("projection input must be finite");
    return cfg.method == ProjectionMethod::dykstra ? detail::project_dykstra(y, cfg)
                                                   : detail::project_threshold(y);
}

/// Projection onto the matrices that are bivariate isotonic once rows are
/// reordered by `row_rank` and columns by `col_rank`: un-permute, project,
/// re-permute.
inline Projection project_biso_permuted(const Matrix& y, const Permutation& row_rank,
                                        const Permutation& col_rank,
                                        const ProjectionConfig& cfg = {}) {
    auto proj = project_biso(apply_permutations(y, row_rank.inverse(), col_rank.inverse()), cfg);
    proj.matrix = apply_permutations(proj.matrix, row_rank, col_rank);
    return proj;
}

}  // namespace biso
