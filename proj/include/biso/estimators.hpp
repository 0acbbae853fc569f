#pragma once

// Permutation estimation and the estimate-then-project pipelines.
//
// Permutation conventions: an estimated row ranking `r` maps an observed row
// index to its position in the estimated increasing order, so the estimate is
// project_biso_permuted(Y, r_rows, r_cols). The column presort returned by
// column_presort() is the opposite direction (position -> column) because it
// is used to walk columns in order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <queue>
#include <random>
#include <vector>

#include "biso/core.hpp"
#include "biso/isotonic.hpp"
#include "biso/sampling.hpp"

namespace biso {

/// Noise scale and problem sizes from which the sorting thresholds derive.
///
/// With L = log(n1 n2) and m = n1 n2 / N:
///   tau      = c (ζ+1) ( sqrt(n1² n2 / N · L) + m L )   column-sum bin width
///   beta     = n2 sqrt(n1 / N · L)                      minimum block size
///   eta_k(s) = c (ζ+1) ( sqrt(n1 n2 s / N · L) + m L )   block of s columns
///   eta      = eta_k(n2)                                 full row sums
/// The leading constant c defaults to 16.
struct ThresholdParams {
    double zeta = 0.5;
    std::size_t n1 = 1;
    std::size_t n2 = 1;
    std::size_t budget = 1;
    double scale = 16.0;

    double log_term() const { return std::log(static_cast<double>(n1) * static_cast<double>(n2)); }

    double missing_term() const {
        return static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(budget) *
               log_term();
    }

    double tau() const {
        const double d1 = static_cast<double>(n1);
        const double d2 = static_cast<double>(n2);
        return scale * (zeta + 1.0) *
               (std::sqrt(d1 * d1 * d2 / static_cast<double>(budget) * log_term()) + missing_term());
    }

    double beta() const {
        return static_cast<double>(n2) *
               std::sqrt(static_cast<double>(n1) / static_cast<double>(budget) * log_term());
    }

    double eta_k(std::size_t block_size) const {
        const double d1 = static_cast<double>(n1);
        const double d2 = static_cast<double>(n2);
        return scale * (zeta + 1.0) *
               (std::sqrt(d1 * d2 * static_cast<double>(block_size) / static_cast<double>(budget) *
                          log_term()) +
                missing_term());
    }

    double eta() const { return eta_k(n2); }

    ThresholdParams transposed() const { return {zeta, n2, n1, budget, scale}; }
};

/// Column sums and the order that sorts them.
struct ColumnOrder {
    std::vector<double> sums;
    Permutation presort;  // presort(k) = column at sorted position k
};

/// Column partition from the blocking step. Blocks list columns in presort
/// order and are themselves ordered by their first column's position.
struct Blocking {
    Permutation presort;
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<bool> aggregated;
};

/// Directed graph on row indices; an edge u -> v asserts row u precedes v.
class ComparisonGraph {
public:
    explicit ComparisonGraph(std::size_t n = 0) : out_(n) {}

    std::size_t size() const noexcept { return out_.size(); }

    void add_edge(std::size_t u, std::size_t v) {
        if (u == v) throw std::invalid_argument("comparison graph has no self-edges");
        out_.at(u).push_back(v);
        ++edges_;
    }

    std::span<const std::size_t> successors(std::size_t u) const { return out_[u]; }

    bool has_edge(std::size_t u, std::size_t v) const {
        return std::find(out_[u].begin(), out_[u].end(), v) != out_[u].end();
    }

    std::size_t edge_count() const noexcept { return edges_; }

private:
    std::vector<std::vector<std::size_t>> out_;
    std::size_t edges_ = 0;
};

/// Ranks of `scores` in nondecreasing order, ties broken by smaller index.
inline Permutation ranks_of(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return Permutation(std::move(order)).inverse();
}

inline std::vector<double> row_sums(const Matrix& y) {
    std::vector<double> s(y.rows(), 0.0);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        for (double v : y.row(i)) s[i] += v;
    }
    return s;
}

inline std::vector<double> column_sums(const Matrix& y) {
    std::vector<double> s(y.cols(), 0.0);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        const auto r = y.row(i);
        for (std::size_t j = 0; j < y.cols(); ++j) s[j] += r[j];
    }
    return s;
}

inline ColumnOrder column_presort(const Matrix& y) {
    auto sums = column_sums(y);
    std::vector<std::size_t> order(sums.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sums[a] < sums[b]; });
    return {std::move(sums), Permutation(std::move(order))};
}

/// Bins columns by their sums into intervals of width `tau`
/// ((-inf, τ), [τ, 2τ), ..., [(K-1)τ, inf) with K = ceil(n2 / τ)), keeps bins
/// of at least `beta` columns, and merges the remaining small bins.
///
/// Small bins are merged greedily in presort order, skipping over large bins:
/// a group closes once it holds at least beta/2 columns, and a trailing group
/// below beta/2 joins the last closed group. If no group ever closes, all
/// small bins form a single block.
inline Blocking block_columns(const Matrix& y, double tau, double beta) {
    if (!(tau > 0.0)) throw std::invalid_argument("blocking needs a positive bin width");
    const auto order = column_presort(y);
    const std::size_t n2 = y.cols();
    const double bins = std::max(1.0, std::ceil(static_cast<double>(n2) / tau));

    auto bin_of = [&](double c) {
        const double k = std::floor(c / tau);
        return std::clamp(k, 0.0, bins - 1.0);
    };

    // Contiguous runs in presort order sharing a bin.
    std::vector<std::vector<std::size_t>> runs;
    double current = -1.0;
    for (std::size_t k = 0; k < n2; ++k) {
        const std::size_t col = order.presort(k);
        const double b = bin_of(order.sums[col]);
        if (runs.empty() || b != current) {
            runs.emplace_back();
            current = b;
        }
        runs.back().push_back(col);
    }

    // Each output block remembers the presort position of its first column.
    struct Pending {
        std::size_t first_pos;
        std::vector<std::size_t> cols;
        bool aggregated;
    };
    std::vector<Pending> out;
    std::vector<std::size_t> closed;  // indices into `out` of closed small groups
    Pending group{0, {}, true};
    std::size_t pos = 0;
    for (auto& run : runs) {
        const std::size_t start = pos;
        pos += run.size();
        if (static_cast<double>(run.size()) >= beta) {
            out.push_back({start, std::move(run), false});
            continue;
        }
        if (group.cols.empty()) group.first_pos = start;
        group.cols.insert(group.cols.end(), run.begin(), run.end());
        if (static_cast<double>(group.cols.size()) >= beta / 2.0) {
            closed.push_back(out.size());
            out.push_back(std::move(group));
            group = Pending{0, {}, true};
        }
    }
    if (!group.cols.empty()) {
        if (closed.empty()) {
            out.push_back(std::move(group));
        } else {
            auto& last = out[closed.back()].cols;
            last.insert(last.end(), group.cols.begin(), group.cols.end());
        }
    }

    std::stable_sort(out.begin(), out.end(),
                     [](const Pending& a, const Pending& b) { return a.first_pos < b.first_pos; });
    Blocking result{order.presort, {}, {}};
    for (auto& p : out) {
        result.blocks.push_back(std::move(p.cols));
        result.aggregated.push_back(p.aggregated);
    }
    return result;
}

inline Blocking block_columns(const Matrix& y, const ThresholdParams& params) {
    return block_columns(y, params.tau(), params.beta());
}

/// Edge u -> v iff S(v) − S(u) > eta, or S_B(v) − S_B(u) > eta_k(|B|) for
/// some block B, where S and S_B are full and partial row sums of `y`.
inline ComparisonGraph build_row_graph(const Matrix& y, const Blocking& blocking,
                                       const ThresholdParams& params) {
    const std::size_t n1 = y.rows();
    const auto full = row_sums(y);
    const double eta = params.eta();

    const std::size_t nblocks = blocking.blocks.size();
    std::vector<double> partial(nblocks * n1, 0.0);  // block-major
    std::vector<double> block_eta(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) {
        block_eta[k] = params.eta_k(blocking.blocks[k].size());
        for (std::size_t i = 0; i < n1; ++i) {
            double s = 0.0;
            for (std::size_t j : blocking.blocks[k]) s += y(i, j);
            partial[k * n1 + i] = s;
        }
    }

    ComparisonGraph g(n1);
    for (std::size_t u = 0; u < n1; ++u) {
        for (std::size_t v = 0; v < n1; ++v) {
            if (u == v) continue;
            bool edge = full[v] - full[u] > eta;
            for (std::size_t k = 0; !edge && k < nblocks; ++k) {
                edge = partial[k * n1 + v] - partial[k * n1 + u] > block_eta[k];
            }
            if (edge) g.add_edge(u, v);
        }
    }
    return g;
}

/// Kahn's algorithm. Among ready vertices the one with the smallest
/// `priority` is released first, ties (or an empty `priority`) going to the
/// smaller index. Returns the rank of each vertex, or the identity if the
/// graph has a cycle.
inline Permutation topological_sort(const ComparisonGraph& g, std::span<const double> priority = {}) {
    const std::size_t n = g.size();
    if (!priority.empty() && priority.size() != n) {
        throw DimensionError("topological_sort: one priority per vertex");
    }
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v : g.successors(u)) ++indegree[v];
    }
    auto later = [&](std::size_t a, std::size_t b) {
        if (!priority.empty() && priority[a] != priority[b]) return priority[a] > priority[b];
        return a > b;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
    for (std::size_t u = 0; u < n; ++u) {
        if (indegree[u] == 0) ready.push(u);
    }
    std::vector<std::size_t> rank(n);
    std::size_t next = 0;
    while (!ready.empty()) {
        const std::size_t u = ready.top();
        ready.pop();
        rank[u] = next++;
        for (std::size_t v : g.successors(u)) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    if (next != n) return Permutation::identity(n);
    return Permutation(std::move(rank));
}

/// How the topological sort orders vertices the graph leaves unordered.
enum class TieBreak {
    index,    // smaller row index first
    row_sum,  // smaller full row sum of the comparison sample first
};

struct PermutationEstimate {
    Permutation rows;  // observed row -> estimated position
    Permutation cols;
};

/// Row ranking from two independent observation matrices: blocking on
/// `y_block`, comparison graph on `y_sum`.
inline Permutation tds_row_ranks(const Matrix& y_block, const Matrix& y_sum,
                                 const ThresholdParams& params, TieBreak tie = TieBreak::index) {
    if (y_block.rows() != y_sum.rows() || y_block.cols() != y_sum.cols()) {
        throw DimensionError("tds: observation matrices differ in shape");
    }
    if (y_block.rows() == 1) return Permutation::identity(1);
    if (!(params.tau() > 0.0)) {
        // n1 n2 == 1 or a zero scale: nothing separates the rows.
        return Permutation::identity(y_block.rows());
    }
    const auto blocking = block_columns(y_block, params);
    const auto graph = build_row_graph(y_sum, blocking, params);
    if (tie == TieBreak::row_sum) return topological_sort(graph, row_sums(y_sum));
    return topological_sort(graph);
}

/// Two-dimensional sorting: row and column rankings from two independent
/// subsamples. Columns repeat the row procedure on transposed matrices.
inline PermutationEstimate tds_permutations(const ObservationSet& obs_block,
                                            const ObservationSet& obs_sum, double zeta,
                                            double scale = 16.0, TieBreak tie = TieBreak::index) {
    require_budget(obs_block);
    require_budget(obs_sum);
    const Matrix y1 = aggregate_y(obs_block);
    const Matrix y2 = aggregate_y(obs_sum);
    const ThresholdParams params{zeta, obs_block.n1, obs_block.n2, obs_block.nominal_n, scale};
    auto rows = tds_row_ranks(y1, y2, params, tie);
    auto cols = tds_row_ranks(y1.transposed(), y2.transposed(), params.transposed(), tie);
    return {std::move(rows), std::move(cols)};
}

struct EstimatorConfig {
    double zeta = 0.5;
    double threshold_scale = 16.0;
    TieBreak tie_break = TieBreak::index;
    ProjectionConfig projection;
    std::uint64_t seed = 0;
};

struct Estimate {
    Matrix matrix;
    Permutation row_rank;
    Permutation col_rank;
    bool converged = true;
};

namespace detail {

inline Estimate project_with(const Matrix& y, Permutation rows, Permutation cols,
                             const ProjectionConfig& cfg) {
    auto proj = project_biso_permuted(y, rows, cols, cfg);
    return {std::move(proj.matrix), std::move(rows), std::move(cols), proj.converged};
}

}  // namespace detail

/// Three-way split: blocking sample, row-sum sample, projection sample.
inline Estimate estimate_tds(const ObservationSet& obs, const EstimatorConfig& cfg) {
    require_budget(obs);
    const auto parts = split_observations(obs, 3, cfg.seed);
    auto perms = tds_permutations(parts[0], parts[1], cfg.zeta, cfg.threshold_scale, cfg.tie_break);
    return detail::project_with(aggregate_y(parts[2]), std::move(perms.rows), std::move(perms.cols),
                                cfg.projection);
}

/// Baseline: rank rows and columns by their full sums on one half of the
/// sample, project the other half.
inline Estimate estimate_borda(const ObservationSet& obs, const EstimatorConfig& cfg) {
    require_budget(obs);
    const auto parts = split_observations(obs, 2, cfg.seed);
    const Matrix y1 = aggregate_y(parts[0]);
    return detail::project_with(aggregate_y(parts[1]), ranks_of(row_sums(y1)),
                                ranks_of(column_sums(y1)), cfg.projection);
}

/// Projection along the true permutations, no splitting.
inline Estimate estimate_oracle(const ObservationSet& obs, const Permutation& row_perm,
                                const Permutation& col_perm, const EstimatorConfig& cfg) {
    require_budget(obs);
    return detail::project_with(aggregate_y(obs), row_perm, col_perm, cfg.projection);
}

/// Size of the Poissonized subsample for an exactly-N sample set: Poi(N/2)
/// drawn from `seed`.
inline std::size_t draw_subsample_size(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::poisson_distribution<std::size_t> dist(static_cast<double>(n) / 2.0);
    return dist(rng);
}

using PoissonEstimator = std::function<Matrix(const ObservationSet&, std::uint64_t seed)>;

/// Runs a Poissonized estimator on a fixed-size sample: draws Ñ ~ Poi(N/2);
/// if Ñ <= N, feeds a uniformly chosen Ñ-subset with budget N/2 to `inner`,
/// otherwise returns the zero matrix.
inline Matrix estimate_exact_n(const ObservationSet& obs_exact, std::uint64_t seed,
                               const PoissonEstimator& inner) {
    const std::size_t n = obs_exact.samples.size();
    if (n != obs_exact.nominal_n) {
        throw std::invalid_argument("exact-N estimation needs exactly N samples");
    }
    const std::size_t keep = draw_subsample_size(n, seed);
    if (keep > n) return Matrix(obs_exact.n1, obs_exact.n2, 0.0);

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < keep; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(idx[k], idx[pick(rng)]);
    }
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
    ObservationSet sub{obs_exact.n1, obs_exact.n2, std::max<std::size_t>(1, n / 2),
                       obs_exact.observe_prob, {}};
    sub.samples.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) sub.samples.push_back(obs_exact.samples[idx[k]]);
    return inner(sub, rng());
}

inline Matrix estimate_exact_n(const ObservationSet& obs_exact, const EstimatorConfig& cfg) {
    return estimate_exact_n(obs_exact, cfg.seed, [&](const ObservationSet& sub, std::uint64_t s) {
        auto inner_cfg = cfg;
        inner_cfg.seed = s;
        return estimate_tds(sub, inner_cfg).matrix;
    });
}

}  // namespace biso
