#pragma once

// Hand-built noiseless instances and an exhaustive pair-scan reference for
// the comparison graph.

#include <string>
#include <vector>

#include "biso/core.hpp"
#include "biso/estimators.hpp"

namespace fixtures {

struct RowInstance {
    std::string name;
    biso::GroundTruth truth;
};

inline std::vector<RowInstance> graph_instances() {
    using biso::Matrix;
    using biso::Permutation;
    const Matrix a = Matrix::from_rows({
        {0.0, 0.1, 0.2, 0.6},
        {0.1, 0.3, 0.5, 0.8},
        {0.4, 0.6, 0.9, 1.0},
    });
    const Matrix b = Matrix::from_rows({
        {0.00, 0.05, 0.10, 0.30, 0.35},
        {0.05, 0.10, 0.20, 0.40, 0.50},
        {0.10, 0.30, 0.45, 0.50, 0.70},
        {0.20, 0.40, 0.60, 0.80, 0.90},
        {0.25, 0.55, 0.75, 0.95, 1.00},
    });
    // Ties between rows exercise the no-edge side of soundness.
    const Matrix c = Matrix::from_rows({
        {0.0, 0.0, 0.5, 0.5},
        {0.0, 0.0, 0.5, 0.5},
        {0.2, 0.7, 0.7, 1.0},
    });
    return {
        {"3x4", {a, Permutation({2, 0, 1}), Permutation({3, 1, 0, 2})}},
        {"5x5", {b, Permutation({3, 0, 4, 1, 2}), Permutation({1, 4, 0, 2, 3})}},
        {"3x4-tied", {c, Permutation({1, 2, 0}), Permutation::identity(4)}},
    };
}

/// Edge set from the definition, one pair at a time.
inline std::vector<std::vector<bool>> reference_edges(const biso::Matrix& y, const biso::Blocking& blocking,
                                                      const biso::ThresholdParams& params) {
    const std::size_t n = y.rows();
    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            double su = 0.0, sv = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) {
                su += y(u, j);
                sv += y(v, j);
            }
            bool e = sv - su > params.eta();
            for (const auto& block : blocking.blocks) {
                double bu = 0.0, bv = 0.0;
                for (std::size_t j : block) {
                    bu += y(u, j);
                    bv += y(v, j);
                }
                if (bv - bu > params.eta_k(block.size())) e = true;
            }
            edge[u][v] = e;
        }
    }
    return edge;
}

struct GraphAudit {
    std::size_t edges = 0;
    std::size_t unsound = 0;       // edges against the true order
    std::size_t missing = 0;       // pairs separated by 2·eta (or 2·eta_k) without an edge
    std::size_t separated = 0;     // pairs that had to carry an edge
};

/// Builds the row graph of the noiseless observable matrix with the given
/// thresholds and audits it against the true row order.
inline GraphAudit audit_row_graph(const biso::GroundTruth& truth, const biso::ThresholdParams& params) {
    const biso::Matrix y = truth.matrix();
    const auto blocking = biso::block_columns(y, params);
    const auto g = biso::build_row_graph(y, blocking, params);
    GraphAudit audit;
    audit.edges = g.edge_count();
    const std::size_t n = y.rows();
    const auto full = biso::row_sums(y);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            if (g.has_edge(u, v) && !(truth.row_perm(u) < truth.row_perm(v))) ++audit.unsound;
            bool must = full[v] - full[u] > 2.0 * params.eta();
            for (const auto& block : blocking.blocks) {
                double bu = 0.0, bv = 0.0;
                for (std::size_t j : block) {
                    bu += y(u, j);
                    bv += y(v, j);
                }
                if (bv - bu > 2.0 * params.eta_k(block.size())) must = true;
            }
            if (must) {
                ++audit.separated;
                if (!g.has_edge(u, v)) ++audit.missing;
            }
        }
    }
    return audit;
}

/// Threshold constants from "0⁺" up to the default 16.
inline std::vector<double> audit_scales() { return {1e-9, 1e-3, 0.01, 0.03, 0.1, 0.3, 1.0, 16.0}; }

/// Square 16×16 instance whose row and column sums differ by more than
/// 2·eta and 2·tau at threshold scale 0.01 with zeta = 0 and N = n².
inline biso::GroundTruth separated_instance(std::uint64_t seed) {
    const std::size_t n = 16;
    biso::Matrix base(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) base(i, j) = static_cast<double>(i + j) / (2.0 * (n - 1));
    }
    std::mt19937_64 rng(seed);
    auto rows = biso::Permutation::random(n, rng);
    auto cols = biso::Permutation::random(n, rng);
    return {std::move(base), std::move(rows), std::move(cols)};
}

inline constexpr double kSeparatedScale = 0.01;

}  // namespace fixtures
