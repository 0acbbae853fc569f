#pragma once

// Dense matrices, permutations, bivariate isotonic ground truths and the
// error metrics shared by every estimator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace biso {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-major real matrix with at least one row and one column.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) {
            throw DimensionError("matrix dimensions must be positive");
        }
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0) {
            throw DimensionError("matrix dimensions must be positive");
        }
        if (data_.size() != rows * cols) {
            throw DimensionError("entry count does not match " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
        }
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty() || rows.front().empty()) {
            throw DimensionError("matrix dimensions must be positive");
        }
        const std::size_t cols = rows.front().size();
        std::vector<double> data;
        data.reserve(rows.size() * cols);
        for (const auto& r : rows) {
            if (r.size() != cols) {
                throw DimensionError("ragged rows");
            }
            data.insert(data.end(), r.begin(), r.end());
        }
        return Matrix(rows.size(), cols, std::move(data));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                t(j, i) = (*this)(i, j);
            }
        }
        return t;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// A bijection on {0, ..., n-1}; position i holds the image of i.
class Permutation {
public:
    Permutation() = default;

    explicit Permutation(std::vector<std::size_t> mapping) : map_(std::move(mapping)) {
        std::vector<bool> seen(map_.size(), false);
        for (std::size_t v : map_) {
            if (v >= map_.size() || seen[v]) {
                throw std::invalid_argument("mapping is not a permutation");
            }
            seen[v] = true;
        }
    }

    static Permutation identity(std::size_t n) {
        std::vector<std::size_t> m(n);
        std::iota(m.begin(), m.end(), std::size_t{0});
        return Permutation(std::move(m));
    }

    template <class Rng>
    static Permutation random(std::size_t n, Rng& rng) {
        std::vector<std::size_t> m(n);
        std::iota(m.begin(), m.end(), std::size_t{0});
        // Fisher-Yates with an explicit draw keeps the result independent of
        // the standard library's shuffle implementation.
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(m[i - 1], m[pick(rng)]);
        }
        return Permutation(std::move(m));
    }

    std::size_t size() const noexcept { return map_.size(); }
    std::size_t operator()(std::size_t i) const noexcept { return map_[i]; }
    std::span<const std::size_t> mapping() const noexcept { return map_; }

    Permutation inverse() const {
        std::vector<std::size_t> inv(map_.size());
        for (std::size_t i = 0; i < map_.size(); ++i) {
            inv[map_[i]] = i;
        }
        return Permutation(std::move(inv));
    }

    /// (this ∘ inner)(i) = this(inner(i)).
    Permutation compose(const Permutation& inner) const {
        if (inner.size() != size()) {
            throw DimensionError("composing permutations of different lengths");
        }
        std::vector<std::size_t> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] = map_[inner(i)];
        }
        return Permutation(std::move(out));
    }

    bool is_identity() const {
        for (std::size_t i = 0; i < map_.size(); ++i) {
            if (map_[i] != i) return false;
        }
        return true;
    }

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::size_t> map_;
};

/// Returns M(π, σ), whose entry (i, j) is M(π(i), σ(j)).
inline Matrix apply_permutations(const Matrix& m, const Permutation& row_perm,
                                 const Permutation& col_perm) {
    if (row_perm.size() != m.rows() || col_perm.size() != m.cols()) {
        throw DimensionError("permutation lengths do not match matrix dimensions");
    }
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto src = m.row(row_perm(i));
        auto dst = out.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            dst[j] = src[col_perm(j)];
        }
    }
    return out;
}

/// Membership in the bivariate isotonic class: entries in [0, 1], rows and
/// columns nondecreasing, all up to `tol`.
inline bool is_biso(const Matrix& m, double tol = 0.0) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (!(v >= -tol && v <= 1.0 + tol)) return false;
            if (j + 1 < m.cols() && m(i, j + 1) < v - tol) return false;
            if (i + 1 < m.rows() && m(i + 1, j) < v - tol) return false;
        }
    }
    return true;
}

/// Strong stochastic transitivity in the canonical order: square, skew
/// symmetric (M + Mᵀ = 1), rows nondecreasing and columns nonincreasing.
inline bool is_sst(const Matrix& m, double tol = 0.0) {
    if (m.rows() != m.cols()) return false;
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m(i, j);
            if (!(v >= -tol && v <= 1.0 + tol)) return false;
            if (std::abs(v + m(j, i) - 1.0) > tol) return false;
            if (j + 1 < n && m(i, j + 1) < v - tol) return false;
            if (i + 1 < n && m(i + 1, j) > v + tol) return false;
        }
    }
    return true;
}

/// A bivariate isotonic base matrix together with the permutations that hide
/// its order. The observable matrix is base(row_perm, col_perm).
struct GroundTruth {
    Matrix base;
    Permutation row_perm;
    Permutation col_perm;

    Matrix matrix() const { return apply_permutations(base, row_perm, col_perm); }
};

/// SST ground truth: one permutation acts on both rows and columns.
struct SstTruth {
    Matrix base;
    Permutation perm;

    Matrix matrix() const { return apply_permutations(base, perm, perm); }
};

namespace detail {

// Normalises into [0, 1] by min/max; a degenerate range leaves values as is.
inline void rescale_unit(Matrix& m) {
    auto v = m.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double min = *lo;
    const double range = *hi - *lo;
    if (!(range > 0.0)) return;
    for (double& x : v) {
        x = (x - min) / range;
    }
    // Guard the endpoints against rounding.
    for (double& x : v) {
        x = std::clamp(x, 0.0, 1.0);
    }
}

}  // namespace detail

/// Random bivariate isotonic matrix from a normalised two-dimensional
/// cumulative sum of uniform increments, hidden by uniform permutations.
inline GroundTruth gen_random_biso(std::size_t n1, std::size_t n2, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix base(n1, n2);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            base(i, j) = unif(rng);
        }
    }
    if (n1 * n2 > 1) {
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                double acc = base(i, j);
                if (i > 0) acc += base(i - 1, j);
                if (j > 0) acc += base(i, j - 1);
                if (i > 0 && j > 0) acc -= base(i - 1, j - 1);
                base(i, j) = acc;
            }
        }
        detail::rescale_unit(base);
        // Inclusion-exclusion can leave tiny negative steps after rounding.
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                double floor = 0.0;
                if (i > 0) floor = std::max(floor, base(i - 1, j));
                if (j > 0) floor = std::max(floor, base(i, j - 1));
                base(i, j) = std::max(base(i, j), floor);
            }
        }
    }
    auto rows = Permutation::random(n1, rng);
    auto cols = Permutation::random(n2, rng);
    return {std::move(base), std::move(rows), std::move(cols)};
}

/// Two-level noisy sorting matrix oriented along the anti-diagonal so that it
/// is bivariate isotonic: 1/2 - λ above, 1/2 on, 1/2 + λ below.
inline GroundTruth gen_noisy_sorting(std::size_t n, double lambda, std::uint64_t seed) {
    if (n == 0) {
        throw DimensionError("noisy sorting needs n >= 1");
    }
    if (!(lambda >= 0.0 && lambda <= 0.5)) {
        throw std::invalid_argument("noisy sorting gap must lie in [0, 1/2]");
    }
    Matrix base(n, n);
    // 0-based: i + j < n - 1 is the 1-based i + j < n + 1.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t s = i + j;
            base(i, j) = s + 1 < n ? 0.5 - lambda : (s + 1 == n ? 0.5 : 0.5 + lambda);
        }
    }
    std::mt19937_64 rng(seed);
    auto rows = Permutation::random(n, rng);
    auto cols = Permutation::random(n, rng);
    return {std::move(base), std::move(rows), std::move(cols)};
}

/// Random SST matrix: an upper triangle in [1/2, 1] that grows to the right
/// and shrinks downward, 1/2 on the diagonal, the lower triangle by
/// skew-symmetry, and one random permutation on rows and columns.
inline SstTruth gen_sst(std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw DimensionError("sst needs n >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // field(i, j) = Σ_{a >= i, b <= j} u(a, b)
    Matrix field(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            field(i, j) = unif(rng);
        }
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = field(ii, j);
            if (ii + 1 < n) acc += field(ii + 1, j);
            if (j > 0) acc += field(ii, j - 1);
            if (ii + 1 < n && j > 0) acc -= field(ii + 1, j - 1);
            field(ii, j) = acc;
        }
    }
    const double top = field(0, n - 1);
    Matrix base(n, n, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 + 0.5 * std::clamp(field(i, j) / top, 0.0, 1.0);
            // Keep the monotone shape exact under rounding.
            if (j > i + 1) v = std::max(v, base(i, j - 1));
            if (i > 0) v = std::min(v, base(i - 1, j));
            base(i, j) = v;
            base(j, i) = 1.0 - v;
        }
    }
    auto perm = Permutation::random(n, rng);
    return {std::move(base), std::move(perm)};
}

/// (1 / (n1 n2)) ‖A − B‖_F².
inline double frob_error(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("frob_error: dimension mismatch");
    }
    const auto av = a.values();
    const auto bv = b.values();
    double acc = 0.0;
    for (std::size_t k = 0; k < av.size(); ++k) {
        const double d = av[k] - bv[k];
        acc += d * d;
    }
    return acc / static_cast<double>(av.size());
}

/// max(v) − min(v).
inline double variation(std::span<const double> v) {
    if (v.empty()) {
        throw std::invalid_argument("variation of an empty vector");
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace biso
