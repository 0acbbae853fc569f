#pragma once

// Monte Carlo rate benchmark: ground-truth ensembles, per-trial seeding,
// concurrent trials with a deterministic output order, results CSV and
// log-log slope fitting.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "biso/core.hpp"
#include "biso/estimators.hpp"
#include "biso/matrix_io.hpp"
#include "biso/sampling.hpp"

namespace biso {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the ground truth and samples of one (size, trial) cell.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t trial) {
    return splitmix64(splitmix64(splitmix64(master) ^ n) ^ trial);
}

/// Seed for one estimator's internal randomness within a trial.
inline std::uint64_t estimator_seed(std::uint64_t trial, std::size_t estimator_index) {
    return splitmix64(trial ^ (0xa0761d6478bd642fULL * (estimator_index + 1)));
}

enum class EstimatorKind { tds, borda, oracle };

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::tds: return "tds";
        case EstimatorKind::borda: return "borda";
        case EstimatorKind::oracle: return "oracle";
    }
    return {};
}

inline EstimatorKind parse_estimator(const std::string& name) {
    if (name == "tds") return EstimatorKind::tds;
    if (name == "borda") return EstimatorKind::borda;
    if (name == "oracle") return EstimatorKind::oracle;
    throw std::invalid_argument("unknown estimator '" + name + "' (expected tds, borda or oracle)");
}

inline Estimate run_estimator(EstimatorKind kind, const ObservationSet& obs, const GroundTruth& truth,
                              const EstimatorConfig& cfg) {
    switch (kind) {
        case EstimatorKind::tds: return estimate_tds(obs, cfg);
        case EstimatorKind::borda: return estimate_borda(obs, cfg);
        case EstimatorKind::oracle: return estimate_oracle(obs, truth.row_perm, truth.col_perm, cfg);
    }
    throw std::logic_error("unreachable");
}

/// Square ground-truth ensemble: "noisy-sorting:<lambda>" or "biso-random".
struct Ensemble {
    enum class Kind { noisy_sorting, biso_random };
    Kind kind = Kind::noisy_sorting;
    double lambda = 0.3;

    static Ensemble parse(const std::string& text) {
        if (text == "biso-random") return {Kind::biso_random, 0.0};
        if (text == "noisy-sorting") return {Kind::noisy_sorting, 0.3};
        const std::string prefix = "noisy-sorting:";
        if (text.rfind(prefix, 0) == 0) {
            const double lambda = detail::parse_double(text.substr(prefix.size()), 0, 0);
            if (!(lambda >= 0.0 && lambda <= 0.5)) {
                throw std::invalid_argument("noisy-sorting gap must lie in [0, 1/2]");
            }
            return {Kind::noisy_sorting, lambda};
        }
        throw std::invalid_argument("unknown ensemble '" + text + "'");
    }

    GroundTruth generate(std::size_t n, std::uint64_t seed) const {
        return kind == Kind::biso_random ? gen_random_biso(n, n, seed)
                                         : gen_noisy_sorting(n, lambda, seed);
    }
};

struct BenchmarkConfig {
    std::vector<std::size_t> sizes;
    std::size_t trials = 10;
    std::vector<EstimatorKind> estimators{EstimatorKind::tds, EstimatorKind::borda,
                                          EstimatorKind::oracle};
    NoiseSpec noise = NoiseSpec::bernoulli();
    Ensemble ensemble;
    double budget_exponent = 2.0;  // N = min(n², round(n^e))
    double zeta = 0.5;
    double threshold_scale = 16.0;
    TieBreak tie_break = TieBreak::index;
    ProjectionConfig projection;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: hardware concurrency
    bool timing = false;      // record wall-clock ms; off keeps output reproducible

    std::size_t budget(std::size_t n) const {
        const double full = static_cast<double>(n) * static_cast<double>(n);
        const double raw = std::round(std::pow(static_cast<double>(n), budget_exponent));
        return static_cast<std::size_t>(std::clamp(raw, 1.0, full));
    }

    void validate() const {
        if (sizes.empty()) throw std::invalid_argument("benchmark needs at least one size");
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (sizes[k] == 0) throw std::invalid_argument("sizes must be positive");
            if (k > 0 && sizes[k] <= sizes[k - 1]) {
                throw std::invalid_argument("sizes must be strictly increasing");
            }
        }
        if (trials < 1) throw std::invalid_argument("benchmark needs at least one trial");
        if (estimators.empty()) throw std::invalid_argument("benchmark needs an estimator");
        projection.validate();
    }
};

struct ResultsRow {
    std::size_t n = 0;
    std::size_t budget = 0;
    std::size_t trial = 0;
    std::string estimator;
    double error = 0.0;
    double runtime_ms = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr const char* kResultsHeader = "n,N,trial,estimator,frob_err_sq_norm,runtime_ms,seed";

/// Runs every (size, trial) cell, each on its own seed; all estimators in a
/// cell share the ground truth and the sample. Rows come back sorted by
/// (n, estimator, trial) whatever the scheduling.
inline std::vector<ResultsRow> run_benchmark(const BenchmarkConfig& cfg) {
    cfg.validate();
    struct Cell {
        std::size_t n;
        std::size_t trial;
    };
    std::vector<Cell> cells;
    // Largest sizes first so the long tasks start early.
    for (auto it = cfg.sizes.rbegin(); it != cfg.sizes.rend(); ++it) {
        for (std::size_t t = 0; t < cfg.trials; ++t) cells.push_back({*it, t});
    }
    std::vector<std::vector<ResultsRow>> per_cell(cells.size());

    auto run_cell = [&](std::size_t c) {
        const auto [n, trial] = cells[c];
        const std::uint64_t seed = trial_seed(cfg.seed, n, trial);
        const GroundTruth truth = cfg.ensemble.generate(n, seed);
        const Matrix target = truth.matrix();
        const std::size_t budget = cfg.budget(n);
        const ObservationSet obs = sample_poissonized(target, budget, cfg.noise, splitmix64(seed));
        for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
            EstimatorConfig ecfg{cfg.zeta, cfg.threshold_scale, cfg.tie_break, cfg.projection,
                                 estimator_seed(seed, e)};
            const auto start = std::chrono::steady_clock::now();
            const Estimate est = run_estimator(cfg.estimators[e], obs, truth, ecfg);
            const auto stop = std::chrono::steady_clock::now();
            const double ms =
                cfg.timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
            per_cell[c].push_back(
                {n, budget, trial, to_string(cfg.estimators[e]), frob_error(est.matrix, target), ms, seed});
        }
    };

    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t c; (c = next.fetch_add(1)) < cells.size();) {
                    try {
                        run_cell(c);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<ResultsRow> rows;
    for (auto& v : per_cell) rows.insert(rows.end(), v.begin(), v.end());
    std::sort(rows.begin(), rows.end(), [](const ResultsRow& a, const ResultsRow& b) {
        return std::tie(a.n, a.estimator, a.trial) < std::tie(b.n, b.estimator, b.trial);
    });
    return rows;
}

inline void print_results_csv(std::ostream& out, const std::vector<ResultsRow>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << r.n << ',' << r.budget << ',' << r.trial << ',' << r.estimator << ','
            << detail::format_double(r.error) << ',' << detail::format_double(r.runtime_ms) << ','
            << r.seed << '\n';
    }
}

inline void write_results_csv(const std::vector<ResultsRow>& rows, const std::string& path) {
    auto out = detail::open_out(path);
    print_results_csv(out, rows);
    if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

inline std::vector<ResultsRow> parse_results_csv(std::istream& in) {
    std::vector<ResultsRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (lineno == 1) {
            if (t != kResultsHeader) throw ParseError("unexpected results header", lineno);
            continue;
        }
        const auto f = detail::split_commas(t);
        if (f.size() != 7) throw ParseError("expected 7 fields, found " + std::to_string(f.size()), lineno);
        ResultsRow r;
        r.n = detail::parse_index(f[0], lineno, 1);
        r.budget = detail::parse_index(f[1], lineno, 2);
        r.trial = detail::parse_index(f[2], lineno, 3);
        r.estimator = std::string(f[3]);
        r.error = detail::parse_double(f[4], lineno, 5);
        r.runtime_ms = detail::parse_double(f[5], lineno, 6);
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(f[6].data(), f[6].data() + f[6].size(), seed);
        if (ec != std::errc() || ptr != f[6].data() + f[6].size()) {
            throw ParseError("bad seed", lineno, 7);
        }
        r.seed = seed;
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<ResultsRow> read_results_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_results_csv(in);
}

/// Mean error per size for one estimator, ascending in n.
inline std::vector<std::pair<std::size_t, double>> mean_errors(const std::vector<ResultsRow>& rows,
                                                               const std::string& estimator) {
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
        if (r.estimator != estimator) continue;
        auto& [sum, count] = acc[r.n];
        sum += r.error;
        ++count;
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& [n, sc] : acc) out.emplace_back(n, sc.first / static_cast<double>(sc.second));
    return out;
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line through (log n, log mean error).
inline RateFit fit_rate_slope(const std::vector<ResultsRow>& rows, const std::string& estimator) {
    const auto means = mean_errors(rows, estimator);
    if (means.size() < 2) {
        throw std::invalid_argument("slope fit for '" + estimator + "' needs at least two sizes");
    }
    double sx = 0.0, sy = 0.0;
    for (const auto& [n, e] : means) {
        if (!(e > 0.0)) throw std::invalid_argument("slope fit needs positive mean errors");
        sx += std::log(static_cast<double>(n));
        sy += std::log(e);
    }
    const double k = static_cast<double>(means.size());
    const double mx = sx / k, my = sy / k;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [n, e] : means) {
        const double dx = std::log(static_cast<double>(n)) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace biso
