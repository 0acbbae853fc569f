// bisoest: generate ground truths, sample, estimate, benchmark and fit rates.
//
// Exit codes: 0 success, 1 a verify check failed, 2 usage error, 3 data error.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "biso/benchmark.hpp"
#include "biso/core.hpp"
#include "biso/estimators.hpp"
#include "biso/isotonic.hpp"
#include "biso/matrix_io.hpp"
#include "biso/sampling.hpp"
#include "biso/theory.hpp"

namespace {

using namespace biso;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runs `f`, reporting any invalid-argument failure as a usage error.
template <class F>
auto as_usage(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct CommonOptions {
    double zeta = 0.5;
    double threshold_scale = 16.0;
    std::string tie_break = "index";
    double proj_tol = 1e-8;
    std::size_t proj_max_iters = 2000;
    std::string proj_method = "threshold";
    std::uint64_t seed = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--zeta", zeta, "Sub-Gaussian noise scale used by the thresholds")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--threshold-scale", threshold_scale, "Leading threshold constant")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--tie-break", tie_break, "Topological-sort tie-break: index or row-sum")
            ->check(CLI::IsMember({"index", "row-sum"}));
        cmd->add_option("--proj-tol", proj_tol, "Dykstra convergence tolerance")->check(CLI::PositiveNumber);
        cmd->add_option("--proj-max-iters", proj_max_iters, "Dykstra sweep cap")->check(CLI::PositiveNumber);
        cmd->add_option("--proj-method", proj_method, "Projection engine: threshold or dykstra")
            ->check(CLI::IsMember({"threshold", "dykstra"}));
        cmd->add_option("--seed", seed, "Random seed");
    }

    ProjectionConfig projection() const {
        ProjectionConfig p;
        p.tol = proj_tol;
        p.max_iters = proj_max_iters;
        p.method = proj_method == "dykstra" ? ProjectionMethod::dykstra : ProjectionMethod::threshold;
        return p;
    }

    TieBreak tie() const { return tie_break == "row-sum" ? TieBreak::row_sum : TieBreak::index; }
};

// ---- gen ----

struct GenOptions {
    std::string kind = "biso-random";
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double lambda = 0.3;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenOptions& o) {
    const std::size_t n2 = o.n2 ? o.n2 : o.n1;
    Matrix base, observed;
    Permutation rows, cols;
    as_usage([&] {
        if (o.kind == "biso-random") {
            auto t = gen_random_biso(o.n1, n2, o.seed);
            rows = t.row_perm;
            cols = t.col_perm;
            observed = t.matrix();
            base = std::move(t.base);
        } else {
            if (n2 != o.n1) throw std::invalid_argument(o.kind + " needs a square matrix (n1 = n2)");
            if (o.kind == "noisy-sorting") {
                auto t = gen_noisy_sorting(o.n1, o.lambda, o.seed);
                rows = t.row_perm;
                cols = t.col_perm;
                observed = t.matrix();
                base = std::move(t.base);
            } else {
                auto t = gen_sst(o.n1, o.seed);
                rows = cols = t.perm;
                observed = t.matrix();
                base = std::move(t.base);
            }
        }
        return 0;
    });
    write_matrix_csv(observed, o.out + ".csv");
    write_matrix_csv(base, o.out + ".base.csv");
    write_permutations_csv(rows, cols, o.out + ".perms.csv");
    return 0;
}

// ---- sample ----

struct SampleOptions {
    std::string truth;
    std::size_t num_obs = 0;
    std::string noise = "bernoulli";
    std::uint64_t seed = 0;
    std::size_t replicates = 0;
    std::string out;
};

int run_sample(const SampleOptions& o) {
    const NoiseSpec noise = as_usage([&] { return NoiseSpec::parse(o.noise); });
    if (o.replicates == 0 && o.num_obs == 0) throw UsageError("give --num-obs or --replicates");
    if (o.replicates > 0 && o.num_obs > 0) throw UsageError("--num-obs and --replicates are exclusive");
    const Matrix m = read_matrix_csv(o.truth);
    const ObservationSet obs = o.replicates > 0 ? observe_all(m, o.replicates, noise, o.seed)
                                                : sample_poissonized(m, o.num_obs, noise, o.seed);
    if (o.out.empty()) {
        print_observations_csv(std::cout, obs);
    } else {
        write_observations_csv(obs, o.out);
    }
    return 0;
}

// ---- estimate ----

struct EstimateOptions {
    std::string obs;
    std::string estimator = "tds";
    std::string truth;
    std::string perms;
    std::string out;
    CommonOptions common;
};

int run_estimate(const EstimateOptions& o) {
    const EstimatorKind kind = as_usage([&] { return parse_estimator(o.estimator); });
    if (kind == EstimatorKind::oracle && o.perms.empty() && o.truth.empty()) {
        throw UsageError("the oracle estimator needs --perms or --truth");
    }
    const ObservationSet obs = read_observations_csv(o.obs);
    std::optional<Matrix> truth;
    if (!o.truth.empty()) truth = read_matrix_csv(o.truth);
    if (truth && (truth->rows() != obs.n1 || truth->cols() != obs.n2)) {
        throw DimensionError("truth matrix shape differs from the observations");
    }

    EstimatorConfig cfg{o.common.zeta, o.common.threshold_scale, o.common.tie(), o.common.projection(),
                        o.common.seed};
    Estimate est;
    switch (kind) {
        case EstimatorKind::tds: est = estimate_tds(obs, cfg); break;
        case EstimatorKind::borda: est = estimate_borda(obs, cfg); break;
        case EstimatorKind::oracle: {
            Permutation rows, cols;
            if (!o.perms.empty()) {
                std::tie(rows, cols) = read_permutations_csv(o.perms);
            } else {
                // Sorting the sums of a permuted bivariate isotonic matrix recovers a valid order.
                rows = ranks_of(row_sums(*truth));
                cols = ranks_of(column_sums(*truth));
            }
            if (rows.size() != obs.n1 || cols.size() != obs.n2) {
                throw DimensionError("permutation sizes differ from the observations");
            }
            est = estimate_oracle(obs, rows, cols, cfg);
            break;
        }
    }
    if (o.out.empty()) {
        print_matrix_csv(std::cout, est.matrix);
    } else {
        write_matrix_csv(est.matrix, o.out);
    }
    // The summary goes to stdout unless the estimate itself does.
    std::ostream& summary = o.out.empty() ? std::cerr : std::cout;
    summary << "estimator,n1,n2,N,error\n"
            << o.estimator << ',' << obs.n1 << ',' << obs.n2 << ',' << obs.nominal_n << ',';
    if (truth) summary << detail::format_double(frob_error(est.matrix, *truth));
    summary << '\n';
    if (!est.converged) std::cerr << "warning: projection hit the sweep cap before converging\n";
    return 0;
}

// ---- benchmark ----

struct BenchmarkOptions {
    std::string sizes;
    std::size_t trials = 10;
    std::string estimators = "tds,borda,oracle";
    std::string noise = "bernoulli";
    std::string ensemble = "noisy-sorting:0.3";
    double budget_exp = 2.0;
    std::size_t threads = 0;
    bool timing = false;
    std::string out;
    CommonOptions common;
};

BenchmarkConfig make_benchmark_config(const BenchmarkOptions& o) {
    return as_usage([&] {
        BenchmarkConfig cfg;
        cfg.sizes.clear();
        for (const auto& s : split_list(o.sizes)) {
            cfg.sizes.push_back(detail::parse_index(s, 0, 0));
        }
        cfg.trials = o.trials;
        cfg.estimators.clear();
        for (const auto& e : split_list(o.estimators)) cfg.estimators.push_back(parse_estimator(e));
        cfg.noise = NoiseSpec::parse(o.noise);
        cfg.ensemble = Ensemble::parse(o.ensemble);
        cfg.budget_exponent = o.budget_exp;
        cfg.zeta = o.common.zeta;
        cfg.threshold_scale = o.common.threshold_scale;
        cfg.tie_break = o.common.tie();
        cfg.projection = o.common.projection();
        cfg.seed = o.common.seed;
        cfg.threads = o.threads;
        cfg.timing = o.timing;
        cfg.validate();
        return cfg;
    });
}

int run_benchmark_cmd(const BenchmarkOptions& o) {
    BenchmarkConfig cfg;
    try {
        cfg = make_benchmark_config(o);
    } catch (const ParseError& e) {
        throw UsageError(std::string("--sizes: ") + e.what());
    }
    const auto rows = run_benchmark(cfg);
    if (o.out.empty()) {
        print_results_csv(std::cout, rows);
    } else {
        write_results_csv(rows, o.out);
    }
    return 0;
}

// ---- slope ----

struct SlopeOptions {
    std::string results;
    std::string estimators;
};

int run_slope(const SlopeOptions& o) {
    const auto rows = read_results_csv(o.results);
    std::vector<std::string> names = split_list(o.estimators);
    if (names.empty()) {
        for (const auto& r : rows) {
            if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);
        }
    }
    std::cout << "estimator,slope,intercept\n";
    for (const auto& name : names) {
        const RateFit fit = fit_rate_slope(rows, name);
        std::cout << name << ',' << detail::format_double(fit.slope) << ','
                  << detail::format_double(fit.intercept) << '\n';
    }
    return 0;
}

// ---- verify ----

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t fuzz = 100000;
    std::size_t trials = 1000;
    std::size_t n = 16;
};

int run_verify(const VerifyOptions& o) {
    std::mt19937_64 rng(o.seed);
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        all_ok = all_ok && ok;
    };

    {
        std::size_t bad = 0;
        std::uniform_int_distribution<std::size_t> len(1, 50);
        std::uniform_real_distribution<double> val(-10.0, 10.0);
        for (std::size_t t = 0; t < o.fuzz; ++t) {
            std::vector<double> v(len(rng));
            for (auto& x : v) x = val(rng);
            if (!check_l2_tv_l1(v)) ++bad;
        }
        report("l2-tv-l1", bad == 0, std::to_string(bad) + " failures in " + std::to_string(o.fuzz) + " vectors");
    }
    {
        std::size_t bad = 0, cases = 0;
        std::uniform_real_distribution<double> step(0.0, 1.0);
        std::vector<std::size_t> order{0, 1, 2, 3};
        for (std::size_t s = 0; s < 50; ++s) {
            std::vector<double> a(4);
            double acc = 0.0;
            for (auto& x : a) x = acc += step(rng);
            std::sort(order.begin(), order.end());
            do {
                const Permutation pi{std::vector<std::size_t>(order)};
                for (double tau = 0.05; tau <= 4.0; tau += 0.05) {
                    ++cases;
                    if (!check_threshold_sort(a, pi, tau)) ++bad;
                }
            } while (std::next_permutation(order.begin(), order.end()));
        }
        report("threshold-sort", bad == 0, std::to_string(bad) + " failures in " + std::to_string(cases) + " cases");
    }
    {
        const GroundTruth truth = gen_random_biso(o.n, o.n, rng());
        std::vector<std::pair<std::size_t, std::size_t>> set;
        for (std::size_t i = 0; i < o.n; ++i) {
            for (std::size_t j = 0; j < o.n / 2; ++j) set.emplace_back(i, j);
        }
        const auto r = empirical_parsum_check(truth.matrix(), o.n * o.n, NoiseSpec::bernoulli(), set, o.trials, rng());
        const double rate = static_cast<double>(r.violations) / static_cast<double>(r.trials);
        report("partial-sum concentration", rate <= 0.01,
               std::to_string(r.violations) + "/" + std::to_string(r.trials) + " violations, bound " +
                   detail::format_double(r.bound_used) + ", max deviation " +
                   detail::format_double(r.max_observed_deviation));
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimation of permuted bivariate isotonic matrices"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a ground truth: PREFIX.csv, PREFIX.base.csv, PREFIX.perms.csv");
    gen_cmd->add_option("--kind", gen.kind, "biso-random, noisy-sorting or sst-random")
        ->check(CLI::IsMember({"biso-random", "noisy-sorting", "sst-random"}));
    gen_cmd->add_option("--n1", gen.n1, "Rows")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--n2", gen.n2, "Columns (default n1)")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--lambda", gen.lambda, "Noisy-sorting gap in [0, 1/2]");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--out", gen.out, "Output prefix")->required();

    SampleOptions sample;
    auto* sample_cmd = app.add_subcommand("sample", "Draw noisy observations of a matrix");
    sample_cmd->add_option("--truth", sample.truth, "Matrix CSV to sample")->required();
    sample_cmd->add_option("--num-obs", sample.num_obs, "Budget N for Poissonized sampling");
    sample_cmd->add_option("--replicates", sample.replicates, "Observe every entry this many times instead");
    sample_cmd->add_option("--noise", sample.noise, "bernoulli, noiseless or gaussian:<sigma>");
    sample_cmd->add_option("--seed", sample.seed, "Random seed");
    sample_cmd->add_option("--out", sample.out, "Observation CSV (default stdout)");

    EstimateOptions est;
    auto* est_cmd = app.add_subcommand("estimate", "Estimate the matrix from observations");
    est_cmd->add_option("--obs", est.obs, "Observation CSV")->required();
    est_cmd->add_option("--estimator", est.estimator, "tds, borda or oracle");
    est_cmd->add_option("--truth", est.truth, "Observable truth matrix CSV, for error reporting");
    est_cmd->add_option("--perms", est.perms, "Permutation file for the oracle estimator");
    est_cmd->add_option("--out", est.out, "Estimate CSV (default stdout)");
    est.common.add_to(est_cmd);

    BenchmarkOptions bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Monte Carlo error-rate benchmark");
    bench_cmd->add_option("--sizes", bench.sizes, "Comma-separated increasing sizes n")->required();
    bench_cmd->add_option("--trials", bench.trials, "Trials per size")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--estimators", bench.estimators, "Comma-separated subset of tds,borda,oracle");
    bench_cmd->add_option("--noise", bench.noise, "bernoulli, noiseless or gaussian:<sigma>");
    bench_cmd->add_option("--ensemble", bench.ensemble, "noisy-sorting[:lambda] or biso-random");
    bench_cmd->add_option("--budget-exp", bench.budget_exp, "Budget N = min(n^2, round(n^e))")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (0: all cores)");
    bench_cmd->add_flag("--timing", bench.timing, "Record wall-clock runtimes");
    bench_cmd->add_option("--out", bench.out, "Results CSV (default stdout)");
    bench.common.add_to(bench_cmd);

    SlopeOptions slope;
    auto* slope_cmd = app.add_subcommand("slope", "Fit log-log error slopes from a results CSV");
    slope_cmd->add_option("--results", slope.results, "Results CSV")->required();
    slope_cmd->add_option("--estimators", slope.estimators, "Comma-separated estimators (default all)");

    VerifyOptions verify;
    auto* verify_cmd = app.add_subcommand("verify", "Run the inequality checks");
    verify_cmd->add_option("--seed", verify.seed, "Random seed");
    verify_cmd->add_option("--fuzz", verify.fuzz, "Fuzz vectors for the norm inequality");
    verify_cmd->add_option("--trials", verify.trials, "Sampling rounds for the concentration check");
    verify_cmd->add_option("--n", verify.n, "Matrix size for the concentration check")->check(CLI::Range(2, 4096));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*sample_cmd) return run_sample(sample);
        if (*est_cmd) return run_estimate(est);
        if (*bench_cmd) return run_benchmark_cmd(bench);
        if (*slope_cmd) return run_slope(slope);
        if (*verify_cmd) return run_verify(verify);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
