#pragma once

// Poissonized uniform sampling with replacement, noise channels, the rescaled
// observation matrix and independent sample splitting.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "biso/core.hpp"
#include "biso/matrix_io.hpp"

namespace biso {

struct NoiseSpec {
    enum class Kind { bernoulli, gaussian, noiseless };

    Kind kind = Kind::bernoulli;
    double sigma = 0.0;

    static NoiseSpec bernoulli() { return {Kind::bernoulli, 0.0}; }
    static NoiseSpec noiseless() { return {Kind::noiseless, 0.0}; }
    static NoiseSpec gaussian(double sigma) {
        if (!(std::isfinite(sigma) && sigma >= 0.0)) {
            throw std::invalid_argument("gaussian noise needs a finite sigma >= 0");
        }
        return {Kind::gaussian, sigma};
    }

    /// Parses "bernoulli", "noiseless" or "gaussian:<sigma>".
    static NoiseSpec parse(const std::string& text) {
        if (text == "bernoulli") return bernoulli();
        if (text == "noiseless") return noiseless();
        const std::string prefix = "gaussian:";
        if (text.rfind(prefix, 0) == 0) {
            return gaussian(detail::parse_double(text.substr(prefix.size()), 0, 0));
        }
        throw std::invalid_argument("unknown noise '" + text + "'");
    }

    std::string to_string() const {
        switch (kind) {
            case Kind::bernoulli: return "bernoulli";
            case Kind::noiseless: return "noiseless";
            case Kind::gaussian: return "gaussian:" + detail::format_double(sigma);
        }
        return {};
    }
};

struct Observation {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Samples of an n1 x n2 matrix drawn under a nominal budget N.
///
/// `observe_prob` overrides the rescaling probability 1 − exp(−N / (n1 n2))
/// for sets whose coverage is known exactly, such as a replicated full scan.
struct ObservationSet {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t nominal_n = 0;
    std::optional<double> observe_prob;
    std::vector<Observation> samples;

    friend bool operator==(const ObservationSet&, const ObservationSet&) = default;
};

/// Probability that a given entry is observed at least once under Poi(N)
/// uniform draws: 1 − exp(−N / (n1 n2)).
inline double p_obs(std::size_t n, std::size_t n1, std::size_t n2) {
    return -std::expm1(-static_cast<double>(n) / (static_cast<double>(n1) * static_cast<double>(n2)));
}

inline double observation_probability(const ObservationSet& obs) {
    return obs.observe_prob ? *obs.observe_prob : p_obs(obs.nominal_n, obs.n1, obs.n2);
}

/// Throws unless N <= n1 n2, the standing assumption of every estimator.
inline void require_budget(const ObservationSet& obs) {
    if (obs.n1 == 0 || obs.n2 == 0) {
        throw DimensionError("observation set has empty dimensions");
    }
    if (obs.nominal_n == 0 || obs.nominal_n > obs.n1 * obs.n2) {
        throw std::invalid_argument("sample budget N=" + std::to_string(obs.nominal_n) +
                                    " must lie in [1, n1*n2]");
    }
}

namespace detail {

template <class Rng>
double draw_value(double mean, const NoiseSpec& noise, Rng& rng) {
    switch (noise.kind) {
        case NoiseSpec::Kind::noiseless: return mean;
        case NoiseSpec::Kind::bernoulli: {
            std::bernoulli_distribution coin(mean);
            return coin(rng) ? 1.0 : 0.0;
        }
        case NoiseSpec::Kind::gaussian: {
            if (noise.sigma == 0.0) return mean;
            std::normal_distribution<double> gauss(0.0, noise.sigma);
            return mean + gauss(rng);
        }
    }
    return mean;
}

inline void require_bernoulli_range(const Matrix& m, const NoiseSpec& noise) {
    if (noise.kind != NoiseSpec::Kind::bernoulli) return;
    for (double v : m.values()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("bernoulli noise needs every entry in [0, 1]");
        }
    }
}

}  // namespace detail

/// Draws N' ~ Poi(N) positions uniformly with replacement from `m` and a noisy
/// value for each.
inline ObservationSet sample_poissonized(const Matrix& m, std::size_t n, const NoiseSpec& noise,
                                         std::uint64_t seed) {
    detail::require_bernoulli_range(m, noise);
    std::mt19937_64 rng(seed);
    std::poisson_distribution<std::size_t> count_dist(static_cast<double>(n));
    const std::size_t count = n == 0 ? 0 : count_dist(rng);
    std::uniform_int_distribution<std::size_t> pick_row(0, m.rows() - 1);
    std::uniform_int_distribution<std::size_t> pick_col(0, m.cols() - 1);

    ObservationSet obs{m.rows(), m.cols(), n, std::nullopt, {}};
    obs.samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = pick_row(rng);
        const std::size_t j = pick_col(rng);
        obs.samples.push_back({i, j, detail::draw_value(m(i, j), noise, rng)});
    }
    return obs;
}

inline ObservationSet sample_poissonized(const GroundTruth& truth, std::size_t n,
                                         const NoiseSpec& noise, std::uint64_t seed) {
    return sample_poissonized(truth.matrix(), n, noise, seed);
}

/// Every entry observed `replicates` times, with the rescaling probability
/// pinned to 1. Used for exact-recovery checks; budget is set to n1 n2.
inline ObservationSet observe_all(const Matrix& m, std::size_t replicates, const NoiseSpec& noise,
                                  std::uint64_t seed) {
    detail::require_bernoulli_range(m, noise);
    std::mt19937_64 rng(seed);
    ObservationSet obs{m.rows(), m.cols(), m.rows() * m.cols(), 1.0, {}};
    obs.samples.reserve(m.size() * replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                obs.samples.push_back({i, j, detail::draw_value(m(i, j), noise, rng)});
            }
        }
    }
    return obs;
}

/// Y(i, j) = (1 / p) · mean of the values observed at (i, j), 0 if none.
inline Matrix aggregate_y(const ObservationSet& obs) {
    require_budget(obs);
    const double p = observation_probability(obs);
    Matrix sums(obs.n1, obs.n2);
    std::vector<std::uint32_t> counts(obs.n1 * obs.n2, 0);
    for (const auto& o : obs.samples) {
        if (o.row >= obs.n1 || o.col >= obs.n2) {
            throw DimensionError("observation index outside the declared dimensions");
        }
        sums(o.row, o.col) += o.value;
        ++counts[o.row * obs.n2 + o.col];
    }
    auto v = sums.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (counts[k] > 0) v[k] = v[k] / counts[k] / p;
    }
    return sums;
}

/// Assigns each observation independently and uniformly to one of `parts`
/// subsets. Every part keeps the full nominal budget N, which drives the
/// sorting thresholds, but rescales by its own coverage 1 − (1 − p)^(1/parts)
/// so that each part's observation matrix stays unbiased.
inline std::vector<ObservationSet> split_observations(const ObservationSet& obs, std::size_t parts,
                                                      std::uint64_t seed) {
    if (parts < 2) {
        throw std::invalid_argument("split_observations needs at least two parts");
    }
    std::optional<double> part_prob;
    if (obs.n1 > 0 && obs.n2 > 0 && (obs.nominal_n > 0 || obs.observe_prob)) {
        const double p = observation_probability(obs);
        part_prob = p >= 1.0 ? 1.0
                             : -std::expm1(std::log1p(-p) / static_cast<double>(parts));
    }
    std::vector<ObservationSet> out(parts, ObservationSet{obs.n1, obs.n2, obs.nominal_n,
                                                          part_prob, {}});
    // A separate stream, so a split seeded like the sample is not correlated with it.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x73706c74u};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, parts - 1);
    for (const auto& o : obs.samples) {
        out[pick(rng)].samples.push_back(o);
    }
    return out;
}

// Observation CSV:
//   # n1=<rows> n2=<cols> N=<budget>[ p=<observe prob>]
//   row,col,value
//   1,3,0.5
// Indices are 1-based.

inline void print_observations_csv(std::ostream& out, const ObservationSet& obs) {
    out << "# n1=" << obs.n1 << " n2=" << obs.n2 << " N=" << obs.nominal_n;
    if (obs.observe_prob) out << " p=" << detail::format_double(*obs.observe_prob);
    out << "\nrow,col,value\n";
    std::string buf;
    for (const auto& o : obs.samples) {
        buf = std::to_string(o.row + 1);
        buf += ',';
        buf += std::to_string(o.col + 1);
        buf += ',';
        buf += detail::format_double(o.value);
        buf += '\n';
        out << buf;
    }
}

inline ObservationSet parse_observations_csv(std::istream& in) {
    ObservationSet obs;
    std::string line;
    std::size_t lineno = 0;
    bool have_preamble = false;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (!have_preamble) {
            if (t.substr(0, 1) != "#") throw ParseError("missing '# n1=.. n2=.. N=..' preamble", lineno);
            std::istringstream tokens{std::string(t.substr(1))};
            std::string tok;
            bool n1 = false, n2 = false, nn = false;
            while (tokens >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) throw ParseError("bad preamble token '" + tok + "'", lineno);
                const std::string key = tok.substr(0, eq);
                const std::string_view val = std::string_view(tok).substr(eq + 1);
                if (key == "n1") {
                    obs.n1 = detail::parse_index(val, lineno, 0);
                    n1 = true;
                } else if (key == "n2") {
                    obs.n2 = detail::parse_index(val, lineno, 0);
                    n2 = true;
                } else if (key == "N") {
                    obs.nominal_n = detail::parse_index(val, lineno, 0);
                    nn = true;
                } else if (key == "p") {
                    obs.observe_prob = detail::parse_double(val, lineno, 0);
                } else {
                    throw ParseError("unknown preamble key '" + key + "'", lineno);
                }
            }
            if (!(n1 && n2 && nn)) throw ParseError("preamble needs n1, n2 and N", lineno);
            if (obs.n1 == 0 || obs.n2 == 0) throw ParseError("dimensions must be positive", lineno);
            have_preamble = true;
            continue;
        }
        if (!have_header) {
            if (t != "row,col,value") throw ParseError("expected header 'row,col,value'", lineno);
            have_header = true;
            continue;
        }
        const auto f = detail::split_commas(t);
        if (f.size() != 3) throw ParseError("expected 3 fields, found " + std::to_string(f.size()), lineno);
        const std::size_t r = detail::parse_index(f[0], lineno, 1);
        const std::size_t c = detail::parse_index(f[1], lineno, 2);
        if (r == 0 || r > obs.n1) throw ParseError("row index out of range", lineno, 1);
        if (c == 0 || c > obs.n2) throw ParseError("column index out of range", lineno, 2);
        obs.samples.push_back({r - 1, c - 1, detail::parse_double(f[2], lineno, 3)});
    }
    if (!have_header) throw ParseError("missing observation header");
    return obs;
}

inline ObservationSet read_observations_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_observations_csv(in);
}

inline void write_observations_csv(const ObservationSet& obs, const std::string& path) {
    auto out = detail::open_out(path);
    print_observations_csv(out, obs);
    if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

}  // namespace biso
