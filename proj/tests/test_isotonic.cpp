#include <gtest/gtest.h>

#include <random>

#include "biso/isotonic.hpp"
#include "qp_oracle.hpp"

using namespace biso;

namespace {

ProjectionConfig dykstra_config() {
    ProjectionConfig cfg;
    cfg.method = ProjectionMethod::dykstra;
    cfg.tol = 1e-10;
    cfg.max_iters = 100000;
    return cfg;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -0.5, double hi = 1.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (auto& v : m.values()) v = u(rng);
    return m;
}

Matrix grid_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    static const double levels[] = {-1.0, 0.0, 0.5, 1.0, 2.0};
    std::uniform_int_distribution<int> pick(0, 4);
    Matrix m(r, c);
    for (auto& v : m.values()) v = levels[pick(rng)];
    return m;
}

double frob(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += (a.values()[k] - b.values()[k]) * (a.values()[k] - b.values()[k]);
    }
    return std::sqrt(s);
}

}  // namespace

TEST(Pava, Examples) {
    EXPECT_EQ(pava(std::vector<double>{1, 2, 3}), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(pava(std::vector<double>{3, 1, 2}), (std::vector<double>{2, 2, 2}));
    EXPECT_EQ(pava(std::vector<double>{5, 3, 1}), (std::vector<double>{3, 3, 3}));
    EXPECT_EQ(oracle::isotonic_by_pools({3, 1, 2}), (std::vector<double>{2, 2, 2}));
}

TEST(Pava, Errors) {
    EXPECT_THROW(pava(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(pava(std::vector<double>{1.0, std::nan("")}), std::invalid_argument);
}

TEST(Pava, MatchesPoolEnumeration) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> len(1, 8);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(len(rng));
        for (auto& x : v) x = g(rng);
        const auto fast = pava(v);
        const auto ref = oracle::isotonic_by_pools(v);
        ASSERT_EQ(fast.size(), ref.size());
        for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(fast[k], ref[k], 1e-6);
    }
}

TEST(ProjectionConfig, Validation) {
    ProjectionConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(project_biso(Matrix(2, 2), cfg), std::invalid_argument);
    cfg.tol = 1e-8;
    cfg.max_iters = 0;
    EXPECT_THROW(project_biso(Matrix(2, 2), cfg), std::invalid_argument);
}

TEST(ProjectBiso, FixedPoint) {
    const Matrix m = gen_random_biso(6, 5, 4).base;
    EXPECT_LE(oracle::max_abs_diff(project_biso(m).matrix, m), 1e-12);
    EXPECT_LE(oracle::max_abs_diff(project_biso(m, dykstra_config()).matrix, m), 1e-8);
}

TEST(ProjectBiso, SingleRowIsClampedPava) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const Matrix y = random_matrix(1, 7, rng);
        auto expected = pava(y.row(0));
        for (auto& v : expected) v = std::clamp(v, 0.0, 1.0);
        const Matrix want(1, 7, expected);
        EXPECT_LE(oracle::max_abs_diff(project_biso(y).matrix, want), 1e-12);
        EXPECT_LE(oracle::max_abs_diff(project_biso(y, dykstra_config()).matrix, want), 1e-8);
    }
}

TEST(ProjectBiso, TwoByTwoExample) {
    const Matrix y = Matrix::from_rows({{2, -1}, {0, 3}});
    const Matrix ref = oracle::project_by_dual_gradient(y);
    EXPECT_LE(oracle::max_abs_diff(project_biso(y).matrix, ref), 1e-5);
    EXPECT_LE(oracle::max_abs_diff(project_biso(y, dykstra_config()).matrix, ref), 1e-5);
}

TEST(ProjectBiso, MatchesQpOracleOnGridInputs) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    for (int t = 0; t < 100; ++t) {
        const Matrix y = grid_matrix(dim(rng), dim(rng), rng);
        const Matrix ref = oracle::project_by_dual_gradient(y);
        EXPECT_LE(oracle::max_abs_diff(project_biso(y).matrix, ref), 1e-5) << "case " << t;
        EXPECT_LE(oracle::max_abs_diff(project_biso(y, dykstra_config()).matrix, ref), 1e-5) << "case " << t;
    }
}

TEST(ProjectBiso, MatchesQpOracleOnRealInputs) {
    std::mt19937_64 rng(18);
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    for (int t = 0; t < 60; ++t) {
        const Matrix y = random_matrix(dim(rng), dim(rng), rng);
        const Matrix ref = oracle::project_by_dual_gradient(y);
        EXPECT_LE(oracle::max_abs_diff(project_biso(y).matrix, ref), 1e-5) << "case " << t;
    }
}

TEST(ProjectBiso, ThresholdEngineMatchesConvergedDykstra) {
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    for (int t = 0; t < 60; ++t) {
        const Matrix y = random_matrix(dim(rng), dim(rng), rng);
        const auto dyk = project_biso(y, dykstra_config());
        ASSERT_TRUE(dyk.converged);
        EXPECT_LE(oracle::max_abs_diff(project_biso(y).matrix, dyk.matrix), 1e-7) << "case " << t;
    }
}

TEST(ProjectBiso, SweepCapIsFlagged) {
    std::mt19937_64 rng(2);
    ProjectionConfig cfg;
    cfg.method = ProjectionMethod::dykstra;
    cfg.max_iters = 1;
    const auto p = project_biso(random_matrix(8, 8, rng), cfg);
    EXPECT_FALSE(p.converged);
    EXPECT_EQ(p.sweeps, 1u);
}

TEST(ProjectBiso, IdempotentAndFeasible) {
    std::mt19937_64 rng(44);
    std::uniform_int_distribution<std::size_t> dim(1, 30);
    const ProjectionConfig cfg;
    for (int t = 0; t < 200; ++t) {
        const Matrix y = random_matrix(dim(rng), dim(rng), rng, -1.0, 2.0);
        const Matrix p = project_biso(y, cfg).matrix;
        EXPECT_TRUE(is_biso(p, 10 * cfg.tol));
        EXPECT_LT(oracle::max_abs_diff(project_biso(p, cfg).matrix, p), 1e-8);
    }
}

TEST(ProjectBiso, DykstraIdempotentAndFeasible) {
    std::mt19937_64 rng(45);
    std::uniform_int_distribution<std::size_t> dim(1, 30);
    ProjectionConfig cfg;
    cfg.method = ProjectionMethod::dykstra;
    cfg.max_iters = 20000;
    for (int t = 0; t < 40; ++t) {
        const Matrix y = random_matrix(dim(rng), dim(rng), rng, -1.0, 2.0);
        const Matrix p = project_biso(y, cfg).matrix;
        EXPECT_TRUE(is_biso(p, 10 * cfg.tol));
        EXPECT_LT(oracle::max_abs_diff(project_biso(p, cfg).matrix, p), 1e-8);
    }
}

TEST(ProjectBiso, NonExpansive) {
    std::mt19937_64 rng(46);
    std::uniform_int_distribution<std::size_t> dim(1, 15);
    for (int t = 0; t < 100; ++t) {
        const std::size_t r = dim(rng), c = dim(rng);
        const Matrix a = random_matrix(r, c, rng, -1.0, 2.0);
        const Matrix b = random_matrix(r, c, rng, -1.0, 2.0);
        EXPECT_LE(frob(project_biso(a).matrix, project_biso(b).matrix), frob(a, b) + 1e-7);
    }
}

TEST(ProjectBiso, RejectsNonFinite) {
    Matrix y(2, 2, 0.5);
    y(1, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(project_biso(y), std::invalid_argument);
}

TEST(ProjectBisoPermuted, IdentityMatchesPlain) {
    std::mt19937_64 rng(3);
    const Matrix y = random_matrix(5, 4, rng);
    EXPECT_EQ(project_biso_permuted(y, Permutation::identity(5), Permutation::identity(4)).matrix,
              project_biso(y).matrix);
}

TEST(ProjectBisoPermuted, TruePermutationsAreFixedPoint) {
    const auto t = gen_random_biso(7, 6, 12);
    const Matrix y = t.matrix();
    EXPECT_LE(oracle::max_abs_diff(project_biso_permuted(y, t.row_perm, t.col_perm).matrix, y), 1e-12);
}

TEST(ProjectBisoPermuted, MatchesQpOnUnpermutedProblem) {
    std::mt19937_64 rng(61);
    for (int t = 0; t < 30; ++t) {
        const Matrix y = random_matrix(3, 3, rng);
        const auto p = Permutation::random(3, rng);
        const auto s = Permutation::random(3, rng);
        const Matrix ref = apply_permutations(
            oracle::project_by_dual_gradient(apply_permutations(y, p.inverse(), s.inverse())), p, s);
        EXPECT_LE(oracle::max_abs_diff(project_biso_permuted(y, p, s).matrix, ref), 1e-5);
        EXPECT_LE(oracle::max_abs_diff(project_biso_permuted(y, p, s, dykstra_config()).matrix, ref), 1e-5);
    }
}

TEST(ProjectBisoPermuted, DimensionMismatch) {
    EXPECT_THROW(project_biso_permuted(Matrix(2, 3), Permutation::identity(3), Permutation::identity(3)),
                 DimensionError);
}
