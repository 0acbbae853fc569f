#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "biso/matrix_io.hpp"
#include "biso/sampling.hpp"

using namespace biso;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("biso_io_" + name)).string();
}

}  // namespace

TEST(MatrixCsv, RoundTrip) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    Matrix m(3, 4);
    for (auto& v : m.values()) v = u(rng);
    m(0, 0) = 0.1;
    m(2, 3) = 1.0 / 3.0;
    const auto path = temp_path("round.csv");
    write_matrix_csv(m, path);
    EXPECT_EQ(read_matrix_csv(path), m);
    std::remove(path.c_str());
}

TEST(MatrixCsv, ConstantFile) {
    std::istringstream in("0.5,0.5\n0.5,0.5");
    EXPECT_EQ(parse_matrix_csv(in), Matrix(2, 2, 0.5));
}

TEST(MatrixCsv, RaggedNamesLine) {
    std::istringstream in("1,2\n3");
    try {
        parse_matrix_csv(in);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(MatrixCsv, BadNumberNamesField) {
    std::istringstream in("1,2\n3,x\n");
    try {
        parse_matrix_csv(in);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 2u);
    }
}

TEST(MatrixCsv, RejectsEmptyAndNonFinite) {
    std::istringstream empty("");
    EXPECT_THROW(parse_matrix_csv(empty), ParseError);
    std::istringstream inf("1,inf\n");
    EXPECT_THROW(parse_matrix_csv(inf), ParseError);
}

TEST(MatrixCsv, OutputIsLfTerminated) {
    std::ostringstream out;
    print_matrix_csv(out, Matrix::from_rows({{0.25, 1}, {2, 3}}));
    EXPECT_EQ(out.str(), "0.25,1\n2,3\n");
}

TEST(PermutationCsv, RoundTrip) {
    const Permutation rows({2, 0, 1});
    const Permutation cols({1, 0});
    const auto path = temp_path("perms.csv");
    write_permutations_csv(rows, cols, path);
    const auto [r, c] = read_permutations_csv(path);
    EXPECT_EQ(r, rows);
    EXPECT_EQ(c, cols);
    std::remove(path.c_str());
}

TEST(PermutationCsv, RejectsNonBijection) {
    const auto path = temp_path("bad_perms.csv");
    {
        std::ofstream out(path);
        out << "axis,index,image\nrow,1,1\nrow,2,1\ncol,1,1\n";
    }
    EXPECT_THROW(read_permutations_csv(path), ParseError);
    std::remove(path.c_str());
}

TEST(ObservationCsv, RoundTrip) {
    ObservationSet obs{3, 2, 5, std::nullopt, {{0, 1, 0.5}, {2, 0, 1.0}, {2, 0, 0.0}}};
    std::stringstream buf;
    print_observations_csv(buf, obs);
    EXPECT_EQ(buf.str(), "# n1=3 n2=2 N=5\nrow,col,value\n1,2,0.5\n3,1,1\n3,1,0\n");
    EXPECT_EQ(parse_observations_csv(buf), obs);

    obs.observe_prob = 1.0;
    std::stringstream buf2;
    print_observations_csv(buf2, obs);
    EXPECT_EQ(parse_observations_csv(buf2), obs);
}

TEST(ObservationCsv, Errors) {
    std::istringstream no_preamble("row,col,value\n1,1,0\n");
    EXPECT_THROW(parse_observations_csv(no_preamble), ParseError);
    std::istringstream out_of_range("# n1=2 n2=2 N=4\nrow,col,value\n3,1,0\n");
    try {
        parse_observations_csv(out_of_range);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}
