#include <gtest/gtest.h>

#include "specsplit/ensembles.hpp"
#include "specsplit/matrix_io.hpp"

using namespace specsplit;

namespace {

template <typename F>
std::pair<std::size_t, std::size_t> parse_error_position(F&& f)
{
    try {
        f();
    } catch (const ParseError& e) {
        return {e.line(), e.column()};
    }
    ADD_FAILURE() << "expected ParseError";
    return {0, 0};
}

} // namespace

TEST(MatrixMarket, RoundTripIsBitExact)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Matrix m = sample_ginibre(1 + seed, seed).mat();
        m(0, 0) = cplx(1.0 / 3.0, -0.0);
        const Matrix back = io::parse_matrix_market(io::to_matrix_market(m));
        ASSERT_EQ(back.rows(), m.rows());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            EXPECT_EQ(back(i), m(i));
        }
    }
}

TEST(MatrixMarket, ColumnMajorRealField)
{
    const Matrix m = io::parse_matrix_market("%%MatrixMarket matrix array real general\n"
                                             "% comment\n"
                                             "2 2\n1\n0\n1\n3\n");
    EXPECT_EQ(m(0, 0), cplx(1.0));
    EXPECT_EQ(m(1, 0), cplx(0.0));
    EXPECT_EQ(m(0, 1), cplx(1.0));
    EXPECT_EQ(m(1, 1), cplx(3.0));
}

TEST(MatrixMarket, ErrorsCarryLineAndColumn)
{
    const auto bad = parse_error_position([] {
        io::parse_matrix_market("%%MatrixMarket matrix array complex general\n2 2\n1 0\n0 0\nx 0\n0 0\n");
    });
    EXPECT_EQ(bad.first, 5u);
    EXPECT_EQ(bad.second, 1u);
    const auto trailing = parse_error_position([] {
        io::parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n2  7\n");
    });
    EXPECT_EQ(trailing.first, 3u);
    EXPECT_EQ(trailing.second, 4u);
    EXPECT_EQ(parse_error_position([] { io::parse_matrix_market("1 1\n1\n"); }).first, 1u);
    EXPECT_THROW(io::parse_matrix_market("%%MatrixMarket matrix array real general\n2 3\n"), ParseError);
    EXPECT_THROW(io::parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n"), ParseError);
    EXPECT_THROW(io::parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1\n2\n"), ParseError);
    EXPECT_THROW(io::parse_matrix_market("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n"),
                 ParseError);
}

TEST(Json, RoundTripIsBitExact)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix m = sample_ginibre(1 + seed, seed).mat();
        const Matrix back = io::parse_json(io::to_json(m));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            EXPECT_EQ(back(i), m(i));
        }
    }
}

TEST(Json, RowMajorAndOptionalImaginary)
{
    const Matrix m = io::parse_json(R"({"n": 2, "re": [[1, 2], [3, 4]]})");
    EXPECT_EQ(m(0, 1), cplx(2.0));
    EXPECT_EQ(m(1, 0), cplx(3.0));
    EXPECT_EQ(m(1, 1).imag(), 0.0);
}

TEST(Json, Rejections)
{
    EXPECT_THROW(io::parse_json(R"({"n": 2, "re": [[1, 2]]})"), InputError);
    EXPECT_THROW(io::parse_json(R"({"n": 0, "re": []})"), InputError);
    EXPECT_THROW(io::parse_json(R"({"re": [[1]]})"), InputError);
    EXPECT_THROW(io::parse_json(R"({"n": 1, "re": [["a"]]})"), InputError);
    const auto pos = parse_error_position([] { io::parse_json("{\"n\": 1,\n  \"re\": [[1]] ,,}"); });
    EXPECT_EQ(pos.first, 2u);
}

TEST(ParseMatrix, DispatchesOnFirstCharacter)
{
    EXPECT_EQ(io::parse_matrix("  {\"n\":1,\"re\":[[5]]}").mat()(0, 0), cplx(5.0));
    EXPECT_EQ(io::parse_matrix("%%MatrixMarket matrix array real general\n1 1\n5\n").mat()(0, 0), cplx(5.0));
    // NaN passes the parser and is rejected by the operator type
    EXPECT_THROW(io::parse_matrix("%%MatrixMarket matrix array real general\n1 1\nnan\n"), InputError);
}

TEST(Digest, Fnv1aVectors)
{
    EXPECT_EQ(io::digest(""), "fnv1a64:cbf29ce484222325");
    EXPECT_EQ(io::digest("a"), "fnv1a64:af63dc4c8601ec8c");
    EXPECT_EQ(io::digest("foobar"), "fnv1a64:85944171f73967e8");
}

TEST(FormatDouble, ShortestRoundTrip)
{
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(1.0), "1");
    const double x = 1.0 / 3.0;
    EXPECT_EQ(std::stod(io::format_double(x)), x);
}
