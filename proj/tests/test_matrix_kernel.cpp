#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "specsplit/assignment.hpp"
#include "specsplit/ensembles.hpp"
#include "specsplit/matrix_kernel.hpp"

using namespace specsplit;

namespace {

Matrix m2(cplx a, cplx b, cplx c, cplx d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

EigenOrder by_modulus()
{
    return [](cplx a, cplx b) { return std::abs(a) < std::abs(b); };
}

} // namespace

TEST(OperatorMatrix, RejectsBadShapes)
{
    EXPECT_THROW(OperatorMatrix(Matrix(2, 3)), InputError);
    EXPECT_THROW(OperatorMatrix(Matrix(0, 0)), InputError);
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(OperatorMatrix{m}, InputError);
    m(0, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(OperatorMatrix{m}, InputError);
}

TEST(OperatorMatrix, NormalizedTrace)
{
    for (std::size_t n : {1u, 3u, 17u}) {
        EXPECT_EQ(OperatorMatrix::identity(n).trace(), cplx(1.0));
    }
    EXPECT_EQ(OperatorMatrix::diagonal({1.0, 3.0}).trace(), cplx(2.0));
}

TEST(Schur, DiagonalPermutation)
{
    const SchurForm f = schur(OperatorMatrix::diagonal({3.0, 1.0}), by_modulus());
    EXPECT_NEAR(std::abs(f.diagonal()[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.diagonal()[1] - 3.0), 0.0, 1e-14);
}

TEST(Schur, AlreadyOrderedTriangular)
{
    const SchurForm f = schur(OperatorMatrix(m2(1, 1, 0, 3)), by_modulus());
    EXPECT_NEAR(std::abs(f.diagonal()[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.diagonal()[1] - 3.0), 0.0, 1e-14);
    // U = I up to unimodular column phases
    EXPECT_NEAR(std::abs(f.unitary(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(f.unitary(1, 1)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(f.unitary(1, 0)), 0.0, 1e-14);
}

TEST(Schur, SwapNeeded)
{
    const SchurForm f = schur(OperatorMatrix(m2(3, 1, 0, 1)), by_modulus());
    EXPECT_NEAR(std::abs(f.diagonal()[0] - 1.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(f.diagonal()[1] - 3.0), 0.0, 1e-13);
    // first Schur vector is the eigenvector (1, -2)/sqrt(5) up to phase
    const Vector u = f.unitary.col(0);
    const Vector v = (Vector(2) << 1.0, -2.0).finished() / std::sqrt(5.0);
    EXPECT_NEAR(std::abs(v.dot(u)), 1.0, 1e-13);
}

TEST(Schur, TiesKeepSchurPosition)
{
    // 2, 1, 2 by modulus: the two 2s keep their relative order
    const SchurForm f = schur(OperatorMatrix::diagonal({2.0, 1.0, cplx(0.0, 2.0)}), by_modulus());
    EXPECT_NEAR(std::abs(f.diagonal()[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.diagonal()[1] - 2.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.diagonal()[2] - cplx(0.0, 2.0)), 0.0, 1e-14);
}

TEST(Schur, RandomInvariantsAndCharPolyOracle)
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t n = 2 + seed % 5; // 2..6
        const OperatorMatrix t = sample_ginibre(n, seed);
        const SchurForm f = schur(t, by_modulus());
        const auto r = schur_residuals(f, t);
        EXPECT_LE(r.unitarity, 1e-10 * n);
        EXPECT_LE(r.factorization, 1e-9 * n);
        for (Eigen::Index i = 0; i < f.triangular.rows(); ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                ASSERT_EQ(f.triangular(i, j), cplx(0.0));
            }
        }
        const auto d = f.diagonal();
        for (std::size_t i = 1; i < d.size(); ++i) {
            EXPECT_LE(std::abs(d[i - 1]), std::abs(d[i]) + 1e-14);
        }
        EXPECT_LE(multiset_distance(d, oracle::eigenvalues_charpoly(t.mat())), 1e-8);
        // leading Schur spans are invariant
        for (Eigen::Index k = 1; k < f.triangular.rows(); ++k) {
            const Matrix b = f.unitary.leftCols(k);
            const Matrix tb = t.mat() * b;
            EXPECT_LE(op_norm(tb - b * (b.adjoint() * tb)), 1e-12 * n);
        }
    }
}

TEST(Schur, DefectiveInput)
{
    Matrix j = Matrix::Zero(5, 5);
    for (int i = 0; i < 4; ++i) {
        j(i, i + 1) = 1.0;
    }
    j.diagonal().setConstant(2.0);
    const SchurForm f = schur(OperatorMatrix(j), by_modulus());
    EXPECT_LE(schur_residuals(f, OperatorMatrix(j)).factorization, 1e-12);
}

TEST(Svd, Examples)
{
    const RealVector id = singular_values(OperatorMatrix::identity(4));
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(id(i), 1.0, 1e-15);
    }
    const RealVector nil = singular_values(m2(0, 1, 0, 0));
    EXPECT_NEAR(nil(0), 1.0, 1e-15);
    EXPECT_NEAR(nil(1), 0.0, 1e-15);
    // T*T has eigenvalues a, b with a + b = 11, ab = 9
    const RealVector s = singular_values(m2(1, 1, 0, 3));
    const double a = s(0) * s(0), b = s(1) * s(1);
    EXPECT_NEAR(a + b, 11.0, 1e-12);
    EXPECT_NEAR(a * b, 9.0, 1e-12);
    EXPECT_NEAR(a, (11.0 + std::sqrt(85.0)) / 2.0, 1e-12);
}

TEST(Svd, ReconstructionAndGramOracle)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const OperatorMatrix t = sample_ginibre(9, seed);
        const SvdResult r = svd(t);
        const Matrix back = r.left * r.values.cast<cplx>().asDiagonal() * r.right.adjoint();
        EXPECT_LE(op_norm(back - t.mat()), 1e-9 * 9 * op_norm(t.mat()));
        const auto g = oracle::singular_values_gram(t.mat());
        for (Eigen::Index i = 0; i < 9; ++i) {
            EXPECT_NEAR(r.values(i), g[static_cast<std::size_t>(i)], 1e-10);
            if (i > 0) {
                EXPECT_LE(r.values(i), r.values(i - 1));
            }
        }
    }
}

TEST(Resolvent, Examples)
{
    const OperatorMatrix z = resolvent_apply(OperatorMatrix::zero(3), 1.0);
    EXPECT_LE(op_norm(z.mat() - Matrix::Identity(3, 3)), 1e-15);
    const OperatorMatrix d = resolvent_apply(OperatorMatrix::diagonal({0.0, 2.0}), 1.0);
    EXPECT_LE(op_norm(d.mat() - m2(1, 0, 0, -1)), 1e-15);
    const OperatorMatrix n = resolvent_apply(OperatorMatrix(m2(0, 1, 0, 0)), 1.0);
    EXPECT_LE(op_norm(n.mat() - m2(1, 1, 0, 1)), 1e-15);
}

TEST(Resolvent, TouchingSpectrumCarriesPoint)
{
    const OperatorMatrix t = OperatorMatrix::diagonal({0.0, 2.0});
    try {
        resolvent_apply(t, 2.0);
        FAIL() << "expected ContourTouchesSpectrum";
    } catch (const ContourTouchesSpectrum& e) {
        EXPECT_EQ(e.point(), cplx(2.0));
    }
    EXPECT_THROW(resolvent_apply(t, cplx(2.0 + 1e-12)), ContourTouchesSpectrum);
}

TEST(Resolvent, ResolventIdentity)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const OperatorMatrix t = sample_ginibre(8, seed);
        RandomStream rng(seed, 99);
        const cplx z1(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
        const cplx z2(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
        const Resolvent res(t);
        const Matrix r1 = res(z1), r2 = res(z2);
        const double cond = op_norm(r1) * op_norm(r2) * std::max(1.0, op_norm(t.mat()));
        EXPECT_LE(op_norm(r1 - r2 - (z2 - z1) * r1 * r2), 1e-9 * 8 * cond);
        const Matrix id = Matrix::Identity(8, 8);
        EXPECT_LE(op_norm((z1 * id - t.mat()) * r1 - id), 1e-9 * 8);
    }
}

TEST(RangeProjection, Examples)
{
    const auto a = range_projection(OperatorMatrix(m2(1, 0, 0, 0)));
    EXPECT_LE(op_norm(a.projector - m2(1, 0, 0, 0)), 1e-15);
    EXPECT_EQ(a.rank, 1u);
    // non-Hermitian idempotent: column space is span{(1, 0)}
    const Matrix e = m2(1, 1, 0, 0);
    const auto b = range_projection(OperatorMatrix(e));
    EXPECT_LE(op_norm(b.projector - oracle::gram_schmidt_projector(e)), 1e-14);
    EXPECT_LE(op_norm(b.projector - m2(1, 0, 0, 0)), 1e-14);
    const auto z = range_projection(OperatorMatrix::zero(3));
    EXPECT_EQ(z.rank, 0u);
    EXPECT_EQ(op_norm(z.projector), 0.0);
}

TEST(RangeProjection, AmbiguousRank)
{
    // 1e-6 sits right on the default cut
    EXPECT_THROW(range_projection(OperatorMatrix::diagonal({1.0, 1e-6})), AmbiguousRank);
    EXPECT_NO_THROW(range_projection(OperatorMatrix::diagonal({1.0, 1e-12})));
}

TEST(RangeProjection, RandomIdempotentsAreHermitianProjectors)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 3 + seed % 6;
        RandomStream rng(seed, 1);
        const Matrix s = sample_ginibre(n, rng).mat();
        Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const std::size_t k = 1 + seed % (n - 1);
        for (std::size_t i = 0; i < k; ++i) {
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
        }
        const Matrix e = s * d * s.inverse();
        const auto p = range_projection(OperatorMatrix(e));
        EXPECT_EQ(p.rank, k);
        EXPECT_LE(op_norm(p.projector - p.projector.adjoint()), 1e-10);
        EXPECT_LE(op_norm(p.projector * p.projector - p.projector), 1e-10);
        EXPECT_LE(op_norm(p.projector * e - e), 1e-9 * op_norm(e));
    }
}

TEST(Lattice, JoinAndMeetOfAxes)
{
    const Matrix e1 = OperatorMatrix::diagonal({1.0, 0.0, 0.0}).mat();
    const Matrix e2 = OperatorMatrix::diagonal({0.0, 1.0, 0.0}).mat();
    const Matrix e12 = OperatorMatrix::diagonal({1.0, 1.0, 0.0}).mat();
    EXPECT_LE(op_norm(join({e1, e2}) - e12), 1e-14);
    EXPECT_LE(op_norm(meet({e1, e2})), 1e-14);
    EXPECT_LE(op_norm(meet({e12, e1}) - e1), 1e-14);
    EXPECT_LE(op_norm(join({e12, e1}) - e12), 1e-14);
}

TEST(Assignment, BottleneckMatchesBruteForce)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RandomStream rng(seed, 4);
        const std::size_t n = 1 + seed % 6;
        std::vector<cplx> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.emplace_back(rng.normal(), rng.normal());
            b.emplace_back(rng.normal(), rng.normal());
        }
        EXPECT_NEAR(multiset_distance(a, b), oracle::bottleneck_bruteforce(a, b), 1e-15);
    }
    EXPECT_TRUE(std::isinf(multiset_distance({1.0}, {1.0, 2.0})));
}

TEST(Assignment, HungarianMatchesBruteForce)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RandomStream rng(seed, 5);
        const std::size_t n = 1 + seed % 7;
        std::vector<cplx> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.emplace_back(rng.normal(), rng.normal());
            b.emplace_back(rng.normal(), rng.normal());
        }
        EXPECT_NEAR(wasserstein1(a, b), oracle::w1_bruteforce(a, b), 1e-12);
    }
}
