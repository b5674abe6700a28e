#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "specsplit/assignment.hpp"
#include "specsplit/ensembles.hpp"
#include "specsplit/hs_projections.hpp"
#include "specsplit/spectral_stats.hpp"

using namespace specsplit;

namespace {

Matrix m2(cplx a, cplx b, cplx c, cplx d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

const OperatorMatrix tri2{m2(1, 1, 0, 3)};
const Matrix p3 = m2(1, 2, 2, 4) / 5.0;

/// Random matrix with a well separated spectrum: eigenvalues on a jittered
/// lattice, conjugated by a random well-conditioned similarity.
OperatorMatrix separated(std::size_t n, std::uint64_t seed)
{
    RandomStream rng(seed, 3);
    Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
            cplx(static_cast<double>(i % side) + 0.2 * rng.uniform(), static_cast<double>(i / side) + 0.2 * rng.uniform());
    }
    const Matrix s = Matrix::Identity(d.rows(), d.rows()) + 0.3 * sample_ginibre(n, rng).mat();
    return OperatorMatrix(s * d * s.inverse());
}

/// k eigenvalues in the disk |z - c| <= r_in, the rest in r_out <= |z - c| <= 2 r_out,
/// conjugated by I + 0.3 G.
OperatorMatrix clustered(std::size_t n, std::size_t k, std::uint64_t seed, cplx c, double r_in, double r_out)
{
    RandomStream rng(seed, 4);
    Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double rad = i < k ? r_in * std::sqrt(rng.uniform()) : r_out * (1.0 + rng.uniform());
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = c + std::polar(rad, 2.0 * M_PI * rng.uniform());
    }
    const Matrix s = Matrix::Identity(d.rows(), d.rows()) + 0.3 * sample_ginibre(n, rng).mat();
    return OperatorMatrix(s * d * s.inverse());
}

/// Orthonormal basis of the orthogonal complement of range(basis).
Matrix complement_basis(const Matrix& basis)
{
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ();
    return q.rightCols(basis.rows() - basis.cols());
}

} // namespace

TEST(HsOracle, Examples)
{
    const auto a = hs_oracle(OperatorMatrix::diagonal({1.0, 3.0}), Disk{1.0, 0.5});
    EXPECT_LE(op_norm(a.matrix - m2(1, 0, 0, 0)), 1e-14);
    EXPECT_EQ(a.rank, 1u);
    EXPECT_DOUBLE_EQ(a.normalized_rank, 0.5);
    EXPECT_LE(op_norm(hs_oracle(tri2, Disk{1.0, 0.5}).matrix - m2(1, 0, 0, 0)), 1e-14);
    EXPECT_LE(op_norm(hs_oracle(tri2, Disk{3.0, 0.5}).matrix - p3), 1e-14);
}

TEST(HsOracle, BoundaryAmbiguityAborts)
{
    EXPECT_THROW(hs_oracle(OperatorMatrix::diagonal({1.0, 3.0}), Disk{0.0, 1.0}), AmbiguousClassification);
    try {
        hs_oracle(OperatorMatrix::diagonal({1.0, 3.0}), Disk{0.0, 1.0});
    } catch (const AmbiguousClassification& e) {
        EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
    }
}

TEST(HsOracle, InvariantsAndEigenvectorOracle)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t n = 3 + seed % 10;
        const OperatorMatrix t = separated(n, seed);
        const Region b = Disk{{1.0, 1.0}, 1.05 + 0.01 * static_cast<double>(seed % 3)};
        const auto p = hs_oracle(t, b);
        const auto r = projection_residuals(t.mat(), p.matrix);
        EXPECT_LE(r.hermitian, 1e-9 * n);
        EXPECT_LE(r.idempotent, 1e-9 * n);
        EXPECT_LE(r.invariance, 1e-8);
        const Matrix ref = oracle::hs_by_eigenvectors(t.mat(), [&](cplx z) { return b.contains(z); });
        EXPECT_LE(projection_distance(p.matrix, ref), 1e-8);
        EXPECT_DOUBLE_EQ(p.normalized_rank, brown_measure(t).mass([&](cplx z) { return b.contains(z); }));
    }
}

TEST(HsOracle, DeterminantAndBrownSplitting)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t n = 4 + seed % 9;
        const OperatorMatrix t = separated(n, 50 + seed);
        const auto p = hs_oracle(t, Disk{{0.5, 0.5}, 1.3});
        if (p.rank == 0 || p.rank == n) {
            continue;
        }
        const Matrix c = complement_basis(p.basis);
        const OperatorMatrix a(p.basis.adjoint() * t.mat() * p.basis);
        const OperatorMatrix cc(c.adjoint() * t.mat() * c);
        const double tp = p.normalized_rank;
        const double lhs = log_fk_determinant(t);
        const double rhs = tp * log_fk_determinant(a) + (1.0 - tp) * log_fk_determinant(cc);
        EXPECT_NEAR(std::exp(rhs - lhs), 1.0, 1e-8);
        auto ea = eigenvalues(a);
        const auto ec = eigenvalues(cc);
        for (cplx z : ea) {
            EXPECT_TRUE(p.region.contains(z));
        }
        for (cplx z : ec) {
            EXPECT_FALSE(p.region.contains(z));
        }
        ea.insert(ea.end(), ec.begin(), ec.end());
        EXPECT_LE(multiset_distance(ea, eigenvalues(t)), 1e-8);
    }
}

TEST(HsOracle, SupportNestingAndLatticeMonotonicity)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 6 + seed % 7;
        const OperatorMatrix t = separated(n, 100 + seed);
        const cplx c(1.1, 0.9);
        const auto p1 = hs_oracle(t, Disk{c, 0.75});
        const auto p2 = hs_oracle(t, Disk{c, 1.55});
        const auto id = Matrix::Identity(p1.matrix.rows(), p1.matrix.rows());
        EXPECT_LE(op_norm((id - p2.matrix) * p1.matrix), 1e-8);
        // disk inside the complement of a bigger disk's complement
        const auto q1 = hs_oracle(t, DiskComplement{c, 1.55});
        const auto q2 = hs_oracle(t, DiskComplement{c, 0.75});
        EXPECT_LE(op_norm((id - q2.matrix) * q1.matrix), 1e-8);
        const auto far = hs_oracle(t, Disk{cplx(50.0, 0.0), 1.0});
        EXPECT_LE(op_norm((id - q2.matrix) * far.matrix), 1e-8);
        // compression spectra nest
        const OperatorMatrix a1(p1.basis.adjoint() * t.mat() * p1.basis);
        const OperatorMatrix a2(p2.basis.adjoint() * t.mat() * p2.basis);
        if (p1.rank > 0) {
            for (cplx z : eigenvalues(a1)) {
                double best = std::numeric_limits<double>::infinity();
                for (cplx w : eigenvalues(a2)) {
                    best = std::min(best, std::abs(z - w));
                }
                EXPECT_LE(best, 1e-8);
            }
        }
    }
}

TEST(ContourIdempotent, Examples)
{
    const auto a = contour_idempotent(OperatorMatrix::diagonal({0.0, 2.0}), {0.0, 1.0, 256, 1e-3});
    EXPECT_LE(op_norm(a.matrix - m2(1, 0, 0, 0)), 1e-10);
    const auto b = contour_idempotent(OperatorMatrix::zero(3), {0.0, 1.0, 64, 1e-3});
    EXPECT_LE(op_norm(b.matrix - Matrix::Identity(3, 3)), 1e-12);
    const auto c = contour_idempotent(OperatorMatrix::diagonal({2.0}), {0.0, 1.0, 64, 1e-3});
    EXPECT_LE(op_norm(c.matrix), 1e-12);
}

TEST(ContourIdempotent, SpecValidationAndMargin)
{
    const auto t = OperatorMatrix::diagonal({0.0, 1.0});
    EXPECT_THROW(contour_idempotent(t, {0.0, 0.5, 4, 1e-3}), InputError);
    EXPECT_THROW(contour_idempotent(t, {0.0, 0.5, 64, 0.0}), InputError);
    EXPECT_THROW(contour_idempotent(t, {0.0, 0.999, 64, 1e-2}), MarginViolation);
    // a node landing on an eigenvalue
    const auto near = OperatorMatrix::diagonal({0.0, 1.0 + 1e-12});
    EXPECT_THROW(contour_idempotent(near, {0.0, 1.0, 64, 1e-13}), ContourTouchesSpectrum);
}

TEST(Reparameterization, IdentityIsExact)
{
    const auto t = separated(6, 1);
    EXPECT_EQ(contour_reparameterize_check(t, {{1.0, 1.0}, 1.05, 128, 1e-3}, Reparameterization::identity()), 0.0);
}

TEST(Reparameterization, SquareMapMatchesScalarOracle)
{
    // diag(0, 2): each diagonal entry is a scalar left-endpoint sum of
    // w / (w - lambda) with w on the unit circle, evaluated here directly.
    const Reparameterization sq{[](double s) { return s * s; }, [](double s) { return 2.0 * s; }};
    const auto t = OperatorMatrix::diagonal({0.0, 2.0});
    for (std::size_t n : {256u, 512u, 1024u}) {
        double worst = 0.0;
        for (double lambda : {0.0, 2.0}) {
            cplx uniform = 0.0, warped = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double s = static_cast<double>(k) / static_cast<double>(n);
                const cplx w = std::polar(1.0, 2.0 * M_PI * s);
                const cplx v = std::polar(1.0, 2.0 * M_PI * s * s);
                uniform += w / (w - lambda);
                warped += 2.0 * s * v / (v - lambda);
            }
            worst = std::max(worst, std::abs(uniform - warped) / static_cast<double>(n));
        }
        const double dev = contour_reparameterize_check(t, {0.0, 1.0, n, 1e-3}, sq);
        EXPECT_NEAR(dev, worst, 1e-12);
        // the residue at 0 alone loses exactly 1/N
        EXPECT_GE(dev, 1.0 / static_cast<double>(n) - 1e-15);
    }
}

TEST(Reparameterization, ExponentialMapConvergesAtFirstOrder)
{
    const double e = std::exp(1.0);
    const Reparameterization ex{[e](double s) { return (std::exp(s) - 1.0) / (e - 1.0); },
                                [e](double s) { return std::exp(s) / (e - 1.0); }};
    const auto t = OperatorMatrix::diagonal({0.0, 2.0});
    double prev = contour_reparameterize_check(t, {0.0, 1.0, 128, 1e-3}, ex);
    for (std::size_t n : {256u, 512u, 1024u}) {
        const double dev = contour_reparameterize_check(t, {0.0, 1.0, n, 1e-3}, ex);
        EXPECT_GE(prev / dev, 1.5);
        EXPECT_LE(prev / dev, 3.0);
        prev = dev;
    }
}

TEST(HsContour, Examples)
{
    const auto a = hs_contour(OperatorMatrix::diagonal({0.0, 2.0}), Disk{0.0, 1.0}, 256, 1e-3);
    EXPECT_LE(op_norm(a.matrix - m2(1, 0, 0, 0)), 1e-8);
    EXPECT_EQ(a.method, ProjectionMethod::contour);
    const auto b = hs_contour(tri2, Disk{3.0, 1.0}, 512, 1e-3);
    EXPECT_LE(op_norm(b.matrix - p3), 1e-6);
    const auto c = hs_contour(tri2, Disk{2.0, 5.0}, 256, 1e-3);
    EXPECT_LE(op_norm(c.matrix - Matrix::Identity(2, 2)), 1e-10);
    EXPECT_EQ(c.rank, 2u);
}

TEST(HsContour, ConvergesToOracle)
{
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t n = 8 + 4 * seed;
        const OperatorMatrix t = clustered(n, n / 3, 200 + seed, {0.5, -0.5}, 0.5, 2.0);
        const Disk disk{{0.5, -0.5}, 1.0};
        const auto oracle_p = hs_oracle(t, disk);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t nodes : {64u, 256u, 1024u, 2048u}) {
            const auto p = hs_contour(t, disk, nodes, 1e-3);
            const double dev = projection_distance(p.matrix, oracle_p.matrix);
            EXPECT_LE(dev, std::max(prev, 1e-12));
            prev = dev;
        }
        EXPECT_LE(prev, 1e-6);
    }
}

TEST(HsContour, CommutingIdempotentRangesNest)
{
    const OperatorMatrix t = clustered(9, 3, 7, {0.0, 0.0}, 0.3, 2.5);
    const Disk inner{{0.0, 0.0}, 0.6}, outer{{0.0, 0.0}, 7.0};
    const Matrix e1 = contour_idempotent(t, {inner.center, inner.radius, 1024, 1e-3}).matrix;
    const Matrix e2 = contour_idempotent(t, {outer.center, outer.radius, 1024, 1e-3}).matrix;
    EXPECT_LE(op_norm(e1 * e2 - e1), 1e-8 * op_norm(e1));
    EXPECT_LE(op_norm(e1 * e2 - e2 * e1), 1e-8 * op_norm(e1));
    const Matrix r1 = range_projection(e1, 1e-6, 100.0).projector;
    const Matrix r2 = range_projection(e2, 1e-6, 100.0).projector;
    EXPECT_LE(op_norm((Matrix::Identity(9, 9) - r2) * r1), 1e-8);
}

TEST(ProductIdentity, Examples)
{
    EXPECT_LE(riemann_product_identity(OperatorMatrix::zero(2), 0.5, 8).residual, 1e-12);
    EXPECT_LE(riemann_product_identity(OperatorMatrix::diagonal({0.2, 2.0}), 0.5, 16).residual, 1e-10);
    // 8x8 with eigenvalues inside, between and outside the two circles
    Matrix d = Matrix::Zero(8, 8);
    const double radii[] = {0.2, 0.4, 0.5, 0.85, 0.9, 1.3, 1.6, 2.0};
    for (int i = 0; i < 8; ++i) {
        d(i, i) = std::polar(radii[i], 0.7 * i);
    }
    RandomStream rng(11, 0);
    const Matrix s = Matrix::Identity(8, 8) + 0.2 * sample_ginibre(8, rng).mat();
    const auto rep = riemann_product_identity(OperatorMatrix(s * d * s.inverse()), 0.7, 32);
    EXPECT_LE(rep.residual, 1e-8);
}

TEST(ProductIdentity, ExactForEveryNodeCount)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const OperatorMatrix t(0.5 * sample_ginibre(6, 300 + seed).mat());
        for (std::size_t nodes : {1u, 3u, 8u, 16u, 32u}) {
            try {
                const auto rep = riemann_product_identity(t, 0.6, nodes);
                EXPECT_LE(rep.residual, 1e-8 * rep.condition);
            } catch (const ContourTouchesSpectrum&) {
            }
        }
    }
}

TEST(Transport, Examples)
{
    const auto id = moebius_transport(tri2, Disk{3.0, 0.5}, Moebius{});
    EXPECT_LE(id.deviation, 1e-14);
    const auto aff = moebius_transport(OperatorMatrix::diagonal({0.0, 2.0}), Disk{0.0, 1.0}, Moebius::affine(2.0, 1.0));
    EXPECT_LE(op_norm(aff.transported.matrix - m2(1, 0, 0, 0)), 1e-14);
    EXPECT_LE(aff.deviation, 1e-14);
    const auto inv = moebius_transport(OperatorMatrix::diagonal({0.5, 4.0}), DiskComplement{0.0, 1.0},
                                       Moebius::inversion());
    EXPECT_LE(op_norm(inv.transported.matrix - m2(0, 0, 0, 1)), 1e-14);
    EXPECT_LE(inv.deviation, 1e-14);
}

TEST(Transport, RandomConformalInvariance)
{
    int done = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RandomStream rng(seed, 6);
        const OperatorMatrix t = separated(6, 400 + seed);
        const Moebius g{cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal()),
                        cplx(0.3 * rng.normal(), 0.3 * rng.normal()), cplx(1.0 + rng.normal(), rng.normal())};
        try {
            const auto rep = moebius_transport(t, Disk{{1.0, 1.0}, 1.05}, g);
            EXPECT_LE(rep.deviation, 1e-8) << "seed " << seed;
            ++done;
        } catch (const NumericalAbort&) {
        }
    }
    EXPECT_GE(done, 20);
}

TEST(Adjoint, Examples)
{
    const auto a = adjoint_complement(tri2, Disk{1.0, 0.5});
    EXPECT_LE(op_norm(a.complement_from_adjoint - p3), 1e-14);
    EXPECT_LE(a.deviation, 1e-14);
    const auto b = adjoint_complement(OperatorMatrix::diagonal({cplx(0.0, 1.0), 2.0}), Disk{cplx(0.0, 1.0), 0.5});
    EXPECT_LE(op_norm(b.complement_from_adjoint - m2(0, 0, 0, 1)), 1e-14);
    const Matrix h = m2(2, cplx(0, 1), cplx(0, -1), -1);
    const auto c = adjoint_complement(OperatorMatrix(h), Disk{0.0, 1.5});
    const auto direct = hs_oracle(OperatorMatrix(h), Disk{0.0, 1.5});
    EXPECT_LE(op_norm(c.complement_from_adjoint - (Matrix::Identity(2, 2) - direct.matrix)), 1e-12);
}

TEST(Adjoint, RandomDuality)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const OperatorMatrix t = separated(7, 500 + seed);
        EXPECT_LE(adjoint_complement(t, Disk{{0.6, 1.4}, 0.9}).deviation, 1e-8);
    }
}

TEST(ClosedSet, Examples)
{
    const auto t = separated(5, 9);
    const auto one = hs_closed_set(t, Disk{{1.0, 1.0}, 1.05});
    EXPECT_LE(projection_distance(one.from_inside, one.oracle.matrix), 1e-9);
    EXPECT_LE(one.inside_outside_gap, 1e-9);

    const auto d = OperatorMatrix::diagonal({0.0, 3.0, cplx(0.0, 3.0), cplx(3.0, 3.0)});
    const Region two = unite({Disk{0.0, 0.5}, Disk{3.0, 0.5}});
    const auto rep = hs_closed_set(d, two);
    EXPECT_LE(projection_distance(rep.from_inside, OperatorMatrix::diagonal({1.0, 1.0, 0.0, 0.0}).mat()), 1e-9);
    EXPECT_LE(rep.inside_outside_gap, 1e-9);

    const Region annulus = difference(Disk{{1.0, 1.0}, 1.6}, Disk{{1.0, 1.0}, 0.4});
    const auto ann = hs_closed_set(separated(9, 12), annulus);
    EXPECT_LE(ann.inside_outside_gap, 1e-9);
    EXPECT_LE(ann.inside_oracle_gap, 1e-9);
}

TEST(ClosedSet, PredicateWithoutDistanceIsRejected)
{
    const Region blob = Predicate{[](cplx z) { return z.real() > 0.0; }, {}, nullptr};
    EXPECT_THROW(hs_closed_set(OperatorMatrix::diagonal({1.0, -1.0}), blob), InputError);
    EXPECT_EQ(hs_oracle(OperatorMatrix::diagonal({1.0, -1.0}), blob).rank, 1u);
}
