#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "specsplit/config.hpp"
#include "specsplit/error.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/parallel.hpp"
#include "specsplit/region.hpp"

namespace specsplit {

enum class ProjectionMethod { oracle, contour };

inline const char* to_string(ProjectionMethod m) { return m == ProjectionMethod::oracle ? "oracle" : "contour"; }

//---------------------------------------------------------------------------//
/*!
 * T-invariant orthogonal projection P(T, B) whose range carries exactly the
 * eigenvalues of T lying in B.
 */
struct SpectralProjection {
    Matrix matrix;
    Matrix basis; // orthonormal basis of the range, n x rank
    Region region;
    std::size_t rank = 0;
    double normalized_rank = 0.0;
    ProjectionMethod method = ProjectionMethod::oracle;
};

/// Residuals of the projection invariants for a given T.
struct ProjectionResiduals {
    double hermitian;  // ||P - P*||
    double idempotent; // ||P^2 - P||
    double invariance; // ||TP - PTP|| / max(1, ||T||)
};

inline ProjectionResiduals projection_residuals(const Matrix& t, const Matrix& p)
{
    return {op_norm(p - p.adjoint()), op_norm(p * p - p), op_norm(t * p - p * t * p) / std::max(1.0, op_norm(t))};
}

/// ||P - Q|| in operator norm.
inline double projection_distance(const Matrix& p, const Matrix& q) { return op_norm(p - q); }

/// Largest distance between two eigenvalues.
inline double spectral_diameter(const std::vector<cplx>& ev)
{
    double d = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        for (std::size_t j = i + 1; j < ev.size(); ++j) {
            d = std::max(d, std::abs(ev[i] - ev[j]));
        }
    }
    return d;
}

/// Absolute classification tolerance for a spectrum.
inline double classify_tolerance(const std::vector<cplx>& ev, const Tolerances& tol)
{
    double scale = spectral_diameter(ev);
    if (scale == 0.0) {
        for (cplx z : ev) {
            scale = std::max(scale, std::abs(z));
        }
        scale = std::max(scale, 1.0);
    }
    return tol.classify_rel * scale;
}

/// Membership of each eigenvalue in `region`; throws when one sits within
/// the classification tolerance of the boundary.
inline std::vector<bool> classify(const std::vector<cplx>& ev, const Region& region, const Tolerances& tol)
{
    const double ctol = classify_tolerance(ev, tol);
    std::vector<bool> in(ev.size());
    std::vector<AmbiguousClassification::Offender> bad;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (auto d = region.boundary_distance(ev[i]); d && *d <= ctol) {
            bad.push_back({ev[i], *d});
        }
        in[i] = region.contains(ev[i]);
    }
    if (!bad.empty()) {
        std::string msg = "eigenvalues too close to the region boundary (tolerance " + std::to_string(ctol) + "):";
        for (const auto& b : bad) {
            msg += " (" + std::to_string(b.eigenvalue.real()) + ", " + std::to_string(b.eigenvalue.imag())
                   + ") at distance " + std::to_string(b.boundary_distance) + ";";
        }
        throw AmbiguousClassification(msg, std::move(bad));
    }
    return in;
}

/// Exact projection: reorder the Schur form so the eigenvalues in `region`
/// come first and project onto the leading Schur vectors.
inline SpectralProjection hs_oracle(const OperatorMatrix& t, const Region& region,
                                    const Tolerances& tol = default_tolerances())
{
    SchurForm form = schur(t, tol);
    const std::vector<cplx> ev = form.diagonal();
    classify(ev, region, tol);
    reorder_schur(form, [&](cplx a, cplx b) { return region.contains(a) && !region.contains(b); });
    std::size_t k = 0;
    while (k < t.dim() && region.contains(form.triangular(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)))) {
        ++k;
    }
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix basis = form.unitary.leftCols(kk);
    Matrix p = basis * basis.adjoint();
    return {std::move(p), std::move(basis), region, k, static_cast<double>(k) / static_cast<double>(t.dim()),
            ProjectionMethod::oracle};
}

//---------------------------------------------------------------------------//
// Contour integrals
//---------------------------------------------------------------------------//

/// Circle |z - center| = radius sampled at `nodes` equally spaced angles.
struct ContourSpec {
    cplx center{};
    double radius = 1.0;
    std::size_t nodes = 256;
    double margin = 1e-3; // minimal node distance to the spectrum

    void validate() const
    {
        if (nodes < 8) {
            throw InputError("contour needs at least 8 nodes");
        }
        if (!(margin > 0.0)) {
            throw InputError("contour margin must be positive");
        }
        if (!(radius > 0.0)) {
            throw InputError("contour radius must be positive");
        }
    }
};

class MarginViolation : public NumericalAbort {
public:
    using NumericalAbort::NumericalAbort;
};

struct ContourIdempotent {
    Matrix matrix;
    double idempotency_defect; // ||E^2 - E||
};

/// Map from [0, 1] to itself with derivative; identity by default.
struct Reparameterization {
    std::function<double(double)> map;
    std::function<double(double)> derivative;

    static Reparameterization identity()
    {
        return {[](double s) { return s; }, [](double) { return 1.0; }};
    }
};

namespace detail {

inline void check_margin(const std::vector<cplx>& ev, const ContourSpec& spec)
{
    double closest = std::numeric_limits<double>::infinity();
    for (cplx z : ev) {
        closest = std::min(closest, std::abs(std::abs(z - spec.center) - spec.radius));
    }
    if (closest < spec.margin) {
        throw MarginViolation("contour passes within " + std::to_string(closest)
                              + " of the spectrum (margin " + std::to_string(spec.margin) + ")");
    }
}

/// (1/N) sum_{k<N} f(gamma(k/N)) gamma'(k/N) for
/// f(s) = r e^{2 pi i s} (c + r e^{2 pi i s} - T)^{-1}.
inline Matrix riemann_sum(const Resolvent& res, const ContourSpec& spec,
                          const Reparameterization& gamma)
{
    const std::size_t n_nodes = spec.nodes;
    auto terms = parallel_map(n_nodes, [&](std::size_t k) -> Matrix {
        const double s = static_cast<double>(k) / static_cast<double>(n_nodes);
        const double gs = gamma.map(s);
        const double dg = gamma.derivative(s);
        const cplx w = spec.radius * std::polar(1.0, 2.0 * std::numbers::pi * gs);
        return (w * dg) * res(spec.center + w);
    });
    Matrix sum = tree_sum(std::move(terms));
    return sum / static_cast<double>(n_nodes);
}

} // namespace detail

/// Riemann sum for the Riesz idempotent (1/2 pi i) of dz / (z - T) around the circle.
inline ContourIdempotent contour_idempotent(const OperatorMatrix& t, const ContourSpec& spec,
                                            const Tolerances& tol = default_tolerances())
{
    spec.validate();
    detail::check_margin(eigenvalues(t, tol), spec);
    const Resolvent res(t, tol);
    Matrix e = detail::riemann_sum(res, spec, Reparameterization::identity());
    const double defect = op_norm(e * e - e);
    return {std::move(e), defect};
}

/// ||E_N(uniform) - E_N(reparameterized)||, both as left-endpoint Riemann sums.
inline double contour_reparameterize_check(const OperatorMatrix& t, const ContourSpec& spec,
                                           const Reparameterization& gamma,
                                           const Tolerances& tol = default_tolerances())
{
    spec.validate();
    if (std::abs(gamma.map(0.0)) > 1e-14 || std::abs(gamma.map(1.0) - 1.0) > 1e-14) {
        throw InputError("reparameterization must fix 0 and 1");
    }
    detail::check_margin(eigenvalues(t, tol), spec);
    const Resolvent res(t, tol);
    const Matrix uniform = detail::riemann_sum(res, spec, Reparameterization::identity());
    const Matrix warped = detail::riemann_sum(res, spec, gamma);
    return op_norm(uniform - warped);
}

/// Range projection of the contour idempotent for a disk.
inline SpectralProjection hs_contour(const OperatorMatrix& t, const Disk& disk, std::size_t nodes, double margin,
                                     const Tolerances& tol = default_tolerances())
{
    const ContourSpec spec{disk.center, disk.radius, nodes, margin};
    const ContourIdempotent e = contour_idempotent(t, spec, tol);
    RangeProjection rp = range_projection(e.matrix, tol.rank_tol, tol.rank_gap);
    return {std::move(rp.projector), std::move(rp.basis), Region(disk), rp.rank,
            static_cast<double>(rp.rank) / static_cast<double>(t.dim()), ProjectionMethod::contour};
}

struct ProductIdentityReport {
    double residual;  // max(||EF - aE + bF||, ||EF - FE||)
    double condition; // max over nodes of ||(z - T)^{-1}|| * max(1, ||T||)
    double alpha;
    double beta;
};

/// With E the N-node sum on |z| = r and F on |z| = 1, checks
/// E F = E / (1 - r^N) - r^N F / (1 - r^N) = F E.
inline ProductIdentityReport riemann_product_identity(const OperatorMatrix& t, double r, std::size_t nodes,
                                                      const Tolerances& tol = default_tolerances())
{
    if (!(r > 0.0 && r < 1.0)) {
        throw InputError("inner radius must lie in (0, 1)");
    }
    if (nodes < 1) {
        throw InputError("node count must be positive");
    }
    const Resolvent res(t, tol);
    const double nn = static_cast<double>(nodes);
    auto sums = parallel_map(2 * nodes, [&](std::size_t k) -> std::pair<Matrix, double> {
        const double radius = k < nodes ? r : 1.0;
        const std::size_t idx = k % nodes;
        const cplx z = std::polar(radius, 2.0 * std::numbers::pi * static_cast<double>(idx) / nn);
        Matrix rz = res(z);
        const double norm = op_norm(rz);
        return {z * rz, norm};
    });
    std::vector<Matrix> e_terms, f_terms;
    double worst = 0.0;
    for (std::size_t k = 0; k < 2 * nodes; ++k) {
        worst = std::max(worst, sums[k].second);
        (k < nodes ? e_terms : f_terms).push_back(std::move(sums[k].first));
    }
    const Matrix e = tree_sum(std::move(e_terms)) / nn;
    const Matrix f = tree_sum(std::move(f_terms)) / nn;
    const double rn = std::pow(r, nn);
    const double alpha = 1.0 / (1.0 - rn);
    const double beta = rn / (1.0 - rn);
    const Matrix ef = e * f;
    const double residual = std::max(op_norm(ef - alpha * e + beta * f), op_norm(ef - f * e));
    return {residual, worst * std::max(1.0, res.operator_norm()), alpha, beta};
}

//---------------------------------------------------------------------------//
// Transport and duality
//---------------------------------------------------------------------------//

struct TransportReport {
    SpectralProjection transported; // P(gamma(T), gamma(B))
    SpectralProjection direct;      // P(T, B)
    double deviation;
};

inline TransportReport moebius_transport(const OperatorMatrix& t, const Region& region, const Moebius& gamma,
                                         const Tolerances& tol = default_tolerances())
{
    const OperatorMatrix gt(gamma(t.mat()));
    const Region gb = gamma.image(region);
    SpectralProjection moved = hs_oracle(gt, gb, tol);
    SpectralProjection direct = hs_oracle(t, region, tol);
    const double dev = projection_distance(moved.matrix, direct.matrix);
    return {std::move(moved), std::move(direct), dev};
}

struct AdjointReport {
    Matrix complement_from_adjoint; // 1 - P(T*, conj B)
    SpectralProjection direct;      // P(T, C \ B)
    double deviation;
};

inline AdjointReport adjoint_complement(const OperatorMatrix& t, const Region& region,
                                        const Tolerances& tol = default_tolerances())
{
    const auto n = static_cast<Eigen::Index>(t.dim());
    const SpectralProjection adj = hs_oracle(t.adjoint(), region.conjugate(), tol);
    Matrix comp = Matrix::Identity(n, n) - adj.matrix;
    SpectralProjection direct = hs_oracle(t, region.complement(), tol);
    const double dev = projection_distance(comp, direct.matrix);
    return {std::move(comp), std::move(direct), dev};
}

//---------------------------------------------------------------------------//
// Closed sets via lattice operations on disk projections
//---------------------------------------------------------------------------//

struct ClosedSetReport {
    Matrix from_inside;  // join of P(T, disk) over disks inside the set
    Matrix from_outside; // meet of P(T, C \ disk) over disks outside the set
    SpectralProjection oracle;
    double inside_outside_gap;
    double inside_oracle_gap;
    std::size_t inner_disks = 0;
    std::size_t outer_disks = 0;
};

namespace detail {

/// Largest radius from a shrinking ladder whose circle keeps every
/// eigenvalue at least `ctol` away.
inline double safe_radius(cplx center, double reach, const std::vector<cplx>& ev, double ctol)
{
    for (double f : {0.999, 0.99, 0.9, 0.75, 0.5, 0.25, 0.1}) {
        const double r = f * reach;
        bool clear = r > ctol;
        for (cplx z : ev) {
            if (std::abs(std::abs(z - center) - r) <= ctol) {
                clear = false;
                break;
            }
        }
        if (clear) {
            return r;
        }
    }
    return 0.0;
}

} // namespace detail

/// Realizes P(T, B) for a closed set B given by region data as the join of
/// projections of disks inscribed in B around sample points, and as the meet
/// of projections of complements of disks inscribed in C \ B. Sample points
/// are the eigenvalues plus the extra `probes`.
inline ClosedSetReport hs_closed_set(const OperatorMatrix& t, const Region& region,
                                     const std::vector<cplx>& probes = {},
                                     const Tolerances& tol = default_tolerances())
{
    const std::vector<cplx> ev = eigenvalues(t, tol);
    const double ctol = classify_tolerance(ev, tol);
    ClosedSetReport rep{Matrix{}, Matrix{}, hs_oracle(t, region, tol), 0.0, 0.0};
    const auto n = static_cast<Eigen::Index>(t.dim());

    std::vector<cplx> samples = ev;
    samples.insert(samples.end(), probes.begin(), probes.end());

    std::vector<Matrix> inner, outer;
    for (cplx c : samples) {
        const auto reach = region.boundary_distance(c);
        if (!reach) {
            throw InputError("closed-set construction needs a region with boundary distances");
        }
        const double r = detail::safe_radius(c, *reach, ev, ctol);
        if (r <= 0.0) {
            continue;
        }
        if (region.contains(c)) {
            inner.push_back(hs_oracle(t, Disk{c, r}, tol).matrix);
        } else {
            outer.push_back(hs_oracle(t, DiskComplement{c, r}, tol).matrix);
        }
    }
    rep.inner_disks = inner.size();
    rep.outer_disks = outer.size();
    rep.from_inside = inner.empty() ? Matrix(Matrix::Zero(n, n)) : join(inner);
    rep.from_outside = outer.empty() ? Matrix(Matrix::Identity(n, n)) : meet(outer);
    rep.inside_outside_gap = projection_distance(rep.from_inside, rep.from_outside);
    rep.inside_oracle_gap = projection_distance(rep.from_inside, rep.oracle.matrix);
    return rep;
}

} // namespace specsplit
