#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specsplit/config.hpp"
#include "specsplit/error.hpp"

namespace specsplit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

//---------------------------------------------------------------------------//
/*!
 * Square complex matrix standing in for an element of a finite von Neumann
 * algebra. The trace is normalized, tau(I) = 1.
 */
class OperatorMatrix {
public:
    explicit OperatorMatrix(Matrix m) : m_(std::move(m))
    {
        if (m_.rows() < 1 || m_.rows() != m_.cols()) {
            throw InputError("OperatorMatrix must be square with dim >= 1, got "
                             + std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
        }
        if (!m_.allFinite()) {
            throw InputError("OperatorMatrix entries must be finite");
        }
    }

    static OperatorMatrix identity(std::size_t n) { return OperatorMatrix(Matrix::Identity(idx(n), idx(n))); }
    static OperatorMatrix zero(std::size_t n) { return OperatorMatrix(Matrix::Zero(idx(n), idx(n))); }

    static OperatorMatrix diagonal(const std::vector<cplx>& d)
    {
        Matrix m = Matrix::Zero(idx(d.size()), idx(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) {
            m(idx(i), idx(i)) = d[i];
        }
        return OperatorMatrix(std::move(m));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& mat() const noexcept { return m_; }
    cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    /// Normalized trace (1/n) sum T_ii.
    cplx trace() const { return m_.trace() / static_cast<double>(m_.rows()); }

    OperatorMatrix adjoint() const { return OperatorMatrix(m_.adjoint()); }

private:
    static Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

    Matrix m_;
};

/// Spectral (operator) norm.
inline double op_norm(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// Normalized trace of a plain matrix.
inline cplx normalized_trace(const Matrix& m) { return m.trace() / static_cast<double>(m.rows()); }

//---------------------------------------------------------------------------//
// Schur decomposition
//---------------------------------------------------------------------------//

/// Strict "comes before" relation on eigenvalues. Equal keys keep their
/// current Schur position.
using EigenOrder = std::function<bool(cplx, cplx)>;

struct SchurForm {
    Matrix unitary;    // U
    Matrix triangular; // R, strictly lower part exactly zero

    std::size_t dim() const noexcept { return static_cast<std::size_t>(triangular.rows()); }

    std::vector<cplx> diagonal() const
    {
        std::vector<cplx> d(dim());
        for (Eigen::Index i = 0; i < triangular.rows(); ++i) {
            d[static_cast<std::size_t>(i)] = triangular(i, i);
        }
        return d;
    }

    Matrix reconstruct() const { return unitary * triangular * unitary.adjoint(); }
};

namespace detail {

/// Plane rotation [c s; -conj(s) c] with real c mapping (f, g) to (r, 0).
struct Givens {
    double c;
    cplx s;
};

inline Givens make_givens(cplx f, cplx g)
{
    if (g == cplx{}) {
        return {1.0, cplx{}};
    }
    if (f == cplx{}) {
        return {0.0, std::conj(g) / std::abs(g)};
    }
    const double af = std::abs(f);
    const double d = std::hypot(af, std::abs(g));
    return {af / d, (f / af) * std::conj(g) / d};
}

/// x <- c x + s y, y <- c y - conj(s) x, elementwise.
template <typename X, typename Y>
void apply_rotation(X&& x, Y&& y, double c, cplx s)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const cplx xi = x(i);
        const cplx yi = y(i);
        x(i) = c * xi + s * yi;
        y(i) = c * yi - std::conj(s) * xi;
    }
}

/// Exchanges diagonal entries k and k+1 of the triangular factor by a unitary
/// similarity. The diagonal values are moved exactly; the rotation is the
/// 1x1-block case of the Sylvester-based swap (LAPACK ztrexc).
inline void swap_adjacent(Matrix& u, Matrix& r, Eigen::Index k)
{
    const Eigen::Index n = r.rows();
    const cplx t11 = r(k, k);
    const cplx t22 = r(k + 1, k + 1);
    const Givens g = make_givens(r(k, k + 1), t22 - t11);
    if (k + 2 < n) {
        apply_rotation(r.row(k).tail(n - k - 2), r.row(k + 1).tail(n - k - 2), g.c, g.s);
    }
    if (k > 0) {
        apply_rotation(r.col(k).head(k), r.col(k + 1).head(k), g.c, std::conj(g.s));
    }
    r(k, k) = t22;
    r(k + 1, k + 1) = t11;
    apply_rotation(u.col(k), u.col(k + 1), g.c, std::conj(g.s));
}

} // namespace detail

/// Reorders a Schur form in place so its diagonal is sorted by `before`.
/// Insertion sort by adjacent swaps: stable, so ties keep Schur position.
inline void reorder_schur(SchurForm& form, const EigenOrder& before)
{
    const Eigen::Index n = form.triangular.rows();
    for (Eigen::Index i = 1; i < n; ++i) {
        for (Eigen::Index j = i; j > 0 && before(form.triangular(j, j), form.triangular(j - 1, j - 1)); --j) {
            detail::swap_adjacent(form.unitary, form.triangular, j - 1);
        }
    }
}

/// Complex Schur decomposition T = U R U*, unordered (solver order).
inline SchurForm schur(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
{
    const Matrix& a = t.mat();
    const auto n = a.rows();
    Eigen::ComplexSchur<Matrix> solver(n);
    if (tol.schur_max_iterations > 0) {
        solver.setMaxIterations(tol.schur_max_iterations);
    }
    solver.compute(a, true);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("Schur decomposition did not converge (n = " + std::to_string(n)
                               + ", ||T||_F = " + std::to_string(a.norm())
                               + "); the matrix may be extremely ill-conditioned or badly scaled");
    }
    SchurForm form{solver.matrixU(), solver.matrixT()};
    form.triangular.triangularView<Eigen::StrictlyLower>().setZero();
    return form;
}

/// Schur decomposition with diagonal sorted by `before`.
inline SchurForm schur(const OperatorMatrix& t, const EigenOrder& before, const Tolerances& tol = default_tolerances())
{
    SchurForm form = schur(t, tol);
    reorder_schur(form, before);
    return form;
}

/// Residuals of the Schur invariants.
struct SchurResiduals {
    double unitarity;      // ||U*U - I||
    double factorization;  // ||URU* - T|| / max(1, ||T||)
    bool strictly_lower_zero;
};

inline SchurResiduals schur_residuals(const SchurForm& form, const OperatorMatrix& t)
{
    const auto n = form.unitary.rows();
    SchurResiduals res{};
    res.unitarity = op_norm(form.unitary.adjoint() * form.unitary - Matrix::Identity(n, n));
    res.factorization = op_norm(form.reconstruct() - t.mat()) / std::max(1.0, op_norm(t.mat()));
    res.strictly_lower_zero = true;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            if (form.triangular(i, j) != cplx{}) {
                res.strictly_lower_zero = false;
            }
        }
    }
    return res;
}

/// Eigenvalues in Schur order.
inline std::vector<cplx> eigenvalues(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
{
    Eigen::ComplexSchur<Matrix> solver(t.mat().rows());
    if (tol.schur_max_iterations > 0) {
        solver.setMaxIterations(tol.schur_max_iterations);
    }
    solver.compute(t.mat(), false);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("eigenvalue iteration did not converge (n = " + std::to_string(t.dim()) + ")");
    }
    const Matrix& r = solver.matrixT();
    std::vector<cplx> ev(t.dim());
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        ev[static_cast<std::size_t>(i)] = r(i, i);
    }
    return ev;
}

//---------------------------------------------------------------------------//
// Singular values
//---------------------------------------------------------------------------//

struct SvdResult {
    RealVector values; // descending, nonnegative
    Matrix left;       // columns are left singular vectors
    Matrix right;      // columns are right singular vectors
};

inline SvdResult svd(const Matrix& a)
{
    Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("SVD did not converge (" + std::to_string(a.rows()) + "x"
                               + std::to_string(a.cols()) + ")");
    }
    return {solver.singularValues(), solver.matrixU(), solver.matrixV()};
}

inline SvdResult svd(const OperatorMatrix& t) { return svd(t.mat()); }

/// Singular values only, descending.
inline RealVector singular_values(const Matrix& a)
{
    Eigen::BDCSVD<Matrix> solver(a);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("SVD did not converge (" + std::to_string(a.rows()) + "x"
                               + std::to_string(a.cols()) + ")");
    }
    return solver.singularValues();
}

inline RealVector singular_values(const OperatorMatrix& t) { return singular_values(t.mat()); }

//---------------------------------------------------------------------------//
// Resolvents
//---------------------------------------------------------------------------//

/// Evaluates (z - T)^{-1} for many z against one T. The singularity
/// threshold is sing_rel * ||T||.
class Resolvent {
public:
    explicit Resolvent(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
        : t_(t.mat()), norm_(op_norm(t_)), tol_(tol)
    {
    }

    double threshold() const { return tol_.sing_rel * norm_; }
    double operator_norm() const { return norm_; }

    Matrix operator()(cplx z) const
    {
        const auto n = t_.rows();
        const Matrix id = Matrix::Identity(n, n);
        const Matrix shifted = z * id - t_;
        Eigen::PartialPivLU<Matrix> lu(shifted);
        Matrix inv = lu.inverse();
        const double thr = threshold();
        const double inv_norm = inv.norm();
        // 1/||X||_F <= s_min, so a large lower bound settles the check cheaply.
        if (!inv.allFinite() || !(1.0 / inv_norm > thr)) {
            const RealVector sv = singular_values(shifted);
            const double smin = sv(n - 1);
            if (smin <= thr || !inv.allFinite()) {
                throw ContourTouchesSpectrum(z, smin);
            }
        }
        Matrix residual = id - shifted * inv;
        if (op_norm(residual) > tol_.solve(static_cast<std::size_t>(n))) {
            inv += inv * residual;
        }
        return inv;
    }

private:
    Matrix t_;
    double norm_;
    Tolerances tol_;
};

/// (z I - T)^{-1}.
inline OperatorMatrix resolvent_apply(const OperatorMatrix& t, cplx z, const Tolerances& tol = default_tolerances())
{
    return OperatorMatrix(Resolvent(t, tol)(z));
}

//---------------------------------------------------------------------------//
// Range projections
//---------------------------------------------------------------------------//

struct RangeProjection {
    Matrix projector;   // Hermitian idempotent
    Matrix basis;       // orthonormal basis of the range, n x rank
    std::size_t rank;
};

/// Orthogonal projector onto the numerical column space of `e`. Throws
/// AmbiguousRank when a singular value sits within a factor rank_gap of the
/// cut rank_tol * s_max.
inline RangeProjection range_projection(const Matrix& e, double rank_tol, double rank_gap)
{
    const auto n = e.rows();
    const SvdResult s = svd(e);
    const double smax = s.values.size() > 0 ? s.values(0) : 0.0;
    std::size_t rank = 0;
    if (smax > 0.0) {
        const double cut = rank_tol * smax;
        for (Eigen::Index i = 0; i < s.values.size(); ++i) {
            const double v = s.values(i);
            if (v > cut / rank_gap && v < cut * rank_gap) {
                throw AmbiguousRank("ambiguous rank: singular value " + std::to_string(v)
                                    + " lies within a factor " + std::to_string(rank_gap) + " of the cut "
                                    + std::to_string(cut));
            }
            if (v > cut) {
                ++rank;
            }
        }
    }
    const auto r = static_cast<Eigen::Index>(rank);
    Matrix basis = s.left.leftCols(r);
    Matrix proj = basis * basis.adjoint();
    if (r == 0) {
        proj = Matrix::Zero(n, n);
    }
    return {std::move(proj), std::move(basis), rank};
}

inline RangeProjection range_projection(const OperatorMatrix& e, const Tolerances& tol = default_tolerances())
{
    return range_projection(e.mat(), tol.rank_tol, tol.rank_gap);
}

/// Orthogonal projector onto span(columns of q) for q with orthonormal columns.
inline Matrix projector_from_basis(const Matrix& q)
{
    return q * q.adjoint();
}

/// Lattice join of orthogonal projections: projector onto the sum of ranges,
/// via orthonormalization of the concatenated range bases.
inline Matrix join(const std::vector<Matrix>& projections, double rank_tol = 1e-8)
{
    if (projections.empty()) {
        throw InputError("join of an empty family");
    }
    const auto n = projections.front().rows();
    std::vector<Matrix> bases;
    Eigen::Index cols = 0;
    for (const auto& p : projections) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.adjoint()));
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (es.eigenvalues()(i) > 0.5) {
                ++k;
            }
        }
        bases.push_back(es.eigenvectors().rightCols(k));
        cols += k;
    }
    if (cols == 0) {
        return Matrix::Zero(n, n);
    }
    Matrix concat(n, cols);
    Eigen::Index at = 0;
    for (const auto& b : bases) {
        concat.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    const SvdResult s = svd(concat);
    Eigen::Index rank = 0;
    while (rank < s.values.size() && s.values(rank) > rank_tol) {
        ++rank;
    }
    return projector_from_basis(s.left.leftCols(rank));
}

/// Lattice meet: complement of the join of complements.
inline Matrix meet(const std::vector<Matrix>& projections, double rank_tol = 1e-8)
{
    if (projections.empty()) {
        throw InputError("meet of an empty family");
    }
    const auto n = projections.front().rows();
    const Matrix id = Matrix::Identity(n, n);
    std::vector<Matrix> complements;
    complements.reserve(projections.size());
    for (const auto& p : projections) {
        complements.push_back(id - p);
    }
    return id - join(complements, rank_tol);
}

} // namespace specsplit
