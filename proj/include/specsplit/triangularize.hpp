#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "specsplit/assignment.hpp"
#include "specsplit/config.hpp"
#include "specsplit/error.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/ordering.hpp"
#include "specsplit/spectral_stats.hpp"

namespace specsplit {

//---------------------------------------------------------------------------//
/*!
 * T = N + Q along an ordering curve.
 *
 * With T = U R U* ordered by the curve, N = U diag(R) U* is normal and
 * Q = U strict_upper(R) U* is nilpotent. The leading Schur vectors give the
 * flag of T-invariant projections q_0 <= q_1 <= ... <= q_n.
 */
struct SchurSplit {
    SchurForm schur;
    Matrix normal_part;
    Matrix nilpotent_part;
    OrderingCurve curve;
    bool window_expanded = false; // Hilbert window had to grow to fit the spectrum

    std::size_t dim() const noexcept { return schur.dim(); }

    /// q_k: projection onto the first k Schur vectors.
    Matrix flag(std::size_t k) const
    {
        const auto kk = static_cast<Eigen::Index>(k);
        const Matrix b = schur.unitary.leftCols(kk);
        return b * b.adjoint();
    }

    /// Brown measure of Q read off its triangular form: every atom sits at
    /// the (exactly zero) diagonal of the strict upper part.
    AtomicMeasure nilpotent_brown_measure() const
    {
        std::vector<cplx> zeros(dim(), cplx{});
        return counting_measure(zeros);
    }

    AtomicMeasure normal_brown_measure() const { return counting_measure(schur.diagonal()); }
};

inline SchurSplit split(const OperatorMatrix& t, const OrderingCurve& curve,
                        const Tolerances& tol = default_tolerances())
{
    SchurForm form = schur(t, tol);
    const InducedOrder order = induced_order(curve, form.diagonal());
    reorder_schur(form, order.before);

    const auto n = form.triangular.rows();
    Matrix diag = Matrix::Zero(n, n);
    diag.diagonal() = form.triangular.diagonal();
    Matrix strict = form.triangular;
    strict.diagonal().setZero();

    SchurSplit s;
    s.normal_part = form.unitary * diag * form.unitary.adjoint();
    s.nilpotent_part = form.unitary * strict * form.unitary.adjoint();
    s.schur = std::move(form);
    s.curve = curve;
    if (order.window) {
        s.curve.window = order.window;
    }
    s.window_expanded = order.window_expanded;
    return s;
}

/// Q^k by binary powering.
inline Matrix matrix_power(const Matrix& q, std::size_t k)
{
    const auto n = q.rows();
    Matrix result = Matrix::Identity(n, n);
    Matrix base = q;
    while (k > 0) {
        if (k & 1u) {
            result = result * base;
        }
        k >>= 1u;
        if (k > 0) {
            base = base * base;
        }
    }
    return result;
}

/// ||Q^n|| <= kappa ||Q||^n, the growth-normalized nilpotence test.
inline bool is_numerically_nilpotent(const Matrix& q, double kappa = 1e-8)
{
    const auto n = static_cast<std::size_t>(q.rows());
    const double qn = op_norm(q);
    if (qn == 0.0) {
        return true;
    }
    const double lhs = op_norm(matrix_power(q / qn, n)); // ||Q^n|| / ||Q||^n without overflow
    return lhs <= kappa;
}

struct SplitResiduals {
    double factorization;     // ||T - N - Q|| / max(1, ||T||)
    double normality;         // ||N N* - N* N|| / ||N||^2
    double nilpotence;        // ||Q^n|| / ||Q||^n (0 when Q = 0)
    double brown_distance;    // eig(N) from an independent solver vs the Schur diagonal
    bool nilpotent_brown_exact; // strict part has an exactly zero diagonal
    double flag_invariance;   // max_k ||T q_k - q_k T q_k||_F / max(1, ||T||)
    double schur_identity;    // | ||Q||_F^2 - (||T||_F^2 - sum |lambda|^2) | / max(1, ||T||_F^2)
    bool sorted;              // diagonal respects the curve order
};

inline SplitResiduals split_residuals(const SchurSplit& s, const OperatorMatrix& t)
{
    const Matrix& a = t.mat();
    const auto n = a.rows();
    SplitResiduals r{};
    const double tn = std::max(1.0, op_norm(a));
    r.factorization = op_norm(a - s.normal_part - s.nilpotent_part) / tn;

    const Matrix& nn = s.normal_part;
    const double nnorm = op_norm(nn);
    r.normality = nnorm > 0.0 ? op_norm(nn * nn.adjoint() - nn.adjoint() * nn) / (nnorm * nnorm) : 0.0;

    const double qn = op_norm(s.nilpotent_part);
    r.nilpotence = qn > 0.0 ? op_norm(matrix_power(s.nilpotent_part / qn, static_cast<std::size_t>(n))) : 0.0;

    Eigen::ComplexEigenSolver<Matrix> es(nn, false);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("eigen-solver failed on the normal part");
    }
    std::vector<cplx> ev_n(es.eigenvalues().data(), es.eigenvalues().data() + n);
    r.brown_distance = multiset_distance(ev_n, s.schur.diagonal());

    r.nilpotent_brown_exact = true;
    Matrix strict = s.schur.triangular;
    strict.diagonal().setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (strict(i, i) != cplx{}) {
            r.nilpotent_brown_exact = false;
        }
    }

    // (1 - q_k) T q_k is the lower-left block of U* T U; its Frobenius norm
    // bounds the operator norm from above.
    const Matrix m = s.schur.unitary.adjoint() * a * s.schur.unitary;
    r.flag_invariance = 0.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        r.flag_invariance = std::max(r.flag_invariance, m.bottomLeftCorner(n - k, k).norm() / tn);
    }

    double sum_sq = 0.0;
    for (cplx z : s.schur.diagonal()) {
        sum_sq += std::norm(z);
    }
    const double tf2 = a.squaredNorm();
    r.schur_identity = std::abs(s.nilpotent_part.squaredNorm() - (tf2 - sum_sq)) / std::max(1.0, tf2);

    const std::vector<cplx> d = s.schur.diagonal();
    const InducedOrder order = induced_order(s.curve, d);
    r.sorted = true;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (order.before(d[i], d[i - 1])) {
            r.sorted = false;
        }
    }
    return r;
}

//---------------------------------------------------------------------------//
// Pinching along a flag
//---------------------------------------------------------------------------//

/// Mutually orthogonal projections summing to the identity, from an
/// orthonormal basis cut into consecutive blocks of the given sizes.
inline std::vector<Matrix> flag_blocks(const Matrix& basis, const std::vector<std::size_t>& sizes)
{
    std::vector<Matrix> out;
    Eigen::Index at = 0;
    for (std::size_t s : sizes) {
        const auto k = static_cast<Eigen::Index>(s);
        if (s == 0 || at + k > basis.cols()) {
            throw InputError("flag block sizes must be positive and fit the basis");
        }
        const Matrix b = basis.middleCols(at, k);
        out.push_back(b * b.adjoint());
        at += k;
    }
    if (at != basis.cols()) {
        throw InputError("flag block sizes must sum to the dimension");
    }
    return out;
}

/// Sum_k p_k S p_k for a complete orthogonal family of projections.
inline Matrix pinch(const Matrix& s, const std::vector<Matrix>& blocks, const Tolerances& tol = default_tolerances())
{
    if (blocks.empty()) {
        throw InputError("pinch needs at least one projection");
    }
    const auto n = s.rows();
    const double lim = tol.proj(static_cast<std::size_t>(n));
    Matrix total = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Matrix& p = blocks[i];
        if (p.rows() != n || p.cols() != n) {
            throw InputError("flag projection has the wrong size");
        }
        if (op_norm(p - p.adjoint()) > lim || op_norm(p * p - p) > lim) {
            throw InputError("non-orthogonal flag: block " + std::to_string(i) + " is not an orthogonal projection");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (op_norm(p * blocks[j]) > lim) {
                throw InputError("non-orthogonal flag: blocks " + std::to_string(j) + " and " + std::to_string(i)
                                 + " overlap");
            }
        }
        total += p;
    }
    if (op_norm(total - Matrix::Identity(n, n)) > lim) {
        throw InputError("non-orthogonal flag: projections do not sum to the identity");
    }
    Matrix out = Matrix::Zero(n, n);
    for (const auto& p : blocks) {
        out += p * s * p;
    }
    return out;
}

struct PinchReport {
    std::optional<double> delta_ratio; // Delta(pinch T) / Delta(T); empty when both vanish
    bool both_zero = false;
    bool delta_consistent = false; // ratio within 1e-8 of 1, or both zero
    double brown_distance = 0.0;   // multiset distance of the two spectra
    bool brown_match = false;      // brown_distance <= 1e-8 * max(1, ||T||)
    bool submajorized = false;     // pinch(T) <<_log T
    double min_margin = 0.0;
};

/// Checks that pinching along a T-invariant flag keeps the determinant and
/// spectrum, and that the pinched matrix is log-submajorized by T.
inline PinchReport pinch_preserves(const OperatorMatrix& t, const std::vector<Matrix>& blocks,
                                   const Tolerances& tol = default_tolerances())
{
    const Matrix& a = t.mat();
    const auto n = a.rows();
    const double tn = std::max(1.0, op_norm(a));
    Matrix q = Matrix::Zero(n, n);
    for (std::size_t k = 0; k + 1 < blocks.size(); ++k) {
        q += blocks[k];
        const double res = op_norm(a * q - q * a * q) / tn;
        if (res > tol.inv(static_cast<std::size_t>(n))) {
            throw InvarianceViolation(k + 1, res);
        }
    }

    const OperatorMatrix pinched(pinch(a, blocks, tol));
    PinchReport rep;
    const double dt = fk_determinant(t, tol);
    const double dp = fk_determinant(pinched, tol);
    if (dt == 0.0 && dp == 0.0) {
        rep.both_zero = true;
        rep.delta_consistent = true;
    } else if (dt > 0.0) {
        rep.delta_ratio = dp / dt;
        rep.delta_consistent = std::abs(*rep.delta_ratio - 1.0) <= 1e-8;
    }
    rep.brown_distance = multiset_distance(eigenvalues(pinched, tol), eigenvalues(t, tol));
    rep.brown_match = rep.brown_distance <= 1e-8 * tn;
    const auto sub = log_submajorizes(t, pinched);
    rep.submajorized = sub.holds;
    rep.min_margin = sub.margin.empty() ? 0.0 : *std::min_element(sub.margin.begin(), sub.margin.end());
    return rep;
}

//---------------------------------------------------------------------------//
// Quasinilpotence, traces, and the commutator estimates
//---------------------------------------------------------------------------//

/// ||Q^k||^{1/k} for k = 1..max_power.
inline std::vector<double> quasinilpotent_profile(const Matrix& q, std::size_t max_power)
{
    std::vector<double> out;
    out.reserve(max_power);
    Matrix power = q;
    for (std::size_t k = 1; k <= max_power; ++k) {
        if (k > 1) {
            power = power * q;
        }
        out.push_back(std::pow(op_norm(power), 1.0 / static_cast<double>(k)));
    }
    return out;
}

/// First k with ||Q^k|| <= kappa ||Q||^k; empty if none up to max_power.
inline std::optional<std::size_t> vanishing_power(const Matrix& q, std::size_t max_power, double kappa = 1e-8)
{
    const double qn = op_norm(q);
    if (qn == 0.0) {
        return 1;
    }
    const Matrix unit = q / qn;
    Matrix power = unit;
    for (std::size_t k = 1; k <= max_power; ++k) {
        if (k > 1) {
            power = power * unit;
        }
        if (op_norm(power) <= kappa) {
            return k;
        }
    }
    return std::nullopt;
}

struct LidskiiReport {
    cplx trace_t;
    cplx trace_n;
    cplx trace_q;
    cplx sum_eigs; // (1/n) sum of eigenvalues
    double max_abs_gap;
};

inline LidskiiReport lidskii_check(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
{
    const SchurSplit s = split(t, OrderingCurve{}, tol);
    LidskiiReport r{};
    r.trace_t = t.trace();
    r.trace_n = normalized_trace(s.normal_part);
    r.trace_q = normalized_trace(s.nilpotent_part);
    cplx acc{};
    for (cplx z : s.schur.diagonal()) {
        acc += z;
    }
    r.sum_eigs = acc / static_cast<double>(t.dim());
    r.max_abs_gap = std::max({std::abs(r.trace_t - r.trace_n), std::abs(r.trace_t - r.sum_eigs),
                              std::abs(r.trace_n - r.sum_eigs), std::abs(r.trace_q)});
    return r;
}

struct CommutatorBoundRow {
    double s;
    double log_plus;           // tau(log+(2e|Q| / s))
    double real_part_lhs;      // |tau(A E_|A|[0, s])|, A = Re Q
    double imag_part_lhs;      // |tau(B E_|B|[0, s])|, B = Im Q
    double part_bound;         // 300 s tau(log+(2e|Q| / s))
    double theta_integral;     // integral over [0, 2 pi] of Re Phi(s, Q + e^{i theta} Q*)
    double theta_bound;        // 400 pi s tau(log+(2e|Q| / s))
    double quadrature_error;   // |I_2N - I_N| at termination
    std::size_t theta_nodes;
    bool holds;
};

struct CommutatorBoundOptions {
    std::size_t initial_nodes = 16;
    std::size_t max_nodes = 1u << 16;
    double rhs_fraction = 0.01;  // stop once the error estimate is below this share of the bound
    double relative_stable = 1e-3;
    double nilpotence_kappa = 1e-8;
};

/// Checks, for each s, the estimates for the real and imaginary parts of a
/// nilpotent Q against 300 s tau(log+(2e|Q|/s)) and the theta-averaged
/// Phi estimate against 400 pi s tau(log+(2e|Q|/s)).
inline std::vector<CommutatorBoundRow> commutator_bound_suite(const Matrix& q, const std::vector<double>& s_grid,
                                                              const CommutatorBoundOptions& opt = {})
{
    const auto n = q.rows();
    if (!is_numerically_nilpotent(q, opt.nilpotence_kappa)) {
        throw InputError("commutator_bound_suite: input is not nilpotent");
    }
    for (double s : s_grid) {
        if (!(s > 0.0)) {
            throw InputError("commutator_bound_suite: s values must be positive");
        }
    }
    const double dn = static_cast<double>(n);
    const RealVector sq = singular_values(q);
    const Matrix re = 0.5 * (q + q.adjoint());
    const Matrix im = cplx(0.0, -0.5) * (q - q.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es_re(re, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> es_im(im, Eigen::EigenvaluesOnly);

    // Spectra of the normal matrices Q + e^{i theta} Q*, cached per node.
    std::vector<std::vector<cplx>> cache;
    auto spectra_for = [&](std::size_t nodes) {
        // nodes is a power-of-two multiple of initial_nodes; reuse the coarse nodes
        std::vector<std::vector<cplx>> out(nodes);
        const std::size_t old = cache.size();
        auto fresh = parallel_map(nodes, [&](std::size_t k) -> std::vector<cplx> {
            if (old > 0 && (k * old) % nodes == 0) {
                return {};
            }
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nodes);
            const Matrix tt = q + std::polar(1.0, theta) * q.adjoint();
            Eigen::ComplexEigenSolver<Matrix> es(tt, false);
            return std::vector<cplx>(es.eigenvalues().data(), es.eigenvalues().data() + n);
        });
        for (std::size_t k = 0; k < nodes; ++k) {
            out[k] = (old > 0 && (k * old) % nodes == 0) ? cache[k * old / nodes] : std::move(fresh[k]);
        }
        cache = std::move(out);
    };
    auto integral = [&](double s) {
        double acc = 0.0;
        for (const auto& ev : cache) {
            double re_phi = 0.0;
            for (cplx z : ev) {
                if (std::abs(z) <= s) {
                    re_phi += z.real();
                }
            }
            acc += re_phi / dn;
        }
        return acc * 2.0 * std::numbers::pi / static_cast<double>(cache.size());
    };

    std::vector<CommutatorBoundRow> rows;
    for (double s : s_grid) {
        CommutatorBoundRow r{};
        r.s = s;
        double lp = 0.0;
        for (Eigen::Index i = 0; i < sq.size(); ++i) {
            lp += std::max(0.0, std::log(2.0 * std::numbers::e * sq(i) / s));
        }
        r.log_plus = lp / dn;
        auto truncated_trace = [&](const RealVector& ev) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < ev.size(); ++i) {
                if (std::abs(ev(i)) <= s) {
                    acc += ev(i);
                }
            }
            return std::abs(acc / dn);
        };
        r.real_part_lhs = truncated_trace(es_re.eigenvalues());
        r.imag_part_lhs = truncated_trace(es_im.eigenvalues());
        r.part_bound = 300.0 * s * r.log_plus;
        r.theta_bound = 400.0 * std::numbers::pi * s * r.log_plus;
        rows.push_back(r);
    }

    cache.clear();
    std::size_t nodes = opt.initial_nodes;
    spectra_for(nodes);
    std::vector<double> prev(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        prev[i] = integral(rows[i].s);
    }
    std::vector<bool> done(rows.size(), false);
    while (true) {
        const std::size_t next = nodes * 2;
        spectra_for(next);
        bool all = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (done[i]) {
                continue;
            }
            const double cur = integral(rows[i].s);
            const double err = std::abs(cur - prev[i]);
            rows[i].theta_integral = cur;
            rows[i].quadrature_error = err;
            rows[i].theta_nodes = next;
            if (err <= opt.rhs_fraction * rows[i].theta_bound || err <= opt.relative_stable * std::abs(cur)
                || (err == 0.0)) {
                done[i] = true;
            } else {
                all = false;
            }
            prev[i] = cur;
        }
        nodes = next;
        if (all || nodes >= opt.max_nodes) {
            break;
        }
    }
    for (auto& r : rows) {
        r.holds = r.real_part_lhs <= r.part_bound && r.imag_part_lhs <= r.part_bound
                  && std::abs(r.theta_integral) <= r.theta_bound + r.quadrature_error
                  && r.quadrature_error <= opt.rhs_fraction * r.theta_bound + (r.theta_bound == 0.0 ? 1e-14 : 0.0);
    }
    return rows;
}

//---------------------------------------------------------------------------//
// Flag cuts: spectral partition and determinant factorization
//---------------------------------------------------------------------------//

struct FlagCutRow {
    std::size_t k;
    bool exact_partition;  // diag(R) splits into the first k and the rest
    double top_distance;   // eig(U_k* T U_k) vs diag(R)[0, k)
    double bottom_distance;
    double det_rel_error;  // |Delta(T) - Delta(A)^{k/n} Delta(C)^{1-k/n}| / Delta(T)
};

struct FlagCutReport {
    std::vector<FlagCutRow> cuts;
    double max_distance = 0.0;
    double max_det_rel_error = 0.0;
    bool all_exact = true;
};

inline FlagCutReport phi_spectral_decomposition_consistency(const OperatorMatrix& t,
                                                            const OrderingCurve& curve = {},
                                                            const Tolerances& tol = default_tolerances())
{
    const SchurSplit s = split(t, curve, tol);
    const auto n = static_cast<Eigen::Index>(t.dim());
    const double dn = static_cast<double>(n);
    const std::vector<cplx> diag = s.schur.diagonal();
    const double log_dt = log_fk_determinant(t, tol);

    FlagCutReport rep;
    for (Eigen::Index k = 1; k < n; ++k) {
        FlagCutRow row{};
        row.k = static_cast<std::size_t>(k);
        const Matrix top_basis = s.schur.unitary.leftCols(k);
        const Matrix bottom_basis = s.schur.unitary.rightCols(n - k);
        const OperatorMatrix a(top_basis.adjoint() * t.mat() * top_basis);
        const OperatorMatrix c(bottom_basis.adjoint() * t.mat() * bottom_basis);

        std::vector<cplx> head(diag.begin(), diag.begin() + k);
        std::vector<cplx> tail(diag.begin() + k, diag.end());
        // The partition is structural: R's diagonal is a permutation of T's
        // spectrum and the cut separates it into the two compressions.
        std::vector<cplx> joined = head;
        joined.insert(joined.end(), tail.begin(), tail.end());
        row.exact_partition = joined == diag;
        row.top_distance = multiset_distance(eigenvalues(a, tol), head);
        row.bottom_distance = multiset_distance(eigenvalues(c, tol), tail);

        const double log_da = log_fk_determinant(a, tol);
        const double log_dc = log_fk_determinant(c, tol);
        const double kk = static_cast<double>(k) / dn;
        if (std::isinf(log_dt)) {
            row.det_rel_error = (std::isinf(log_da) || std::isinf(log_dc)) ? 0.0 : 1.0;
        } else {
            const double predicted = kk * log_da + (1.0 - kk) * log_dc;
            row.det_rel_error = std::abs(std::expm1(predicted - log_dt));
        }
        rep.max_distance = std::max({rep.max_distance, row.top_distance, row.bottom_distance});
        rep.max_det_rel_error = std::max(rep.max_det_rel_error, row.det_rel_error);
        rep.all_exact = rep.all_exact && row.exact_partition;
        rep.cuts.push_back(row);
    }
    return rep;
}

} // namespace specsplit
