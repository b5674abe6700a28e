#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "specsplit/config.hpp"
#include "specsplit/error.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/parallel.hpp"

namespace specsplit {

//---------------------------------------------------------------------------//
/*!
 * Decreasing step function on (0, 1].
 *
 * Step k covers (breaks[k], breaks[k+1]] with value values[k]. At the jumps
 * this picks the left limit; the singular value function mu(t, T) itself is
 * the right-continuous version, available through at_right(). The two agree
 * off the finitely many breakpoints, so every integral is the same.
 */
struct SingularValueProfile {
    std::vector<double> breaks; // 0 = breaks[0] < ... < breaks[m] = 1
    std::vector<double> values; // size m

    static SingularValueProfile uniform(std::vector<double> vals)
    {
        SingularValueProfile p;
        const std::size_t n = vals.size();
        p.breaks.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            p.breaks[k] = static_cast<double>(k) / static_cast<double>(n);
        }
        p.breaks[n] = 1.0;
        p.values = std::move(vals);
        return p;
    }

    std::size_t steps() const noexcept { return values.size(); }

    double at(double t) const
    {
        if (t <= 0.0 || t > 1.0) {
            throw InputError("profile argument must lie in (0, 1]");
        }
        auto it = std::lower_bound(breaks.begin() + 1, breaks.end(), t);
        const auto k = static_cast<std::size_t>(it - breaks.begin()) - 1;
        return values[std::min(k, values.size() - 1)];
    }

    /// Right-continuous representative; zero at t = 1.
    double at_right(double t) const
    {
        if (t < 0.0 || t > 1.0) {
            throw InputError("profile argument must lie in [0, 1]");
        }
        auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
        const auto k = static_cast<std::size_t>(it - breaks.begin()) - 1;
        return k < values.size() ? values[k] : 0.0;
    }

    /// Integral over (0, 1] of f(value).
    double integrate(const std::function<double(double)>& f) const
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            acc += (breaks[k + 1] - breaks[k]) * f(values[k]);
        }
        return acc;
    }

    /// Integral over (0, t] of log(value); -infinity once a zero step is hit.
    double log_integral(double t) const
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < values.size() && breaks[k] < t; ++k) {
            const double width = std::min(t, breaks[k + 1]) - breaks[k];
            if (width <= 0.0) {
                continue;
            }
            if (values[k] <= 0.0) {
                return -std::numeric_limits<double>::infinity();
            }
            acc += width * std::log(values[k]);
        }
        return acc;
    }

    bool is_decreasing(double rel_tol = 0.0) const
    {
        for (std::size_t k = 1; k < values.size(); ++k) {
            if (values[k] > values[k - 1] * (1.0 + rel_tol)) {
                return false;
            }
        }
        return true;
    }
};

/// Pointwise scaling c * p.
inline SingularValueProfile scale(SingularValueProfile p, double c)
{
    for (double& v : p.values) {
        v *= c;
    }
    return p;
}

//---------------------------------------------------------------------------//
// Atomic (Brown) measures
//---------------------------------------------------------------------------//

struct Atom {
    cplx location;
    double weight;
};

struct AtomicMeasure {
    std::vector<Atom> atoms;

    double total() const
    {
        double s = 0.0;
        for (const auto& a : atoms) {
            s += a.weight;
        }
        return s;
    }

    std::vector<cplx> locations() const
    {
        std::vector<cplx> out;
        out.reserve(atoms.size());
        for (const auto& a : atoms) {
            out.push_back(a.location);
        }
        return out;
    }

    double mass(const std::function<bool(cplx)>& in) const
    {
        double s = 0.0;
        for (const auto& a : atoms) {
            if (in(a.location)) {
                s += a.weight;
            }
        }
        return s;
    }

    /// Push-forward under f.
    AtomicMeasure push(const std::function<cplx(cplx)>& f) const
    {
        AtomicMeasure out;
        out.atoms.reserve(atoms.size());
        for (const auto& a : atoms) {
            out.atoms.push_back({f(a.location), a.weight});
        }
        return out;
    }

    /// Integral of log|z - lambda|.
    double log_potential(cplx lambda) const
    {
        double s = 0.0;
        for (const auto& a : atoms) {
            s += a.weight * std::log(std::abs(a.location - lambda));
        }
        return s;
    }
};

/// Equal-weight measure on a list of points.
inline AtomicMeasure counting_measure(const std::vector<cplx>& points)
{
    AtomicMeasure m;
    const double w = 1.0 / static_cast<double>(points.size());
    m.atoms.reserve(points.size());
    for (const cplx& z : points) {
        m.atoms.push_back({z, w});
    }
    return m;
}

//---------------------------------------------------------------------------//
// Singular value calculus
//---------------------------------------------------------------------------//

inline SingularValueProfile mu_profile(const OperatorMatrix& t)
{
    const RealVector s = singular_values(t);
    return SingularValueProfile::uniform(std::vector<double>(s.data(), s.data() + s.size()));
}

/// tau(log(1 + |T|)).
inline double log_norm(const OperatorMatrix& t)
{
    const RealVector s = singular_values(t);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        acc += std::log1p(s(i));
    }
    return acc / static_cast<double>(s.size());
}

/// tau(log+(|T| / scale)).
inline double log_plus_moment(const OperatorMatrix& t, double scale)
{
    if (!(scale > 0.0)) {
        throw InputError("log_plus_moment: scale must be positive");
    }
    const RealVector s = singular_values(t);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        acc += std::max(0.0, std::log(s(i) / scale));
    }
    return acc / static_cast<double>(s.size());
}

/// log of the Fuglede-Kadison determinant, tau(log|T|); -infinity when the
/// smallest singular value is at or below sing_rel times the largest.
inline double log_fk_determinant(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
{
    const RealVector s = singular_values(t);
    const auto n = s.size();
    if (s(0) == 0.0 || s(n - 1) <= tol.sing_rel * s(0)) {
        return -std::numeric_limits<double>::infinity();
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::log(s(i));
    }
    return acc / static_cast<double>(n);
}

/// Fuglede-Kadison determinant exp(tau(log|T|)) = |det T|^{1/n}; exactly 0
/// for numerically singular T.
inline double fk_determinant(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
{
    const double l = log_fk_determinant(t, tol);
    return std::isinf(l) ? 0.0 : std::exp(l);
}

/// Brown measure of a matrix: its eigenvalues, each with weight 1/n.
inline AtomicMeasure brown_measure(const OperatorMatrix& t, const Tolerances& tol = default_tolerances())
{
    return counting_measure(eigenvalues(t, tol));
}

/// Phi(s, nu) = integral of z over the closed disk |z| <= s.
inline cplx phi(double s, const AtomicMeasure& nu)
{
    if (!(s > 0.0)) {
        throw InputError("phi: s must be positive");
    }
    cplx acc{};
    for (const auto& a : nu.atoms) {
        if (std::abs(a.location) <= s) {
            acc += a.weight * a.location;
        }
    }
    return acc;
}

//---------------------------------------------------------------------------//
// Logarithmic submajorization
//---------------------------------------------------------------------------//

struct SubmajorizationReport {
    bool holds = true;
    std::vector<double> t;      // checkpoints
    std::vector<double> margin; // rhs - lhs at each checkpoint; +inf / -inf on the infinite branches
};

namespace detail {

/// Compares two log-integrals allowing -infinity on either side.
inline double log_margin(double lhs, double rhs)
{
    const bool lhs_inf = std::isinf(lhs);
    const bool rhs_inf = std::isinf(rhs);
    if (lhs_inf && rhs_inf) {
        return 0.0;
    }
    if (lhs_inf) {
        return std::numeric_limits<double>::infinity();
    }
    if (rhs_inf) {
        return -std::numeric_limits<double>::infinity();
    }
    return rhs - lhs;
}

} // namespace detail

/// Checks minor <<_log major: for all t, integral_0^t log minor <= integral_0^t
/// log major + slack. Both integrals are piecewise linear between the
/// merged breakpoints, so checking there is exact.
inline SubmajorizationReport log_submajorized(const SingularValueProfile& minor, const SingularValueProfile& major,
                                              double slack = 1e-9)
{
    std::vector<double> ts(minor.breaks.begin() + 1, minor.breaks.end());
    ts.insert(ts.end(), major.breaks.begin() + 1, major.breaks.end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    SubmajorizationReport rep;
    for (double t : ts) {
        const double m = detail::log_margin(minor.log_integral(t), major.log_integral(t));
        rep.t.push_back(t);
        rep.margin.push_back(m);
        if (m < -slack) {
            rep.holds = false;
        }
    }
    return rep;
}

/// True iff b <<_log a, i.e. `a` logarithmically submajorizes `b`.
inline SubmajorizationReport log_submajorizes(const OperatorMatrix& a, const OperatorMatrix& b, double slack = 1e-9)
{
    return log_submajorized(mu_profile(b), mu_profile(a), slack);
}

//---------------------------------------------------------------------------//
// S-transform and dilation
//---------------------------------------------------------------------------//

/// S(t, T) = mu(t)(1 + tau(log+(|T| / mu(t))) / t) at t = k/n; 0 where mu
/// vanishes.
inline SingularValueProfile s_transform(const OperatorMatrix& t)
{
    const RealVector s = singular_values(t);
    const auto n = static_cast<std::size_t>(s.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double mu = s(static_cast<Eigen::Index>(k));
        if (mu <= 0.0) {
            continue;
        }
        double lp = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            lp += std::max(0.0, std::log(s(static_cast<Eigen::Index>(i)) / mu));
        }
        // (1/t) * tau(.) with t = (k+1)/n and tau = (1/n) sum
        out[k] = mu * (1.0 + lp / static_cast<double>(k + 1));
    }
    return SingularValueProfile::uniform(std::move(out));
}

/// (sigma_2 p)(t) = p(t / 2) on (0, 1].
inline SingularValueProfile dilate2(const SingularValueProfile& p)
{
    SingularValueProfile out;
    out.breaks.push_back(0.0);
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        const double b = 2.0 * p.breaks[k + 1];
        out.values.push_back(p.values[k]);
        if (b >= 1.0) {
            out.breaks.push_back(1.0);
            break;
        }
        out.breaks.push_back(b);
    }
    return out;
}

/// Exact continuum check of S(T) <<_log 4 sigma_2 mu(T) over all t in (0, 1],
/// with S(t, T) taken at every t rather than at the grid points only.
/// On each step S(t) = s_k (1 + c_k / t) integrates in closed form, and the
/// gap is concave there, so endpoints plus one stationary point suffice.
inline SubmajorizationReport s_transform_submajorization(const OperatorMatrix& t, double slack = 1e-9)
{
    const RealVector s = singular_values(t);
    const auto n = static_cast<std::size_t>(s.size());
    const double dn = static_cast<double>(n);
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    auto antideriv = [&](double x, double c) { return xlogx(x + c) - xlogx(x); };

    SubmajorizationReport rep;
    double lhs = 0.0; // integral of log S up to the left end of the current step
    double rhs = 0.0; // integral of log(4 mu(t/2))
    for (std::size_t k = 0; k < n; ++k) {
        const double a = static_cast<double>(k) / dn;
        const double b = static_cast<double>(k + 1) / dn;
        const double sk = s(static_cast<Eigen::Index>(k));
        const double rk = 4.0 * s(static_cast<Eigen::Index>(k / 2));
        double ck = 0.0;
        if (sk > 0.0) {
            for (std::size_t i = 0; i < k; ++i) {
                ck += std::max(0.0, std::log(s(static_cast<Eigen::Index>(i)) / sk));
            }
            ck /= dn;
        }
        auto lhs_at = [&](double x) {
            if (std::isinf(lhs) || sk <= 0.0) {
                return neg_inf;
            }
            return lhs + (x - a) * std::log(sk) + antideriv(x, ck) - antideriv(a, ck);
        };
        auto rhs_at = [&](double x) { return (std::isinf(rhs) || rk <= 0.0) ? neg_inf : rhs + (x - a) * std::log(rk); };

        std::vector<double> probes{b};
        if (sk > 0.0 && rk > sk && ck > 0.0) {
            const double tstar = ck * sk / (rk - sk);
            if (tstar > a && tstar < b) {
                probes.insert(probes.begin(), tstar);
            }
        }
        for (double x : probes) {
            const double m = detail::log_margin(lhs_at(x), rhs_at(x));
            rep.t.push_back(x);
            rep.margin.push_back(m);
            if (m < -slack) {
                rep.holds = false;
            }
        }
        lhs = lhs_at(b);
        rhs = rhs_at(b);
    }
    return rep;
}

//---------------------------------------------------------------------------//
// Grid Brown density
//---------------------------------------------------------------------------//

struct Window {
    double xmin, xmax, ymin, ymax;

    bool contains(cplx z) const
    {
        return z.real() >= xmin && z.real() <= xmax && z.imag() >= ymin && z.imag() <= ymax;
    }
};

struct GridSpec {
    Window window;
    double hx;
    double hy;
    double epsilon; // <= 0 selects 1e-6 * ||T||
};

/// Brown density on cell centers: the 5-point Laplacian of
/// L(lambda) = (1/2) tau(log(|T - lambda|^2 + eps^2)) divided by 2 pi.
struct GridDensity {
    Window window;
    double hx = 0.0;
    double hy = 0.0;
    double epsilon = 0.0;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> density; // row-major, index j * nx + i (j along y)
    double clamped_mass = 0.0;   // mass removed by clamping negative cells
    bool spectrum_outside_window = false;

    cplx center(std::size_t i, std::size_t j) const
    {
        return {window.xmin + (static_cast<double>(i) + 0.5) * hx, window.ymin + (static_cast<double>(j) + 0.5) * hy};
    }

    double cell_mass(std::size_t i, std::size_t j) const { return density[j * nx + i] * hx * hy; }

    double total_mass() const
    {
        double s = 0.0;
        for (double d : density) {
            s += d;
        }
        return s * hx * hy;
    }

    /// Mass of cells whose centers satisfy `in`.
    double mass(const std::function<bool(cplx)>& in) const
    {
        double s = 0.0;
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                if (in(center(i, j))) {
                    s += cell_mass(i, j);
                }
            }
        }
        return s;
    }
};

/// (1/2) tau(log(|T - lambda|^2 + eps^2)) via a Cholesky log-determinant.
inline double regularized_log_potential(const Matrix& t, cplx lambda, double epsilon)
{
    const auto n = t.rows();
    Matrix shifted = t - lambda * Matrix::Identity(n, n);
    Matrix gram = shifted.adjoint() * shifted;
    gram.diagonal().array() += epsilon * epsilon;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw ConvergenceError("Cholesky factorization failed in regularized log-determinant");
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::log(std::real(llt.matrixLLT()(i, i)));
    }
    // log det = 2 sum log L_ii; times 1/2 and divided by n
    return acc / static_cast<double>(n);
}

inline GridDensity brown_grid(const OperatorMatrix& t, const GridSpec& spec, const Tolerances& tol = default_tolerances())
{
    const Window& w = spec.window;
    if (!(w.xmax > w.xmin) || !(w.ymax > w.ymin)) {
        throw InputError("brown_grid: window must have positive area");
    }
    if (!(spec.hx > 0.0) || !(spec.hy > 0.0)) {
        throw InputError("brown_grid: grid steps must be positive");
    }
    GridDensity g;
    g.window = w;
    g.nx = static_cast<std::size_t>(std::llround((w.xmax - w.xmin) / spec.hx));
    g.ny = static_cast<std::size_t>(std::llround((w.ymax - w.ymin) / spec.hy));
    if (g.nx < 1 || g.ny < 1) {
        throw InputError("brown_grid: grid steps larger than the window");
    }
    g.hx = (w.xmax - w.xmin) / static_cast<double>(g.nx);
    g.hy = (w.ymax - w.ymin) / static_cast<double>(g.ny);
    g.epsilon = spec.epsilon > 0.0 ? spec.epsilon : 1e-6 * op_norm(t.mat());
    if (!(g.epsilon > 0.0)) {
        g.epsilon = 1e-6; // T = 0 and no explicit epsilon
    }

    for (const cplx& z : eigenvalues(t, tol)) {
        if (!w.contains(z)) {
            g.spectrum_outside_window = true;
        }
    }

    // Potential on the cell centers plus a one-cell ring.
    const std::size_t px = g.nx + 2;
    const std::size_t py = g.ny + 2;
    const Matrix& a = t.mat();
    const double eps = g.epsilon;
    auto rows = parallel_map(py, [&](std::size_t jj) {
        std::vector<double> row(px);
        const double y = w.ymin + (static_cast<double>(jj) - 0.5) * g.hy;
        for (std::size_t ii = 0; ii < px; ++ii) {
            const double x = w.xmin + (static_cast<double>(ii) - 0.5) * g.hx;
            row[ii] = regularized_log_potential(a, {x, y}, eps);
        }
        return row;
    });

    g.density.assign(g.nx * g.ny, 0.0);
    const double cell = g.hx * g.hy;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double c = rows[j + 1][i + 1];
            const double lap = (rows[j + 1][i + 2] + rows[j + 1][i] - 2.0 * c) / (g.hx * g.hx)
                               + (rows[j + 2][i + 1] + rows[j][i + 1] - 2.0 * c) / (g.hy * g.hy);
            double d = lap / (2.0 * std::numbers::pi);
            if (d < 0.0) {
                g.clamped_mass += -d * cell;
                d = 0.0;
            }
            g.density[j * g.nx + i] = d;
        }
    }
    return g;
}

} // namespace specsplit
