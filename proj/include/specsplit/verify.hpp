#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specsplit/assignment.hpp"
#include "specsplit/config.hpp"
#include "specsplit/ensembles.hpp"
#include "specsplit/error.hpp"
#include "specsplit/hs_projections.hpp"
#include "specsplit/matrix_io.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/parallel.hpp"
#include "specsplit/random.hpp"
#include "specsplit/region.hpp"
#include "specsplit/spectral_stats.hpp"
#include "specsplit/triangularize.hpp"

namespace specsplit {

struct VerifyCase {
    std::string label;
    OperatorMatrix matrix;
    std::uint64_t stream; // per-case random stream for auxiliary draws
};

/// Empty on success, otherwise a short description of the failure.
using PropertyCheck = std::function<std::optional<std::string>(const VerifyCase&, RandomStream&, const Tolerances&)>;

struct Property {
    std::string suite;
    std::string name;
    PropertyCheck check;
};

struct PropertyResult {
    std::string suite;
    std::string name;
    std::size_t cases = 0;
    std::size_t passed = 0;
    std::string first_failure; // "<case>: <reason>"
};

struct VerifyOptions {
    std::string suite = "all";
    std::uint64_t seed = 0;
    std::vector<std::size_t> n_sizes{4, 8, 16};
    std::size_t per_size = 4;
    std::optional<std::string> matrices_dir;
    Tolerances tol = default_tolerances();
};

struct VerifyReport {
    std::vector<PropertyResult> rows;
    std::vector<std::string> load_failures;

    bool ok() const
    {
        if (!load_failures.empty()) {
            return false;
        }
        return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed == r.cases; });
    }

    /// "suite/name: case: reason" for the first failing property, load errors first.
    std::optional<std::string> first_failure() const
    {
        if (!load_failures.empty()) {
            return "load: " + load_failures.front();
        }
        for (const auto& r : rows) {
            if (r.passed != r.cases) {
                return r.suite + "/" + r.name + ": " + r.first_failure;
            }
        }
        return std::nullopt;
    }

    std::string table() const
    {
        std::size_t w = 8;
        for (const auto& r : rows) {
            w = std::max(w, r.suite.size() + r.name.size() + 1);
        }
        std::ostringstream os;
        os << std::left << std::setw(static_cast<int>(w)) << "property" << "  " << std::right << std::setw(7) << "passed"
           << std::setw(7) << "cases" << "  status\n";
        for (const auto& f : load_failures) {
            os << std::left << std::setw(static_cast<int>(w)) << "load" << "  " << std::right << std::setw(7) << 0
               << std::setw(7) << 1 << "  FAIL " << f << '\n';
        }
        for (const auto& r : rows) {
            os << std::left << std::setw(static_cast<int>(w)) << (r.suite + "/" + r.name) << "  " << std::right
               << std::setw(7) << r.passed << std::setw(7) << r.cases << "  "
               << (r.passed == r.cases ? "ok" : "FAIL " + r.first_failure) << '\n';
        }
        return os.str();
    }

    nlohmann::json to_json() const
    {
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& r : rows) {
            rs.push_back({{"suite", r.suite},
                          {"property", r.name},
                          {"cases", r.cases},
                          {"passed", r.passed},
                          {"first_failure", r.first_failure.empty() ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(r.first_failure)}});
        }
        return {{"properties", rs}, {"load_failures", load_failures}, {"ok", ok()}};
    }
};

namespace detail {

inline std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(3) << v;
    return os.str();
}

inline std::optional<std::string> bound(const char* what, double value, double limit)
{
    if (value <= limit) {
        return std::nullopt;
    }
    return std::string(what) + " " + fmt(value) + " > " + fmt(limit);
}

inline Matrix shifted(const Matrix& a, cplx l) { return a - l * Matrix::Identity(a.rows(), a.cols()); }

inline Matrix random_unitary(std::size_t n, RandomStream& rng)
{
    const Matrix g = sample_ginibre(n, rng).mat();
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
}

/// Off-spectrum probe: a random point pushed away from every eigenvalue.
inline cplx probe_point(const std::vector<cplx>& ev, RandomStream& rng)
{
    double scale = 1.0;
    for (cplx z : ev) {
        scale = std::max(scale, std::abs(z));
    }
    for (;;) {
        const cplx l(scale * (2.0 * rng.uniform() - 1.0) * 1.5, scale * (2.0 * rng.uniform() - 1.0) * 1.5);
        double d = std::numeric_limits<double>::infinity();
        for (cplx z : ev) {
            d = std::min(d, std::abs(z - l));
        }
        if (d > 1e-3 * scale) {
            return l;
        }
    }
}

/// Disk centered at a random eigenvalue whose radius sits in the middle of
/// the widest gap between sorted eigenvalue distances. Returns the disk and
/// the relative margin gap / radius.
inline std::pair<Disk, double> separating_disk(const std::vector<cplx>& ev, RandomStream& rng)
{
    const cplx c = ev[static_cast<std::size_t>(rng.uniform() * static_cast<double>(ev.size())) % ev.size()];
    std::vector<double> d;
    for (cplx z : ev) {
        d.push_back(std::abs(z - c));
    }
    std::sort(d.begin(), d.end());
    d.push_back(d.back() * 2.0 + 1.0);
    std::size_t best = 0;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        const double mid = 0.5 * (d[i] + d[i + 1]);
        const double ratio = (d[i + 1] - d[i]) / (2.0 * mid);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = i;
        }
    }
    const double r = 0.5 * (d[best] + d[best + 1]);
    return {Disk{c, r}, best_ratio};
}

/// Complete orthogonal family of random blocks from a random unitary.
inline std::vector<Matrix> random_flag(std::size_t n, RandomStream& rng)
{
    const Matrix u = random_unitary(n, rng);
    std::vector<std::size_t> sizes;
    std::size_t left = n;
    while (left > 0) {
        const std::size_t s = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(std::min<std::size_t>(left, 3)));
        sizes.push_back(std::min(s, left));
        left -= sizes.back();
    }
    return flag_blocks(u, sizes);
}

} // namespace detail

//---------------------------------------------------------------------------//
// Property catalogue
//---------------------------------------------------------------------------//

inline std::vector<Property> determinant_properties()
{
    using detail::bound;
    std::vector<Property> ps;
    ps.push_back({"determinant", "multiplicative",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      const OperatorMatrix b = sample_ginibre(c.matrix.dim(), rng);
                      const double la = log_fk_determinant(c.matrix, tol);
                      const double lb = log_fk_determinant(b, tol);
                      const double lab = log_fk_determinant(OperatorMatrix(Matrix(c.matrix.mat() * b.mat())), tol);
                      if (std::isinf(la)) {
                          return std::isinf(lab) ? std::nullopt
                                                 : std::optional<std::string>("Delta(AB) > 0 with Delta(A) = 0");
                      }
                      return bound("relative error", std::abs(std::expm1(lab - la - lb)), 1e-8);
                  }});
    ps.push_back({"determinant", "adjoint_invariant",
                  [](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                      const double a = log_fk_determinant(c.matrix, tol);
                      const double b = log_fk_determinant(OperatorMatrix(c.matrix.adjoint()), tol);
                      if (std::isinf(a) || std::isinf(b)) {
                          return (std::isinf(a) && std::isinf(b)) ? std::nullopt
                                                                  : std::optional<std::string>("zero mismatch");
                      }
                      return bound("relative error", std::abs(std::expm1(a - b)), 1e-8);
                  }});
    ps.push_back({"determinant", "brown_duality",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      const AtomicMeasure nu = brown_measure(c.matrix, tol);
                      const cplx l = detail::probe_point(nu.locations(), rng);
                      const double lhs = log_fk_determinant(OperatorMatrix(detail::shifted(c.matrix.mat(), l)), tol);
                      return bound("|log Delta(T - l) - int log|z - l||", std::abs(lhs - nu.log_potential(l)), 1e-9);
                  }});
    ps.push_back({"determinant", "schur_product",
                  [](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                      // Delta(T) = prod |lambda_i|^{1/n}
                      const double ld = log_fk_determinant(c.matrix, tol);
                      double acc = 0.0;
                      for (cplx z : eigenvalues(c.matrix, tol)) {
                          acc += std::log(std::abs(z));
                      }
                      acc /= static_cast<double>(c.matrix.dim());
                      if (std::isinf(ld)) {
                          return acc < std::log(tol.sing_rel) + std::log(std::max(1.0, op_norm(c.matrix.mat())))
                                     ? std::nullopt
                                     : std::optional<std::string>("Delta = 0 but eigenvalues bounded away from 0");
                      }
                      return bound("log gap", std::abs(ld - acc), 1e-9);
                  }});
    return ps;
}

inline std::vector<Property> projection_properties()
{
    using detail::bound;
    std::vector<Property> ps;
    ps.push_back({"projections", "oracle_invariants",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      const auto ev = eigenvalues(c.matrix, tol);
                      const auto [disk, ratio] = detail::separating_disk(ev, rng);
                      const SpectralProjection p = hs_oracle(c.matrix, Region(disk), tol);
                      const auto r = projection_residuals(c.matrix.mat(), p.matrix);
                      const double lim = tol.proj(c.matrix.dim());
                      std::size_t inside = 0;
                      for (cplx z : ev) {
                          inside += std::abs(z - disk.center) <= disk.radius ? 1 : 0;
                      }
                      if (inside != p.rank) {
                          return "rank " + std::to_string(p.rank) + " != eigenvalue count " + std::to_string(inside);
                      }
                      if (auto e = bound("||P - P*||", r.hermitian, lim)) {
                          return e;
                      }
                      if (auto e = bound("||P^2 - P||", r.idempotent, lim)) {
                          return e;
                      }
                      return bound("||TP - PTP||", r.invariance, tol.inv(c.matrix.dim()));
                  }});
    ps.push_back({"projections", "complement_split",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      const auto ev = eigenvalues(c.matrix, tol);
                      const auto [disk, ratio] = detail::separating_disk(ev, rng);
                      const Region reg(disk);
                      const SpectralProjection p = hs_oracle(c.matrix, reg, tol);
                      const SpectralProjection q = hs_oracle(c.matrix, reg.complement(), tol);
                      if (p.rank + q.rank != c.matrix.dim()) {
                          return std::string("ranks do not add up to n");
                      }
                      const auto n = static_cast<Eigen::Index>(c.matrix.dim());
                      const double lim = tol.proj(c.matrix.dim()) * 10.0;
                      if (auto e = bound("||P v Q - I||", op_norm(join({p.matrix, q.matrix}) - Matrix::Identity(n, n)),
                                         lim)) {
                          return e;
                      }
                      return bound("||P ^ Q||", op_norm(meet({p.matrix, q.matrix})), lim);
                  }});
    ps.push_back({"projections", "contour_matches_oracle",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      const auto ev = eigenvalues(c.matrix, tol);
                      const auto [disk, ratio] = detail::separating_disk(ev, rng);
                      if (ratio < 0.05) {
                          return std::nullopt; // spectrum too crowded for a quadrature comparison
                      }
                      const SpectralProjection p = hs_oracle(c.matrix, Region(disk), tol);
                      const SpectralProjection q = hs_contour(c.matrix, disk, 1024, 0.5 * ratio * disk.radius, tol);
                      return bound("||P_contour - P_oracle||", projection_distance(p.matrix, q.matrix), 1e-6);
                  }});
    return ps;
}

inline std::vector<Property> split_properties()
{
    using detail::bound;
    std::vector<Property> ps;
    const CurveKind kinds[] = {CurveKind::lexicographic, CurveKind::spiral, CurveKind::hilbert};
    for (CurveKind k : kinds) {
        ps.push_back({"split", std::string("invariants_") + to_string(k),
                      [k](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                          const SchurSplit s = split(c.matrix, OrderingCurve{k}, tol);
                          const auto r = split_residuals(s, c.matrix);
                          const std::size_t n = c.matrix.dim();
                          if (!r.sorted) {
                              return std::string("diagonal not in curve order");
                          }
                          if (!r.nilpotent_brown_exact) {
                              return std::string("nilpotent part has a nonzero diagonal");
                          }
                          if (auto e = bound("||T - N - Q||", r.factorization, tol.fact(n))) {
                              return e;
                          }
                          if (auto e = bound("normality", r.normality, 1e-10)) {
                              return e;
                          }
                          if (auto e = bound("||Q^n|| / ||Q||^n", r.nilpotence, 1e-8)) {
                              return e;
                          }
                          if (auto e = bound("spectrum(N) vs spectrum(T)", r.brown_distance,
                                             1e-8 * std::max(1.0, op_norm(c.matrix.mat())))) {
                              return e;
                          }
                          if (auto e = bound("flag invariance", r.flag_invariance, tol.inv(n))) {
                              return e;
                          }
                          return bound("Schur identity", r.schur_identity, 1e-10);
                      }});
    }
    ps.push_back({"split", "flag_cuts",
                  [](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                      const FlagCutReport r = phi_spectral_decomposition_consistency(c.matrix, {}, tol);
                      if (!r.all_exact) {
                          return std::string("flag cut does not partition the spectrum");
                      }
                      return bound("determinant identity", r.max_det_rel_error, 1e-8);
                  }});
    ps.push_back({"split", "lidskii",
                  [](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                      const LidskiiReport r = lidskii_check(c.matrix, tol);
                      return bound("trace gap", r.max_abs_gap, 1e-10 * std::max(1.0, op_norm(c.matrix.mat())));
                  }});
    ps.push_back({"split", "pinch_preserves",
                  [](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                      const SchurSplit s = split(c.matrix, OrderingCurve{}, tol);
                      const auto blocks = flag_blocks(s.schur.unitary, std::vector<std::size_t>(c.matrix.dim(), 1));
                      const PinchReport r = pinch_preserves(c.matrix, blocks, tol);
                      if (!r.delta_consistent) {
                          return "Delta ratio " + (r.delta_ratio ? detail::fmt(*r.delta_ratio) : std::string("n/a"));
                      }
                      if (!r.brown_match) {
                          return "spectra differ by " + detail::fmt(r.brown_distance);
                      }
                      return std::nullopt;
                  }});
    return ps;
}

inline std::vector<Property> submajorization_properties()
{
    std::vector<Property> ps;
    ps.push_back({"submajorization", "pinch_invariant_flag",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      // random coarsening of the split's own flag
                      const SchurSplit s = split(c.matrix, OrderingCurve{}, tol);
                      std::vector<std::size_t> sizes;
                      for (std::size_t left = c.matrix.dim(); left > 0;) {
                          const std::size_t k = std::min<std::size_t>(
                              left, 1 + static_cast<std::size_t>(rng.uniform() * 3.0));
                          sizes.push_back(k);
                          left -= k;
                      }
                      const PinchReport r = pinch_preserves(c.matrix, flag_blocks(s.schur.unitary, sizes), tol);
                      if (r.submajorized) {
                          return std::nullopt;
                      }
                      return "margin " + detail::fmt(r.min_margin);
                  }});
    ps.push_back({"submajorization", "pinch_weak_majorization",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances& tol) -> std::optional<std::string> {
                      // Ky Fan: partial sums of singular values shrink under any pinching
                      const auto blocks = detail::random_flag(c.matrix.dim(), rng);
                      const RealVector sp = singular_values(pinch(c.matrix.mat(), blocks, tol));
                      const RealVector st = singular_values(c.matrix);
                      double lhs = 0.0, rhs = 0.0, worst = 0.0;
                      for (Eigen::Index i = 0; i < st.size(); ++i) {
                          lhs += sp(i);
                          rhs += st(i);
                          worst = std::max(worst, lhs - rhs);
                      }
                      return detail::bound("partial-sum excess", worst, 1e-12 * std::max(1.0, rhs));
                  }});
    ps.push_back({"submajorization", "horn_product",
                  [](const VerifyCase& c, RandomStream& rng, const Tolerances&) -> std::optional<std::string> {
                      // mu(AB) <<_log mu(A) mu(B)
                      const OperatorMatrix b = sample_ginibre(c.matrix.dim(), rng);
                      const SingularValueProfile pa = mu_profile(c.matrix);
                      const SingularValueProfile pb = mu_profile(b);
                      SingularValueProfile prod = pa;
                      for (std::size_t i = 0; i < prod.values.size(); ++i) {
                          prod.values[i] *= pb.values[i];
                      }
                      const auto r = log_submajorized(mu_profile(OperatorMatrix(Matrix(c.matrix.mat() * b.mat()))), prod);
                      if (r.holds) {
                          return std::nullopt;
                      }
                      return "margin " + detail::fmt(*std::min_element(r.margin.begin(), r.margin.end()));
                  }});
    ps.push_back({"submajorization", "weyl_eigenvalues",
                  [](const VerifyCase& c, RandomStream&, const Tolerances& tol) -> std::optional<std::string> {
                      // |lambda| <<_log mu(T)
                      std::vector<double> mods;
                      for (cplx z : eigenvalues(c.matrix, tol)) {
                          mods.push_back(std::abs(z));
                      }
                      std::sort(mods.rbegin(), mods.rend());
                      const auto r = log_submajorized(SingularValueProfile::uniform(mods), mu_profile(c.matrix), 1e-9);
                      if (r.holds) {
                          return std::nullopt;
                      }
                      return "margin " + detail::fmt(*std::min_element(r.margin.begin(), r.margin.end()));
                  }});
    ps.push_back({"submajorization", "s_transform",
                  [](const VerifyCase& c, RandomStream&, const Tolerances&) -> std::optional<std::string> {
                      const auto r = s_transform_submajorization(c.matrix);
                      if (r.holds) {
                          return std::nullopt;
                      }
                      return "margin " + detail::fmt(*std::min_element(r.margin.begin(), r.margin.end()));
                  }});
    return ps;
}

inline std::vector<Property> properties_for(const std::string& suite)
{
    std::vector<Property> out;
    auto add = [&](std::vector<Property> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
    if (suite == "determinant" || suite == "all") {
        add(determinant_properties());
    }
    if (suite == "projections" || suite == "all") {
        add(projection_properties());
    }
    if (suite == "split" || suite == "all") {
        add(split_properties());
    }
    if (suite == "submajorization" || suite == "all") {
        add(submajorization_properties());
    }
    if (out.empty()) {
        throw InputError("unknown suite '" + suite + "' (expected determinant, projections, split, submajorization or all)");
    }
    return out;
}

//---------------------------------------------------------------------------//
// Corpus and driver
//---------------------------------------------------------------------------//

/// Random corpus: Ginibre, upper triangular, unitarily rotated normal, and
/// non-normal products, cycling through the requested sizes.
inline std::vector<VerifyCase> random_corpus(const VerifyOptions& opt)
{
    std::vector<VerifyCase> cases;
    const RandomStream root(opt.seed, 0);
    std::uint64_t idx = 0;
    for (std::size_t n : opt.n_sizes) {
        if (n < 1) {
            throw InputError("matrix sizes must be positive");
        }
        for (std::size_t i = 0; i < opt.per_size; ++i, ++idx) {
            RandomStream rng = root.split(idx);
            Matrix a;
            std::string kind;
            switch (i % 4) {
            case 0:
                a = sample_ginibre(n, rng).mat();
                kind = "ginibre";
                break;
            case 1:
                // unit-scale diagonal keeps the condition number moderate
                a = sample_ginibre(n, rng).mat();
                a.triangularView<Eigen::StrictlyLower>().setZero();
                for (Eigen::Index i = 0; i < a.rows(); ++i) {
                    a(i, i) = std::polar(1.0 + std::abs(a(i, i)), 2.0 * std::numbers::pi * rng.uniform());
                }
                kind = "triangular";
                break;
            case 2: {
                const Matrix u = detail::random_unitary(n, rng);
                const Matrix d = sample_ginibre(n, rng).mat().diagonal().asDiagonal();
                a = u * d * u.adjoint();
                kind = "normal";
                break;
            }
            default: {
                const Matrix g = sample_ginibre(n, rng).mat();
                const Matrix h = sample_ginibre(n, rng).mat();
                a = g * h + 0.5 * Matrix::Identity(g.rows(), g.cols());
                kind = "product";
                break;
            }
            }
            cases.push_back({kind + "-n" + std::to_string(n) + "-" + std::to_string(i), OperatorMatrix(std::move(a)),
                             rng.split(0xCA5E).stream_id()});
        }
    }
    return cases;
}

/// Loads every regular file in `dir` (sorted by name). Parse failures are
/// returned as "<file>: <error>".
inline std::vector<VerifyCase> load_corpus(const std::string& dir, std::vector<std::string>& failures)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw InputError("matrix directory '" + dir + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<VerifyCase> out;
    std::uint64_t idx = 0;
    for (const auto& f : files) {
        try {
            out.push_back({f.filename().string(), io::read_matrix(f.string()), 0xF11E0000u + idx++});
        } catch (const Error& e) {
            failures.push_back(f.filename().string() + ": " + e.what());
        }
    }
    return out;
}

inline VerifyReport run_verification(const VerifyOptions& opt)
{
    const auto props = properties_for(opt.suite);
    VerifyReport rep;
    std::vector<VerifyCase> cases = random_corpus(opt);
    if (opt.matrices_dir) {
        auto loaded = load_corpus(*opt.matrices_dir, rep.load_failures);
        cases.insert(cases.end(), loaded.begin(), loaded.end());
    }

    const std::size_t total = props.size() * cases.size();
    auto outcomes = parallel_map(total, [&](std::size_t k) -> std::optional<std::string> {
        const Property& p = props[k / cases.size()];
        const VerifyCase& c = cases[k % cases.size()];
        RandomStream rng(opt.seed, c.stream);
        rng = rng.split(k / cases.size());
        try {
            return p.check(c, rng, opt.tol);
        } catch (const std::exception& e) {
            return std::string("exception: ") + e.what();
        }
    });
    for (std::size_t i = 0; i < props.size(); ++i) {
        PropertyResult r{props[i].suite, props[i].name, cases.size(), 0, {}};
        for (std::size_t j = 0; j < cases.size(); ++j) {
            const auto& o = outcomes[i * cases.size() + j];
            if (!o) {
                ++r.passed;
            } else if (r.first_failure.empty()) {
                r.first_failure = cases[j].label + ": " + *o;
            }
        }
        rep.rows.push_back(std::move(r));
    }
    return rep;
}

} // namespace specsplit
