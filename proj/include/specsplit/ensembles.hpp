#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "specsplit/assignment.hpp"
#include "specsplit/config.hpp"
#include "specsplit/error.hpp"
#include "specsplit/matrix_io.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/parallel.hpp"
#include "specsplit/random.hpp"
#include "specsplit/spectral_stats.hpp"

namespace specsplit {

inline constexpr int kEnsembleSchemaVersion = 1;
inline constexpr const char* kEnsembleRng = "philox4x32-10";

//---------------------------------------------------------------------------//
// Samplers
//---------------------------------------------------------------------------//

/// n x n matrix with i.i.d. entries N(0, v/2) + i N(0, v/2).
inline OperatorMatrix sample_ginibre(std::size_t n, RandomStream& rng, double variance)
{
    if (n == 0) {
        throw InputError("sample_ginibre: n must be positive");
    }
    if (!(variance > 0.0)) {
        throw InputError("sample_ginibre: variance must be positive");
    }
    const double sd = std::sqrt(0.5 * variance);
    const auto m = static_cast<Eigen::Index>(n);
    Matrix a(m, m);
    // row-major draw order, fixed for portability
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double re = rng.normal();
            const double im = rng.normal();
            a(i, j) = cplx(sd * re, sd * im);
        }
    }
    return OperatorMatrix(std::move(a));
}

inline OperatorMatrix sample_ginibre(std::size_t n, RandomStream& rng)
{
    return sample_ginibre(n, rng, 1.0 / static_cast<double>(n));
}

inline OperatorMatrix sample_ginibre(std::size_t n, std::uint64_t seed)
{
    RandomStream rng(seed, 0);
    return sample_ginibre(n, rng);
}

inline constexpr int kMaxSingularRedraws = 3;

/// Z = x y^{-1} for independent Ginibre x and y. y is redrawn when its
/// reciprocal condition estimate falls below machine precision.
inline OperatorMatrix sample_Z(std::size_t n, const RandomStream& parent)
{
    RandomStream xs = parent.split(0);
    const OperatorMatrix x = sample_ginibre(n, xs);
    for (int attempt = 0; attempt <= kMaxSingularRedraws; ++attempt) {
        RandomStream ys = parent.split(1 + static_cast<std::uint64_t>(attempt));
        const OperatorMatrix y = sample_ginibre(n, ys);
        // Z y = x  <=>  y^T Z^T = x^T
        Eigen::PartialPivLU<Matrix> lu(y.mat().transpose());
        if (!(lu.rcond() > 1e-14)) {
            continue;
        }
        return OperatorMatrix(Matrix(lu.solve(x.mat().transpose()).transpose()));
    }
    throw NumericalAbort("sample_Z: y stayed singular after " + std::to_string(kMaxSingularRedraws)
                         + " redraws (random generator fault?)");
}

inline OperatorMatrix sample_Z(std::size_t n, std::uint64_t seed) { return sample_Z(n, RandomStream(seed, 0)); }

inline OperatorMatrix regularize(const OperatorMatrix& t, double epsilon, const RandomStream& rng)
{
    if (!(epsilon > 0.0)) {
        throw InputError("regularize: epsilon must be positive");
    }
    const OperatorMatrix z = sample_Z(t.dim(), rng);
    return OperatorMatrix(Matrix(t.mat() + epsilon * z.mat()));
}

inline OperatorMatrix regularize(const OperatorMatrix& t, double epsilon, std::uint64_t seed)
{
    return regularize(t, epsilon, RandomStream(seed, 0));
}

//---------------------------------------------------------------------------//
// Base generators
//---------------------------------------------------------------------------//

/// J_n: zeros on the diagonal, ones on the superdiagonal.
inline OperatorMatrix jordan_block(std::size_t n, cplx eigenvalue = {})
{
    const auto m = static_cast<Eigen::Index>(n);
    Matrix a = Matrix::Zero(m, m);
    a.diagonal().setConstant(eigenvalue);
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        a(i, i + 1) = 1.0;
    }
    return OperatorMatrix(std::move(a));
}

/// Diagonal with half the eigenvalues on a ring of radius 0.1 about 0 and
/// the rest on the same ring about 4. Distinct, well separated clusters.
inline OperatorMatrix diagonal_clusters(std::size_t n, double ring = 0.1)
{
    const auto m = static_cast<Eigen::Index>(n);
    const std::size_t first = (n + 1) / 2;
    Matrix a = Matrix::Zero(m, m);
    auto place = [&](std::size_t count, std::size_t offset, cplx center) {
        for (std::size_t k = 0; k < count; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
            const auto i = static_cast<Eigen::Index>(offset + k);
            a(i, i) = center + (count > 1 ? std::polar(ring, angle) : cplx{});
        }
    };
    place(first, 0, 0.0);
    place(n - first, first, 4.0);
    return OperatorMatrix(std::move(a));
}

/// Upper triangular with Ginibre entries on and above the diagonal.
inline OperatorMatrix random_triangular(std::size_t n, std::uint64_t seed)
{
    RandomStream rng(seed, 0);
    Matrix a = sample_ginibre(n, rng).mat();
    a.triangularView<Eigen::StrictlyLower>().setZero();
    return OperatorMatrix(std::move(a));
}

//---------------------------------------------------------------------------//
// Configuration
//---------------------------------------------------------------------------//

struct EnsembleConfig {
    int schema_version = kEnsembleSchemaVersion;
    std::string rng = kEnsembleRng;
    std::size_t n = 0;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::vector<double> epsilon_grid;
    std::string generator;            // jordan-block | diagonal-clusters | random-triangular
    std::optional<Matrix> base;       // explicit base matrix (overrides generator)
    std::vector<cplx> probes{cplx(10.0, 0.0)};

    void validate() const
    {
        if (schema_version != kEnsembleSchemaVersion) {
            throw InputError("ensemble config: unsupported schema_version " + std::to_string(schema_version));
        }
        if (rng != kEnsembleRng) {
            throw InputError("ensemble config: rng must be '" + std::string(kEnsembleRng) + "'");
        }
        if (trials < 1) {
            throw InputError("ensemble config: trials must be at least 1");
        }
        if (epsilon_grid.empty()) {
            throw InputError("ensemble config: epsilon_grid must not be empty");
        }
        for (std::size_t i = 0; i < epsilon_grid.size(); ++i) {
            if (!(epsilon_grid[i] > 0.0) || !std::isfinite(epsilon_grid[i])) {
                throw InputError("ensemble config: epsilon values must be positive and finite");
            }
            if (i > 0 && !(epsilon_grid[i] < epsilon_grid[i - 1])) {
                throw InputError("ensemble config: epsilon_grid must be strictly decreasing");
            }
        }
        if (!base) {
            if (n == 0) {
                throw InputError("ensemble config: n must be positive");
            }
            if (generator != "jordan-block" && generator != "diagonal-clusters" && generator != "random-triangular") {
                throw InputError("ensemble config: unknown generator '" + generator + "'");
            }
        } else if (n != 0 && static_cast<std::size_t>(base->rows()) != n) {
            throw InputError("ensemble config: base matrix size does not match n");
        }
    }

    OperatorMatrix base_matrix() const
    {
        if (base) {
            return OperatorMatrix(*base);
        }
        if (generator == "jordan-block") {
            return jordan_block(n);
        }
        if (generator == "diagonal-clusters") {
            return diagonal_clusters(n);
        }
        if (generator == "random-triangular") {
            return random_triangular(n, RandomStream(seed, 0).split(0xBA5E).stream_id());
        }
        throw InputError("ensemble config: unknown generator '" + generator + "'");
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["schema_version"] = schema_version;
        j["rng"] = rng;
        j["n"] = n;
        j["trials"] = trials;
        j["seed"] = seed;
        j["epsilon_grid"] = epsilon_grid;
        if (base) {
            j["base"] = io::to_json_value(*base);
        } else {
            j["base"] = generator;
        }
        nlohmann::json ps = nlohmann::json::array();
        for (cplx p : probes) {
            ps.push_back({p.real(), p.imag()});
        }
        j["probes"] = ps;
        return j;
    }

    static EnsembleConfig from_json(const nlohmann::json& j)
    {
        static const char* known[] = {"schema_version", "rng", "n", "trials", "seed", "epsilon_grid", "base", "probes"};
        for (const auto& [key, _] : j.items()) {
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; })
                == std::end(known)) {
                throw InputError("ensemble config: unknown field '" + key + "'");
            }
        }
        EnsembleConfig c;
        try {
            c.schema_version = j.at("schema_version").get<int>();
            c.rng = j.value("rng", std::string(kEnsembleRng));
            c.n = j.value("n", std::size_t{0});
            c.trials = j.at("trials").get<std::size_t>();
            c.seed = j.at("seed").get<std::uint64_t>();
            c.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
            const auto& b = j.at("base");
            if (b.is_string()) {
                c.generator = b.get<std::string>();
            } else {
                c.base = io::from_json_value(b);
                if (c.n == 0) {
                    c.n = static_cast<std::size_t>(c.base->rows());
                }
            }
            if (j.contains("probes")) {
                c.probes.clear();
                for (const auto& p : j.at("probes")) {
                    if (p.is_number()) {
                        c.probes.emplace_back(p.get<double>(), 0.0);
                    } else {
                        c.probes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                    }
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("ensemble config: ") + e.what());
        }
        c.validate();
        return c;
    }
};

//---------------------------------------------------------------------------//
// Convergence study
//---------------------------------------------------------------------------//

/// 1-Wasserstein distance between two equal-size, equal-weight atom sets.
inline double wasserstein1(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    if (a.size() != b.size() || a.empty()) {
        throw InputError("wasserstein1: atom sets must be non-empty and of equal size");
    }
    std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            cost[i][j] = std::abs(a[i] - b[j]);
        }
    }
    return min_cost_assignment(cost).cost / static_cast<double>(a.size());
}

struct EpsilonRow {
    double epsilon;
    double w1_mean;
    std::vector<double> w1_trials;
    std::vector<double> det_gap;     // per probe: mean |Delta(T+eZ-l) - Delta(T-l)| / Delta(T-l)
    std::size_t nonmild = 0;         // trials with Delta(T + eZ - l) = 0 at some probe
};

struct ConvergenceReport {
    EnsembleConfig config;
    std::vector<cplx> probes;
    std::vector<double> base_log_delta; // log Delta(T - l) per probe
    std::vector<EpsilonRow> rows;
    bool w1_decreasing = false;
    bool det_gap_decreasing = false;

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["config"] = config.to_json();
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& r : rows) {
            rs.push_back({{"epsilon", r.epsilon},
                          {"w1_mean", r.w1_mean},
                          {"w1_trials", r.w1_trials},
                          {"det_gap", r.det_gap},
                          {"nonmild_trials", r.nonmild}});
        }
        j["rows"] = rs;
        j["w1_decreasing"] = w1_decreasing;
        j["det_gap_decreasing"] = det_gap_decreasing;
        j["base_log_delta"] = base_log_delta;
        return j;
    }

    std::string to_csv() const
    {
        std::ostringstream os;
        os << "epsilon,w1_mean";
        for (std::size_t p = 0; p < probes.size(); ++p) {
            os << ",det_gap_" << p;
        }
        os << ",nonmild_trials\n";
        for (const auto& r : rows) {
            os << io::format_double(r.epsilon) << ',' << io::format_double(r.w1_mean);
            for (double g : r.det_gap) {
                os << ',' << io::format_double(g);
            }
            os << ',' << r.nonmild << '\n';
        }
        return os.str();
    }
};

/// For each epsilon: mean W1 between the spectra of T + eps Z and T, and the
/// relative determinant gap at each probe. Trial k draws Z once from the
/// stream (seed, k) and reuses it across the epsilon grid.
inline ConvergenceReport convergence_study(const EnsembleConfig& config, const Tolerances& tol = default_tolerances())
{
    config.validate();
    const OperatorMatrix t = config.base_matrix();
    const std::size_t n = t.dim();
    const std::vector<cplx> ev_t = eigenvalues(t, tol);

    ConvergenceReport rep;
    rep.config = config;
    rep.probes = config.probes;
    for (cplx l : config.probes) {
        rep.base_log_delta.push_back(
            log_fk_determinant(OperatorMatrix(Matrix(t.mat() - l * Matrix::Identity(t.mat().rows(), t.mat().rows()))), tol));
    }

    struct TrialOut {
        std::vector<double> w1;                  // per epsilon
        std::vector<std::vector<double>> gap;    // per epsilon, per probe
        std::vector<bool> nonmild;
    };
    const std::size_t ne = config.epsilon_grid.size();
    const RandomStream root(config.seed, 0);
    auto trials = parallel_map(config.trials, [&](std::size_t k) {
        TrialOut out;
        const OperatorMatrix z = sample_Z(n, root.split(k));
        const auto dim = static_cast<Eigen::Index>(n);
        for (double eps : config.epsilon_grid) {
            const Matrix pert = t.mat() + eps * z.mat();
            out.w1.push_back(wasserstein1(eigenvalues(OperatorMatrix(pert), tol), ev_t));
            std::vector<double> gaps;
            bool zero = false;
            for (std::size_t p = 0; p < config.probes.size(); ++p) {
                const cplx l = config.probes[p];
                const double ld = log_fk_determinant(OperatorMatrix(Matrix(pert - l * Matrix::Identity(dim, dim))), tol);
                zero = zero || std::isinf(ld);
                const double base = rep.base_log_delta[p];
                double g;
                if (std::isinf(base)) {
                    g = std::isinf(ld) ? 0.0 : std::exp(ld);
                } else {
                    g = std::abs(std::expm1(ld - base));
                }
                gaps.push_back(g);
            }
            out.gap.push_back(std::move(gaps));
            out.nonmild.push_back(zero);
        }
        return out;
    });

    for (std::size_t e = 0; e < ne; ++e) {
        EpsilonRow row{};
        row.epsilon = config.epsilon_grid[e];
        row.det_gap.assign(config.probes.size(), 0.0);
        for (const auto& tr : trials) {
            row.w1_trials.push_back(tr.w1[e]);
            for (std::size_t p = 0; p < config.probes.size(); ++p) {
                row.det_gap[p] += tr.gap[e][p];
            }
            row.nonmild += tr.nonmild[e] ? 1 : 0;
        }
        row.w1_mean = tree_sum(row.w1_trials) / static_cast<double>(config.trials);
        for (double& g : row.det_gap) {
            g /= static_cast<double>(config.trials);
        }
        rep.rows.push_back(std::move(row));
    }
    rep.w1_decreasing = true;
    rep.det_gap_decreasing = true;
    for (std::size_t e = 1; e < ne; ++e) {
        if (!(rep.rows[e].w1_mean < rep.rows[e - 1].w1_mean)) {
            rep.w1_decreasing = false;
        }
        for (std::size_t p = 0; p < config.probes.size(); ++p) {
            if (rep.rows[e].det_gap[p] > rep.rows[e - 1].det_gap[p]) {
                rep.det_gap_decreasing = false;
            }
        }
    }
    return rep;
}

} // namespace specsplit
