#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specsplit/config.hpp"
#include "specsplit/error.hpp"
#include "specsplit/hs_projections.hpp"
#include "specsplit/matrix_io.hpp"
#include "specsplit/spectral_stats.hpp"
#include "specsplit/triangularize.hpp"

namespace specsplit {

inline constexpr const char* kVersion = "0.1.0";

//---------------------------------------------------------------------------//
// Tolerance block
//---------------------------------------------------------------------------//

inline nlohmann::json to_json(const Tolerances& t)
{
    return {{"unit_per_dim", t.unit_per_dim}, {"fact_per_dim", t.fact_per_dim}, {"proj_per_dim", t.proj_per_dim},
            {"solve_per_dim", t.solve_per_dim}, {"sing_rel", t.sing_rel},         {"classify_rel", t.classify_rel},
            {"inv_rel", t.inv_rel},             {"rank_tol", t.rank_tol},         {"rank_gap", t.rank_gap},
            {"schur_max_iterations", t.schur_max_iterations}};
}

/// Overrides on top of `base`; unknown keys and non-positive values rejected.
inline Tolerances tolerances_from_json(const nlohmann::json& j, Tolerances base = default_tolerances())
{
    if (!j.is_object()) {
        throw InputError("tolerances: expected an object");
    }
    for (const auto& [key, v] : j.items()) {
        if (key == "schur_max_iterations") {
            if (!v.is_number_integer() || v.get<int>() < 0) {
                throw InputError("tolerances: schur_max_iterations must be a non-negative integer");
            }
            base.schur_max_iterations = v.get<int>();
            continue;
        }
        if (!v.is_number() || !(v.get<double>() > 0.0)) {
            throw InputError("tolerances: '" + key + "' must be a positive number");
        }
        const double x = v.get<double>();
        if (key == "unit_per_dim") {
            base.unit_per_dim = x;
        } else if (key == "fact_per_dim") {
            base.fact_per_dim = x;
        } else if (key == "proj_per_dim") {
            base.proj_per_dim = x;
        } else if (key == "solve_per_dim") {
            base.solve_per_dim = x;
        } else if (key == "sing_rel") {
            base.sing_rel = x;
        } else if (key == "classify_rel") {
            base.classify_rel = x;
        } else if (key == "inv_rel") {
            base.inv_rel = x;
        } else if (key == "rank_tol") {
            base.rank_tol = x;
        } else if (key == "rank_gap") {
            if (x <= 1.0) {
                throw InputError("tolerances: rank_gap must exceed 1");
            }
            base.rank_gap = x;
        } else {
            throw InputError("tolerances: unknown key '" + key + "'");
        }
    }
    return base;
}

//---------------------------------------------------------------------------//
// Metadata header
//---------------------------------------------------------------------------//

struct Metadata {
    std::string command;
    std::optional<std::uint64_t> seed;
    Tolerances tolerances;
    std::string input_digest; // empty when there is no input file

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["tool"] = "specsplit";
        j["version"] = kVersion;
        j["command"] = command;
        j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
        j["tolerances"] = specsplit::to_json(tolerances);
        j["input_digest"] = input_digest.empty() ? nlohmann::json(nullptr) : nlohmann::json(input_digest);
        return j;
    }

    /// Same content as `# key: value` comment lines for CSV files.
    std::string csv_header() const
    {
        std::ostringstream os;
        os << "# tool: specsplit " << kVersion << '\n';
        os << "# command: " << command << '\n';
        os << "# seed: " << (seed ? std::to_string(*seed) : std::string("none")) << '\n';
        os << "# tolerances: " << specsplit::to_json(tolerances).dump() << '\n';
        os << "# input_digest: " << (input_digest.empty() ? std::string("none") : input_digest) << '\n';
        return os.str();
    }
};

//---------------------------------------------------------------------------//
// Artifacts
//---------------------------------------------------------------------------//

inline nlohmann::json point_json(cplx z) { return {z.real(), z.imag()}; }

inline nlohmann::json to_json(const AtomicMeasure& m)
{
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : m.atoms) {
        atoms.push_back({{"re", a.location.real()}, {"im", a.location.imag()}, {"weight", a.weight}});
    }
    return {{"atoms", atoms}, {"total", m.total()}};
}

inline nlohmann::json to_json(const Window& w)
{
    return {{"xmin", w.xmin}, {"xmax", w.xmax}, {"ymin", w.ymin}, {"ymax", w.ymax}};
}

inline nlohmann::json to_json(const GridDensity& g)
{
    return {{"window", to_json(g.window)},
            {"hx", g.hx},
            {"hy", g.hy},
            {"nx", g.nx},
            {"ny", g.ny},
            {"epsilon", g.epsilon},
            {"total_mass", g.total_mass()},
            {"clamped_mass", g.clamped_mass},
            {"spectrum_outside_window", g.spectrum_outside_window},
            {"density", g.density}};
}

/// x, y, density at every cell center, one row per cell.
inline std::string to_csv(const GridDensity& g)
{
    std::ostringstream os;
    os << "x,y,density\n";
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const cplx c = g.center(i, j);
            os << io::format_double(c.real()) << ',' << io::format_double(c.imag()) << ','
               << io::format_double(g.density[j * g.nx + i]) << '\n';
        }
    }
    return os.str();
}

inline nlohmann::json to_json(const SpectralProjection& p)
{
    return {{"matrix", io::to_json_value(p.matrix)},
            {"region", p.region.to_json()},
            {"rank", p.rank},
            {"normalized_rank", p.normalized_rank},
            {"method", to_string(p.method)}};
}

inline std::string to_matrix_market(const SpectralProjection& p) { return io::to_matrix_market(p.matrix); }

inline nlohmann::json to_json(const SchurSplit& s)
{
    nlohmann::json ranks = nlohmann::json::array();
    for (std::size_t k = 0; k <= s.dim(); ++k) {
        ranks.push_back(k);
    }
    nlohmann::json curve{{"kind", to_string(s.curve.kind)}, {"bits", s.curve.bits}};
    if (s.curve.window) {
        curve["window"] = to_json(*s.curve.window);
    }
    return {{"U", io::to_json_value(s.schur.unitary)},
            {"R", io::to_json_value(s.schur.triangular)},
            {"N", io::to_json_value(s.normal_part)},
            {"Q", io::to_json_value(s.nilpotent_part)},
            {"flag_ranks", ranks},
            {"curve", curve},
            {"window_expanded", s.window_expanded}};
}

} // namespace specsplit
