// specsplit command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 verification failure,
// 3 numerical abort.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "specsplit/specsplit.hpp"

namespace {

using namespace specsplit;
using nlohmann::json;

enum Exit : int { kOk = 0, kUsage = 1, kVerify = 2, kAbort = 3 };

struct Common {
    std::string tolerances_file;
    std::string output;
    std::string format = "json";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

struct Loaded {
    OperatorMatrix matrix;
    std::string digest;
};

Loaded load(const std::string& path)
{
    const std::string text = io::read_file(path);
    return {io::parse_matrix(text), io::digest(text)};
}

Tolerances tolerances(const Common& c)
{
    if (c.tolerances_file.empty()) {
        return default_tolerances();
    }
    try {
        return tolerances_from_json(json::parse(io::read_file(c.tolerances_file)));
    } catch (const json::parse_error& e) {
        throw InputError("tolerance file: " + std::string(e.what()));
    }
}

Metadata metadata(const Common& c, const std::string& cmd, const Tolerances& tol, const std::string& dig)
{
    Metadata m;
    m.command = cmd;
    if (c.seed_given) {
        m.seed = c.seed;
    }
    m.tolerances = tol;
    m.input_digest = dig;
    return m;
}

void emit(const Common& c, const std::string& text)
{
    if (c.output.empty() || c.output == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') {
            std::cout << '\n';
        }
    } else {
        io::write_file(c.output, text);
    }
}

void emit_json(const Common& c, const Metadata& m, json body)
{
    body["metadata"] = m.to_json();
    emit(c, body.dump(2));
}

//---------------------------------------------------------------------------//

int run_det(const Common& c, const std::string& input)
{
    const Tolerances tol = tolerances(c);
    const Loaded in = load(input);
    const double ld = log_fk_determinant(in.matrix, tol);
    const SingularValueProfile mu = mu_profile(in.matrix);
    json body{{"delta", std::isinf(ld) ? 0.0 : std::exp(ld)},
              {"log_delta", std::isinf(ld) ? json(nullptr) : json(ld)},
              {"log_norm", log_norm(in.matrix)},
              {"mu", {{"breaks", mu.breaks}, {"values", mu.values}}}};
    if (c.format == "csv") {
        std::ostringstream os;
        os << metadata(c, "det", tol, in.digest).csv_header();
        os << "# delta: " << io::format_double(body["delta"].get<double>()) << '\n';
        os << "# log_norm: " << io::format_double(body["log_norm"].get<double>()) << '\n';
        os << "t_left,t_right,mu\n";
        for (std::size_t k = 0; k < mu.values.size(); ++k) {
            os << io::format_double(mu.breaks[k]) << ',' << io::format_double(mu.breaks[k + 1]) << ','
               << io::format_double(mu.values[k]) << '\n';
        }
        emit(c, os.str());
    } else {
        emit_json(c, metadata(c, "det", tol, in.digest), std::move(body));
    }
    return kOk;
}

int run_brown(const Common& c, const std::string& input, bool atoms, const std::vector<double>& grid)
{
    const Tolerances tol = tolerances(c);
    const Loaded in = load(input);
    const Metadata m = metadata(c, "brown", tol, in.digest);
    if (atoms == !grid.empty()) {
        throw CLI::ValidationError("brown", "exactly one of --atoms or --grid is required");
    }
    if (atoms) {
        const AtomicMeasure nu = brown_measure(in.matrix, tol);
        if (c.format == "csv") {
            std::ostringstream os;
            os << m.csv_header() << "re,im,weight\n";
            for (const auto& a : nu.atoms) {
                os << io::format_double(a.location.real()) << ',' << io::format_double(a.location.imag()) << ','
                   << io::format_double(a.weight) << '\n';
            }
            emit(c, os.str());
        } else {
            emit_json(c, m, to_json(nu));
        }
        return kOk;
    }
    // xmin xmax ymin ymax h eps
    const GridSpec spec{Window{grid[0], grid[1], grid[2], grid[3]}, grid[4], grid[4], grid[5]};
    const GridDensity g = brown_grid(in.matrix, spec, tol);
    if (g.spectrum_outside_window) {
        std::cerr << "warning: part of the spectrum lies outside the window; mass will be missing\n";
    }
    std::cerr << "mass: " << io::format_double(g.total_mass()) << " (clamped " << io::format_double(g.clamped_mass)
              << ")\n";
    if (c.format == "csv") {
        std::ostringstream os;
        os << m.csv_header();
        os << "# window: " << to_json(g.window).dump() << '\n';
        os << "# resolution: " << io::format_double(g.hx) << '\n';
        os << "# epsilon: " << io::format_double(g.epsilon) << '\n';
        os << "# total_mass: " << io::format_double(g.total_mass()) << '\n';
        os << "# clamped_mass: " << io::format_double(g.clamped_mass) << '\n';
        os << to_csv(g);
        emit(c, os.str());
    } else {
        emit_json(c, m, to_json(g));
    }
    return kOk;
}

int run_hs(const Common& c, const std::string& input, const std::vector<double>& disk, const std::string& region_file,
           const std::string& method, std::size_t nodes, double margin, const std::string& mm_out)
{
    const Tolerances tol = tolerances(c);
    if (disk.empty() == region_file.empty()) {
        throw CLI::ValidationError("hs", "exactly one of --disk or --region is required");
    }
    std::optional<Region> region;
    if (!disk.empty()) {
        region = Region(Disk{cplx(disk[0], disk[1]), disk[2]});
    } else {
        try {
            region = region_from_json(json::parse(io::read_file(region_file)));
        } catch (const json::parse_error& e) {
            throw InputError("region file: " + std::string(e.what()));
        }
    }
    if (method == "contour" && !region->as_disk()) {
        throw InputError(std::string("the contour method integrates over a circle and only supports disk regions; ")
                         + (region->is_predicate() ? "predicate" : "this")
                         + " regions need --method oracle");
    }
    const Loaded in = load(input);
    json extra = json::object();
    const SpectralProjection p = method == "oracle" ? hs_oracle(in.matrix, *region, tol)
                                                    : hs_contour(in.matrix, *region->as_disk(), nodes, margin, tol);
    if (method == "contour") {
        const SpectralProjection o = hs_oracle(in.matrix, *region, tol);
        extra["oracle_deviation"] = projection_distance(p.matrix, o.matrix);
        extra["nodes"] = nodes;
    }
    const auto res = projection_residuals(in.matrix.mat(), p.matrix);
    json body = to_json(p);
    body["residuals"] = {{"hermitian", res.hermitian}, {"idempotent", res.idempotent}, {"invariance", res.invariance}};
    body.update(extra);
    if (!mm_out.empty()) {
        io::write_file(mm_out, to_matrix_market(p));
    }
    emit_json(c, metadata(c, "hs", tol, in.digest), std::move(body));
    return kOk;
}

int run_split(const Common& c, const std::string& input, const std::string& order, const std::vector<double>& window)
{
    const Tolerances tol = tolerances(c);
    const Loaded in = load(input);
    OrderingCurve curve{curve_kind_from_string(order)};
    if (!window.empty()) {
        curve.window = Window{window[0], window[1], window[2], window[3]};
    }
    const SchurSplit s = split(in.matrix, curve, tol);
    if (s.window_expanded) {
        std::cerr << "warning: Hilbert window did not contain every eigenvalue; expanded to "
                  << to_json(*s.curve.window).dump() << '\n';
    }
    const SplitResiduals r = split_residuals(s, in.matrix);
    const std::size_t n = in.matrix.dim();
    const double tn = std::max(1.0, op_norm(in.matrix.mat()));
    const bool pass = r.sorted && r.nilpotent_brown_exact && r.factorization <= tol.fact(n) && r.normality <= 1e-10
                      && r.nilpotence <= 1e-8 && r.brown_distance <= 1e-8 * tn && r.flag_invariance <= tol.inv(n);
    json body = to_json(s);
    body["invariants"] = {{"factorization", r.factorization},
                          {"normality", r.normality},
                          {"nilpotence", r.nilpotence},
                          {"brown_distance", r.brown_distance},
                          {"nilpotent_brown_exact", r.nilpotent_brown_exact},
                          {"flag_invariance", r.flag_invariance},
                          {"schur_identity", r.schur_identity},
                          {"sorted", r.sorted},
                          {"pass", pass}};
    body["q_norm"] = op_norm(s.nilpotent_part);
    emit_json(c, metadata(c, "split", tol, in.digest), std::move(body));
    if (!pass) {
        std::cerr << "split invariants failed\n";
        return kVerify;
    }
    return kOk;
}

int run_ensemble(Common c, const std::string& config_file)
{
    const Tolerances tol = tolerances(c);
    const std::string text = io::read_file(config_file);
    EnsembleConfig cfg;
    try {
        cfg = EnsembleConfig::from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw InputError("ensemble config: " + std::string(e.what()));
    }
    c.seed = cfg.seed;
    c.seed_given = true;
    const ConvergenceReport rep = convergence_study(cfg, tol);
    const Metadata m = metadata(c, "ensemble", tol, io::digest(text));
    if (c.format == "csv") {
        emit(c, m.csv_header() + rep.to_csv());
    } else {
        emit_json(c, m, rep.to_json());
    }
    return kOk;
}

std::vector<std::size_t> parse_sizes(const std::string& s)
{
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(item, &pos);
            if (pos != item.size() || v < 1) {
                throw std::invalid_argument(item);
            }
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw InputError("--n-sizes: '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) {
        throw InputError("--n-sizes must list at least one size");
    }
    return out;
}

int run_verify(const Common& c, const std::string& suite, const std::string& sizes, std::size_t per_size,
               const std::string& dir)
{
    VerifyOptions opt;
    opt.tol = tolerances(c);
    opt.suite = suite;
    opt.seed = c.seed;
    opt.n_sizes = parse_sizes(sizes);
    opt.per_size = per_size;
    if (!dir.empty()) {
        opt.matrices_dir = dir;
    }
    const VerifyReport rep = run_verification(opt);
    Common cc = c;
    cc.seed_given = true;
    const Metadata m = metadata(cc, "verify", opt.tol, "");
    if (c.format == "json") {
        emit_json(c, m, rep.to_json());
    } else {
        emit(c, m.csv_header() + rep.table());
    }
    if (!rep.ok()) {
        std::cerr << "first failure: " << *rep.first_failure() << '\n';
        return kVerify;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral splitting of non-normal matrices"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;
    std::optional<unsigned> threads;
    auto add_common = [&](CLI::App* sub, const char* default_format) {
        common.format = default_format;
        sub->add_option("--threads", threads, "Worker cap (fallback: SPECSPLIT_THREADS)")->check(CLI::PositiveNumber);
        sub->add_option("--tolerances", common.tolerances_file, "JSON file of tolerance overrides")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--output", common.output, "Output path (default stdout)");
        sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    };

    std::string input;

    auto* det = app.add_subcommand("det", "Fuglede-Kadison determinant, log-norm and singular value profile");
    det->add_option("input", input, "Matrix file (Matrix Market or JSON)")->required();

    auto* brown = app.add_subcommand("brown", "Brown measure as atoms or a grid density");
    bool atoms = false;
    std::vector<double> grid;
    brown->add_option("input", input, "Matrix file")->required();
    brown->add_flag("--atoms", atoms, "Eigenvalue atoms with weight 1/n");
    brown->add_option("--grid", grid, "xmin xmax ymin ymax resolution epsilon (epsilon <= 0: automatic)")
        ->expected(6);

    auto* hs = app.add_subcommand("hs", "Haagerup-Schultz projection for a region");
    std::vector<double> disk;
    std::string region_file, method = "oracle", mm_out;
    std::size_t nodes = 256;
    double margin = 1e-3;
    hs->add_option("input", input, "Matrix file")->required();
    hs->add_option("--disk", disk, "cx cy r")->expected(3);
    hs->add_option("--region", region_file, "Region JSON file")->check(CLI::ExistingFile);
    hs->add_option("--method", method, "oracle or contour")->check(CLI::IsMember({"oracle", "contour"}));
    hs->add_option("--nodes", nodes, "Contour nodes")->check(CLI::Range(8, 1 << 20));
    hs->add_option("--margin", margin, "Minimal contour distance to the spectrum")->check(CLI::PositiveNumber);
    hs->add_option("--mm", mm_out, "Also write the projection as Matrix Market");

    auto* spl = app.add_subcommand("split", "Normal plus nilpotent split along an ordering curve");
    std::string order = "lex";
    std::vector<double> window;
    spl->add_option("input", input, "Matrix file")->required();
    spl->add_option("--order", order, "lex, spiral or hilbert")->check(CLI::IsMember({"lex", "spiral", "hilbert"}));
    spl->add_option("--window", window, "Hilbert window xmin xmax ymin ymax")->expected(4);

    auto* ens = app.add_subcommand("ensemble", "Regularization convergence study");
    std::string config_file;
    ens->add_option("config", config_file, "Ensemble config JSON")->required();

    auto* ver = app.add_subcommand("verify", "Property suites");
    std::string suite = "all", sizes = "4,8,16", dir;
    std::size_t per_size = 4;
    ver->add_option("--suite", suite, "determinant, projections, split, submajorization or all")
        ->check(CLI::IsMember({"determinant", "projections", "split", "submajorization", "all"}));
    ver->add_option("--seed", common.seed, "Corpus seed");
    ver->add_option("--n-sizes", sizes, "Comma-separated matrix sizes");
    ver->add_option("--per-size", per_size, "Random matrices per size")->check(CLI::PositiveNumber);
    ver->add_option("--matrices", dir, "Directory of extra matrix files");

    add_common(det, "json");
    add_common(brown, "json");
    add_common(hs, "json");
    add_common(spl, "json");
    add_common(ens, "json");
    add_common(ver, "json");
    common.format.clear();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (threads) {
        set_max_threads(*threads);
    }

    try {
        if (*det) {
            if (common.format.empty()) common.format = "json";
            return run_det(common, input);
        }
        if (*brown) {
            if (common.format.empty()) common.format = grid.empty() ? "json" : "csv";
            return run_brown(common, input, atoms, grid);
        }
        if (*hs) {
            if (common.format.empty()) common.format = "json";
            return run_hs(common, input, disk, region_file, method, nodes, margin, mm_out);
        }
        if (*spl) {
            if (common.format.empty()) common.format = "json";
            return run_split(common, input, order, window);
        }
        if (*ens) {
            if (common.format.empty()) common.format = "json";
            return run_ensemble(common, config_file);
        }
        if (*ver) {
            common.seed_given = true;
            if (common.format.empty()) common.format = "table";
            return run_verify(common, suite, sizes, per_size, dir);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kAbort;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kAbort;
    }
    return kUsage;
}
