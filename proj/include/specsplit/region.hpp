#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "specsplit/error.hpp"
#include "specsplit/matrix_kernel.hpp"

namespace specsplit {

struct Disk {
    cplx center;
    double radius;
};

/// Complement of the closed disk.
struct DiskComplement {
    cplx center;
    double radius;
};

/// { z : Re(conj(normal) z) <= offset }.
struct HalfPlane {
    cplx normal;
    double offset;
};

/// Membership-only region. Carries no contour; boundary_distance, when set,
/// must be a lower bound for the distance to the boundary.
struct Predicate {
    std::function<bool(cplx)> contains;
    std::function<double(cplx)> boundary_distance;
    nlohmann::json description;
};

//---------------------------------------------------------------------------//
/*!
 * Borel set in the plane, as a tagged union over the supported kinds.
 */
class Region {
public:
    using Kind = std::variant<Disk, DiskComplement, HalfPlane, Predicate>;

    Region(Disk d) : kind_(d) { check_radius(d.radius); }
    Region(DiskComplement d) : kind_(d) { check_radius(d.radius); }
    Region(HalfPlane h) : kind_(h)
    {
        if (h.normal == cplx{}) {
            throw InputError("half-plane normal must be nonzero");
        }
    }
    Region(Predicate p) : kind_(std::move(p))
    {
        if (!std::get<Predicate>(kind_).contains) {
            throw InputError("predicate region needs a membership test");
        }
    }

    const Kind& kind() const noexcept { return kind_; }
    bool is_predicate() const noexcept { return std::holds_alternative<Predicate>(kind_); }
    const Disk* as_disk() const noexcept { return std::get_if<Disk>(&kind_); }

    bool contains(cplx z) const
    {
        return std::visit(
            [&](const auto& k) -> bool {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Disk>) {
                    return std::abs(z - k.center) <= k.radius;
                } else if constexpr (std::is_same_v<K, DiskComplement>) {
                    return std::abs(z - k.center) > k.radius;
                } else if constexpr (std::is_same_v<K, HalfPlane>) {
                    return std::real(std::conj(k.normal) * z) <= k.offset;
                } else {
                    return k.contains(z);
                }
            },
            kind_);
    }

    /// Distance from z to the boundary; empty for predicates without one.
    std::optional<double> boundary_distance(cplx z) const
    {
        return std::visit(
            [&](const auto& k) -> std::optional<double> {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Disk> || std::is_same_v<K, DiskComplement>) {
                    return std::abs(std::abs(z - k.center) - k.radius);
                } else if constexpr (std::is_same_v<K, HalfPlane>) {
                    return std::abs(std::real(std::conj(k.normal) * z) - k.offset) / std::abs(k.normal);
                } else {
                    if (k.boundary_distance) {
                        return k.boundary_distance(z);
                    }
                    return std::nullopt;
                }
            },
            kind_);
    }

    /// Image under complex conjugation, {conj(z) : z in region}.
    Region conjugate() const
    {
        return std::visit(
            [&](const auto& k) -> Region {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Disk>) {
                    return Disk{std::conj(k.center), k.radius};
                } else if constexpr (std::is_same_v<K, DiskComplement>) {
                    return DiskComplement{std::conj(k.center), k.radius};
                } else if constexpr (std::is_same_v<K, HalfPlane>) {
                    return HalfPlane{std::conj(k.normal), k.offset};
                } else {
                    auto inner = k;
                    return Predicate{[c = inner.contains](cplx z) { return c(std::conj(z)); },
                                     inner.boundary_distance
                                         ? std::function<double(cplx)>(
                                               [b = inner.boundary_distance](cplx z) { return b(std::conj(z)); })
                                         : std::function<double(cplx)>{},
                                     {{"kind", "predicate"}, {"op", "conjugate"}, {"args", {inner.description}}}};
                }
            },
            kind_);
    }

    /// Complement in the plane (boundaries are ignored at matrix scale).
    Region complement() const
    {
        return std::visit(
            [&](const auto& k) -> Region {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Disk>) {
                    return DiskComplement{k.center, k.radius};
                } else if constexpr (std::is_same_v<K, DiskComplement>) {
                    return Disk{k.center, k.radius};
                } else if constexpr (std::is_same_v<K, HalfPlane>) {
                    return HalfPlane{-k.normal, -k.offset};
                } else {
                    return Predicate{[c = k.contains](cplx z) { return !c(z); }, k.boundary_distance,
                                     {{"kind", "predicate"}, {"op", "complement"}, {"args", {k.description}}}};
                }
            },
            kind_);
    }

    nlohmann::json to_json() const
    {
        return std::visit(
            [&](const auto& k) -> nlohmann::json {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Disk>) {
                    return {{"kind", "disk"}, {"center", {k.center.real(), k.center.imag()}}, {"radius", k.radius}};
                } else if constexpr (std::is_same_v<K, DiskComplement>) {
                    return {{"kind", "disk_complement"},
                            {"center", {k.center.real(), k.center.imag()}},
                            {"radius", k.radius}};
                } else if constexpr (std::is_same_v<K, HalfPlane>) {
                    return {{"kind", "half_plane"}, {"normal", {k.normal.real(), k.normal.imag()}}, {"offset", k.offset}};
                } else {
                    return k.description.is_null() ? nlohmann::json{{"kind", "predicate"}} : k.description;
                }
            },
            kind_);
    }

private:
    static void check_radius(double r)
    {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw InputError("disk radius must be positive and finite");
        }
    }

    Kind kind_;
};

//---------------------------------------------------------------------------//
// Set combinators (predicate regions)
//---------------------------------------------------------------------------//

namespace detail {

inline std::function<double(cplx)> min_boundary(std::vector<Region> parts)
{
    for (const auto& p : parts) {
        if (p.is_predicate() && !p.boundary_distance(cplx{})) {
            return {};
        }
    }
    return [parts = std::move(parts)](cplx z) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : parts) {
            d = std::min(d, *p.boundary_distance(z));
        }
        return d;
    };
}

inline nlohmann::json describe(const char* op, const std::vector<Region>& parts)
{
    nlohmann::json args = nlohmann::json::array();
    for (const auto& p : parts) {
        args.push_back(p.to_json());
    }
    return {{"kind", "predicate"}, {"op", op}, {"args", std::move(args)}};
}

} // namespace detail

inline Region unite(std::vector<Region> parts)
{
    if (parts.empty()) {
        throw InputError("union of no regions");
    }
    auto desc = detail::describe("union", parts);
    auto contains = [parts](cplx z) {
        return std::any_of(parts.begin(), parts.end(), [&](const Region& r) { return r.contains(z); });
    };
    return Predicate{contains, detail::min_boundary(parts), std::move(desc)};
}

inline Region intersect(std::vector<Region> parts)
{
    if (parts.empty()) {
        throw InputError("intersection of no regions");
    }
    auto desc = detail::describe("intersection", parts);
    auto contains = [parts](cplx z) {
        return std::all_of(parts.begin(), parts.end(), [&](const Region& r) { return r.contains(z); });
    };
    return Predicate{contains, detail::min_boundary(parts), std::move(desc)};
}

/// a minus b.
inline Region difference(const Region& a, const Region& b)
{
    std::vector<Region> parts{a, b};
    auto desc = detail::describe("difference", parts);
    auto contains = [a, b](cplx z) { return a.contains(z) && !b.contains(z); };
    return Predicate{contains, detail::min_boundary(parts), std::move(desc)};
}

inline cplx json_point(const nlohmann::json& j, const char* what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw InputError(std::string("region JSON: '") + what + "' must be [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

/// Parses the tagged-union JSON form produced by Region::to_json.
inline Region region_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
        throw InputError("region JSON needs a string field 'kind'");
    }
    const std::string kind = j["kind"].get<std::string>();
    auto number = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) {
            throw InputError(std::string("region JSON: missing numeric '") + key + "'");
        }
        return j[key].get<double>();
    };
    if (kind == "disk") {
        return Disk{json_point(j.value("center", nlohmann::json{}), "center"), number("radius")};
    }
    if (kind == "disk_complement") {
        return DiskComplement{json_point(j.value("center", nlohmann::json{}), "center"), number("radius")};
    }
    if (kind == "half_plane") {
        return HalfPlane{json_point(j.value("normal", nlohmann::json{}), "normal"), number("offset")};
    }
    if (kind == "predicate") {
        if (!j.contains("op") || !j["op"].is_string() || !j.contains("args") || !j["args"].is_array()) {
            throw InputError("predicate region JSON needs 'op' and 'args'");
        }
        std::vector<Region> parts;
        for (const auto& a : j["args"]) {
            parts.push_back(region_from_json(a));
        }
        const std::string op = j["op"].get<std::string>();
        if (op == "union") {
            return unite(std::move(parts));
        }
        if (op == "intersection") {
            return intersect(std::move(parts));
        }
        if (op == "difference") {
            if (parts.size() != 2) {
                throw InputError("difference takes exactly two regions");
            }
            return difference(parts[0], parts[1]);
        }
        if (op == "complement") {
            if (parts.size() != 1) {
                throw InputError("complement takes exactly one region");
            }
            return parts[0].complement();
        }
        if (op == "conjugate") {
            if (parts.size() != 1) {
                throw InputError("conjugate takes exactly one region");
            }
            return parts[0].conjugate();
        }
        throw InputError("unknown predicate op '" + op + "'");
    }
    throw InputError("unknown region kind '" + kind + "'");
}

//---------------------------------------------------------------------------//
// Fractional linear transforms
//---------------------------------------------------------------------------//

/// z -> (a z + b) / (c z + d), ad - bc != 0.
struct Moebius {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    static Moebius affine(cplx scale, cplx shift) { return {scale, shift, 0.0, 1.0}; }
    static Moebius inversion() { return {0.0, 1.0, 1.0, 0.0}; }

    bool valid() const { return std::abs(a * d - b * c) > 0.0; }

    /// Pole of the map; empty when c == 0.
    std::optional<cplx> pole() const
    {
        if (c == cplx{}) {
            return std::nullopt;
        }
        return -d / c;
    }

    cplx operator()(cplx z) const { return (a * z + b) / (c * z + d); }

    /// gamma(T) = (aT + b)(cT + d)^{-1}; the factors commute.
    Matrix operator()(const Matrix& t) const
    {
        const auto n = t.rows();
        const Matrix id = Matrix::Identity(n, n);
        const Matrix den = c * t + d * id;
        Eigen::PartialPivLU<Matrix> lu(den);
        const RealVector sv = singular_values(den);
        if (!(sv(n - 1) > 1e-12 * std::max(1.0, sv(0)))) {
            throw NumericalAbort("fractional linear transform: denominator cT + d is singular");
        }
        return (a * t + b * id) * lu.inverse();
    }

    /// Image of a disk, disk complement or half-plane. The image boundary
    /// must stay finite (pole off the boundary).
    Region image(const Region& r) const
    {
        if (!valid()) {
            throw InputError("degenerate fractional linear transform (ad - bc = 0)");
        }
        return std::visit(
            [&](const auto& k) -> Region {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Disk>) {
                    return image_of_disk(k);
                } else if constexpr (std::is_same_v<K, DiskComplement>) {
                    return image_of_disk(Disk{k.center, k.radius}).complement();
                } else if constexpr (std::is_same_v<K, HalfPlane>) {
                    return image_of_half_plane(k);
                } else {
                    throw InputError("fractional linear transform of a predicate region is not supported");
                }
            },
            r.kind());
    }

private:
    Region from_boundary(cplx w1, cplx w2, cplx w3, cplx inside) const
    {
        for (cplx w : {w1, w2, w3, inside}) {
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) {
                throw NumericalAbort("fractional linear transform sends the region boundary through infinity");
            }
        }
        const cplx u = w2 - w1;
        const cplx v = w3 - w1;
        const double cross = std::imag(std::conj(u) * v);
        const double scale = std::max({std::norm(u), std::norm(v), 1e-300});
        if (std::abs(cross) <= 1e-12 * scale) {
            // Image boundary is a line.
            cplx normal = cplx(0.0, 1.0) * u;
            double offset = std::real(std::conj(normal) * w1);
            if (std::real(std::conj(normal) * inside) > offset) {
                normal = -normal;
                offset = -offset;
            }
            return HalfPlane{normal, offset};
        }
        // Circumcenter relative to w1.
        const cplx center = w1 + (std::norm(u) * v - std::norm(v) * u) / (2.0 * cplx(0.0, 1.0) * cross);
        const double radius = std::abs(w1 - center);
        if (std::abs(inside - center) < radius) {
            return Disk{center, radius};
        }
        return DiskComplement{center, radius};
    }

    Region image_of_disk(const Disk& k) const
    {
        const cplx p1 = k.center + k.radius;
        const cplx p2 = k.center + cplx(0.0, k.radius);
        const cplx p3 = k.center - k.radius;
        // Interior probe away from the pole.
        cplx probe = k.center;
        double best = -1.0;
        for (cplx cand : {k.center, k.center + 0.5 * k.radius, k.center - 0.5 * k.radius,
                          k.center + cplx(0.0, 0.5 * k.radius)}) {
            const double den = std::abs(c * cand + d);
            if (den > best) {
                best = den;
                probe = cand;
            }
        }
        return from_boundary((*this)(p1), (*this)(p2), (*this)(p3), (*this)(probe));
    }

    Region image_of_half_plane(const HalfPlane& h) const
    {
        const double nn = std::abs(h.normal);
        const cplx nhat = h.normal / nn;
        const cplx base = (h.offset / nn) * nhat;
        const cplx dir = cplx(0.0, 1.0) * nhat;
        std::vector<cplx> pts;
        for (double s : {0.0, 1.0, -1.0, 2.0, -2.0, 3.0}) {
            const cplx p = base + s * dir;
            if (std::abs(c * p + d) > 1e-9 * std::max(1.0, std::abs(c) + std::abs(d))) {
                pts.push_back(p);
            }
            if (pts.size() == 3) {
                break;
            }
        }
        cplx probe = base - nhat;
        if (std::abs(c * probe + d) < 1e-9) {
            probe = base - 2.0 * nhat;
        }
        return from_boundary((*this)(pts[0]), (*this)(pts[1]), (*this)(pts[2]), (*this)(probe));
    }
};

} // namespace specsplit
