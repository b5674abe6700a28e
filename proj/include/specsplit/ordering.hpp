#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "specsplit/error.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/spectral_stats.hpp"

namespace specsplit {

enum class CurveKind { lexicographic, spiral, hilbert };

inline const char* to_string(CurveKind k)
{
    switch (k) {
    case CurveKind::lexicographic: return "lex";
    case CurveKind::spiral: return "spiral";
    case CurveKind::hilbert: return "hilbert";
    }
    return "?";
}

inline CurveKind curve_kind_from_string(const std::string& s)
{
    if (s == "lex" || s == "lexicographic") {
        return CurveKind::lexicographic;
    }
    if (s == "spiral") {
        return CurveKind::spiral;
    }
    if (s == "hilbert") {
        return CurveKind::hilbert;
    }
    throw InputError("unknown ordering curve '" + s + "' (expected lex, spiral or hilbert)");
}

/// A way of walking through the plane; only the order it induces on
/// finitely many eigenvalues matters here.
struct OrderingCurve {
    OrderingCurve() = default;
    OrderingCurve(CurveKind k, std::optional<Window> w = std::nullopt, unsigned b = 16) : kind(k), window(w), bits(b) {}

    CurveKind kind = CurveKind::lexicographic;
    std::optional<Window> window; // Hilbert kind: bounding square (grown to fit when needed)
    unsigned bits = 16;           // Hilbert kind: 2^bits cells per side
};

/// Position along the Hilbert curve of cell (x, y) on a 2^bits grid.
inline std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, unsigned bits)
{
    std::uint64_t d = 0;
    const std::uint32_t side = 1u << bits;
    for (std::uint32_t s = side >> 1; s > 0; s >>= 1) {
        const std::uint32_t rx = (x & s) ? 1u : 0u;
        const std::uint32_t ry = (y & s) ? 1u : 0u;
        d += std::uint64_t{s} * s * ((3u * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = side - 1 - x;
                y = side - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

struct InducedOrder {
    EigenOrder before;
    std::optional<Window> window; // square actually used by the Hilbert kind
    bool window_expanded = false;
};

/// Strict order on eigenvalues induced by `curve`. Points the curve does not
/// separate (same Hilbert cell, equal keys) tie and keep Schur position.
inline InducedOrder induced_order(const OrderingCurve& curve, const std::vector<cplx>& ev)
{
    InducedOrder out;
    switch (curve.kind) {
    case CurveKind::lexicographic:
        out.before = [](cplx a, cplx b) {
            if (a.real() != b.real()) {
                return a.real() < b.real();
            }
            return a.imag() < b.imag();
        };
        return out;
    case CurveKind::spiral:
        out.before = [](cplx a, cplx b) {
            const double ra = std::abs(a);
            const double rb = std::abs(b);
            if (ra != rb) {
                return ra < rb;
            }
            auto angle = [](cplx z) {
                const double t = std::arg(z);
                return t < 0.0 ? t + 2.0 * std::numbers::pi : t;
            };
            return angle(a) < angle(b);
        };
        return out;
    case CurveKind::hilbert: {
        if (curve.bits < 1 || curve.bits > 31) {
            throw InputError("Hilbert resolution must be between 1 and 31 bits");
        }
        double xmin = curve.window ? curve.window->xmin : std::numeric_limits<double>::infinity();
        double xmax = curve.window ? curve.window->xmax : -std::numeric_limits<double>::infinity();
        double ymin = curve.window ? curve.window->ymin : std::numeric_limits<double>::infinity();
        double ymax = curve.window ? curve.window->ymax : -std::numeric_limits<double>::infinity();
        bool expanded = !curve.window.has_value();
        for (cplx z : ev) {
            if (curve.window && !curve.window->contains(z)) {
                expanded = true;
            }
            xmin = std::min(xmin, z.real());
            xmax = std::max(xmax, z.real());
            ymin = std::min(ymin, z.imag());
            ymax = std::max(ymax, z.imag());
        }
        double side = std::max({xmax - xmin, ymax - ymin, 1e-300});
        if (expanded) {
            // pad so no eigenvalue lands on the far edge
            side *= 1.0 + 1e-9;
            side = std::max(side, 1e-12 * std::max({std::abs(xmin), std::abs(ymin), 1.0}));
        }
        out.window = Window{xmin, xmin + side, ymin, ymin + side};
        out.window_expanded = expanded && curve.window.has_value();
        const unsigned bits = curve.bits;
        const double cells = std::ldexp(1.0, static_cast<int>(bits));
        auto key = [xmin, ymin, side, bits, cells](cplx z) {
            auto cell = [&](double v, double lo) {
                const double c = std::floor((v - lo) / side * cells);
                return static_cast<std::uint32_t>(std::clamp(c, 0.0, cells - 1.0));
            };
            return hilbert_index(cell(z.real(), xmin), cell(z.imag(), ymin), bits);
        };
        out.before = [key](cplx a, cplx b) { return key(a) < key(b); };
        return out;
    }
    }
    throw InputError("unknown ordering curve");
}

} // namespace specsplit
