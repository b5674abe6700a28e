#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "specsplit/error.hpp"

namespace specsplit {

struct Assignment {
    std::vector<std::size_t> match; // row i is matched to column match[i]
    double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm with potentials, O(n^3)).
inline Assignment min_cost_assignment(const std::vector<std::vector<double>>& cost)
{
    const std::size_t n = cost.size();
    for (const auto& row : cost) {
        if (row.size() != n) {
            throw InputError("assignment cost matrix must be square");
        }
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; column 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Assignment a;
    a.match.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) {
            a.match[p[j] - 1] = j - 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        a.cost += cost[i][a.match[i]];
    }
    return a;
}

namespace detail {

inline bool has_perfect_matching(const std::vector<std::vector<double>>& dist, double radius)
{
    const std::size_t n = dist.size();
    std::vector<std::size_t> owner(n, n);
    std::vector<char> seen(n);
    auto augment = [&](auto&& self, std::size_t row) -> bool {
        for (std::size_t col = 0; col < n; ++col) {
            if (dist[row][col] <= radius && !seen[col]) {
                seen[col] = 1;
                if (owner[col] == n || self(self, owner[col])) {
                    owner[col] = row;
                    return true;
                }
            }
        }
        return false;
    };
    for (std::size_t row = 0; row < n; ++row) {
        std::fill(seen.begin(), seen.end(), 0);
        if (!augment(augment, row)) {
            return false;
        }
    }
    return true;
}

} // namespace detail

/// Bottleneck distance between two equal-size multisets of complex numbers:
/// the smallest r such that a bijection moves every point by at most r.
inline double multiset_distance(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b)
{
    if (a.size() != b.size()) {
        return std::numeric_limits<double>::infinity();
    }
    const std::size_t n = a.size();
    if (n == 0) {
        return 0.0;
    }
    std::vector<std::vector<double>> dist(n, std::vector<double>(n));
    std::vector<double> cand;
    cand.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dist[i][j] = std::abs(a[i] - b[j]);
            cand.push_back(dist[i][j]);
        }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::size_t lo = 0, hi = cand.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (detail::has_perfect_matching(dist, cand[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return cand[lo];
}

} // namespace specsplit
