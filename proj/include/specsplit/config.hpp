#pragma once

#include <cstddef>

namespace specsplit {

/// Scale-aware tolerances. Values ending in `_per_dim` are multiplied by the
/// matrix dimension n, values ending in `_rel` by a norm of the input.
struct Tolerances {
    double unit_per_dim = 1e-10;  // ||U*U - I||
    double fact_per_dim = 1e-9;   // ||URU* - T|| / max(1, ||T||)
    double proj_per_dim = 1e-9;   // ||P^2 - P||, ||P - P*||
    double solve_per_dim = 1e-9;  // ||(z - T) M - I||
    double sing_rel = 1e-8;       // singularity threshold relative to the top singular value
    double classify_rel = 1e-8;   // boundary distance relative to the spectral diameter
    double inv_rel = 1e-9;        // ||T q - q T q|| / ||T||, times n
    double rank_tol = 1e-6;       // range_projection: kept values exceed rank_tol * s_max
    double rank_gap = 100.0;      // no singular value may fall within a factor rank_gap of the cut
    int schur_max_iterations = 0; // 0: Eigen's default cap (30 sweeps per eigenvalue)

    double unit(std::size_t n) const { return unit_per_dim * static_cast<double>(n); }
    double fact(std::size_t n) const { return fact_per_dim * static_cast<double>(n); }
    double proj(std::size_t n) const { return proj_per_dim * static_cast<double>(n); }
    double solve(std::size_t n) const { return solve_per_dim * static_cast<double>(n); }
    double inv(std::size_t n) const { return inv_rel * static_cast<double>(n); }
};

inline const Tolerances& default_tolerances()
{
    static const Tolerances tol{};
    return tol;
}

} // namespace specsplit
