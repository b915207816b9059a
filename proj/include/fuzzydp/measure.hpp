#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fuzzydp {

/// Subset of uncertainty levels; bit k (0-based) selects level k+1.
using SubsetMask = std::uint32_t;

constexpr SubsetMask full_mask(int k) {
    return k >= 32 ? ~SubsetMask{0} : (SubsetMask{1} << k) - 1;
}

/// Solves prod_k (1 + lambda g_k) = 1 + lambda for the interaction
/// parameter lambda > -1. Returns exactly 0 when |sum g - 1| <= 1e-12
/// (additive densities) and for K = 1, where 0 is the only root.
///
/// Hybrid safeguarded Newton/bisection on the normalized residual
/// m_lambda(full) - 1, bracketed by the sign of (1 - sum g); 100-round cap.
double solve_lambda(std::span<const double> densities);

/// Characteristic-equation residual prod(1 + lambda g_k) - (1 + lambda),
/// evaluated in extended precision.
double characteristic_residual(std::span<const double> densities, double lambda);

/// Sugeno lambda-measure over K uncertainty levels: per-level densities g
/// plus the interaction parameter solving the characteristic equation.
struct FuzzyMeasure {
    std::vector<double> g;
    double lambda = 0.0;

    int K() const { return static_cast<int>(g.size()); }

    /// Builds a measure from densities in (0, 1), solving for lambda.
    /// K = 1 is special: the only normalized single-level measure has
    /// g = {1}, so the input density is replaced by 1.
    static FuzzyMeasure from_densities(std::vector<double> densities);
};

/// Measure of a subset via the lambda-rule,
/// m(A) = (prod_{k in A}(1 + lambda g_k) - 1) / lambda,
/// evaluated in increment form (exact additive limit at lambda = 0,
/// singletons return their density bit-exactly).
double measure_of(const FuzzyMeasure& m, SubsetMask a);

/// Dual capacity m'(A) = 1 - m(complement of A).
double dual_measure_of(const FuzzyMeasure& m, SubsetMask a);

/// One marginal vector per permutation sigma of {1..K}:
/// P(sigma(i)) = m({sigma(1..i)}) - m({sigma(1..i-1)}).
/// For lambda >= 0 these are the extreme points of the core. Requires
/// lambda >= 0 and K <= 8.
std::vector<std::vector<double>> core_extreme_points(const FuzzyMeasure& m);

}  // namespace fuzzydp
