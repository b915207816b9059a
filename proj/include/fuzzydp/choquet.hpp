#pragma once

#include <span>
#include <vector>

#include "fuzzydp/measure.hpp"

namespace fuzzydp {

/// One aggregated value per uncertainty level.
using LevelValues = std::vector<double>;

/// Level indices sorted by value descending; ties broken by ascending index.
/// This is the permutation the gradient code freezes during differentiation.
std::vector<int> descending_order(std::span<const double> f);

/// Discrete Choquet integral of f against m: descending sort, head-set
/// capacity increments sum_i f_(i) [m(top-i) - m(top-(i-1))]. For convex
/// measures (lambda >= 0) this equals min over the core of E_P[f].
double choquet_integral(std::span<const double> f, const FuzzyMeasure& m);

/// Standard integral against the dual capacity; for lambda >= 0 equals
/// max over the core of E_P[f].
double dual_choquet_integral(std::span<const double> f, const FuzzyMeasure& m);

/// Descending sort paired with tail-set capacities m({(i)..(K)}). Provided
/// for side-by-side comparison only: it reproduces the dual integral, not
/// the standard one, and no solver code path uses it.
double choquet_integral_tailset(std::span<const double> f, const FuzzyMeasure& m);

/// Exact extrema of E_P[f] over all marginal vectors; test oracles.
/// Require lambda >= 0 and K <= 8.
double min_over_core(std::span<const double> f, const FuzzyMeasure& m);
double max_over_core(std::span<const double> f, const FuzzyMeasure& m);

/// d(integral)/d(g) with lambda held constant and the sort permutation
/// frozen at the current values (subgradient at ties).
std::vector<double> choquet_density_gradient(std::span<const double> f,
                                             const FuzzyMeasure& m, bool dual);

}  // namespace fuzzydp
