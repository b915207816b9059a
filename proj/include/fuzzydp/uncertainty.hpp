#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fuzzydp/choquet.hpp"
#include "fuzzydp/statespace.hpp"

namespace fuzzydp {

/// K-level stratified Gaussian perturbation scheme: level k has scale
/// eps_base * k, M independent samples per level, counter-based streams
/// keyed by (seed, stream id, level, sample).
struct UncertaintyLevels {
    int K = 10;
    double eps_base = 0.1;
    int M = 5;
    std::uint64_t seed = 0;

    /// Scale of level k, 1-based.
    double eps(int k) const { return eps_base * k; }
    void validate() const;
};

/// All K*M perturbed copies of s, level-major: result[(k-1)*M + j].
/// Deterministic given (seed, stream_id), independent of call order.
std::vector<StateVector> sample_perturbed(const StateVector& s,
                                          const UncertaintyLevels& levels,
                                          std::uint64_t stream_id);

/// Writes the j-th sample of level k (both 0-based here) for an arbitrary
/// d-dimensional point into out.
void perturb_point(std::span<const double> point, const UncertaintyLevels& levels,
                   std::uint64_t stream_id, int level, int sample,
                   std::span<double> out);

using SnapFn = std::function<int(std::span<const double>)>;

/// Per-level value estimates: vbar_k = (1/M) sum_j V(snap(perturbed sample)).
LevelValues level_values(std::span<const double> v, std::span<const double> point,
                         const UncertaintyLevels& levels, const SnapFn& snap,
                         std::uint64_t stream_id);

}  // namespace fuzzydp
