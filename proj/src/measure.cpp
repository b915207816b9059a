#include "fuzzydp/measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "fuzzydp/errors.hpp"

namespace fuzzydp {

namespace {

// m_lambda(full) - 1 and its lambda-derivative, in increment form:
//   m(full) = sum_i g_i * prod_{j<i}(1 + lambda g_j).
// Strictly increasing in lambda on (-1, inf) and free of the removable
// singularity at lambda = 0, unlike the raw characteristic residual.
struct Normalization {
    long double value;
    long double deriv;
};

Normalization normalization_residual(std::span<const double> g, long double lambda) {
    long double prod = 1.0L;   // prod_{j<i}(1 + lambda g_j)
    long double dprod = 0.0L;  // d/dlambda of prod
    long double sum = 0.0L;
    long double dsum = 0.0L;
    for (double gk : g) {
        sum += gk * prod;
        dsum += gk * dprod;
        dprod = dprod * (1.0L + lambda * gk) + prod * gk;
        prod *= 1.0L + lambda * gk;
    }
    return {sum - 1.0L, dsum};
}

void check_density_range(std::span<const double> g) {
    if (g.empty()) throw DensityOutOfRange("density sequence is empty");
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(g[k] > 0.0 && g[k] < 1.0))
            throw DensityOutOfRange("density g[" + std::to_string(k + 1) +
                                    "] = " + std::to_string(g[k]) +
                                    " outside (0, 1)");
    }
}

}  // namespace

double characteristic_residual(std::span<const double> g, double lambda) {
    long double prod = 1.0L;
    for (double gk : g) prod *= 1.0L + static_cast<long double>(lambda) * gk;
    return static_cast<double>(prod - (1.0L + static_cast<long double>(lambda)));
}

double solve_lambda(std::span<const double> g) {
    check_density_range(g);
    const int n = static_cast<int>(g.size());
    if (n == 1) return 0.0;  // lambda (g - 1) = 0 has no other root

    const long double sum = std::accumulate(g.begin(), g.end(), 0.0L);
    if (std::fabs(static_cast<double>(sum - 1.0L)) <= 1e-12) return 0.0;

    constexpr int kMaxRounds = 100;
    int rounds = 0;

    // Bracket [lo, hi] with residual(lo) < 0 < residual(hi).
    long double lo, hi;
    if (sum < 1.0L) {
        lo = 0.0L;
        hi = 1.0L;
        while (normalization_residual(g, hi).value <= 0.0L) {
            hi *= 2.0L;
            if (++rounds >= kMaxRounds)
                throw NoConvergence("lambda bracket not found in 100 rounds");
        }
    } else {
        lo = -1.0L;
        hi = 0.0L;
    }

    long double x = 0.5L * (lo + hi);
    for (; rounds < kMaxRounds; ++rounds) {
        auto [val, deriv] = normalization_residual(g, x);
        if (val > 0.0L) hi = x; else lo = x;
        long double next = deriv > 0.0L ? x - val / deriv : 0.5L * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5L * (lo + hi);  // bisection fallback
        const long double dx = next - x;
        x = next;
        if (std::fabs(static_cast<double>(dx)) <=
            1e-18 * std::max(1.0, std::fabs(static_cast<double>(x))))
            break;
    }

    const double lambda = static_cast<double>(x);
    if (std::fabs(characteristic_residual(g, lambda)) > 1e-10)
        throw NoConvergence("characteristic residual above 1e-10 after 100 rounds");
    return lambda;
}

FuzzyMeasure FuzzyMeasure::from_densities(std::vector<double> densities) {
    if (densities.size() == 1) {
        if (!(densities[0] > 0.0 && densities[0] <= 1.0))
            throw DensityOutOfRange("single density outside (0, 1]");
        return FuzzyMeasure{{1.0}, 0.0};
    }
    FuzzyMeasure m;
    m.lambda = solve_lambda(densities);
    m.g = std::move(densities);
    return m;
}

double measure_of(const FuzzyMeasure& m, SubsetMask a) {
    const int k = m.K();
    if (a & ~full_mask(k))
        throw InvalidSubset("subset references levels beyond K=" + std::to_string(k));
    // Increment form of the lambda-rule; exact at lambda = 0.
    long double prod = 1.0L;
    long double acc = 0.0L;
    for (int i = 0; i < k; ++i) {
        if (!(a >> i & 1u)) continue;
        acc += m.g[i] * prod;
        prod *= 1.0L + static_cast<long double>(m.lambda) * m.g[i];
    }
    return std::clamp(static_cast<double>(acc), 0.0, 1.0);
}

double dual_measure_of(const FuzzyMeasure& m, SubsetMask a) {
    const int k = m.K();
    if (a & ~full_mask(k))
        throw InvalidSubset("subset references levels beyond K=" + std::to_string(k));
    return 1.0 - measure_of(m, full_mask(k) & ~a);
}

std::vector<std::vector<double>> core_extreme_points(const FuzzyMeasure& m) {
    if (m.lambda < 0.0)
        throw NotConvex("core extreme points require lambda >= 0");
    const int k = m.K();
    if (k > 8) throw TooLarge("core enumeration limited to K <= 8");

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<double>> points;
    do {
        std::vector<double> p(k);
        long double prod = 1.0L;
        for (int i = 0; i < k; ++i) {
            // marginal contribution m(prefix + sigma(i)) - m(prefix)
            p[perm[i]] = static_cast<double>(m.g[perm[i]] * prod);
            prod *= 1.0L + static_cast<long double>(m.lambda) * m.g[perm[i]];
        }
        points.push_back(std::move(p));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return points;
}

}  // namespace fuzzydp
