#include "fuzzydp/choquet.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "fuzzydp/errors.hpp"

namespace fuzzydp {

namespace {

void check_length(std::span<const double> f, const FuzzyMeasure& m) {
    if (static_cast<int>(f.size()) != m.K())
        throw LengthMismatch("level values length " + std::to_string(f.size()) +
                             " != measure K=" + std::to_string(m.K()));
}

// sum_i f_(i) [cap(head_i) - cap(head_{i-1})] over the descending order.
template <typename Capacity>
double head_increment_sum(std::span<const double> f, const std::vector<int>& order,
                          Capacity cap) {
    SubsetMask mask = 0;
    double prev = 0.0;
    long double acc = 0.0L;
    for (int i : order) {
        mask |= SubsetMask{1} << i;
        const double cur = cap(mask);
        acc += static_cast<long double>(f[i]) * (cur - prev);
        prev = cur;
    }
    return static_cast<double>(acc);
}

}  // namespace

std::vector<int> descending_order(std::span<const double> f) {
    std::vector<int> order(f.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return f[a] > f[b] || (f[a] == f[b] && a < b);
    });
    return order;
}

double choquet_integral(std::span<const double> f, const FuzzyMeasure& m) {
    check_length(f, m);
    const auto order = descending_order(f);
    // Head-set increments in closed form: m(H_i) - m(H_{i-1}) = g_i * prod_{j<i}(1+lambda g_j).
    long double prod = 1.0L;
    long double acc = 0.0L;
    for (int i : order) {
        acc += static_cast<long double>(f[i]) * m.g[i] * prod;
        prod *= 1.0L + static_cast<long double>(m.lambda) * m.g[i];
    }
    return static_cast<double>(acc);
}

double dual_choquet_integral(std::span<const double> f, const FuzzyMeasure& m) {
    check_length(f, m);
    const auto order = descending_order(f);
    return head_increment_sum(f, order, [&](SubsetMask h) { return dual_measure_of(m, h); });
}

double choquet_integral_tailset(std::span<const double> f, const FuzzyMeasure& m) {
    check_length(f, m);
    const auto order = descending_order(f);
    const int k = m.K();
    // m_i = m({(i), ..., (K)}), m_{K+1} = 0; result = sum f_(i) (m_i - m_{i+1}).
    SubsetMask tail = 0;
    std::vector<double> tail_cap(k + 1, 0.0);
    for (int i = k - 1; i >= 0; --i) {
        tail |= SubsetMask{1} << order[i];
        tail_cap[i] = measure_of(m, tail);
    }
    long double acc = 0.0L;
    for (int i = 0; i < k; ++i)
        acc += static_cast<long double>(f[order[i]]) * (tail_cap[i] - tail_cap[i + 1]);
    return static_cast<double>(acc);
}

double min_over_core(std::span<const double> f, const FuzzyMeasure& m) {
    check_length(f, m);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : core_extreme_points(m))
        best = std::min(best, std::inner_product(p.begin(), p.end(), f.begin(), 0.0));
    return best;
}

double max_over_core(std::span<const double> f, const FuzzyMeasure& m) {
    check_length(f, m);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : core_extreme_points(m))
        best = std::max(best, std::inner_product(p.begin(), p.end(), f.begin(), 0.0));
    return best;
}

std::vector<double> choquet_density_gradient(std::span<const double> f,
                                             const FuzzyMeasure& m, bool dual) {
    check_length(f, m);
    const auto order = descending_order(f);
    const int k = m.K();
    std::vector<double> grad(k, 0.0);

    if (!dual) {
        // C = sum_t f_t g_t P_{t-1}, P prefix products along the order.
        // dC/dg_t = f_t P_{t-1} + lambda/(1+lambda g_t) * sum_{i>t} f_i g_i P_{i-1}.
        std::vector<long double> prefix(k);
        long double prod = 1.0L;
        for (int t = 0; t < k; ++t) {
            prefix[t] = prod;
            prod *= 1.0L + static_cast<long double>(m.lambda) * m.g[order[t]];
        }
        long double suffix = 0.0L;
        for (int t = k - 1; t >= 0; --t) {
            const int lvl = order[t];
            grad[lvl] = static_cast<double>(
                f[lvl] * prefix[t] +
                m.lambda / (1.0L + static_cast<long double>(m.lambda) * m.g[lvl]) * suffix);
            suffix += static_cast<long double>(f[lvl]) * m.g[lvl] * prefix[t];
        }
    } else {
        // Dual increments along the order: m'(H_t) - m'(H_{t-1}) = g_t S_{t+1},
        // S suffix products; mirrored accumulation.
        std::vector<long double> suffix(k + 1);
        suffix[k] = 1.0L;
        for (int t = k - 1; t >= 0; --t)
            suffix[t] = suffix[t + 1] *
                        (1.0L + static_cast<long double>(m.lambda) * m.g[order[t]]);
        long double prefix_sum = 0.0L;
        for (int t = 0; t < k; ++t) {
            const int lvl = order[t];
            grad[lvl] = static_cast<double>(
                f[lvl] * suffix[t + 1] +
                m.lambda / (1.0L + static_cast<long double>(m.lambda) * m.g[lvl]) * prefix_sum);
            prefix_sum += static_cast<long double>(f[lvl]) * m.g[lvl] * suffix[t + 1];
        }
    }
    return grad;
}

}  // namespace fuzzydp
