#include "fuzzydp/uncertainty.hpp"

#include <array>

#include "fuzzydp/errors.hpp"
#include "fuzzydp/rng.hpp"

namespace fuzzydp {

void UncertaintyLevels::validate() const {
    if (K < 1) throw Error("uncertainty levels: K must be >= 1");
    if (M < 1) throw Error("uncertainty levels: M must be >= 1");
    if (!(eps_base >= 0.0)) throw Error("uncertainty levels: eps_base must be >= 0");
}

void perturb_point(std::span<const double> point, const UncertaintyLevels& levels,
                   std::uint64_t stream_id, int level, int sample,
                   std::span<double> out) {
    const double scale = levels.eps_base * (level + 1);
    const std::uint64_t ctr =
        (static_cast<std::uint64_t>(level) << 32) | static_cast<std::uint64_t>(sample);
    for (std::size_t c = 0; c < point.size(); ++c) {
        const double n = scale == 0.0 ? 0.0
                                      : rng::gaussian(levels.seed, stream_id, ctr, c);
        out[c] = point[c] + scale * n;
    }
}

std::vector<StateVector> sample_perturbed(const StateVector& s,
                                          const UncertaintyLevels& levels,
                                          std::uint64_t stream_id) {
    levels.validate();
    std::vector<StateVector> samples(static_cast<std::size_t>(levels.K) * levels.M);
    const std::array<double, 2> point{s.x, s.v};
    std::array<double, 2> out{};
    for (int k = 0; k < levels.K; ++k)
        for (int j = 0; j < levels.M; ++j) {
            perturb_point(point, levels, stream_id, k, j, out);
            samples[static_cast<std::size_t>(k) * levels.M + j] = {out[0], out[1]};
        }
    return samples;
}

LevelValues level_values(std::span<const double> v, std::span<const double> point,
                         const UncertaintyLevels& levels, const SnapFn& snap,
                         std::uint64_t stream_id) {
    levels.validate();
    LevelValues out(levels.K);
    std::vector<double> buf(point.size());
    for (int k = 0; k < levels.K; ++k) {
        double acc = 0.0;
        for (int j = 0; j < levels.M; ++j) {
            perturb_point(point, levels, stream_id, k, j, buf);
            acc += v[static_cast<std::size_t>(snap(buf))];
        }
        out[k] = acc / levels.M;
    }
    return out;
}

}  // namespace fuzzydp
