#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fuzzydp/bellman.hpp"

namespace fuzzydp {

enum class DensityMode { tabular, network };

/// Learnable fuzzy densities: per-state logits, or a small two-hidden-layer
/// tanh network over state features. Forward pass is softmax followed by
/// clamping to [1e-4, 1-1e-4]; no renormalization afterwards (the
/// lambda-measure does not require sum g = 1).
struct DensityModel {
    DensityMode mode = DensityMode::tabular;
    int K = 0;
    double clamp_lo = 1e-4;
    double clamp_hi = 1.0 - 1e-4;
    double learning_rate = 0.05;

    // tabular
    int n_states = 0;
    std::vector<double> logits;  // [s][K]

    // network (two hidden layers, tanh)
    int in_dim = 0;
    int hidden = 32;
    std::vector<double> w1, b1, w2, b2, w3, b3;

    static DensityModel tabular(int n_states, int K, double learning_rate = 0.05);
    static DensityModel network(int in_dim, int K, double learning_rate = 0.05,
                                std::uint64_t seed = 0, int hidden = 32);

    /// Densities for one state; `space` supplies network-mode features.
    std::vector<double> forward(int s, const StateSpace* space = nullptr) const;

    /// Per-state measures (lambda re-solved per state).
    MeasureProvider measures(const StateSpace* space = nullptr) const;

    void save(const std::string& path) const;
    static DensityModel load(const std::string& path);
};

/// One logged transition: indices, signals, the perturbation stream handle
/// of the successor state, and Monte Carlo returns from its time step.
struct Transition {
    int s = 0;
    int a = 0;
    double r = 0.0;
    double c = 0.0;
    int s_next = 0;
    std::uint64_t stream_id = 0;
    double ret_r = 0.0;
    double ret_c = 0.0;
};

using TransitionBatch = std::vector<Transition>;

/// Mean over the batch of
///   (r + gamma Vtil(s') - R)^2 + (c + gamma Vtil_c(s') - C)^2,
/// where Vtil / Vtil_c are the Choquet / dual-Choquet aggregates of the
/// perturbed level values under the model's densities. `frozen_lambdas`
/// (one per tuple) bypasses the lambda solve; the finite-difference oracle
/// uses it to probe the loss with lambda detached.
double fuzzy_loss(const DensityModel& model, const TransitionBatch& batch,
                  const ValueFunction& v_r, const ValueFunction& v_c,
                  const UncertaintyLevels& levels, double gamma, const StateSpace& space,
                  const std::vector<double>* frozen_lambdas = nullptr);

struct GradientReport {
    double loss = 0.0;
    double grad_max_abs = 0.0;
    double grad_norm = 0.0;
};

/// Analytic gradient of the loss through clamp -> softmax -> lambda-rule
/// measures -> sorted Choquet sums, with lambda held constant under
/// differentiation and the sort permutation frozen at the current values.
/// `grad_out` (optional) receives d(loss)/d(parameters) without applying
/// the update.
GradientReport gradient_step(DensityModel& model, const TransitionBatch& batch,
                             const ValueFunction& v_r, const ValueFunction& v_c,
                             const UncertaintyLevels& levels, double gamma,
                             const StateSpace& space,
                             std::vector<double>* grad_out = nullptr);

/// Plain descent with step halving on loss increase; returns final loss.
double descend(DensityModel& model, const TransitionBatch& batch, const ValueFunction& v_r,
               const ValueFunction& v_c, const UncertaintyLevels& levels, double gamma,
               const StateSpace& space, int steps);

}  // namespace fuzzydp
