#pragma once

#include <string>
#include <vector>

#include "fuzzydp/bellman.hpp"

namespace fuzzydp {

/// Multiplier iterate history for the primal-dual loop.
struct LagrangianState {
    double multiplier = 0.0;
    double alpha = 0.05;
    struct Record {
        int iteration;
        double j_r;
        double j_c;
        double multiplier;  // value after this iteration's update
    };
    std::vector<Record> history;
    bool stopped_early = false;
    std::string stop_reason;
};

struct PolicyEvaluation {
    ValueFunction v_r;
    ValueFunction v_c;
    double j_r = 0.0;
    double j_c = 0.0;
    int sweeps = 0;
};

/// Fixed-point evaluation of a policy under the spec's operator pair
/// (reward aggregation for V_r, cost aggregation for V_c);
/// J = sum_s d0(s) V*(s).
PolicyEvaluation evaluate_policy(const TabularCMDP& m, const Policy& policy,
                                 const OperatorSpec& spec, double tol = 1e-9,
                                 int max_iter = 1000000);

/// Deterministic argmax of Q_r - multiplier * Q_c per state; ties to the
/// lowest action index.
Policy greedy_policy(const std::vector<double>& q_r, const std::vector<double>& q_c,
                     double multiplier, int n_states, int n_actions);

/// Projected multiplier ascent step [multiplier + alpha (j_c - budget)]^+.
double multiplier_update(double multiplier, double alpha, double j_c, double budget);

struct PrimalDualOptions {
    double alpha = 0.05;
    int iterations = 30;
    double eval_tol = 1e-9;
    int eval_max_iter = 1000000;
    bool early_stop = true;
    double initial_multiplier = 0.0;
};

/// Alternating single policy-improvement and multiplier steps. The returned
/// policy is greedy with respect to the final multiplier.
std::pair<Policy, LagrangianState> primal_dual_solve(const TabularCMDP& m,
                                                     const OperatorSpec& spec,
                                                     const PrimalDualOptions& opts);

// ---------------------------------------------------------------------------
// Exact robust baselines over finite kernel families.

/// Per-(state, action) finite list of candidate transition rows.
struct KernelFamily {
    int n_states = 0;
    int n_actions = 0;
    std::vector<std::vector<std::vector<double>>> candidates;  // [s*A+a][i] -> row

    const std::vector<std::vector<double>>& at(int s, int a) const {
        return candidates[static_cast<std::size_t>(s) * n_actions + a];
    }
    void validate() const;
};

/// Densities over the kernel candidates of each pair, [s*A+a] -> g.
using KernelDensities = std::vector<std::vector<double>>;

/// Exact robust value iteration: each sweep takes the min (rewards) or max
/// (costs) over the candidate rows. `policy == nullptr` maximizes over
/// actions. Converges to `tol` (default 1e-10).
ValueFunction robust_vi_oracle(const TabularCMDP& m, const KernelFamily& kernels,
                               MinMaxSense sense, const Policy* policy = nullptr,
                               Target target = Target::reward, double tol = 1e-10,
                               int max_iter = 1000000);

struct EquivalenceReport {
    bool conditions_ok = true;
    std::vector<std::string> violated;  // which of conditions (1)-(3) failed, where
    double j_r_fuzzy = 0.0, j_r_robust = 0.0;
    double j_c_fuzzy = 0.0, j_c_robust = 0.0;
    double gap_r = 0.0, gap_c = 0.0;
    bool policies_match = false;
    Policy fuzzy_policy, robust_policy;
};

/// Verifies the core-domination conditions for the per-pair measures built
/// from `densities`, then compares fuzzy/dual-fuzzy objectives (Choquet
/// across candidate-kernel expectations) against the exact robust oracle.
/// Throws ConditionsUnmet when a condition fails (a failure of the
/// construction, not of the code).
EquivalenceReport equivalence_check(const TabularCMDP& m, const KernelFamily& kernels,
                                    const KernelDensities& densities,
                                    double condition_tol = 1e-6, double vi_tol = 1e-10);

/// Kernel-family file: META block then one BLOCK per (state, action) with
/// candidate rows and a DENSITIES line.
std::pair<KernelFamily, KernelDensities> load_kernel_family(const std::string& path);
void save_kernel_family(const KernelFamily& kernels, const KernelDensities& densities,
                        const std::string& path);

}  // namespace fuzzydp
