#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "fuzzydp/cmdp.hpp"
#include "fuzzydp/measure.hpp"
#include "fuzzydp/uncertainty.hpp"

namespace fuzzydp {

/// Bounded value table over states.
using ValueFunction = std::vector<double>;

/// Deterministic or stochastic decision rule.
struct Policy {
    int n_states = 0;
    int n_actions = 0;
    std::vector<int> action;      // deterministic: one action per state
    std::vector<double> probs;    // stochastic: [s][a], row-stochastic

    bool deterministic() const { return !action.empty(); }
    double prob(int s, int a) const;
    void validate() const;

    static Policy make_deterministic(std::vector<int> actions, int n_actions);
    static Policy make_stochastic(std::vector<double> probs, int n_states, int n_actions);
};

struct IterationTrace {
    std::vector<double> residuals;  // sup-norm change per sweep
    int iterations = 0;
    bool converged = false;
};

/// State -> measure map; either one shared global measure or a per-state table.
class MeasureProvider {
public:
    static MeasureProvider global(FuzzyMeasure m);
    static MeasureProvider per_state(std::vector<FuzzyMeasure> table);

    const FuzzyMeasure& at(int s) const {
        return table_.size() == 1 ? table_.front() : table_[static_cast<std::size_t>(s)];
    }
    bool global_mode() const { return table_.size() == 1; }
    int size() const { return static_cast<int>(table_.size()); }

private:
    std::vector<FuzzyMeasure> table_;
};

enum class OperatorKind { fuzzy, minmax, nominal };
enum class Target { reward, cost };
enum class MinMaxSense { min, max };

/// Everything a robust backup needs besides the model: which operator,
/// the perturbation scheme, the measures, and the state geometry.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::nominal;
    UncertaintyLevels levels;
    MeasureProvider measures;
    std::shared_ptr<const StateSpace> space;  // defaults to the integer line
    int threads = 1;

    static OperatorSpec nominal();
    static OperatorSpec fuzzy(UncertaintyLevels levels, MeasureProvider measures,
                              std::shared_ptr<const StateSpace> space = nullptr);
    static OperatorSpec minmax(UncertaintyLevels levels,
                               std::shared_ptr<const StateSpace> space = nullptr);
};

/// Precomputed snapped perturbation targets, [s][k][j] -> state index.
/// Depends only on (seed, state, level, sample), so sweeps are deterministic
/// under any scheduling.
class LevelSampler {
public:
    LevelSampler(const StateSpace& space, const UncertaintyLevels& levels);

    int n_states() const { return s_; }
    int target(int s, int k, int j) const {
        return idx_[(static_cast<std::size_t>(s) * k_ + k) * m_ + j];
    }

    /// Per-state, per-level means of v: out[s*K + k].
    void level_means(std::span<const double> v, std::vector<double>& out, int threads) const;

private:
    int s_, k_, m_;
    std::vector<std::int32_t> idx_;
};

/// Reusable backup context: sparse transition rows plus the perturbation
/// sampler. Construct once per (model, spec) and sweep many times.
class BackupEngine {
public:
    BackupEngine(const TabularCMDP& m, OperatorSpec spec);

    /// One synchronous sweep. `policy == nullptr` maximizes over actions
    /// (ties to the lowest index).
    ValueFunction backup(const ValueFunction& v, Target target, const Policy* policy);

    /// Q-table r/c(s,a) + gamma * aggregate(s,a).
    std::vector<double> q_values(const ValueFunction& v, Target target);

    /// Swaps measures (e.g. after a learner update) without resampling.
    void set_measures(MeasureProvider measures);

    const TabularCMDP& model() const { return m_; }
    const OperatorSpec& spec() const { return spec_; }

private:
    void refresh_means(const ValueFunction& v);
    double aggregate(int s, int a, const ValueFunction& v, Target target,
                     std::vector<double>& scratch) const;

    const TabularCMDP& m_;
    OperatorSpec spec_;
    std::shared_ptr<const StateSpace> space_;
    std::unique_ptr<LevelSampler> sampler_;
    std::vector<std::int32_t> row_offset_;   // [(s*A+a)] -> start in entries
    std::vector<std::int32_t> row_state_;    // successor indices
    std::vector<double> row_prob_;           // matching probabilities
    std::vector<double> means_;              // [s'][k], refreshed per sweep
};

// One-sweep backups. `policy` weights actions.
ValueFunction fuzzy_backup(const TabularCMDP& m, const ValueFunction& v,
                           const MeasureProvider& measures, const UncertaintyLevels& levels,
                           const Policy& policy);
ValueFunction dual_fuzzy_backup(const TabularCMDP& m, const ValueFunction& v,
                                const MeasureProvider& measures,
                                const UncertaintyLevels& levels, const Policy& policy);
ValueFunction minmax_backup(const TabularCMDP& m, const ValueFunction& v,
                            const UncertaintyLevels& levels, const Policy& policy,
                            MinMaxSense sense);
ValueFunction nominal_backup(const TabularCMDP& m, const ValueFunction& v,
                             const Policy& policy);

/// Synchronous value iteration to sup-norm tolerance.
std::pair<ValueFunction, IterationTrace> value_iteration(
    BackupEngine& engine, Target target, const Policy* policy, double tol, int max_iter,
    std::optional<ValueFunction> v0 = std::nullopt);
std::pair<ValueFunction, IterationTrace> value_iteration(
    const TabularCMDP& m, const OperatorSpec& spec, Target target, const Policy* policy,
    double tol, int max_iter, std::optional<ValueFunction> v0 = std::nullopt);

}  // namespace fuzzydp
