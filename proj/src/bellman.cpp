#include "fuzzydp/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fuzzydp/errors.hpp"
#include "fuzzydp/parallel.hpp"

namespace fuzzydp {

double Policy::prob(int s, int a) const {
    if (deterministic()) return action[static_cast<std::size_t>(s)] == a ? 1.0 : 0.0;
    return probs[static_cast<std::size_t>(s) * n_actions + a];
}

void Policy::validate() const {
    if (deterministic()) {
        for (int s = 0; s < n_states; ++s)
            if (action[s] < 0 || action[s] >= n_actions)
                throw ShapeMismatch("policy action out of range at state " + std::to_string(s));
        return;
    }
    if (static_cast<int>(probs.size()) != n_states * n_actions)
        throw ShapeMismatch("stochastic policy table has wrong shape");
    for (int s = 0; s < n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            if (prob(s, a) < 0.0) throw ShapeMismatch("negative policy probability");
            sum += prob(s, a);
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw ShapeMismatch("policy row does not sum to 1 at state " + std::to_string(s));
    }
}

Policy Policy::make_deterministic(std::vector<int> actions, int n_actions) {
    Policy p;
    p.n_states = static_cast<int>(actions.size());
    p.n_actions = n_actions;
    p.action = std::move(actions);
    p.validate();
    return p;
}

Policy Policy::make_stochastic(std::vector<double> probs, int n_states, int n_actions) {
    Policy p;
    p.n_states = n_states;
    p.n_actions = n_actions;
    p.probs = std::move(probs);
    p.validate();
    return p;
}

MeasureProvider MeasureProvider::global(FuzzyMeasure m) {
    MeasureProvider mp;
    mp.table_ = {std::move(m)};
    return mp;
}

MeasureProvider MeasureProvider::per_state(std::vector<FuzzyMeasure> table) {
    if (table.empty()) throw ShapeMismatch("per-state measure table is empty");
    MeasureProvider mp;
    mp.table_ = std::move(table);
    return mp;
}

OperatorSpec OperatorSpec::nominal() { return {}; }

OperatorSpec OperatorSpec::fuzzy(UncertaintyLevels levels, MeasureProvider measures,
                                 std::shared_ptr<const StateSpace> space) {
    OperatorSpec spec;
    spec.kind = OperatorKind::fuzzy;
    spec.levels = levels;
    spec.measures = std::move(measures);
    spec.space = std::move(space);
    return spec;
}

OperatorSpec OperatorSpec::minmax(UncertaintyLevels levels,
                                  std::shared_ptr<const StateSpace> space) {
    OperatorSpec spec;
    spec.kind = OperatorKind::minmax;
    spec.levels = levels;
    spec.space = std::move(space);
    return spec;
}

LevelSampler::LevelSampler(const StateSpace& space, const UncertaintyLevels& levels)
    : s_(space.n_states()), k_(levels.K), m_(levels.M) {
    levels.validate();
    idx_.resize(static_cast<std::size_t>(s_) * k_ * m_);
    std::vector<double> point(space.dim()), buf(space.dim());
    for (int s = 0; s < s_; ++s) {
        space.embed(s, point);
        for (int k = 0; k < k_; ++k)
            for (int j = 0; j < m_; ++j) {
                perturb_point(point, levels, static_cast<std::uint64_t>(s), k, j, buf);
                idx_[(static_cast<std::size_t>(s) * k_ + k) * m_ + j] =
                    static_cast<std::int32_t>(space.snap(buf));
            }
    }
}

void LevelSampler::level_means(std::span<const double> v, std::vector<double>& out,
                               int threads) const {
    out.resize(static_cast<std::size_t>(s_) * k_);
    parallel_for(s_, threads, [&](int lo, int hi) {
        for (int s = lo; s < hi; ++s)
            for (int k = 0; k < k_; ++k) {
                double acc = 0.0;
                const std::size_t base = (static_cast<std::size_t>(s) * k_ + k) * m_;
                for (int j = 0; j < m_; ++j) acc += v[static_cast<std::size_t>(idx_[base + j])];
                out[static_cast<std::size_t>(s) * k_ + k] = acc / m_;
            }
    });
}

BackupEngine::BackupEngine(const TabularCMDP& m, OperatorSpec spec)
    : m_(m), spec_(std::move(spec)) {
    if (spec_.kind == OperatorKind::fuzzy) {
        if (spec_.measures.size() == 0)
            throw DimensionMismatch("fuzzy operator needs a measure provider");
        if (!spec_.measures.global_mode() && spec_.measures.size() != m.n_states)
            throw DimensionMismatch("per-state measure table size mismatch");
        if (spec_.measures.at(0).K() != spec_.levels.K)
            throw DimensionMismatch("measure K=" + std::to_string(spec_.measures.at(0).K()) +
                                    " does not match levels K=" +
                                    std::to_string(spec_.levels.K));
    }
    space_ = spec_.space ? spec_.space
                         : std::make_shared<LineStateSpace>(m.n_states);
    if (space_->n_states() != m.n_states)
        throw DimensionMismatch("state space size does not match the model");
    if (spec_.kind != OperatorKind::nominal)
        sampler_ = std::make_unique<LevelSampler>(*space_, spec_.levels);

    // Sparse transition rows.
    const std::size_t n_rows = static_cast<std::size_t>(m.n_states) * m.n_actions;
    row_offset_.resize(n_rows + 1);
    for (int s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            for (int s2 = 0; s2 < m.n_states; ++s2) {
                const double p = m.p(s, a, s2);
                if (p != 0.0) {
                    row_state_.push_back(s2);
                    row_prob_.push_back(p);
                }
            }
            row_offset_[static_cast<std::size_t>(s) * m.n_actions + a + 1] =
                static_cast<std::int32_t>(row_state_.size());
        }
}

void BackupEngine::set_measures(MeasureProvider measures) {
    if (spec_.kind != OperatorKind::fuzzy)
        throw DimensionMismatch("set_measures only applies to the fuzzy operator");
    if (measures.size() == 0 || (!measures.global_mode() && measures.size() != m_.n_states))
        throw DimensionMismatch("measure table size mismatch");
    spec_.measures = std::move(measures);
}

void BackupEngine::refresh_means(const ValueFunction& v) {
    if (sampler_) sampler_->level_means(v, means_, spec_.threads);
}

double BackupEngine::aggregate(int s, int a, const ValueFunction& v, Target target,
                               std::vector<double>& scratch) const {
    const std::size_t row = static_cast<std::size_t>(s) * m_.n_actions + a;
    const std::int32_t lo = row_offset_[row], hi = row_offset_[row + 1];
    if (spec_.kind == OperatorKind::nominal) {
        double acc = 0.0;
        for (std::int32_t e = lo; e < hi; ++e) acc += row_prob_[e] * v[row_state_[e]];
        return acc;
    }
    const int k_levels = spec_.levels.K;
    if (hi == lo + 1 && row_prob_[lo] == 1.0) {
        // deterministic row: level values are the successor's means
        const double* mrow = means_.data() + static_cast<std::size_t>(row_state_[lo]) * k_levels;
        std::copy(mrow, mrow + k_levels, scratch.begin());
    } else {
        std::fill(scratch.begin(), scratch.end(), 0.0);
        for (std::int32_t e = lo; e < hi; ++e) {
            const double* mrow =
                means_.data() + static_cast<std::size_t>(row_state_[e]) * k_levels;
            const double p = row_prob_[e];
            for (int k = 0; k < k_levels; ++k) scratch[k] += p * mrow[k];
        }
    }
    if (spec_.kind == OperatorKind::minmax)
        return target == Target::reward ? *std::min_element(scratch.begin(), scratch.end())
                                        : *std::max_element(scratch.begin(), scratch.end());
    const FuzzyMeasure& fm = spec_.measures.at(s);
    return target == Target::reward ? choquet_integral(scratch, fm)
                                    : dual_choquet_integral(scratch, fm);
}

ValueFunction BackupEngine::backup(const ValueFunction& v, Target target,
                                   const Policy* policy) {
    if (static_cast<int>(v.size()) != m_.n_states)
        throw DimensionMismatch("value function size mismatch");
    refresh_means(v);
    ValueFunction out(m_.n_states);
    parallel_for(m_.n_states, spec_.threads, [&](int lo, int hi) {
        std::vector<double> scratch(std::max(1, spec_.levels.K));
        for (int s = lo; s < hi; ++s) {
            const double* base = (target == Target::reward ? m_.r.data() : m_.c.data()) +
                                 static_cast<std::size_t>(s) * m_.n_actions;
            if (policy) {
                double acc = 0.0;
                for (int a = 0; a < m_.n_actions; ++a) {
                    const double w = policy->prob(s, a);
                    if (w != 0.0) acc += w * (base[a] + m_.gamma * aggregate(s, a, v, target, scratch));
                }
                out[s] = acc;
            } else {
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < m_.n_actions; ++a)
                    best = std::max(best, base[a] + m_.gamma * aggregate(s, a, v, target, scratch));
                out[s] = best;
            }
        }
    });
    return out;
}

std::vector<double> BackupEngine::q_values(const ValueFunction& v, Target target) {
    if (static_cast<int>(v.size()) != m_.n_states)
        throw DimensionMismatch("value function size mismatch");
    refresh_means(v);
    std::vector<double> q(static_cast<std::size_t>(m_.n_states) * m_.n_actions);
    parallel_for(m_.n_states, spec_.threads, [&](int lo, int hi) {
        std::vector<double> scratch(std::max(1, spec_.levels.K));
        for (int s = lo; s < hi; ++s) {
            const double* base = (target == Target::reward ? m_.r.data() : m_.c.data()) +
                                 static_cast<std::size_t>(s) * m_.n_actions;
            for (int a = 0; a < m_.n_actions; ++a)
                q[static_cast<std::size_t>(s) * m_.n_actions + a] =
                    base[a] + m_.gamma * aggregate(s, a, v, target, scratch);
        }
    });
    return q;
}

ValueFunction fuzzy_backup(const TabularCMDP& m, const ValueFunction& v,
                           const MeasureProvider& measures, const UncertaintyLevels& levels,
                           const Policy& policy) {
    policy.validate();
    BackupEngine engine(m, OperatorSpec::fuzzy(levels, measures));
    return engine.backup(v, Target::reward, &policy);
}

ValueFunction dual_fuzzy_backup(const TabularCMDP& m, const ValueFunction& v,
                                const MeasureProvider& measures,
                                const UncertaintyLevels& levels, const Policy& policy) {
    policy.validate();
    BackupEngine engine(m, OperatorSpec::fuzzy(levels, measures));
    return engine.backup(v, Target::cost, &policy);
}

ValueFunction minmax_backup(const TabularCMDP& m, const ValueFunction& v,
                            const UncertaintyLevels& levels, const Policy& policy,
                            MinMaxSense sense) {
    policy.validate();
    BackupEngine engine(m, OperatorSpec::minmax(levels));
    return engine.backup(v, sense == MinMaxSense::min ? Target::reward : Target::cost,
                         &policy);
}

ValueFunction nominal_backup(const TabularCMDP& m, const ValueFunction& v,
                             const Policy& policy) {
    policy.validate();
    BackupEngine engine(m, OperatorSpec::nominal());
    return engine.backup(v, Target::reward, &policy);
}

std::pair<ValueFunction, IterationTrace> value_iteration(
    BackupEngine& engine, Target target, const Policy* policy, double tol, int max_iter,
    std::optional<ValueFunction> v0) {
    if (!(tol > 0.0)) throw Error("value iteration needs tol > 0");
    if (policy) policy->validate();
    const int n = engine.model().n_states;
    ValueFunction v = v0 ? std::move(*v0) : ValueFunction(n, 0.0);
    IterationTrace trace;
    for (int it = 0; it < max_iter; ++it) {
        ValueFunction next = engine.backup(v, target, policy);
        double residual = 0.0;
        for (int s = 0; s < n; ++s) {
            if (!std::isfinite(next[s]))
                throw NonFinite("backup produced a non-finite value at state " +
                                std::to_string(s));
            residual = std::max(residual, std::fabs(next[s] - v[s]));
        }
        trace.residuals.push_back(residual);
        v = std::move(next);
        ++trace.iterations;
        if (residual <= tol) {
            trace.converged = true;
            break;
        }
    }
    return {std::move(v), std::move(trace)};
}

std::pair<ValueFunction, IterationTrace> value_iteration(
    const TabularCMDP& m, const OperatorSpec& spec, Target target, const Policy* policy,
    double tol, int max_iter, std::optional<ValueFunction> v0) {
    BackupEngine engine(m, spec);
    return value_iteration(engine, target, policy, tol, max_iter, std::move(v0));
}

}  // namespace fuzzydp
