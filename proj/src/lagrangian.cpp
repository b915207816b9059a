#include "fuzzydp/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fuzzydp/csvio.hpp"
#include "fuzzydp/errors.hpp"

namespace fuzzydp {

namespace {

double initial_return(const TabularCMDP& m, const ValueFunction& v) {
    double j = 0.0;
    for (int s = 0; s < m.n_states; ++s) j += m.d0[s] * v[s];
    if (!std::isfinite(j)) throw NonFinite("objective is non-finite");
    return j;
}

}  // namespace

PolicyEvaluation evaluate_policy(const TabularCMDP& m, const Policy& policy,
                                 const OperatorSpec& spec, double tol, int max_iter) {
    BackupEngine engine(m, spec);
    PolicyEvaluation pe;
    auto [v_r, tr] = value_iteration(engine, Target::reward, &policy, tol, max_iter);
    auto [v_c, tc] = value_iteration(engine, Target::cost, &policy, tol, max_iter);
    if (!tr.converged || !tc.converged)
        throw NoConvergence("policy evaluation did not converge to tolerance");
    pe.v_r = std::move(v_r);
    pe.v_c = std::move(v_c);
    pe.j_r = initial_return(m, pe.v_r);
    pe.j_c = initial_return(m, pe.v_c);
    pe.sweeps = tr.iterations + tc.iterations;
    return pe;
}

Policy greedy_policy(const std::vector<double>& q_r, const std::vector<double>& q_c,
                     double multiplier, int n_states, int n_actions) {
    if (q_r.size() != q_c.size() ||
        q_r.size() != static_cast<std::size_t>(n_states) * n_actions)
        throw ShapeMismatch("Q tables must both be n_states x n_actions");
    std::vector<int> actions(n_states);
    for (int s = 0; s < n_states; ++s) {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n_actions; ++a) {
            const std::size_t i = static_cast<std::size_t>(s) * n_actions + a;
            const double score = q_r[i] - multiplier * q_c[i];
            if (score > best_score) {
                best_score = score;
                best = a;
            }
        }
        actions[s] = best;
    }
    return Policy::make_deterministic(std::move(actions), n_actions);
}

double multiplier_update(double multiplier, double alpha, double j_c, double budget) {
    const double excess = j_c - budget;
    // budget = +inf encodes an unconstrained run
    if (std::isinf(budget) && budget > 0.0) return std::max(0.0, multiplier);
    return std::max(0.0, multiplier + alpha * excess);
}

std::pair<Policy, LagrangianState> primal_dual_solve(const TabularCMDP& m,
                                                     const OperatorSpec& spec,
                                                     const PrimalDualOptions& opts) {
    if (!(opts.alpha > 0.0)) throw Error("primal-dual needs alpha > 0");
    if (opts.iterations < 1) throw Error("primal-dual needs at least one iteration");

    BackupEngine engine(m, spec);
    LagrangianState state;
    state.alpha = opts.alpha;
    state.multiplier = std::max(0.0, opts.initial_multiplier);

    ValueFunction v_r(m.n_states, 0.0), v_c(m.n_states, 0.0);
    Policy policy;
    for (int it = 1; it <= opts.iterations; ++it) {
        // policy improvement from the previous iterate's tables
        const auto q_r = engine.q_values(v_r, Target::reward);
        const auto q_c = engine.q_values(v_c, Target::cost);
        policy = greedy_policy(q_r, q_c, state.multiplier, m.n_states, m.n_actions);

        // evaluate the improved policy (warm-started)
        auto [vr_new, tr] = value_iteration(engine, Target::reward, &policy, opts.eval_tol,
                                            opts.eval_max_iter, v_r);
        auto [vc_new, tc] = value_iteration(engine, Target::cost, &policy, opts.eval_tol,
                                            opts.eval_max_iter, v_c);
        if (!tr.converged || !tc.converged)
            throw NoConvergence("primal-dual policy evaluation did not converge");
        v_r = std::move(vr_new);
        v_c = std::move(vc_new);
        const double j_r = initial_return(m, v_r);
        const double j_c = initial_return(m, v_c);

        const double next_multiplier =
            multiplier_update(state.multiplier, opts.alpha, j_c, m.budget);
        const double delta = std::fabs(next_multiplier - state.multiplier);
        state.multiplier = next_multiplier;
        state.history.push_back({it, j_r, j_c, state.multiplier});

        if (opts.early_stop && j_c <= m.budget && delta < 1e-9) {
            state.stopped_early = true;
            state.stop_reason = "feasible and multiplier stationary (|delta|=" +
                                num_to_string(delta) + ")";
            break;
        }
    }
    if (!state.stopped_early) state.stop_reason = "iteration budget exhausted";

    // final policy: greedy w.r.t. the final multiplier
    const auto q_r = engine.q_values(v_r, Target::reward);
    const auto q_c = engine.q_values(v_c, Target::cost);
    policy = greedy_policy(q_r, q_c, state.multiplier, m.n_states, m.n_actions);
    return {std::move(policy), std::move(state)};
}

// ---------------------------------------------------------------------------
// Finite kernel families.

void KernelFamily::validate() const {
    if (n_states < 1 || n_actions < 1) throw ShapeMismatch("kernel family has empty shape");
    if (candidates.size() != static_cast<std::size_t>(n_states) * n_actions)
        throw ShapeMismatch("kernel family needs one candidate list per (state, action)");
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            const auto& list = at(s, a);
            if (list.empty())
                throw InvariantViolation("no kernel candidates",
                                         "state " + std::to_string(s) + ", action " +
                                             std::to_string(a));
            for (const auto& row : list) {
                if (static_cast<int>(row.size()) != n_states)
                    throw InvariantViolation("kernel row has wrong length",
                                             "state " + std::to_string(s) + ", action " +
                                                 std::to_string(a));
                double sum = 0.0;
                for (double p : row) {
                    if (p < 0.0)
                        throw InvariantViolation("negative kernel probability",
                                                 "state " + std::to_string(s) + ", action " +
                                                     std::to_string(a));
                    sum += p;
                }
                if (std::fabs(sum - 1.0) > 1e-9)
                    throw InvariantViolation("kernel row sums to " + num_to_string(sum),
                                             "state " + std::to_string(s) + ", action " +
                                                 std::to_string(a));
            }
        }
}

namespace {

double dot(const std::vector<double>& row, const ValueFunction& v) {
    return std::inner_product(row.begin(), row.end(), v.begin(), 0.0);
}

// One robust sweep; ext picks min or max over candidate rows.
ValueFunction robust_sweep(const TabularCMDP& m, const KernelFamily& kernels,
                           MinMaxSense sense, const Policy* policy, Target target,
                           const ValueFunction& v) {
    ValueFunction out(m.n_states);
    for (int s = 0; s < m.n_states; ++s) {
        const double* base = (target == Target::reward ? m.r.data() : m.c.data()) +
                             static_cast<std::size_t>(s) * m.n_actions;
        auto action_value = [&](int a) {
            double ext = sense == MinMaxSense::min ? std::numeric_limits<double>::infinity()
                                                   : -std::numeric_limits<double>::infinity();
            for (const auto& row : kernels.at(s, a)) {
                const double e = dot(row, v);
                ext = sense == MinMaxSense::min ? std::min(ext, e) : std::max(ext, e);
            }
            return base[a] + m.gamma * ext;
        };
        if (policy) {
            double acc = 0.0;
            for (int a = 0; a < m.n_actions; ++a) {
                const double w = policy->prob(s, a);
                if (w != 0.0) acc += w * action_value(a);
            }
            out[s] = acc;
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.n_actions; ++a) best = std::max(best, action_value(a));
            out[s] = best;
        }
    }
    return out;
}

// Choquet across candidate-kernel expectations; the kernel family plays the
// role of the uncertainty levels.
ValueFunction fuzzy_kernel_sweep(const TabularCMDP& m, const KernelFamily& kernels,
                                 const std::vector<FuzzyMeasure>& measures,
                                 const Policy* policy, Target target,
                                 const ValueFunction& v) {
    ValueFunction out(m.n_states);
    std::vector<double> f;
    for (int s = 0; s < m.n_states; ++s) {
        const double* base = (target == Target::reward ? m.r.data() : m.c.data()) +
                             static_cast<std::size_t>(s) * m.n_actions;
        auto action_value = [&](int a) {
            const auto& list = kernels.at(s, a);
            f.resize(list.size());
            for (std::size_t i = 0; i < list.size(); ++i) f[i] = dot(list[i], v);
            const auto& fm = measures[static_cast<std::size_t>(s) * m.n_actions + a];
            const double agg = target == Target::reward ? choquet_integral(f, fm)
                                                        : dual_choquet_integral(f, fm);
            return base[a] + m.gamma * agg;
        };
        if (policy) {
            double acc = 0.0;
            for (int a = 0; a < m.n_actions; ++a) {
                const double w = policy->prob(s, a);
                if (w != 0.0) acc += w * action_value(a);
            }
            out[s] = acc;
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.n_actions; ++a) best = std::max(best, action_value(a));
            out[s] = best;
        }
    }
    return out;
}

template <typename Sweep>
ValueFunction iterate_to_fixed_point(int n_states, double tol, int max_iter, Sweep sweep,
                                     const char* what) {
    ValueFunction v(n_states, 0.0);
    for (int it = 0; it < max_iter; ++it) {
        ValueFunction next = sweep(v);
        double residual = 0.0;
        for (int s = 0; s < n_states; ++s) {
            if (!std::isfinite(next[s])) throw NonFinite(std::string(what) + ": non-finite value");
            residual = std::max(residual, std::fabs(next[s] - v[s]));
        }
        v = std::move(next);
        if (residual <= tol) return v;
    }
    throw NoConvergence(std::string(what) + " did not converge");
}

}  // namespace

ValueFunction robust_vi_oracle(const TabularCMDP& m, const KernelFamily& kernels,
                               MinMaxSense sense, const Policy* policy, Target target,
                               double tol, int max_iter) {
    kernels.validate();
    if (kernels.n_states != m.n_states || kernels.n_actions != m.n_actions)
        throw ShapeMismatch("kernel family does not match the model shape");
    return iterate_to_fixed_point(
        m.n_states, tol, max_iter,
        [&](const ValueFunction& v) { return robust_sweep(m, kernels, sense, policy, target, v); },
        "robust value iteration");
}

EquivalenceReport equivalence_check(const TabularCMDP& m, const KernelFamily& kernels,
                                    const KernelDensities& densities, double condition_tol,
                                    double vi_tol) {
    kernels.validate();
    if (kernels.n_states != m.n_states || kernels.n_actions != m.n_actions)
        throw ShapeMismatch("kernel family does not match the model shape");
    if (densities.size() != kernels.candidates.size())
        throw ShapeMismatch("need one density vector per (state, action)");

    // Build the per-pair measures.
    std::vector<FuzzyMeasure> measures;
    measures.reserve(densities.size());
    for (std::size_t i = 0; i < densities.size(); ++i) {
        if (densities[i].size() != kernels.candidates[i].size())
            throw ShapeMismatch("density count != candidate count at pair " + std::to_string(i));
        measures.push_back(FuzzyMeasure::from_densities(densities[i]));
        if (measures.back().lambda < 0.0)
            throw NotConvex("equivalence requires convex measures (lambda >= 0)");
    }

    const int max_iter = 1000000;
    EquivalenceReport rep;

    // Exact robust side: optimal robust reward, then pessimistic cost of the
    // greedy robust policy.
    ValueFunction v_r_rob = robust_vi_oracle(m, kernels, MinMaxSense::min, nullptr,
                                             Target::reward, vi_tol, max_iter);
    // greedy extraction from the converged values
    {
        std::vector<int> actions(m.n_states);
        for (int s = 0; s < m.n_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < m.n_actions; ++a) {
                double ext = std::numeric_limits<double>::infinity();
                for (const auto& row : kernels.at(s, a)) ext = std::min(ext, dot(row, v_r_rob));
                const double q = m.reward(s, a) + m.gamma * ext;
                if (q > best + 1e-12) {
                    best = q;
                    best_a = a;
                }
            }
            actions[s] = best_a;
        }
        rep.robust_policy = Policy::make_deterministic(std::move(actions), m.n_actions);
    }
    ValueFunction v_c_rob = robust_vi_oracle(m, kernels, MinMaxSense::max, &rep.robust_policy,
                                             Target::cost, vi_tol, max_iter);

    // Conditions (1)-(3). Extremal candidates are measured against the
    // converged robust values; by monotonicity the domination check for a
    // point mass reduces to m(all \ {i*}) <= tol.
    for (int s = 0; s < m.n_states && rep.conditions_ok; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            const auto& list = kernels.at(s, a);
            const auto& fm = measures[static_cast<std::size_t>(s) * m.n_actions + a];
            const int k = fm.K();

            // (1) every core extreme point is a valid probability vector
            // dominating the measure
            if (k <= 8) {
                for (const auto& pt : core_extreme_points(fm)) {
                    double sum = 0.0;
                    bool ok = true;
                    for (double p : pt) {
                        if (p < -1e-12) ok = false;
                        sum += p;
                    }
                    if (!ok || std::fabs(sum - 1.0) > 1e-9) {
                        rep.violated.push_back("(1) invalid core point at state " +
                                               std::to_string(s) + ", action " +
                                               std::to_string(a));
                        break;
                    }
                }
            }

            int i_min = 0, i_max = 0;
            double e_min = std::numeric_limits<double>::infinity();
            double e_max = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < list.size(); ++i) {
                const double er = dot(list[i], v_r_rob);
                const double ec = dot(list[i], v_c_rob);
                if (er < e_min) {
                    e_min = er;
                    i_min = static_cast<int>(i);
                }
                if (ec > e_max) {
                    e_max = ec;
                    i_max = static_cast<int>(i);
                }
            }
            const SubsetMask full = full_mask(k);
            if (measure_of(fm, full & ~(SubsetMask{1} << i_min)) > condition_tol)
                rep.violated.push_back("(2) reward-minimizing kernel not in core at state " +
                                       std::to_string(s) + ", action " + std::to_string(a));
            if (measure_of(fm, full & ~(SubsetMask{1} << i_max)) > condition_tol)
                rep.violated.push_back("(3) cost-maximizing kernel not in core at state " +
                                       std::to_string(s) + ", action " + std::to_string(a));
        }
    rep.conditions_ok = rep.violated.empty();
    if (!rep.conditions_ok) {
        std::string msg = "equivalence conditions unmet:";
        for (const auto& v : rep.violated) msg += " " + v + ";";
        throw ConditionsUnmet(msg);
    }

    // Fuzzy side over the same kernel family.
    ValueFunction v_r_fuz = iterate_to_fixed_point(
        m.n_states, vi_tol, max_iter,
        [&](const ValueFunction& v) {
            return fuzzy_kernel_sweep(m, kernels, measures, nullptr, Target::reward, v);
        },
        "fuzzy kernel value iteration");
    {
        std::vector<int> actions(m.n_states);
        std::vector<double> f;
        for (int s = 0; s < m.n_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < m.n_actions; ++a) {
                const auto& list = kernels.at(s, a);
                f.resize(list.size());
                for (std::size_t i = 0; i < list.size(); ++i) f[i] = dot(list[i], v_r_fuz);
                const auto& fm = measures[static_cast<std::size_t>(s) * m.n_actions + a];
                const double q = m.reward(s, a) + m.gamma * choquet_integral(f, fm);
                if (q > best + 1e-12) {
                    best = q;
                    best_a = a;
                }
            }
            actions[s] = best_a;
        }
        rep.fuzzy_policy = Policy::make_deterministic(std::move(actions), m.n_actions);
    }
    ValueFunction v_c_fuz = iterate_to_fixed_point(
        m.n_states, vi_tol, max_iter,
        [&](const ValueFunction& v) {
            return fuzzy_kernel_sweep(m, kernels, measures, &rep.fuzzy_policy, Target::cost, v);
        },
        "dual fuzzy kernel value iteration");

    rep.j_r_robust = initial_return(m, v_r_rob);
    rep.j_c_robust = initial_return(m, v_c_rob);
    rep.j_r_fuzzy = initial_return(m, v_r_fuz);
    rep.j_c_fuzzy = initial_return(m, v_c_fuz);
    rep.gap_r = std::fabs(rep.j_r_fuzzy - rep.j_r_robust);
    rep.gap_c = std::fabs(rep.j_c_fuzzy - rep.j_c_robust);
    rep.policies_match = rep.fuzzy_policy.action == rep.robust_policy.action;
    return rep;
}

// ---------------------------------------------------------------------------
// Kernel-family file format:
//   META
//   n_states N
//   n_actions A
//   BLOCK s a n         (repeated for every (s, a), any order, each once)
//   <n rows of N probabilities>
//   DENSITIES g_1 ... g_n

namespace {

std::vector<double> parse_numbers_or_throw(const std::string& line, int line_no) {
    std::vector<double> vals;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) {
        double x;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw ParseError("not a number: '" + tok + "'", line_no);
        vals.push_back(x);
    }
    return vals;
}

}  // namespace

std::pair<KernelFamily, KernelDensities> load_kernel_family(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path, 0);

    int line_no = 0;
    auto next = [&](std::string& out) {
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_no;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const auto begin = raw.find_first_not_of(" \t\r");
            if (begin == std::string::npos) continue;
            out = raw.substr(begin, raw.find_last_not_of(" \t\r") - begin + 1);
            return true;
        }
        return false;
    };

    std::string line;
    if (!next(line) || line != "META") throw ParseError("expected META", line_no);
    int n_states = -1, n_actions = -1;
    for (int i = 0; i < 2; ++i) {
        if (!next(line)) throw ParseError("incomplete META", line_no);
        std::istringstream iss(line);
        std::string key;
        int value;
        if (!(iss >> key >> value)) throw ParseError("bad META line", line_no);
        if (key == "n_states") n_states = value;
        else if (key == "n_actions") n_actions = value;
        else throw ParseError("unknown META key '" + key + "'", line_no);
    }
    if (n_states < 1 || n_actions < 1) throw ParseError("bad kernel family shape", line_no);

    KernelFamily fam;
    fam.n_states = n_states;
    fam.n_actions = n_actions;
    fam.candidates.resize(static_cast<std::size_t>(n_states) * n_actions);
    KernelDensities densities(fam.candidates.size());

    while (next(line)) {
        std::istringstream iss(line);
        std::string key;
        int s, a, n;
        if (!(iss >> key >> s >> a >> n) || key != "BLOCK")
            throw ParseError("expected 'BLOCK s a n'", line_no);
        if (s < 0 || s >= n_states || a < 0 || a >= n_actions || n < 1)
            throw ParseError("BLOCK header out of range", line_no);
        auto& list = fam.candidates[static_cast<std::size_t>(s) * n_actions + a];
        if (!list.empty()) throw ParseError("duplicate BLOCK", line_no);
        for (int i = 0; i < n; ++i) {
            if (!next(line)) throw ParseError("unexpected end of file in BLOCK", line_no);
            auto row = parse_numbers_or_throw(line, line_no);
            if (static_cast<int>(row.size()) != n_states)
                throw ParseError("kernel row needs " + std::to_string(n_states) + " entries",
                                 line_no);
            list.push_back(std::move(row));
        }
        if (!next(line)) throw ParseError("missing DENSITIES line", line_no);
        std::istringstream dss(line);
        std::string dkey;
        dss >> dkey;
        if (dkey != "DENSITIES") throw ParseError("expected DENSITIES", line_no);
        auto g = parse_numbers_or_throw(line.substr(dkey.size()), line_no);
        if (static_cast<int>(g.size()) != n)
            throw ParseError("need one density per candidate", line_no);
        densities[static_cast<std::size_t>(s) * n_actions + a] = std::move(g);
    }
    for (std::size_t i = 0; i < fam.candidates.size(); ++i)
        if (fam.candidates[i].empty())
            throw ParseError("missing BLOCK for pair index " + std::to_string(i), line_no);
    fam.validate();
    return {std::move(fam), std::move(densities)};
}

void save_kernel_family(const KernelFamily& kernels, const KernelDensities& densities,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "META\n";
    out << "n_states " << kernels.n_states << '\n';
    out << "n_actions " << kernels.n_actions << '\n';
    for (int s = 0; s < kernels.n_states; ++s)
        for (int a = 0; a < kernels.n_actions; ++a) {
            const auto& list = kernels.at(s, a);
            out << "BLOCK " << s << ' ' << a << ' ' << list.size() << '\n';
            for (const auto& row : list) {
                for (std::size_t i = 0; i < row.size(); ++i)
                    out << (i ? " " : "") << num_to_string(row[i]);
                out << '\n';
            }
            out << "DENSITIES";
            for (double g : densities[static_cast<std::size_t>(s) * kernels.n_actions + a])
                out << ' ' << num_to_string(g);
            out << '\n';
        }
}

}  // namespace fuzzydp
