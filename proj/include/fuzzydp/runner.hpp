#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fuzzydp/bellman.hpp"
#include "fuzzydp/lagrangian.hpp"
#include "fuzzydp/learner.hpp"

namespace fuzzydp {

/// Experiment configuration: `key = value` config file plus CLI overrides.
struct RunConfig {
    std::string env = "di";         // "di" or a model file path
    std::string op = "fuzzy";       // fuzzy | minmax | nominal
    int K = 10;
    double eps_base = 0.1;
    int M = 5;
    std::uint64_t seed = 1;
    double gamma = 0.95;
    double budget = 1.0;
    double alpha = 0.05;
    double tol = 1e-6;
    int max_iter = 20000;

    // grid (di environment)
    double x_min = -2.5, x_max = 2.5, v_min = -2.5, v_max = 2.5;
    int nx = 51, nv = 51;
    int grid_actions = 11;
    std::string dynamics = "standard";  // demo/train default; "paper" is verbatim
    double dt = 0.2;

    // measures
    std::string density_mode = "uniform";  // uniform | tabular | network
    double density_sum = 0.7;              // uniform mode: sum of densities

    // rollouts
    int episodes = 100;
    int horizon = 150;
    double test_noise = 0.25;

    // primal-dual / training
    int pd_iterations = 15;
    int train_iterations = 20;
    int train_episodes = 5;
    int fuzzy_steps = 0;  // 0 = one step per five value sweeps
    double learning_rate = 0.05;

    std::string out_dir = "out";
    int threads = 1;

    // measure subcommand
    std::vector<double> densities;
    bool show_core = false;
    // equiv subcommand
    std::string kernel_file;
};

/// Reads `key = value` lines ('#' comments); unknown keys are errors.
void apply_config_file(RunConfig& cfg, const std::string& path);
/// Applies one `key=value` override; throws ParseError on unknown keys.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        int line_no = 0);

struct Environment {
    TabularCMDP model;
    std::shared_ptr<const StateSpace> space;
    std::optional<GridSpec> grid;  // present for the di environment
    DiMode mode = DiMode::standard;
    double dt = 0.2;
};

Environment build_environment(const RunConfig& cfg);

/// Operator spec for the configured operator; `measures` only used by fuzzy.
OperatorSpec make_operator_spec(const RunConfig& cfg, const Environment& env,
                                OperatorKind kind);

/// Uniform-density global measure with sum(density_sum); the demo default.
MeasureProvider uniform_measure(int K, double density_sum);

struct RolloutStats {
    double avg_return = 0.0;
    double avg_risk = 0.0;  // violating steps / horizon, averaged over episodes
    int episodes = 0;
};

/// Continuous-state rollouts of a grid policy under per-step Gaussian test
/// perturbations; noise streams depend only on (seed, episode, step).
RolloutStats rollout_di(const Environment& env, const Policy& policy, int episodes,
                        int horizon, double test_noise, std::uint64_t seed);

struct DemoResult {
    struct Entry {
        std::string op;
        RolloutStats stats;
    };
    std::vector<Entry> entries;  // fuzzy, minmax, nominal
    const RolloutStats& of(const std::string& op) const;
};

/// Constrained primal-dual solve per operator followed by noisy evaluation
/// rollouts; the engine behind `demo-di`.
DemoResult run_demo(const RunConfig& cfg);

// Command entry points; return process exit codes.
int cmd_vi(const RunConfig& cfg);
int cmd_demo_di(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_equiv(const RunConfig& cfg);
int cmd_measure(const RunConfig& cfg, std::ostream& out);

}  // namespace fuzzydp
