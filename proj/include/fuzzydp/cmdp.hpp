#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fuzzydp/statespace.hpp"

namespace fuzzydp {

/// Finite constrained MDP (S, A, p0, r, c, gamma, d0, B). Immutable after
/// construction by convention; all tables are flat row-major.
struct TabularCMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> p0;  // [s][a][s']
    std::vector<double> r;   // [s][a]
    std::vector<double> c;   // [s][a]
    double gamma = 0.99;
    std::vector<double> d0;  // [s]
    double budget = 0.0;

    double p(int s, int a, int s2) const {
        return p0[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& p(int s, int a, int s2) {
        return p0[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double reward(int s, int a) const { return r[static_cast<std::size_t>(s) * n_actions + a]; }
    double cost(int s, int a) const { return c[static_cast<std::size_t>(s) * n_actions + a]; }

    static TabularCMDP zeros(int n_states, int n_actions);
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Lists every violated model invariant with its location.
ValidationReport validate(const TabularCMDP& m);

/// Line-oriented plain-text model file (sections META, P0, R, C, D0).
/// load/save round-trip to identical tables; save emits canonical form.
TabularCMDP load_cmdp(const std::string& path);
void save_cmdp(const TabularCMDP& m, const std::string& path);

// ---------------------------------------------------------------------------
// Double-integrator environment.

enum class DiMode { paper, standard };

/// One dynamics step. `paper` mode is the verbatim printed system
/// (x += 0.005 a, v unchanged); `standard` mode is the usual discretization
/// x += dt v, v += dt a.
StateVector di_step(const StateVector& s, double a, DiMode mode, double dt);

/// Sum of four clipped quadratic reward bumps.
double di_reward(const StateVector& s);

/// Indicator of leaving the safe box |x| <= 2, |v| <= 2 (boundary safe).
double di_cost(const StateVector& s);

/// Uniform cell grid over the (x, v) plane with n_actions accelerations
/// evenly spaced in [-1, 1].
struct GridSpec {
    double x_min = -2.5, x_max = 2.5;
    double v_min = -2.5, v_max = 2.5;
    int nx = 51, nv = 51;
    int n_actions = 11;

    void validate() const;
    int n_states() const { return nx * nv; }
    double action_value(int a) const;
    StateVector center(int s) const;
    int cell_of(const StateVector& s) const;  // clips, then nearest cell
};

class GridStateSpace final : public StateSpace {
public:
    explicit GridStateSpace(const GridSpec& spec) : spec_(spec) { spec_.validate(); }
    int dim() const override { return 2; }
    int n_states() const override { return spec_.n_states(); }
    void embed(int s, std::span<double> out) const override {
        const StateVector c = spec_.center(s);
        out[0] = c.x;
        out[1] = c.v;
    }
    int snap(std::span<const double> point) const override {
        return spec_.cell_of({point[0], point[1]});
    }
    const GridSpec& spec() const { return spec_; }

private:
    GridSpec spec_;
};

/// Discretizes the double integrator onto the grid: deterministic nominal
/// kernel snapping di_step's output to the nearest cell (clipped to bounds),
/// with r and c evaluated at the continuous pre-snap successor. d0 is a
/// point mass on the cell containing (0, 0).
TabularCMDP build_double_integrator(const GridSpec& grid, DiMode mode = DiMode::paper,
                                    double dt = 0.05, double gamma = 0.99,
                                    double budget = 1.0);

}  // namespace fuzzydp
