#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace fuzzydp {

/// Double-integrator state (position, velocity).
struct StateVector {
    double x = 0.0;
    double v = 0.0;
};

/// Embedding of discrete state indices into R^d with nearest-state snapping.
/// Perturbation sampling lives in this geometry; snap is total (out-of-range
/// points are clipped to the boundary first).
class StateSpace {
public:
    virtual ~StateSpace() = default;
    virtual int dim() const = 0;
    virtual int n_states() const = 0;
    virtual void embed(int s, std::span<double> out) const = 0;
    virtual int snap(std::span<const double> point) const = 0;
};

/// Default geometry for abstract tabular models: states 0..n-1 as integer
/// positions on a line.
class LineStateSpace final : public StateSpace {
public:
    explicit LineStateSpace(int n) : n_(n) {}
    int dim() const override { return 1; }
    int n_states() const override { return n_; }
    void embed(int s, std::span<double> out) const override {
        out[0] = static_cast<double>(s);
    }
    int snap(std::span<const double> point) const override {
        const double r = std::nearbyint(point[0]);
        return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(n_ - 1)));
    }

private:
    int n_;
};

}  // namespace fuzzydp
