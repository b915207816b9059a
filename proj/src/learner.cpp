#include "fuzzydp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fuzzydp/csvio.hpp"
#include "fuzzydp/errors.hpp"
#include "fuzzydp/rng.hpp"

namespace fuzzydp {

namespace {

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

FuzzyMeasure measure_from(const std::vector<double>& g, const double* frozen_lambda) {
    if (g.size() == 1) return FuzzyMeasure{{1.0}, 0.0};
    if (frozen_lambda) return FuzzyMeasure{g, *frozen_lambda};
    return FuzzyMeasure{g, solve_lambda(g)};
}

struct NetActivations {
    std::vector<double> x, h1, h2, z;
};

}  // namespace

DensityModel DensityModel::tabular(int n_states, int K, double learning_rate) {
    if (n_states < 1 || K < 1) throw ShapeMismatch("tabular density model needs n_states, K >= 1");
    DensityModel m;
    m.mode = DensityMode::tabular;
    m.K = K;
    m.n_states = n_states;
    m.learning_rate = learning_rate;
    m.logits.assign(static_cast<std::size_t>(n_states) * K, 0.0);
    return m;
}

DensityModel DensityModel::network(int in_dim, int K, double learning_rate,
                                   std::uint64_t seed, int hidden) {
    if (in_dim < 1 || K < 1 || hidden < 1) throw ShapeMismatch("bad network density model shape");
    DensityModel m;
    m.mode = DensityMode::network;
    m.K = K;
    m.in_dim = in_dim;
    m.hidden = hidden;
    m.learning_rate = learning_rate;
    auto init = [&](std::vector<double>& w, int rows, int cols, std::uint64_t tag) {
        w.resize(static_cast<std::size_t>(rows) * cols);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                w[static_cast<std::size_t>(i) * cols + j] =
                    scale * (2.0 * rng::uniform(rng::word(seed, tag, i, j)) - 1.0);
    };
    init(m.w1, hidden, in_dim, 1);
    m.b1.assign(hidden, 0.0);
    init(m.w2, hidden, hidden, 2);
    m.b2.assign(hidden, 0.0);
    init(m.w3, K, hidden, 3);
    m.b3.assign(K, 0.0);
    return m;
}

static NetActivations net_forward(const DensityModel& m, std::span<const double> x) {
    NetActivations act;
    act.x.assign(x.begin(), x.end());
    act.h1.resize(m.hidden);
    for (int i = 0; i < m.hidden; ++i) {
        double u = m.b1[i];
        for (int j = 0; j < m.in_dim; ++j)
            u += m.w1[static_cast<std::size_t>(i) * m.in_dim + j] * x[j];
        act.h1[i] = std::tanh(u);
    }
    act.h2.resize(m.hidden);
    for (int i = 0; i < m.hidden; ++i) {
        double u = m.b2[i];
        for (int j = 0; j < m.hidden; ++j)
            u += m.w2[static_cast<std::size_t>(i) * m.hidden + j] * act.h1[j];
        act.h2[i] = std::tanh(u);
    }
    act.z.resize(m.K);
    for (int k = 0; k < m.K; ++k) {
        double u = m.b3[k];
        for (int j = 0; j < m.hidden; ++j)
            u += m.w3[static_cast<std::size_t>(k) * m.hidden + j] * act.h2[j];
        act.z[k] = u;
    }
    return act;
}

std::vector<double> DensityModel::forward(int s, const StateSpace* space) const {
    std::vector<double> z;
    if (mode == DensityMode::tabular) {
        if (s < 0 || s >= n_states) throw ShapeMismatch("state out of range in density forward");
        z.assign(logits.begin() + static_cast<std::size_t>(s) * K,
                 logits.begin() + static_cast<std::size_t>(s + 1) * K);
    } else {
        if (!space) throw ShapeMismatch("network density model needs a state space for features");
        std::vector<double> x(space->dim());
        space->embed(s, x);
        z = net_forward(*this, x).z;
    }
    auto g = softmax(z);
    for (double& v : g) v = std::clamp(v, clamp_lo, clamp_hi);
    return g;
}

MeasureProvider DensityModel::measures(const StateSpace* space) const {
    const int n = mode == DensityMode::tabular ? n_states
                                               : (space ? space->n_states() : 0);
    if (n < 1) throw ShapeMismatch("cannot enumerate states for the measure table");
    std::vector<FuzzyMeasure> table;
    table.reserve(n);
    for (int s = 0; s < n; ++s) table.push_back(measure_from(forward(s, space), nullptr));
    return MeasureProvider::per_state(std::move(table));
}

double fuzzy_loss(const DensityModel& model, const TransitionBatch& batch,
                  const ValueFunction& v_r, const ValueFunction& v_c,
                  const UncertaintyLevels& levels, double gamma, const StateSpace& space,
                  const std::vector<double>* frozen_lambdas) {
    if (batch.empty()) throw ShapeMismatch("fuzzy loss needs a nonempty batch");
    if (frozen_lambdas && frozen_lambdas->size() != batch.size())
        throw ShapeMismatch("one frozen lambda per batch tuple required");
    const SnapFn snap = [&](std::span<const double> p) { return space.snap(p); };
    std::vector<double> point(space.dim());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        const auto g = model.forward(t.s_next, &space);
        const double* fl = frozen_lambdas ? &(*frozen_lambdas)[i] : nullptr;
        const FuzzyMeasure fm = measure_from(g, fl);
        space.embed(t.s_next, point);
        const auto f_r = level_values(v_r, point, levels, snap, t.stream_id);
        const auto f_c = level_values(v_c, point, levels, snap, t.stream_id);
        const double e_r = t.r + gamma * choquet_integral(f_r, fm) - t.ret_r;
        const double e_c = t.c + gamma * dual_choquet_integral(f_c, fm) - t.ret_c;
        loss += e_r * e_r + e_c * e_c;
    }
    return loss / static_cast<double>(batch.size());
}

GradientReport gradient_step(DensityModel& model, const TransitionBatch& batch,
                             const ValueFunction& v_r, const ValueFunction& v_c,
                             const UncertaintyLevels& levels, double gamma,
                             const StateSpace& space, std::vector<double>* grad_out) {
    if (batch.empty()) throw ShapeMismatch("gradient step needs a nonempty batch");
    const SnapFn snap = [&](std::span<const double> p) { return space.snap(p); };
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const bool tabular = model.mode == DensityMode::tabular;

    std::size_t n_params;
    if (tabular) {
        n_params = model.logits.size();
    } else {
        n_params = model.w1.size() + model.b1.size() + model.w2.size() + model.b2.size() +
                   model.w3.size() + model.b3.size();
    }
    std::vector<double> grad(n_params, 0.0);

    std::vector<double> point(space.dim());
    double loss = 0.0;
    for (const Transition& t : batch) {
        // forward with intermediates kept for the chain rule
        NetActivations act;
        std::vector<double> z;
        if (tabular) {
            z.assign(model.logits.begin() + static_cast<std::size_t>(t.s_next) * model.K,
                     model.logits.begin() + static_cast<std::size_t>(t.s_next + 1) * model.K);
        } else {
            std::vector<double> x(space.dim());
            space.embed(t.s_next, x);
            act = net_forward(model, x);
            z = act.z;
        }
        const auto p = softmax(z);
        auto g = p;
        for (double& v : g) v = std::clamp(v, model.clamp_lo, model.clamp_hi);
        const FuzzyMeasure fm = measure_from(g, nullptr);

        space.embed(t.s_next, point);
        const auto f_r = level_values(v_r, point, levels, snap, t.stream_id);
        const auto f_c = level_values(v_c, point, levels, snap, t.stream_id);
        const double e_r = t.r + gamma * choquet_integral(f_r, fm) - t.ret_r;
        const double e_c = t.c + gamma * dual_choquet_integral(f_c, fm) - t.ret_c;
        loss += (e_r * e_r + e_c * e_c) * inv_b;

        if (model.K == 1) continue;  // single-level measure is constant in g

        // dL/dg through both aggregates; lambda detached by construction
        const auto dc_r = choquet_density_gradient(f_r, fm, false);
        const auto dc_c = choquet_density_gradient(f_c, fm, true);
        std::vector<double> dg(model.K);
        for (int k = 0; k < model.K; ++k)
            dg[k] = inv_b * 2.0 * gamma * (e_r * dc_r[k] + e_c * dc_c[k]);

        // clamp: zero gradient where saturated
        for (int k = 0; k < model.K; ++k)
            if (p[k] <= model.clamp_lo || p[k] >= model.clamp_hi) dg[k] = 0.0;

        // softmax jacobian
        std::vector<double> dz(model.K);
        double inner = 0.0;
        for (int k = 0; k < model.K; ++k) inner += dg[k] * p[k];
        for (int k = 0; k < model.K; ++k) dz[k] = p[k] * (dg[k] - inner);

        if (tabular) {
            for (int k = 0; k < model.K; ++k)
                grad[static_cast<std::size_t>(t.s_next) * model.K + k] += dz[k];
        } else {
            // backprop through the two tanh layers
            const int h = model.hidden, d = model.in_dim, kk = model.K;
            double* gw1 = grad.data();
            double* gb1 = gw1 + model.w1.size();
            double* gw2 = gb1 + model.b1.size();
            double* gb2 = gw2 + model.w2.size();
            double* gw3 = gb2 + model.b2.size();
            double* gb3 = gw3 + model.w3.size();

            std::vector<double> dh2(h, 0.0);
            for (int k = 0; k < kk; ++k) {
                gb3[k] += dz[k];
                for (int j = 0; j < h; ++j) {
                    gw3[static_cast<std::size_t>(k) * h + j] += dz[k] * act.h2[j];
                    dh2[j] += model.w3[static_cast<std::size_t>(k) * h + j] * dz[k];
                }
            }
            std::vector<double> du2(h), dh1(h, 0.0);
            for (int i = 0; i < h; ++i) du2[i] = dh2[i] * (1.0 - act.h2[i] * act.h2[i]);
            for (int i = 0; i < h; ++i) {
                gb2[i] += du2[i];
                for (int j = 0; j < h; ++j) {
                    gw2[static_cast<std::size_t>(i) * h + j] += du2[i] * act.h1[j];
                    dh1[j] += model.w2[static_cast<std::size_t>(i) * h + j] * du2[i];
                }
            }
            for (int i = 0; i < h; ++i) {
                const double du1 = dh1[i] * (1.0 - act.h1[i] * act.h1[i]);
                gb1[i] += du1;
                for (int j = 0; j < d; ++j)
                    gw1[static_cast<std::size_t>(i) * d + j] += du1 * act.x[j];
            }
        }
    }

    GradientReport rep;
    rep.loss = loss;
    double norm2 = 0.0;
    for (double gv : grad) {
        if (!std::isfinite(gv)) throw NonFiniteGradient("non-finite density gradient");
        rep.grad_max_abs = std::max(rep.grad_max_abs, std::fabs(gv));
        norm2 += gv * gv;
    }
    rep.grad_norm = std::sqrt(norm2);
    if (grad_out) *grad_out = grad;

    // plain gradient-descent update
    auto apply = [&](std::vector<double>& w, const double* gptr) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= model.learning_rate * gptr[i];
    };
    if (tabular) {
        apply(model.logits, grad.data());
    } else {
        const double* ptr = grad.data();
        apply(model.w1, ptr); ptr += model.w1.size();
        apply(model.b1, ptr); ptr += model.b1.size();
        apply(model.w2, ptr); ptr += model.w2.size();
        apply(model.b2, ptr); ptr += model.b2.size();
        apply(model.w3, ptr); ptr += model.w3.size();
        apply(model.b3, ptr);
    }
    return rep;
}

double descend(DensityModel& model, const TransitionBatch& batch, const ValueFunction& v_r,
               const ValueFunction& v_c, const UncertaintyLevels& levels, double gamma,
               const StateSpace& space, int steps) {
    double loss = fuzzy_loss(model, batch, v_r, v_c, levels, gamma, space);
    double lr = model.learning_rate;
    for (int i = 0; i < steps; ++i) {
        DensityModel trial = model;
        trial.learning_rate = lr;
        gradient_step(trial, batch, v_r, v_c, levels, gamma, space);
        const double trial_loss = fuzzy_loss(trial, batch, v_r, v_c, levels, gamma, space);
        if (trial_loss <= loss + 1e-9) {
            trial.learning_rate = model.learning_rate;
            model = std::move(trial);
            loss = trial_loss;
        } else {
            lr *= 0.5;  // reject and retry smaller
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Plain-text checkpoints.

void DensityModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "mode " << (mode == DensityMode::tabular ? "tabular" : "network") << '\n';
    out << "K " << K << '\n';
    out << "learning_rate " << num_to_string(learning_rate) << '\n';
    auto dump = [&](const char* name, const std::vector<double>& w, int cols) {
        out << name << '\n';
        const int rows = cols ? static_cast<int>(w.size()) / cols : 0;
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j)
                out << (j ? " " : "") << num_to_string(w[static_cast<std::size_t>(i) * cols + j]);
            out << '\n';
        }
    };
    if (mode == DensityMode::tabular) {
        out << "n_states " << n_states << '\n';
        dump("LOGITS", logits, K);
    } else {
        out << "in_dim " << in_dim << '\n';
        out << "hidden " << hidden << '\n';
        dump("W1", w1, in_dim);
        dump("B1", b1, static_cast<int>(b1.size()));
        dump("W2", w2, hidden);
        dump("B2", b2, static_cast<int>(b2.size()));
        dump("W3", w3, hidden);
        dump("B3", b3, static_cast<int>(b3.size()));
    }
}

DensityModel DensityModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path, 0);
    DensityModel m;
    std::string key, value;
    int line_no = 0;
    auto read_kv = [&](const std::string& expect) {
        std::string line;
        if (!std::getline(in, line)) throw ParseError("missing '" + expect + "'", line_no);
        ++line_no;
        std::istringstream iss(line);
        if (!(iss >> key >> value) || key != expect)
            throw ParseError("expected '" + expect + "'", line_no);
        return value;
    };
    const std::string mode_s = read_kv("mode");
    m.mode = mode_s == "network" ? DensityMode::network : DensityMode::tabular;
    m.K = std::stoi(read_kv("K"));
    m.learning_rate = std::stod(read_kv("learning_rate"));
    auto read_matrix = [&](const std::string& name, std::vector<double>& w, int rows, int cols) {
        std::string line;
        if (!std::getline(in, line) || line != name) throw ParseError("expected " + name, ++line_no);
        ++line_no;
        w.clear();
        for (int i = 0; i < rows; ++i) {
            if (!std::getline(in, line)) throw ParseError("truncated " + name, line_no);
            ++line_no;
            std::istringstream iss(line);
            double x;
            int got = 0;
            while (iss >> x) {
                w.push_back(x);
                ++got;
            }
            if (got != cols) throw ParseError(name + " row has wrong width", line_no);
        }
    };
    if (m.mode == DensityMode::tabular) {
        m.n_states = std::stoi(read_kv("n_states"));
        read_matrix("LOGITS", m.logits, m.n_states, m.K);
    } else {
        m.in_dim = std::stoi(read_kv("in_dim"));
        m.hidden = std::stoi(read_kv("hidden"));
        read_matrix("W1", m.w1, m.hidden, m.in_dim);
        read_matrix("B1", m.b1, 1, m.hidden);
        read_matrix("W2", m.w2, m.hidden, m.hidden);
        read_matrix("B2", m.b2, 1, m.hidden);
        read_matrix("W3", m.w3, m.K, m.hidden);
        read_matrix("B3", m.b3, 1, m.K);
    }
    return m;
}

}  // namespace fuzzydp
