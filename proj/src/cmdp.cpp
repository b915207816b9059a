#include "fuzzydp/cmdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fuzzydp/csvio.hpp"
#include "fuzzydp/errors.hpp"

namespace fuzzydp {

TabularCMDP TabularCMDP::zeros(int n_states, int n_actions) {
    TabularCMDP m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.p0.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    m.r.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    m.c.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    m.d0.assign(n_states, 0.0);
    return m;
}

ValidationReport validate(const TabularCMDP& m) {
    ValidationReport rep;
    if (m.n_states < 1) rep.violations.push_back("n_states must be positive");
    if (m.n_actions < 1) rep.violations.push_back("n_actions must be positive");
    if (!rep.ok()) return rep;
    if (!(m.gamma >= 0.0 && m.gamma < 1.0))
        rep.violations.push_back("gamma must lie in [0, 1), got " + num_to_string(m.gamma));
    if (!(m.budget >= 0.0))
        rep.violations.push_back("budget must be >= 0, got " + num_to_string(m.budget));
    for (int s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < m.n_states; ++s2) {
                const double p = m.p(s, a, s2);
                if (p < 0.0)
                    rep.violations.push_back("negative transition probability at (state " +
                                             std::to_string(s) + ", action " +
                                             std::to_string(a) + ")");
                sum += p;
            }
            if (std::fabs(sum - 1.0) > 1e-9)
                rep.violations.push_back("transition row sums to " + num_to_string(sum) +
                                         " at (state " + std::to_string(s) + ", action " +
                                         std::to_string(a) + ")");
        }
    for (int s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            if (!std::isfinite(m.reward(s, a)))
                rep.violations.push_back("non-finite reward at (state " + std::to_string(s) +
                                         ", action " + std::to_string(a) + ")");
            if (!(m.cost(s, a) >= 0.0) || !std::isfinite(m.cost(s, a)))
                rep.violations.push_back("cost must be finite and >= 0 at (state " +
                                         std::to_string(s) + ", action " + std::to_string(a) +
                                         ")");
        }
    double d0sum = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
        if (m.d0[s] < 0.0) rep.violations.push_back("negative d0 entry at state " + std::to_string(s));
        d0sum += m.d0[s];
    }
    if (std::fabs(d0sum - 1.0) > 1e-9)
        rep.violations.push_back("d0 sums to " + num_to_string(d0sum));
    return rep;
}

// ---------------------------------------------------------------------------
// File format: '#' comments, blank lines ignored. Sections in order:
//   META   (n_states, n_actions, gamma, budget as "key value" lines)
//   P0     (n_states*n_actions lines, state-major then action, each a row of
//           n_states probabilities)
//   R      (n_states lines of n_actions rewards)
//   C      (n_states lines of n_actions costs)
//   D0     (one line of n_states probabilities)

namespace {

struct LineReader {
    std::ifstream in;
    int line_no = 0;
    explicit LineReader(const std::string& path) : in(path) {}

    // next non-empty, non-comment line
    bool next(std::string& out) {
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
    }
};

std::vector<double> parse_numbers(const std::string& line, int line_no) {
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

void expect_section(LineReader& rd, const std::string& name) {
    std::string line;
    if (!rd.next(line) || line != name)
        throw ParseError("expected section '" + name + "'", rd.line_no);
}

std::vector<double> read_row(LineReader& rd, std::size_t n, const std::string& what) {
    std::string line;
    if (!rd.next(line)) throw ParseError("unexpected end of file reading " + what, rd.line_no);
    auto vals = parse_numbers(line, rd.line_no);
    if (vals.size() != n)
        throw ParseError(what + " has " + std::to_string(vals.size()) + " entries, expected " +
                             std::to_string(n),
                         rd.line_no);
    return vals;
}

}  // namespace

TabularCMDP load_cmdp(const std::string& path) {
    LineReader rd(path);
    if (!rd.in) throw ParseError("cannot open: " + path, 0);

    expect_section(rd, "META");
    int n_states = -1, n_actions = -1;
    double gamma = -1.0, budget = -1.0;
    std::string line;
    for (int i = 0; i < 4; ++i) {
        if (!rd.next(line)) throw ParseError("incomplete META section", rd.line_no);
        std::istringstream iss(line);
        std::string key;
        iss >> key;
        auto vals = parse_numbers(line.substr(key.size()), rd.line_no);
        if (vals.size() != 1) throw ParseError("META entry needs one value", rd.line_no);
        if (key == "n_states") n_states = static_cast<int>(vals[0]);
        else if (key == "n_actions") n_actions = static_cast<int>(vals[0]);
        else if (key == "gamma") gamma = vals[0];
        else if (key == "budget") budget = vals[0];
        else throw ParseError("unknown META key '" + key + "'", rd.line_no);
    }
    if (n_states < 1 || n_actions < 1)
        throw ParseError("META must define positive n_states and n_actions", rd.line_no);

    TabularCMDP m = TabularCMDP::zeros(n_states, n_actions);
    m.gamma = gamma;
    m.budget = budget;

    expect_section(rd, "P0");
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            auto row = read_row(rd, n_states, "P0 row (state " + std::to_string(s) +
                                                  ", action " + std::to_string(a) + ")");
            for (int s2 = 0; s2 < n_states; ++s2) m.p(s, a, s2) = row[s2];
        }
    expect_section(rd, "R");
    for (int s = 0; s < n_states; ++s) {
        auto row = read_row(rd, n_actions, "R row (state " + std::to_string(s) + ")");
        for (int a = 0; a < n_actions; ++a) m.r[static_cast<std::size_t>(s) * n_actions + a] = row[a];
    }
    expect_section(rd, "C");
    for (int s = 0; s < n_states; ++s) {
        auto row = read_row(rd, n_actions, "C row (state " + std::to_string(s) + ")");
        for (int a = 0; a < n_actions; ++a) m.c[static_cast<std::size_t>(s) * n_actions + a] = row[a];
    }
    expect_section(rd, "D0");
    m.d0 = read_row(rd, n_states, "D0");

    if (rd.next(line)) throw ParseError("trailing content '" + line + "'", rd.line_no);

    const auto rep = validate(m);
    if (!rep.ok()) throw InvariantViolation("model file violates invariants: " + rep.violations.front(),
                                            rep.violations.front());
    return m;
}

void save_cmdp(const TabularCMDP& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "META\n";
    out << "n_states " << m.n_states << '\n';
    out << "n_actions " << m.n_actions << '\n';
    out << "gamma " << num_to_string(m.gamma) << '\n';
    out << "budget " << num_to_string(m.budget) << '\n';
    out << "P0\n";
    for (int s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            for (int s2 = 0; s2 < m.n_states; ++s2)
                out << (s2 ? " " : "") << num_to_string(m.p(s, a, s2));
            out << '\n';
        }
    out << "R\n";
    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a)
            out << (a ? " " : "") << num_to_string(m.reward(s, a));
        out << '\n';
    }
    out << "C\n";
    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a)
            out << (a ? " " : "") << num_to_string(m.cost(s, a));
        out << '\n';
    }
    out << "D0\n";
    for (int s = 0; s < m.n_states; ++s) out << (s ? " " : "") << num_to_string(m.d0[s]);
    out << '\n';
}

// ---------------------------------------------------------------------------
// Double integrator.

StateVector di_step(const StateVector& s, double a, DiMode mode, double dt) {
    if (!(a >= -1.0 && a <= 1.0))
        throw ActionOutOfRange("action " + num_to_string(a) + " outside [-1, 1]");
    if (mode == DiMode::paper) return {s.x + 0.005 * a, s.v};
    if (!(dt > 0.0)) throw Error("standard dynamics require dt > 0");
    return {s.x + dt * s.v, s.v + dt * a};
}

double di_reward(const StateVector& s) {
    const double x = s.x, v = s.v;
    auto bump = [](double h, double w, double q) { return std::max(h - w * q, 0.0); };
    return bump(4.0, 2.0, (x - 1.5) * (x - 1.5) + (v + 1.5) * (v + 1.5)) +
           bump(5.0, 3.0, (x + 2.2) * (x + 2.2) + (v + 2.2) * (v + 2.2)) +
           bump(5.0, 3.0, (x - 2.2) * (x - 2.2) + (v - 2.2) * (v - 2.2)) +
           bump(4.0, 2.0, (x + 1.5) * (x + 1.5) + (v - 1.5) * (v - 1.5));
}

double di_cost(const StateVector& s) {
    return (std::fabs(s.x) > 2.0 || std::fabs(s.v) > 2.0) ? 1.0 : 0.0;
}

void GridSpec::validate() const {
    if (!(x_min < x_max) || !(v_min < v_max))
        throw InvalidGrid("grid bounds must be strictly ordered");
    if (nx < 2 || nv < 2) throw InvalidGrid("grid needs at least 2 cells per dimension");
    if (n_actions < 1) throw InvalidGrid("grid needs at least one action");
}

double GridSpec::action_value(int a) const {
    if (n_actions == 1) return 0.0;
    return -1.0 + 2.0 * a / (n_actions - 1);
}

StateVector GridSpec::center(int s) const {
    const int ix = s / nv, iv = s % nv;
    const double dx = (x_max - x_min) / nx, dv = (v_max - v_min) / nv;
    return {x_min + (ix + 0.5) * dx, v_min + (iv + 0.5) * dv};
}

int GridSpec::cell_of(const StateVector& s) const {
    const double dx = (x_max - x_min) / nx, dv = (v_max - v_min) / nv;
    const double x = std::clamp(s.x, x_min, x_max);
    const double v = std::clamp(s.v, v_min, v_max);
    const int ix = std::min(nx - 1, static_cast<int>((x - x_min) / dx));
    const int iv = std::min(nv - 1, static_cast<int>((v - v_min) / dv));
    return ix * nv + iv;
}

TabularCMDP build_double_integrator(const GridSpec& grid, DiMode mode, double dt,
                                    double gamma, double budget) {
    grid.validate();
    if (!(grid.x_min <= -2.5 && grid.x_max >= 2.5 && grid.v_min <= -2.5 && grid.v_max >= 2.5))
        throw InvalidGrid("grid must cover [-2.5, 2.5]^2");

    TabularCMDP m = TabularCMDP::zeros(grid.n_states(), grid.n_actions);
    m.gamma = gamma;
    m.budget = budget;
    for (int s = 0; s < m.n_states; ++s) {
        const StateVector from = grid.center(s);
        for (int a = 0; a < m.n_actions; ++a) {
            const StateVector to = di_step(from, grid.action_value(a), mode, dt);
            // reward and cost at the continuous pre-snap, pre-clip successor
            m.r[static_cast<std::size_t>(s) * m.n_actions + a] = di_reward(to);
            m.c[static_cast<std::size_t>(s) * m.n_actions + a] = di_cost(to);
            m.p(s, a, grid.cell_of(to)) = 1.0;
        }
    }
    m.d0[grid.cell_of({0.0, 0.0})] = 1.0;
    return m;
}

}  // namespace fuzzydp
