#include "nonholo/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

namespace nonholo {

namespace {

double simpson_segment(const std::function<double(double)>& f, double a, double b) {
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int depth) {
    double whole = simpson_segment(f, a, b);
    double mid = 0.5 * (a + b);
    double halves = simpson_segment(f, a, mid) + simpson_segment(f, mid, b);
    if (depth <= 0 || std::abs(halves - whole) < 15.0 * tol) return halves + (halves - whole) / 15.0;
    return adaptive_simpson(f, a, mid, tol / 2, depth - 1) +
           adaptive_simpson(f, mid, b, tol / 2, depth - 1);
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CompiledField {
    std::vector<CompiledExpr> components;

    static CompiledField build(const Bivector& b, const Expr& h, const Expr* scale) {
        VectorField field = hamiltonian_vector_field(b, h);
        CompiledField out;
        for (int i = 0; i < field.chart().dim(); ++i) {
            Expr comp = field.component(i);
            if (scale) comp = simplify(comp / *scale);
            out.components.emplace_back(comp, field.chart().names());
        }
        return out;
    }

    void eval(const double* state, double* out) const {
        for (std::size_t i = 0; i < components.size(); ++i) out[i] = components[i](state);
    }
};

Point to_point(const Chart& chart, const std::vector<double>& state) {
    Point p;
    for (int i = 0; i < chart.dim(); ++i) p[chart.name(i)] = state[static_cast<std::size_t>(i)];
    return p;
}

std::vector<double> initial_state(const Chart& chart, const Point& x0) {
    std::vector<double> state(static_cast<std::size_t>(chart.dim()));
    for (int i = 0; i < chart.dim(); ++i) {
        auto it = x0.find(chart.name(i));
        if (it == x0.end())
            throw EvalError(EvalError::Kind::UnboundVariable,
                            "initial state does not bind '" + chart.name(i) + "'");
        state[static_cast<std::size_t>(i)] = it->second;
    }
    return state;
}

// One classical RK4 step of the compiled field plus an optional accumulated
// time channel with rate 1/f.
struct Stepper {
    const CompiledField& field;
    const CompiledExpr* inv_rate = nullptr; // dt/ds = inv_rate(state)
    std::size_t n;

    void rhs(const std::vector<double>& state, std::vector<double>& out) const {
        field.eval(state.data(), out.data());
        if (inv_rate) out[n] = (*inv_rate)(state.data());
    }

    void step(std::vector<double>& state, double h) const {
        std::size_t total = state.size();
        std::vector<double> k1(total), k2(total), k3(total), k4(total), tmp(total);
        rhs(state, k1);
        for (std::size_t i = 0; i < total; ++i) tmp[i] = state[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < total; ++i) tmp[i] = state[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < total; ++i) tmp[i] = state[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < total; ++i)
            state[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
};

} // namespace

Point Trajectory::state_at(std::size_t i) const { return to_point(chart, states[i]); }

Integration integrate(const Bivector& b, const Expr& hamiltonian, const Point& x0, double t_end,
                      double dt) {
    if (dt <= 0.0 || t_end <= 0.0) throw StructureError("integrate needs dt > 0 and t_end > 0");
    const Chart& chart = b.chart();
    CompiledField field = CompiledField::build(b, hamiltonian, nullptr);
    Stepper stepper{field, nullptr, static_cast<std::size_t>(chart.dim())};

    Trajectory traj{chart, {}, {}, {}, "", "rk4", dt};
    std::vector<double> state = initial_state(chart, x0);
    long steps = std::lround(t_end / dt);
    if (steps < 1) steps = 1;

    traj.times.push_back(0.0);
    traj.states.push_back(state);
    for (long k = 0; k < steps; ++k) {
        double t = static_cast<double>(k) * dt;
        try {
            stepper.step(state, dt);
        } catch (const EvalError& e) {
            return Integration{std::move(traj), Singularity{t, to_point(chart, state), e.what()}};
        }
        traj.times.push_back(static_cast<double>(k + 1) * dt);
        traj.states.push_back(state);
    }
    return Integration{std::move(traj), std::nullopt};
}

ContactState contact_oracle(double x0, double y0, double z0, double a, double A, double t) {
    auto u2_of = [&](double tau) { return A * std::sqrt(1.0 + (x0 + a * tau) * (x0 + a * tau)); };
    auto ydot = [&](double tau) {
        double xv = x0 + a * tau;
        return u2_of(tau) / (1.0 + xv * xv);
    };
    auto zdot = [&](double tau) { return (x0 + a * tau) * ydot(tau); };

    ContactState s;
    s.x = x0 + a * t;
    s.u1 = a;
    s.u2 = u2_of(t);
    s.y = y0 + (t == 0.0 ? 0.0 : adaptive_simpson(ydot, 0.0, t, 1e-10, 40));
    s.z = z0 + (t == 0.0 ? 0.0 : adaptive_simpson(zdot, 0.0, t, 1e-10, 40));
    return s;
}

Trajectory reconstruct_fiber(const Trajectory& traj,
                             const std::vector<std::pair<std::string, Expr>>& rules,
                             const Point& initial) {
    if (traj.size() == 0) throw StructureError("cannot reconstruct along an empty trajectory");
    std::vector<std::string> names = traj.chart.names();
    for (const auto& [fiber, rule] : rules) {
        for (const auto& v : variables(rule))
            if (!traj.chart.contains(v))
                throw EvalError(EvalError::Kind::UnboundVariable,
                                "reconstruction rule for '" + fiber + "' references unbound '" + v + "'");
        names.push_back(fiber);
    }

    std::vector<CompiledExpr> rates;
    for (const auto& [fiber, rule] : rules) rates.emplace_back(rule, traj.chart.names());

    Trajectory out{Chart(names), traj.times, {}, traj.s_values, traj.system, traj.integrator, traj.step};
    out.states.reserve(traj.size());

    std::vector<double> fiber_vals;
    for (const auto& [fiber, rule] : rules) {
        auto it = initial.find(fiber);
        fiber_vals.push_back(it == initial.end() ? 0.0 : it->second);
    }
    std::vector<double> prev_rate(rules.size()), cur_rate(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) prev_rate[r] = rates[r](traj.states[0].data());

    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (i > 0) {
            double h = traj.times[i] - traj.times[i - 1];
            for (std::size_t r = 0; r < rules.size(); ++r) {
                cur_rate[r] = rates[r](traj.states[i].data());
                fiber_vals[r] += 0.5 * h * (prev_rate[r] + cur_rate[r]);
                prev_rate[r] = cur_rate[r];
            }
        }
        std::vector<double> row = traj.states[i];
        for (double v : fiber_vals) row.push_back(v);
        out.states.push_back(std::move(row));
    }
    return out;
}

InvariantReport invariant_report(const Trajectory& traj,
                                 const std::vector<std::pair<std::string, Expr>>& invariants) {
    InvariantReport report;
    for (const auto& [name, expr] : invariants) {
        CompiledExpr compiled(expr, traj.chart.names());
        double initial = compiled(traj.states.front().data());
        double max_abs = 0.0;
        for (const auto& state : traj.states) {
            double v = compiled(state.data());
            max_abs = std::max(max_abs, std::abs(v - initial));
        }
        double max_rel = max_abs / std::max(std::abs(initial), 1e-30);
        report.rows.push_back({name, expr, initial, max_abs, max_rel});
    }
    return report;
}

Integration reparametrized_flow(const Bivector& b, const Expr& hamiltonian, const Expr& f,
                                const Point& x0, double s_end, double ds) {
    if (ds <= 0.0 || s_end <= 0.0) throw StructureError("reparametrized_flow needs ds > 0 and s_end > 0");
    const Chart& chart = b.chart();
    CompiledField field = CompiledField::build(b, hamiltonian, &f);
    CompiledExpr inv_rate(simplify(Expr::integer(1) / f), chart.names());
    CompiledExpr f_value(f, chart.names());
    Stepper stepper{field, &inv_rate, static_cast<std::size_t>(chart.dim())};

    Trajectory traj{chart, {}, {}, {}, "", "rk4", ds};
    std::vector<double> state = initial_state(chart, x0);
    state.push_back(0.0); // accumulated physical time
    long steps = std::lround(s_end / ds);
    if (steps < 1) steps = 1;

    auto record = [&](double s) {
        traj.s_values.push_back(s);
        traj.times.push_back(state.back());
        traj.states.push_back(std::vector<double>(state.begin(), state.end() - 1));
    };
    record(0.0);
    for (long k = 0; k < steps; ++k) {
        double s = static_cast<double>(k) * ds;
        try {
            if (f_value(state.data()) <= 0.0)
                throw EvalError(EvalError::Kind::DivisionByZero, "conformal factor is not positive");
            stepper.step(state, ds);
        } catch (const EvalError& e) {
            return Integration{std::move(traj),
                               Singularity{s, to_point(chart, std::vector<double>(state.begin(), state.end() - 1)),
                                           e.what()}};
        }
        record(static_cast<double>(k + 1) * ds);
    }
    return Integration{std::move(traj), std::nullopt};
}

std::vector<double> sample_at_time(const Trajectory& traj, double t) {
    if (traj.size() == 0) throw StructureError("empty trajectory");
    if (t <= traj.times.front()) return traj.states.front();
    if (t >= traj.times.back()) return traj.states.back();
    std::size_t lo = 0, hi = traj.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (traj.times[mid] <= t)
            lo = mid;
        else
            hi = mid;
    }
    double w = (t - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
    std::vector<double> out(traj.states[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * traj.states[lo][i] + w * traj.states[hi][i];
    return out;
}

std::string trajectory_csv(const Trajectory& traj,
                           const std::vector<std::pair<std::string, Expr>>& invariants,
                           const std::vector<std::pair<std::string, std::vector<double>>>& extra_columns) {
    std::string out = "t";
    if (!traj.s_values.empty()) out += ",s";
    for (const auto& v : traj.chart.names()) out += "," + v;
    for (const auto& [name, expr] : invariants) out += "," + name;
    for (const auto& [name, column] : extra_columns) out += "," + name;
    out += "\n";

    std::vector<CompiledExpr> compiled;
    for (const auto& [name, expr] : invariants) compiled.emplace_back(expr, traj.chart.names());

    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += format_full(traj.times[i]);
        if (!traj.s_values.empty()) out += "," + format_full(traj.s_values[i]);
        for (double v : traj.states[i]) out += "," + format_full(v);
        for (const auto& c : compiled) out += "," + format_full(c(traj.states[i].data()));
        for (const auto& [name, column] : extra_columns)
            out += "," + format_full(i < column.size() ? column[i] : 0.0);
        out += "\n";
    }
    return out;
}

} // namespace nonholo
