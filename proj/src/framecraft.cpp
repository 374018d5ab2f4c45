#include "nonholo/framecraft.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace nonholo {

namespace {

void check_no_vars_outside(const Expr& e, const Chart& chart, const char* what) {
    for (const auto& v : variables(e))
        if (!chart.contains(v))
            throw StructureError(std::string(what) + " references '" + v + "' which is not a chart variable");
}

bool is_zero_expr(const Expr& e) {
    Expr s = simplify(e);
    if (s.is_zero()) return true;
    return equal(s, Expr::integer(0), 20, 1e-10);
}

} // namespace

Expr MovingFrame::pair(int i, const VectorField& v) const {
    Expr acc;
    for (int l = 0; l < dim(); ++l)
        acc = acc + coframe_[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * v.component(l);
    return simplify(acc);
}

MovingFrame build_frame(const Chart& chart, std::vector<VectorField> vectors, int admissible) {
    int n = chart.dim();
    if (static_cast<int>(vectors.size()) != n)
        throw StructureError("a frame needs exactly one vector field per chart dimension");
    if (admissible < 1 || admissible >= n)
        throw StructureError("admissible count must satisfy 1 <= m < n");
    for (const auto& v : vectors) {
        if (v.chart() != chart) throw StructureError("frame vector lives on a different chart");
        for (const auto& c : v.components()) check_no_vars_outside(c, chart, "frame component");
    }

    // component matrix E[L][J] = (e_J)^L; coframe rows are E^{-1}
    ExprMatrix m(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            m[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)] = vectors[static_cast<std::size_t>(j)].component(l);

    ExprMatrix coframe;
    try {
        coframe = invert_matrix(m);
    } catch (const StructureError&) {
        throw StructureError("frame matrix is singular; the vectors do not span the tangent space");
    }

    MovingFrame frame(chart, std::move(vectors), admissible, std::move(coframe));

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Expr want = Expr::integer(i == j ? 1 : 0);
            if (!equal(frame.pair(i, frame.vector(j)), want, 20, 1e-10))
                throw StructureError("coframe duality check failed for pair (" + std::to_string(i) +
                                     "," + std::to_string(j) + ")");
        }
    return frame;
}

MetricSpec::MetricSpec(Chart chart, ExprMatrix g, std::optional<Expr> potential)
    : chart_(std::move(chart)), g_(std::move(g)), potential_(std::move(potential)) {
    std::size_t n = static_cast<std::size_t>(chart_.dim());
    if (g_.size() != n) throw StructureError("metric dimension does not match the chart");
    for (const auto& row : g_)
        if (row.size() != n) throw StructureError("metric must be square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            check_no_vars_outside(g_[i][j], chart_, "metric entry");
            if (j > i && !equal(g_[i][j], g_[j][i], 20, 1e-10))
                throw StructureError("metric is not symmetric at entry (" + std::to_string(i) + "," +
                                     std::to_string(j) + ")");
        }
    if (potential_) check_no_vars_outside(*potential_, chart_, "potential");

    // positive definiteness via leading principal minors at sample points
    std::mt19937 rng(2357);
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    for (int trial = 0; trial < 8; ++trial) {
        Point p;
        for (const auto& v : chart_.names()) p[v] = ((rng() & 1u) ? 1.0 : -1.0) * mag(rng);
        for (std::size_t k = 1; k <= n; ++k) {
            ExprMatrix lead(k, std::vector<Expr>(k));
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) lead[i][j] = g_[i][j];
            double minor = eval(determinant(lead), p);
            if (!(minor > 0.0))
                throw StructureError("metric is not positive definite on the sampling box (minor " +
                                     std::to_string(k) + " <= 0)");
        }
    }
}

ExprMatrix structure_matrix(const MovingFrame& frame, const std::vector<std::string>& u_names) {
    int n = frame.dim();
    if (static_cast<int>(u_names.size()) != n)
        throw StructureError("structure matrix needs one momentum label per frame vector");
    ExprMatrix r(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    for (int j = 0; j < n; ++j) {
        r[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = Expr::integer(0);
        for (int k = j + 1; k < n; ++k) {
            VectorField bracket = lie_bracket(frame.vector(j), frame.vector(k));
            Expr acc;
            for (int i = 0; i < n; ++i)
                acc = acc + Expr::variable(u_names[static_cast<std::size_t>(i)]) * frame.pair(i, bracket);
            Expr entry = simplify(-acc);
            r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = entry;
            r[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = simplify(-entry);
        }
    }
    return r;
}

Expr hamiltonian_from_metric(const MetricSpec& metric, const MovingFrame& frame,
                             const std::vector<std::string>& u_names) {
    if (metric.chart() != frame.chart())
        throw StructureError("metric and frame live on different charts");
    int n = frame.dim();
    if (static_cast<int>(u_names.size()) != n)
        throw StructureError("hamiltonian needs one momentum label per frame vector");

    ExprMatrix ginv;
    try {
        ginv = invert_matrix(metric.g());
    } catch (const StructureError&) {
        throw StructureError("metric is symbolically singular");
    }

    // p_L = sum_I u_I (eps_I)_L
    std::vector<Expr> p(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
        Expr acc;
        for (int i = 0; i < n; ++i)
            acc = acc + Expr::variable(u_names[static_cast<std::size_t>(i)]) *
                      frame.coform(i)[static_cast<std::size_t>(l)];
        p[static_cast<std::size_t>(l)] = acc;
    }

    Expr h;
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m)
            h = h + ginv[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] *
                        p[static_cast<std::size_t>(l)] * p[static_cast<std::size_t>(m)];
    h = Expr::rational(1, 2) * h;
    if (metric.potential()) h = h + *metric.potential();
    return simplify(h);
}

ConstrainedSystem constrain(const MovingFrame& frame, const Expr& hamiltonian,
                            const std::vector<std::string>& u_names,
                            std::vector<std::string> fiber_variables) {
    const Chart& q_chart = frame.chart();
    int n = frame.dim();
    int m = frame.admissible();
    if (static_cast<int>(u_names.size()) != n)
        throw StructureError("constrain needs one momentum label per frame vector");
    for (const auto& u : u_names)
        if (q_chart.contains(u)) throw StructureError("momentum label '" + u + "' collides with a chart variable");
    for (const auto& f : fiber_variables)
        q_chart.index_of(f); // throws when absent

    // H must be quadratic in the momenta: its u-Hessian has to be u-free.
    std::vector<std::vector<Expr>> hess(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    for (int a = 0; a < n; ++a) {
        Expr da = diff(hamiltonian, u_names[static_cast<std::size_t>(a)]);
        for (int b = 0; b < n; ++b) {
            Expr entry = simplify(diff(da, u_names[static_cast<std::size_t>(b)]));
            for (const auto& u : u_names)
                if (!is_zero_expr(diff(entry, u)))
                    throw StructureError("hamiltonian is not quadratic in the quasi-momenta");
            hess[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = entry;
        }
    }

    // Solve dH/du_alpha = 0, linear in the inadmissible momenta.
    int k = n - m;
    ExprMatrix block(static_cast<std::size_t>(k), std::vector<Expr>(static_cast<std::size_t>(k)));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            block[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                hess[static_cast<std::size_t>(m + a)][static_cast<std::size_t>(b + m)];
    ExprMatrix block_inv;
    try {
        block_inv = invert_matrix(block);
    } catch (const StructureError&) {
        throw StructureError("the inadmissible block of the Hessian is singular; cannot eliminate");
    }

    std::vector<Expr> rhs(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
        Expr grad = diff(hamiltonian, u_names[static_cast<std::size_t>(m + a)]);
        for (int b = 0; b < k; ++b) grad = substitute(grad, u_names[static_cast<std::size_t>(m + b)], Expr::integer(0));
        rhs[static_cast<std::size_t>(a)] = simplify(-grad);
    }

    std::vector<std::pair<std::string, Expr>> eliminated;
    for (int a = 0; a < k; ++a) {
        Expr sol;
        for (int b = 0; b < k; ++b)
            sol = sol + block_inv[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
                      rhs[static_cast<std::size_t>(b)];
        eliminated.emplace_back(u_names[static_cast<std::size_t>(m + a)], simplify(sol));
    }

    auto eliminate = [&](Expr e) {
        for (const auto& [name, value] : eliminated) e = substitute(e, name, value);
        return simplify(e);
    };

    // phase chart {q..., u_1..u_m}
    std::vector<std::string> phase_names = q_chart.names();
    for (int i = 0; i < m; ++i) phase_names.push_back(u_names[static_cast<std::size_t>(i)]);
    Chart phase(phase_names);

    ExprMatrix r = structure_matrix(frame, u_names);

    Bivector lam = Bivector::zero(phase);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < m; ++j)
            lam.set(l, n + j, simplify(frame.vector(j).component(l)));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            lam.set(n + i, n + j, eliminate(r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));

    ConstrainedSystem cs{phase, frame, u_names, lam, eliminate(hamiltonian), eliminated,
                         std::move(fiber_variables)};
    return cs;
}

CompressedSystem compress(const ConstrainedSystem& cs) {
    if (cs.fiber_variables.empty())
        throw StructureError("compression needs at least one fiber variable");
    const Chart& phase = cs.phase_chart;
    int n = phase.dim();

    std::set<int> dropped;
    for (const auto& f : cs.fiber_variables) dropped.insert(phase.index_of(f));

    // admissible frame vectors must project to the shape space
    for (int j = 0; j < cs.frame.admissible(); ++j)
        for (int l = 0; l < cs.frame.dim(); ++l) {
            if (dropped.count(l)) continue;
            for (const auto& f : cs.fiber_variables)
                if (!is_zero_expr(diff(cs.frame.vector(j).component(l), f)))
                    throw StructureError("frame vector " + std::to_string(j + 1) +
                                         " has a base component depending on fiber variable '" + f + "'");
        }

    auto check_invariant = [&](const Expr& e, const std::string& what) {
        for (const auto& f : cs.fiber_variables)
            if (!is_zero_expr(diff(e, f)))
                throw StructureError(what + " depends on fiber variable '" + f + "'; cannot compress");
    };

    std::vector<std::string> kept;
    for (int i = 0; i < n; ++i)
        if (!dropped.count(i)) kept.push_back(phase.name(i));
    Chart chart(kept);

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (dropped.count(i) || dropped.count(j)) continue;
            check_invariant(cs.bivector.entry(i, j), "bivector entry {" + phase.name(i) + "," + phase.name(j) + "}");
        }
    check_invariant(cs.hamiltonian, "the constrained hamiltonian");

    Bivector lam = Bivector::zero(chart);
    for (int i = 0; i < n; ++i) {
        if (dropped.count(i)) continue;
        for (int j = i + 1; j < n; ++j) {
            if (dropped.count(j)) continue;
            lam.set(chart.index_of(phase.name(i)), chart.index_of(phase.name(j)), cs.bivector.entry(i, j));
        }
    }

    // reconstruction rates: the deleted rows of the Hamiltonian vector field
    VectorField flow = hamiltonian_vector_field(cs.bivector, cs.hamiltonian);
    std::vector<std::pair<std::string, Expr>> reconstruction;
    for (const auto& f : cs.fiber_variables) {
        Expr rate = simplify(flow.component(phase.index_of(f)));
        check_invariant(rate, "the reconstruction rate for '" + f + "'");
        reconstruction.emplace_back(f, rate);
    }

    return CompressedSystem{chart, lam, cs.hamiltonian, std::move(reconstruction)};
}

ExprMatrix gamma_from_metric(const MetricSpec& metric, const MovingFrame& frame) {
    if (frame.dim() != 3)
        throw StructureError("gamma_from_metric applies to the three-dimensional translation setting");
    ExprMatrix ginv;
    try {
        ginv = invert_matrix(metric.g());
    } catch (const StructureError&) {
        throw StructureError("metric is symbolically singular");
    }
    // gamma = (1/2) C g^{-1} C^T with C the coframe rows
    const ExprMatrix& c = frame.coframe();
    std::size_t n = 3;
    ExprMatrix gamma(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Expr acc;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) acc = acc + c[i][a] * ginv[a][b] * c[j][b];
            gamma[i][j] = simplify(Expr::rational(1, 2) * acc);
        }
    return gamma;
}

} // namespace nonholo
