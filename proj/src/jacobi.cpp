#include "nonholo/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace nonholo {

namespace {

bool expr_zero(const Expr& e, double tol = 1e-10) {
    Expr s = simplify(e);
    if (s.is_zero()) return true;
    return equal(s, Expr::integer(0), 20, tol);
}

// Least squares min ||M x - b|| by Householder QR with column pivoting;
// rank-deficient directions are left at zero.
std::vector<double> least_squares(std::vector<std::vector<double>> m, std::vector<double> b) {
    std::size_t rows = m.size();
    std::size_t cols = rows ? m[0].size() : 0;
    std::vector<std::size_t> perm(cols);
    for (std::size_t i = 0; i < cols; ++i) perm[i] = i;

    std::size_t rank = 0;
    double norm0 = 0.0;
    for (std::size_t k = 0; k < cols && k < rows; ++k) {
        // pivot on the column with the largest remaining norm
        double best = -1.0;
        std::size_t bestcol = k;
        for (std::size_t c = k; c < cols; ++c) {
            double s = 0.0;
            for (std::size_t r = k; r < rows; ++r) s += m[r][c] * m[r][c];
            if (s > best) {
                best = s;
                bestcol = c;
            }
        }
        if (bestcol != k) {
            for (std::size_t r = 0; r < rows; ++r) std::swap(m[r][k], m[r][bestcol]);
            std::swap(perm[k], perm[bestcol]);
        }
        double colnorm = std::sqrt(std::max(best, 0.0));
        if (k == 0) norm0 = colnorm;
        if (colnorm <= 1e-12 * std::max(norm0, 1.0)) break;
        ++rank;

        double alpha = m[k][k] >= 0 ? -colnorm : colnorm;
        std::vector<double> v(rows, 0.0);
        v[k] = m[k][k] - alpha;
        for (std::size_t r = k + 1; r < rows; ++r) v[r] = m[r][k];
        double vnorm2 = 0.0;
        for (std::size_t r = k; r < rows; ++r) vnorm2 += v[r] * v[r];
        if (vnorm2 == 0.0) continue;
        for (std::size_t c = k; c < cols; ++c) {
            double dot = 0.0;
            for (std::size_t r = k; r < rows; ++r) dot += v[r] * m[r][c];
            double f = 2.0 * dot / vnorm2;
            for (std::size_t r = k; r < rows; ++r) m[r][c] -= f * v[r];
        }
        double dot = 0.0;
        for (std::size_t r = k; r < rows; ++r) dot += v[r] * b[r];
        double f = 2.0 * dot / vnorm2;
        for (std::size_t r = k; r < rows; ++r) b[r] -= f * v[r];
    }

    std::vector<double> x(cols, 0.0);
    for (std::size_t i = rank; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < rank; ++j) acc -= m[i][j] * x[perm[j]];
        x[perm[i]] = acc / m[i][i];
    }
    return x;
}

Point sample_point(std::mt19937& rng, const Chart& chart, double box_min, double box_max) {
    std::uniform_real_distribution<double> mag(box_min, box_max);
    Point p;
    for (const auto& v : chart.names()) p[v] = ((rng() & 1u) ? 1.0 : -1.0) * mag(rng);
    return p;
}

// Compressed translation family: chart (q1, q2, p1, p2) with the canonical
// pairing and a single (p1,p2) coefficient linear in the momenta.
bool has_compressed_shape(const Bivector& b) {
    if (b.chart().dim() != 4) return false;
    if (!expr_zero(b.entry(0, 2) - Expr::integer(1))) return false;
    if (!expr_zero(b.entry(1, 3) - Expr::integer(1))) return false;
    if (!expr_zero(b.entry(0, 1)) || !expr_zero(b.entry(0, 3)) || !expr_zero(b.entry(1, 2)))
        return false;
    Expr r = b.entry(2, 3);
    const std::string& u1 = b.chart().name(2);
    const std::string& u2 = b.chart().name(3);
    for (const auto& a : {u1, u2})
        for (const auto& c : {u1, u2})
            if (!expr_zero(diff(diff(r, a), c))) return false;
    // linear homogeneous in the momenta (no constant part)
    Expr at_zero = substitute(substitute(r, u1, Expr::integer(0)), u2, Expr::integer(0));
    return expr_zero(at_zero);
}

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

} // namespace

Trivector jacobi_defect(const Bivector& b) { return schouten_self(b); }

PointwiseFit solve_E_pointwise(const Bivector& b, const Trivector& t, const Point& p) {
    if (b.chart() != t.chart())
        throw StructureError("solve_E_pointwise: bivector and trivector on different charts");
    const Chart& chart = b.chart();
    int n = chart.dim();

    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                std::vector<double> row(static_cast<std::size_t>(n), 0.0);
                // (2E^B)^{ijk} = 2(E^i B^{jk} + E^j B^{ki} + E^k B^{ij})
                row[static_cast<std::size_t>(i)] += 2.0 * eval(b.entry(j, k), p);
                row[static_cast<std::size_t>(j)] += 2.0 * eval(b.entry(k, i), p);
                row[static_cast<std::size_t>(k)] += 2.0 * eval(b.entry(i, j), p);
                m.push_back(std::move(row));
                rhs.push_back(eval(t.entry(i, j, k), p));
            }

    std::vector<double> x = least_squares(m, rhs);

    double res2 = 0.0, tnorm2 = 0.0;
    for (std::size_t r = 0; r < m.size(); ++r) {
        double acc = -rhs[r];
        for (int c = 0; c < n; ++c) acc += m[r][static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
        res2 += acc * acc;
        tnorm2 += rhs[r] * rhs[r];
    }
    double rel = std::sqrt(res2) / std::max(std::sqrt(tnorm2), 1e-30);
    return PointwiseFit{p, std::move(x), rel};
}

VectorField solve_E_symbolic_compressed(const Bivector& b) {
    if (!has_compressed_shape(b))
        throw StructureError("bivector is not of the compressed translation shape");
    const Chart& chart = b.chart();
    Expr r = b.entry(2, 3);
    Expr mu = simplify(diff(r, chart.name(3)));
    Expr nu = simplify(-diff(r, chart.name(2)));
    VectorField e(chart, {Expr::integer(0), Expr::integer(0), mu, nu});

    // verify 2E^B = [B,B] by sampling
    Trivector defect = schouten_self(b);
    Trivector fit = wedge3(e, b);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                if (!equal(Expr::integer(2) * fit.entry(i, j, k), defect.entry(i, j, k), 20, 1e-8))
                    throw StructureError("candidate E fails 2E^B = [B,B] under sampling");
    return e;
}

Expr check_LE(const Bivector& b, const VectorField& e) {
    if (b.chart().dim() != 4)
        throw StructureError("check_LE applies to the compressed translation family");
    Bivector led = lie_derivative_bivector(e, b);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (!(i == 2 && j == 3) && !expr_zero(led.entry(i, j)))
                throw StructureError("L_E B has support outside the momentum pair");
    return simplify(led.entry(2, 3));
}

Expr restriction_condition(const Expr& ratio13, const Expr& ratio23, const std::string& x,
                           const std::string& y) {
    return simplify(diff(ratio13, x) + diff(ratio23, y));
}

// ---------------------------------------------------------------------------
// conformal factor

ConformalFactor ConformalFactor::closed_form(Expr f, std::string variable) {
    ConformalFactor out;
    out.expr_ = std::move(f);
    out.variable_ = std::move(variable);
    out.display_ = to_string(*out.expr_);
    return out;
}

ConformalFactor ConformalFactor::tabulated(Expr ode_h, std::string variable, std::string display) {
    ConformalFactor out;
    out.ode_h_ = std::move(ode_h);
    out.variable_ = std::move(variable);
    out.display_ = std::move(display);
    return out;
}

double ConformalFactor::value(double v) const {
    if (expr_) return eval(*expr_, {{variable_, v}});
    auto h = [&](double s) { return eval(ode_h_, {{variable_, s}}); };
    double integral = v == 0.0 ? 0.0 : adaptive_simpson(h, 0.0, v, 1e-12, 40);
    return std::exp(-integral);
}

ConformalFactor conformal_factor_search(const TwoForm& omega, const std::string& variable) {
    const Chart& chart = omega.chart();
    int n = chart.dim();
    if (n % 2 != 0) throw StructureError("conformal search needs an even-dimensional chart");
    int vidx = chart.index_of(variable);

    ThreeForm dw = exterior_derivative(omega);

    // df^Omega + f dOmega = 0 per canonical triple:
    //   f'(v) (dv^Omega)_{IJK} + f (dOmega)_{IJK} = 0
    Expr h;          // consistent ratio b/a with f' + h f = 0
    bool have_h = false;
    bool degenerate = true;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                Expr a; // (dv ^ Omega)_{ijk}
                if (i == vidx)
                    a = omega.entry(j, k);
                else if (j == vidx)
                    a = -omega.entry(i, k);
                else if (k == vidx)
                    a = omega.entry(i, j);
                else
                    a = Expr::integer(0);
                a = simplify(a);
                Expr bb = simplify(dw.entry(i, j, k));
                bool a_zero = expr_zero(a);
                bool b_zero = expr_zero(bb);
                if (a_zero && b_zero) continue;
                if (a_zero)
                    throw StructureError("ansatz-inconsistent: closedness forces f = 0 on triple (" +
                                         chart.name(i) + "," + chart.name(j) + "," + chart.name(k) + ")");
                degenerate = false;
                Expr candidate = simplify(bb / a);
                if (!have_h) {
                    h = candidate;
                    have_h = true;
                } else if (!equal(h, candidate, 20, 1e-9)) {
                    throw StructureError("ansatz-inconsistent: coefficient equations disagree");
                }
            }

    if (!have_h) {
        // the form is closed; any constant works and f(0)=1 picks f = 1
        (void)degenerate;
        return ConformalFactor::closed_form(Expr::integer(1), variable);
    }

    for (const auto& other : chart.names())
        if (other != variable && !expr_zero(diff(h, other)))
            throw StructureError("ansatz-inconsistent: the ODE coefficient depends on '" + other + "'");

    Expr v = Expr::variable(variable);
    auto constant_value = [&](const Expr& cand, double& out) {
        if (!expr_zero(diff(cand, variable))) return false;
        // evaluate away from poles
        for (double probe : {0.7, 1.3, 0.4}) {
            try {
                out = eval(cand, {{variable, probe}});
                return true;
            } catch (const EvalError&) {
                continue;
            }
        }
        return false;
    };
    auto near_integer = [](double c, long long& k) {
        k = std::llround(c);
        return std::abs(c - static_cast<double>(k)) < 1e-9;
    };
    auto half_power = [&](long long m) {
        // (1+v^2)^(m/2)
        Expr base = Expr::integer(1) + pow(v, 2);
        Expr whole = pow(base, static_cast<int>(m >= 0 ? m / 2 : -((-m) / 2)));
        if (m % 2 == 0) return whole;
        return m > 0 ? simplify(whole * sqrt(base)) : simplify(whole / sqrt(base));
    };

    double c = 0.0;
    long long k = 0;
    // h == 0: f = 1
    if (expr_zero(h)) return ConformalFactor::closed_form(Expr::integer(1), variable);
    // h = c v/(1+v^2) -> f = (1+v^2)^(-c/2)
    Expr cand = simplify(h * (Expr::integer(1) + pow(v, 2)) / v);
    if (constant_value(cand, c) && near_integer(c, k)) {
        Expr f = half_power(-k);
        if (equal(diff(f, variable) + h * f, Expr::integer(0), 20, 1e-9))
            return ConformalFactor::closed_form(f, variable);
    }
    // h = c/v -> f = v^(-c)
    cand = simplify(h * v);
    if (constant_value(cand, c) && near_integer(c, k)) {
        Expr f = pow(v, static_cast<int>(-k));
        if (equal(diff(f, variable) + h * f, Expr::integer(0), 20, 1e-9))
            return ConformalFactor::closed_form(f, variable);
    }
    // h = c -> f = exp(-c v), not representable in the grammar
    if (constant_value(h, c)) {
        if (c == 0.0) return ConformalFactor::closed_form(Expr::integer(1), variable);
        char buf[64];
        std::snprintf(buf, sizeof buf, "exp(%.17g*%s)", -c, variable.c_str());
        return ConformalFactor::tabulated(h, variable, buf);
    }
    return ConformalFactor::tabulated(h, variable, "exp(-integral(" + to_string(h) + "))");
}

// ---------------------------------------------------------------------------
// classification

std::string StructureVerdict::tag_name() const {
    switch (tag) {
    case Tag::Poisson:
        return "Poisson";
    case Tag::ConformalSymplectic:
        return "ConformalSymplectic";
    case Tag::Jacobi:
        return "Jacobi";
    case Tag::NotJacobi:
        return "NotJacobi";
    }
    return "?";
}

StructureVerdict classify(const Bivector& b, const ClassifyOptions& opts) {
    const Chart& chart = b.chart();
    Trivector defect = schouten_self(b);

    bool defect_zero = true;
    for (const auto& e : defect.canonical())
        if (!expr_zero(e, opts.tol)) {
            defect_zero = false;
            break;
        }
    if (defect_zero) {
        StructureVerdict v{StructureVerdict::Tag::Poisson, defect, {}, {}, {}, 0.0, {}, {}};
        return v;
    }

    // pointwise feasibility of 2E^B = [B,B]
    std::mt19937 rng(opts.seed);
    std::vector<PointwiseFit> fits;
    PointwiseFit const* worst = nullptr;
    for (int s = 0; s < opts.points; ++s) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            Point p = sample_point(rng, chart, opts.box_min, opts.box_max);
            try {
                fits.push_back(solve_E_pointwise(b, defect, p));
                break;
            } catch (const EvalError&) {
                continue;
            }
        }
    }
    for (const auto& f : fits)
        if (!worst || f.residual > worst->residual) worst = &f;

    if (worst && worst->residual > opts.threshold) {
        StructureVerdict v{StructureVerdict::Tag::NotJacobi, defect,   {}, {},
                           worst->point,                     worst->residual, fits, {}};
        v.notes.push_back("no pointwise solution of 2E^B = [B,B]; worst relative residual " +
                          std::to_string(worst->residual));
        return v;
    }

    // symbolic stage for the compressed translation family
    bool even = chart.dim() % 2 == 0;
    bool invertible = false;
    if (even) {
        ExprMatrix m(static_cast<std::size_t>(chart.dim()),
                     std::vector<Expr>(static_cast<std::size_t>(chart.dim())));
        for (int i = 0; i < chart.dim(); ++i)
            for (int j = 0; j < chart.dim(); ++j)
                m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = b.entry(i, j);
        invertible = !expr_zero(determinant(m), 1e-12);
    }

    auto try_conformal = [&](std::vector<std::string>& notes) -> std::optional<ConformalFactor> {
        if (!invertible) return std::nullopt;
        TwoForm omega = invert_bivector(b);
        for (const auto& var : chart.names()) {
            try {
                return conformal_factor_search(omega, var);
            } catch (const StructureError&) {
                continue;
            }
        }
        notes.push_back("no single-variable conformal ansatz closed the dual form");
        return std::nullopt;
    };

    if (has_compressed_shape(b)) {
        VectorField e = solve_E_symbolic_compressed(b);
        Expr led = check_LE(b, e);
        if (expr_zero(led, opts.tol)) {
            StructureVerdict v{StructureVerdict::Tag::Jacobi, defect, {}, e, {}, 0.0, fits, {}};
            if (auto f = try_conformal(v.notes)) {
                v.tag = StructureVerdict::Tag::ConformalSymplectic;
                v.conformal_factor = std::move(f);
            }
            return v;
        }
        // the first Jacobi condition pins E uniquely here, so a nonzero
        // Lie derivative rules the structure out
        std::mt19937 rng2(opts.seed + 1);
        Point worst_p;
        double worst_v = -1.0;
        for (int s = 0; s < opts.points; ++s) {
            Point p = sample_point(rng2, chart, opts.box_min, opts.box_max);
            try {
                double val = std::abs(eval(led, p));
                if (val > worst_v) {
                    worst_v = val;
                    worst_p = p;
                }
            } catch (const EvalError&) {
                continue;
            }
        }
        StructureVerdict v{StructureVerdict::Tag::NotJacobi, defect, {}, e, worst_p, worst_v, fits, {}};
        v.notes.push_back("E solves 2E^B = [B,B] but L_E B = (" + to_string(simplify(led)) +
                          ") d/d" + chart.name(2) + "^d/d" + chart.name(3) + " does not vanish");
        return v;
    }

    StructureVerdict v{StructureVerdict::Tag::Jacobi, defect, {}, {}, {}, 0.0, fits, {}};
    v.notes.push_back("pointwise fits feasible at all sampled points (sampled-only confidence)");
    if (auto f = try_conformal(v.notes)) {
        v.tag = StructureVerdict::Tag::ConformalSymplectic;
        v.conformal_factor = std::move(f);
    }
    return v;
}

} // namespace nonholo
