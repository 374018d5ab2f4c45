#include "doctest.h"

#include <cmath>
#include <random>

#include "nonholo/jacobi.hpp"

using namespace nonholo;

namespace {

Chart phase_chart() { return Chart({"x", "y", "z", "u1", "u2"}); }
Chart compressed_chart() { return Chart({"x", "y", "u1", "u2"}); }

Bivector contact_bivector() {
    Bivector b = Bivector::zero(phase_chart());
    b.set(0, 3, Expr::integer(1));
    b.set(1, 4, Expr::integer(1));
    b.set(2, 4, parse("x"));
    b.set(3, 4, parse("-x*u2/(1+x^2)"));
    return b;
}

Bivector orthonormal_bivector() {
    Bivector b = Bivector::zero(phase_chart());
    b.set(0, 3, Expr::integer(1));
    b.set(1, 4, parse("1/sqrt(1+x^2)"));
    b.set(2, 4, parse("x/sqrt(1+x^2)"));
    return b;
}

Bivector heisenberg_metric_bivector() {
    Bivector b = Bivector::zero(phase_chart());
    b.set(0, 3, Expr::integer(1));
    b.set(1, 4, Expr::integer(1));
    b.set(2, 4, parse("x"));
    return b;
}

Bivector compressed_bivector(const Expr& r) {
    Bivector b = Bivector::zero(compressed_chart());
    b.set(0, 2, Expr::integer(1));
    b.set(1, 3, Expr::integer(1));
    b.set(2, 3, r);
    return b;
}

// Independent least-squares oracle: assemble the full triple-indexed system
// and solve the normal equations with plain Gaussian elimination.
double brute_force_residual(const Bivector& b, const Trivector& t, const Point& p) {
    const Chart& chart = b.chart();
    int n = chart.dim();
    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                std::vector<double> row(static_cast<std::size_t>(n), 0.0);
                row[static_cast<std::size_t>(i)] += 2.0 * eval(b.entry(j, k), p);
                row[static_cast<std::size_t>(j)] += 2.0 * eval(b.entry(k, i), p);
                row[static_cast<std::size_t>(k)] += 2.0 * eval(b.entry(i, j), p);
                m.push_back(row);
                rhs.push_back(eval(t.entry(i, j, k), p));
            }
    std::size_t rows = m.size(), cols = static_cast<std::size_t>(n);
    std::vector<std::vector<double>> a(cols, std::vector<double>(cols, 0.0));
    std::vector<double> c(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols; ++i) {
            c[i] += m[r][i] * rhs[r];
            for (std::size_t j = 0; j < cols; ++j) a[i][j] += m[r][i] * m[r][j];
        }
    }
    std::vector<double> x(cols, 0.0);
    for (std::size_t kcol = 0; kcol < cols; ++kcol) {
        std::size_t piv = kcol;
        for (std::size_t r = kcol; r < cols; ++r)
            if (std::abs(a[r][kcol]) > std::abs(a[piv][kcol])) piv = r;
        if (std::abs(a[piv][kcol]) < 1e-12) {
            for (std::size_t r = kcol; r < cols; ++r) a[r][kcol] = 0.0;
            continue;
        }
        std::swap(a[piv], a[kcol]);
        std::swap(c[piv], c[kcol]);
        for (std::size_t r = kcol + 1; r < cols; ++r) {
            double f = a[r][kcol] / a[kcol][kcol];
            for (std::size_t j = kcol; j < cols; ++j) a[r][j] -= f * a[kcol][j];
            c[r] -= f * c[kcol];
        }
    }
    for (std::size_t i = cols; i-- > 0;) {
        if (std::abs(a[i][i]) < 1e-12) {
            x[i] = 0.0;
            continue;
        }
        double acc = c[i];
        for (std::size_t j = i + 1; j < cols; ++j) acc -= a[i][j] * x[j];
        x[i] = acc / a[i][i];
    }
    double res2 = 0.0, t2 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = -rhs[r];
        for (std::size_t i = 0; i < cols; ++i) acc += m[r][i] * x[i];
        res2 += acc * acc;
        t2 += rhs[r] * rhs[r];
    }
    return std::sqrt(res2) / std::max(std::sqrt(t2), 1e-30);
}

Point random_box_point(std::mt19937& rng, const Chart& chart) {
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    Point p;
    for (const auto& v : chart.names()) p[v] = ((rng() & 1u) ? 1.0 : -1.0) * mag(rng);
    return p;
}

} // namespace

TEST_CASE("jacobi_defect: the three constrained bivectors") {
    Trivector t1 = jacobi_defect(contact_bivector());
    CHECK(equal(t1.entry(1, 3, 4), parse("2*x/(1+x^2)"), 20, 1e-10));
    CHECK(equal(t1.entry(2, 3, 4), parse("-2/(1+x^2)"), 20, 1e-10));

    // Orthonormal frame: proportional to e3^du1^du2 with |coef| = 2/(1+x^2);
    // the orientation is fixed by the coordinate form above.
    Trivector t2 = jacobi_defect(orthonormal_bivector());
    CHECK(equal(t2.entry(1, 3, 4), parse("2*x/((1+x^2)*sqrt(1+x^2))"), 20, 1e-10));
    CHECK(equal(t2.entry(2, 3, 4), parse("-2/((1+x^2)*sqrt(1+x^2))"), 20, 1e-10));
    CHECK(equal(t2.entry(0, 3, 4), Expr::integer(0), 10, 1e-10));

    // Heisenberg-invariant metric: constant defect along e3^du1^du2.
    Trivector t3 = jacobi_defect(heisenberg_metric_bivector());
    CHECK(equal(t3.entry(2, 3, 4), parse("-2"), 20, 1e-10));
    CHECK(equal(t3.entry(1, 3, 4), Expr::integer(0), 10, 1e-10));
}

TEST_CASE("solve_E_pointwise: frozen oracle value at the designated point") {
    // At p0 the target trivector lies entirely outside the range of
    // e -> 2e^B, so the best fit is E = 0 with relative residual exactly 1.
    Bivector b = contact_bivector();
    Trivector t = jacobi_defect(b);
    Point p0{{"x", 0.0}, {"y", 0.0}, {"z", 0.0}, {"u1", 1.0}, {"u2", 1.0}};

    double oracle = brute_force_residual(b, t, p0);
    CHECK(oracle == doctest::Approx(1.0).epsilon(1e-12));

    PointwiseFit fit = solve_E_pointwise(b, t, p0);
    CHECK(std::abs(fit.residual - oracle) < 1e-9);
    CHECK(fit.residual > 0.5);
    for (double e : fit.e_components) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("solve_E_pointwise matches the brute-force oracle at sampled points") {
    std::mt19937 rng(2029);
    for (const Bivector& b :
         {contact_bivector(), orthonormal_bivector(), heisenberg_metric_bivector()}) {
        Trivector t = jacobi_defect(b);
        for (int s = 0; s < 25; ++s) {
            Point p = random_box_point(rng, b.chart());
            double oracle = brute_force_residual(b, t, p);
            PointwiseFit fit = solve_E_pointwise(b, t, p);
            CHECK(std::abs(fit.residual - oracle) < 1e-9);
            CHECK(fit.residual >= oracle - 1e-9);
        }
    }
}

TEST_CASE("solve_E_pointwise: closed-form residual for the invariant-metric bracket") {
    // For that preset the minimum is analytic: 1/sqrt(1+x^2).
    Bivector b = heisenberg_metric_bivector();
    Trivector t = jacobi_defect(b);
    for (double x : {0.3, 1.0, 1.9}) {
        Point p{{"x", x}, {"y", 0.4}, {"z", -0.7}, {"u1", 1.1}, {"u2", -0.8}};
        PointwiseFit fit = solve_E_pointwise(b, t, p);
        CHECK(fit.residual == doctest::Approx(1.0 / std::sqrt(1.0 + x * x)).epsilon(1e-9));
    }
}

TEST_CASE("solve_E_pointwise: generic compressed family is feasible") {
    // r = (g13 u1 + g23 u2)/g33 with ratios (x*y, y^2+x)
    Expr r = parse("x*y*u1 + (y^2+x)*u2");
    Bivector b = compressed_bivector(r);
    Trivector t = jacobi_defect(b);
    std::mt19937 rng(733);
    Point p = random_box_point(rng, b.chart());
    PointwiseFit fit = solve_E_pointwise(b, t, p);
    CHECK(fit.residual < 1e-10);
    // mu = g23/g33, nu = -g13/g33
    double mu = eval(parse("y^2+x"), p);
    double nu = -eval(parse("x*y"), p);
    CHECK(fit.e_components[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.e_components[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.e_components[2] == doctest::Approx(mu).epsilon(1e-8));
    CHECK(fit.e_components[3] == doctest::Approx(nu).epsilon(1e-8));
}

TEST_CASE("solve_E_pointwise: zero target gives zero fit") {
    Bivector b = compressed_bivector(Expr::integer(0));
    Trivector t = Trivector::zero(b.chart());
    Point p{{"x", 0.5}, {"y", 0.5}, {"u1", 1.0}, {"u2", 1.0}};
    PointwiseFit fit = solve_E_pointwise(b, t, p);
    CHECK(fit.residual == 0.0);
    for (double e : fit.e_components) CHECK(e == 0.0);
}

TEST_CASE("solve_E_symbolic_compressed: Euclidean contact") {
    Bivector b = compressed_bivector(parse("-x*u2/(1+x^2)"));
    VectorField e = solve_E_symbolic_compressed(b);
    // mu = dr/du2 = -x/(1+x^2), nu = -dr/du1 = 0
    CHECK(equal(e.component(2), parse("-x/(1+x^2)"), 20, 1e-10));
    CHECK(simplify(e.component(3)).is_zero());
    CHECK(simplify(e.component(0)).is_zero());
    CHECK(simplify(e.component(1)).is_zero());
}

TEST_CASE("solve_E_symbolic_compressed: vanishing ratios give E = 0 and Poisson") {
    Bivector b = compressed_bivector(Expr::integer(0));
    VectorField e = solve_E_symbolic_compressed(b);
    for (int i = 0; i < 4; ++i) CHECK(simplify(e.component(i)).is_zero());
    Trivector t = jacobi_defect(b);
    for (const auto& c : t.canonical()) CHECK(simplify(c).is_zero());
}

TEST_CASE("solve_E_symbolic_compressed: generic ratios") {
    Expr r = parse("x*y*u1 + (y^2+x)*u2");
    VectorField e = solve_E_symbolic_compressed(compressed_bivector(r));
    CHECK(equal(e.component(2), parse("y^2+x"), 20, 1e-10));
    CHECK(equal(e.component(3), parse("-x*y"), 20, 1e-10));
}

TEST_CASE("solve_E_symbolic_compressed: shape violations are rejected") {
    // quadratic momentum dependence breaks the family
    CHECK_THROWS_AS(solve_E_symbolic_compressed(compressed_bivector(parse("u1^2"))), StructureError);
    Bivector wrong = Bivector::zero(compressed_chart());
    wrong.set(0, 2, parse("2"));
    wrong.set(1, 3, parse("1"));
    CHECK_THROWS_AS(solve_E_symbolic_compressed(wrong), StructureError);
}

TEST_CASE("check_LE: Euclidean contact satisfies the second Jacobi condition") {
    Bivector b = compressed_bivector(parse("-x*u2/(1+x^2)"));
    VectorField e = solve_E_symbolic_compressed(b);
    Expr led = check_LE(b, e);
    // d_x(0) + d_y(-x/(1+x^2)) = 0
    CHECK(equal(led, Expr::integer(0), 20, 1e-10));
}

TEST_CASE("check_LE: invariant metric gives zero") {
    Bivector b = compressed_bivector(Expr::integer(0));
    VectorField e = solve_E_symbolic_compressed(b);
    CHECK(simplify(check_LE(b, e)).is_zero());
}

TEST_CASE("check_LE: ratio y in each slot breaks the condition with residual 1") {
    // gamma13/gamma33 = gamma23/gamma33 = y
    Bivector b = compressed_bivector(parse("y*u1 + y*u2"));
    VectorField e = solve_E_symbolic_compressed(b);
    Expr led = check_LE(b, e);
    CHECK(equal(led, parse("-1"), 20, 1e-10));
}

TEST_CASE("restriction_condition mirrors check_LE on the ratio pairs") {
    CHECK(simplify(restriction_condition(parse("0"), parse("-x/(1+x^2)"))).is_zero());
    CHECK(simplify(restriction_condition(parse("0"), parse("0"))).is_zero());
    CHECK(equal(restriction_condition(parse("y"), parse("y")), Expr::integer(1), 10, 1e-10));
    CHECK(equal(restriction_condition(parse("x*y"), parse("y^2+x")), parse("y + 2*y"), 20, 1e-10));
}

TEST_CASE("conformal_factor_search: Euclidean compressed form") {
    TwoForm omega = invert_bivector(compressed_bivector(parse("-x*u2/(1+x^2)")));
    ConformalFactor f = conformal_factor_search(omega, "x");
    REQUIRE(f.has_closed_form());
    CHECK(equal(*f.expr(), parse("1/sqrt(1+x^2)"), 20, 1e-10));
    CHECK(f.value(0.0) == doctest::Approx(1.0));
    CHECK(f.value(1.0) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("conformal_factor_search: closed forms give f = 1") {
    TwoForm omega = invert_bivector(compressed_bivector(Expr::integer(0)));
    ConformalFactor f = conformal_factor_search(omega, "x");
    REQUIRE(f.has_closed_form());
    CHECK(f.expr()->is_one());
}

TEST_CASE("conformal_factor_search: inconsistent ansatz is refused") {
    TwoForm omega = TwoForm::zero(compressed_chart());
    omega.set(0, 1, parse("y*u2"));
    omega.set(0, 2, parse("-1"));
    omega.set(1, 3, parse("-1"));
    CHECK_THROWS_WITH_AS(static_cast<void>(conformal_factor_search(omega, "x")),
                         doctest::Contains("ansatz-inconsistent"), StructureError);
}

TEST_CASE("conformal_factor_search verifies d(f Omega) = 0 by sampling") {
    TwoForm omega = invert_bivector(compressed_bivector(parse("-x*u2/(1+x^2)")));
    ConformalFactor f = conformal_factor_search(omega, "x");
    REQUIRE(f.has_closed_form());
    TwoForm scaled = TwoForm::zero(omega.chart());
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) scaled.set(i, j, simplify(*f.expr() * omega.entry(i, j)));
    ThreeForm d = exterior_derivative(scaled);
    for (const auto& e : d.canonical()) CHECK(equal(e, Expr::integer(0), 20, 1e-9));
}

TEST_CASE("classify: constrained contact bivector is not Jacobi") {
    StructureVerdict v = classify(contact_bivector());
    CHECK(v.tag == StructureVerdict::Tag::NotJacobi);
    CHECK(v.residual > 0.5);
    CHECK(v.fits.size() == 25);
    for (const auto& fit : v.fits) CHECK(fit.residual > 0.5);
}

TEST_CASE("classify: compressed Euclidean system is conformally symplectic") {
    StructureVerdict v = classify(compressed_bivector(parse("-x*u2/(1+x^2)")));
    CHECK(v.tag == StructureVerdict::Tag::ConformalSymplectic);
    REQUIRE(v.conformal_factor.has_value());
    REQUIRE(v.conformal_factor->has_closed_form());
    CHECK(equal(*v.conformal_factor->expr(), parse("1/sqrt(1+x^2)"), 20, 1e-10));
    REQUIRE(v.e_field.has_value());
    CHECK(equal(v.e_field->component(2), parse("-x/(1+x^2)"), 20, 1e-10));
}

TEST_CASE("classify: canonical bivector is Poisson") {
    StructureVerdict v = classify(compressed_bivector(Expr::integer(0)));
    CHECK(v.tag == StructureVerdict::Tag::Poisson);
}

TEST_CASE("classify: restriction violation yields NotJacobi via the Lie derivative") {
    StructureVerdict v = classify(compressed_bivector(parse("y*u1 + y*u2")));
    CHECK(v.tag == StructureVerdict::Tag::NotJacobi);
    CHECK(v.residual > 1e-6);
    REQUIRE(!v.notes.empty());
    CHECK(v.notes[0].find("L_E B") != std::string::npos);
}

TEST_CASE("classify: no false negatives on random constant bivectors") {
    std::mt19937 rng(97);
    std::uniform_int_distribution<int> coeff(-3, 3);
    Chart c({"a", "b", "c", "d"});
    for (int trial = 0; trial < 10; ++trial) {
        Bivector b = Bivector::zero(c);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) b.set(i, j, Expr::integer(coeff(rng)));
        StructureVerdict v = classify(b);
        CHECK(v.tag == StructureVerdict::Tag::Poisson);
    }
}

TEST_CASE("classify: conformal consistency when a factor is reported") {
    StructureVerdict v = classify(compressed_bivector(parse("-x*u2/(1+x^2)")));
    REQUIRE(v.tag == StructureVerdict::Tag::ConformalSymplectic);
    REQUIRE(v.conformal_factor->has_closed_form());
    Bivector b = compressed_bivector(parse("-x*u2/(1+x^2)"));
    TwoForm omega = invert_bivector(b);
    TwoForm scaled = TwoForm::zero(omega.chart());
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            scaled.set(i, j, simplify(*v.conformal_factor->expr() * omega.entry(i, j)));
    ThreeForm d = exterior_derivative(scaled);
    for (const auto& e : d.canonical()) CHECK(equal(e, Expr::integer(0), 20, 1e-9));
}

TEST_CASE("pointwise and symbolic witnesses agree on the compressed family") {
    Expr r = parse("x*y*u1 + (y^2+x)*u2");
    Bivector b = compressed_bivector(r);
    VectorField e = solve_E_symbolic_compressed(b);
    Trivector t = jacobi_defect(b);
    std::mt19937 rng(101);
    for (int s = 0; s < 10; ++s) {
        Point p = random_box_point(rng, b.chart());
        PointwiseFit fit = solve_E_pointwise(b, t, p);
        for (int i = 0; i < 4; ++i)
            CHECK(fit.e_components[static_cast<std::size_t>(i)] ==
                  doctest::Approx(eval(e.component(i), p)).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("scaled contact bivector keeps only the fiber triple") {
    Bivector scaled = parse("sqrt(1+x^2)") * contact_bivector();
    Trivector t = jacobi_defect(scaled);
    CHECK(equal(t.entry(2, 3, 4), parse("-2*(1+x^2)"), 20, 1e-10));
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            for (int k = j + 1; k < 5; ++k)
                if (!(i == 2 && j == 3 && k == 4))
                    CHECK(equal(t.entry(i, j, k), Expr::integer(0), 10, 1e-10));
}
