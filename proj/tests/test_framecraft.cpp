#include "doctest.h"

#include <random>

#include "nonholo/framecraft.hpp"

using namespace nonholo;

namespace {

const std::vector<std::string> U{"u1", "u2", "u3"};

Chart base_chart() { return Chart({"x", "y", "z"}); }

MovingFrame heisenberg_frame() {
    Chart q = base_chart();
    return build_frame(q,
                       {VectorField::basis(q, "x"),
                        VectorField(q, {parse("0"), parse("1"), parse("x")}),
                        VectorField::basis(q, "z")},
                       2);
}

MovingFrame orthonormal_frame() {
    Chart q = base_chart();
    return build_frame(q,
                       {VectorField::basis(q, "x"),
                        VectorField(q, {parse("0"), parse("1/sqrt(1+x^2)"), parse("x/sqrt(1+x^2)")}),
                        VectorField(q, {parse("0"), parse("-x/sqrt(1+x^2)"), parse("1/sqrt(1+x^2)")})},
                       2);
}

MetricSpec euclidean_metric() {
    Chart q = base_chart();
    return MetricSpec(q, {{parse("1"), parse("0"), parse("0")},
                          {parse("0"), parse("1"), parse("0")},
                          {parse("0"), parse("0"), parse("1")}});
}

MetricSpec heisenberg_metric() {
    Chart q = base_chart();
    return MetricSpec(q, {{parse("1"), parse("0"), parse("0")},
                          {parse("0"), parse("1+x^2"), parse("-x")},
                          {parse("0"), parse("-x"), parse("1")}});
}

bool expr_is_zero(const Expr& e) {
    return simplify(e).is_zero() || equal(e, Expr::integer(0), 20, 1e-10);
}

} // namespace

TEST_CASE("build_frame: Heisenberg frame has the contact coframe") {
    MovingFrame f = heisenberg_frame();
    // eps1 = dx, eps2 = dy, eps3 = dz - x dy
    CHECK(equal(f.coform(0)[0], parse("1"), 20, 1e-10));
    CHECK(expr_is_zero(f.coform(0)[1]));
    CHECK(expr_is_zero(f.coform(0)[2]));
    CHECK(expr_is_zero(f.coform(1)[0]));
    CHECK(equal(f.coform(1)[1], parse("1"), 20, 1e-10));
    CHECK(expr_is_zero(f.coform(1)[2]));
    CHECK(expr_is_zero(f.coform(2)[0]));
    CHECK(equal(f.coform(2)[1], parse("-x"), 20, 1e-10));
    CHECK(equal(f.coform(2)[2], parse("1"), 20, 1e-10));
}

TEST_CASE("build_frame: the orthonormal frame is dual to itself") {
    MovingFrame f = orthonormal_frame();
    for (int i = 0; i < 3; ++i)
        for (int l = 0; l < 3; ++l)
            CHECK(equal(f.coform(i)[static_cast<std::size_t>(l)], f.vector(i).component(l), 20, 1e-10));
}

TEST_CASE("build_frame: identity frame gives the identity coframe") {
    Chart q = base_chart();
    MovingFrame f = build_frame(
        q, {VectorField::basis(q, "x"), VectorField::basis(q, "y"), VectorField::basis(q, "z")}, 2);
    for (int i = 0; i < 3; ++i)
        for (int l = 0; l < 3; ++l)
            CHECK(equal(f.coform(i)[static_cast<std::size_t>(l)], Expr::integer(i == l ? 1 : 0), 10, 1e-10));
}

TEST_CASE("build_frame: duality holds by sampling") {
    for (const MovingFrame& f : {heisenberg_frame(), orthonormal_frame()})
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(equal(f.pair(i, f.vector(j)), Expr::integer(i == j ? 1 : 0), 20, 1e-10));
}

TEST_CASE("build_frame: singular frames are rejected") {
    Chart q = base_chart();
    CHECK_THROWS_AS(build_frame(q,
                                {VectorField::basis(q, "x"), VectorField::basis(q, "x"),
                                 VectorField::basis(q, "z")},
                                2),
                    StructureError);
    CHECK_THROWS_AS(build_frame(q, {VectorField::basis(q, "x")}, 1), StructureError);
}

TEST_CASE("structure_matrix: Heisenberg frame") {
    ExprMatrix r = structure_matrix(heisenberg_frame(), U);
    CHECK(equal(r[0][1], parse("-u3"), 20, 1e-10));
    CHECK(equal(r[1][0], parse("u3"), 20, 1e-10));
    CHECK(expr_is_zero(r[0][2]));
    CHECK(expr_is_zero(r[1][2]));
    for (std::size_t i = 0; i < 3; ++i) CHECK(expr_is_zero(r[i][i]));
}

TEST_CASE("structure_matrix: orthonormal frame") {
    ExprMatrix r = structure_matrix(orthonormal_frame(), U);
    CHECK(equal(r[0][1], parse("-u3/(1+x^2)"), 20, 1e-10));
    CHECK(equal(r[2][0], parse("-u2/(1+x^2)"), 20, 1e-10));
    CHECK(expr_is_zero(r[1][2]));
}

TEST_CASE("structure_matrix: coordinate frames commute") {
    Chart q = base_chart();
    MovingFrame f = build_frame(
        q, {VectorField::basis(q, "x"), VectorField::basis(q, "y"), VectorField::basis(q, "z")}, 2);
    ExprMatrix r = structure_matrix(f, U);
    for (auto& row : r)
        for (auto& e : row) CHECK(expr_is_zero(e));
}

TEST_CASE("structure_matrix entries are degree-one homogeneous in the momenta") {
    for (const MovingFrame& f : {heisenberg_frame(), orthonormal_frame()}) {
        ExprMatrix r = structure_matrix(f, U);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                // Euler identity: sum_k u_k d(entry)/du_k == entry
                Expr euler;
                for (const auto& u : U) euler = euler + Expr::variable(u) * diff(r[i][j], u);
                CHECK(equal(euler, r[i][j], 20, 1e-10));
            }
    }
}

TEST_CASE("hamiltonian_from_metric: Euclidean metric with the Heisenberg frame") {
    Expr h = hamiltonian_from_metric(euclidean_metric(), heisenberg_frame(), U);
    CHECK(equal(h, parse("(u1^2 + (u2 - x*u3)^2 + u3^2)/2"), 20, 1e-10));
}

TEST_CASE("hamiltonian_from_metric: invariant metric diagonalizes") {
    Expr h = hamiltonian_from_metric(heisenberg_metric(), heisenberg_frame(), U);
    CHECK(equal(h, parse("(u1^2 + u2^2 + u3^2)/2"), 20, 1e-10));
}

TEST_CASE("hamiltonian_from_metric: Euclidean metric with the orthonormal frame") {
    Expr h = hamiltonian_from_metric(euclidean_metric(), orthonormal_frame(), U);
    CHECK(equal(h, parse("(u1^2 + u2^2 + u3^2)/2"), 20, 1e-10));
}

TEST_CASE("constrain: Euclidean contact system") {
    MovingFrame f = heisenberg_frame();
    Expr h = hamiltonian_from_metric(euclidean_metric(), f, U);
    ConstrainedSystem cs = constrain(f, h, U, {"z"});

    REQUIRE(cs.eliminated.size() == 1);
    CHECK(cs.eliminated[0].first == "u3");
    CHECK(equal(cs.eliminated[0].second, parse("x*u2/(1+x^2)"), 20, 1e-10));

    CHECK(cs.phase_chart.names() == std::vector<std::string>{"x", "y", "z", "u1", "u2"});
    CHECK(equal(cs.bivector.entry(0, 3), parse("1"), 20, 1e-10));
    CHECK(equal(cs.bivector.entry(1, 4), parse("1"), 20, 1e-10));
    CHECK(equal(cs.bivector.entry(2, 4), parse("x"), 20, 1e-10));
    CHECK(expr_is_zero(cs.bivector.entry(2, 3)));
    CHECK(expr_is_zero(cs.bivector.entry(0, 1)));
    CHECK(expr_is_zero(cs.bivector.entry(0, 4)));
    CHECK(equal(cs.bivector.entry(3, 4), parse("-x*u2/(1+x^2)"), 20, 1e-10));

    CHECK(equal(cs.hamiltonian, parse("(u1^2 + u2^2/(1+x^2))/2"), 20, 1e-10));
}

TEST_CASE("constrain: orthonormal frame eliminates to zero") {
    MovingFrame f = orthonormal_frame();
    Expr h = hamiltonian_from_metric(euclidean_metric(), f, U);
    ConstrainedSystem cs = constrain(f, h, U, {"z"});
    REQUIRE(cs.eliminated.size() == 1);
    CHECK(expr_is_zero(cs.eliminated[0].second));
    CHECK(expr_is_zero(cs.bivector.entry(3, 4)));
    CHECK(equal(cs.bivector.entry(1, 4), parse("1/sqrt(1+x^2)"), 20, 1e-10));
    CHECK(equal(cs.bivector.entry(2, 4), parse("x/sqrt(1+x^2)"), 20, 1e-10));
}

TEST_CASE("constrain: Heisenberg metric eliminates to zero") {
    MovingFrame f = heisenberg_frame();
    Expr h = hamiltonian_from_metric(heisenberg_metric(), f, U);
    ConstrainedSystem cs = constrain(f, h, U, {"z"});
    CHECK(expr_is_zero(cs.eliminated[0].second));
    CHECK(expr_is_zero(cs.bivector.entry(3, 4)));
    CHECK(equal(cs.hamiltonian, parse("(u1^2 + u2^2)/2"), 20, 1e-10));
}

TEST_CASE("constrain: substituting the eliminated momenta kills the defining gradient") {
    for (auto metric : {euclidean_metric(), heisenberg_metric()}) {
        MovingFrame f = heisenberg_frame();
        Expr h = hamiltonian_from_metric(metric, f, U);
        ConstrainedSystem cs = constrain(f, h, U, {"z"});
        Expr grad = diff(h, "u3");
        for (const auto& [name, value] : cs.eliminated) grad = substitute(grad, name, value);
        CHECK(equal(grad, Expr::integer(0), 20, 1e-10));
    }
}

TEST_CASE("constrain: non-quadratic hamiltonians are rejected") {
    MovingFrame f = heisenberg_frame();
    CHECK_THROWS_AS(constrain(f, parse("u3^2*u1 + u1^2"), U, {"z"}), StructureError);
}

TEST_CASE("constrain: the fiber row enforces the nonholonomic constraint") {
    MovingFrame f = heisenberg_frame();
    Expr h = hamiltonian_from_metric(euclidean_metric(), f, U);
    ConstrainedSystem cs = constrain(f, h, U, {"z"});
    VectorField flow = hamiltonian_vector_field(cs.bivector, cs.hamiltonian);
    // zdot - x*ydot == 0 as a component identity
    CHECK(equal(flow.component(2), parse("x") * flow.component(1), 20, 1e-10));
}

TEST_CASE("compress: Euclidean contact system reaches the block form") {
    MovingFrame f = heisenberg_frame();
    Expr h = hamiltonian_from_metric(euclidean_metric(), f, U);
    CompressedSystem comp = compress(constrain(f, h, U, {"z"}));

    CHECK(comp.chart.names() == std::vector<std::string>{"x", "y", "u1", "u2"});
    CHECK(equal(comp.bivector.entry(0, 2), parse("1"), 20, 1e-10));
    CHECK(equal(comp.bivector.entry(1, 3), parse("1"), 20, 1e-10));
    CHECK(expr_is_zero(comp.bivector.entry(0, 1)));
    CHECK(expr_is_zero(comp.bivector.entry(0, 3)));
    CHECK(expr_is_zero(comp.bivector.entry(1, 2)));
    CHECK(equal(comp.bivector.entry(2, 3), parse("-x*u2/(1+x^2)"), 20, 1e-10));
    CHECK(equal(comp.hamiltonian, parse("(u1^2 + u2^2/(1+x^2))/2"), 20, 1e-10));

    REQUIRE(comp.reconstruction.size() == 1);
    CHECK(comp.reconstruction[0].first == "z");
    CHECK(equal(comp.reconstruction[0].second, parse("x*u2/(1+x^2)"), 20, 1e-10));
}

TEST_CASE("compress then flow reproduces the reduced equations of motion") {
    MovingFrame f = heisenberg_frame();
    Expr h = hamiltonian_from_metric(euclidean_metric(), f, U);
    CompressedSystem comp = compress(constrain(f, h, U, {"z"}));
    VectorField flow = hamiltonian_vector_field(comp.bivector, comp.hamiltonian);
    CHECK(equal(flow.component(0), parse("u1"), 20, 1e-10));
    CHECK(equal(flow.component(1), parse("u2/(1+x^2)"), 20, 1e-10));
    CHECK(simplify(flow.component(2)).is_zero());
    CHECK(equal(flow.component(3), parse("x*u1*u2/(1+x^2)"), 20, 1e-10));
}

TEST_CASE("compress: general translation-invariant hamiltonian keeps the coupling") {
    // H = gamma_ij u_i u_j with ratios (x*y, y^2): the compressed bivector
    // picks up (gamma13 u1 + gamma23 u2)/gamma33 on du1^du2.
    MovingFrame f = heisenberg_frame();
    Expr h = parse("u1^2 + u2^2 + u3^2 + 2*x*y*u1*u3 + 2*y^2*u2*u3");
    ConstrainedSystem cs = constrain(f, h, U, {"z"});
    CHECK(equal(cs.eliminated[0].second, parse("-(x*y*u1 + y^2*u2)"), 20, 1e-10));
    CompressedSystem comp = compress(cs);
    CHECK(equal(comp.bivector.entry(2, 3), parse("x*y*u1 + y^2*u2"), 20, 1e-10));
    CHECK(equal(comp.bivector.entry(0, 2), parse("1"), 20, 1e-10));
    CHECK(equal(comp.bivector.entry(1, 3), parse("1"), 20, 1e-10));
}

TEST_CASE("compress: fiber-dependent data is refused with a useful message") {
    MovingFrame f = heisenberg_frame();
    Expr h = parse("(u1^2 + u2^2 + u3^2)/2 + z^2");
    ConstrainedSystem cs = constrain(f, h, U, {"z"});
    CHECK_THROWS_WITH_AS(static_cast<void>(compress(cs)), doctest::Contains("fiber variable 'z'"),
                         StructureError);
}

TEST_CASE("gamma_from_metric: Euclidean ratios") {
    ExprMatrix gamma = gamma_from_metric(euclidean_metric(), heisenberg_frame());
    CHECK(expr_is_zero(gamma[0][2]));
    CHECK(equal(gamma[1][2] / gamma[2][2], parse("-x/(1+x^2)"), 20, 1e-10));
}

TEST_CASE("gamma_from_metric: invariant metric has no momentum coupling") {
    ExprMatrix gamma = gamma_from_metric(heisenberg_metric(), heisenberg_frame());
    CHECK(expr_is_zero(gamma[0][2]));
    CHECK(expr_is_zero(gamma[1][2]));
    CHECK(equal(gamma[2][2], parse("1/2"), 20, 1e-10));
}

TEST_CASE("gamma_from_metric: H = gamma_ij u_i u_j + V against the frame Hamiltonian") {
    Chart q = base_chart();
    MetricSpec g(q,
                 {{parse("2"), parse("x/4"), parse("1/2")},
                  {parse("x/4"), parse("2+y^2"), parse("-x/3")},
                  {parse("1/2"), parse("-x/3"), parse("3")}},
                 parse("x^2 + y^2"));
    MovingFrame f = heisenberg_frame();
    ExprMatrix gamma = gamma_from_metric(g, f);
    Expr rebuilt = parse("x^2 + y^2");
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            rebuilt = rebuilt + gamma[i][j] * Expr::variable(U[i]) * Expr::variable(U[j]);
    Expr h = hamiltonian_from_metric(g, f, U);
    CHECK(equal(rebuilt, h, 20, 1e-9));
}

TEST_CASE("gamma_from_metric: ratios match the closed-form metric expressions") {
    // Reference ratio formulas in terms of the metric entries, derived from
    // gamma = (1/2) C g^{-1} C^T with the contact coframe rows.
    auto ratio13 = [](const ExprMatrix& g) {
        Expr num = g[0][1] * g[1][2] - g[0][2] * g[1][1] +
                   Expr::variable("x") * (g[0][1] * g[2][2] - g[0][2] * g[1][2]);
        Expr den = g[0][0] * g[1][1] - pow(g[0][1], 2) +
                   Expr::integer(2) * Expr::variable("x") * (g[0][0] * g[1][2] - g[0][1] * g[0][2]) +
                   pow(Expr::variable("x"), 2) * (g[0][0] * g[2][2] - pow(g[0][2], 2));
        return num / den;
    };
    auto ratio23 = [](const ExprMatrix& g) {
        Expr num = g[0][1] * g[0][2] - g[0][0] * g[1][2] -
                   Expr::variable("x") * (g[0][0] * g[2][2] - pow(g[0][2], 2));
        Expr den = g[0][0] * g[1][1] - pow(g[0][1], 2) +
                   Expr::integer(2) * Expr::variable("x") * (g[0][0] * g[1][2] - g[0][1] * g[0][2]) +
                   pow(Expr::variable("x"), 2) * (g[0][0] * g[2][2] - pow(g[0][2], 2));
        return num / den;
    };

    Chart q = base_chart();
    std::vector<MetricSpec> metrics;
    metrics.push_back(euclidean_metric());
    metrics.push_back(heisenberg_metric());
    metrics.push_back(MetricSpec(q, {{parse("2"), parse("x/4"), parse("1/2")},
                                     {parse("x/4"), parse("2+y^2"), parse("-x/3")},
                                     {parse("1/2"), parse("-x/3"), parse("3")}}));
    for (const auto& g : metrics) {
        ExprMatrix gamma = gamma_from_metric(g, heisenberg_frame());
        CHECK(equal(gamma[0][2] / gamma[2][2], ratio13(g.g()), 20, 1e-9));
        CHECK(equal(gamma[1][2] / gamma[2][2], ratio23(g.g()), 20, 1e-9));
    }

    // sanity on the Euclidean case against the literal closed form
    CHECK(equal(ratio23(euclidean_metric().g()), parse("-x/(1+x^2)"), 20, 1e-10));
    CHECK(expr_is_zero(simplify(ratio13(euclidean_metric().g()))));
}

TEST_CASE("MetricSpec: symmetry and positive definiteness are enforced") {
    Chart q = base_chart();
    CHECK_THROWS_AS(MetricSpec(q, {{parse("1"), parse("x"), parse("0")},
                                   {parse("0"), parse("1"), parse("0")},
                                   {parse("0"), parse("0"), parse("1")}}),
                    StructureError);
    CHECK_THROWS_AS(MetricSpec(q, {{parse("1"), parse("0"), parse("0")},
                                   {parse("0"), parse("-1"), parse("0")},
                                   {parse("0"), parse("0"), parse("1")}}),
                    StructureError);
}
