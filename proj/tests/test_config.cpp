#include "doctest.h"

#include "nonholo/presets.hpp"
#include "nonholo/report.hpp"

using namespace nonholo;

namespace {

const char* kMinimal = R"([system]
name = demo
chart = x, y, z
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[metric]
row1 = 1, 0, 0
row2 = 0, 1, 0
row3 = 0, 0, 1

[run]
x0 = x=0, y=0, u1=1, u2=1
dt = 0.001
t_end = 2
invariants = H, u1
)";

} // namespace

TEST_CASE("parse_config: minimal document") {
    SystemConfig cfg = parse_config(kMinimal);
    CHECK(cfg.name == "demo");
    CHECK(cfg.chart == std::vector<std::string>{"x", "y", "z"});
    CHECK(cfg.u_names == std::vector<std::string>{"u1", "u2", "u3"});
    CHECK(cfg.admissible == 2);
    CHECK(cfg.fiber == std::vector<std::string>{"z"});
    CHECK(cfg.metric_rows.has_value());
    CHECK(cfg.dt == 0.001);
    CHECK(cfg.t_end == 2.0);
    CHECK(cfg.x0.at("u1") == 1.0);
    CHECK(cfg.invariants == std::vector<std::string>{"H", "u1"});
}

TEST_CASE("parse_config: errors carry line context") {
    CHECK_THROWS_AS(parse_config("x = 1\n"), ConfigError);                   // key before section
    CHECK_THROWS_AS(parse_config("[system\n"), ConfigError);                 // malformed header
    CHECK_THROWS_AS(parse_config("[bogus]\nk = v\n"), ConfigError);          // unknown section
    CHECK_THROWS_WITH_AS(parse_config("[system]\nchart = x, y\n"),
                         doctest::Contains("frame"), ConfigError);           // missing frame
}

TEST_CASE("parse_config: consistency checks") {
    std::string both = kMinimal;
    both += "\n[hamiltonian]\nH = u1^2\n";
    CHECK_THROWS_WITH_AS(parse_config(both), doctest::Contains("not both"), ConfigError);

    std::string bad_fiber = kMinimal;
    bad_fiber.replace(bad_fiber.find("fiber = z"), 9, "fiber = w");
    CHECK_THROWS_WITH_AS(parse_config(bad_fiber), doctest::Contains("fiber variable"), ConfigError);

    std::string bad_m = kMinimal;
    bad_m.replace(bad_m.find("admissible = 2"), 14, "admissible = 3");
    CHECK_THROWS_AS(parse_config(bad_m), ConfigError);
}

TEST_CASE("build_system: expression errors become config errors") {
    std::string bad = kMinimal;
    bad.replace(bad.find("e2 = 0, 1, x"), 12, "e2 = 0, 1, (");
    CHECK_THROWS_AS(build_system(parse_config(bad)), ConfigError);

    std::string badh = R"([system]
name = t
chart = x, y, z
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[hamiltonian]
H = u1^2 + qq^2
)";
    CHECK_THROWS_WITH_AS(build_system(parse_config(badh)), doctest::Contains("qq"), ConfigError);
}

TEST_CASE("build_system: direct hamiltonian path matches the metric path") {
    SystemBundle via_metric = build_system(parse_config(kMinimal));
    std::string direct = R"([system]
name = demo2
chart = x, y, z
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[hamiltonian]
H = (u1^2 + (u2 - x*u3)^2 + u3^2)/2

[run]
x0 = x=0, y=0, u1=1, u2=1
)";
    SystemBundle via_h = build_system(parse_config(direct));
    CHECK(equal(via_metric.compressed.hamiltonian, via_h.compressed.hamiltonian, 20, 1e-10));
    CHECK(equal(via_metric.compressed.bivector.entry(2, 3), via_h.compressed.bivector.entry(2, 3), 20,
                1e-10));
}

TEST_CASE("config round trip: dump then reload gives identical analysis") {
    for (const auto& info : preset_catalog()) {
        SystemBundle first = build_system(preset_config(info.name));
        std::string dumped = config_text(first.config);
        SystemBundle second = build_system(parse_config(dumped));
        AnalysisOptions opts;
        opts.classify_points = 10;
        CHECK(report_text(analyze(first, opts)) == report_text(analyze(second, opts)));
    }
}

TEST_CASE("presets: catalog and verdicts") {
    CHECK(preset_catalog().size() == 4);
    CHECK_THROWS_AS(preset_config("no-such-system"), ConfigError);

    SystemBundle euclid = build_system(preset_config("contact-euclidean"));
    AnalysisReport rep = analyze(euclid);
    CHECK(rep.constrained_verdict.tag == StructureVerdict::Tag::NotJacobi);
    CHECK(rep.compressed_verdict.tag == StructureVerdict::Tag::ConformalSymplectic);
    REQUIRE(rep.conformal_factor.has_value());
    REQUIRE(rep.conformal_factor->has_closed_form());
    CHECK(equal(*rep.conformal_factor->expr(), parse("1/sqrt(1+x^2)"), 20, 1e-10));
    REQUIRE(rep.restriction.has_value());
    CHECK(simplify(*rep.restriction).is_zero());

    SystemBundle heis = build_system(preset_config("contact-heisenberg"));
    AnalysisReport rep2 = analyze(heis);
    CHECK(rep2.constrained_verdict.tag == StructureVerdict::Tag::NotJacobi);
    CHECK(rep2.compressed_verdict.tag == StructureVerdict::Tag::Poisson);

    SystemBundle orth = build_system(preset_config("contact-orthonormal"));
    AnalysisReport rep3 = analyze(orth);
    CHECK(rep3.constrained_verdict.tag == StructureVerdict::Tag::NotJacobi);
    CHECK(rep3.compressed_verdict.tag == StructureVerdict::Tag::ConformalSymplectic);

    SystemBundle gen = build_system(preset_config("contact-general-metric"));
    AnalysisReport rep4 = analyze(gen);
    CHECK(rep4.constrained_verdict.tag == StructureVerdict::Tag::NotJacobi);
    CHECK(rep4.compressed_verdict.tag == StructureVerdict::Tag::NotJacobi);
    REQUIRE(rep4.restriction.has_value());
    CHECK_FALSE(equal(*rep4.restriction, Expr::integer(0), 20, 1e-8));
}

TEST_CASE("analysis: the gamma counterexample turns the compressed verdict around") {
    // gamma13/gamma33 = gamma23/gamma33 = y makes the restriction exactly 1
    std::string cfg = R"([system]
name = gamma-counterexample
chart = x, y, z
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[hamiltonian]
H = u1^2 + u2^2 + u3^2 + 2*y*u1*u3 + 2*y*u2*u3
)";
    SystemBundle bundle = build_system(parse_config(cfg));
    AnalysisReport rep = analyze(bundle);
    CHECK(rep.compressed_verdict.tag == StructureVerdict::Tag::NotJacobi);
    REQUIRE(rep.restriction.has_value());
    CHECK(equal(*rep.restriction, Expr::integer(1), 20, 1e-10));
}

TEST_CASE("report_json: schema and the conformal factor key") {
    SystemBundle bundle = build_system(preset_config("contact-euclidean"));
    std::string json_text = report_json(analyze(bundle));
    CHECK(json_text.find("\"schema\": 1") != std::string::npos);
    CHECK(json_text.find("\"conformal_factor\"") != std::string::npos);
    // recover the factor text and check it equals the closed form under `equal`
    std::size_t key = json_text.find("\"conformal_factor\": \"");
    REQUIRE(key != std::string::npos);
    std::size_t start = key + std::string("\"conformal_factor\": \"").size();
    std::size_t end = json_text.find('"', start);
    Expr f = parse(json_text.substr(start, end - start));
    CHECK(equal(f, parse("1/sqrt(1+x^2)"), 20, 1e-10));
}

TEST_CASE("report_text: lists the coordinate bracket coefficients") {
    SystemBundle bundle = build_system(preset_config("contact-euclidean"));
    std::string text = report_text(analyze(bundle));
    CHECK(text.find("constrained schouten bracket:") != std::string::npos);
    CHECK(text.find("d/dy^d/du1^d/du2") != std::string::npos);
    CHECK(text.find("d/dz^d/du1^d/du2") != std::string::npos);
    CHECK(text.find("NotJacobi") != std::string::npos);
    CHECK(text.find("ConformalSymplectic") != std::string::npos);
}

TEST_CASE("run_simulation: oracle check and reconstruction wired through") {
    SystemBundle bundle = build_system(preset_config("contact-euclidean"));
    RunOptions opts;
    opts.t_end = 1.0;
    opts.reconstruct = true;
    opts.oracle_check = true;
    RunResult result = run_simulation(bundle, opts);
    CHECK(!result.fault.has_value());
    REQUIRE(result.oracle_max_dev.has_value());
    CHECK(*result.oracle_max_dev < 1e-5);
    CHECK(result.csv.rfind("t,x,y,u1,u2,z,H,u1,oracle_dev\n", 0) == 0);
    CHECK(result.trajectory.chart.contains("z"));
}

TEST_CASE("run_simulation: x0 overrides and validation") {
    SystemBundle bundle = build_system(preset_config("contact-euclidean"));
    RunOptions opts;
    opts.t_end = 0.5;
    opts.x0_overrides = {{"u1", 2.0}};
    RunResult result = run_simulation(bundle, opts);
    CHECK(result.trajectory.states.back()[0] == doctest::Approx(1.0).epsilon(1e-10)); // x = u1 t

    RunOptions bad;
    bad.t_end = -1.0;
    CHECK_THROWS_AS(run_simulation(bundle, bad), ConfigError);
    RunOptions noz;
    noz.oracle_check = true;
    SystemBundle heis = build_system(preset_config("contact-heisenberg"));
    CHECK_THROWS_AS(run_simulation(heis, noz), ConfigError);
}
