#include "nonholo/report.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace nonholo {

namespace {

using nlohmann::json;

std::string expr_text(const Expr& e) { return to_string(simplify(e)); }

json matrix_json(const Bivector& b) {
    json rows = json::array();
    for (int i = 0; i < b.chart().dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < b.chart().dim(); ++j) row.push_back(expr_text(b.entry(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json trivector_json(const Trivector& t) {
    json entries = json::array();
    for (int i = 0; i < t.chart().dim(); ++i)
        for (int j = i + 1; j < t.chart().dim(); ++j)
            for (int k = j + 1; k < t.chart().dim(); ++k) {
                Expr e = simplify(t.entry(i, j, k));
                if (e.is_zero()) continue;
                entries.push_back({{"indices", {t.chart().name(i), t.chart().name(j), t.chart().name(k)}},
                                   {"coefficient", to_string(e)}});
            }
    return entries;
}

json verdict_json(const StructureVerdict& v) {
    json out;
    switch (v.tag) {
    case StructureVerdict::Tag::Poisson:
        out["tag"] = "poisson";
        break;
    case StructureVerdict::Tag::ConformalSymplectic:
        out["tag"] = "conformal_symplectic";
        break;
    case StructureVerdict::Tag::Jacobi:
        out["tag"] = "jacobi";
        break;
    case StructureVerdict::Tag::NotJacobi:
        out["tag"] = "not_jacobi";
        break;
    }
    if (v.conformal_factor) out["conformal_factor"] = v.conformal_factor->display();
    if (v.tag == StructureVerdict::Tag::NotJacobi) {
        out["residual"] = v.residual;
        if (v.witness) {
            json w;
            for (const auto& [k, val] : *v.witness) w[k] = val;
            out["witness"] = w;
        }
    }
    if (!v.fits.empty()) {
        double worst = 0.0, best = 1e300;
        for (const auto& f : v.fits) {
            worst = std::max(worst, f.residual);
            best = std::min(best, f.residual);
        }
        out["pointwise"] = {{"points", v.fits.size()}, {"max_residual", worst}, {"min_residual", best}};
    }
    if (!v.notes.empty()) out["notes"] = v.notes;
    return out;
}

std::string verdict_line(const StructureVerdict& v) {
    std::ostringstream out;
    out << v.tag_name();
    if (v.tag == StructureVerdict::Tag::ConformalSymplectic && v.conformal_factor)
        out << " (f = " << v.conformal_factor->display() << ")";
    if (v.tag == StructureVerdict::Tag::NotJacobi) {
        out << " (residual " << v.residual;
        if (v.witness) {
            out << " at";
            for (const auto& [k, val] : *v.witness) out << " " << k << "=" << val;
        }
        out << ")";
    }
    return out.str();
}

} // namespace

AnalysisReport analyze(const SystemBundle& bundle, const AnalysisOptions& opts) {
    ClassifyOptions copts;
    copts.points = opts.classify_points;
    copts.threshold = opts.threshold;
    copts.tol = opts.tol;
    copts.seed = opts.seed;

    const Bivector& lam_p = bundle.constrained.bivector;
    const Bivector& lam_c = bundle.compressed.bivector;

    AnalysisReport report{bundle,
                          schouten_self(lam_p),
                          classify(lam_p, copts),
                          schouten_self(lam_c),
                          classify(lam_c, copts),
                          {},
                          {},
                          {},
                          {}};

    if (report.compressed_verdict.e_field) report.e_field = report.compressed_verdict.e_field;
    if (report.compressed_verdict.conformal_factor)
        report.conformal_factor = report.compressed_verdict.conformal_factor;

    // For the translation family the compressed momentum-pair coefficient r
    // carries the quadratic-form ratios; report E and the restriction even
    // when the verdict short-circuited (Poisson has E = 0, restriction 0).
    const Chart& cchart = lam_c.chart();
    if (cchart.dim() == 4) {
        try {
            VectorField e = solve_E_symbolic_compressed(lam_c);
            if (!report.e_field) report.e_field = e;
            Expr r = lam_c.entry(2, 3);
            Expr ratio13 = simplify(diff(r, cchart.name(2)));
            Expr ratio23 = simplify(diff(r, cchart.name(3)));
            report.restriction =
                restriction_condition(ratio13, ratio23, cchart.name(0), cchart.name(1));
            report.lie_derivative_coefficient = simplify(-*report.restriction);
        } catch (const StructureError&) {
            // not of the compressed translation shape; nothing to report
        }
    }
    return report;
}

std::string report_text(const AnalysisReport& report) {
    const SystemBundle& b = report.bundle;
    std::ostringstream out;
    out << "system: " << b.config.name << "\n";
    out << "chart:";
    for (const auto& v : b.config.chart) out << " " << v;
    out << "   admissible: " << b.config.admissible << "   fiber:";
    for (const auto& v : b.config.fiber) out << " " << v;
    out << "\n\n";

    out << "frame vectors:\n";
    for (int i = 0; i < b.frame.dim(); ++i)
        out << "  e" << (i + 1) << " = " << to_string(b.frame.vector(i)) << "\n";
    out << "coframe (rows):\n";
    for (int i = 0; i < b.frame.dim(); ++i) {
        out << "  eps" << (i + 1) << " =";
        for (int l = 0; l < b.frame.dim(); ++l)
            out << " " << expr_text(b.frame.coform(i)[static_cast<std::size_t>(l)]);
        out << "\n";
    }

    ExprMatrix r = structure_matrix(b.frame, b.config.u_names);
    out << "structure matrix R:\n";
    for (std::size_t i = 0; i < r.size(); ++i) {
        out << " ";
        for (std::size_t j = 0; j < r.size(); ++j) out << " " << to_string(simplify(r[i][j]));
        out << "\n";
    }

    out << "hamiltonian H = " << expr_text(b.hamiltonian) << "\n";
    out << "eliminated momenta:\n";
    for (const auto& [name, value] : b.constrained.eliminated)
        out << "  " << name << " = " << expr_text(value) << "\n";

    out << "\nconstrained chart:";
    for (const auto& v : b.constrained.phase_chart.names()) out << " " << v;
    out << "\nconstrained bivector:\n";
    for (int i = 0; i < b.constrained.phase_chart.dim(); ++i) {
        out << " ";
        for (int j = 0; j < b.constrained.phase_chart.dim(); ++j)
            out << " " << expr_text(b.constrained.bivector.entry(i, j));
        out << "\n";
    }
    out << "constrained hamiltonian = " << expr_text(b.constrained.hamiltonian) << "\n";
    out << "constrained schouten bracket: " << to_string(report.constrained_defect) << "\n";
    out << "constrained verdict: " << verdict_line(report.constrained_verdict) << "\n";

    out << "\ncompressed chart:";
    for (const auto& v : b.compressed.chart.names()) out << " " << v;
    out << "\ncompressed bivector:\n";
    for (int i = 0; i < b.compressed.chart.dim(); ++i) {
        out << " ";
        for (int j = 0; j < b.compressed.chart.dim(); ++j)
            out << " " << expr_text(b.compressed.bivector.entry(i, j));
        out << "\n";
    }
    out << "compressed hamiltonian = " << expr_text(b.compressed.hamiltonian) << "\n";
    out << "compressed schouten bracket: " << to_string(report.compressed_defect) << "\n";
    if (report.e_field) out << "E = " << to_string(*report.e_field) << "\n";
    if (report.lie_derivative_coefficient)
        out << "L_E bracket coefficient = " << to_string(*report.lie_derivative_coefficient) << "\n";
    if (report.restriction) out << "restriction expression = " << to_string(*report.restriction) << "\n";
    out << "compressed verdict: " << verdict_line(report.compressed_verdict) << "\n";
    if (report.conformal_factor)
        out << "conformal factor f = " << report.conformal_factor->display() << "\n";
    for (const auto& [fiber, rate] : b.compressed.reconstruction)
        out << "reconstruction: d" << fiber << "/dt = " << expr_text(rate) << "\n";
    return out.str();
}

std::string report_json(const AnalysisReport& report) {
    const SystemBundle& b = report.bundle;
    json j;
    j["schema"] = 1;
    j["system"] = b.config.name;
    j["chart"] = b.config.chart;
    j["quasi_momenta"] = b.config.u_names;
    j["admissible"] = b.config.admissible;
    j["fiber"] = b.config.fiber;

    json frame = json::array();
    for (int i = 0; i < b.frame.dim(); ++i) {
        json row = json::array();
        for (int l = 0; l < b.frame.dim(); ++l) row.push_back(expr_text(b.frame.vector(i).component(l)));
        frame.push_back(row);
    }
    j["frame"] = frame;

    json coframe = json::array();
    for (int i = 0; i < b.frame.dim(); ++i) {
        json row = json::array();
        for (int l = 0; l < b.frame.dim(); ++l)
            row.push_back(expr_text(b.frame.coform(i)[static_cast<std::size_t>(l)]));
        coframe.push_back(row);
    }
    j["coframe"] = coframe;

    ExprMatrix r = structure_matrix(b.frame, b.config.u_names);
    json rj = json::array();
    for (std::size_t i = 0; i < r.size(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < r.size(); ++k) row.push_back(to_string(simplify(r[i][k])));
        rj.push_back(row);
    }
    j["structure_matrix"] = rj;

    j["hamiltonian"] = expr_text(b.hamiltonian);
    json elim;
    for (const auto& [name, value] : b.constrained.eliminated) elim[name] = expr_text(value);
    j["eliminated"] = elim;

    j["constrained"] = {{"chart", b.constrained.phase_chart.names()},
                        {"bivector", matrix_json(b.constrained.bivector)},
                        {"hamiltonian", expr_text(b.constrained.hamiltonian)},
                        {"schouten", trivector_json(report.constrained_defect)},
                        {"verdict", verdict_json(report.constrained_verdict)}};

    json comp = {{"chart", b.compressed.chart.names()},
                 {"bivector", matrix_json(b.compressed.bivector)},
                 {"hamiltonian", expr_text(b.compressed.hamiltonian)},
                 {"schouten", trivector_json(report.compressed_defect)},
                 {"verdict", verdict_json(report.compressed_verdict)}};
    if (report.e_field) {
        json e = json::array();
        for (int i = 0; i < b.compressed.chart.dim(); ++i)
            e.push_back(expr_text(report.e_field->component(i)));
        comp["E"] = e;
    } else {
        comp["E"] = nullptr;
    }
    comp["lie_derivative"] =
        report.lie_derivative_coefficient ? json(to_string(*report.lie_derivative_coefficient)) : json();
    comp["restriction"] = report.restriction ? json(to_string(*report.restriction)) : json();
    comp["conformal_factor"] =
        report.conformal_factor ? json(report.conformal_factor->display()) : json();
    json recon;
    for (const auto& [fiber, rate] : b.compressed.reconstruction) recon[fiber] = expr_text(rate);
    comp["reconstruction"] = recon;
    j["compressed"] = comp;
    return j.dump(2) + "\n";
}

RunResult run_simulation(const SystemBundle& bundle, const RunOptions& opts) {
    const CompressedSystem& sys = bundle.compressed;
    double t_end = opts.t_end.value_or(bundle.config.t_end);
    double dt = opts.dt.value_or(bundle.config.dt);
    if (t_end <= 0 || dt <= 0) throw ConfigError("simulation needs positive dt and t_end");

    Point x0;
    for (const auto& v : sys.chart.names()) {
        auto over = opts.x0_overrides.find(v);
        if (over != opts.x0_overrides.end()) {
            x0[v] = over->second;
            continue;
        }
        auto it = bundle.config.x0.find(v);
        if (it == bundle.config.x0.end())
            throw ConfigError("initial state does not bind '" + v + "'");
        x0[v] = it->second;
    }

    std::vector<std::pair<std::string, Expr>> invariant_list;
    {
        SystemBundle tmp = bundle; // resolve against the bundle as configured
        invariant_list = resolve_invariants(tmp);
    }

    RunResult result{Trajectory{sys.chart, {}, {}, {}, bundle.config.name, "rk4", dt},
                     InvariantReport{},
                     "",
                     std::nullopt,
                     std::nullopt,
                     std::nullopt};

    Integration run = [&] {
        if (!opts.rescaled) return integrate(sys.bivector, sys.hamiltonian, x0, t_end, dt);
        AnalysisOptions aopts;
        AnalysisReport report = analyze(bundle, aopts);
        if (!report.conformal_factor || !report.conformal_factor->has_closed_form())
            throw ConfigError("rescaled runs need a closed-form conformal factor; analysis found none");
        return reparametrized_flow(sys.bivector, sys.hamiltonian, *report.conformal_factor->expr(), x0,
                                   t_end, dt);
    }();
    run.trajectory.system = bundle.config.name;

    if (opts.rescaled && !run.fault) {
        Integration direct = integrate(sys.bivector, sys.hamiltonian, x0, t_end, dt);
        if (!direct.fault) {
            double worst = 0.0;
            double t_cover = std::min(run.trajectory.times.back(), direct.trajectory.times.back());
            for (std::size_t i = 0; i < direct.trajectory.size(); ++i) {
                double t = direct.trajectory.times[i];
                if (t > t_cover) break;
                std::vector<double> interp = sample_at_time(run.trajectory, t);
                for (std::size_t c = 0; c < interp.size(); ++c)
                    worst = std::max(worst, std::abs(interp[c] - direct.trajectory.states[i][c]));
            }
            result.rescaled_max_dev = worst;
        }
    }

    Trajectory traj = run.trajectory;

    if (opts.reconstruct && !sys.reconstruction.empty()) {
        Point fiber0;
        for (const auto& [fiber, rate] : sys.reconstruction) {
            auto over = opts.x0_overrides.find(fiber);
            auto it = bundle.config.x0.find(fiber);
            fiber0[fiber] = over != opts.x0_overrides.end() ? over->second
                            : it != bundle.config.x0.end() ? it->second
                                                           : 0.0;
        }
        traj = reconstruct_fiber(traj, sys.reconstruction, fiber0);
    }

    std::vector<std::pair<std::string, std::vector<double>>> extra;
    if (opts.oracle_check) {
        if (bundle.config.name != "contact-euclidean")
            throw ConfigError("--oracle-check applies to the contact-euclidean system only");
        double ox = x0.at("x"), oa = x0.at("u1"), oA = x0.at("u2") / std::sqrt(1.0 + x0.at("x") * x0.at("x"));
        double oy = x0.at("y");
        double oz = 0.0;
        if (auto it = opts.x0_overrides.find("z"); it != opts.x0_overrides.end()) oz = it->second;
        else if (auto it2 = bundle.config.x0.find("z"); it2 != bundle.config.x0.end()) oz = it2->second;
        std::vector<double> dev;
        double worst = 0.0;
        bool has_z = traj.chart.contains("z");
        for (std::size_t i = 0; i < traj.size(); ++i) {
            ContactState ref = contact_oracle(ox, oy, oz, oa, oA, traj.times[i]);
            const auto& s = traj.states[i];
            double d = std::abs(s[0] - ref.x);
            d = std::max(d, std::abs(s[1] - ref.y));
            d = std::max(d, std::abs(s[2] - ref.u1));
            d = std::max(d, std::abs(s[3] - ref.u2));
            if (has_z) d = std::max(d, std::abs(s[static_cast<std::size_t>(traj.chart.index_of("z"))] - ref.z));
            dev.push_back(d);
            worst = std::max(worst, d);
        }
        extra.emplace_back("oracle_dev", std::move(dev));
        result.oracle_max_dev = worst;
    }

    result.invariants = invariant_report(traj, invariant_list);
    result.csv = trajectory_csv(traj, invariant_list, extra);
    result.trajectory = std::move(traj);
    result.fault = run.fault;
    return result;
}

std::string summary_text(const RunResult& result) {
    std::ostringstream out;
    out << "samples: " << result.trajectory.size() << "   t: [" << result.trajectory.times.front()
        << ", " << result.trajectory.times.back() << "]\n";
    out << "invariant drifts:\n";
    char buf[160];
    for (const auto& row : result.invariants.rows) {
        std::snprintf(buf, sizeof buf, "  %-10s initial % .12e   max|drift| %.3e   rel %.3e\n",
                      row.name.c_str(), row.initial, row.max_abs_drift, row.max_rel_drift);
        out << buf;
    }
    if (result.oracle_max_dev) {
        std::snprintf(buf, sizeof buf, "oracle deviation (max over run): %.3e\n", *result.oracle_max_dev);
        out << buf;
    }
    if (result.rescaled_max_dev) {
        std::snprintf(buf, sizeof buf, "rescaled-vs-direct deviation (t-matched): %.3e\n",
                      *result.rescaled_max_dev);
        out << buf;
    }
    if (result.fault) {
        std::snprintf(buf, sizeof buf, "run stopped early at t = %.6g: %s\n", result.fault->t,
                      result.fault->what.c_str());
        out << buf;
    }
    return out.str();
}

std::string summary_json(const RunResult& result) {
    json j;
    j["schema"] = 1;
    j["samples"] = result.trajectory.size();
    j["t_final"] = result.trajectory.times.back();
    json rows = json::array();
    for (const auto& row : result.invariants.rows)
        rows.push_back({{"name", row.name},
                        {"initial", row.initial},
                        {"max_abs_drift", row.max_abs_drift},
                        {"max_rel_drift", row.max_rel_drift}});
    j["invariants"] = rows;
    if (result.oracle_max_dev) j["oracle_max_dev"] = *result.oracle_max_dev;
    if (result.rescaled_max_dev) j["rescaled_max_dev"] = *result.rescaled_max_dev;
    if (result.fault) j["fault"] = {{"t", result.fault->t}, {"what", result.fault->what}};
    return j.dump(2) + "\n";
}

} // namespace nonholo
