#include "nonholo/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace nonholo {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_number(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse number from '" + text + "'");
    }
}

} // namespace

SystemConfig parse_config(const std::string& text) {
    SystemConfig cfg;
    std::map<std::string, std::vector<std::string>> frame_rows;
    std::map<std::string, std::vector<std::string>> metric_rows;

    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            std::transform(section.begin(), section.end(), section.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");

        if (section == "system") {
            if (key == "name")
                cfg.name = value;
            else if (key == "chart")
                cfg.chart = split(value, ',');
            else if (key == "admissible")
                cfg.admissible = static_cast<int>(parse_number(value, key));
            else if (key == "fiber")
                cfg.fiber = split(value, ',');
            else if (key == "momenta")
                cfg.u_names = split(value, ',');
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown [system] key '" + key + "'");
        } else if (section == "frame") {
            frame_rows[key] = split(value, ',');
        } else if (section == "metric") {
            if (key == "V")
                cfg.potential = value;
            else
                metric_rows[key] = split(value, ',');
        } else if (section == "hamiltonian") {
            if (key == "H")
                cfg.hamiltonian = value;
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown [hamiltonian] key '" +
                                  key + "'");
        } else if (section == "run") {
            if (key == "x0") {
                for (const auto& item : split(value, ',')) {
                    if (item.empty()) continue;
                    std::size_t e2 = item.find('=');
                    if (e2 == std::string::npos)
                        throw ConfigError("line " + std::to_string(lineno) + ": x0 entries are name=value");
                    cfg.x0[trim(item.substr(0, e2))] = parse_number(trim(item.substr(e2 + 1)), "x0");
                }
            } else if (key == "dt") {
                cfg.dt = parse_number(value, key);
            } else if (key == "t_end") {
                cfg.t_end = parse_number(value, key);
            } else if (key == "invariants") {
                cfg.invariants = split(value, ',');
            } else {
                throw ConfigError("line " + std::to_string(lineno) + ": unknown [run] key '" + key + "'");
            }
        } else if (section.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": key before any [section]");
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
        }
    }

    if (cfg.chart.empty()) throw ConfigError("config misses [system] chart");
    std::size_t n = cfg.chart.size();

    if (cfg.u_names.empty())
        for (std::size_t i = 1; i <= n; ++i) cfg.u_names.push_back("u" + std::to_string(i));
    if (cfg.u_names.size() != n) throw ConfigError("momenta must list one label per chart variable");

    if (frame_rows.size() != n)
        throw ConfigError("[frame] must define e1..e" + std::to_string(n));
    for (std::size_t i = 1; i <= n; ++i) {
        auto it = frame_rows.find("e" + std::to_string(i));
        if (it == frame_rows.end()) throw ConfigError("[frame] misses e" + std::to_string(i));
        if (it->second.size() != n)
            throw ConfigError("frame vector e" + std::to_string(i) + " needs " + std::to_string(n) +
                              " components");
        cfg.frame_components.push_back(it->second);
    }

    if (!metric_rows.empty()) {
        if (metric_rows.size() != n) throw ConfigError("[metric] must define row1..row" + std::to_string(n));
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 1; i <= n; ++i) {
            auto it = metric_rows.find("row" + std::to_string(i));
            if (it == metric_rows.end()) throw ConfigError("[metric] misses row" + std::to_string(i));
            if (it->second.size() != n)
                throw ConfigError("metric row" + std::to_string(i) + " needs " + std::to_string(n) +
                                  " entries");
            rows.push_back(it->second);
        }
        cfg.metric_rows = rows;
    }

    if (cfg.metric_rows && cfg.hamiltonian)
        throw ConfigError("give either a [metric] or a [hamiltonian], not both");
    if (!cfg.metric_rows && !cfg.hamiltonian)
        throw ConfigError("config needs a [metric] or a [hamiltonian]");
    if (cfg.admissible < 1 || cfg.admissible >= static_cast<int>(n))
        throw ConfigError("admissible count must satisfy 1 <= m < chart dimension");
    if (cfg.fiber.empty()) throw ConfigError("config misses [system] fiber");
    for (const auto& f : cfg.fiber)
        if (std::find(cfg.chart.begin(), cfg.chart.end(), f) == cfg.chart.end())
            throw ConfigError("fiber variable '" + f + "' is not a chart variable");
    if (cfg.invariants.empty()) cfg.invariants = {"H", cfg.u_names[0]};
    return cfg;
}

std::string config_text(const SystemConfig& cfg) {
    std::ostringstream out;
    auto join = [](const std::vector<std::string>& items) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) s += ", ";
            s += items[i];
        }
        return s;
    };
    out << "[system]\n";
    out << "name = " << cfg.name << "\n";
    out << "chart = " << join(cfg.chart) << "\n";
    out << "momenta = " << join(cfg.u_names) << "\n";
    out << "admissible = " << cfg.admissible << "\n";
    out << "fiber = " << join(cfg.fiber) << "\n";
    out << "\n[frame]\n";
    for (std::size_t i = 0; i < cfg.frame_components.size(); ++i)
        out << "e" << (i + 1) << " = " << join(cfg.frame_components[i]) << "\n";
    if (cfg.metric_rows) {
        out << "\n[metric]\n";
        for (std::size_t i = 0; i < cfg.metric_rows->size(); ++i)
            out << "row" << (i + 1) << " = " << join((*cfg.metric_rows)[i]) << "\n";
        if (cfg.potential) out << "V = " << *cfg.potential << "\n";
    } else if (cfg.hamiltonian) {
        out << "\n[hamiltonian]\n";
        out << "H = " << *cfg.hamiltonian << "\n";
    }
    out << "\n[run]\n";
    out << "x0 = ";
    bool first = true;
    for (const auto& [k, v] : cfg.x0) {
        if (!first) out << ", ";
        char buf[48];
        std::snprintf(buf, sizeof buf, "%s=%.17g", k.c_str(), v);
        out << buf;
        first = false;
    }
    out << "\n";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", cfg.dt);
    out << "dt = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", cfg.t_end);
    out << "t_end = " << buf << "\n";
    out << "invariants = " << join(cfg.invariants) << "\n";
    return out.str();
}

SystemBundle build_system(const SystemConfig& cfg) {
    Chart chart(cfg.chart);

    auto parse_entry = [](const std::string& text, const std::string& what) {
        try {
            return parse(text);
        } catch (const ParseError& e) {
            throw ConfigError(what + ": " + e.what());
        }
    };

    std::vector<VectorField> vectors;
    for (std::size_t i = 0; i < cfg.frame_components.size(); ++i) {
        std::vector<Expr> comps;
        for (const auto& c : cfg.frame_components[i])
            comps.push_back(parse_entry(c, "frame e" + std::to_string(i + 1)));
        vectors.emplace_back(chart, comps);
    }
    MovingFrame frame = build_frame(chart, vectors, cfg.admissible);

    std::optional<MetricSpec> metric;
    Expr hamiltonian;
    if (cfg.metric_rows) {
        ExprMatrix g;
        for (std::size_t i = 0; i < cfg.metric_rows->size(); ++i) {
            std::vector<Expr> row;
            for (const auto& c : (*cfg.metric_rows)[i])
                row.push_back(parse_entry(c, "metric row" + std::to_string(i + 1)));
            g.push_back(row);
        }
        std::optional<Expr> v;
        if (cfg.potential) v = parse_entry(*cfg.potential, "potential V");
        metric.emplace(chart, g, v);
        hamiltonian = hamiltonian_from_metric(*metric, frame, cfg.u_names);
    } else {
        hamiltonian = parse_entry(*cfg.hamiltonian, "hamiltonian H");
        for (const auto& var : variables(hamiltonian)) {
            bool known = chart.contains(var) ||
                         std::find(cfg.u_names.begin(), cfg.u_names.end(), var) != cfg.u_names.end();
            if (!known) throw ConfigError("hamiltonian references unknown variable '" + var + "'");
        }
    }

    ConstrainedSystem constrained = constrain(frame, hamiltonian, cfg.u_names, cfg.fiber);
    CompressedSystem compressed = compress(constrained);
    return SystemBundle{cfg, std::move(frame), std::move(metric), std::move(hamiltonian),
                        std::move(constrained), std::move(compressed)};
}

std::vector<std::pair<std::string, Expr>> resolve_invariants(const SystemBundle& bundle) {
    std::vector<std::pair<std::string, Expr>> out;
    for (const auto& item : bundle.config.invariants) {
        std::size_t eq = item.find('=');
        if (eq != std::string::npos) {
            std::string name = item.substr(0, eq);
            std::string body = item.substr(eq + 1);
            try {
                out.emplace_back(name, parse(body));
            } catch (const ParseError& e) {
                throw ConfigError("invariant '" + name + "': " + e.what());
            }
            continue;
        }
        if (item == "H") {
            out.emplace_back("H", bundle.compressed.hamiltonian);
        } else if (bundle.compressed.chart.contains(item)) {
            out.emplace_back(item, Expr::variable(item));
        } else {
            throw ConfigError("invariant '" + item +
                              "' is neither H, a compressed chart variable, nor name=expr");
        }
    }
    return out;
}

} // namespace nonholo
