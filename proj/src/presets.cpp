#include "nonholo/presets.hpp"


#include <map>
namespace nonholo {

namespace {

const char* kEuclidean = R"(# contact constraint zdot = x ydot on R^3, flat kinetic energy
[system]
name = contact-euclidean
chart = x, y, z
momenta = u1, u2, u3
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
t_end = 10
invariants = H, u1
)";

const char* kOrthonormal = R"(# same constraint, frame orthonormalized for the flat metric
[system]
name = contact-orthonormal
chart = x, y, z
momenta = u1, u2, u3
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1/sqrt(1+x^2), x/sqrt(1+x^2)
e3 = 0, -x/sqrt(1+x^2), 1/sqrt(1+x^2)

[metric]
row1 = 1, 0, 0
row2 = 0, 1, 0
row3 = 0, 0, 1

[run]
x0 = x=0, y=0, u1=1, u2=1
dt = 0.001
t_end = 10
invariants = H, u1
)";

const char* kHeisenberg = R"(# kinetic energy invariant under the full translation group of the frame
[system]
name = contact-heisenberg
chart = x, y, z
momenta = u1, u2, u3
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[metric]
row1 = 1, 0, 0
row2 = 0, 1+x^2, -x
row3 = 0, -x, 1

[run]
x0 = x=0, y=0, u1=1, u2=1
dt = 0.001
t_end = 10
invariants = H, u1
)";

const char* kGeneralMetric = R"(# template for arbitrary z-invariant metrics; edit the rows or load your own
[system]
name = contact-general-metric
chart = x, y, z
momenta = u1, u2, u3
admissible = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[metric]
row1 = 1, x/4, 0
row2 = x/4, 1+x^2, -x
row3 = 0, -x, 2

[run]
x0 = x=0, y=0, u1=1, u2=1
dt = 0.001
t_end = 10
invariants = H, u1
)";

} // namespace

const std::vector<PresetInfo>& preset_catalog() {
    static const std::vector<PresetInfo> catalog{
        {"contact-euclidean", "contact constraint with the flat metric; conformally symplectic reduction"},
        {"contact-orthonormal", "flat metric described in the orthonormal adapted frame"},
        {"contact-heisenberg", "translation-invariant metric; the reduction is Poisson"},
        {"contact-general-metric", "template with a generic z-invariant metric (edit or override)"},
    };
    return catalog;
}

const std::string& preset_config_text(const std::string& name) {
    static const std::map<std::string, std::string> presets{
        {"contact-euclidean", kEuclidean},
        {"contact-orthonormal", kOrthonormal},
        {"contact-heisenberg", kHeisenberg},
        {"contact-general-metric", kGeneralMetric},
    };
    auto it = presets.find(name);
    if (it == presets.end()) throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

SystemConfig preset_config(const std::string& name) { return parse_config(preset_config_text(name)); }

} // namespace nonholo
