#include "nonholo/exterior.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace nonholo {

namespace {

int pair_index(int n, int i, int j) {
    // strict upper triangle, row-major: (0,1),(0,2),...,(0,n-1),(1,2),...
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

int triple_index(int n, int i, int j, int k) {
    auto c3 = [](int m) { return m * (m - 1) * (m - 2) / 6; };
    auto c2 = [](int m) { return m * (m - 1) / 2; };
    return c3(n) - c3(n - i) + c2(n - 1 - i) - c2(n - j) + (k - j - 1);
}

void require_same_chart(const Chart& a, const Chart& b, const char* op) {
    if (a != b) throw StructureError(std::string(op) + ": operands live on different charts");
}

// sorts (i,j,k) and returns the permutation sign, 0 on repeated indices
int sort3(int& i, int& j, int& k) {
    int sign = 1;
    if (i > j) {
        std::swap(i, j);
        sign = -sign;
    }
    if (j > k) {
        std::swap(j, k);
        sign = -sign;
    }
    if (i > j) {
        std::swap(i, j);
        sign = -sign;
    }
    if (i == j || j == k) return 0;
    return sign;
}

} // namespace

// ---------------------------------------------------------------------------
// Chart

Chart::Chart(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() < 2 || names_.size() > 8)
        throw StructureError("chart dimension must be between 2 and 8, got " +
                             std::to_string(names_.size()));
    std::set<std::string> seen(names_.begin(), names_.end());
    if (seen.size() != names_.size()) throw StructureError("chart variable names must be unique");
}

int Chart::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    throw StructureError("variable '" + std::string(name) + "' is not on this chart");
}

bool Chart::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

// ---------------------------------------------------------------------------
// VectorField

VectorField::VectorField(Chart chart, std::vector<Expr> components)
    : chart_(std::move(chart)), comps_(std::move(components)) {
    if (static_cast<int>(comps_.size()) != chart_.dim())
        throw StructureError("vector field needs one component per chart variable");
}

VectorField VectorField::zero(const Chart& chart) {
    return VectorField(chart, std::vector<Expr>(static_cast<std::size_t>(chart.dim())));
}

VectorField VectorField::basis(const Chart& chart, std::string_view name) {
    VectorField v = zero(chart);
    v.comps_[static_cast<std::size_t>(chart.index_of(name))] = Expr::integer(1);
    return v;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart_, b.chart_, "vector field sum");
    std::vector<Expr> out(a.comps_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.comps_[i] + b.comps_[i];
    return VectorField(a.chart_, std::move(out));
}

VectorField operator*(const Expr& s, const VectorField& v) {
    std::vector<Expr> out(v.comps_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = simplify(s * v.comps_[i]);
    return VectorField(v.chart_, std::move(out));
}

// ---------------------------------------------------------------------------
// Bivector

Bivector Bivector::zero(const Chart& chart) {
    Bivector b(chart);
    b.upper_.assign(static_cast<std::size_t>(chart.dim() * (chart.dim() - 1) / 2), Expr::integer(0));
    return b;
}

Expr Bivector::entry(int i, int j) const {
    if (i == j) return Expr::integer(0);
    int n = chart_.dim();
    if (i < j) return upper_[static_cast<std::size_t>(pair_index(n, i, j))];
    return -upper_[static_cast<std::size_t>(pair_index(n, j, i))];
}

void Bivector::set(int i, int j, const Expr& value) {
    if (i >= j) throw StructureError("bivector set requires i < j");
    upper_[static_cast<std::size_t>(pair_index(chart_.dim(), i, j))] = value;
}

void Bivector::add(int i, int j, const Expr& value) {
    if (i == j) return;
    int n = chart_.dim();
    if (i < j) {
        auto& slot = upper_[static_cast<std::size_t>(pair_index(n, i, j))];
        slot = slot + value;
    } else {
        auto& slot = upper_[static_cast<std::size_t>(pair_index(n, j, i))];
        slot = slot - value;
    }
}

Bivector Bivector::map(const Expr (*fn)(const Expr&)) const {
    Bivector out = *this;
    for (auto& e : out.upper_) e = fn(e);
    return out;
}

Bivector operator+(const Bivector& a, const Bivector& b) {
    require_same_chart(a.chart_, b.chart_, "bivector sum");
    Bivector out = a;
    for (std::size_t i = 0; i < out.upper_.size(); ++i) out.upper_[i] = out.upper_[i] + b.upper_[i];
    return out;
}

Bivector operator*(const Expr& s, const Bivector& b) {
    Bivector out = b;
    for (auto& e : out.upper_) e = simplify(s * e);
    return out;
}

// ---------------------------------------------------------------------------
// Trivector / forms

Trivector Trivector::zero(const Chart& chart) {
    Trivector t(chart);
    int n = chart.dim();
    t.comps_.assign(static_cast<std::size_t>(n * (n - 1) * (n - 2) / 6), Expr::integer(0));
    return t;
}

Expr Trivector::entry(int i, int j, int k) const {
    int s = sort3(i, j, k);
    if (s == 0) return Expr::integer(0);
    const Expr& v = comps_[static_cast<std::size_t>(triple_index(chart_.dim(), i, j, k))];
    return s > 0 ? v : -v;
}

void Trivector::set(int i, int j, int k, const Expr& value) {
    if (!(i < j && j < k)) throw StructureError("trivector set requires i < j < k");
    comps_[static_cast<std::size_t>(triple_index(chart_.dim(), i, j, k))] = value;
}

void Trivector::add(int i, int j, int k, const Expr& value) {
    int s = sort3(i, j, k);
    if (s == 0) return;
    auto& slot = comps_[static_cast<std::size_t>(triple_index(chart_.dim(), i, j, k))];
    slot = s > 0 ? slot + value : slot - value;
}

TwoForm TwoForm::zero(const Chart& chart) {
    TwoForm w(chart);
    w.upper_.assign(static_cast<std::size_t>(chart.dim() * (chart.dim() - 1) / 2), Expr::integer(0));
    return w;
}

Expr TwoForm::entry(int i, int j) const {
    if (i == j) return Expr::integer(0);
    int n = chart_.dim();
    if (i < j) return upper_[static_cast<std::size_t>(pair_index(n, i, j))];
    return -upper_[static_cast<std::size_t>(pair_index(n, j, i))];
}

void TwoForm::set(int i, int j, const Expr& value) {
    if (i >= j) throw StructureError("two-form set requires i < j");
    upper_[static_cast<std::size_t>(pair_index(chart_.dim(), i, j))] = value;
}

ThreeForm ThreeForm::zero(const Chart& chart) {
    ThreeForm w(chart);
    int n = chart.dim();
    w.comps_.assign(static_cast<std::size_t>(n * (n - 1) * (n - 2) / 6), Expr::integer(0));
    return w;
}

Expr ThreeForm::entry(int i, int j, int k) const {
    int s = sort3(i, j, k);
    if (s == 0) return Expr::integer(0);
    const Expr& v = comps_[static_cast<std::size_t>(triple_index(chart_.dim(), i, j, k))];
    return s > 0 ? v : -v;
}

void ThreeForm::set(int i, int j, int k, const Expr& value) {
    if (!(i < j && j < k)) throw StructureError("three-form set requires i < j < k");
    comps_[static_cast<std::size_t>(triple_index(chart_.dim(), i, j, k))] = value;
}

// ---------------------------------------------------------------------------
// operations

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
    require_same_chart(x.chart(), y.chart(), "lie_bracket");
    const Chart& chart = x.chart();
    int n = chart.dim();
    std::vector<Expr> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Expr acc;
        for (int l = 0; l < n; ++l) {
            acc = acc + x.component(l) * diff(y.component(k), chart.name(l)) -
                  y.component(l) * diff(x.component(k), chart.name(l));
        }
        out[static_cast<std::size_t>(k)] = simplify(acc);
    }
    return VectorField(chart, std::move(out));
}

Bivector wedge(const VectorField& x, const VectorField& y) {
    require_same_chart(x.chart(), y.chart(), "wedge");
    const Chart& chart = x.chart();
    int n = chart.dim();
    Bivector out = Bivector::zero(chart);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.set(i, j, simplify(x.component(i) * y.component(j) - x.component(j) * y.component(i)));
    return out;
}

Trivector wedge3(const VectorField& x, const Bivector& b) {
    require_same_chart(x.chart(), b.chart(), "wedge3");
    const Chart& chart = x.chart();
    int n = chart.dim();
    Trivector out = Trivector::zero(chart);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                out.set(i, j, k,
                        simplify(x.component(i) * b.entry(j, k) + x.component(j) * b.entry(k, i) +
                                 x.component(k) * b.entry(i, j)));
    return out;
}

Trivector schouten_self(const Bivector& b) {
    const Chart& chart = b.chart();
    int n = chart.dim();

    auto raw = [&](int i, int j, int k) {
        Expr acc;
        for (int l = 0; l < n; ++l) {
            acc = acc + b.entry(l, k) * diff(b.entry(i, j), chart.name(l)) +
                  b.entry(l, i) * diff(b.entry(j, k), chart.name(l)) +
                  b.entry(l, j) * diff(b.entry(k, i), chart.name(l));
        }
        return acc;
    };

    // The cyclic sum is already alternating; averaging the six signed
    // permutations normalizes rather than assumes it.
    static const std::array<std::array<int, 3>, 6> perms{
        {{{0, 1, 2}}, {{1, 2, 0}}, {{2, 0, 1}}, {{1, 0, 2}}, {{0, 2, 1}}, {{2, 1, 0}}}};
    static const std::array<int, 6> signs{1, 1, 1, -1, -1, -1};

    Trivector out = Trivector::zero(chart);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                int idx[3] = {i, j, k};
                Expr sym;
                for (int p = 0; p < 6; ++p) {
                    Expr term = raw(idx[perms[p][0]], idx[perms[p][1]], idx[perms[p][2]]);
                    sym = signs[p] > 0 ? sym + term : sym - term;
                }
                // 2 * raw == 2 * (sym / 6); the overall factor is pinned by
                // the coordinate form of the contact bracket.
                out.set(i, j, k, simplify(Expr::rational(2, 6) * sym));
            }
    return out;
}

Bivector lie_derivative_bivector(const VectorField& e, const Bivector& b) {
    require_same_chart(e.chart(), b.chart(), "lie_derivative_bivector");
    const Chart& chart = b.chart();
    int n = chart.dim();
    Bivector out = Bivector::zero(chart);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            Expr acc;
            for (int l = 0; l < n; ++l) {
                acc = acc + e.component(l) * diff(b.entry(i, j), chart.name(l)) -
                      b.entry(l, j) * diff(e.component(i), chart.name(l)) -
                      b.entry(i, l) * diff(e.component(j), chart.name(l));
            }
            out.set(i, j, simplify(acc));
        }
    return out;
}

VectorField hamiltonian_vector_field(const Bivector& b, const Expr& hamiltonian) {
    const Chart& chart = b.chart();
    int n = chart.dim();
    std::vector<Expr> grad(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) grad[static_cast<std::size_t>(j)] = diff(hamiltonian, chart.name(j));
    std::vector<Expr> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Expr acc;
        for (int j = 0; j < n; ++j) acc = acc + b.entry(i, j) * grad[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = simplify(acc);
    }
    return VectorField(chart, std::move(out));
}

TwoForm invert_bivector(const Bivector& b) {
    const Chart& chart = b.chart();
    int n = chart.dim();
    if (n % 2 != 0) throw StructureError("bivector on an odd-dimensional chart is singular");
    ExprMatrix m(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = b.entry(i, j);
    ExprMatrix inv = invert_matrix(m);
    TwoForm out = TwoForm::zero(chart);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.set(i, j, inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    return out;
}

ThreeForm exterior_derivative(const TwoForm& w) {
    const Chart& chart = w.chart();
    int n = chart.dim();
    ThreeForm out = ThreeForm::zero(chart);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                out.set(i, j, k,
                        simplify(diff(w.entry(j, k), chart.name(i)) -
                                 diff(w.entry(i, k), chart.name(j)) +
                                 diff(w.entry(i, j), chart.name(k))));
    return out;
}

TwoForm exterior_derivative_one_form(const Chart& chart, const std::vector<Expr>& alpha) {
    if (static_cast<int>(alpha.size()) != chart.dim())
        throw StructureError("one-form needs one component per chart variable");
    TwoForm out = TwoForm::zero(chart);
    for (int i = 0; i < chart.dim(); ++i)
        for (int j = i + 1; j < chart.dim(); ++j)
            out.set(i, j, simplify(diff(alpha[static_cast<std::size_t>(j)], chart.name(i)) -
                                   diff(alpha[static_cast<std::size_t>(i)], chart.name(j))));
    return out;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

void append_term(std::string& out, const Expr& coeff, const std::string& basis) {
    if (coeff.is_zero()) return;
    if (!out.empty()) out += " + ";
    if (coeff.is_one()) {
        out += basis;
    } else {
        std::string c = to_string(coeff);
        if (c.find_first_of("+- ") != std::string::npos)
            out += "(" + c + ")*" + basis;
        else
            out += c + "*" + basis;
    }
}

} // namespace

std::string to_string(const VectorField& v) {
    std::string out;
    for (int i = 0; i < v.chart().dim(); ++i)
        append_term(out, simplify(v.component(i)), "d/d" + v.chart().name(i));
    return out.empty() ? "0" : out;
}

std::string to_string(const Bivector& b) {
    std::string out;
    for (int i = 0; i < b.chart().dim(); ++i)
        for (int j = i + 1; j < b.chart().dim(); ++j)
            append_term(out, simplify(b.entry(i, j)),
                        "d/d" + b.chart().name(i) + "^d/d" + b.chart().name(j));
    return out.empty() ? "0" : out;
}

std::string to_string(const Trivector& t) {
    std::string out;
    for (int i = 0; i < t.chart().dim(); ++i)
        for (int j = i + 1; j < t.chart().dim(); ++j)
            for (int k = j + 1; k < t.chart().dim(); ++k)
                append_term(out, simplify(t.entry(i, j, k)),
                            "d/d" + t.chart().name(i) + "^d/d" + t.chart().name(j) + "^d/d" +
                                t.chart().name(k));
    return out.empty() ? "0" : out;
}

std::string to_string(const TwoForm& w) {
    std::string out;
    for (int i = 0; i < w.chart().dim(); ++i)
        for (int j = i + 1; j < w.chart().dim(); ++j)
            append_term(out, simplify(w.entry(i, j)), "d" + w.chart().name(i) + "^d" + w.chart().name(j));
    return out.empty() ? "0" : out;
}

std::string to_string(const ThreeForm& w) {
    std::string out;
    for (int i = 0; i < w.chart().dim(); ++i)
        for (int j = i + 1; j < w.chart().dim(); ++j)
            for (int k = j + 1; k < w.chart().dim(); ++k)
                append_term(out, simplify(w.entry(i, j, k)),
                            "d" + w.chart().name(i) + "^d" + w.chart().name(j) + "^d" + w.chart().name(k));
    return out.empty() ? "0" : out;
}

// ---------------------------------------------------------------------------
// symbolic matrices

Expr determinant(const ExprMatrix& m) {
    std::size_t n = m.size();
    if (n == 0) throw StructureError("determinant of an empty matrix");
    for (const auto& row : m)
        if (row.size() != n) throw StructureError("determinant requires a square matrix");
    if (n > 6) throw StructureError("symbolic determinants limited to dimension 6");
    if (n == 1) return m[0][0];
    Expr acc;
    for (std::size_t c = 0; c < n; ++c) {
        if (m[0][c].is_zero()) continue;
        ExprMatrix minor(n - 1, std::vector<Expr>(n - 1));
        for (std::size_t r = 1; r < n; ++r) {
            std::size_t cc = 0;
            for (std::size_t c2 = 0; c2 < n; ++c2) {
                if (c2 == c) continue;
                minor[r - 1][cc++] = m[r][c2];
            }
        }
        Expr term = m[0][c] * determinant(minor);
        acc = (c % 2 == 0) ? acc + term : acc - term;
    }
    return simplify(acc);
}

ExprMatrix invert_matrix(const ExprMatrix& m) {
    std::size_t n = m.size();
    Expr det = determinant(m);
    if (det.is_zero() || equal(det, Expr::integer(0), 20, 1e-12))
        throw StructureError("matrix is symbolically singular");
    ExprMatrix inv(n, std::vector<Expr>(n));
    if (n == 1) {
        inv[0][0] = simplify(Expr::integer(1) / det);
        return inv;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            ExprMatrix minor(n - 1, std::vector<Expr>(n - 1));
            std::size_t rr = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (r == i) continue;
                std::size_t cc = 0;
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor[rr][cc++] = m[r][c];
                }
                ++rr;
            }
            Expr cof = determinant(minor);
            if ((i + j) % 2 == 1) cof = -cof;
            inv[j][i] = simplify(cof / det); // adjugate transpose
        }
    }
    return inv;
}

} // namespace nonholo
