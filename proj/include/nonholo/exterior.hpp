#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nonholo/symexpr.hpp"

namespace nonholo {

/// Ordered coordinate chart, 2 to 8 variables, names unique. Charts compare
/// by content; every tensor field carries one and mixing charts is an error.
class Chart {
public:
    explicit Chart(std::vector<std::string> names);

    int dim() const { return static_cast<int>(names_.size()); }
    const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
    const std::vector<std::string>& names() const { return names_; }
    /// Index of a variable name; throws StructureError when absent.
    int index_of(std::string_view name) const;
    bool contains(std::string_view name) const;

    friend bool operator==(const Chart& a, const Chart& b) { return a.names_ == b.names_; }
    friend bool operator!=(const Chart& a, const Chart& b) { return !(a == b); }

private:
    std::vector<std::string> names_;
};

/// Contravariant rank-1 field: one Expr component per chart variable.
class VectorField {
public:
    VectorField(Chart chart, std::vector<Expr> components);
    static VectorField zero(const Chart& chart);
    /// The coordinate vector field d/d(name).
    static VectorField basis(const Chart& chart, std::string_view name);

    const Chart& chart() const { return chart_; }
    const Expr& component(int i) const { return comps_[static_cast<std::size_t>(i)]; }
    const std::vector<Expr>& components() const { return comps_; }

    friend VectorField operator+(const VectorField& a, const VectorField& b);
    friend VectorField operator*(const Expr& s, const VectorField& v);

private:
    Chart chart_;
    std::vector<Expr> comps_;
};

/// Antisymmetric rank-2 contravariant field. Storage is the strict upper
/// triangle; the diagonal is identically zero and entry(j,i) == -entry(i,j)
/// by construction.
class Bivector {
public:
    static Bivector zero(const Chart& chart);

    const Chart& chart() const { return chart_; }
    Expr entry(int i, int j) const;
    /// Requires i < j.
    void set(int i, int j, const Expr& value);
    /// Adds `value` into the (i,j) slot with antisymmetrization (any i != j).
    void add(int i, int j, const Expr& value);
    Bivector map(const Expr (*fn)(const Expr&)) const;

    friend Bivector operator+(const Bivector& a, const Bivector& b);
    friend Bivector operator*(const Expr& s, const Bivector& b);

private:
    explicit Bivector(Chart chart) : chart_(std::move(chart)) {}
    Chart chart_;
    std::vector<Expr> upper_;
};

/// Alternating rank-3 contravariant field stored on strictly increasing
/// index triples; the full table is recovered by total antisymmetrization.
class Trivector {
public:
    static Trivector zero(const Chart& chart);

    const Chart& chart() const { return chart_; }
    Expr entry(int i, int j, int k) const;
    void set(int i, int j, int k, const Expr& value); // requires i < j < k
    void add(int i, int j, int k, const Expr& value); // antisymmetrizing write

    const std::vector<Expr>& canonical() const { return comps_; }

private:
    explicit Trivector(Chart chart) : chart_(std::move(chart)) {}
    Chart chart_;
    std::vector<Expr> comps_;
};

/// Antisymmetric covariant rank-2 field (same storage convention).
class TwoForm {
public:
    static TwoForm zero(const Chart& chart);

    const Chart& chart() const { return chart_; }
    Expr entry(int i, int j) const;
    void set(int i, int j, const Expr& value);

private:
    explicit TwoForm(Chart chart) : chart_(std::move(chart)) {}
    Chart chart_;
    std::vector<Expr> upper_;
};

/// Alternating covariant rank-3 field.
class ThreeForm {
public:
    static ThreeForm zero(const Chart& chart);

    const Chart& chart() const { return chart_; }
    Expr entry(int i, int j, int k) const;
    void set(int i, int j, int k, const Expr& value);
    const std::vector<Expr>& canonical() const { return comps_; }

private:
    explicit ThreeForm(Chart chart) : chart_(std::move(chart)) {}
    Chart chart_;
    std::vector<Expr> comps_;
};

// ---------------------------------------------------------------------------
// operations

/// [X,Y]^K = X^L d_L Y^K - Y^L d_L X^K.
VectorField lie_bracket(const VectorField& x, const VectorField& y);

/// (X ^ Y)^{IJ} = X^I Y^J - X^J Y^I.
Bivector wedge(const VectorField& x, const VectorField& y);

/// Total antisymmetrization of X^I B^{JK} (cyclic sum, B antisymmetric).
Trivector wedge3(const VectorField& x, const Bivector& b);

/// Schouten-Nijenhuis self-bracket of a bivector, normalized so that the
/// bracket of the contact structure matches its known coordinate form; a
/// bivector is Poisson iff this vanishes. Computed as twice the cyclic
/// coordinate sum B^{LK} d_L B^{IJ} + B^{LI} d_L B^{JK} + B^{LJ} d_L B^{KI},
/// then totally antisymmetrized onto canonical triples.
Trivector schouten_self(const Bivector& b);

/// (L_E B)^{IJ} = E^L d_L B^{IJ} - B^{LJ} d_L E^I - B^{IL} d_L E^J.
Bivector lie_derivative_bivector(const VectorField& e, const Bivector& b);

/// X^I = sum_J B^{IJ} d_J H.
VectorField hamiltonian_vector_field(const Bivector& b, const Expr& hamiltonian);

/// Symbolic matrix inverse of the coefficient matrix (cofactor expansion,
/// even dimension <= 6). Throws StructureError when the determinant is the
/// zero expression (odd dimension always is).
TwoForm invert_bivector(const Bivector& b);

/// (dw)_{IJK} = d_I w_{JK} - d_J w_{IK} + d_K w_{IJ}.
ThreeForm exterior_derivative(const TwoForm& w);

/// d of a one-form given by covariant components: (da)_{IJ} = d_I a_J - d_J a_I.
TwoForm exterior_derivative_one_form(const Chart& chart, const std::vector<Expr>& alpha);

// rendering (grammar text with basis tags like d/dx, dx^dy)
std::string to_string(const VectorField& v);
std::string to_string(const Bivector& b);
std::string to_string(const Trivector& t);
std::string to_string(const TwoForm& w);
std::string to_string(const ThreeForm& w);

// ---------------------------------------------------------------------------
// symbolic matrices (shared by the frame machinery and bivector inversion)

using ExprMatrix = std::vector<std::vector<Expr>>;

Expr determinant(const ExprMatrix& m);
/// Adjugate-over-determinant inverse; dimensions up to 6.
ExprMatrix invert_matrix(const ExprMatrix& m);

} // namespace nonholo
