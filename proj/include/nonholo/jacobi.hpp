#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonholo/exterior.hpp"
#include "nonholo/symexpr.hpp"

namespace nonholo {

/// Named entry point for the Jacobi defect [B,B]; the bivector is Poisson
/// iff this trivector vanishes.
Trivector jacobi_defect(const Bivector& b);

/// Least-squares fit of 2 E ^ B = T at a single point.
struct PointwiseFit {
    Point point;
    std::vector<double> e_components;
    double residual; // ||2E^B - T|| / max(||T||, 1e-30) at the minimizer
};

/// Assembles the linear map e -> 2 e^B(p) over canonical triples and
/// returns the least-squares minimizer with its relative residual. A large
/// residual certifies that no vector field E can satisfy the first Jacobi
/// condition at p.
PointwiseFit solve_E_pointwise(const Bivector& b, const Trivector& t, const Point& p);

/// Closed-form E for bivectors of the compressed translation family:
/// canonical blocks plus a single momentum-pair coefficient r linear in the
/// momenta. Returns E = (dr/du2) d/du1 - (dr/du1) d/du2 and verifies
/// 2E^B = [B,B] by sampling. Throws StructureError on shape mismatch or
/// verification failure.
VectorField solve_E_symbolic_compressed(const Bivector& b);

/// L_E B for the compressed family, reduced to its single momentum-pair
/// coefficient. All other entries are checked to vanish by sampling.
Expr check_LE(const Bivector& b, const VectorField& e);

/// d_x(ratio13) + d_y(ratio23): the obstruction to the second Jacobi
/// condition for translation-invariant kinetic Hamiltonians.
Expr restriction_condition(const Expr& ratio13, const Expr& ratio23, const std::string& x = "x",
                           const std::string& y = "y");

/// Conformal factor f with d(f Omega) = 0 under a single-variable ansatz.
/// Carries a closed form when the factor is expressible in the expression
/// grammar, otherwise a numerically integrated profile with f(0) = 1.
class ConformalFactor {
public:
    static ConformalFactor closed_form(Expr f, std::string variable);
    static ConformalFactor tabulated(Expr ode_h, std::string variable, std::string display);

    bool has_closed_form() const { return static_cast<bool>(expr_); }
    const std::optional<Expr>& expr() const { return expr_; }
    const std::string& display() const { return display_; }
    const std::string& variable() const { return variable_; }

    /// f at a value of the ansatz variable (f(0) = 1 for tabulated forms).
    double value(double v) const;

private:
    std::optional<Expr> expr_;
    Expr ode_h_; // f' + h f = 0 when tabulated
    std::string variable_;
    std::string display_;
};

/// Searches for f = f(v) with df^Omega + f dOmega = 0. Every coefficient
/// equation must reduce to the same first-order ODE in v; anything touching
/// another variable throws StructureError (ansatz-inconsistent).
ConformalFactor conformal_factor_search(const TwoForm& omega, const std::string& variable);

/// Outcome of the structure classification.
struct StructureVerdict {
    enum class Tag { Poisson, ConformalSymplectic, Jacobi, NotJacobi };

    Tag tag;
    Trivector defect; // [B,B]
    std::optional<ConformalFactor> conformal_factor;
    std::optional<VectorField> e_field; // symbolic witness when available
    std::optional<Point> witness;       // NotJacobi: most violating sample
    double residual = 0.0;              // NotJacobi: its relative residual
    std::vector<PointwiseFit> fits;     // per-point diagnostics
    std::vector<std::string> notes;

    std::string tag_name() const;
};

struct ClassifyOptions {
    int points = 25;          // pointwise stage sample count
    double threshold = 1e-6;  // relative residual separating feasible/infeasible
    double tol = 1e-10;       // symbolic identity tolerance
    unsigned seed = 12345;
    double box_min = 0.1;
    double box_max = 2.0;
};

/// Poisson / conformally symplectic / Jacobi / not-Jacobi decision:
/// pointwise-numeric infeasibility first (sound and cheap), symbolic
/// witnesses second, conformal factor recovery when the bivector inverts.
StructureVerdict classify(const Bivector& b, const ClassifyOptions& opts = {});

} // namespace nonholo
