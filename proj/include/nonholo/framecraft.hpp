#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonholo/exterior.hpp"
#include "nonholo/symexpr.hpp"

namespace nonholo {

/// A moving frame on the configuration chart Q: n vector fields e_I whose
/// first `admissible` members span the constraint distribution, together
/// with the dual coframe (computed by symbolic matrix inversion and checked
/// against the duality relations by sampling).
class MovingFrame {
public:
    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    int admissible() const { return admissible_; }
    const VectorField& vector(int i) const { return vectors_[static_cast<std::size_t>(i)]; }
    const std::vector<VectorField>& vectors() const { return vectors_; }
    /// Coframe row I: covariant components of the one-form dual to e_I.
    const std::vector<Expr>& coform(int i) const { return coframe_[static_cast<std::size_t>(i)]; }
    const ExprMatrix& coframe() const { return coframe_; }

    /// Pairs the I-th coframe form with a vector field.
    Expr pair(int i, const VectorField& v) const;

private:
    MovingFrame(Chart chart, std::vector<VectorField> vectors, int admissible, ExprMatrix coframe)
        : chart_(std::move(chart)), vectors_(std::move(vectors)), admissible_(admissible),
          coframe_(std::move(coframe)) {}

    Chart chart_;
    std::vector<VectorField> vectors_;
    int admissible_;
    ExprMatrix coframe_;

    friend MovingFrame build_frame(const Chart&, std::vector<VectorField>, int);
};

/// Builds a frame from n vector fields, 1 <= m < n of them admissible.
/// Throws StructureError when the frame matrix is symbolically singular or
/// the computed coframe fails the duality check.
MovingFrame build_frame(const Chart& chart, std::vector<VectorField> vectors, int admissible);

/// Kinetic metric on Q (2T = g_IJ qdot^I qdot^J) with an optional potential
/// restricted to the base variables. Symmetry is required structurally;
/// positive definiteness is checked through leading minors at sample points.
class MetricSpec {
public:
    MetricSpec(Chart chart, ExprMatrix g, std::optional<Expr> potential = std::nullopt);

    const Chart& chart() const { return chart_; }
    const ExprMatrix& g() const { return g_; }
    const std::optional<Expr>& potential() const { return potential_; }

private:
    Chart chart_;
    ExprMatrix g_;
    std::optional<Expr> potential_;
};

/// R_JK = - sum_I u_I eps_I([e_J, e_K]); antisymmetric, linear in the u's.
ExprMatrix structure_matrix(const MovingFrame& frame, const std::vector<std::string>& u_names);

/// H(q,u) = (1/2) p g^{-1}(q) p + V with p_L = sum_I u_I (eps_I)_L.
Expr hamiltonian_from_metric(const MetricSpec& metric, const MovingFrame& frame,
                             const std::vector<std::string>& u_names);

/// Constrained system on P: chart {q, u_1..u_m}, the assembled bivector,
/// the constrained Hamiltonian and the eliminated fiber momenta.
struct ConstrainedSystem {
    Chart phase_chart;
    MovingFrame frame;
    std::vector<std::string> u_names; // all n labels, admissible first
    Bivector bivector;
    Expr hamiltonian;
    std::vector<std::pair<std::string, Expr>> eliminated; // u_alpha -> expr in (q, u_i)
    std::vector<std::string> fiber_variables;
};

/// Solves dH/du_alpha = 0 for the inadmissible quasi-momenta (H must be
/// quadratic in the u's so the system is linear), substitutes them away and
/// assembles the almost-Poisson matrix on the coordinate chart {q, u_i}.
ConstrainedSystem constrain(const MovingFrame& frame, const Expr& hamiltonian,
                            const std::vector<std::string>& u_names,
                            std::vector<std::string> fiber_variables);

/// Compressed system on T*S after deleting the symmetry-fiber rows/columns.
struct CompressedSystem {
    Chart chart;
    Bivector bivector;
    Expr hamiltonian;
    /// Fiber variable -> its reconstruction rate as an expression over the
    /// compressed chart (the deleted row of the Hamiltonian vector field).
    std::vector<std::pair<std::string, Expr>> reconstruction;
};

/// Checks that no retained coefficient depends on the fiber variables, then
/// removes their rows and columns. Throws StructureError naming the
/// offending coefficient otherwise.
CompressedSystem compress(const ConstrainedSystem& cs);

/// Quadratic form gamma with H = gamma_ij u_i u_j + V for the dimension-3
/// translation-invariant setting; the ratios gamma_13/gamma_33 and
/// gamma_23/gamma_33 are what the downstream Jacobi tests consume.
ExprMatrix gamma_from_metric(const MetricSpec& metric, const MovingFrame& frame);

} // namespace nonholo
