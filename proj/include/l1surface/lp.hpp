#pragma once

// Linear programs of the form
//
//     minimize  c'z   subject to  G z <= h,  z >= 0,
//
// the weighted-l1 reformulation that produces them (x = u - v with u, v >= 0),
// and a dense revised simplex solver behind a small plug-in interface.

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "l1surface/constraints.hpp"
#include "l1surface/linalg.hpp"

namespace l1surface {

/// Where an LP row came from.
enum class RowGroup { fit_upper, fit_lower, butterfly, calendar, vertical_upper, vertical_lower, bound, other };

std::string_view group_name(RowGroup g);
RowGroup group_of(ConstraintFamily f);

struct LpProblem {
    Vector cost;
    Matrix g;  // rows x vars
    Vector h;
    std::vector<RowGroup> provenance;  // one entry per row

    std::size_t num_vars() const { return static_cast<std::size_t>(cost.size()); }
    std::size_t num_rows() const { return static_cast<std::size_t>(h.size()); }

    /// Throws DomainError on non-finite data or mismatched dimensions.
    void validate() const;
};

/// Builds the split problem over z = (u, v): A(u - v) <= upper,
/// -A(u - v) <= -lower, L(u - v) <= J, cost (w, w).
/// Throws DomainError for a non-positive or mis-sized weight vector.
LpProblem to_lp(const ConstraintSystem& cs, std::span<const double> weights);

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

std::string_view status_name(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::iteration_limit;
    Vector values;             // z; for to_lp problems the first half is u, the second v
    double objective = 0.0;
    double max_violation = 0.0;  // max over rows of (G z - h)^+ and over vars of (-z)^+
    std::size_t iterations = 0;
    /// Infeasible: the row carrying the largest weight in the Farkas certificate.
    std::optional<std::size_t> certificate_row;
    /// Infeasible: nonnegative row multipliers y with y'G >= 0 and y'h < 0 (may be empty).
    Vector farkas;

    Vector u() const { return values.head(values.size() / 2); }
    Vector v() const { return values.tail(values.size() / 2); }
};

struct Recovered {
    Vector x;
    /// max_i min(u_i, v_i); zero at an optimum with positive weights.
    double complementarity = 0.0;
};

/// x = u - v. Throws StateError unless the solution is optimal.
Recovered recover_x(const LpSolution& sol);

/// Which standard-form problem the simplex engine works on. `dual` is
/// preferred when rows outnumber variables: its basis is vars x vars.
enum class Formulation { automatic, primal, dual };

struct SimplexOptions {
    double feasibility_tol = 1e-8;
    double optimality_tol = 1e-9;
    /// 0 selects 50 * (rows + vars).
    std::size_t max_iterations = 0;
    Formulation formulation = Formulation::automatic;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    std::size_t bland_after = 50;
    /// Pivots between refactorizations of the basis inverse.
    std::size_t refactor_interval = 64;
};

/// Solver plug-in contract. Adapters for external optimizers implement this.
class LpSolver {
public:
    virtual ~LpSolver() = default;
    virtual LpSolution solve(const LpProblem& lp) const = 0;
    virtual std::string_view name() const = 0;
};

class SimplexSolver final : public LpSolver {
public:
    explicit SimplexSolver(SimplexOptions opts = {}) : opts_(opts) {}
    LpSolution solve(const LpProblem& lp) const override;
    std::string_view name() const override { return "revised-simplex"; }
    const SimplexOptions& options() const { return opts_; }

private:
    SimplexOptions opts_;
};

LpSolution solve(const LpProblem& lp, const SimplexOptions& opts = {});

/// Maximum constraint violation of z for the problem (see LpSolution::max_violation).
double max_violation(const LpProblem& lp, const Vector& z);

/// Plain-text dump: "COST n", "G r c", "H r", "PROVENANCE r" sections.
void write_lp(std::ostream& out, const LpProblem& lp);
LpProblem read_lp(std::istream& in);

}  // namespace l1surface
