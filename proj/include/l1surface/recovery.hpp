#pragma once

// End-to-end recovery: quotes -> grid -> basis -> constraints -> LP -> surface.
//
// Two pipelines share everything after the basis:
//   tensor_wl1    tensor orthonormal polynomials, weights n + j
//   fx_per_slice  block-diagonal shape basis per quoted slice, unit weights,
//                 fit inside the bid-ask band

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "l1surface/analytics.hpp"
#include "l1surface/constraints.hpp"
#include "l1surface/error.hpp"
#include "l1surface/lp.hpp"
#include "l1surface/market_data.hpp"
#include "l1surface/poly_basis.hpp"
#include "l1surface/shape_basis.hpp"

namespace l1surface {

enum class RecoveryMode { tensor_wl1, fx_per_slice };

struct RecoveryConfig {
    RecoveryMode mode = RecoveryMode::tensor_wl1;
    // tensor mode
    std::size_t order_t = 7;   // N_T
    std::size_t order_k = 14;  // N_K
    // fx mode
    ShapeBasisOptions shape;
    /// M_T. Zero means one slice per quoted maturity (required in fx mode).
    std::size_t grid_maturities = 11;
    std::size_t grid_strikes = 104;  // M_K
    ToleranceSpec tolerance;
    GridExtension extension;
    NoArbitrageOptions no_arbitrage;
    SimplexOptions solver;

    /// Throws ValidationError for inconsistent settings.
    void validate(const QuoteSet& q) const;

    static RecoveryConfig fx_defaults();
};

/// w_i = y + z for column i = (y - 1) N_K + (z - 1), orders counted from one.
std::vector<double> weights_tensor(std::size_t order_t, std::size_t order_k);

struct RecoveredSurface {
    RecoveryMode mode = RecoveryMode::tensor_wl1;
    MarketStructure grid;
    BasisMatrix basis;
    Vector x;
    Vector prices;  // Q x, slice-major
    Vector fitted;  // prices at the quotes, quote order
    Vector residuals;  // fitted - target
    Vector fit_lower;
    Vector fit_upper;
    std::vector<std::size_t> quote_nodes;
    std::size_t nonzero_coefficients = 0;  // |x_i| > 1e-8 ||x||_inf

    LpStatus status = LpStatus::optimal;
    double objective = 0.0;
    std::size_t iterations = 0;
    double max_violation = 0.0;
    double complementarity = 0.0;
    std::size_t lp_rows = 0;
    std::size_t lp_vars = 0;

    AuditReport audit;

    /// Largest amount by which a fitted price leaves its band (<= 0 inside).
    double band_excess() const;
};

/// The LP has no feasible point. Carries the constraint family to blame: the
/// family of the largest arbitrage already present among the quote bands, or,
/// when the bands alone are consistent, the family dominating the Farkas
/// certificate.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, std::optional<ConstraintFamily> family, RowGroup group)
        : Error(what), family_(family), group_(group) {}
    std::optional<ConstraintFamily> family() const { return family_; }
    RowGroup group() const { return group_; }

private:
    std::optional<ConstraintFamily> family_;
    RowGroup group_;
};

/// The solver stopped without an optimum (iteration limit or unbounded).
class SolverError : public Error {
public:
    SolverError(const std::string& what, LpStatus status) : Error(what), status_(status) {}
    LpStatus status() const { return status_; }

private:
    LpStatus status_;
};

/// Intermediate products, exposed for dumps and tests.
struct RecoveryProblem {
    QuoteSet quotes;
    MarketStructure grid;
    BasisMatrix basis;
    ConstraintSystem system;
    LpProblem lp;
};

RecoveryProblem build_problem(const QuoteSet& q, const RecoveryConfig& cfg);

/// Solves a built problem. Throws InfeasibleError or SolverError.
RecoveredSurface solve_problem(RecoveryProblem problem, const RecoveryConfig& cfg);

RecoveredSurface recover_tensor(const QuoteSet& q, const RecoveryConfig& cfg);
RecoveredSurface recover_fx(const QuoteSet& q, const RecoveryConfig& cfg);
/// Dispatches on cfg.mode.
RecoveredSurface recover(const QuoteSet& q, const RecoveryConfig& cfg);

struct RelaxedRecovery {
    RecoveredSurface surface;
    double scale = 1.0;  // band multiplier that was needed
    std::size_t solves = 0;
};

/// Convenience search: when the configured band is infeasible, scales every
/// band half-width by a common multiplier, doubling until feasible and then
/// bisecting down to `rel_tol`. Throws InfeasibleError if `max_scale` is not enough.
RelaxedRecovery recover_relaxed(const QuoteSet& q, const RecoveryConfig& cfg, double max_scale = 1024.0,
                                double rel_tol = 1e-3);

}  // namespace l1surface
