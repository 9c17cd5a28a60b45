#pragma once

// Static no-arbitrage conditions on a call-price grid, written as linear
// inequalities on the grid prices and then pulled back onto basis
// coefficients through Q.
//
// Families (rows per family for an M_T x M_K grid):
//   butterfly       M_T * M_K      convexity in strike, with strike-zero and
//                                  infinite-strike end rows
//   calendar        (M_T-1) * M_K  C(K^T_{j+1}, T_{j+1}) >= ratio * C(K^T_j, T_j)
//   vertical_upper  M_T * M_K      C decreasing in strike, cap on the first strike
//   vertical_lower  M_T * M_K      slope >= -D(T), intrinsic floor on the first strike
//   bound           1              C(K_max, T_1) >= (F(T_1) - K_max)^+
// Total M_K * (4 M_T - 1) + 1.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "l1surface/linalg.hpp"
#include "l1surface/market_data.hpp"
#include "l1surface/poly_basis.hpp"

namespace l1surface {

enum class ConstraintFamily { butterfly, calendar, vertical_upper, vertical_lower, bound };
inline constexpr std::size_t kConstraintFamilyCount = 5;

std::string_view family_name(ConstraintFamily f);

enum class Sense { less_equal, greater_equal };

/// sum_i coef_i * C[node_i] (sense) rhs, with nodes as flat grid indices.
struct PriceRow {
    std::vector<std::pair<std::size_t, double>> terms;
    double rhs = 0.0;
};

struct PriceBlock {
    ConstraintFamily family = ConstraintFamily::butterfly;
    Sense sense = Sense::less_equal;
    std::vector<PriceRow> rows;

    /// Multiplies every row by -1 and flips the sense.
    PriceBlock negated() const;
    /// Same constraints in <= orientation.
    PriceBlock as_less_equal() const;
    /// Signed slack per row, positive when satisfied (rhs - lhs for <=, lhs - rhs for >=).
    Vector slack(const Vector& prices) const;
};

/// How the literal upper caps are scaled. The caps are written S*D(T)*F(T);
/// with F(T) already containing S this is a price squared. `literal` keeps
/// that form, `discounted_forward` uses D(T)*F(T) = S*exp(-q T).
enum class CapConvention { literal, discounted_forward };

struct NoArbitrageOptions {
    CapConvention caps = CapConvention::literal;
    /// Drop rows touching nodes outside the quoted domain (the bound row is kept).
    bool relax_outside_quoted = false;
};

/// Strike-zero call value / first-strike cap used by butterfly and vertical rows.
double cap_value(const MarketStructure& grid, std::size_t m, CapConvention caps);

/// Rows are B_f C >= R (sense greater_equal). Throws ValidationError if M_K < 3.
PriceBlock butterfly_block(const MarketStructure& grid, CapConvention caps = CapConvention::literal);
/// G C <= 0.
PriceBlock calendar_block(const MarketStructure& grid);
/// H C <= U_b.
PriceBlock vertical_upper_block(const MarketStructure& grid, CapConvention caps = CapConvention::literal);
/// Slope floor -D(T) and first-strike floor D(T)(F(T) - K_1)^+, as <= rows.
PriceBlock vertical_lower_block(const MarketStructure& grid);
/// Single row C(K^{T_1}_{M_K}, T_1) >= (F(T_1) - K^{T_1}_{M_K})^+.
PriceBlock bound_block(const MarketStructure& grid);

enum class ToleranceMode { relative, absolute, bid_ask };

struct ToleranceSpec {
    ToleranceMode mode = ToleranceMode::relative;
    double epsilon = 5e-4;
    /// Multiplies the band half-widths (the bid and ask distances from mid in
    /// bid_ask mode). Used by the relax-to-feasible search; 1 leaves the band as quoted.
    double scale = 1.0;
};

struct RowRange {
    ConstraintFamily family;
    std::size_t begin;
    std::size_t end;
};

struct ConstraintSystem {
    Matrix l;  // no-arbitrage rows on coefficients: l x <= j
    Vector j;
    std::vector<RowRange> blocks;
    std::vector<PriceBlock> price_blocks;  // <= oriented, same row order as l

    FitSystem fit;
    Vector target;    // C°
    Vector epsilon;   // per-quote half band
    Vector fit_lower; // band: fit_lower <= A x <= fit_upper
    Vector fit_upper;
    ToleranceSpec tolerance;

    std::size_t rows() const { return static_cast<std::size_t>(l.rows()); }
    ConstraintFamily family_of(std::size_t row) const;
};

/// Stacks all families in <= form, pulls them back through Q and fills the
/// fit band. Throws ConsistencyError if Q does not match the grid.
ConstraintSystem assemble(const MarketStructure& grid, const BasisMatrix& q, const QuoteSet& quotes,
                          const ToleranceSpec& tol, const NoArbitrageOptions& opts = {});

/// Plain-text dump of (L, J, A, lower, upper, blocks) for external cross-checks.
/// Layout: a header line, then sections "L r c", "J r", "A r c", "LOWER r",
/// "UPPER r", "BLOCKS n" each followed by whitespace-separated rows.
void write_system(std::ostream& out, const ConstraintSystem& cs);
ConstraintSystem read_system(std::istream& in);

}  // namespace l1surface
