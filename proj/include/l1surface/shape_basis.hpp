#pragma once

// Per-slice structure-preserving basis for bid/ask-quoted markets.
//
// Each maturity slice gets its own block of columns: the bid and mid quote
// curves (piecewise-linear through the quotes) mollified at several widths,
// plus a few low-degree polynomials orthonormal on the slice strikes. The
// basis matrix is block-diagonal across slices.

#include <cstddef>
#include <span>
#include <vector>

#include "l1surface/market_data.hpp"
#include "l1surface/mollifier.hpp"
#include "l1surface/poly_basis.hpp"

namespace l1surface {

enum class ShapeSource { bid_interp, mid_interp };

struct ShapeFunction {
    std::size_t slice = 0;
    ShapeSource source = ShapeSource::mid_interp;
    double alpha = 0.0;
    std::vector<double> values;  // on the slice's fine strikes
};

struct ShapeBasisOptions {
    /// Mollification widths in strike units. Empty: per-slice default
    /// {d, 2d, 4d, 8d} with d the median quoted strike spacing of the slice.
    std::vector<double> alphas;
    std::size_t poly_orders = 2;
    PiecewiseLinear::Extension extension = PiecewiseLinear::Extension::linear_floored;
};

/// {d, 2d, 4d, 8d}, d = median spacing of the sorted strikes.
std::vector<double> default_alphas(std::span<const double> quoted_strikes);

/// The bid and mid shape functions of one slice, one per alpha (bid first).
std::vector<ShapeFunction> shape_functions(const QuoteSet& q, const MarketStructure& grid, std::size_t slice,
                                           std::span<const double> alphas,
                                           PiecewiseLinear::Extension ext = PiecewiseLinear::Extension::linear_floored);

/// Block-diagonal (M_T*M_K) x (M_T*N_K) matrix with N_K = 2*|alphas| + poly_orders.
/// All column weights are one. Throws ConsistencyError when a slice has fewer
/// than two quotes or the alpha list is empty.
BasisMatrix shape_basis_matrix(const QuoteSet& q, const MarketStructure& grid, const ShapeBasisOptions& opts);

}  // namespace l1surface
