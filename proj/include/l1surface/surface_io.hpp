#pragma once

// CSV exports of recovered surfaces and their diagnostics, and the reader the
// audit and diagnostics commands use to load a surface back.
//
// Numbers are written with 12 significant digits so identical inputs give
// byte-identical files. Undefined diagnostic values are written as NA.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "l1surface/analytics.hpp"
#include "l1surface/linalg.hpp"
#include "l1surface/market_data.hpp"
#include "l1surface/recovery.hpp"

namespace l1surface {

/// `T,K,C`, one row per grid node, slice-major.
void write_surface(std::ostream& out, const MarketStructure& grid, const Vector& prices);

struct SurfaceTable {
    std::vector<double> maturities;
    std::vector<std::vector<double>> strikes;  // per maturity
    std::vector<std::vector<double>> prices;
};

/// Reads a `T,K,C` file. Rows are grouped by maturity and sorted by strike.
/// Throws ParseError on malformed or empty input.
SurfaceTable read_surface(std::istream& in);
SurfaceTable read_surface(const std::filesystem::path& path);

/// Rebuilds the aligned grid for `table` under `market`. Throws
/// ConsistencyError when slices have different strike counts or a slice's
/// strikes are not the first slice's scaled by the forward ratio.
MarketStructure align_surface(const SurfaceTable& table, const Market& market, Vector& prices);

/// `index,y,z,label,weight,value`. Tensor columns: y, z are the maturity and
/// strike orders; shape columns: y is the slice, z the column inside its block.
void write_coefficients(std::ostream& out, const RecoveredSurface& s);

/// One row per node: T,K,C,iv,density,dCdT,local_vol and the per-family slacks.
void write_diagnostics(std::ostream& out, const MarketStructure& grid, const Vector& prices,
                       const SurfaceDiagnostics& d, const NodeSlacks& slacks);

/// Fixed formatting used by every export.
std::string format_number(double v);

}  // namespace l1surface
