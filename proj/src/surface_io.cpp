#include "l1surface/surface_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "csv.hpp"
#include "l1surface/error.hpp"

namespace l1surface {

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    return fmt::format("{:.12g}", v);
}

void write_surface(std::ostream& out, const MarketStructure& grid, const Vector& prices) {
    if (static_cast<std::size_t>(prices.size()) != grid.size())
        throw ConsistencyError("price vector does not match the grid");
    out << "T,K,C\n";
    for (std::size_t m = 0; m < grid.num_maturities(); ++m)
        for (std::size_t k = 0; k < grid.num_strikes(); ++k)
            out << format_number(grid.maturity(m)) << ',' << format_number(grid.strike(m, k)) << ','
                << format_number(prices(static_cast<Eigen::Index>(grid.index(m, k)))) << '\n';
}

SurfaceTable read_surface(std::istream& in) {
    const detail::CsvTable table = detail::read_csv(in);
    const std::size_t ct = table.require("t");
    const std::size_t ck = table.require("k");
    const std::size_t cc = table.require("c");
    if (table.rows.empty()) throw ParseError("surface file has no rows");

    std::map<double, std::vector<std::pair<double, double>>> slices;
    for (const detail::CsvRow& row : table.rows) slices[row.number(ct)].emplace_back(row.number(ck), row.number(cc));

    SurfaceTable out;
    for (auto& [t, nodes] : slices) {
        std::sort(nodes.begin(), nodes.end());
        out.maturities.push_back(t);
        out.strikes.emplace_back();
        out.prices.emplace_back();
        for (const auto& [k, c] : nodes) {
            out.strikes.back().push_back(k);
            out.prices.back().push_back(c);
        }
    }
    return out;
}

SurfaceTable read_surface(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open surface file " + path.string());
    return read_surface(in);
}

MarketStructure align_surface(const SurfaceTable& table, const Market& market, Vector& prices) {
    const std::size_t mk = table.strikes.front().size();
    for (const auto& s : table.strikes)
        if (s.size() != mk) throw ConsistencyError("surface slices have different strike counts");
    MarketStructure grid(market, table.maturities, table.strikes.front());
    for (std::size_t m = 0; m < grid.num_maturities(); ++m)
        for (std::size_t k = 0; k < mk; ++k) {
            const double expected = grid.strike(m, k);
            if (std::abs(expected - table.strikes[m][k]) > 1e-8 * expected)
                throw ConsistencyError(fmt::format("strike {} at T={} is not aligned by the forward ratio (expected {})",
                                                   table.strikes[m][k], table.maturities[m], expected));
        }
    prices.resize(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t m = 0; m < grid.num_maturities(); ++m)
        for (std::size_t k = 0; k < mk; ++k) prices(static_cast<Eigen::Index>(grid.index(m, k))) = table.prices[m][k];
    return grid;
}

void write_coefficients(std::ostream& out, const RecoveredSurface& s) {
    out << "index,y,z,label,weight,value\n";
    const std::size_t width = std::max<std::size_t>(s.basis.block_width, 1);
    for (std::size_t i = 0; i < s.basis.cols(); ++i) {
        out << i << ',' << (i / width + 1) << ',' << (i % width + 1) << ',' << s.basis.column_labels[i] << ','
            << format_number(s.basis.column_weights[i]) << ',' << format_number(s.x(static_cast<Eigen::Index>(i)))
            << '\n';
    }
}

void write_diagnostics(std::ostream& out, const MarketStructure& grid, const Vector& prices,
                       const SurfaceDiagnostics& d, const NodeSlacks& slacks) {
    const double nan = std::nan("");
    out << "T,K,C,iv,density,dCdT,local_vol";
    for (std::size_t f = 0; f < kConstraintFamilyCount; ++f)
        out << ',' << family_name(static_cast<ConstraintFamily>(f)) << "_slack";
    out << '\n';
    for (std::size_t m = 0; m < grid.num_maturities(); ++m)
        for (std::size_t k = 0; k < grid.num_strikes(); ++k) {
            const std::size_t n = grid.index(m, k);
            out << format_number(grid.maturity(m)) << ',' << format_number(grid.strike(m, k)) << ','
                << format_number(prices(static_cast<Eigen::Index>(n))) << ','
                << format_number(d.implied_vol[n].value_or(nan)) << ',' << format_number(d.density[n]) << ','
                << format_number(d.dcdt[n]) << ',' << format_number(d.local_vol[n].value_or(nan));
            for (const auto& fam : slacks) out << ',' << format_number(fam.empty() ? nan : fam[n]);
            out << '\n';
        }
}

}  // namespace l1surface
