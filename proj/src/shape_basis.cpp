#include "l1surface/shape_basis.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "l1surface/error.hpp"

namespace l1surface {

namespace {

std::vector<Quote> slice_quotes(const QuoteSet& q, const MarketStructure& grid, std::size_t slice) {
    const double t = grid.maturity(slice);
    std::vector<Quote> out;
    for (const Quote& qt : q.quotes)
        if (std::abs(qt.maturity - t) <= 1e-9 * t) out.push_back(qt);
    return out;
}

}  // namespace

std::vector<double> default_alphas(std::span<const double> quoted_strikes) {
    std::vector<double> k(quoted_strikes.begin(), quoted_strikes.end());
    std::sort(k.begin(), k.end());
    if (k.size() < 2) throw ConsistencyError("need two strikes to derive a mollification width");
    std::vector<double> gaps;
    for (std::size_t i = 1; i < k.size(); ++i) gaps.push_back(k[i] - k[i - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    double d = gaps[gaps.size() / 2];
    if (gaps.size() % 2 == 0) {
        const double lower = *std::max_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2));
        d = 0.5 * (d + lower);
    }
    if (!(d > 0.0)) throw ConsistencyError("quoted strikes are not distinct");
    return {d, 2.0 * d, 4.0 * d, 8.0 * d};
}

std::vector<ShapeFunction> shape_functions(const QuoteSet& q, const MarketStructure& grid, std::size_t slice,
                                           std::span<const double> alphas, PiecewiseLinear::Extension ext) {
    const std::vector<Quote> quotes = slice_quotes(q, grid, slice);
    if (quotes.size() < 2)
        throw ConsistencyError(fmt::format("slice T={} has {} quotes; the shape basis needs at least two",
                                           grid.maturity(slice), quotes.size()));
    if (alphas.empty()) throw ConsistencyError("no mollification widths");
    std::vector<double> ks, bids, mids;
    for (const Quote& qt : quotes) {
        ks.push_back(qt.strike);
        bids.push_back(qt.bid);
        mids.push_back(qt.mid);
    }
    PiecewiseLinear bid_curve(ks, bids, ext);
    PiecewiseLinear mid_curve(ks, std::move(mids), ext);
    const double d = grid.discount(slice);
    bid_curve.set_floor(d * grid.forward(slice), -d);
    mid_curve.set_floor(d * grid.forward(slice), -d);
    const auto strikes = grid.slice_strikes(slice);

    std::vector<ShapeFunction> out;
    for (const auto& [src, curve] : {std::pair{ShapeSource::bid_interp, &bid_curve},
                                     std::pair{ShapeSource::mid_interp, &mid_curve}}) {
        for (double a : alphas) out.push_back({slice, src, a, mollify(*curve, a, strikes)});
    }
    return out;
}

BasisMatrix shape_basis_matrix(const QuoteSet& q, const MarketStructure& grid, const ShapeBasisOptions& opts) {
    const std::size_t mt = grid.num_maturities();
    const std::size_t mk = grid.num_strikes();

    std::vector<std::vector<double>> slice_alphas(mt);
    for (std::size_t m = 0; m < mt; ++m) {
        if (!opts.alphas.empty()) {
            slice_alphas[m] = opts.alphas;
        } else {
            std::vector<double> ks;
            for (const Quote& qt : slice_quotes(q, grid, m)) ks.push_back(qt.strike);
            if (ks.size() < 2)
                throw ConsistencyError(fmt::format("slice T={} has {} quotes; the shape basis needs at least two",
                                                   grid.maturity(m), ks.size()));
            slice_alphas[m] = default_alphas(ks);
        }
    }
    const std::size_t nk = 2 * slice_alphas.front().size() + opts.poly_orders;
    if (nk == 0) throw ConsistencyError("empty shape basis");

    BasisMatrix out;
    out.kind = BasisKind::per_slice_shape;
    out.block_count = mt;
    out.block_width = nk;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(mt * mk), static_cast<Eigen::Index>(mt * nk));
    out.column_weights.assign(mt * nk, 1.0);
    out.column_labels.resize(mt * nk);

    for (std::size_t m = 0; m < mt; ++m) {
        const auto shapes = shape_functions(q, grid, m, slice_alphas[m], opts.extension);
        std::size_t col = m * nk;
        for (const ShapeFunction& s : shapes) {
            for (std::size_t k = 0; k < mk; ++k)
                out.values(static_cast<Eigen::Index>(grid.index(m, k)), static_cast<Eigen::Index>(col)) = s.values[k];
            out.column_labels[col] = fmt::format("S{}:{}@{:.6g}", m + 1,
                                                 s.source == ShapeSource::bid_interp ? "bid" : "mid", s.alpha);
            ++col;
        }
        if (opts.poly_orders > 0) {
            const OrthonormalFamily fam(grid.slice_strikes(m), opts.poly_orders);
            for (std::size_t d = 0; d < opts.poly_orders; ++d, ++col) {
                for (std::size_t k = 0; k < mk; ++k)
                    out.values(static_cast<Eigen::Index>(grid.index(m, k)), static_cast<Eigen::Index>(col)) =
                        fam.value(d, k);
                out.column_labels[col] = fmt::format("S{}:P{}", m + 1, d);
            }
        }
    }
    return out;
}

}  // namespace l1surface
