#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "l1surface/error.hpp"
#include "l1surface/mollifier.hpp"
#include "l1surface/shape_basis.hpp"
#include "oracles.hpp"

namespace l1surface {
namespace {

double raw_bump(double x) { return x * x < 1.0 ? std::exp(1.0 / (x * x - 1.0)) : 0.0; }

double bump_integral() {
    static const double v = oracle::simpson(raw_bump, -1.0, 1.0, 200000);
    return v;
}

// Convolution by Simpson on a fine grid, for comparison with the library's trapezoid.
double convolve(const PiecewiseLinear& f, double alpha, double x) {
    return oracle::simpson([&](double y) { return f(x - y) * raw_bump(y / alpha) / (alpha * bump_integral()); },
                           -alpha, alpha, 20000);
}

Market zero_carry(double spot) {
    Market m;
    m.spot = spot;
    m.rate = Curve::flat(0.0);
    m.dividend = Curve::flat(0.0);
    return m;
}

QuoteSet bs_slices(std::vector<double> maturities, std::vector<double> strikes, double spread = 0.0) {
    std::vector<Quote> qs;
    for (double t : maturities)
        for (double k : strikes) {
            const double c = oracle::bs_call(100.0, k, t, 0.0, 0.0, 0.2);
            qs.push_back({t, k, std::max(c - spread, 0.0), c, c + spread});
        }
    return make_quote_set(zero_carry(100.0), qs);
}

TEST(Mollifier, NormalizationAgainstQuadrature) {
    EXPECT_NEAR(mollifier::normalization(), 1.0 / bump_integral(), 1e-9);
    EXPECT_NEAR(mollifier::standard(0.0), std::exp(-1.0) / bump_integral(), 1e-9);
    EXPECT_NEAR(mollifier::standard(0.0), 0.828569, 1e-6);
}

TEST(Mollifier, SupportAndDomain) {
    EXPECT_EQ(mollifier::standard(1.0), 0.0);
    EXPECT_EQ(mollifier::standard(-1.5), 0.0);
    EXPECT_GT(mollifier::standard(0.999), 0.0);
    EXPECT_THROW(mollifier::scaled(0.1, 0.0), DomainError);
    EXPECT_THROW(mollifier::scaled(0.1, -2.0), DomainError);
}

TEST(Mollifier, ScaledFamilyIntegratesToOne) {
    for (double alpha : {0.1, 1.0, 10.0}) {
        const double integral =
            oracle::simpson([&](double x) { return mollifier::scaled(x, alpha); }, -alpha, alpha, 20000);
        EXPECT_NEAR(integral, 1.0, 1e-6) << "alpha=" << alpha;
    }
}

TEST(PiecewiseLinear, Extensions) {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> y{5.0, 3.0, 2.0};
    EXPECT_DOUBLE_EQ(PiecewiseLinear(x, y)(0.0), 5.0);
    EXPECT_DOUBLE_EQ(PiecewiseLinear(x, y)(2.5), 2.5);
    EXPECT_DOUBLE_EQ(PiecewiseLinear(x, y, PiecewiseLinear::Extension::linear)(0.0), 7.0);
    EXPECT_DOUBLE_EQ(PiecewiseLinear(x, y, PiecewiseLinear::Extension::linear)(5.0), 0.0);
    EXPECT_DOUBLE_EQ(PiecewiseLinear(x, y, PiecewiseLinear::Extension::linear)(7.0), -2.0);
    EXPECT_DOUBLE_EQ(PiecewiseLinear(x, y, PiecewiseLinear::Extension::linear_floored)(7.0), 0.0);

    PiecewiseLinear floored(x, y, PiecewiseLinear::Extension::linear_floored);
    floored.set_floor(10.0, -1.0);  // max(10 - x, 0)
    EXPECT_DOUBLE_EQ(floored(0.0), 10.0);
    EXPECT_DOUBLE_EQ(floored(4.0), 6.0);
    EXPECT_THROW(PiecewiseLinear({1.0}, {1.0}), DomainError);
    EXPECT_THROW(PiecewiseLinear({1.0, 1.0}, {1.0, 2.0}), DomainError);
}

TEST(Mollify, ReproducesAffineAwayFromEnds) {
    const PiecewiseLinear f({0.0, 10.0}, {3.0, -2.0}, PiecewiseLinear::Extension::linear);
    const double alpha = 0.7;
    const std::vector<double> pts{0.7, 2.0, 5.5, 9.3};
    const auto v = mollify(f, alpha, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(v[i], f(pts[i]), 1e-8);
}

TEST(Mollify, AgreesWithIndependentConvolution) {
    const PiecewiseLinear f({80.0, 90.0, 100.0, 110.0}, {21.0, 12.5, 6.0, 2.5});
    for (double x : {84.0, 90.0, 97.5, 100.0, 104.0}) {
        const double ref = convolve(f, 5.0, x);
        // the library's trapezoid step is alpha / 100, which leaves O(h^2) error at the kinks
        EXPECT_NEAR(mollify(f, 5.0, std::vector<double>{x})[0], ref, 1e-5 * std::abs(ref)) << "x=" << x;
    }
}

TEST(Mollify, PreservesConvexity) {
    std::vector<double> ks, cs;
    for (int i = 0; i < 9; ++i) {
        ks.push_back(80.0 + 5.0 * i);
        cs.push_back(oracle::bs_call(100.0, ks.back(), 0.5, 0.0, 0.0, 0.2));
    }
    const PiecewiseLinear f(ks, cs, PiecewiseLinear::Extension::linear);
    std::vector<double> pts;
    for (int i = 0; i <= 400; ++i) pts.push_back(70.0 + 0.15 * i);
    for (double alpha : {2.5, 5.0, 10.0}) {
        const auto v = mollify(f, alpha, pts);
        for (std::size_t i = 1; i + 1 < v.size(); ++i)
            EXPECT_GE(v[i + 1] - 2.0 * v[i] + v[i - 1], -1e-10) << "alpha=" << alpha << " i=" << i;
    }
}

TEST(Mollify, ValueAtConvexKinkIncreasesWithWidth) {
    const PiecewiseLinear f({90.0, 100.0, 110.0}, {10.0, 0.5, 0.0});
    double prev = f(100.0);
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double v = mollify(f, alpha, std::vector<double>{100.0})[0];
        EXPECT_GT(v, prev) << "alpha=" << alpha;
        prev = v;
    }
}

TEST(Mollify, DiracLimitBound) {
    // |f_alpha - f| <= Lip(f) * alpha
    const PiecewiseLinear f({0.0, 1.0, 2.0, 3.0}, {2.0, 0.0, 1.0, 4.0});
    const double lip = 3.0;
    for (double alpha : {0.2, 0.05, 0.01}) {
        const std::vector<double> pts{0.5, 1.0, 1.7, 2.0};
        const auto v = mollify(f, alpha, pts);
        for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LE(std::abs(v[i] - f(pts[i])), lip * alpha);
    }
    EXPECT_THROW(mollify(f, 0.0, std::vector<double>{1.0}), DomainError);
}

TEST(ShapeBasis, DefaultWidthsFromMedianSpacing) {
    const auto a = default_alphas(std::vector<double>{7.75, 7.775, 7.80, 7.825, 7.85});
    ASSERT_EQ(a.size(), 4u);
    EXPECT_NEAR(a[0], 0.025, 1e-12);
    EXPECT_NEAR(a[3], 0.2, 1e-12);
    EXPECT_THROW(default_alphas(std::vector<double>{1.0}), ConsistencyError);
}

TEST(ShapeBasis, TwoColumnsForOneWidth) {
    const QuoteSet q = bs_slices({0.5}, {90.0, 100.0, 110.0});
    const MarketStructure grid = build_fine_grid(q, 30, 1);
    ShapeBasisOptions opts;
    opts.alphas = {5.0};
    opts.poly_orders = 0;
    const BasisMatrix b = shape_basis_matrix(q, grid, opts);
    EXPECT_EQ(b.cols(), 2u);
    EXPECT_EQ(b.rows(), 30u);
    EXPECT_EQ(b.kind, BasisKind::per_slice_shape);
}

TEST(ShapeBasis, BlockDiagonalLayout) {
    const QuoteSet q = bs_slices({1.0 / 12, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0}, {90.0, 95.0, 100.0, 105.0, 110.0});
    const MarketStructure grid = build_fine_grid(q, 406, 8);
    const BasisMatrix b = shape_basis_matrix(q, grid, {});
    EXPECT_EQ(b.rows(), 8u * 406u);
    EXPECT_EQ(b.block_width, 10u);
    EXPECT_EQ(b.cols(), 80u);
    for (std::size_t m = 0; m < 8; ++m)
        for (std::size_t other = 0; other < 8; ++other) {
            if (other == m) continue;
            const auto block = b.values.block(static_cast<Eigen::Index>(m * 406), static_cast<Eigen::Index>(other * 10),
                                              406, 10);
            EXPECT_EQ(block.cwiseAbs().maxCoeff(), 0.0);
        }
    for (double w : b.column_weights) EXPECT_EQ(w, 1.0);
    // zero coefficients give the zero surface
    const Vector c = b.values * Vector::Zero(80);
    EXPECT_EQ(c.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ShapeBasis, MidColumnsFollowTheQuotes) {
    // the narrowest mid mollification stays within Lip * alpha of the quotes
    const QuoteSet q = bs_slices({0.5}, {80.0, 90.0, 100.0, 110.0, 120.0});
    const MarketStructure grid = build_fine_grid(q, 104, 1);
    const auto shapes = shape_functions(q, grid, 0, std::vector<double>{0.5, 1.0});
    ASSERT_EQ(shapes.size(), 4u);
    EXPECT_EQ(shapes[0].source, ShapeSource::bid_interp);
    EXPECT_EQ(shapes[2].source, ShapeSource::mid_interp);
    for (const Quote& qt : q.quotes) {
        const auto node = grid.find_node(qt.maturity, qt.strike);
        ASSERT_TRUE(node);
        EXPECT_NEAR(shapes[2].values[*node], qt.mid, 0.5);
    }
}

TEST(ShapeBasis, ExtensionStaysAboveIntrinsic) {
    const QuoteSet q = bs_slices({0.5}, {90.0, 100.0, 110.0});
    const MarketStructure grid = build_fine_grid(q, 60, 1);
    const auto shapes = shape_functions(q, grid, 0, std::vector<double>{2.0});
    for (std::size_t k = 0; k < grid.num_strikes(); ++k)
        EXPECT_GE(shapes[1].values[k], std::max(100.0 - grid.strike(0, k), 0.0) - 1e-9) << grid.strike(0, k);
}

TEST(ShapeBasis, SliceNeedsTwoQuotes) {
    const QuoteSet q = bs_slices({0.5}, {100.0});
    GridExtension ext;
    const MarketStructure grid = build_fine_grid(q, 10, 1, ext);
    EXPECT_THROW(shape_basis_matrix(q, grid, {}), ConsistencyError);
    ShapeBasisOptions opts;
    opts.alphas = {1.0};
    EXPECT_THROW(shape_basis_matrix(q, grid, opts), ConsistencyError);
}

}  // namespace
}  // namespace l1surface
