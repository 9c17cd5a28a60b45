#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "l1surface/constraints.hpp"
#include "l1surface/error.hpp"
#include "oracles.hpp"

namespace l1surface {
namespace {

Market flat_market(double spot, double r, double q) {
    Market m;
    m.spot = spot;
    m.rate = Curve::flat(r);
    m.dividend = Curve::flat(q);
    return m;
}

MarketStructure equal_grid(double r = 0.0, double q = 0.0) {
    std::vector<double> ks;
    for (int i = 0; i < 6; ++i) ks.push_back(80.0 + 8.0 * i);
    return MarketStructure(flat_market(100.0, r, q), {0.25, 0.5, 1.0}, ks);
}

Vector bs_prices(const MarketStructure& g, double r, double q, double sigma) {
    Vector c(static_cast<Eigen::Index>(g.size()));
    for (std::size_t m = 0; m < g.num_maturities(); ++m)
        for (std::size_t k = 0; k < g.num_strikes(); ++k)
            c(static_cast<Eigen::Index>(g.index(m, k))) = oracle::bs_call(100.0, g.strike(m, k), g.maturity(m), r, q, sigma);
    return c;
}

QuoteSet bs_quotes(double spread) {
    std::vector<Quote> qs;
    for (double t : {0.25, 0.5, 1.0})
        for (int i = 0; i < 9; ++i) {
            const double k = 80.0 + 5.0 * i;
            const double c = oracle::bs_call(100.0, k, t, 0.0, 0.0, 0.2);
            qs.push_back({t, k, c - spread, c, c + spread});
        }
    return make_quote_set(flat_market(100.0, 0.0, 0.0), qs);
}

TEST(Butterfly, InteriorStencilOnEqualSpacing) {
    const MarketStructure g = equal_grid();
    const PriceBlock b = butterfly_block(g);
    EXPECT_EQ(b.sense, Sense::greater_equal);
    ASSERT_EQ(b.rows.size(), g.size());
    const PriceRow& r = b.rows[1];  // (K0, K1, K2) of the first slice
    ASSERT_EQ(r.terms.size(), 3u);
    EXPECT_DOUBLE_EQ(r.terms[0].second, 1.0);
    EXPECT_DOUBLE_EQ(r.terms[1].second, -2.0);
    EXPECT_DOUBLE_EQ(r.terms[2].second, 1.0);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_THROW(butterfly_block(MarketStructure(flat_market(100.0, 0.0, 0.0), {1.0}, {90.0, 110.0})),
                 ValidationError);
}

TEST(Butterfly, ConcaveTripleIsViolated) {
    const MarketStructure g = equal_grid();
    Vector c = bs_prices(g, 0.0, 0.0, 0.2);
    c(2) += 3.0;  // lifts the middle of (K1, K2, K3) above the chord
    const Vector s = butterfly_block(g).slack(c);
    EXPECT_LT(s(2), 0.0);
    EXPECT_GE(s(1), 0.0);
}

class BlackScholesSatisfiesAll : public ::testing::TestWithParam<std::pair<double, double>> {};

TEST_P(BlackScholesSatisfiesAll, EveryFamily) {
    const auto [r, q] = GetParam();
    const MarketStructure g = equal_grid(r, q);
    const Vector c = bs_prices(g, r, q, 0.25);
    for (const PriceBlock& b :
         {butterfly_block(g), calendar_block(g), vertical_upper_block(g), vertical_lower_block(g), bound_block(g),
          butterfly_block(g, CapConvention::discounted_forward),
          vertical_upper_block(g, CapConvention::discounted_forward)}) {
        const Vector s = b.slack(c);
        EXPECT_GE(s.minCoeff(), -1e-10) << family_name(b.family);
    }
}

INSTANTIATE_TEST_SUITE_P(Carry, BlackScholesSatisfiesAll,
                         ::testing::Values(std::pair{0.0, 0.0}, std::pair{0.03, 0.0}, std::pair{0.02, 0.04}));

TEST(Calendar, RowsAndRatio) {
    const MarketStructure g = equal_grid(0.03, 0.01);
    const PriceBlock b = calendar_block(g);
    EXPECT_EQ(b.rows.size(), 2u * 6u);
    const double ratio = g.discount(1) * g.forward(1) / (g.discount(0) * g.forward(0));
    EXPECT_NEAR(ratio, std::exp(-0.01 * 0.25), 1e-14);
    EXPECT_DOUBLE_EQ(b.rows[0].terms[0].second, ratio);
    EXPECT_EQ(b.rows[0].terms[1].first, g.index(1, 0));
    EXPECT_DOUBLE_EQ(b.rows[0].terms[1].second, -1.0);

    Vector c = bs_prices(g, 0.03, 0.01, 0.2);
    c(static_cast<Eigen::Index>(g.index(1, 3))) = 0.5 * c(static_cast<Eigen::Index>(g.index(0, 3)));
    EXPECT_LT(b.slack(c)(3), 0.0);
}

TEST(Caps, LiteralAndDiscountedForward) {
    const MarketStructure g = equal_grid();
    EXPECT_DOUBLE_EQ(cap_value(g, 0, CapConvention::literal), 10000.0);
    EXPECT_DOUBLE_EQ(cap_value(g, 0, CapConvention::discounted_forward), 100.0);
    const PriceBlock up = vertical_upper_block(g);
    EXPECT_DOUBLE_EQ(up.rows[0].rhs, 10000.0);
    const MarketStructure carry = equal_grid(0.05, 0.02);
    EXPECT_NEAR(cap_value(carry, 2, CapConvention::discounted_forward), 100.0 * std::exp(-0.02), 1e-12);
}

TEST(VerticalLower, SlopeFloorAndIntrinsic) {
    const MarketStructure g = equal_grid(0.05, 0.0);
    const PriceBlock b = vertical_lower_block(g);
    ASSERT_EQ(b.rows.size(), g.size());
    const double d = std::exp(-0.05 * 0.25);
    EXPECT_NEAR(b.rows[0].rhs, -d * (100.0 * std::exp(0.05 * 0.25) - 80.0), 1e-12);
    EXPECT_NEAR(b.rows[1].rhs, d * 8.0, 1e-12);
    // a slice falling faster than D per unit strike breaks the slope floor
    Vector c = bs_prices(g, 0.05, 0.0, 0.2);
    c(1) = c(0) - 9.0;
    EXPECT_LT(b.slack(c)(1), 0.0);
}

TEST(Bound, RightHandSide) {
    const MarketStructure g(flat_market(100.0, 0.0, 0.0), {0.5, 1.0}, {60.0, 80.0, 95.0});
    const PriceBlock b = bound_block(g);
    ASSERT_EQ(b.rows.size(), 1u);
    EXPECT_EQ(b.sense, Sense::greater_equal);
    EXPECT_EQ(b.rows[0].terms[0].first, g.index(0, 2));
    EXPECT_DOUBLE_EQ(b.rows[0].rhs, 5.0);
    EXPECT_DOUBLE_EQ(bound_block(equal_grid()).rows[0].rhs, 0.0);
}

TEST(PriceBlock, NegationFlipsSenseAndSlackIsUnchanged) {
    const MarketStructure g = equal_grid();
    const PriceBlock b = butterfly_block(g);
    const PriceBlock le = b.as_less_equal();
    EXPECT_EQ(le.sense, Sense::less_equal);
    EXPECT_DOUBLE_EQ(le.rows[0].rhs, -b.rows[0].rhs);
    const Vector c = bs_prices(g, 0.0, 0.0, 0.3);
    EXPECT_LE((le.slack(c) - b.slack(c)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, RowCountAndPullback) {
    const QuoteSet quotes = bs_quotes(0.0);
    const MarketStructure g = build_fine_grid(quotes, 104, 11);
    const BasisMatrix q = tensor_basis(g, 7, 14);
    const ConstraintSystem cs = assemble(g, q, quotes, {});
    EXPECT_EQ(cs.rows(), 4473u);
    EXPECT_EQ(cs.l.cols(), 98);
    ASSERT_EQ(cs.blocks.size(), kConstraintFamilyCount);
    EXPECT_EQ(cs.family_of(0), ConstraintFamily::butterfly);
    EXPECT_EQ(cs.family_of(4472), ConstraintFamily::bound);

    // L x must equal the price rows applied to Q x
    const Vector x = Vector::LinSpaced(98, -1.0, 1.0);
    const Vector prices = q.values * x;
    const Vector lx = cs.l * x;
    std::size_t row = 0;
    for (const PriceBlock& b : cs.price_blocks) {
        const Vector s = b.slack(prices);
        for (Eigen::Index i = 0; i < s.size(); ++i, ++row)
            EXPECT_NEAR(cs.j(static_cast<Eigen::Index>(row)) - lx(static_cast<Eigen::Index>(row)), s(i), 1e-9);
    }
}

TEST(Assemble, RelativeBand) {
    const QuoteSet quotes = bs_quotes(0.0);
    const MarketStructure g = build_fine_grid(quotes, 30, 4);
    const ConstraintSystem cs = assemble(g, tensor_basis(g, 3, 5), quotes, {});
    for (Eigen::Index i = 0; i < cs.target.size(); ++i) {
        EXPECT_NEAR(cs.epsilon(i), 5e-4 * cs.target(i), 1e-15);
        EXPECT_NEAR(cs.fit_upper(i) - cs.fit_lower(i), 2.0 * 5e-4 * cs.target(i), 1e-12);
    }
}

TEST(Assemble, BidAskBandAndScale) {
    const QuoteSet spread = bs_quotes(0.05);
    const MarketStructure g = build_fine_grid(spread, 30, 4);
    const BasisMatrix q = tensor_basis(g, 3, 5);
    ToleranceSpec tol{ToleranceMode::bid_ask, 0.0, 1.0};
    ConstraintSystem cs = assemble(g, q, spread, tol);
    EXPECT_NEAR(cs.fit_lower(0), spread.quotes[0].bid, 1e-12);
    EXPECT_NEAR(cs.fit_upper(0), spread.quotes[0].ask, 1e-12);
    tol.scale = 2.0;
    cs = assemble(g, q, spread, tol);
    EXPECT_NEAR(cs.fit_upper(0) - cs.fit_lower(0), 0.2, 1e-12);

    const QuoteSet tight = bs_quotes(0.0);
    cs = assemble(g, q, tight, {ToleranceMode::bid_ask, 0.0, 1.0});
    EXPECT_EQ((cs.fit_upper - cs.fit_lower).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(assemble(g, q, tight, {ToleranceMode::absolute, -1.0, 1.0}), DomainError);
}

TEST(Assemble, RelaxOutsideQuotedKeepsBound) {
    const QuoteSet quotes = bs_quotes(0.0);
    const MarketStructure g = build_fine_grid(quotes, 30, 4);
    const BasisMatrix q = tensor_basis(g, 3, 5);
    const ConstraintSystem full = assemble(g, q, quotes, {});
    const ConstraintSystem relaxed = assemble(g, q, quotes, {}, {CapConvention::literal, true});
    EXPECT_LT(relaxed.rows(), full.rows());
    EXPECT_EQ(relaxed.blocks.back().family, ConstraintFamily::bound);
    EXPECT_EQ(relaxed.blocks.back().end - relaxed.blocks.back().begin, 1u);
}

TEST(Assemble, MismatchedBasisThrows) {
    const QuoteSet quotes = bs_quotes(0.0);
    const MarketStructure g = build_fine_grid(quotes, 30, 4);
    const MarketStructure other = build_fine_grid(quotes, 40, 4);
    EXPECT_THROW(assemble(g, tensor_basis(other, 3, 5), quotes, {}), ConsistencyError);
}

TEST(SystemDump, RoundTrip) {
    const QuoteSet quotes = bs_quotes(0.02);
    const MarketStructure g = build_fine_grid(quotes, 20, 4);
    const ConstraintSystem cs = assemble(g, tensor_basis(g, 2, 4), quotes, {ToleranceMode::bid_ask, 0.0, 1.0});
    std::stringstream ss;
    write_system(ss, cs);
    const ConstraintSystem back = read_system(ss);
    EXPECT_LE((back.l - cs.l).cwiseAbs().maxCoeff(), 1e-15 * cs.l.cwiseAbs().maxCoeff());
    EXPECT_LE((back.fit_upper - cs.fit_upper).cwiseAbs().maxCoeff(), 1e-14);
    ASSERT_EQ(back.blocks.size(), cs.blocks.size());
    EXPECT_EQ(back.blocks[1].family, ConstraintFamily::calendar);
}

}  // namespace
}  // namespace l1surface
