#pragma once

// Quotes, term structures and the aligned recovery grid.
//
// Every maturity slice of the recovery grid carries the same number of
// strikes, and the strikes of slice i are the first-slice strikes scaled by
// the forward ratio F(T_i)/F(T_1). Calendar-spread constraints then compare
// prices at the same forward moneyness on consecutive slices.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace l1surface {

/// Piecewise-linear curve in maturity with flat extrapolation.
class Curve {
public:
    Curve() = default;
    Curve(std::vector<double> maturities, std::vector<double> values);
    static Curve flat(double value);

    double operator()(double maturity) const;

    std::span<const double> maturities() const { return maturities_; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> maturities_;
    std::vector<double> values_;
};

/// Spot plus continuously-compounded rate and dividend-yield curves.
struct Market {
    double spot = 0.0;
    Curve rate;
    Curve dividend;

    /// S * exp((r_T - q_T) T). Throws DomainError for T <= 0.
    double forward(double maturity) const;
    /// exp(-r_T T). Throws DomainError for T <= 0.
    double discount(double maturity) const;
};

enum class QuoteKind { call_price, implied_vol };

struct Quote {
    double maturity = 0.0;
    double strike = 0.0;
    double bid = 0.0;
    double mid = 0.0;
    double ask = 0.0;
};

/// Market quotes in call-price space, sorted by (maturity, strike).
struct QuoteSet {
    Market market;
    std::vector<double> maturities;  // distinct quoted maturities, increasing
    std::vector<Quote> quotes;

    /// Quotes of the i-th quoted maturity.
    std::vector<Quote> slice(std::size_t maturity_index) const;
};

/// Sorts the quotes, derives the maturity list and checks every invariant.
/// Throws ValidationError on bid > ask, mid outside [bid, ask], negative prices,
/// duplicate (maturity, strike) or non-positive spot / maturity / strike.
QuoteSet make_quote_set(Market market, std::vector<Quote> quotes);

struct IngestOptions {
    QuoteKind kind = QuoteKind::call_price;
};

/// Reads `maturity,strike,bid,ask[,mid]` CSV (header required, column order free).
/// Implied-vol quotes are converted to Black–Scholes call prices with `market`.
QuoteSet load_quotes(std::istream& in, const Market& market, const IngestOptions& opts = {});
QuoteSet load_quotes(const std::filesystem::path& path, const Market& market,
                     const IngestOptions& opts = {});

/// Reads `maturity,rate,dividend` CSV into rate and dividend curves.
struct TermStructure {
    Curve rate;
    Curve dividend;
};
TermStructure load_curves(std::istream& in);
TermStructure load_curves(const std::filesystem::path& path);

double forward(const QuoteSet& q, double maturity);
double discount(const QuoteSet& q, double maturity);

/// How far the recovery domain reaches past the quotes.
struct GridExtension {
    /// Fraction of the extreme quoted (first-slice) strikes added on each side.
    double strike_fraction = 0.15;
    /// Extension past the last quoted maturity as a fraction of the quoted
    /// maturity span. Unset means one fine-grid step.
    std::optional<double> maturity_fraction;
};

struct ExtensionInfo {
    double quoted_strike_min = 0.0;  // first-slice coordinates
    double quoted_strike_max = 0.0;
    double strike_min = 0.0;
    double strike_max = 0.0;
    double quoted_maturity_max = 0.0;
    double maturity_max = 0.0;
    std::size_t strikes_below = 0;
    std::size_t strikes_above = 0;
    std::size_t maturities_after = 0;
};

/// Aligned fine grid. Nodes are stored slice-major: node (m, k) has flat index
/// m * num_strikes() + k, which is also the row of the basis matrix.
class MarketStructure {
public:
    MarketStructure() = default;

    /// Builds the aligned grid from first-slice strikes. Throws ValidationError if
    /// maturities or strikes are not strictly increasing and positive.
    MarketStructure(Market market, std::vector<double> maturities, std::vector<double> base_strikes);

    const Market& market() const { return market_; }
    std::size_t num_maturities() const { return maturities_.size(); }
    std::size_t num_strikes() const { return base_strikes_.size(); }
    std::size_t size() const { return strikes_.size(); }
    std::size_t index(std::size_t m, std::size_t k) const { return m * num_strikes() + k; }

    std::span<const double> maturities() const { return maturities_; }
    double maturity(std::size_t m) const { return maturities_[m]; }
    double forward(std::size_t m) const { return forwards_[m]; }
    double discount(std::size_t m) const { return discounts_[m]; }
    double strike(std::size_t m, std::size_t k) const { return strikes_[index(m, k)]; }
    std::span<const double> slice_strikes(std::size_t m) const {
        return std::span<const double>(strikes_).subspan(m * num_strikes(), num_strikes());
    }
    /// All strikes, slice-major.
    std::span<const double> strikes() const { return strikes_; }

    /// Flat index of the node at (maturity, strike), matched to relative tolerance.
    std::optional<std::size_t> find_node(double maturity, double strike, double rel_tol = 1e-9) const;

    /// True if the node lies inside the quoted domain (used to relax constraints on the extension).
    bool in_quoted_domain(std::size_t m, std::size_t k) const;

    const ExtensionInfo& extension() const { return extension_; }
    void set_extension(const ExtensionInfo& info) { extension_ = info; }

private:
    Market market_;
    std::vector<double> maturities_;
    std::vector<double> base_strikes_;
    std::vector<double> forwards_;
    std::vector<double> discounts_;
    std::vector<double> strikes_;
    ExtensionInfo extension_;
};

/// Builds the M_T x M_K recovery grid around the quotes. Every quoted
/// (maturity, strike) pair becomes a grid node; the remaining nodes are
/// spread evenly across the extended domain.
MarketStructure build_fine_grid(const QuoteSet& q, std::size_t num_strikes,
                                std::size_t num_maturities, const GridExtension& ext = {});

/// Places `count` increasing nodes on [lo, hi] so that every value of
/// `required` (sorted, distinct, inside [lo, hi]) is a node and the others
/// are evenly spaced between consecutive anchors.
std::vector<double> place_nodes(double lo, double hi, std::size_t count,
                                std::span<const double> required);

}  // namespace l1surface
