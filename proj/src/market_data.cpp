#include "l1surface/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "l1surface/black_scholes.hpp"
#include "l1surface/error.hpp"

namespace l1surface {

namespace {

bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace

// ---------------------------------------------------------------- Curve

Curve::Curve(std::vector<double> maturities, std::vector<double> values)
    : maturities_(std::move(maturities)), values_(std::move(values)) {
    if (maturities_.empty() || maturities_.size() != values_.size())
        throw ValidationError("curve needs the same non-zero number of maturities and values");
    for (std::size_t i = 1; i < maturities_.size(); ++i)
        if (!(maturities_[i] > maturities_[i - 1]))
            throw ValidationError("curve maturities must be strictly increasing");
    for (double v : values_)
        if (!std::isfinite(v)) throw ValidationError("curve values must be finite");
}

Curve Curve::flat(double value) { return Curve({1.0}, {value}); }

double Curve::operator()(double maturity) const {
    if (maturities_.empty()) return 0.0;
    if (maturity <= maturities_.front()) return values_.front();
    if (maturity >= maturities_.back()) return values_.back();
    const auto it = std::upper_bound(maturities_.begin(), maturities_.end(), maturity);
    const std::size_t i = static_cast<std::size_t>(it - maturities_.begin());
    const double w = (maturity - maturities_[i - 1]) / (maturities_[i] - maturities_[i - 1]);
    return (1.0 - w) * values_[i - 1] + w * values_[i];
}

// ---------------------------------------------------------------- Market

double Market::forward(double maturity) const {
    if (!(maturity > 0.0)) throw DomainError("forward: maturity must be positive");
    return spot * std::exp((rate(maturity) - dividend(maturity)) * maturity);
}

double Market::discount(double maturity) const {
    if (!(maturity > 0.0)) throw DomainError("discount: maturity must be positive");
    return std::exp(-rate(maturity) * maturity);
}

double forward(const QuoteSet& q, double maturity) { return q.market.forward(maturity); }
double discount(const QuoteSet& q, double maturity) { return q.market.discount(maturity); }

// ---------------------------------------------------------------- QuoteSet

std::vector<Quote> QuoteSet::slice(std::size_t maturity_index) const {
    std::vector<Quote> out;
    const double t = maturities.at(maturity_index);
    for (const Quote& qt : quotes)
        if (qt.maturity == t) out.push_back(qt);
    return out;
}

QuoteSet make_quote_set(Market market, std::vector<Quote> quotes) {
    if (!(market.spot > 0.0) || !std::isfinite(market.spot))
        throw ValidationError("spot must be positive");
    if (quotes.empty()) throw ValidationError("no quotes");
    for (const Quote& q : quotes) {
        if (!(q.maturity > 0.0)) throw ValidationError("quote maturity must be positive");
        if (!(q.strike > 0.0)) throw ValidationError("quote strike must be positive");
        if (!std::isfinite(q.bid) || !std::isfinite(q.ask) || !std::isfinite(q.mid))
            throw ValidationError("quote prices must be finite");
        if (q.bid < 0.0 || q.ask < 0.0 || q.mid < 0.0)
            throw ValidationError("quote prices must be nonnegative");
        if (q.bid > q.ask) {
            std::ostringstream os;
            os << "bid > ask at maturity " << q.maturity << ", strike " << q.strike;
            throw ValidationError(os.str());
        }
        if (q.mid < q.bid || q.mid > q.ask) {
            std::ostringstream os;
            os << "mid outside [bid, ask] at maturity " << q.maturity << ", strike " << q.strike;
            throw ValidationError(os.str());
        }
    }
    std::sort(quotes.begin(), quotes.end(), [](const Quote& a, const Quote& b) {
        return a.maturity != b.maturity ? a.maturity < b.maturity : a.strike < b.strike;
    });
    for (std::size_t i = 1; i < quotes.size(); ++i) {
        if (quotes[i].maturity == quotes[i - 1].maturity &&
            close_rel(quotes[i].strike, quotes[i - 1].strike, 1e-12)) {
            std::ostringstream os;
            os << "duplicate quote at maturity " << quotes[i].maturity << ", strike " << quotes[i].strike;
            throw ValidationError(os.str());
        }
    }
    QuoteSet out;
    out.market = std::move(market);
    for (const Quote& q : quotes)
        if (out.maturities.empty() || out.maturities.back() != q.maturity) out.maturities.push_back(q.maturity);
    out.quotes = std::move(quotes);
    return out;
}

QuoteSet load_quotes(std::istream& in, const Market& market, const IngestOptions& opts) {
    detail::CsvTable table = detail::read_csv(in);
    const std::size_t c_mat = table.require("maturity");
    const std::size_t c_strike = table.require("strike");
    const std::size_t c_bid = table.require("bid");
    const std::size_t c_ask = table.require("ask");
    const std::optional<std::size_t> c_mid = table.column("mid");

    std::vector<Quote> quotes;
    quotes.reserve(table.rows.size());
    for (const detail::CsvRow& row : table.rows) {
        Quote q;
        q.maturity = row.number(c_mat);
        q.strike = row.number(c_strike);
        q.bid = row.number(c_bid);
        q.ask = row.number(c_ask);
        q.mid = c_mid ? row.number(*c_mid) : 0.5 * (q.bid + q.ask);
        if (q.bid > q.ask) {
            std::ostringstream os;
            os << "bid > ask (line " << row.line << ")";
            throw ValidationError(os.str());
        }
        if (opts.kind == QuoteKind::implied_vol) {
            if (!(q.maturity > 0.0) || !(q.strike > 0.0))
                throw ValidationError("implied-vol quote needs positive maturity and strike (line " +
                                      std::to_string(row.line) + ")");
            const double r = market.rate(q.maturity);
            const double d = market.dividend(q.maturity);
            auto price = [&](double vol) {
                return bs::call_price(market.spot, q.strike, q.maturity, r, d, vol);
            };
            q.bid = price(q.bid);
            q.mid = price(q.mid);
            q.ask = price(q.ask);
        }
        quotes.push_back(q);
    }
    return make_quote_set(market, std::move(quotes));
}

QuoteSet load_quotes(const std::filesystem::path& path, const Market& market, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open quote file " + path.string());
    return load_quotes(in, market, opts);
}

TermStructure load_curves(std::istream& in) {
    detail::CsvTable table = detail::read_csv(in);
    const std::size_t c_mat = table.require("maturity");
    const std::size_t c_rate = table.require("rate");
    const std::size_t c_div = table.require("dividend");
    std::vector<std::tuple<double, double, double>> nodes;
    for (const detail::CsvRow& row : table.rows)
        nodes.emplace_back(row.number(c_mat), row.number(c_rate), row.number(c_div));
    if (nodes.empty()) throw ParseError("curve file has no rows");
    std::sort(nodes.begin(), nodes.end());
    std::vector<double> t, r, d;
    for (auto [tm, rt, dv] : nodes) {
        t.push_back(tm);
        r.push_back(rt);
        d.push_back(dv);
    }
    return {Curve(t, r), Curve(t, d)};
}

TermStructure load_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open curve file " + path.string());
    return load_curves(in);
}

// ---------------------------------------------------------------- MarketStructure

MarketStructure::MarketStructure(Market market, std::vector<double> maturities,
                                 std::vector<double> base_strikes)
    : market_(std::move(market)), maturities_(std::move(maturities)), base_strikes_(std::move(base_strikes)) {
    if (maturities_.empty() || base_strikes_.empty()) throw ValidationError("empty grid");
    for (std::size_t i = 0; i < maturities_.size(); ++i)
        if (!(maturities_[i] > 0.0) || (i > 0 && !(maturities_[i] > maturities_[i - 1])))
            throw ValidationError("grid maturities must be positive and strictly increasing");
    for (std::size_t i = 0; i < base_strikes_.size(); ++i)
        if (!(base_strikes_[i] > 0.0) || (i > 0 && !(base_strikes_[i] > base_strikes_[i - 1])))
            throw ValidationError("grid strikes must be positive and strictly increasing");

    forwards_.reserve(maturities_.size());
    discounts_.reserve(maturities_.size());
    for (double t : maturities_) {
        forwards_.push_back(market_.forward(t));
        discounts_.push_back(market_.discount(t));
    }
    strikes_.resize(maturities_.size() * base_strikes_.size());
    for (std::size_t m = 0; m < maturities_.size(); ++m) {
        const double ratio = forwards_[m] / forwards_[0];
        for (std::size_t k = 0; k < base_strikes_.size(); ++k)
            strikes_[index(m, k)] = m == 0 ? base_strikes_[k] : base_strikes_[k] * ratio;
    }
    extension_.quoted_strike_min = extension_.strike_min = base_strikes_.front();
    extension_.quoted_strike_max = extension_.strike_max = base_strikes_.back();
    extension_.quoted_maturity_max = extension_.maturity_max = maturities_.back();
}

std::optional<std::size_t> MarketStructure::find_node(double maturity, double strike, double rel_tol) const {
    for (std::size_t m = 0; m < maturities_.size(); ++m) {
        if (!close_rel(maturities_[m], maturity, rel_tol)) continue;
        const auto s = slice_strikes(m);
        auto it = std::lower_bound(s.begin(), s.end(), strike * (1.0 - rel_tol));
        if (it != s.end() && close_rel(*it, strike, rel_tol))
            return index(m, static_cast<std::size_t>(it - s.begin()));
        return std::nullopt;
    }
    return std::nullopt;
}

bool MarketStructure::in_quoted_domain(std::size_t m, std::size_t k) const {
    const double tol = 1e-12;
    if (maturities_[m] > extension_.quoted_maturity_max * (1.0 + tol)) return false;
    const double b = base_strikes_[k];
    return b >= extension_.quoted_strike_min * (1.0 - tol) && b <= extension_.quoted_strike_max * (1.0 + tol);
}

// ---------------------------------------------------------------- grid construction

std::vector<double> place_nodes(double lo, double hi, std::size_t count, std::span<const double> required) {
    const std::size_t p = required.size();
    if (count == 0) throw ConsistencyError("grid needs at least one node");
    if (p > count) throw ConsistencyError("more required nodes than grid points");
    for (std::size_t i = 0; i < p; ++i) {
        if (required[i] < lo || required[i] > hi) throw ConsistencyError("required node outside grid range");
        if (i > 0 && !(required[i] > required[i - 1]))
            throw ConsistencyError("required nodes must be strictly increasing");
    }
    if (count == 1) {
        if (p == 1) return {required[0]};
        if (lo != hi) throw ConsistencyError("a single grid node cannot span a range");
        return {lo};
    }
    if (!(hi > lo)) throw ConsistencyError("degenerate grid range");

    const double h = (hi - lo) / static_cast<double>(count - 1);
    std::vector<std::pair<std::size_t, double>> anchors;
    std::ptrdiff_t prev = -1;
    for (std::size_t k = 0; k < p; ++k) {
        const auto nearest = static_cast<std::ptrdiff_t>(std::lround((required[k] - lo) / h));
        const auto lower = prev + 1;
        const auto upper = static_cast<std::ptrdiff_t>(count - p + k);
        const auto idx = std::clamp(nearest, lower, upper);
        anchors.emplace_back(static_cast<std::size_t>(idx), required[k]);
        prev = idx;
    }
    if (anchors.empty() || anchors.front().first != 0) anchors.insert(anchors.begin(), {0, lo});
    if (anchors.back().first != count - 1) anchors.emplace_back(count - 1, hi);

    std::vector<double> nodes(count);
    for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
        const auto [i0, v0] = anchors[a];
        const auto [i1, v1] = anchors[a + 1];
        for (std::size_t i = i0; i < i1; ++i)
            nodes[i] = v0 + (v1 - v0) * static_cast<double>(i - i0) / static_cast<double>(i1 - i0);
    }
    nodes.back() = anchors.back().second;
    for (const auto& [i, v] : anchors) nodes[i] = v;
    return nodes;
}

MarketStructure build_fine_grid(const QuoteSet& q, std::size_t num_strikes, std::size_t num_maturities,
                                const GridExtension& ext) {
    if (q.quotes.empty()) throw ConsistencyError("no quotes to build a grid around");
    if (!(ext.strike_fraction >= 0.0 && ext.strike_fraction < 1.0))
        throw DomainError("strike extension must lie in [0, 1)");
    const Market& mk = q.market;
    const double t1 = q.maturities.front();
    const double f1 = mk.forward(t1);

    // Quoted strikes expressed in first-slice coordinates.
    std::vector<double> required;
    required.reserve(q.quotes.size());
    for (const Quote& qt : q.quotes) {
        const double b = qt.maturity == t1 ? qt.strike : qt.strike * f1 / mk.forward(qt.maturity);
        required.push_back(b);
    }
    std::sort(required.begin(), required.end());
    std::vector<double> distinct;
    for (double b : required)
        if (distinct.empty() || !close_rel(distinct.back(), b, 1e-10)) distinct.push_back(b);
    if (distinct.size() > num_strikes)
        throw ConsistencyError("M_K = " + std::to_string(num_strikes) + " is below the " +
                               std::to_string(distinct.size()) + " distinct quoted strikes");

    const double kmin = distinct.front();
    const double kmax = distinct.back();
    const double klo = (1.0 - ext.strike_fraction) * kmin;
    const double khi = (1.0 + ext.strike_fraction) * kmax;
    std::vector<double> base = place_nodes(klo, khi, num_strikes, distinct);

    const std::size_t p = q.maturities.size();
    if (num_maturities < p)
        throw ConsistencyError("M_T = " + std::to_string(num_maturities) + " cannot hold the " +
                               std::to_string(p) + " quoted maturities");
    const double tlast = q.maturities.back();
    const double span = tlast - t1;
    double tend = tlast;
    if (num_maturities > p) {
        if (ext.maturity_fraction) {
            if (*ext.maturity_fraction < 0.0) throw DomainError("maturity extension must be nonnegative");
            tend = tlast + *ext.maturity_fraction * (span > 0.0 ? span : tlast);
        } else if (span > 0.0) {
            tend = tlast + span / static_cast<double>(num_maturities - 2);
        } else {
            tend = 2.0 * tlast;
        }
    }
    std::vector<double> mats = place_nodes(t1, tend, num_maturities, q.maturities);

    MarketStructure grid(mk, mats, base);
    ExtensionInfo info;
    info.quoted_strike_min = kmin;
    info.quoted_strike_max = kmax;
    info.strike_min = base.front();
    info.strike_max = base.back();
    info.quoted_maturity_max = tlast;
    info.maturity_max = mats.back();
    info.strikes_below = static_cast<std::size_t>(
        std::count_if(base.begin(), base.end(), [&](double b) { return b < kmin * (1.0 - 1e-12); }));
    info.strikes_above = static_cast<std::size_t>(
        std::count_if(base.begin(), base.end(), [&](double b) { return b > kmax * (1.0 + 1e-12); }));
    info.maturities_after = static_cast<std::size_t>(
        std::count_if(mats.begin(), mats.end(), [&](double t) { return t > tlast * (1.0 + 1e-12); }));
    grid.set_extension(info);
    return grid;
}

}  // namespace l1surface
