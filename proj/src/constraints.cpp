#include "l1surface/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "l1surface/error.hpp"
#include "l1surface/kernels.hpp"

namespace l1surface {

std::string_view family_name(ConstraintFamily f) {
    switch (f) {
        case ConstraintFamily::butterfly: return "butterfly";
        case ConstraintFamily::calendar: return "calendar";
        case ConstraintFamily::vertical_upper: return "vertical_upper";
        case ConstraintFamily::vertical_lower: return "vertical_lower";
        case ConstraintFamily::bound: return "bound";
    }
    return "unknown";
}

PriceBlock PriceBlock::negated() const {
    PriceBlock out = *this;
    out.sense = sense == Sense::less_equal ? Sense::greater_equal : Sense::less_equal;
    for (PriceRow& r : out.rows) {
        for (auto& t : r.terms) t.second = -t.second;
        r.rhs = -r.rhs;
    }
    return out;
}

PriceBlock PriceBlock::as_less_equal() const { return sense == Sense::less_equal ? *this : negated(); }

Vector PriceBlock::slack(const Vector& prices) const {
    Vector s(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double lhs = 0.0;
        for (const auto& [node, coef] : rows[i].terms) lhs += coef * prices(static_cast<Eigen::Index>(node));
        s(static_cast<Eigen::Index>(i)) = sense == Sense::less_equal ? rows[i].rhs - lhs : lhs - rows[i].rhs;
    }
    return s;
}

double cap_value(const MarketStructure& grid, std::size_t m, CapConvention caps) {
    const double df = grid.discount(m) * grid.forward(m);
    return caps == CapConvention::literal ? grid.market().spot * df : df;
}

PriceBlock butterfly_block(const MarketStructure& grid, CapConvention caps) {
    const std::size_t mk = grid.num_strikes();
    if (mk < 3) throw ValidationError("butterfly constraints need at least three strikes per slice");
    PriceBlock b{ConstraintFamily::butterfly, Sense::greater_equal, {}};
    b.rows.reserve(grid.size());
    for (std::size_t m = 0; m < grid.num_maturities(); ++m) {
        const auto k = grid.slice_strikes(m);
        for (std::size_t i = 1; i < mk; ++i)
            if (!(k[i] > k[i - 1])) throw ValidationError("butterfly constraints need increasing strikes");
        auto node = [&](std::size_t i) { return grid.index(m, i); };
        // strike-zero butterfly (0, K1, K2); the strike-zero call moves to the right-hand side
        b.rows.push_back({{{node(0), -k[1] / (k[1] - k[0])}, {node(1), k[0] / (k[1] - k[0])}},
                          -cap_value(grid, m, caps)});
        for (std::size_t i = 1; i + 1 < mk; ++i) {
            const double right = k[i + 1] - k[i];
            b.rows.push_back({{{node(i - 1), 1.0},
                               {node(i), -(k[i + 1] - k[i - 1]) / right},
                               {node(i + 1), (k[i] - k[i - 1]) / right}},
                              0.0});
        }
        // infinite-strike butterfly: C(K_{M-1}) - C(K_M) >= 0
        b.rows.push_back({{{node(mk - 2), 1.0}, {node(mk - 1), -1.0}}, 0.0});
    }
    return b;
}

PriceBlock calendar_block(const MarketStructure& grid) {
    PriceBlock b{ConstraintFamily::calendar, Sense::less_equal, {}};
    const std::size_t mk = grid.num_strikes();
    for (std::size_t m = 0; m + 1 < grid.num_maturities(); ++m) {
        const double ratio =
            (grid.discount(m + 1) * grid.forward(m + 1)) / (grid.discount(m) * grid.forward(m));
        for (std::size_t i = 0; i < mk; ++i)
            b.rows.push_back({{{grid.index(m, i), ratio}, {grid.index(m + 1, i), -1.0}}, 0.0});
    }
    return b;
}

PriceBlock vertical_upper_block(const MarketStructure& grid, CapConvention caps) {
    PriceBlock b{ConstraintFamily::vertical_upper, Sense::less_equal, {}};
    for (std::size_t m = 0; m < grid.num_maturities(); ++m) {
        b.rows.push_back({{{grid.index(m, 0), 1.0}}, cap_value(grid, m, caps)});
        for (std::size_t i = 1; i < grid.num_strikes(); ++i)
            b.rows.push_back({{{grid.index(m, i), 1.0}, {grid.index(m, i - 1), -1.0}}, 0.0});
    }
    return b;
}

PriceBlock vertical_lower_block(const MarketStructure& grid) {
    PriceBlock b{ConstraintFamily::vertical_lower, Sense::less_equal, {}};
    for (std::size_t m = 0; m < grid.num_maturities(); ++m) {
        const auto k = grid.slice_strikes(m);
        const double d = grid.discount(m);
        b.rows.push_back({{{grid.index(m, 0), -1.0}}, -d * std::max(grid.forward(m) - k[0], 0.0)});
        for (std::size_t i = 1; i < grid.num_strikes(); ++i)
            b.rows.push_back({{{grid.index(m, i), -1.0}, {grid.index(m, i - 1), 1.0}}, d * (k[i] - k[i - 1])});
    }
    return b;
}

PriceBlock bound_block(const MarketStructure& grid) {
    const std::size_t last = grid.num_strikes() - 1;
    const double floor = std::max(grid.forward(0) - grid.strike(0, last), 0.0);
    return {ConstraintFamily::bound, Sense::greater_equal, {{{{grid.index(0, last), 1.0}}, floor}}};
}

ConstraintFamily ConstraintSystem::family_of(std::size_t row) const {
    for (const RowRange& r : blocks)
        if (row >= r.begin && row < r.end) return r.family;
    throw DomainError("row outside the constraint system");
}

namespace {

PriceBlock relax(const PriceBlock& b, const MarketStructure& grid) {
    PriceBlock out{b.family, b.sense, {}};
    const std::size_t mk = grid.num_strikes();
    for (const PriceRow& r : b.rows) {
        const bool inside = std::all_of(r.terms.begin(), r.terms.end(), [&](const auto& t) {
            return grid.in_quoted_domain(t.first / mk, t.first % mk);
        });
        if (inside) out.rows.push_back(r);
    }
    return out;
}

}  // namespace

ConstraintSystem assemble(const MarketStructure& grid, const BasisMatrix& q, const QuoteSet& quotes,
                          const ToleranceSpec& tol, const NoArbitrageOptions& opts) {
    if (q.rows() != grid.size())
        throw ConsistencyError(fmt::format("basis has {} rows, grid has {} nodes", q.rows(), grid.size()));
    if (!(tol.epsilon >= 0.0) && tol.mode != ToleranceMode::bid_ask)
        throw DomainError("fit tolerance must be nonnegative");

    ConstraintSystem cs;
    std::vector<PriceBlock> blocks = {butterfly_block(grid, opts.caps), calendar_block(grid),
                                      vertical_upper_block(grid, opts.caps), vertical_lower_block(grid)};
    for (PriceBlock& b : blocks) {
        b = b.as_less_equal();
        if (opts.relax_outside_quoted) b = relax(b, grid);
    }
    blocks.push_back(bound_block(grid).as_less_equal());

    std::size_t total = 0;
    for (const PriceBlock& b : blocks) total += b.rows.size();
    const auto ncols = q.values.cols();
    cs.l = Matrix::Zero(static_cast<Eigen::Index>(total), ncols);
    cs.j.resize(static_cast<Eigen::Index>(total));

    std::size_t row = 0;
    for (PriceBlock& b : blocks) {
        const std::size_t begin = row;
        for (const PriceRow& r : b.rows) {
            std::span<double> out(cs.l.row(static_cast<Eigen::Index>(row)).data(), static_cast<std::size_t>(ncols));
            for (const auto& [node, coef] : r.terms) {
                const double* src = q.values.row(static_cast<Eigen::Index>(node)).data();
                kernels::axpy(coef, std::span<const double>(src, static_cast<std::size_t>(ncols)), out);
            }
            cs.j(static_cast<Eigen::Index>(row)) = r.rhs;
            ++row;
        }
        cs.blocks.push_back({b.family, begin, row});
        cs.price_blocks.push_back(std::move(b));
    }

    cs.fit = fit_submatrix(q, grid, quotes);
    cs.tolerance = tol;
    cs.target = cs.fit.mid;
    const auto n = cs.fit.mid.size();
    cs.epsilon.resize(n);
    cs.fit_lower.resize(n);
    cs.fit_upper.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (tol.mode) {
            case ToleranceMode::relative: cs.epsilon(i) = tol.scale * tol.epsilon * std::abs(cs.target(i)); break;
            case ToleranceMode::absolute: cs.epsilon(i) = tol.scale * tol.epsilon; break;
            case ToleranceMode::bid_ask: cs.epsilon(i) = 0.5 * tol.scale * (cs.fit.ask(i) - cs.fit.bid(i)); break;
        }
        if (tol.mode == ToleranceMode::bid_ask) {
            cs.fit_lower(i) = cs.target(i) - tol.scale * (cs.target(i) - cs.fit.bid(i));
            cs.fit_upper(i) = cs.target(i) + tol.scale * (cs.fit.ask(i) - cs.target(i));
        } else {
            cs.fit_lower(i) = cs.target(i) - cs.epsilon(i);
            cs.fit_upper(i) = cs.target(i) + cs.epsilon(i);
        }
    }
    return cs;
}

// ---------------------------------------------------------------- dump

namespace {

void write_matrix(std::ostream& out, const char* tag, const Matrix& m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << fmt::format("{:.17g}", m(i, c));
        out << '\n';
    }
}

void write_vector(std::ostream& out, const char* tag, const Vector& v) {
    out << tag << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt::format("{:.17g}", v(i)) << '\n';
}

void expect(std::istream& in, const char* tag) {
    std::string t;
    if (!(in >> t) || t != tag) throw ParseError(std::string("expected section ") + tag);
}

Matrix read_matrix(std::istream& in, const char* tag) {
    expect(in, tag);
    Eigen::Index r = 0, c = 0;
    if (!(in >> r >> c)) throw ParseError(std::string("bad dimensions for ") + tag);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k)
            if (!(in >> m(i, k))) throw ParseError(std::string("truncated section ") + tag);
    return m;
}

Vector read_vector(std::istream& in, const char* tag) {
    expect(in, tag);
    Eigen::Index n = 0;
    if (!(in >> n)) throw ParseError(std::string("bad length for ") + tag);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(in >> v(i))) throw ParseError(std::string("truncated section ") + tag);
    return v;
}

}  // namespace

void write_system(std::ostream& out, const ConstraintSystem& cs) {
    out << "l1surface-system 1\n";
    write_matrix(out, "L", cs.l);
    write_vector(out, "J", cs.j);
    write_matrix(out, "A", cs.fit.a);
    write_vector(out, "LOWER", cs.fit_lower);
    write_vector(out, "UPPER", cs.fit_upper);
    out << "BLOCKS " << cs.blocks.size() << '\n';
    for (const RowRange& r : cs.blocks) out << family_name(r.family) << ' ' << r.begin << ' ' << r.end << '\n';
}

ConstraintSystem read_system(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "l1surface-system" || version != 1)
        throw ParseError("not an l1surface system dump");
    ConstraintSystem cs;
    cs.l = read_matrix(in, "L");
    cs.j = read_vector(in, "J");
    cs.fit.a = read_matrix(in, "A");
    cs.fit_lower = read_vector(in, "LOWER");
    cs.fit_upper = read_vector(in, "UPPER");
    cs.target = 0.5 * (cs.fit_lower + cs.fit_upper);
    cs.epsilon = 0.5 * (cs.fit_upper - cs.fit_lower);
    expect(in, "BLOCKS");
    std::size_t n = 0;
    in >> n;
    for (std::size_t i = 0; i < n; ++i) {
        std::string name;
        RowRange r{ConstraintFamily::butterfly, 0, 0};
        if (!(in >> name >> r.begin >> r.end)) throw ParseError("truncated block list");
        bool found = false;
        for (std::size_t f = 0; f < kConstraintFamilyCount; ++f) {
            if (family_name(static_cast<ConstraintFamily>(f)) == name) {
                r.family = static_cast<ConstraintFamily>(f);
                found = true;
            }
        }
        if (!found) throw ParseError("unknown constraint family " + name);
        cs.blocks.push_back(r);
    }
    return cs;
}

}  // namespace l1surface
