#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "l1surface/error.hpp"
#include "l1surface/lp.hpp"

namespace l1surface {

std::string_view group_name(RowGroup g) {
    switch (g) {
        case RowGroup::fit_upper: return "fit_upper";
        case RowGroup::fit_lower: return "fit_lower";
        case RowGroup::butterfly: return "butterfly";
        case RowGroup::calendar: return "calendar";
        case RowGroup::vertical_upper: return "vertical_upper";
        case RowGroup::vertical_lower: return "vertical_lower";
        case RowGroup::bound: return "bound";
        case RowGroup::other: return "other";
    }
    return "other";
}

RowGroup group_of(ConstraintFamily f) {
    switch (f) {
        case ConstraintFamily::butterfly: return RowGroup::butterfly;
        case ConstraintFamily::calendar: return RowGroup::calendar;
        case ConstraintFamily::vertical_upper: return RowGroup::vertical_upper;
        case ConstraintFamily::vertical_lower: return RowGroup::vertical_lower;
        case ConstraintFamily::bound: return RowGroup::bound;
    }
    return RowGroup::other;
}

std::string_view status_name(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
        case LpStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

void LpProblem::validate() const {
    if (g.rows() != h.size() || g.cols() != cost.size())
        throw DomainError(fmt::format("LP dimensions disagree: G is {}x{}, h has {}, c has {}", g.rows(), g.cols(),
                                      h.size(), cost.size()));
    if (provenance.size() != num_rows()) throw DomainError("LP provenance does not cover every row");
    if (!g.allFinite() || !h.allFinite() || !cost.allFinite()) throw DomainError("LP data must be finite");
}

LpProblem to_lp(const ConstraintSystem& cs, std::span<const double> weights) {
    const auto n = cs.fit.a.cols();
    if (static_cast<Eigen::Index>(weights.size()) != n)
        throw DomainError(fmt::format("{} weights for {} coefficients", weights.size(), n));
    for (double w : weights)
        if (!(w > 0.0)) throw DomainError("weights must be strictly positive");
    if (cs.l.rows() > 0 && cs.l.cols() != n) throw ConsistencyError("fit and no-arbitrage matrices disagree");

    const auto nfit = cs.fit.a.rows();
    const auto nl = cs.l.rows();
    LpProblem lp;
    lp.cost.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) lp.cost(i) = lp.cost(n + i) = weights[static_cast<std::size_t>(i)];

    // Rows on x; the u/v split doubles the columns as [M, -M].
    Matrix m(2 * nfit + nl, n);
    m.topRows(nfit) = cs.fit.a;
    m.middleRows(nfit, nfit) = -cs.fit.a;
    if (nl > 0) m.bottomRows(nl) = cs.l;
    lp.g.resize(m.rows(), 2 * n);
    lp.g.leftCols(n) = m;
    lp.g.rightCols(n) = -m;

    lp.h.resize(m.rows());
    lp.h.head(nfit) = cs.fit_upper;
    lp.h.segment(nfit, nfit) = -cs.fit_lower;
    if (nl > 0) lp.h.tail(nl) = cs.j;

    lp.provenance.assign(static_cast<std::size_t>(nfit), RowGroup::fit_upper);
    lp.provenance.insert(lp.provenance.end(), static_cast<std::size_t>(nfit), RowGroup::fit_lower);
    for (Eigen::Index r = 0; r < nl; ++r) lp.provenance.push_back(group_of(cs.family_of(static_cast<std::size_t>(r))));
    return lp;
}

double max_violation(const LpProblem& lp, const Vector& z) {
    double worst = 0.0;
    if (z.size() > 0) worst = std::max(worst, -z.minCoeff());
    if (lp.g.rows() > 0) worst = std::max(worst, (lp.g * z - lp.h).maxCoeff());
    return worst;
}

Recovered recover_x(const LpSolution& sol) {
    if (sol.status != LpStatus::optimal)
        throw StateError(fmt::format("cannot recover coefficients from a {} solution", status_name(sol.status)));
    if (sol.values.size() % 2 != 0) throw StateError("solution is not a (u, v) split");
    Recovered r;
    const Vector u = sol.u();
    const Vector v = sol.v();
    r.x = u - v;
    for (Eigen::Index i = 0; i < u.size(); ++i) r.complementarity = std::max(r.complementarity, std::min(u(i), v(i)));
    return r;
}

void write_lp(std::ostream& out, const LpProblem& lp) {
    out << "l1surface-lp 1\n";
    out << "COST " << lp.cost.size() << '\n';
    for (Eigen::Index i = 0; i < lp.cost.size(); ++i) out << fmt::format("{:.17g}", lp.cost(i)) << '\n';
    out << "G " << lp.g.rows() << ' ' << lp.g.cols() << '\n';
    for (Eigen::Index i = 0; i < lp.g.rows(); ++i) {
        for (Eigen::Index c = 0; c < lp.g.cols(); ++c) out << (c ? " " : "") << fmt::format("{:.17g}", lp.g(i, c));
        out << '\n';
    }
    out << "H " << lp.h.size() << '\n';
    for (Eigen::Index i = 0; i < lp.h.size(); ++i) out << fmt::format("{:.17g}", lp.h(i)) << '\n';
    out << "PROVENANCE " << lp.provenance.size() << '\n';
    for (RowGroup g : lp.provenance) out << group_name(g) << '\n';
}

LpProblem read_lp(std::istream& in) {
    auto expect = [&](const char* tag) {
        std::string t;
        if (!(in >> t) || t != tag) throw ParseError(std::string("expected section ") + tag);
    };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "l1surface-lp" || version != 1) throw ParseError("not an LP dump");
    LpProblem lp;
    Eigen::Index n = 0, r = 0, c = 0;
    expect("COST");
    in >> n;
    lp.cost.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) in >> lp.cost(i);
    expect("G");
    in >> r >> c;
    lp.g.resize(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k) in >> lp.g(i, k);
    expect("H");
    in >> n;
    lp.h.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) in >> lp.h(i);
    expect("PROVENANCE");
    in >> n;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::string name;
        in >> name;
        RowGroup g = RowGroup::other;
        for (int k = 0; k <= static_cast<int>(RowGroup::other); ++k)
            if (group_name(static_cast<RowGroup>(k)) == name) g = static_cast<RowGroup>(k);
        lp.provenance.push_back(g);
    }
    if (!in) throw ParseError("truncated LP dump");
    lp.validate();
    return lp;
}

}  // namespace l1surface
