#include "l1surface/poly_basis.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "l1surface/error.hpp"
#include "l1surface/kernels.hpp"

namespace l1surface {

namespace {

constexpr double kNodeTol = 1e-10;

std::vector<double> distinct_sorted(std::span<const double> nodes) {
    std::vector<double> s(nodes.begin(), nodes.end());
    std::sort(s.begin(), s.end());
    std::vector<double> out;
    for (double x : s) {
        if (!std::isfinite(x)) throw RankError("non-finite node");
        if (out.empty() || std::abs(x - out.back()) > kNodeTol * std::max(std::abs(x), std::abs(out.back())))
            out.push_back(x);
    }
    return out;
}

}  // namespace

OrthonormalFamily::OrthonormalFamily(std::span<const double> nodes, std::size_t order_count)
    : nodes_(distinct_sorted(nodes)) {
    const std::size_t n = nodes_.size();
    if (order_count == 0) throw RankError("a family needs at least one order");
    if (order_count > n)
        throw RankError(fmt::format("{} orders requested on {} distinct nodes", order_count, n));

    center_ = 0.5 * (nodes_.front() + nodes_.back());
    half_width_ = 0.5 * (nodes_.back() - nodes_.front());
    if (!(half_width_ > 0.0)) half_width_ = 1.0;  // single node, N == 1
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = (nodes_[i] - center_) / half_width_;

    // Column-major scratch so each polynomial is contiguous.
    std::vector<std::vector<double>> p(order_count, std::vector<double>(n));
    const double p0 = 1.0 / std::sqrt(static_cast<double>(n));
    std::fill(p[0].begin(), p[0].end(), p0);
    b_.push_back(std::sqrt(static_cast<double>(n)));

    std::vector<double> tp(n);
    for (std::size_t k = 0; k + 1 < order_count; ++k) {
        for (std::size_t i = 0; i < n; ++i) tp[i] = t[i] * p[k][i];
        const double ak = kernels::dot(tp, p[k]);
        a_.push_back(ak);
        std::vector<double>& next = p[k + 1];
        for (std::size_t i = 0; i < n; ++i) next[i] = tp[i] - ak * p[k][i];
        if (k > 0) kernels::axpy(-b_[k], p[k - 1], next);
        // re-orthogonalize against every earlier polynomial
        for (std::size_t j = 0; j <= k; ++j) kernels::axpy(-kernels::dot(next, p[j]), p[j], next);
        const double norm = std::sqrt(kernels::dot(next, next));
        if (!(norm > 1e-12)) throw RankError(fmt::format("degenerate nodes: degree {} vanishes on the nodes", k + 1));
        for (double& v : next) v /= norm;
        b_.push_back(norm);
    }
    values_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(order_count));
    for (std::size_t d = 0; d < order_count; ++d)
        for (std::size_t i = 0; i < n; ++i) values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = p[d][i];
}

std::optional<std::size_t> OrthonormalFamily::node_index(double x) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x - kNodeTol * std::abs(x));
    for (; it != nodes_.end() && *it <= x + kNodeTol * std::abs(x); ++it)
        if (std::abs(*it - x) <= kNodeTol * std::max(std::abs(x), std::abs(*it)))
            return static_cast<std::size_t>(it - nodes_.begin());
    return std::nullopt;
}

double OrthonormalFamily::evaluate(std::size_t degree, double x) const {
    if (degree >= order_count()) throw DomainError("degree outside the family");
    const double t = (x - center_) / half_width_;
    double prev = 0.0;
    double cur = 1.0 / b_[0];
    for (std::size_t k = 0; k < degree; ++k) {
        const double next = ((t - a_[k]) * cur - (k > 0 ? b_[k] * prev : 0.0)) / b_[k + 1];
        prev = cur;
        cur = next;
    }
    return cur;
}

Matrix OrthonormalFamily::gram() const { return values_.transpose() * values_; }

BasisMatrix tensor_matrix(const OrthonormalFamily& fam_t, const OrthonormalFamily& fam_k,
                          const MarketStructure& grid) {
    const std::size_t mt = grid.num_maturities();
    const std::size_t mk = grid.num_strikes();
    const std::size_t nt = fam_t.order_count();
    const std::size_t nk = fam_k.order_count();

    std::vector<std::size_t> t_node(mt);
    for (std::size_t m = 0; m < mt; ++m) {
        auto idx = fam_t.node_index(grid.maturity(m));
        if (!idx) throw ConsistencyError(fmt::format("grid maturity {} is not a node of the maturity family", grid.maturity(m)));
        t_node[m] = *idx;
    }

    BasisMatrix q;
    q.kind = BasisKind::tensor_poly;
    q.block_count = nt;
    q.block_width = nk;
    q.values.resize(static_cast<Eigen::Index>(mt * mk), static_cast<Eigen::Index>(nt * nk));
    for (std::size_t m = 0; m < mt; ++m) {
        for (std::size_t k = 0; k < mk; ++k) {
            const double strike = grid.strike(m, k);
            auto kn = fam_k.node_index(strike);
            if (!kn) throw ConsistencyError(fmt::format("grid strike {} is not a node of the strike family", strike));
            const auto row = static_cast<Eigen::Index>(grid.index(m, k));
            for (std::size_t n = 0; n < nt; ++n) {
                const double pt = fam_t.value(n, t_node[m]);
                for (std::size_t j = 0; j < nk; ++j)
                    q.values(row, static_cast<Eigen::Index>(n * nk + j)) = pt * fam_k.value(j, *kn);
            }
        }
    }
    q.column_weights.resize(nt * nk);
    q.column_labels.resize(nt * nk);
    for (std::size_t n = 0; n < nt; ++n)
        for (std::size_t j = 0; j < nk; ++j) {
            q.column_weights[n * nk + j] = static_cast<double>((n + 1) + (j + 1));
            q.column_labels[n * nk + j] = fmt::format("T{}K{}", n + 1, j + 1);
        }
    return q;
}

BasisMatrix tensor_basis(const MarketStructure& grid, std::size_t order_t, std::size_t order_k) {
    const OrthonormalFamily fam_t(grid.maturities(), order_t);
    const OrthonormalFamily fam_k(grid.strikes(), order_k);
    return tensor_matrix(fam_t, fam_k, grid);
}

FitSystem fit_submatrix(const BasisMatrix& q, const MarketStructure& grid, const QuoteSet& quotes) {
    if (q.rows() != grid.size())
        throw ConsistencyError(fmt::format("basis has {} rows but the grid has {} nodes", q.rows(), grid.size()));
    FitSystem fit;
    const auto n = static_cast<Eigen::Index>(quotes.quotes.size());
    fit.a.resize(n, q.values.cols());
    fit.mid.resize(n);
    fit.bid.resize(n);
    fit.ask.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Quote& qt = quotes.quotes[static_cast<std::size_t>(i)];
        auto row = grid.find_node(qt.maturity, qt.strike);
        if (!row)
            throw ConsistencyError(fmt::format("quote (T={}, K={}) is not a grid node", qt.maturity, qt.strike));
        fit.a.row(i) = q.values.row(static_cast<Eigen::Index>(*row));
        fit.mid(i) = qt.mid;
        fit.bid(i) = qt.bid;
        fit.ask(i) = qt.ask;
        fit.grid_rows.push_back(*row);
    }
    return fit;
}

}  // namespace l1surface
