#pragma once

// Discrete orthonormal polynomials and the tensor basis matrix.
//
// A family is orthonormal under the counting measure on its (deduplicated)
// nodes: sum_t P^i(t) P^j(t) = delta_ij. Families are built by the Stieltjes
// three-term recurrence on nodes mapped affinely onto [-1, 1], with one
// modified Gram-Schmidt pass per step to keep the Gram matrix at identity.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l1surface/linalg.hpp"
#include "l1surface/market_data.hpp"

namespace l1surface {

class OrthonormalFamily {
public:
    /// `order_count` is N: orders 1..N, i.e. degrees 0..N-1. Nodes closer than
    /// 1e-10 (relative) are merged. Throws RankError if N exceeds the number of
    /// distinct nodes.
    OrthonormalFamily(std::span<const double> nodes, std::size_t order_count);

    std::size_t order_count() const { return static_cast<std::size_t>(values_.cols()); }
    std::span<const double> nodes() const { return nodes_; }

    /// Index of `x` among the distinct nodes, or nullopt.
    std::optional<std::size_t> node_index(double x) const;

    /// P^{degree+1} at node `node`.
    double value(std::size_t degree, std::size_t node) const { return values_(node, degree); }
    /// nodes x orders matrix of values.
    const Matrix& values() const { return values_; }

    /// Evaluates P^{degree+1} anywhere via the recurrence.
    double evaluate(std::size_t degree, double x) const;

    /// Recurrence coefficients in the scaled variable t = (x - center) / half_width:
    /// b_{k+1} P_{k+1}(t) = (t - a_k) P_k(t) - b_k P_{k-1}(t).
    std::span<const double> recurrence_a() const { return a_; }
    std::span<const double> recurrence_b() const { return b_; }

    /// Gram matrix sum_nodes P^i P^j.
    Matrix gram() const;

private:
    std::vector<double> nodes_;
    double center_ = 0.0;
    double half_width_ = 1.0;
    std::vector<double> a_;
    std::vector<double> b_;  // b_[0] = sqrt(#nodes) normalizes P_0
    Matrix values_;
};

enum class BasisKind { tensor_poly, per_slice_shape };

/// Evaluation matrix of the basis functions on the fine grid. Row r is grid
/// node r (slice-major), column c is basis function c.
struct BasisMatrix {
    Matrix values;
    std::vector<double> column_weights;
    BasisKind kind = BasisKind::tensor_poly;
    /// Tensor: N_T blocks of N_K columns. Shape: M_T blocks of N_K columns.
    std::size_t block_count = 0;
    std::size_t block_width = 0;
    /// Human-readable column labels (used by the coefficient export).
    std::vector<std::string> column_labels;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// Builds Q with entry P_T^n(T_m) P_K^j(K^{T_m}_k) at row m*M_K + k, column
/// (n-1)*N_K + (j-1); column weight n + j. Throws ConsistencyError if a grid
/// maturity or strike is not a node of the corresponding family.
BasisMatrix tensor_matrix(const OrthonormalFamily& fam_t, const OrthonormalFamily& fam_k,
                          const MarketStructure& grid);

/// Builds both families on the grid (maturities, pooled strikes) and the tensor matrix.
BasisMatrix tensor_basis(const MarketStructure& grid, std::size_t order_t, std::size_t order_k);

/// Fit rows: one per quote, in quote order.
struct FitSystem {
    Matrix a;
    Vector mid;
    Vector bid;
    Vector ask;
    std::vector<std::size_t> grid_rows;
};

/// Extracts the rows of Q at the quoted nodes. Throws ConsistencyError if a
/// quote is not a grid node.
FitSystem fit_submatrix(const BasisMatrix& q, const MarketStructure& grid, const QuoteSet& quotes);

}  // namespace l1surface
