#pragma once

// Standard mollifier phi_s(x) = K exp(1 / (x^2 - 1)) on (-1, 1), its scaled
// family phi^alpha(x) = phi_s(x / alpha) / alpha, and mollification of
// piecewise-linear curves.

#include <cstddef>
#include <span>
#include <vector>

namespace l1surface {

namespace mollifier {

/// K such that phi_s integrates to one.
double normalization();

/// phi_s(x); zero for |x| >= 1.
double standard(double x);

/// phi^alpha(x). Throws DomainError for alpha <= 0.
double scaled(double x, double alpha);

}  // namespace mollifier

/// Continuous piecewise-linear curve through (x_i, y_i).
class PiecewiseLinear {
public:
    enum class Extension {
        constant,        // hold the end values
        linear,          // continue the end segments
        linear_floored,  // continue the end segments, clipped below by the floor line
    };

    /// Throws DomainError unless x is strictly increasing with at least two points.
    PiecewiseLinear(std::vector<double> x, std::vector<double> y, Extension ext = Extension::constant);

    double operator()(double x) const;

    /// Floor used by linear_floored: max(intercept + slope * x, 0). Defaults to zero;
    /// for a call slice pass (D F, -D) to floor at the discounted intrinsic value.
    void set_floor(double intercept, double slope) {
        floor_intercept_ = intercept;
        floor_slope_ = slope;
    }

    std::span<const double> x() const { return x_; }
    std::span<const double> y() const { return y_; }
    Extension extension() const { return ext_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    Extension ext_;
    double floor_intercept_ = 0.0;
    double floor_slope_ = 0.0;
};

/// Quadrature intervals across the support [-alpha, alpha] (step alpha / 100).
inline constexpr std::size_t kMollifierIntervals = 200;

/// (f * phi^alpha)(x) at each point, by composite trapezoid quadrature whose
/// weights are renormalized to sum to one. Throws DomainError for alpha <= 0.
std::vector<double> mollify(const PiecewiseLinear& f, double alpha, std::span<const double> points);

}  // namespace l1surface
