#include "l1surface/mollifier.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "l1surface/error.hpp"
#include "l1surface/kernels.hpp"

namespace l1surface {

namespace mollifier {

namespace {

double bump(double x) {
    const double x2 = x * x;
    return x2 < 1.0 ? std::exp(1.0 / (x2 - 1.0)) : 0.0;
}

}  // namespace

double normalization() {
    static const double k = [] {
        boost::math::quadrature::tanh_sinh<double> integrator;
        return 1.0 / integrator.integrate(bump, -1.0, 1.0);
    }();
    return k;
}

double standard(double x) { return normalization() * bump(x); }

double scaled(double x, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("mollifier width must be positive");
    return standard(x / alpha) / alpha;
}

}  // namespace mollifier

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y, Extension ext)
    : x_(std::move(x)), y_(std::move(y)), ext_(ext) {
    if (x_.size() < 2 || x_.size() != y_.size())
        throw DomainError("piecewise-linear curve needs at least two points");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw DomainError("piecewise-linear abscissae must increase");
}

double PiecewiseLinear::operator()(double x) const {
    const std::size_t n = x_.size();
    auto segment = [&](std::size_t i, double at) {
        return y_[i] + (y_[i + 1] - y_[i]) * (at - x_[i]) / (x_[i + 1] - x_[i]);
    };
    if (x <= x_.front() || x >= x_.back()) {
        const bool left = x <= x_.front();
        if (ext_ == Extension::constant) return left ? y_.front() : y_.back();
        const double v = left ? segment(0, x) : segment(n - 2, x);
        if (ext_ != Extension::linear_floored) return v;
        return std::max(v, std::max(floor_intercept_ + floor_slope_ * x, 0.0));
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return segment(static_cast<std::size_t>(it - x_.begin()) - 1, x);
}

std::vector<double> mollify(const PiecewiseLinear& f, double alpha, std::span<const double> points) {
    if (!(alpha > 0.0)) throw DomainError("mollification width must be positive");
    constexpr std::size_t n = kMollifierIntervals;
    const double h = 2.0 * alpha / static_cast<double>(n);
    // interior nodes only: the kernel vanishes at +-alpha
    std::vector<double> offsets(n - 1);
    std::vector<double> weights(n - 1);
    double total = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        offsets[j - 1] = -alpha + static_cast<double>(j) * h;
        weights[j - 1] = h * mollifier::scaled(offsets[j - 1], alpha);
        total += weights[j - 1];
    }
    for (double& w : weights) w /= total;

    std::vector<double> out(points.size());
    std::vector<double> samples(n - 1);
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t j = 0; j < samples.size(); ++j) samples[j] = f(points[p] - offsets[j]);
        out[p] = kernels::dot(weights, samples);
    }
    return out;
}

}  // namespace l1surface
