#include "l1surface/black_scholes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace l1surface::bs {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2; }

double call_price(double spot, double strike, double maturity, double rate, double dividend,
                  double sigma) {
    const double df_q = std::exp(-dividend * maturity);
    const double df_r = std::exp(-rate * maturity);
    const double vol_sqrt_t = sigma * std::sqrt(maturity);
    if (vol_sqrt_t <= 0.0) return std::max(spot * df_q - strike * df_r, 0.0);
    if (strike <= 0.0) return spot * df_q - strike * df_r;
    const double d1 =
        (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * maturity) / vol_sqrt_t;
    const double d2 = d1 - vol_sqrt_t;
    return spot * df_q * norm_cdf(d1) - strike * df_r * norm_cdf(d2);
}

double vega(double spot, double strike, double maturity, double rate, double dividend,
            double sigma) {
    const double vol_sqrt_t = sigma * std::sqrt(maturity);
    if (vol_sqrt_t <= 0.0 || strike <= 0.0) return 0.0;
    const double d1 =
        (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * maturity) / vol_sqrt_t;
    return spot * std::exp(-dividend * maturity) * norm_pdf(d1) * std::sqrt(maturity);
}

}  // namespace l1surface::bs
