#pragma once

namespace l1surface::bs {

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal density.
double norm_pdf(double x);

/// European call under Black–Scholes with continuous rate r and dividend yield q.
/// sigma == 0 (or T == 0) returns the discounted intrinsic value.
double call_price(double spot, double strike, double maturity, double rate, double dividend,
                  double sigma);

/// dC/dsigma.
double vega(double spot, double strike, double maturity, double rate, double dividend,
            double sigma);

}  // namespace l1surface::bs
