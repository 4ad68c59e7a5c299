#pragma once

namespace bifrail {

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x),
// a > 0, x >= 0. Series for x < a+1, continued fraction otherwise;
// absolute accuracy target 1e-12.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// ln Q(a,x), stable for large x where Q underflows.
double log_gamma_q(double a, double x);

// Upper tail P[X > x] of a chi-square with df degrees of freedom.
double chi_square_upper_tail(double x, int df);

// z with Phi(z) = p, p in (0,1). Used for Wald interval half-widths.
double normal_quantile(double p);

}  // namespace bifrail
