#pragma once

namespace levygreen {

// Riesz constant A(rho, d) = Gamma((d-rho)/2) / (pi^{d/2} 2^rho |Gamma(rho/2)|).
double stable_constant(double rho, int d);

double sphere_area(int d);  // surface measure of the unit sphere in R^d
double ball_volume(int d);

double log_beta(double a, double b);

// Regularized incomplete beta I_x(a,b). `xc` must equal 1 - x; passing it
// separately keeps precision when x is close to one.
double ibeta(double a, double b, double x, double xc);
double ibeta(double a, double b, double x);

// 1 - I_x(a,b), accurate in the upper tail.
double ibetac(double a, double b, double x, double xc);

// Inverse of p -> I_x(a,b) on (0,1).
double ibeta_inv(double a, double b, double p);

}  // namespace levygreen
