#pragma once

#include <functional>
#include <vector>

namespace levygreen {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    long evals = 0;
    bool converged = true;
};

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Cached Gauss-Legendre rule with n nodes.
const GaussRule& gauss_legendre(int n);

// Fixed composite Gauss-Legendre over `panels` equal panels.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int panels, int order = 16);

// Adaptive Gauss-Kronrod (7/15) with global error control.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol = 1e-10, int max_intervals = 2000);

// Tanh-sinh quadrature for integrable endpoint singularities. The integrand
// receives the distances to both ends (da = x - a, db = b - x), each
// computed without cancellation.
using EndpointIntegrand = std::function<double(double da, double db)>;
QuadResult integrate_tanh_sinh(const EndpointIntegrand& f, double a, double b, double rel_tol = 1e-10,
                               int max_level = 9);

// Integral over [a, inf) of f(x); the integrand receives x and x - a.
QuadResult integrate_to_infinity(const std::function<double(double x, double dx)>& f, double a,
                                 double rel_tol = 1e-10, int max_level = 10);

}  // namespace levygreen
