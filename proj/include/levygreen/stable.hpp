#pragma once

#include <functional>
#include <map>
#include <shared_mutex>
#include <vector>

#include "levygreen/geometry.hpp"
#include "levygreen/types.hpp"

namespace levygreen {

using GreenProvider = std::function<double(const Point&, const Point&)>;

// Free transition density of the isotropic stable process.
double stable_density(double t, const Point& x, double alpha);
double stable_density_radial(double t, double r, double alpha, int d);

// U(x) = A(alpha, d) |x|^{alpha - d}, d > alpha.
double potential_kernel(const Point& x, double alpha);
double potential_kernel_radial(double r, double alpha, int d);

// Green function of B(0, r) (closed form for d > alpha; quadrature of the
// same formula for d = 1 < alpha).
double ball_green(const Point& x, const Point& y, double r, double alpha);
// Same for the centred pole: G_{B(0,r)}(0, y) with |y| = s.
double ball_green_center(double s, double r, double alpha, int d);

// Poisson kernel of B(0, r); |x| < r < |z|.
double ball_poisson_kernel(const Point& x, const Point& z, double r, double alpha);

double ball_mean_exit(const Point& x, double r, double alpha);
double ball_mean_exit_center(double r, double alpha, int d);

// P(|X_tau| <= rho) for the walk started at the centre of B(0, r).
double ball_exit_radial_cdf(double rho, double r, double alpha);

// Exit position from B(0, r) started at x (relative to the ball centre).
Point ball_exit_sample(const Point& x, double r, double alpha, Rng& rng);
Point ball_exit_sample_center(int d, double r, double alpha, Rng& rng);

Point uniform_direction(int d, Rng& rng);

// Closed-form stable Green function for a ball domain.
GreenProvider ball_green_provider(const Domain& ball, double alpha);

// Truncated Green function G(x, x0) capped at A(alpha,d) r0^{alpha-d}.
class PhiTilde {
public:
    PhiTilde(const Domain& domain, double alpha, GreenProvider green);
    double operator()(const Point& x) const;
    double cap() const { return cap_; }

private:
    const Domain& domain_;
    double alpha_;
    GreenProvider green_;
    double cap_;
    mutable std::shared_mutex mu_;
    mutable std::map<std::vector<double>, double> cache_;
};

// Constant-free two-sided Green envelope.
double green_envelope(const Domain& domain, const Point& x, const Point& y, double alpha, const PhiTilde* phi);

}  // namespace levygreen
