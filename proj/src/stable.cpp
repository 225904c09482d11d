#include "levygreen/stable.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"

namespace levygreen {

namespace {

// Large-argument expansion of the density at t = 1.
double density_series(double u, double alpha, int d)
{
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    const double lu = std::log(u);
    for (int n = 1; n <= 400; ++n) {
        const double na = n * alpha;
        const double s = std::sin(0.5 * kPi * na);
        const double lt = na * std::log(2.0) + std::lgamma(1.0 + 0.5 * na) + std::lgamma(0.5 * (d + na))
            - std::lgamma(n + 1.0) - (0.5 * d + 1.0) * std::log(kPi) - (d + na) * lu;
        const double mag = std::exp(lt);
        if (mag > prev && n > 2)
            break;  // asymptotic regime: stop at the smallest term
        const double term = (n % 2 == 1 ? 1.0 : -1.0) * s * mag;
        sum += term;
        prev = mag;
        if (mag < 1e-18 * std::fabs(sum))
            break;
    }
    return sum;
}

double radial_kernel(int d, double k, double r)
{
    switch (d) {
    case 1:
        return std::cos(k * r);
    case 2:
        return std::cyl_bessel_j(0.0, k * r);
    default: {
        const double s = k * r;
        return s < 1e-8 ? 1.0 - s * s / 6.0 : std::sin(s) / s;
    }
    }
}

}  // namespace

double stable_density_radial(double t, double r, double alpha, int d)
{
    if (!(t > 0.0))
        throw std::domain_error("stable_density: t must be positive");
    const double scale = std::pow(t, 1.0 / alpha);
    const double u = r / scale;
    if (u > 10.0)
        return std::pow(t, -d / alpha) * density_series(u, alpha, d);
    // Inverse transform: p = (2pi)^{-d} S_{d-1} int k^{d-1} kern(kr) exp(-t k^alpha) dk,
    // with kern the spherical average of cos.
    const double norm = sphere_area(d) / std::pow(2.0 * kPi, d);
    if (u < 1e-10)
        return norm * std::tgamma(d / alpha) / (alpha * std::pow(t, d / alpha));
    const double K = std::pow(42.0 / t, 1.0 / alpha);
    auto f = [&](double k) { return std::pow(k, d - 1) * radial_kernel(d, k, r) * std::exp(-t * std::pow(k, alpha)); };
    const double k1 = std::min(K, 0.5 * kPi / r);
    const QuadResult head = integrate_tanh_sinh([&](double da, double) { return f(da); }, 0.0, k1, 1e-13);
    double total = head.value;
    if (K > k1) {
        const int panels = std::max(16, static_cast<int>(std::ceil((K - k1) * r / (0.5 * kPi))));
        total += integrate_gl(f, k1, K, panels, 20);
    }
    return norm * total;
}

double stable_density(double t, const Point& x, double alpha)
{
    return stable_density_radial(t, x.norm(), alpha, static_cast<int>(x.size()));
}

double potential_kernel_radial(double r, double alpha, int d)
{
    if (!(d > alpha))
        throw std::domain_error("potential_kernel: requires d > alpha");
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::domain_error("potential_kernel: alpha must lie in (0, 2)");
    if (r == 0.0)
        throw std::domain_error("potential_kernel: x = 0");
    return stable_constant(alpha, d) * std::pow(r, alpha - d);
}

double potential_kernel(const Point& x, double alpha)
{
    return potential_kernel_radial(x.norm(), alpha, static_cast<int>(x.size()));
}

namespace {

void check_green_range(int d, double alpha)
{
    if (!(alpha > 0.0 && alpha < 2.0) || !(d > alpha || (d == 1 && alpha > 1.0)))
        throw std::domain_error("ball_green: requires d > alpha, or d = 1 < alpha");
}

double green_kappa(int d, double alpha)
{
    const double g = std::tgamma(0.5 * alpha);
    return std::tgamma(0.5 * d) / (std::pow(2.0, alpha) * std::pow(kPi, 0.5 * d) * g * g);
}

// kappa * dist^{alpha-d} * int_0^w s^{alpha/2-1} (1+s)^{-d/2} ds on the unit ball.
double unit_green(double dist, double w, double alpha, int d)
{
    const double a = 0.5 * alpha, b = 0.5 * (d - alpha);
    if (b < 0.0) {
        // d = 1 < alpha: the integral grows like w^{a - 1/2}; beyond w = 1
        // it is taken in u = 1/s with the leading power split off.
        const auto head = [a](double c) {
            return integrate_tanh_sinh(
                       [a, c](double t, double) { return std::pow(t, a - 1.0) / std::sqrt(1.0 + c * t); }, 0.0, 1.0,
                       1e-13)
                .value;
        };
        double inc;
        if (w <= 1.0) {
            inc = std::pow(w, a) * head(w);
        } else {
            const double tail = integrate_tanh_sinh(
                                    [a, w](double du, double) {
                                        const double u = 1.0 / w + du;
                                        return std::pow(u, -a - 0.5) * (1.0 / std::sqrt(1.0 + u) - 1.0);
                                    },
                                    1.0 / w, 1.0, 1e-13)
                                    .value;
            inc = head(1.0) + (std::pow(w, a - 0.5) - 1.0) / (a - 0.5) + tail;
        }
        return green_kappa(d, alpha) * std::pow(dist, alpha - d) * inc;
    }
    const double x = w / (1.0 + w), xc = 1.0 / (1.0 + w);
    const double inc = std::exp(log_beta(a, b)) * ibeta(a, b, x, xc);
    return green_kappa(d, alpha) * std::pow(dist, alpha - d) * inc;
}

}  // namespace

double ball_green(const Point& x, const Point& y, double r, double alpha)
{
    const int d = static_cast<int>(x.size());
    check_green_range(d, alpha);
    const double dist = (x - y).norm();
    if (dist == 0.0)
        throw std::domain_error("ball_green: coincident points");
    const double r2 = r * r;
    const double ax = r2 - x.squaredNorm(), ay = r2 - y.squaredNorm();
    if (ax <= 0.0 || ay <= 0.0)
        return 0.0;
    // Evaluated on the unit ball and rescaled.
    const double w = ax * ay / (r2 * dist * dist);
    return std::pow(r, alpha - d) * unit_green(dist / r, w, alpha, d);
}

double ball_green_center(double s, double r, double alpha, int d)
{
    check_green_range(d, alpha);
    if (s >= r)
        return 0.0;
    if (s == 0.0)
        throw std::domain_error("ball_green: coincident points");
    const double w = (r * r - s * s) / (s * s);
    return std::pow(r, alpha - d) * unit_green(s / r, w, alpha, d);
}

double ball_poisson_kernel(const Point& x, const Point& z, double r, double alpha)
{
    const int d = static_cast<int>(x.size());
    const double r2 = r * r;
    const double ax = r2 - x.squaredNorm(), az = z.squaredNorm() - r2;
    if (ax <= 0.0 || az <= 0.0)
        return 0.0;
    const double c = std::tgamma(0.5 * d) * std::pow(kPi, -0.5 * d - 1.0) * std::sin(0.5 * kPi * alpha);
    return c * std::pow(ax / az, 0.5 * alpha) * std::pow((x - z).norm(), -d);
}

double ball_mean_exit_center(double r, double alpha, int d)
{
    return std::tgamma(0.5 * d) * std::pow(r * r, 0.5 * alpha)
        / (std::pow(2.0, alpha) * std::tgamma(1.0 + 0.5 * alpha) * std::tgamma(0.5 * (d + alpha)));
}

double ball_mean_exit(const Point& x, double r, double alpha)
{
    const int d = static_cast<int>(x.size());
    const double a = r * r - x.squaredNorm();
    if (a <= 0.0)
        return 0.0;
    return std::tgamma(0.5 * d) * std::pow(a, 0.5 * alpha)
        / (std::pow(2.0, alpha) * std::tgamma(1.0 + 0.5 * alpha) * std::tgamma(0.5 * (d + alpha)));
}

double ball_exit_radial_cdf(double rho, double r, double alpha)
{
    if (rho <= r)
        return 0.0;
    const double u = (r / rho) * (r / rho);
    return ibetac(0.5 * alpha, 1.0 - 0.5 * alpha, u, (rho - r) * (rho + r) / (rho * rho));
}

Point uniform_direction(int d, Rng& rng)
{
    if (d == 1)
        return make_point({(rng() >> 63) ? 1.0 : -1.0});
    std::normal_distribution<double> g(0.0, 1.0);
    Point v(d);
    double n2;
    do {
        for (int i = 0; i < d; ++i)
            v(i) = g(rng);
        n2 = v.squaredNorm();
    } while (n2 < 1e-300);
    return v / std::sqrt(n2);
}

Point ball_exit_sample_center(int d, double r, double alpha, Rng& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double p;
    do {
        p = unif(rng);
    } while (p <= 0.0);
    const double u = ibeta_inv(0.5 * alpha, 1.0 - 0.5 * alpha, p);
    return (r / std::sqrt(u)) * uniform_direction(d, rng);
}

Point ball_exit_sample(const Point& x, double r, double alpha, Rng& rng)
{
    const int d = static_cast<int>(x.size());
    Point pos = x;
    // Exact walk through maximal inscribed balls until B(0, r) is left.
    for (int step = 0; step < 100000; ++step) {
        const double rad = r - pos.norm();
        if (rad <= 0.0)
            return pos;
        if (rad < 1e-12 * r) {
            // Numerically on the sphere: one more centred exit from a tiny ball.
            pos += ball_exit_sample_center(d, 1e-12 * r, alpha, rng);
            if (pos.norm() >= r)
                return pos;
            continue;
        }
        pos += ball_exit_sample_center(d, rad, alpha, rng);
        if (pos.norm() >= r)
            return pos;
    }
    throw NumericalError("ball_exit_sample: step budget exceeded");
}

GreenProvider ball_green_provider(const Domain& ball, double alpha)
{
    Point c;
    double r = 0.0;
    if (const auto* b = std::get_if<Ball>(&ball.shape())) {
        c = b->center;
        r = b->radius;
    } else if (const auto* iv = std::get_if<Interval>(&ball.shape())) {
        c = make_point({0.5 * (iv->a + iv->b)});
        r = 0.5 * (iv->b - iv->a);
    } else {
        throw std::invalid_argument("ball_green_provider: domain is not a ball");
    }
    return [c, r, alpha](const Point& x, const Point& y) { return ball_green(x - c, y - c, r, alpha); };
}

PhiTilde::PhiTilde(const Domain& domain, double alpha, GreenProvider green)
    : domain_(domain), alpha_(alpha), green_(std::move(green))
{
    const int d = domain.dim();
    if (!(d > alpha))
        throw std::domain_error("phi_tilde: requires d > alpha");
    cap_ = stable_constant(alpha, d) * std::pow(domain.lipschitz().r0, alpha - d);
}

double PhiTilde::operator()(const Point& x) const
{
    const Point& x0 = domain_.reference().x0;
    if ((x - x0).norm() == 0.0)
        return cap_;
    std::vector<double> key(x.data(), x.data() + x.size());
    {
        std::shared_lock lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
    }
    const double v = std::min(green_(x, x0), cap_);
    std::unique_lock lock(mu_);
    cache_.emplace(std::move(key), v);
    return v;
}

double green_envelope(const Domain& domain, const Point& x, const Point& y, double alpha, const PhiTilde* phi)
{
    const double dist = (x - y).norm();
    if (dist == 0.0)
        throw std::domain_error("green_envelope: requires x != y");
    const int d = domain.dim();
    if (d > alpha) {
        if (!phi)
            throw std::invalid_argument("green_envelope: phi_tilde required for d > alpha");
        const Point a = interpolation_point(domain, x, y);
        const double pa = (*phi)(a);
        return (*phi)(x) * (*phi)(y) / (pa * pa) * std::pow(dist, alpha - d);
    }
    const double dd = domain.dist_to_boundary(x) * domain.dist_to_boundary(y);
    if (alpha == 1.0)
        return std::log(std::sqrt(dd) / dist + 1.0);
    return std::min(std::pow(dd, 0.5 * (alpha - 1.0)), std::pow(dd, 0.5 * alpha) / dist);
}

}  // namespace levygreen
