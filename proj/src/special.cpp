#include "levygreen/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "levygreen/types.hpp"

namespace levygreen {

double stable_constant(double rho, int d)
{
    if (rho == 0.0 || rho >= d)
        throw std::domain_error("stable_constant: need rho != 0 and rho < d");
    return std::tgamma((d - rho) / 2.0)
        / (std::pow(kPi, d / 2.0) * std::pow(2.0, rho) * std::fabs(std::tgamma(rho / 2.0)));
}

double sphere_area(int d)
{
    return 2.0 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
}

double ball_volume(int d)
{
    return std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double log_beta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace {

double beta_cf(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 1000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return h;
    }
    throw NumericalError("ibeta: continued fraction did not converge");
}

// Returns the lower or upper tail, whichever the continued fraction
// delivers directly, and reports which one through `upper`.
double ibeta_raw(double a, double b, double x, double xc, bool& upper)
{
    const double lf = a * std::log(x) + b * std::log(xc) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        upper = false;
        return std::exp(lf) * beta_cf(a, b, x) / a;
    }
    upper = true;
    return std::exp(lf) * beta_cf(b, a, xc) / b;
}

}  // namespace

double ibeta(double a, double b, double x, double xc)
{
    if (!(a > 0.0 && b > 0.0))
        throw std::domain_error("ibeta: parameters must be positive");
    if (x <= 0.0)
        return 0.0;
    if (xc <= 0.0)
        return 1.0;
    bool upper = false;
    const double v = ibeta_raw(a, b, x, xc, upper);
    return upper ? 1.0 - v : v;
}

double ibeta(double a, double b, double x)
{
    return ibeta(a, b, x, 1.0 - x);
}

double ibetac(double a, double b, double x, double xc)
{
    if (x <= 0.0)
        return 1.0;
    if (xc <= 0.0)
        return 0.0;
    bool upper = false;
    const double v = ibeta_raw(a, b, x, xc, upper);
    return upper ? v : 1.0 - v;
}

double ibeta_inv(double a, double b, double p)
{
    if (p <= 0.0)
        return 0.0;
    if (p >= 1.0)
        return 1.0;
    const double lb = log_beta(a, b);
    // Tail-based starting point, then safeguarded Newton.
    double x;
    const double xl = std::exp((std::log(p * a) + lb) / a);
    const double xu = 1.0 - std::exp((std::log((1.0 - p) * b) + lb) / b);
    if (p < 0.5)
        x = std::min(xl, 0.5);
    else
        x = std::max(xu, 0.5);
    if (!(x > 0.0 && x < 1.0))
        x = 0.5;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double f = ibeta(a, b, x) - p;
        if (f < 0.0)
            lo = x;
        else
            hi = x;
        const double dens = std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb);
        double nx = x - f / dens;
        if (!(nx > lo && nx < hi))
            nx = 0.5 * (lo + hi);
        if (std::fabs(nx - x) <= 1e-15 * std::max(x, 1e-300) || hi - lo < 1e-300)
            return nx;
        x = nx;
    }
    return x;
}

}  // namespace levygreen
