#include <doctest.h>

#include <cmath>
#include <vector>

#include "levygreen/estimators.hpp"
#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"

using namespace levygreen;

namespace {

const Domain& unit_disk()
{
    static const Domain d = Domain::ball(make_point({0.0, 0.0}), 1.0);
    return d;
}

RunConfig config(long n, std::uint64_t seed)
{
    RunConfig c;
    c.n = n;
    c.seed = seed;
    return c;
}

bool within(const Estimate& e, double exact, double k = 3.0)
{
    return std::fabs(e.value - exact) < k * e.se;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("exit time on the disk")
{
    const LevyModel st = LevyModel::stable(2, 1.5);
    const Estimate e = exit_time_mc(unit_disk(), st, zero_point(2), config(20000, 1));
    CHECK(within(e, ball_mean_exit_center(1.0, 1.5, 2)));
    CHECK_FALSE(e.flagged);
    CHECK(e.n == 20000);
    double prev = 1e300;
    for (double r : {0.0, 0.4, 0.7, 0.9, 0.98}) {
        const Estimate v = exit_time_mc(unit_disk(), st, make_point({r, 0.0}), config(4000, 2));
        CHECK(v.value < prev);
        prev = v.value;
    }
    CHECK(exit_time_mc(unit_disk(), st, make_point({1.5, 0.0}), config(10, 3)).value == 0.0);
}

TEST_CASE("exit time under time-step refinement")
{
    const LevyModel rel = LevyModel::relativistic(2, 1.2, 1.0);
    PathParams p = path_params_for(unit_disk(), rel);
    const Estimate a = exit_time_mc(unit_disk(), rel, make_point({0.3, 0.0}), config(10000, 5), &p);
    p.dt *= 0.5;
    const Estimate b = exit_time_mc(unit_disk(), rel, make_point({0.3, 0.0}), config(10000, 5), &p);
    // Jump streams are shared, so the drift is measured against one SE.
    CHECK(std::fabs(a.value - b.value) < a.se);
}

TEST_CASE("results do not depend on the worker count")
{
    const LevyModel st = LevyModel::stable(1, 1.2);
    const Domain iv = Domain::interval(-1.0, 1.0);
    RunConfig c = config(3000, 9);
    c.workers = 1;
    const Estimate a = exit_time_mc(iv, st, make_point({0.1}), c);
    c.workers = 3;
    const Estimate b = exit_time_mc(iv, st, make_point({0.1}), c);
    CHECK(a.value == b.value);
    CHECK(a.se == b.se);
}

TEST_CASE("walk-on-spheres Green function")
{
    const Point x = make_point({0.2, 0.0});
    const std::vector<Point> ys = {make_point({-0.3, 0.1}), make_point({0.5, 0.5}), make_point({0.0, -0.8})};
    const auto est = green_wos_stable_many(unit_disk(), 1.5, x, ys, config(40000, 11));
    for (std::size_t j = 0; j < ys.size(); ++j)
        CHECK(within(est[j], ball_green(x, ys[j], 1.0, 1.5)));
    const Estimate back = green_wos_stable(unit_disk(), 1.5, ys[0], x, config(40000, 12));
    CHECK(std::fabs(back.value - est[0].value) < 3.0 * std::hypot(back.se, est[0].se));
    CHECK_THROWS(green_wos_stable(unit_disk(), 1.5, x, x, config(10, 1)));
    CHECK_THROWS(green_wos_stable(Domain::interval(-1, 1), 1.5, make_point({0.0}), make_point({0.5}), config(10, 1)));

    // Non-ball domain: symmetry on the unit square.
    const Domain sq = Domain::box(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
    const Point p = make_point({0.3, 0.4}), q = make_point({0.7, 0.6});
    const Estimate pq = green_wos_stable(sq, 1.5, p, q, config(40000, 13));
    const Estimate qp = green_wos_stable(sq, 1.5, q, p, config(40000, 14));
    CHECK(std::fabs(pq.value - qp.value) < 3.0 * std::hypot(pq.se, qp.se));
}

TEST_CASE("kernel Green estimator")
{
    const LevyModel st = LevyModel::stable(2, 1.5);
    const Point x = make_point({0.2, 0.0});
    const std::vector<Point> ys = {make_point({-0.3, 0.1}), make_point({0.5, 0.5}), make_point({1.5, 0.0})};
    const auto est = green_mc_many(unit_disk(), st, x, ys, {0.05, 0.05, 0.05}, config(20000, 21));
    for (std::size_t j = 0; j < 2; ++j) {
        const double exact = ball_green(x, ys[j], 1.0, 1.5);
        CHECK(std::fabs(est[j].value - exact) < std::max(3.0 * est[j].se, 0.05 * exact));
        CHECK(est[j].diagnostics.contains("value_half_h"));
    }
    CHECK(est[2].value == 0.0);
    CHECK(est[2].se == 0.0);
    CHECK_THROWS(green_mc(unit_disk(), st, x, make_point({0.25, 0.0}), 0.05, config(10, 1)));

    const LevyModel rel = LevyModel::relativistic(2, 1.2, 1.0);
    const Point a = make_point({0.1, 0.2}), b = make_point({-0.4, -0.1});
    const Estimate ab = green_mc(unit_disk(), rel, a, b, 0.05, config(10000, 22));
    const Estimate ba = green_mc(unit_disk(), rel, b, a, 0.05, config(10000, 23));
    CHECK(std::isfinite(ab.value));
    CHECK(std::fabs(ab.value - ba.value) < 3.0 * std::hypot(ab.se, ba.se));
}

TEST_CASE("killed density")
{
    const LevyModel st = LevyModel::stable(2, 1.5);
    const Point x = make_point({0.1, 0.0}), y = make_point({-0.2, 0.1});
    double prev = 1e300;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        const Estimate e = killed_density_mc(unit_disk(), st, t, x, y, 0.1, config(8000, 31));
        CHECK(e.value < prev);
        prev = e.value;
    }

    // Domination for a nonnegative sigma, with the t = 0.5 killed densities.
    const LevyModel tr = LevyModel::truncated(2, 1.5, 0.5);
    const double t = 0.5, m = tr.sigma_mass();
    const std::vector<Point> ys = {make_point({0.0, 0.0}), make_point({0.5, 0.0}), make_point({-0.3, -0.6})};
    const auto py = killed_density_mc_many(unit_disk(), tr, t, x, ys, 0.1, config(10000, 32));
    const auto px = killed_density_mc_many(unit_disk(), st, t, x, ys, 0.1, config(10000, 33));
    for (std::size_t j = 0; j < ys.size(); ++j) {
        CHECK_FALSE(py[j].flagged);
        CHECK(py[j].value <= std::exp(m * t) * px[j].value + 3.0 * std::hypot(py[j].se, std::exp(m * t) * px[j].se));
    }
}

TEST_CASE("Poisson kernel")
{
    const LevyModel st = LevyModel::stable(2, 1.5);
    const Point x = make_point({0.2, 0.1});
    const GreenProvider g = ball_green_provider(unit_disk(), 1.5);
    const Point z = make_point({0.0, 1.5});
    const Estimate iw = poisson_kernel_iw(unit_disk(), st, x, z, g);
    CHECK(iw.value == doctest::Approx(ball_poisson_kernel(x, z, 1.0, 1.5)).epsilon(0.03));
    CHECK_THROWS(poisson_kernel_iw(unit_disk(), st, x, make_point({0.5, 0.0}), g));

    // Normalization over the complement with a coarse outer rule in the
    // distance to the sphere.
    CubatureSpec coarse;
    coarse.angular_panels = 8;
    coarse.rel_tol = 1e-6;
    coarse.max_level = 6;
    const Point x0 = zero_point(2);
    auto shell = [&](double e) {
        return 2 * kPi * (1.0 + e) * poisson_kernel_iw(unit_disk(), st, x0, make_point({1.0 + e, 0.0}), g, coarse).value;
    };
    // Outer rule in log(e); below e0 the kernel behaves like e^{-alpha/2}
    // and beyond e1 like e^{-2-alpha}.
    const double e0 = 1e-10, e1 = 1e3;
    const double total = integrate_gl([&](double u) { return std::exp(u) * shell(std::exp(u)); }, std::log(e0),
                                      std::log(e1), 3, 10)
        + shell(e0) * e0 / (1.0 - 0.75) + shell(e1) * e1 / 2.5;
    CHECK(total == doctest::Approx(1.0).epsilon(2e-3));

    // Occupation version of the same functional.
    const auto occ = poisson_kernel_occupation(unit_disk(), st, x, {z}, config(10000, 41));
    CHECK(std::fabs(occ[0].value - ball_poisson_kernel(x, z, 1.0, 1.5)) < std::max(3.0 * occ[0].se, 0.03 * occ[0].value));

    // Exit positions against the kernel on annular bins.
    const std::vector<double> edges = {1.0, 1.05, 1.1, 1.2, 1.35, 1.5, 1.75, 2.0, 3.0, 5.0, 1e9};
    const auto pts = exit_positions(unit_disk(), st, x, config(50000, 42));
    std::vector<double> counts(edges.size() - 1, 0.0);
    for (const Point& p : pts) {
        const double r = p.norm();
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            if (r >= edges[b] && r < edges[b + 1])
                counts[b] += 1;
    }
    double chi2 = 0.0;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        auto radial = [&](double rho) {
            return rho * integrate_gl([&](double th) { return ball_poisson_kernel(x, rho * make_point({std::cos(th), std::sin(th)}), 1.0, 1.5); },
                                      0.0, 2 * kPi, 8, 16);
        };
        const double lo = edges[b], hi = edges[b + 1];
        double p;
        if (hi > 1e8)
            p = integrate_to_infinity([&](double r, double) { return radial(r); }, lo, 1e-8).value;
        else
            p = integrate_tanh_sinh([&](double da, double) { return radial(lo + da); }, lo, hi, 1e-8).value;
        const double expected = p * pts.size();
        chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    }
    CHECK(chi2 < 21.67);  // 1% point, 9 degrees of freedom
}

TEST_CASE("harmonic functions")
{
    const LevyModel st = LevyModel::stable(2, 1.5);
    const Estimate one = harmonic_eval(unit_disk(), st, [](const Point&) { return 1.0; }, make_point({0.3, 0.3}), config(2000, 51));
    CHECK(one.value == 1.0);
    const Estimate half = harmonic_eval(unit_disk(), st, [](const Point& z) { return z(0) > 0 ? 1.0 : 0.0; }, zero_point(2), config(20000, 52));
    CHECK(std::fabs(half.value - 0.5) < 3 * half.se);
    const LevyModel rel = LevyModel::relativistic(2, 1.2, 1.0);
    const Estimate hr = harmonic_eval(unit_disk(), rel, [](const Point& z) { return z(1) > 0 ? 1.0 : 0.0; }, zero_point(2), config(4000, 53));
    CHECK(std::fabs(hr.value - 0.5) < 3 * hr.se);

    // Against the Poisson-kernel integral of u(z) = 1 / |z|^2.
    const Point x = make_point({0.4, -0.2});
    auto u = [](const Point& z) { return 1.0 / z.squaredNorm(); };
    const Estimate h = harmonic_eval(unit_disk(), st, u, x, config(20000, 54));
    const double exact = integrate_gl(
        [&](double th) {
            const Point dir = make_point({std::cos(th), std::sin(th)});
            return integrate_to_infinity([&](double rho, double) { return rho * ball_poisson_kernel(x, rho * dir, 1.0, 1.5) * u(rho * dir); }, 1.0, 1e-9).value;
        },
        0.0, 2 * kPi, 16, 16);
    CHECK(std::fabs(h.value - exact) < 3 * h.se + 2e-3 * exact);
}

}
