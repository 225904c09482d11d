#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "levygreen/perturbation.hpp"
#include "levygreen/quadrature.hpp"
#include "levygreen/stable.hpp"

using namespace levygreen;

namespace {

// Gaussian bump of total mass `mass` (negative: nu_Y = nu~ + bump).
LevyModel bump_model(double alpha, double mass, double width)
{
    SigmaProfile b;
    b.profile = "gaussian";
    b.amplitude = mass / std::sqrt(2 * kPi * width * width);
    b.width = width;
    b.c = std::fabs(b.amplitude);
    b.rho = 1.0;
    b.support = 8.0 * width;
    return LevyModel::custom(1, alpha, b);
}

// Independent inversion of exp(-t psi) in d = 1.
double fourier_density(double t, double x, const std::function<double(double)>& psi)
{
    return integrate_gl([&](double k) { return std::exp(-t * psi(k)) * std::cos(k * x) / kPi; }, 0.0, 80.0, 800, 16);
}

int node_of(const GridDensity& g, double x)
{
    return static_cast<int>(std::lround(x / g.h + 0.5 * (g.n - 1)));
}

}  // namespace

TEST_SUITE("perturbation") {

TEST_CASE("grid convolution")
{
    const LevyModel bump = bump_model(1.2, 0.8, 0.2);
    const GridDensity s = sample_sigma(bump, 401, 0.02);
    CHECK(s.symmetry_error() < 1e-12);
    CHECK(s.mass() == doctest::Approx(0.8).epsilon(1e-6));
    const GridDensity s1 = convolve_power(s, 1);
    CHECK(s1.values == s.values);
    for (int n = 2; n <= 4; ++n) {
        const GridDensity p = convolve_power(s, n);
        CHECK(p.mass() == doctest::Approx(std::pow(s.mass(), n)).epsilon(1e-6));
        CHECK(p.symmetry_error() < 1e-9 * p.peak());
    }
    // Direct sum for one node.
    const GridDensity s2 = convolve_power(s, 2);
    const int i = 230;
    double direct = 0.0;
    for (int j = 0; j < s.n; ++j) {
        const int k = i - j + (s.n - 1) / 2;
        if (k >= 0 && k < s.n)
            direct += s.h * s.at(j) * s.at(k);
    }
    CHECK(s2.at(i) == doctest::Approx(direct).epsilon(1e-10));
    // Support wider than the grid after a few powers.
    CHECK_THROWS_AS(convolve_power(sample_sigma(bump, 101, 0.02), 3), NumericalError);
    CHECK_THROWS(convolve_power(s, 0));
}

TEST_CASE("series without perturbation is the stable density")
{
    const LevyModel st = LevyModel::stable(1, 1.2);
    const SeriesResult r = density_series(0.5, st);
    const GridDensity& g = r.density;
    CHECK(r.tail_bound == 0.0);
    for (int i : {0, 300, 1024, 1500})
        CHECK(g.at(i) == stable_density_radial(0.5, std::fabs(g.coord(i)), 1.2, 1));
}

TEST_CASE("relativistic series against Fourier inversion")
{
    const double alpha = 1.2, m = 1.0, t = 0.5;
    const LevyModel rel = LevyModel::relativistic(1, alpha, m);
    const SeriesResult r = density_series(t, rel);
    const GridDensity& g = r.density;
    CHECK(r.n_max == 8);
    CHECK(r.tail_bound < 1e-8);
    CHECK(g.symmetry_error() < 1e-10);
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-4));
    auto psi = [&](double k) { return std::pow(k * k + std::pow(m, 2.0 / alpha), 0.5 * alpha) - m; };
    for (double x : {0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0}) {
        const int i = node_of(g, x);
        CHECK(g.at(i) == doctest::Approx(fourier_density(t, g.coord(i), psi)).epsilon(2e-5).scale(1.0));
    }
    // Half the spacing on the same extent.
    SeriesOptions fine;
    fine.nodes = 4097;
    fine.extent = g.extent();
    const SeriesResult rf = density_series(t, rel, fine);
    for (int i = 0; i < g.n; i += 64)
        CHECK(std::fabs(rf.density.at(2 * i) - g.at(i)) < 2e-5);
}

TEST_CASE("signed custom perturbation")
{
    // nu_Y = nu~ + bump, so sigma = -bump and psi_Y = |k|^a + 1 - exp(-k^2 w^2 / 2).
    const double w = 0.3;
    const LevyModel bump = bump_model(1.5, -1.0, w);
    CHECK_FALSE(sigma_stats(bump).nonneg);
    const SeriesResult r = density_series(0.3, bump);
    auto psi = [&](double k) { return std::pow(k, 1.5) + 1.0 - std::exp(-0.5 * k * k * w * w); };
    for (double x : {0.0, 0.25, 0.7, 1.5}) {
        const int i = node_of(r.density, x);
        CHECK(r.density.at(i) == doctest::Approx(fourier_density(0.3, r.density.coord(i), psi)).epsilon(1e-5).scale(1.0));
    }
    CHECK_THROWS(domination_check({0.5}, bump));
}

TEST_CASE("Chapman-Kolmogorov on the grid")
{
    const LevyModel rel = LevyModel::relativistic(1, 1.2, 1.0);
    SeriesOptions opt;
    opt.nodes = 2049;
    opt.extent = 30.0;
    const GridDensity p1 = density_series(0.25, rel, opt).density;
    const GridDensity p2 = density_series(0.5, rel, opt).density;
    const GridDensity c = convolve(p1, p1);
    double err = 0.0;
    for (int i = 0; i < c.n; ++i)
        if (std::fabs(c.coord(i)) < 10.0)
            err = std::max(err, std::fabs(c.at(i) - p2.at(i)));
    CHECK(err < 1e-4);
}

TEST_CASE("series tail control")
{
    const LevyModel rel = LevyModel::relativistic(1, 1.2, 1.0);
    SeriesOptions opt;
    opt.n_max = 2;
    opt.tol = 1e-12;
    CHECK_THROWS_AS(density_series(0.5, rel, opt), NumericalError);
    CHECK_THROWS(density_series(0.0, rel));
    const SeriesResult r = density_series(0.5, rel);
    CHECK(r.diagnostics().at("n_max") == 8);
}

TEST_CASE("free-space domination")
{
    const LevyModel tr = LevyModel::truncated(1, 1.2, 1.0);
    const DominationReport rep = domination_check({0.25, 0.5, 1.0}, tr);
    CHECK(rep.holds);
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
        CHECK(rep.worst_margin[k] >= -rep.tolerance[k]);
        CHECK(std::isfinite(rep.max_ratio[k]));
        CHECK(rep.max_ratio[k] <= std::exp(tr.sigma_mass() * rep.times[k]) * (1.0 + 1e-6));
    }
    const DominationReport zero = domination_check({0.5}, LevyModel::stable(1, 1.2));
    CHECK(zero.worst_margin[0] == 0.0);
}

TEST_CASE("potential comparison")
{
    const std::vector<double> radii{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    const PotentialReport st = potential_compare(LevyModel::stable(1, 0.8), radii);
    for (double v : st.ratio)
        CHECK(v == doctest::Approx(1.0).epsilon(2e-2));

    const double w = 0.3;
    const LevyModel bump = bump_model(0.8, -1.0, w);
    const PotentialReport rep = potential_compare(bump, radii);
    // U^Y - U~ = (1/pi) int cos(kx) (1/psi_Y - 1/k^a) dk.
    auto delta = [&](double x) {
        auto f = [&](double k) {
            if (k < 1e-12)
                return 0.0;
            const double ka = std::pow(k, 0.8);
            const double b = 1.0 - std::exp(-0.5 * k * k * w * w);
            return -std::cos(k * x) * b / (ka * (ka + b)) / kPi;
        };
        return integrate_tanh_sinh([&](double da, double) { return f(da); }, 0.0, 1.0, 1e-10).value
            + integrate_to_infinity([&](double k, double) { return f(k); }, 1.0, 1e-10).value;
    };
    for (std::size_t r = 0; r < radii.size(); r += 3)
        CHECK(rep.u_y[r] - rep.u_stable[r] == doctest::Approx(delta(radii[r])).epsilon(1e-3));
    CHECK(rep.band_min > 0.0);
    PotentialOptions fine;
    fine.panels_per_decade = 4;
    fine.t_min = 1e-7;
    const PotentialReport ref = potential_compare(bump, radii, fine);
    CHECK(ref.band_max == doctest::Approx(rep.band_max).epsilon(0.2));
    CHECK(ref.band_min == doctest::Approx(rep.band_min).epsilon(0.2));
    CHECK(rep.ratio[0] == doctest::Approx(rep.ratio[3]).epsilon(0.2));
    CHECK_THROWS(potential_compare(LevyModel::stable(1, 1.2), radii));
}

TEST_CASE("one-dimensional series gap")
{
    CHECK(one_dim_series_gap(0.4, LevyModel::stable(1, 1.2)).gap == 0.0);
    const LevyModel rel = LevyModel::relativistic(1, 1.2, 1.0);
    double lo = 1e300, hi = 0.0;
    SeriesGap prev;
    for (double t0 : {0.1, 0.2, 0.4, 0.8}) {
        const SeriesGap g = one_dim_series_gap(t0, rel);
        lo = std::min(lo, g.ratio);
        hi = std::max(hi, g.ratio);
        if (prev.t0 > 0.0)
            CHECK(prev.gap / g.gap == doctest::Approx(std::pow(2.0, -(2.0 - 1.0 / 1.2))).epsilon(0.3));
        prev = g;
    }
    CHECK(hi / lo < 4.0);
    CHECK_THROWS(one_dim_series_gap(0.5, LevyModel::relativistic(1, 0.8, 1.0)));
}

TEST_CASE("grid files")
{
    const GridDensity g = density_series(0.5, LevyModel::relativistic(1, 1.2, 1.0)).density;
    const auto dir = std::filesystem::temp_directory_path();
    const std::string bin = (dir / "levygreen_grid_test.bin").string();
    const std::string csv = (dir / "levygreen_grid_test.csv").string();
    write_grid_binary(g, bin);
    const GridDensity back = read_grid_binary(bin);
    CHECK(back.n == g.n);
    CHECK(back.h == g.h);
    CHECK(back.t == g.t);
    CHECK(back.values == g.values);
    write_grid_csv(g, csv);
    std::ifstream is(csv);
    std::string line;
    int lines = 0;
    while (std::getline(is, line))
        ++lines;
    CHECK(lines == g.n + 1);
    std::filesystem::remove(bin);
    std::filesystem::remove(csv);

    const GridDensity sm = smooth_gaussian(g, 0.05);
    CHECK(sm.mass() == doctest::Approx(g.mass()).epsilon(1e-6));
    CHECK(sm.peak() < g.peak());
}

}
