#include <doctest.h>

#include <cmath>

#include "levygreen/levy_models.hpp"
#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"

using namespace levygreen;

TEST_SUITE("models") {

TEST_CASE("stable and truncated densities")
{
    const LevyModel s = LevyModel::stable(1, 1.0);
    // A(-1, 1) = 1/pi.
    CHECK(levy_density(s, make_point({2.0})) == doctest::Approx(0.25 / kPi).epsilon(1e-14));
    CHECK_THROWS(levy_density(s, make_point({0.0})));
    const LevyModel tr = LevyModel::truncated(2, 1.5, 1.0);
    CHECK(levy_density(tr, make_point({2.0, 0.0})) == 0.0);
    CHECK(levy_density(tr, make_point({0.5, 0.0})) == doctest::Approx(levy_density(LevyModel::stable(2, 1.5), make_point({0.5, 0.0}))));
    CHECK_THROWS_WITH(LevyModel::stable(2, 2.5), doctest::Contains("alpha"));
}

TEST_CASE("relativistic density")
{
    for (double r : {0.01, 0.3, 1.0, 2.5}) {
        const LevyModel rel = LevyModel::relativistic(2, 1.2, 1.0);
        CHECK(rel.density_radial(r) == doctest::Approx(relativistic_density_subordination(2, 1.2, 1.0, r)).epsilon(1e-7));
        CHECK(rel.density_radial(r) <= rel.stable_radial(r));
    }
    const LevyModel tiny = LevyModel::relativistic(1, 1.2, 1e-14);
    for (double r : {0.1, 1.0, 3.0})
        CHECK(tiny.density_radial(r) == doctest::Approx(tiny.stable_radial(r)).epsilon(1e-6));
    const LevyModel zero = LevyModel::relativistic(3, 0.8, 0.0);
    CHECK(zero.density_radial(0.7) == doctest::Approx(zero.stable_radial(0.7)).epsilon(1e-12));
}

TEST_CASE("characteristic exponents")
{
    CHECK(char_exponent(LevyModel::stable(2, 1.5), make_point({0.6, 0.8})) == doctest::Approx(1.0));
    const LevyModel rel = LevyModel::relativistic(1, 1.0, 1.0);
    CHECK(char_exponent(rel, make_point({0.0})) == 0.0);
    CHECK(char_exponent(rel, make_point({2.0})) == doctest::Approx(std::sqrt(5.0) - 1.0));

    // Closed form minus the quadrature of (1 - cos) sigma recovers psi.
    for (int d : {1, 2, 3}) {
        const LevyModel r = LevyModel::relativistic(d, 1.2, 1.0);
        for (double k : {0.3, 1.0, 4.0}) {
            const double direct = std::pow(k, 1.2) - (r.sigma_mass() - sigma_fourier(r, k));
            CHECK(char_exponent_radial(r, k) == doctest::Approx(direct).epsilon(1e-7));
        }
    }

    // Truncated, d = 1: Levy-Khintchine integral on (0, 1) by two
    // resolutions, after w = v^2 removes the endpoint singularity.
    const LevyModel tr = LevyModel::truncated(1, 1.5, 1.0);
    const double A = tr.stable_constant();
    auto lk = [&](int panels) {
        return 4.0 * A * integrate_gl([](double v) { const double h = std::sin(1.5 * v * v); return v == 0.0 ? 4.5 : 2.0 * h * h * std::pow(v, -4.0); }, 0.0, 1.0, panels, 20);
    };
    const double coarse = lk(400), fine = lk(1600);
    CHECK(std::fabs(coarse - fine) < 1e-5 * fine);
    CHECK(char_exponent(tr, make_point({3.0})) == doctest::Approx(fine).epsilon(1e-5));
    CHECK(char_exponent(tr, make_point({-3.0})) == doctest::Approx(char_exponent(tr, make_point({3.0}))));
}

TEST_CASE("sigma statistics")
{
    for (int d : {1, 2, 3}) {
        const double alpha = 1.5;
        const LevyModel tr = LevyModel::truncated(d, alpha, 1.0);
        const double closed = stable_constant(-alpha, d) * sphere_area(d) / alpha;
        const SigmaStats st = sigma_stats(tr);
        CHECK(st.m == doctest::Approx(closed).epsilon(1e-8));
        CHECK(st.M == doctest::Approx(closed).epsilon(1e-8));
        CHECK(st.nonneg);
        CHECK(tr.sigma_mass() == doctest::Approx(closed).epsilon(1e-12));
    }
    const SigmaStats rel = sigma_stats(LevyModel::relativistic(2, 1.2, 1.0));
    CHECK(rel.nonneg);
    CHECK(rel.m > 0.0);
    // Total mass of the relativistic sigma equals m.
    CHECK(rel.m == doctest::Approx(1.0).epsilon(1e-6));
    const SigmaStats st = sigma_stats(LevyModel::stable(2, 1.5));
    CHECK(st.m == 0.0);
    CHECK(st.M == 0.0);
}

TEST_CASE("custom models")
{
    SigmaProfile bump;
    bump.profile = "gaussian";
    bump.amplitude = -0.5;
    bump.width = 0.3;
    bump.c = 0.5;
    bump.rho = 1.0;
    bump.support = 2.0;
    const LevyModel m = LevyModel::custom(1, 1.2, bump);
    const SigmaStats st = sigma_stats(m);
    CHECK_FALSE(st.nonneg);
    CHECK(st.m == doctest::Approx(-st.M).epsilon(1e-8));
    const double mass = -0.5 * 0.3 * std::sqrt(2 * kPi) * std::erf(2.0 / (0.3 * std::sqrt(2.0)));
    CHECK(st.m == doctest::Approx(mass).epsilon(1e-8));

    SigmaProfile bad = bump;
    bad.c = 0.1;
    CHECK_THROWS_WITH(LevyModel::custom(1, 1.2, bad), doctest::Contains("envelope"));
    SigmaProfile neg = bump;
    neg.amplitude = 50.0;
    neg.c = 50.0;
    CHECK_THROWS(LevyModel::custom(1, 1.2, neg));  // nu_Y would go negative
}

TEST_CASE("symmetry and the nonnegative-sigma band")
{
    Rng rng = make_rng(3, 0);
    std::normal_distribution<double> g(0.0, 2.0);
    const LevyModel tr = LevyModel::truncated(2, 1.3, 0.7);
    const double m = tr.sigma_mass();
    for (int k = 0; k < 20; ++k) {
        const Point z = make_point({g(rng), g(rng)});
        const double a = char_exponent(tr, z), b = char_exponent(tr, (-z).eval());
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        const double gap = std::pow(z.norm(), 1.3) - a;
        CHECK(gap >= -1e-8);
        CHECK(gap <= 2 * m + 1e-8);
    }
}

TEST_CASE("json")
{
    const LevyModel rel = LevyModel::relativistic(2, 1.2, 1.0);
    const LevyModel back = model_from_json(model_to_json(rel));
    CHECK(back.kind() == ModelKind::relativistic);
    CHECK(back.mass() == 1.0);
    CHECK_THROWS_WITH(model_from_json(nlohmann::json::parse(R"({"kind":"stable","d":2,"alpha":2.5})")),
                      doctest::Contains("alpha"));
    CHECK_THROWS_WITH(model_from_json(nlohmann::json::parse(R"({"kind":"warp","d":2,"alpha":1})")),
                      doctest::Contains("kind"));
}

}
