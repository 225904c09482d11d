#include <doctest.h>

#include <cmath>
#include <vector>

#include "levygreen/levy_models.hpp"
#include "levygreen/sampling.hpp"
#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"
#include "stats_util.hpp"

using namespace levygreen;
using testutil::MeanVar;

namespace {

struct JumpWatcher {
    double cutoff;
    double max_kept = 0.0;
    long kept = 0, dropped = 0;
    void segment(double, double, const Point&, bool, const Point&, bool) {}
    void exit_x(double, const Point&) {}
    void exit_y(double, const Point&) {}
    void jump(double, const Point& w, bool keep, bool)
    {
        if (keep) {
            ++kept;
            max_kept = std::max(max_kept, w.norm());
        } else {
            ++dropped;
        }
    }
    void node(double, const Point&, bool, const Point&, bool) {}
    bool stop() const { return false; }
};

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("stable increments")
{
    Rng rng = make_rng(1, 0);
    const int n = 100000;
    std::vector<double> xs(n), ys(n);
    long below = 0;
    for (int i = 0; i < n; ++i) {
        xs[i] = sample_stable_increment(1.0, 1.0, 1, rng)(0);
        below += xs[i] < 0.0;
    }
    CHECK(std::fabs(below - n / 2.0) < 3 * std::sqrt(n / 4.0));
    CHECK(testutil::ks_one_sample(xs, [](double x) { return 0.5 + std::atan(x) / kPi; }) < 0.01);

    // Self-similarity: X_t against t^{1/alpha} X_1, in d = 2 through the radius.
    for (int i = 0; i < n; ++i) {
        xs[i] = sample_stable_increment(0.3, 1.4, 2, rng).norm();
        ys[i] = std::pow(0.3, 1.0 / 1.4) * sample_stable_increment(1.0, 1.4, 2, rng).norm();
    }
    CHECK(testutil::ks_two_sample(xs, ys) < testutil::ks_critical_1pct(n, n));

    // Isotropy: first coordinate of a 3D Cauchy vector is 1D Cauchy.
    for (int i = 0; i < n; ++i)
        xs[i] = sample_stable_increment(1.0, 1.0, 3, rng)(0);
    CHECK(testutil::ks_one_sample(xs, [](double x) { return 0.5 + std::atan(x) / kPi; }) < 0.01);
}

TEST_CASE("relativistic increments")
{
    Rng rng = make_rng(2, 0);
    const int n = 100000;
    const double t = 0.5, alpha = 1.2, m = 1.0;
    AcceptanceStats stats;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i)
        xs[i] = sample_relativistic_increment(t, alpha, m, 1, rng, &stats)(0);
    const LevyModel rel = LevyModel::relativistic(1, alpha, m);
    for (double z : {0.3, 0.8, 1.5, 3.0, 6.0}) {
        MeanVar mv;
        for (double x : xs)
            mv.add(std::cos(z * x));
        CHECK(std::fabs(mv.mean - std::exp(-t * char_exponent(rel, make_point({z})))) < 3 * mv.se());
    }
    const double p = double(stats.accepted) / stats.attempts;
    const double se = std::sqrt(p * (1 - p) / stats.attempts);
    CHECK(std::fabs(p - std::exp(-t * m)) < 3 * se);

    // m = 0 reproduces the stable sampler draw for draw.
    Rng a = make_rng(9, 1), b = make_rng(9, 1);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_relativistic_increment(0.7, 1.3, 0.0, 2, a)
              == sample_stable_increment(0.7, 1.3, 2, b));

    // Step splitting keeps the law: t m = 3 split into three pieces.
    std::vector<double> ys(20000);
    for (auto& y : ys)
        y = sample_relativistic_increment(3.0, alpha, m, 1, rng)(0);
    for (double z : {0.2, 0.7}) {
        MeanVar mv;
        for (double y : ys)
            mv.add(std::cos(z * y));
        CHECK(std::fabs(mv.mean - std::exp(-3.0 * char_exponent(rel, make_point({z})))) < 3 * mv.se());
    }
}

TEST_CASE("compound Poisson")
{
    Rng rng = make_rng(3, 0);
    JumpLaw law{1.0, 1, [](Rng& r) { return make_point({std::normal_distribution<double>(0.0, 1.0)(r)}); }};
    const int n = 100000;
    long empty = 0;
    std::vector<double> first;
    for (int i = 0; i < n; ++i) {
        const auto jumps = sample_compound_poisson(law, 1.0, rng);
        empty += jumps.empty();
        for (std::size_t k = 1; k < jumps.size(); ++k)
            CHECK(jumps[k].time >= jumps[k - 1].time);
    }
    const double p = std::exp(-1.0);
    CHECK(std::fabs(empty / double(n) - p) < 3 * std::sqrt(p * (1 - p) / n));

    // First jump over a long window is exponential with rate equal to the mass.
    for (int i = 0; i < 20000; ++i) {
        const auto jumps = sample_compound_poisson(law, 50.0, rng);
        if (!jumps.empty())
            first.push_back(jumps.front().time);
    }
    const double ks = testutil::ks_one_sample(first, [](double t) { return 1.0 - std::exp(-t); });
    CHECK(ks < 1.628 / std::sqrt(double(first.size())));

    // Truncated-model sigma: Pareto radius beyond the cutoff.
    const LevyModel tr = LevyModel::truncated(2, 1.5, 0.8);
    const JumpLaw sp = sigma_positive_law(tr);
    CHECK(sp.mass == doctest::Approx(tr.sigma_mass()));
    std::vector<double> radii(n);
    for (auto& r : radii)
        r = sp.draw(rng).norm();
    CHECK(testutil::ks_one_sample(radii, [](double r) { return r <= 0.8 ? 0.0 : 1.0 - std::pow(r / 0.8, -1.5); }) < 0.01);
}

TEST_CASE("rejection laws for relativistic and custom sigma")
{
    Rng rng = make_rng(31, 0);
    const LevyModel rel = LevyModel::relativistic(1, 1.2, 1.0);
    const JumpLaw law = sigma_positive_law(rel);
    CHECK(law.mass == doctest::Approx(1.0));
    const int n = 50000;
    std::vector<double> radii(n);
    for (auto& r : radii)
        r = std::fabs(law.draw(rng)(0));
    // Oracle CDF by radial quadrature of sigma.
    auto cdf = [&](double r) {
        return integrate_tanh_sinh([&](double da, double) { return 2.0 * rel.sigma_radial(da); }, 0.0, r, 1e-10).value;
    };
    for (double r : {0.1, 0.5, 1.0, 3.0}) {
        long below = 0;
        for (double x : radii)
            below += x <= r;
        const double p = cdf(r);
        CHECK(std::fabs(below / double(n) - p) < 3 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }

    SigmaProfile bump;
    bump.amplitude = -0.5;
    bump.width = 0.3;
    bump.c = 0.5;
    bump.rho = 1.0;
    bump.support = 2.0;
    const LevyModel custom = LevyModel::custom(1, 1.2, bump);
    CHECK(sigma_positive_law(custom).mass == 0.0);
    const JumpLaw neg = sigma_negative_law(custom);
    CHECK(neg.mass == doctest::Approx(-custom.sigma_mass()));
    std::vector<double> w(n);
    for (auto& x : w)
        x = std::fabs(neg.draw(rng)(0));
    const double norm = std::erf(2.0 / (0.3 * std::sqrt(2.0)));
    CHECK(testutil::ks_one_sample(w, [&](double r) { return std::erf(std::min(r, 2.0) / (0.3 * std::sqrt(2.0))) / norm; })
          < 1.628 / std::sqrt(double(n)));
}

TEST_CASE("perturbed paths match exact increments")
{
    const int n = 10000;
    const double t = 0.5;
    {
        const LevyModel st = LevyModel::stable(1, 1.2);
        Rng rng = make_rng(41, 0);
        std::vector<double> a(n), b(4 * n);
        for (auto& x : a)
            x = sample_perturbed_path(st, make_point({0.0}), t, 1e-3, 1e-2, rng).positions.back()(0);
        for (auto& x : b)
            x = sample_stable_increment(t, 1.2, 1, rng)(0);
        CHECK(testutil::ks_two_sample(a, b) < 0.02);
    }
    {
        const LevyModel rel = LevyModel::relativistic(1, 1.2, 1.0);
        Rng rng = make_rng(42, 0);
        std::vector<double> a(n), b(4 * n);
        for (auto& x : a)
            x = sample_perturbed_path(rel, make_point({0.0}), t, 1e-3, 1e-2, rng).positions.back()(0);
        for (auto& x : b)
            x = sample_relativistic_increment(t, 1.2, 1.0, 1, rng)(0);
        CHECK(testutil::ks_two_sample(a, b) < 0.02);
    }
    {
        const LevyModel tr = LevyModel::truncated(2, 1.5, 1.0);
        PathParams p;
        p.eps = 1e-2;
        p.dt = 1e-2;
        p.horizon = 5.0;
        const PathEngine engine(tr, p, nullptr);
        Rng rng = make_rng(43, 0);
        JumpWatcher w{1.0};
        for (int i = 0; i < 200; ++i)
            engine.run(make_point({0.0, 0.0}), true, rng, w);
        CHECK(w.max_kept < 1.0);
        CHECK(w.dropped > 0);
    }
}

TEST_CASE("skeleton invariants and reproducibility")
{
    const LevyModel rel = LevyModel::relativistic(2, 1.2, 1.0);
    const Domain disk = Domain::ball(make_point({0.0, 0.0}), 1.0);
    Rng a = make_rng(5, 3), b = make_rng(5, 3);
    for (int i = 0; i < 50; ++i) {
        const PathSkeleton p = sample_perturbed_path(rel, make_point({0.2, 0.1}), 100.0, 1e-2, 1e-3, a, &disk);
        const PathSkeleton q = sample_perturbed_path(rel, make_point({0.2, 0.1}), 100.0, 1e-2, 1e-3, b, &disk);
        REQUIRE(p.times.size() == p.positions.size());
        for (std::size_t k = 1; k < p.times.size(); ++k)
            CHECK(p.times[k] > p.times[k - 1]);
        CHECK(p.exited);
        CHECK(p.exit_index == static_cast<long>(p.times.size()) - 1);
        // Exits flagged by the bridge check sit just inside the boundary.
        const Point& e = p.positions[p.exit_index];
        CHECK((!disk.contains(e) || disk.dist_to_boundary(e) < 0.05));
        for (long k = 0; k < p.exit_index; ++k)
            CHECK(disk.contains(p.positions[k]));
        CHECK(p.times == q.times);
        bool same = true;
        for (std::size_t k = 0; k < p.positions.size(); ++k)
            same = same && p.positions[k] == q.positions[k];
        CHECK(same);
    }
}

TEST_CASE("coupled paths")
{
    const LevyModel st = LevyModel::stable(1, 1.5);
    Rng rng = make_rng(6, 0);
    {
        const CouplingSample c = sample_coupled(st, JumpLaw{0.0, 1, {}}, make_point({0.0}), 1.0, 1e-2, 1e-2, rng);
        CHECK(std::isinf(c.T));
        REQUIRE(c.path_Z.positions.size() == c.path_X.positions.size());
        for (std::size_t k = 0; k < c.path_X.positions.size(); ++k)
            CHECK(c.path_Z.positions[k] == c.path_X.positions[k]);
    }
    const LevyModel tr = LevyModel::truncated(1, 1.5, 1.0);
    const JumpLaw v = sigma_positive_law(tr);
    const double t = 1.0;
    std::vector<double> ends;
    bool agree = true;
    for (int i = 0; i < 20000; ++i) {
        const CouplingSample c = sample_coupled(st, v, make_point({0.0}), t, 1e-2, 1e-2, rng);
        std::size_t ix = 0;
        for (std::size_t k = 0; k < c.path_Z.times.size() && c.path_Z.times[k] < c.T; ++k) {
            while (ix < c.path_X.times.size() && c.path_X.times[ix] < c.path_Z.times[k])
                ++ix;
            agree = agree && ix < c.path_X.times.size() && c.path_X.times[ix] == c.path_Z.times[k]
                && c.path_X.positions[ix] == c.path_Z.positions[k];
        }
        ends.push_back(c.path_Z.positions.back()(0));
    }
    CHECK(agree);
    // Z = X + V has exponent |z|^alpha plus the Levy-Khintchine integral of sigma.
    for (double z : {0.3, 1.0, 2.5}) {
        MeanVar mv;
        for (double e : ends)
            mv.add(std::cos(z * e));
        const double sig = std::pow(z, 1.5) - char_exponent(tr, make_point({z}));
        CHECK(std::fabs(mv.mean - std::exp(-t * (std::pow(z, 1.5) + sig))) < 3 * mv.se());
    }
}

}
