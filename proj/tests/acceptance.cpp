// Acceptance run: one PASS/FAIL line per criterion. Tolerances, sample
// sizes and seeds are fixed here.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "levygreen/estimators.hpp"
#include "levygreen/harness.hpp"
#include "levygreen/perturbation.hpp"
#include "levygreen/sampling.hpp"
#include "levygreen/stable.hpp"
#include "stats_util.hpp"

using namespace levygreen;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(clk::time_point t0)
{
    return std::chrono::duration<double>(clk::now() - t0).count();
}

void report(int id, bool pass, const std::string& detail)
{
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string f(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

const Domain& unit_disk()
{
    static const Domain d = Domain::ball(make_point({0.0, 0.0}), 1.0);
    return d;
}

RunConfig run(long n, std::uint64_t seed)
{
    RunConfig c;
    c.n = n;
    c.seed = seed;
    return c;
}

void c1()
{
    const auto t0 = clk::now();
    const double alpha = 1.5;
    const std::vector<std::pair<Point, Point>> pairs = {
        {make_point({0.0, 0.0}), make_point({0.3, 0.0})},  {make_point({0.2, 0.1}), make_point({-0.4, 0.3})},
        {make_point({0.5, -0.2}), make_point({0.1, 0.6})}, {make_point({-0.6, -0.3}), make_point({-0.1, -0.7})},
        {make_point({0.0, 0.7}), make_point({0.6, 0.0})}};
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Estimate e = green_wos_stable(unit_disk(), alpha, pairs[i].first, pairs[i].second, run(100000, 101 + i));
        const double exact = ball_green(pairs[i].first, pairs[i].second, 1.0, alpha);
        worst = std::max(worst, std::fabs(e.value - exact) / e.se);
    }
    const double secs = seconds_since(t0);
    report(1, worst < 3.0 && secs < 120.0,
           "WoS vs closed form, max |z| = " + f("%.2f", worst) + " (< 3), " + f("%.0f s", secs) + " (< 120 s)");
}

void c2()
{
    struct Case {
        const char* name;
        Domain domain;
        LevyModel model;
        Point x;
    };
    const Case cases[] = {
        {"stable/disk", unit_disk(), LevyModel::stable(2, 1.5), make_point({0.2, 0.1})},
        {"relativistic/disk", unit_disk(), LevyModel::relativistic(2, 1.2, 1.0), make_point({0.2, 0.1})},
        {"truncated/interval", Domain::interval(-1.0, 1.0), LevyModel::truncated(1, 1.2, 1.0), make_point({0.1})}};
    bool ok = true;
    std::string detail = "int G dy vs E tau:";
    for (const auto& c : cases) {
        const OccupationIdentity o = occupation_identity(c.domain, c.model, c.x, run(20000, 201));
        ok = ok && o.rel_diff < 0.05;
        detail += std::string(" ") + c.name + " " + f("%.3f", o.rel_diff);
    }
    report(2, ok, detail + " (each < 0.05)");
}

void c3()
{
    const auto t0 = clk::now();
    const double t = 0.5, alpha = 1.2, m = 1.0, bw = 0.05;
    const long n = 1000000;
    std::vector<double> xs;
    for (int k = -12; k <= 12; ++k)
        xs.push_back(0.25 * k);
    std::vector<double> s1(xs.size(), 0.0), s2(xs.size(), 0.0);
    Rng rng = make_rng(301, 0);
    const double norm = 1.0 / (bw * std::sqrt(2.0 * kPi));
    for (long i = 0; i < n; ++i) {
        const double y = sample_relativistic_increment(t, alpha, m, 1, rng)(0);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double u = (xs[k] - y) / bw;
            if (std::fabs(u) < 40.0) {
                const double v = norm * std::exp(-0.5 * u * u);
                s1[k] += v;
                s2[k] += v * v;
            }
        }
    }
    const GridDensity g = smooth_gaussian(density_series(t, LevyModel::relativistic(1, alpha, m)).density, bw);
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double mean = s1[k] / n;
        const double se = std::sqrt(std::max(0.0, s2[k] / n - mean * mean) / (n - 1));
        const double pos = xs[k] / g.h + 0.5 * (g.n - 1);
        const int i = static_cast<int>(std::floor(pos));
        const double w = pos - i;
        const double series = (1.0 - w) * g.at(i) + w * g.at(i + 1);
        worst = std::max(worst, std::fabs(mean - series) / se);
    }
    const double secs = seconds_since(t0);
    report(3, worst < 3.0 && secs < 300.0,
           "series vs 1e6-sample KDE on |x| <= 3, max |z| = " + f("%.2f", worst) + " (< 3), " + f("%.0f s", secs));
}

void c4()
{
    const DominationReport r = domination_check({0.25, 0.5, 1.0}, LevyModel::truncated(1, 1.2, 1.0), 2048);
    double margin = 1e300;
    for (std::size_t i = 0; i < r.times.size(); ++i)
        margin = std::min(margin, r.worst_margin[i] + r.tolerance[i]);
    report(4, r.holds, "p^Y <= e^{mt} p~ on 2048 nodes, t in {0.25, 0.5, 1}; min(margin + tol) = " + f("%.3g", margin));
}

void ratio_criterion(int id, const Domain& domain, const LevyModel& model, const char* what)
{
    const auto t0 = clk::now();
    CompareConfig c;
    c.run = run(20000, 500 + id);
    c.grid.nx = 5;
    c.grid.ny = 4;
    const RatioReport r = compare_green(domain, model, c);
    const double secs = seconds_since(t0);
    const bool ok = r.points.size() == 20 && r.verdict == Verdict::bounded && r.expansion < 0.10 && secs < 900.0;
    report(id, ok,
           std::string(what) + ": " + to_string(r.verdict) + ", band " + f("%.3f", r.band) + " at 2e4, " +
               f("%.3f", r.band_half) + " at 1e4, expansion " + f("%+.3f", r.expansion) + " (< 0.10), " +
               f("%.0f s", secs));
}

void c7()
{
    const auto t0 = clk::now();
    const auto ladder = halving_ladder(2.0 / 64, 6);
    const double cases[4][3] = {{0.5, 0.5, -1.5}, {0.5, 0.5, -1.0}, {0.5, 0.5, -0.5}, {0.5, 0.5, -0.7}};
    bool ok = true;
    std::string detail;
    for (const auto& k : cases) {
        const CalkaCase c = calka_bound_check(unit_disk(), k[0], k[1], k[2], zero_point(2), ladder, 0.1);
        ok = ok && c.pass;
        detail += c.name + " " + f("%.3f", c.slope) + "/" + f("%.1f", c.expected) + (c.pass ? "" : "!") + "; ";
    }
    const double secs = seconds_since(t0);
    report(7, ok && secs < 60.0, "slope/expected: " + detail + f("%.0f s", secs));
}

void c8()
{
    const auto rows = contraction_scan(LevyModel::truncated(2, 1.2, 1.0), {0.05});
    const auto rel = contraction_scan(LevyModel::relativistic(2, 1.2, 1.0), {0.05});
    report(8, rows[0].theta < 0.5,
           "truncated sigma on a disk of diameter 0.05: theta = " + f("%.3g", rows[0].theta) +
               (rows[0].zero_sigma ? " (sigma vanishes on the disk)" : "") + "; relativistic theta = " +
               f("%.3g", rel[0].theta));
}

void c9()
{
    SigmaProfile b;
    const double w = 0.3;
    b.profile = "gaussian";
    b.amplitude = -1.0 / std::sqrt(2.0 * kPi * w * w);
    b.width = w;
    b.c = std::fabs(b.amplitude);
    b.rho = 1.0;
    b.support = 8.0 * w;
    const LevyModel bump = LevyModel::custom(1, 0.8, b);
    const std::vector<double> radii{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    const PotentialReport a = potential_compare(bump, radii);
    PotentialOptions fine;
    fine.panels_per_decade = 4;
    fine.order = 12;
    fine.t_min = 1e-7;
    const PotentialReport r = potential_compare(bump, radii, fine);
    const double drift = std::max(std::fabs(r.band_min / a.band_min - 1.0), std::fabs(r.band_max / a.band_max - 1.0));
    report(9, a.band_min > 0.0 && drift < 0.2,
           "U^Y/U~ band [" + f("%.4f", a.band_min) + ", " + f("%.4f", a.band_max) + "], refinement drift " +
               f("%.2g", drift) + " (< 0.2)");
}

void c10()
{
    const double alpha = 1.2;
    Rng rng = make_rng(1001, 0);
    std::vector<double> rs(100000);
    for (auto& r : rs)
        r = std::fabs(ball_exit_sample_center(1, 1.0, alpha, rng)(0));
    const double ks = testutil::ks_one_sample(rs, [&](double r) { return ball_exit_radial_cdf(r, 1.0, alpha); });
    report(10, ks < 0.005, "KS distance " + f("%.4f", ks) + " (< 0.005) at N = 1e5");
}

bool same_bytes(const fs::path& a, const fs::path& b)
{
    std::ifstream x(a, std::ios::binary), y(b, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(x)), {}), sb((std::istreambuf_iterator<char>(y)), {});
    return x && y ? sa == sb : false;
}

void c11(const std::string& cli)
{
    const fs::path base = fs::temp_directory_path() / "levygreen_acceptance";
    fs::remove_all(base);
    int rc[2];
    for (int k = 0; k < 2; ++k) {
        const std::string cmd = cli + " suite --quick --seed 7 --workers 1 --out " + (base / std::to_string(k)).string() +
                                " > /dev/null";
        rc[k] = std::system(cmd.c_str());
    }
    int files = 0;
    bool same = rc[0] == 0 && rc[1] == 0;
    for (const auto& e : fs::directory_iterator(base / "0")) {
        if (e.path().filename() == "manifest.json")
            continue;
        ++files;
        same = same && same_bytes(e.path(), base / "1" / e.path().filename());
    }
    for (const auto& e : fs::directory_iterator(base / "1"))
        same = same && fs::exists(base / "0" / e.path().filename());
    report(11, same && files >= 6,
           std::to_string(files) + " output files byte-identical across two runs (manifest excluded)");
    fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv)
{
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path to levygreen cli>\n", argv[0]);
        return 2;
    }
    c1();
    c2();
    c3();
    c4();
    ratio_criterion(5, unit_disk(), LevyModel::relativistic(2, 1.2, 1.0), "relativistic/stable on the unit disk");
    ratio_criterion(6, Domain::interval(-1.0, 1.0), LevyModel::relativistic(1, 1.2, 1.0),
                    "relativistic/stable on (-1, 1)");
    c7();
    c8();
    c9();
    c10();
    c11(argv[1]);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
