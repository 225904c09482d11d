#include "levygreen/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "levygreen/parallel.hpp"
#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"

namespace levygreen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t group_seed(std::uint64_t seed, std::uint64_t group)
{
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (group + 1));
    return splitmix64(s);
}

double radical_inverse(long i, int base)
{
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

bool has_closed_green(const Domain& domain, double alpha)
{
    const int d = domain.dim();
    const bool ball = domain.is_ball() || std::holds_alternative<Interval>(domain.shape());
    return ball && (d > alpha || (d == 1 && alpha > 1.0));
}

// Centre and radius of a ball or an interval.
Ball ball_frame(const Domain& domain)
{
    if (const auto* iv = std::get_if<Interval>(&domain.shape()))
        return {make_point({0.5 * (iv->a + iv->b)}), 0.5 * (iv->b - iv->a)};
    return std::get<Ball>(domain.shape());
}

GreenProvider closed_green(const Domain& domain, double alpha)
{
    if (!has_closed_green(domain, alpha))
        throw std::invalid_argument("closed-form Green function needs a ball with d > alpha or d = 1 < alpha");
    return ball_green_provider(domain, alpha);
}

double quantile(std::vector<double> v, double q)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(std::floor(pos));
    const double t = pos - i;
    if (i + 1 >= v.size())
        return v.back();
    if (!std::isfinite(v[i]) || !std::isfinite(v[i + 1]))
        return t < 0.5 ? v[i] : v[i + 1];
    return v[i] + t * (v[i + 1] - v[i]);
}

double safe_ratio(double num, double den)
{
    if (den > 0.0)
        return num / den;
    if (num > 0.0)
        return kInf;
    return std::numeric_limits<double>::quiet_NaN();
}

// Block sums S[g][f][b] for independent groups sharing the block count.
struct BlockTable {
    int fields = 0;
    int nblocks = 0;
    std::vector<std::vector<std::vector<double>>> s;  // [group][field][block]

    int add_group()
    {
        s.emplace_back(fields, std::vector<double>(nblocks, 0.0));
        return static_cast<int>(s.size()) - 1;
    }
    // Totals over the resampled blocks idx, or over the first `upto` blocks.
    std::vector<std::vector<double>> totals(const std::vector<int>* idx, int upto) const
    {
        std::vector<std::vector<double>> t(s.size(), std::vector<double>(fields, 0.0));
        for (std::size_t g = 0; g < s.size(); ++g)
            for (int f = 0; f < fields; ++f) {
                double acc = 0.0;
                if (idx)
                    for (int b : *idx)
                        acc += s[g][f][b];
                else
                    for (int b = 0; b < upto; ++b)
                        acc += s[g][f][b];
                t[g][f] = acc;
            }
        return t;
    }
};

using Totals = std::vector<std::vector<double>>;
// (numerator, denominator) of one grid point from group totals.
using PointStat = std::function<std::pair<double, double>(const Totals&)>;

double band_of(const std::vector<double>& r)
{
    double lo = kInf, hi = -kInf;
    for (double v : r) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return safe_ratio(hi, lo);
}

void finish_report(RatioReport& rep, const BlockTable& table, const std::vector<PointStat>& stats,
                   const RatioRule& rule, std::uint64_t seed)
{
    const std::size_t np = stats.size();
    if (np == 0)
        throw std::invalid_argument(rep.experiment + ": empty grid");
    const Totals full = table.totals(nullptr, table.nblocks);
    const Totals half = table.totals(nullptr, table.nblocks / 2);
    std::vector<double> r(np), rh(np);
    for (std::size_t p = 0; p < np; ++p) {
        const auto [num, den] = stats[p](full);
        rep.points[p].num = num;
        rep.points[p].den = den;
        r[p] = safe_ratio(num, den);
        rep.points[p].ratio = r[p];
        const auto [nh, dh] = stats[p](half);
        rh[p] = safe_ratio(nh, dh);
    }
    Rng rng = make_rng(seed, stream_id(31, 0));
    std::uniform_int_distribution<int> pick(0, table.nblocks - 1);
    std::vector<std::vector<double>> boot(np);
    std::vector<double> bmin, bmax;
    std::vector<int> idx(table.nblocks);
    for (int k = 0; k < rule.bootstrap; ++k) {
        for (int& i : idx)
            i = pick(rng);
        const Totals t = table.totals(&idx, 0);
        double lo = kInf, hi = -kInf;
        for (std::size_t p = 0; p < np; ++p) {
            const auto [num, den] = stats[p](t);
            double v = safe_ratio(num, den);
            if (std::isnan(v))
                v = 0.0;
            boot[p].push_back(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        bmin.push_back(lo);
        bmax.push_back(hi);
    }
    const double qa = 0.5 * (1.0 - rule.level), qb = 1.0 - qa;
    for (std::size_t p = 0; p < np; ++p) {
        rep.points[p].lo = quantile(boot[p], qa);
        rep.points[p].hi = quantile(boot[p], qb);
        if (std::isnan(r[p]))
            rep.points[p].flagged = true;
    }
    rep.min_ratio = {*std::min_element(r.begin(), r.end()), quantile(bmin, qa), quantile(bmin, qb)};
    rep.max_ratio = {*std::max_element(r.begin(), r.end()), quantile(bmax, qa), quantile(bmax, qb)};
    rep.band = band_of(r);
    rep.band_half = band_of(rh);
    rep.expansion = safe_ratio(rep.band, rep.band_half) - 1.0;

    bool flagged = false, excluded = false, wide = false;
    for (const auto& p : rep.points) {
        flagged = flagged || p.flagged;
        excluded = excluded || p.hi <= 0.0 || p.lo == kInf;
        wide = wide || !(p.lo > 0.0) || !(p.hi < kInf);
    }
    const double exp_ref = std::isnan(rep.expansion_refined) ? -kInf : rep.expansion_refined;
    if (excluded) {
        rep.verdict = Verdict::violated;
        rep.reason = "a ratio interval lies outside (0, inf)";
    } else if (flagged) {
        rep.verdict = Verdict::inconclusive;
        rep.reason = "flagged estimates";
    } else if (wide) {
        rep.verdict = Verdict::inconclusive;
        rep.reason = "a ratio interval reaches 0 or infinity";
    } else if (!(rep.expansion < rule.max_expansion) || !(exp_ref < rule.max_expansion)) {
        rep.verdict = Verdict::inconclusive;
        rep.reason = "band expands under refinement";
    } else {
        rep.verdict = Verdict::bounded;
        rep.reason = "all intervals inside (0, inf), band stable";
    }
}

long harness_block(const RunConfig& run)
{
    // At least 40 blocks so the bootstrap and the nested halves have room.
    return std::max(1L, std::min(run.block, run.n / 40));
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string point_str(const Point& p)
{
    std::string s;
    for (int i = 0; i < p.size(); ++i) {
        if (i)
            s += ';';
        s += fmt(p(i));
    }
    return s;
}

nlohmann::json point_json(const Point& p)
{
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < p.size(); ++i)
        a.push_back(p(i));
    return a;
}

double ball_volume_h(int d, double h)
{
    return ball_volume(d) * std::pow(h, d);
}

nlohmann::json run_json(const RunConfig& run)
{
    return {{"n", run.n}, {"seed", run.seed}, {"block", run.block}};
}

}  // namespace

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::bounded:
        return "bounded";
    case Verdict::violated:
        return "violated";
    default:
        return "inconclusive";
    }
}

nlohmann::json RatioReport::to_json() const
{
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
        nlohmann::json j = {{"x", point_json(p.x)},   {"numerator", p.num}, {"denominator", p.den},
                            {"ratio", p.ratio},       {"ci", {p.lo, p.hi}}, {"flagged", p.flagged}};
        if (p.y.size() > 0)
            j["y"] = point_json(p.y);
        if (!p.extra.empty())
            j["extra"] = p.extra;
        pts.push_back(std::move(j));
    }
    nlohmann::json j = {{"experiment", experiment},
                        {"points", pts},
                        {"min_ratio", {{"value", min_ratio.value}, {"ci", {min_ratio.lo, min_ratio.hi}}}},
                        {"max_ratio", {{"value", max_ratio.value}, {"ci", {max_ratio.lo, max_ratio.hi}}}},
                        {"band", band},
                        {"band_half", band_half},
                        {"expansion", expansion},
                        {"verdict", to_string(verdict)},
                        {"reason", reason},
                        {"config", config}};
    if (!std::isnan(expansion_refined))
        j["expansion_refined"] = expansion_refined;
    return j;
}

std::string RatioReport::to_csv(const std::string& hash) const
{
    std::ostringstream os;
    os << "config_hash,experiment,x,y,numerator,denominator,ratio,ci_lo,ci_hi,flagged\n";
    for (const auto& p : points)
        os << hash << ',' << experiment << ',' << point_str(p.x) << ',' << point_str(p.y) << ',' << fmt(p.num) << ','
           << fmt(p.den) << ',' << fmt(p.ratio) << ',' << fmt(p.lo) << ',' << fmt(p.hi) << ','
           << (p.flagged ? 1 : 0) << '\n';
    return os.str();
}

std::vector<Point> halton_points(const Domain& domain, int n, double margin, int base_offset)
{
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    const int d = domain.dim();
    const Point lo = domain.bbox_lower(), hi = domain.bbox_upper();
    const double m = margin * domain.diam();
    std::vector<Point> out;
    for (long i = 1; static_cast<int>(out.size()) < n; ++i) {
        if (i > 1000000)
            throw std::runtime_error("halton_points: margin leaves no room in the domain");
        Point p(d);
        for (int k = 0; k < d; ++k)
            p(k) = lo(k) + (hi(k) - lo(k)) * radical_inverse(i, primes[(k + base_offset) % 8]);
        if (domain.contains(p) && domain.dist_to_boundary(p) >= m)
            out.push_back(p);
    }
    return out;
}

namespace {

struct GreenGrid {
    std::vector<Point> xs;
    std::vector<std::vector<Point>> ys;  // per x
};

GreenGrid green_grid(const Domain& domain, const PairGrid& g, double h)
{
    const double sep = g.min_sep > 0.0 ? g.min_sep : 4.0 * h;
    GreenGrid out;
    out.xs = halton_points(domain, g.nx, g.margin, 0);
    // y points come from a disjoint stretch of the same sequence in other bases.
    const auto pool = halton_points(domain, 4 * g.ny * g.nx + 16, g.margin, 3);
    std::size_t next = 0;
    for (const Point& x : out.xs) {
        std::vector<Point> ys;
        while (static_cast<int>(ys.size()) < g.ny && next < pool.size()) {
            const Point& y = pool[next++];
            if ((y - x).norm() >= sep)
                ys.push_back(y);
        }
        if (static_cast<int>(ys.size()) < g.ny)
            throw std::runtime_error("pair grid: not enough separated pairs");
        out.ys.push_back(std::move(ys));
    }
    return out;
}

RatioReport run_green(const Domain& domain, const LevyModel& model, const CompareConfig& cfg, const GreenGrid& grid,
                      double h)
{
    RatioReport rep;
    rep.experiment = "green";
    const int d = domain.dim();
    RunConfig run = cfg.run;
    run.block = harness_block(run);
    BlockTable table;
    table.nblocks = static_cast<int>((run.n + run.block - 1) / run.block);
    std::size_t kmax = 0;
    for (const auto& ys : grid.ys)
        kmax = std::max(kmax, ys.size());
    table.fields = static_cast<int>(2 * kmax);
    const bool exact = has_closed_green(domain, model.alpha());
    const GreenProvider green = exact ? closed_green(domain, model.alpha()) : GreenProvider{};
    const double vol = ball_volume_h(d, h), h2 = h * h;
    std::vector<PointStat> stats;
    for (std::size_t g = 0; g < grid.xs.size(); ++g) {
        const Point& x = grid.xs[g];
        const auto& ys = grid.ys[g];
        std::vector<CoupledTerm> terms;
        for (const Point& y : ys) {
            auto ind = [y, h2, vol](const Point& p) { return (p - y).squaredNorm() < h2 ? 1.0 / vol : 0.0; };
            terms.push_back({ind, ind});
        }
        RunConfig rg = run;
        rg.seed = group_seed(run.seed, g);
        const CoupledBlocks cb = coupled_blocks(domain, model, x, terms, rg, cfg.params);
        const int gi = table.add_group();
        for (int b = 0; b < table.nblocks; ++b)
            for (std::size_t j = 0; j < ys.size(); ++j) {
                table.s[gi][2 * j][b] = cb.y[b][j];
                table.s[gi][2 * j + 1][b] = cb.x[b][j];
            }
        const bool hits = cb.horizon_hits > 0.001 * cb.paths();
        const double n = static_cast<double>(cb.paths());
        for (std::size_t j = 0; j < ys.size(); ++j) {
            RatioPoint p;
            p.x = x;
            p.y = ys[j];
            p.flagged = hits;
            double sx = 0.0, sx2 = 0.0;
            for (int b = 0; b < table.nblocks; ++b) {
                const double m = cb.x[b][j] / cb.n[b];
                sx += m;
                sx2 += m * m;
            }
            const double mean = sx / table.nblocks;
            const double se = std::sqrt(std::max(0.0, sx2 / table.nblocks - mean * mean) / (table.nblocks - 1));
            p.extra = {{"stable_mc", mean}, {"stable_mc_se", se}, {"horizon_hits", cb.horizon_hits}};
            if (exact)
                p.extra["stable_exact"] = green(x, ys[j]);
            rep.points.push_back(std::move(p));
            const int fy = static_cast<int>(2 * j), fx = fy + 1;
            stats.push_back([gi, fy, fx, n](const Totals& t) { return std::make_pair(t[gi][fy] / n, t[gi][fx] / n); });
        }
    }
    finish_report(rep, table, stats, cfg.rule, run.seed);
    rep.config = {{"domain", domain_to_json(domain)}, {"model", model_to_json(model)},
                  {"run", run_json(run)},             {"h", h},
                  {"nx", cfg.grid.nx},                {"ny", cfg.grid.ny},
                  {"margin", cfg.grid.margin}};
    return rep;
}

}  // namespace

RatioReport compare_green(const Domain& domain, const LevyModel& model, const CompareConfig& cfg)
{
    const double h = cfg.h > 0.0 ? cfg.h : default_bandwidth(domain);
    RatioReport rep = run_green(domain, model, cfg, green_grid(domain, cfg.grid, h), h);
    if (cfg.refine) {
        CompareConfig fine = cfg;
        fine.grid.nx *= 2;
        fine.grid.ny *= 2;
        fine.refine = false;
        const RatioReport r2 = run_green(domain, model, fine, green_grid(domain, fine.grid, h), h);
        rep.expansion_refined = safe_ratio(r2.band, rep.band) - 1.0;
        rep.config["refined_band"] = r2.band;
        // Rerun the verdict with the refined expansion in place.
        if (rep.verdict == Verdict::bounded && !(rep.expansion_refined < cfg.rule.max_expansion)) {
            rep.verdict = Verdict::inconclusive;
            rep.reason = "band expands under grid refinement";
        }
    }
    return rep;
}

RatioReport compare_moments(const Domain& domain, const LevyModel& model, const std::vector<Point>& xs,
                            const CompareConfig& cfg)
{
    RatioReport rep;
    rep.experiment = "moments";
    RunConfig run = cfg.run;
    run.block = harness_block(run);
    BlockTable table;
    table.nblocks = static_cast<int>((run.n + run.block - 1) / run.block);
    table.fields = 2;
    const bool exact = domain.is_ball();
    std::vector<PointStat> stats;
    for (std::size_t g = 0; g < xs.size(); ++g) {
        RunConfig rg = run;
        rg.seed = group_seed(run.seed, g);
        // A term with an X side makes the engine follow both paths.
        const std::vector<CoupledTerm> terms{{[](const Point&) { return 0.0; }, {}}};
        const CoupledBlocks cb = coupled_blocks(domain, model, xs[g], terms, rg, cfg.params);
        const int gi = table.add_group();
        for (int b = 0; b < table.nblocks; ++b) {
            table.s[gi][0][b] = cb.tau_y[b];
            table.s[gi][1][b] = cb.tau_x[b];
        }
        RatioPoint p;
        p.x = xs[g];
        p.flagged = cb.horizon_hits > 0.001 * cb.paths();
        p.extra = {{"delta", domain.dist_to_boundary(xs[g])}, {"horizon_hits", cb.horizon_hits}};
        if (exact) {
            const Ball b = ball_frame(domain);
            p.extra["stable_exact"] = ball_mean_exit(xs[g] - b.center, b.radius, model.alpha());
        }
        rep.points.push_back(std::move(p));
        const double n = static_cast<double>(cb.paths());
        stats.push_back([gi, n](const Totals& t) { return std::make_pair(t[gi][0] / n, t[gi][1] / n); });
    }
    finish_report(rep, table, stats, cfg.rule, run.seed);
    rep.config = {{"domain", domain_to_json(domain)}, {"model", model_to_json(model)}, {"run", run_json(run)}};
    return rep;
}

PoissonComparison compare_poisson(const Domain& domain, const LevyModel& model, const std::vector<Point>& xs,
                                  const std::vector<Point>& zs, double r_branch, const CompareConfig& cfg)
{
    for (const Point& z : zs)
        if (domain.contains(z))
            throw std::invalid_argument("compare_poisson: z must lie outside the domain");
    PoissonComparison out;
    out.kernel.experiment = "poisson";
    out.far.experiment = "poisson_far";
    RunConfig run = cfg.run;
    run.block = harness_block(run);
    BlockTable table;
    table.nblocks = static_cast<int>((run.n + run.block - 1) / run.block);
    table.fields = static_cast<int>(2 * zs.size() + 1);
    const LevyModel stable = model.stable_part();
    const bool exact = domain.is_ball() && domain.dim() > model.alpha();
    std::vector<PointStat> near_stats, far_stats;
    std::vector<int> is_far(zs.size());
    for (std::size_t k = 0; k < zs.size(); ++k) {
        // Distance from z to the closure of D, from outside.
        is_far[k] = domain.dist_to_boundary(zs[k]) > r_branch;
    }
    for (std::size_t g = 0; g < xs.size(); ++g) {
        std::vector<CoupledTerm> terms;
        for (const Point& z : zs)
            terms.push_back({[&stable, z](const Point& p) { return levy_density(stable, p - z); },
                             [&model, z](const Point& p) { return levy_density(model, p - z); }});
        RunConfig rg = run;
        rg.seed = group_seed(run.seed, g);
        const CoupledBlocks cb = coupled_blocks(domain, model, xs[g], terms, rg, cfg.params);
        const int gi = table.add_group();
        for (int b = 0; b < table.nblocks; ++b) {
            for (std::size_t k = 0; k < zs.size(); ++k) {
                table.s[gi][2 * k][b] = cb.y[b][k];
                table.s[gi][2 * k + 1][b] = cb.x[b][k];
            }
            table.s[gi][2 * zs.size()][b] = cb.tau_x[b];
        }
        const bool hits = cb.horizon_hits > 0.001 * cb.paths();
        const double n = static_cast<double>(cb.paths());
        const int ft = static_cast<int>(2 * zs.size());
        for (std::size_t k = 0; k < zs.size(); ++k) {
            RatioPoint p;
            p.x = xs[g];
            p.y = zs[k];
            p.flagged = hits;
            p.extra = {{"branch", is_far[k] ? "far" : "near"}, {"delta_z", domain.dist_to_boundary(zs[k])}};
            if (exact) {
                const Ball b = ball_frame(domain);
                p.extra["stable_exact"] = ball_poisson_kernel(xs[g] - b.center, zs[k] - b.center, b.radius, model.alpha());
            }
            const int fy = static_cast<int>(2 * k), fx = fy + 1;
            near_stats.push_back(
                [gi, fy, fx, n](const Totals& t) { return std::make_pair(t[gi][fy] / n, t[gi][fx] / n); });
            out.kernel.points.push_back(p);
            if (is_far[k]) {
                const double nu = levy_density(model, zs[k] - xs[g]);
                p.extra["nu_y"] = nu;
                if (exact) {
                    const Ball b = ball_frame(domain);
                    p.extra["mean_exit_exact"] = ball_mean_exit(xs[g] - b.center, b.radius, model.alpha());
                }
                far_stats.push_back([gi, fy, ft, n, nu](const Totals& t) {
                    return std::make_pair(t[gi][fy] / n, nu * t[gi][ft] / n);
                });
                out.far.points.push_back(std::move(p));
            }
        }
    }
    finish_report(out.kernel, table, near_stats, cfg.rule, run.seed);
    if (!far_stats.empty())
        finish_report(out.far, table, far_stats, cfg.rule, run.seed);
    else
        out.far.reason = "no far-branch z";
    out.kernel.config = {{"domain", domain_to_json(domain)},
                         {"model", model_to_json(model)},
                         {"run", run_json(run)},
                         {"r_branch", r_branch}};
    out.far.config = out.kernel.config;
    return out;
}

RatioReport bhp_check(const Domain& domain, const LevyModel& model, const BoundaryData& u, const BoundaryData& v,
                      const std::vector<Point>& xs, const CompareConfig& cfg)
{
    if (xs.size() < 2)
        throw std::invalid_argument("bhp_check: needs at least two evaluation points");
    RatioReport rep;
    rep.experiment = "bhp";
    RunConfig run = cfg.run;
    run.block = harness_block(run);
    BlockTable table;
    table.nblocks = static_cast<int>((run.n + run.block - 1) / run.block);
    table.fields = 2;
    for (std::size_t g = 0; g < xs.size(); ++g) {
        RunConfig rg = run;
        rg.seed = group_seed(run.seed, g);
        const auto pos = exit_positions(domain, model, xs[g], rg, cfg.params);
        const int gi = table.add_group();
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const int b = static_cast<int>(i / run.block);
            table.s[gi][0][b] += u(pos[i]);
            table.s[gi][1][b] += v(pos[i]);
        }
    }
    std::vector<PointStat> stats;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            RatioPoint p;
            p.x = xs[i];
            p.y = xs[j];
            rep.points.push_back(std::move(p));
            const int a = static_cast<int>(i), b = static_cast<int>(j);
            stats.push_back([a, b](const Totals& t) { return std::make_pair(t[a][0] * t[b][1], t[b][0] * t[a][1]); });
        }
    finish_report(rep, table, stats, cfg.rule, run.seed);
    rep.config = {{"domain", domain_to_json(domain)}, {"model", model_to_json(model)}, {"run", run_json(run)}};
    return rep;
}

// ---------------------------------------------------------------------------
// Nested quadrature.

namespace {

using Fn = std::function<double(const Point&)>;
using Radial = std::function<double(double)>;
using Outer = std::function<double(const Point& x, const Point& w)>;

// Catmull-Rom on equally spaced samples; clamped at the ends.
double catmull(const std::vector<double>& v, double f)
{
    const int n = static_cast<int>(v.size());
    if (n == 1)
        return v[0];
    f = std::clamp(f, 0.0, n - 1.0);
    const int i = std::min(n - 2, static_cast<int>(f));
    const double t = f - i;
    auto at = [&](int j) { return v[std::clamp(j, 0, n - 1)]; };
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * t * (p2 - p0 + t * (2 * p0 - 5 * p1 + 4 * p2 - p3 + t * (3 * (p1 - p2) + p3 - p0)));
}

// Samples of g on log-spaced radii around a pole along a set of directions
// (both signs in d = 1, equally spaced angles in d = 2, one direction when
// g is radial).
class PolarTable {
public:
    PolarTable(const Domain& domain, const Point& pole, bool radial, int nr, int nth, double r_min,
               const std::function<double(const Point&)>& g)
        : pole_(pole), d_(domain.dim()), radial_(radial)
    {
        const Point lo = domain.bbox_lower(), hi = domain.bbox_upper();
        double r_max = 0.0;
        for (int c = 0; c < (1 << d_); ++c) {
            Point corner(d_);
            for (int k = 0; k < d_; ++k)
                corner(k) = (c >> k) & 1 ? hi(k) : lo(k);
            r_max = std::max(r_max, (corner - pole).norm());
        }
        u0_ = std::log(r_min);
        du_ = (std::log(r_max) - u0_) / (nr - 1);
        if (radial)
            dirs_ = 1;
        else if (d_ == 1)
            dirs_ = 2;
        else if (d_ == 2)
            dirs_ = nth;
        else
            throw std::invalid_argument("polar table: d = 3 needs a radial integrand");
        vals_.assign(dirs_, std::vector<double>(nr));
        std::vector<std::pair<int, int>> jobs;
        for (int a = 0; a < dirs_; ++a)
            for (int i = 0; i < nr; ++i)
                jobs.emplace_back(a, i);
        parallel_for(static_cast<long>(jobs.size()), 0, [&](long k) {
            const auto [a, i] = jobs[k];
            vals_[a][i] = g(pole + std::exp(u0_ + i * du_) * direction(a));
        });
        positive_ = true;
        for (const auto& row : vals_)
            for (double v : row)
                positive_ = positive_ && v > 0.0;
        if (positive_)
            for (auto& row : vals_)
                for (double& v : row)
                    v = std::log(v);
    }

    double operator()(const Point& w) const
    {
        const Point v = w - pole_;
        const double r = v.norm();
        if (r == 0.0)
            return 0.0;
        const double u = std::log(r);
        if (dirs_ == 1)
            return radial_value(vals_[0], u);
        if (d_ == 1)
            return radial_value(vals_[v(0) > 0 ? 0 : 1], u);
        double th = std::atan2(v(1), v(0));
        if (th < 0)
            th += 2 * kPi;
        const double f = th / (2 * kPi) * dirs_;
        const int j = static_cast<int>(std::floor(f)) % dirs_;
        const double t = f - std::floor(f);
        double p[4];
        for (int k = 0; k < 4; ++k)
            p[k] = radial_value(vals_[(j - 1 + k + dirs_) % dirs_], u, false);
        double s = p[1] + 0.5 * t * (p[2] - p[0] + t * (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3] + t * (3 * (p[1] - p[2]) + p[3] - p[0])));
        return positive_ ? std::exp(s) : s;
    }

private:
    Point direction(int a) const
    {
        if (dirs_ == 1) {
            Point e = Point::Zero(d_);
            e(0) = 1.0;
            return e;
        }
        if (d_ == 1)
            return make_point({a == 0 ? 1.0 : -1.0});
        const double th = 2 * kPi * a / dirs_;
        return make_point({std::cos(th), std::sin(th)});
    }

    // Value along one direction; below the first node the first two nodes
    // are extended linearly (a power law in log mode).
    double radial_value(const std::vector<double>& row, double u, bool finish = true) const
    {
        double s;
        if (u < u0_)
            s = row.size() > 1 ? row[0] + (row[1] - row[0]) * (u - u0_) / du_ : row[0];
        else
            s = catmull(row, (u - u0_) / du_);
        if (!positive_ && u < u0_)
            s = row[0];
        return finish && positive_ ? std::exp(s) : s;
    }

    Point pole_;
    int d_;
    bool radial_;
    int dirs_ = 1;
    double u0_ = 0.0, du_ = 1.0;
    bool positive_ = true;
    std::vector<std::vector<double>> vals_;
};

// int_D k(|w - z|) f(z) dz.
double inner_integral(const Domain& domain, const Radial& k, const Fn& f, const Point* pole, const Point& w,
                      const CubatureSpec& spec)
{
    const double tiny = 1e-150 * domain.diam();
    const Point* focus = pole && (*pole - w).norm() > 0.0 ? pole : nullptr;
    return integrate_polar(
               domain, w,
               [&](const Point& z, double s) {
                   if (s < tiny)
                       return 0.0;
                   return k(s) * f(z);
               },
               spec, pole, focus, 1e-3)
        .value;
}

std::vector<double> nested(const Domain& domain, const Outer& K, const Radial& k, const Fn& f, const Point* pole,
                           const std::vector<Point>& xs, const NestedOptions& opt)
{
    const double tiny = 1e-150 * domain.diam();
    std::function<double(const Point&)> g;
    std::unique_ptr<PolarTable> table;
    auto direct = [&](const Point& w) { return inner_integral(domain, k, f, pole, w, opt.inner); };
    if (pole && (opt.radial || domain.dim() <= 2)) {
        table = std::make_unique<PolarTable>(domain, *pole, opt.radial, opt.table_radial, opt.table_angular,
                                             opt.r_min * domain.diam(), direct);
        g = [&](const Point& w) { return (*table)(w); };
    } else {
        g = direct;
    }
    std::vector<double> out(xs.size());
    parallel_for(static_cast<long>(xs.size()), 0, [&](long i) {
        const Point& x = xs[i];
        const Point* focus = pole && (*pole - x).norm() > 0.0 ? pole : nullptr;
        out[i] = integrate_polar(
                     domain, x,
                     [&](const Point& w, double s) {
                         // Nodes closer than an ulp to x land on x itself.
                         if (s < tiny || w == x)
                             return 0.0;
                         return K(x, w) * g(w);
                     },
                     opt.outer, pole, focus, 1e-3)
                     .value;
    });
    return out;
}

// |sigma| (or sigma) as a cheap radial function. Relativistic sigma is
// tabulated in log-log form because its small-r branch is a quadrature.
Radial sigma_function(const LevyModel& model, double r_hi, bool signed_sigma)
{
    if (model.kind() != ModelKind::relativistic) {
        LevyModel m = model;
        return [m, signed_sigma](double r) {
            const double s = m.sigma_radial(r);
            return signed_sigma ? s : std::fabs(s);
        };
    }
    const int n = 600;
    const double lo = std::log(1e-10 * r_hi), hi = std::log(2.0 * r_hi), du = (hi - lo) / (n - 1);
    auto vals = std::make_shared<std::vector<double>>(n);
    for (int i = 0; i < n; ++i)
        (*vals)[i] = std::log(model.sigma_radial(std::exp(lo + i * du)));
    return [vals, lo, du, n](double r) {
        const double u = std::log(r);
        const auto& v = *vals;
        if (u < lo)
            return std::exp(v[0] + (v[1] - v[0]) * (u - lo) / du);
        return std::exp(catmull(v, std::min((u - lo) / du, n - 1.0)));
    };
}

bool sigma_vanishes(const LevyModel& model, double r_max)
{
    if (model.kind() == ModelKind::stable)
        return true;
    if (model.kind() == ModelKind::truncated)
        return model.cutoff() >= r_max;
    for (int i = 1; i <= 4000; ++i)
        if (model.sigma_radial(r_max * i / 4000.0) != 0.0)
            return false;
    return true;
}

}  // namespace

std::vector<double> h_sigma_apply(const Domain& domain, const LevyModel& model, const GreenProvider& green,
                                  const std::function<double(const Point&)>& f, const Point* pole,
                                  const std::vector<Point>& xs, const NestedOptions& opt, bool signed_sigma)
{
    if (domain.dim() != model.dim())
        throw std::invalid_argument("h_sigma_apply: dimension mismatch");
    if (sigma_vanishes(model, domain.diam()))
        return std::vector<double>(xs.size(), 0.0);
    const Radial k = sigma_function(model, domain.diam(), signed_sigma);
    const Outer K = [&green](const Point& x, const Point& w) { return green(x, w); };
    return nested(domain, K, k, f, pole, xs, opt);
}

std::vector<double> r_tilde(const Domain& domain, const LevyModel& model, const GreenProvider& green,
                            const std::vector<Point>& xs, const Point& y, const NestedOptions& opt)
{
    const double tiny = 1e-12 * domain.diam();
    const Fn f = [&green, y, tiny](const Point& z) { return (z - y).norm() < tiny ? 0.0 : green(z, y); };
    return h_sigma_apply(domain, model, green, f, &y, xs, opt, true);
}

double log_slope(const std::vector<double>& s, const std::vector<double>& v)
{
    const std::size_t n = s.size();
    if (n < 2 || v.size() != n)
        throw std::invalid_argument("log_slope: needs at least two matching samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(s[i]);
        my += std::log(v[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::log(s[i]) - mx;
        sxy += a * (std::log(v[i]) - my);
        sxx += a * a;
    }
    return sxy / sxx;
}

std::string calka_case(double a, double b, double rho)
{
    const double e = a + rho + b;
    if (std::fabs(a - b) < 1e-12 && std::fabs(a + rho) < 1e-12)
        return "equal";
    if (e < -1e-12)
        return "power";
    if (std::fabs(e) <= 1e-12)
        return "log";
    return "bounded";
}

nlohmann::json CalkaCase::to_json() const
{
    return {{"case", name},          {"a", a},
            {"b", b},                {"rho", rho},
            {"separations", separations}, {"integrals", integrals},
            {"slope", slope},        {"expected", expected},
            {"raw_slope", raw_slope}, {"pass", pass},
            {"bound_slope", bound_slope}, {"bound_holds", bound_holds}};
}

std::vector<double> halving_ladder(double s0, int steps)
{
    std::vector<double> out;
    for (int k = 0; k < steps; ++k)
        out.push_back(s0 * std::pow(0.5, k));
    return out;
}

CalkaCase calka_bound_check(const Domain& domain, double a, double b, double rho, const Point& y,
                            const std::vector<double>& ladder, double tol, const NestedOptions& opt)
{
    const int d = domain.dim();
    if (!(rho > -d) || !(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("calka_bound_check: requires rho > -d and a, b > 0");
    if (ladder.size() < 2)
        throw std::invalid_argument("calka_bound_check: ladder needs two or more separations");
    CalkaCase c;
    c.name = calka_case(a, b, rho);
    c.a = a;
    c.b = b;
    c.rho = rho;
    c.separations = ladder;
    const double tiny = 1e-12 * domain.diam();
    const Fn f = [y, a, d, tiny](const Point& z) {
        const double r = (z - y).norm();
        return r < tiny ? 0.0 : std::pow(r, a - d);
    };
    const Radial k = [rho](double r) { return std::pow(r, rho); };
    const Outer K = [b, d](const Point& x, const Point& w) { return std::pow((x - w).norm(), b - d); };
    std::vector<Point> xs;
    for (double s : ladder) {
        Point x = y;
        x(0) += s;
        if (!domain.contains(x))
            throw std::invalid_argument("calka_bound_check: ladder leaves the domain");
        xs.push_back(x);
    }
    NestedOptions o = opt;
    if (domain.is_ball() && (std::get<Ball>(domain.shape()).center - y).norm() < 1e-14)
        o.radial = true;
    c.integrals = nested(domain, K, k, f, &y, xs, o);
    c.raw_slope = log_slope(ladder, c.integrals);
    if (c.name == "log" || c.name == "equal") {
        std::vector<double> lv;
        for (double s : ladder)
            lv.push_back(1.0 + std::log(domain.diam() / s));
        c.slope = log_slope(lv, c.integrals);
        c.expected = 1.0;
    } else {
        c.slope = c.raw_slope;
        c.expected = c.name == "power" ? a + rho + b : 0.0;
    }
    c.pass = std::fabs(c.slope - c.expected) <= tol;
    // Growth of I / form per unit of log(1 / s) over the last rung.
    auto form = [&](double sep) {
        if (c.name == "power")
            return std::pow(sep, a + rho + b);
        if (c.name == "bounded")
            return 1.0;
        return 1.0 + std::log(domain.diam() / sep);
    };
    const std::size_t m = ladder.size() - 1;
    c.bound_slope = std::log((c.integrals[m] / form(ladder[m])) / (c.integrals[m - 1] / form(ladder[m - 1]))) /
                    std::log(ladder[m - 1] / ladder[m]);
    c.bound_holds = c.bound_slope < tol;
    return c;
}

nlohmann::json to_json(const std::vector<ContractionRow>& rows)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rows)
        a.push_back({{"diam", r.diam}, {"theta", r.theta}, {"worst_x", point_json(r.worst_x)},
                     {"zero_sigma", r.zero_sigma}});
    return a;
}

std::vector<ContractionRow> contraction_scan(const LevyModel& model, const std::vector<double>& diams,
                                             const NestedOptions& opt)
{
    const int d = model.dim();
    if (!(d > model.alpha()))
        throw std::domain_error("contraction_scan: requires d > alpha");
    std::vector<ContractionRow> out;
    for (double D : diams) {
        const Domain ball = Domain::ball(zero_point(d), 0.5 * D);
        const GreenProvider green = ball_green_provider(ball, model.alpha());
        const Point y = zero_point(d);
        // G~(., 0) is radial, so x along one ray covers the disk.
        std::vector<Point> xs;
        for (double f : {0.05, 0.15, 0.3, 0.5, 0.7, 0.85, 0.95}) {
            Point x = zero_point(d);
            x(0) = f * 0.5 * D;
            xs.push_back(x);
        }
        ContractionRow row;
        row.diam = D;
        row.zero_sigma = sigma_vanishes(model, D);
        NestedOptions o = opt;
        o.radial = true;
        const double tiny = 1e-12 * D;
        const Fn f = [&green, y, tiny](const Point& z) { return (z - y).norm() < tiny ? 0.0 : green(z, y); };
        const auto h = h_sigma_apply(ball, model, green, f, &y, xs, o);
        row.worst_x = xs[0];
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = h[i] / green(xs[i], y);
            if (r > row.theta) {
                row.theta = r;
                row.worst_x = xs[i];
            }
        }
        out.push_back(row);
    }
    return out;
}

nlohmann::json PowerFit::to_json() const
{
    return {{"separations", separations}, {"values", values}, {"exponent", exponent}, {"prefactor", prefactor}};
}

PowerFit rtilde_ratio_fit(const Domain& ball, const LevyModel& model, const std::vector<double>& ladder,
                          const NestedOptions& opt)
{
    if (!has_closed_green(ball, model.alpha()))
        throw std::invalid_argument("rtilde_ratio_fit: needs a ball with a closed-form Green function");
    const GreenProvider green = ball_green_provider(ball, model.alpha());
    const Point y = std::get<Ball>(ball.shape()).center;
    std::vector<Point> xs;
    for (double s : ladder) {
        Point x = y;
        x(0) += s;
        xs.push_back(x);
    }
    NestedOptions o = opt;
    o.radial = true;
    const auto r = r_tilde(ball, model, green, xs, y, o);
    PowerFit fit;
    fit.separations = ladder;
    for (std::size_t i = 0; i < xs.size(); ++i)
        fit.values.push_back(r[i] / green(xs[i], y));
    fit.exponent = log_slope(ladder, fit.values);
    double m = 0.0;
    for (std::size_t i = 0; i < ladder.size(); ++i)
        m += std::log(fit.values[i]) - fit.exponent * std::log(ladder[i]);
    fit.prefactor = std::exp(m / ladder.size());
    return fit;
}

nlohmann::json ScalarBand::to_json() const
{
    return {{"min", min}, {"max", max}, {"count", count}};
}

ScalarBand phi_ratio_check(const Domain& ball, double alpha, double gamma, int quadruples, std::uint64_t seed)
{
    if (!(gamma > 0.0 && gamma < alpha))
        throw std::invalid_argument("phi_ratio_check: requires 0 < gamma < alpha");
    const PhiTilde phi(ball, alpha, ball_green_provider(ball, alpha));
    Rng rng = make_rng(seed, stream_id(32, 0));
    ScalarBand out{kInf, 0.0, 0};
    while (out.count < quadruples) {
        const Point x = ball.sample_uniform(rng), y = ball.sample_uniform(rng), z = ball.sample_uniform(rng),
                    w = ball.sample_uniform(rng);
        const double dxy = (x - y).norm(), dxw = (x - w).norm(), dzy = (z - y).norm();
        if (dxy == 0.0 || dxw == 0.0 || dzy == 0.0)
            continue;
        const double pa = phi(interpolation_point(ball, x, y));
        const double lhs = pa * pa / (phi(interpolation_point(ball, x, w)) * phi(interpolation_point(ball, z, y)));
        const double rhs = std::max({1.0, std::pow(dxy / dxw, gamma), std::pow(dxy / dzy, gamma),
                                     std::pow(dxy, 2 * gamma) / (std::pow(dxw, gamma) * std::pow(dzy, gamma))});
        const double q = lhs / rhs;
        out.min = std::min(out.min, q);
        out.max = std::max(out.max, q);
        ++out.count;
    }
    return out;
}

ScalarBand property_a_check(const Domain& ball, double alpha, int pairs, std::uint64_t seed)
{
    if (!has_closed_green(ball, alpha))
        throw std::invalid_argument("property_a_check: needs a ball with a closed-form Green function");
    const auto& b = std::get<Ball>(ball.shape());
    Rng rng = make_rng(seed, stream_id(33, 0));
    ScalarBand out{kInf, 0.0, 0};
    while (out.count < pairs) {
        const Point x = ball.sample_uniform(rng), y = ball.sample_uniform(rng);
        if ((x - y).norm() == 0.0)
            continue;
        const double q = ball_mean_exit(x - b.center, b.radius, alpha) * ball_mean_exit(y - b.center, b.radius, alpha)
            / ball_green(x - b.center, y - b.center, b.radius, alpha);
        out.min = std::min(out.min, q);
        out.max = std::max(out.max, q);
        ++out.count;
    }
    return out;
}

ScalarBand rfala_check(const Domain& interval, const LevyModel& model, int n, const NestedOptions& opt)
{
    if (interval.dim() != 1 || model.dim() != 1)
        throw std::invalid_argument("rfala_check: d = 1 only");
    const double alpha = model.alpha();
    const GreenProvider green = closed_green(interval, alpha);
    const double a = interval.bbox_lower()(0), len = interval.bbox_upper()(0) - a;
    std::vector<Point> grid;
    for (int i = 0; i < n; ++i)
        grid.push_back(make_point({a + len * (i + 0.5) / n}));
    const double rho = std::min(model.envelope_rho(), 1.0);
    ScalarBand out{kInf, 0.0, 0};
    for (int j = 0; j < n; ++j) {
        std::vector<Point> xs;
        for (int i = 0; i < n; ++i)
            if (i != j)
                xs.push_back(grid[i]);
        const auto r = r_tilde(interval, model, green, xs, grid[j], opt);
        const double dy = interval.dist_to_boundary(grid[j]);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double dx = interval.dist_to_boundary(xs[i]);
            const double q = r[i] * std::pow(std::fabs(xs[i](0) - grid[j](0)), 1.0 - rho) / std::pow(dx * dy, 0.5 * alpha);
            out.min = std::min(out.min, q);
            out.max = std::max(out.max, q);
            ++out.count;
        }
    }
    return out;
}

nlohmann::json OccupationIdentity::to_json() const
{
    return {{"integral", levygreen::to_json(integral)}, {"exit", levygreen::to_json(exit)}, {"rel_diff", rel_diff}};
}

OccupationIdentity occupation_identity(const Domain& domain, const LevyModel& model, const Point& x,
                                       const RunConfig& cfg, int angles, int radial)
{
    const int d = domain.dim();
    if (d > 2)
        throw std::invalid_argument("occupation_identity: d <= 2");
    const double alpha = model.alpha(), h0 = default_bandwidth(domain);
    const auto& gl = gauss_legendre(radial);
    std::vector<Point> dirs;
    std::vector<double> dw;
    if (d == 1) {
        dirs = {make_point({1.0}), make_point({-1.0})};
        dw = {1.0, 1.0};
    } else {
        for (int k = 0; k < angles; ++k) {
            const double th = 2 * kPi * (k + 0.5) / angles;
            dirs.push_back(make_point({std::cos(th), std::sin(th)}));
            dw.push_back(2 * kPi / angles);
        }
    }
    struct Node {
        Point y;
        double h2, weight;
    };
    auto nodes = std::make_shared<std::vector<Node>>();
    for (std::size_t k = 0; k < dirs.size(); ++k) {
        const auto seg = domain.ray_segments(x, dirs[k]);
        if (seg.empty())
            continue;
        const double R = seg.front().second;
        for (int i = 0; i < radial; ++i) {
            const double v = 0.5 * (gl.nodes[i] + 1.0), wv = 0.5 * gl.weights[i];
            // s = R v^{1/alpha} absorbs the s^{alpha-d} pole of G.
            const double s = R * std::pow(v, 1.0 / alpha);
            const double jac = R / alpha * std::pow(v, 1.0 / alpha - 1.0) * std::pow(s, d - 1);
            const double h = std::min(h0, s / 2.5);
            nodes->push_back({x + s * dirs[k], h * h, dw[k] * wv * jac / ball_volume_h(d, h)});
        }
    }
    const CoupledTerm term{{}, [nodes](const Point& p) {
                               double acc = 0.0;
                               for (const auto& n : *nodes)
                                   if ((p - n.y).squaredNorm() < n.h2)
                                       acc += n.weight;
                               return acc;
                           }};
    RunConfig run = cfg;
    run.block = harness_block(cfg);
    const CoupledBlocks cb = coupled_blocks(domain, model, x, {term}, run);
    const int nb = static_cast<int>(cb.n.size());
    double s = 0.0, s2 = 0.0;
    for (int b = 0; b < nb; ++b) {
        const double m = cb.y[b][0] / cb.n[b];
        s += m;
        s2 += m * m;
    }
    OccupationIdentity out;
    out.integral.value = s / nb;
    out.integral.se = std::sqrt(std::max(0.0, s2 / nb - out.integral.value * out.integral.value) / (nb - 1));
    out.integral.n = cb.paths();
    out.integral.seed = cfg.seed;
    out.integral.method = "green_node_rule";
    out.integral.diagnostics = {{"nodes", nodes->size()}, {"horizon_hits", cb.horizon_hits}};
    out.exit = exit_time_mc(domain, model, x, cfg);
    out.rel_diff = std::fabs(out.integral.value - out.exit.value) / out.exit.value;
    return out;
}

}  // namespace levygreen
