#include "levygreen/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "levygreen/parallel.hpp"
#include "levygreen/special.hpp"

namespace levygreen {

namespace {

// Stream tags separate estimators that share a seed.
enum : std::uint64_t {
    kTagExit = 11,
    kTagWos = 12,
    kTagGreen = 13,
    kTagKilled = 14,
    kTagPoisson = 15,
    kTagExitPos = 16,
    kTagCoupled = 17,
};

// Per-block sums of k functionals and their squares.
struct Sums {
    std::vector<double> s, s2;
    long n = 0;
    long flagged = 0;
    explicit Sums(std::size_t k = 0) : s(k, 0.0), s2(k, 0.0) {}
    void add(std::size_t j, double v)
    {
        s[j] += v;
        s2[j] += v * v;
    }
};

Sums merge(const std::vector<Sums>& blocks, std::size_t k)
{
    Sums out(k);
    for (const auto& b : blocks) {
        for (std::size_t j = 0; j < k; ++j) {
            out.s[j] += b.s[j];
            out.s2[j] += b.s2[j];
        }
        out.n += b.n;
        out.flagged += b.flagged;
    }
    return out;
}

Estimate make_estimate(double s, double s2, long n, std::uint64_t seed, const char* method, double scale = 1.0)
{
    Estimate e;
    e.n = n;
    e.seed = seed;
    e.method = method;
    if (n > 0) {
        const double mean = s / n;
        const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
        e.value = scale * mean;
        e.se = scale * std::sqrt(var / n);
    }
    return e;
}

double ball_volume_radius(int d, double h)
{
    return ball_volume(d) * std::pow(h, d);
}

void check_cfg(const RunConfig& cfg)
{
    if (cfg.n < 1)
        throw std::invalid_argument("n: must be positive");
}

void check_dims(const Domain& domain, const LevyModel& model, const Point& x)
{
    if (domain.dim() != model.dim() || x.size() != domain.dim())
        throw std::invalid_argument("dimension mismatch between domain, model and point");
}

struct NoopVisitor {
    void segment(double, double, const Point&, bool, const Point&, bool) {}
    void exit_x(double, const Point&) {}
    void exit_y(double, const Point&) {}
    void jump(double, const Point&, bool, bool) {}
    void node(double, const Point&, bool, const Point&, bool) {}
    bool stop() const { return false; }
};

}  // namespace

nlohmann::json to_json(const Estimate& e)
{
    return {{"value", e.value}, {"se", e.se},          {"n", e.n},
            {"seed", e.seed},   {"method", e.method}, {"diagnostics", e.diagnostics},
            {"flagged", e.flagged}};
}

PathParams path_params_for(const Domain& domain, const LevyModel& model)
{
    return default_path_params(model.alpha(), 0.5 * domain.diam());
}

double default_bandwidth(const Domain& domain)
{
    return 0.025 * domain.diam();
}

Estimate exit_time_mc(const Domain& domain, const LevyModel& model, const Point& x, const RunConfig& cfg,
                      const PathParams* params)
{
    check_cfg(cfg);
    check_dims(domain, model, x);
    const PathParams p = params ? *params : path_params_for(domain, model);
    const PathEngine engine(model, p, &domain);
    struct Vis : NoopVisitor {
        double tau = -1.0;
        void exit_y(double t, const Point&) { tau = t; }
    };
    auto blocks = run_blocks<Sums>(cfg.n, cfg.block, cfg.seed, kTagExit, cfg.workers, [&](long, long count, Rng& rng) {
        Sums s(1);
        for (long i = 0; i < count; ++i) {
            Vis v;
            engine.run(x, false, rng, v);
            double tau = v.tau;
            if (tau < 0.0) {
                tau = p.horizon;
                ++s.flagged;
            }
            s.add(0, tau);
            ++s.n;
        }
        return s;
    });
    const Sums tot = merge(blocks, 1);
    Estimate e = make_estimate(tot.s[0], tot.s2[0], tot.n, cfg.seed, "exit_time_mc");
    e.diagnostics = {{"eps", p.eps}, {"dt", p.dt}, {"horizon", p.horizon}, {"horizon_hits", tot.flagged}};
    e.flagged = tot.flagged > 0.001 * tot.n;
    return e;
}

std::vector<Estimate> green_wos_stable_many(const Domain& domain, double alpha, const Point& x,
                                            const std::vector<Point>& ys, const RunConfig& cfg,
                                            const WosOptions& opt)
{
    check_cfg(cfg);
    const int d = domain.dim();
    if (!(d > alpha))
        throw std::domain_error("green_wos_stable: requires d > alpha");
    if (!domain.contains(x))
        throw std::invalid_argument("green_wos_stable: x must lie in the domain");
    for (const Point& y : ys)
        if ((x - y).norm() == 0.0)
            throw std::invalid_argument("green_wos_stable: requires x != y");
    const std::size_t k = ys.size();
    const double shell = opt.shell * domain.diam();
    auto blocks = run_blocks<Sums>(cfg.n, cfg.block, cfg.seed, kTagWos, cfg.workers, [&](long, long count, Rng& rng) {
        Sums s(k);
        std::vector<double> acc(k);
        for (long i = 0; i < count; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            Point pos = x;
            long step = 0;
            while (true) {
                if (!domain.contains(pos))
                    break;
                const double delta = domain.dist_to_boundary(pos);
                if (delta < shell)
                    break;
                if (++step > opt.max_steps) {
                    ++s.flagged;
                    break;
                }
                const double R = opt.shrink * delta;
                for (std::size_t j = 0; j < k; ++j) {
                    const double dist = (ys[j] - pos).norm();
                    if (dist < R && dist > 0.0)
                        acc[j] += ball_green_center(dist, R, alpha, d);
                }
                pos += ball_exit_sample_center(d, R, alpha, rng);
            }
            for (std::size_t j = 0; j < k; ++j)
                s.add(j, acc[j]);
            ++s.n;
        }
        return s;
    });
    const Sums tot = merge(blocks, k);
    std::vector<Estimate> out;
    for (std::size_t j = 0; j < k; ++j) {
        Estimate e = make_estimate(tot.s[j], tot.s2[j], tot.n, cfg.seed, "green_wos_stable");
        e.diagnostics = {{"shrink", opt.shrink}, {"shell", shell}, {"step_budget_hits", tot.flagged}};
        e.flagged = tot.flagged > 0;
        out.push_back(std::move(e));
    }
    return out;
}

Estimate green_wos_stable(const Domain& domain, double alpha, const Point& x, const Point& y, const RunConfig& cfg,
                          const WosOptions& opt)
{
    return green_wos_stable_many(domain, alpha, x, {y}, cfg, opt).front();
}

std::vector<Estimate> green_mc_many(const Domain& domain, const LevyModel& model, const Point& x,
                                    const std::vector<Point>& ys, const std::vector<double>& hs, const RunConfig& cfg,
                                    const PathParams* params)
{
    check_cfg(cfg);
    check_dims(domain, model, x);
    if (hs.size() != ys.size())
        throw std::invalid_argument("green_mc: one bandwidth per target");
    const int d = domain.dim();
    const std::size_t k = ys.size();
    std::vector<bool> active(k);
    std::vector<double> h2(k), q2(k);
    for (std::size_t j = 0; j < k; ++j) {
        if (!(hs[j] > 0.0))
            throw std::invalid_argument("green_mc: bandwidth must be positive");
        if ((x - ys[j]).norm() < 2.0 * hs[j])
            throw std::invalid_argument("green_mc: |x - y| must be at least 2h");
        active[j] = domain.contains(ys[j]);
        h2[j] = hs[j] * hs[j];
        q2[j] = 0.25 * h2[j];
    }
    const PathParams p = params ? *params : path_params_for(domain, model);
    const PathEngine engine(model, p, &domain);
    struct Vis : NoopVisitor {
        const std::vector<Point>* ys;
        const std::vector<double>*h2, *q2;
        const std::vector<bool>* active;
        std::vector<double> full, half;
        bool exited = false;
        void exit_y(double, const Point&) { exited = true; }
        void segment(double, double dt, const Point&, bool, const Point& Y, bool ay)
        {
            if (!ay)
                return;
            for (std::size_t j = 0; j < ys->size(); ++j) {
                if (!(*active)[j])
                    continue;
                const double r2 = (Y - (*ys)[j]).squaredNorm();
                if (r2 < (*h2)[j]) {
                    full[j] += dt;
                    if (r2 < (*q2)[j])
                        half[j] += dt;
                }
            }
        }
    };
    // Slots: per target the value at h, at h/2 and their difference, all
    // on the same paths.
    auto blocks = run_blocks<Sums>(cfg.n, cfg.block, cfg.seed, kTagGreen, cfg.workers, [&](long, long count, Rng& rng) {
        Sums s(3 * k);
        Vis v;
        v.ys = &ys;
        v.h2 = &h2;
        v.q2 = &q2;
        v.active = &active;
        for (long i = 0; i < count; ++i) {
            v.full.assign(k, 0.0);
            v.half.assign(k, 0.0);
            v.exited = false;
            engine.run(x, false, rng, v);
            if (!v.exited)
                ++s.flagged;
            for (std::size_t j = 0; j < k; ++j) {
                const double a = v.full[j] / ball_volume_radius(d, hs[j]);
                const double b = v.half[j] / ball_volume_radius(d, 0.5 * hs[j]);
                s.add(3 * j, a);
                s.add(3 * j + 1, b);
                s.add(3 * j + 2, a - b);
            }
            ++s.n;
        }
        return s;
    });
    const Sums tot = merge(blocks, 3 * k);
    std::vector<Estimate> out;
    for (std::size_t j = 0; j < k; ++j) {
        Estimate e = make_estimate(tot.s[3 * j], tot.s2[3 * j], tot.n, cfg.seed, "green_mc");
        const Estimate half = make_estimate(tot.s[3 * j + 1], tot.s2[3 * j + 1], tot.n, cfg.seed, "green_mc");
        const Estimate diff = make_estimate(tot.s[3 * j + 2], tot.s2[3 * j + 2], tot.n, cfg.seed, "green_mc");
        const bool bias = std::fabs(diff.value) > 3.0 * diff.se && diff.se > 0.0;
        e.diagnostics = {{"h", hs[j]},
                         {"value_half_h", half.value},
                         {"se_half_h", half.se},
                         {"h_sensitivity_se", diff.se},
                         {"h_bias_flag", bias},
                         {"horizon_hits", tot.flagged},
                         {"eps", p.eps},
                         {"dt", p.dt}};
        e.flagged = bias || tot.flagged > 0.001 * tot.n;
        out.push_back(std::move(e));
    }
    return out;
}

Estimate green_mc(const Domain& domain, const LevyModel& model, const Point& x, const Point& y, double h,
                  const RunConfig& cfg, const PathParams* params)
{
    return green_mc_many(domain, model, x, {y}, {h}, cfg, params).front();
}

std::vector<Estimate> killed_density_mc_many(const Domain& domain, const LevyModel& model, double t, const Point& x,
                                             const std::vector<Point>& ys, double h, const RunConfig& cfg,
                                             const PathParams* params)
{
    check_cfg(cfg);
    check_dims(domain, model, x);
    if (!(t > 0.0) || !(h > 0.0))
        throw std::invalid_argument("killed_density_mc: t and h must be positive");
    const int d = domain.dim();
    const std::size_t k = ys.size();
    PathParams p = params ? *params : path_params_for(domain, model);
    p.horizon = t;
    const PathEngine engine(model, p, &domain);
    struct Vis : NoopVisitor {
        double horizon;
        bool alive = false;
        Point end;
        void node(double tn, const Point&, bool, const Point& Y, bool ay)
        {
            if (tn == horizon && ay) {
                alive = true;
                end = Y;
            }
        }
    };
    const double vol = ball_volume_radius(d, h);
    auto blocks = run_blocks<Sums>(cfg.n, cfg.block, cfg.seed, kTagKilled, cfg.workers, [&](long, long count, Rng& rng) {
        Sums s(k);
        for (long i = 0; i < count; ++i) {
            Vis v;
            v.horizon = t;
            engine.run(x, false, rng, v);
            if (v.alive) {
                ++s.flagged;  // survivor count
                for (std::size_t j = 0; j < k; ++j)
                    s.add(j, (v.end - ys[j]).squaredNorm() < h * h ? 1.0 / vol : 0.0);
            }
            ++s.n;
        }
        return s;
    });
    const Sums tot = merge(blocks, k);
    std::vector<Estimate> out;
    for (std::size_t j = 0; j < k; ++j) {
        Estimate e = make_estimate(tot.s[j], tot.s2[j], tot.n, cfg.seed, "killed_density_mc");
        e.diagnostics = {{"t", t}, {"h", h}, {"survivors", tot.flagged}, {"dt", p.dt}, {"eps", p.eps}};
        e.flagged = tot.flagged < 100;
        out.push_back(std::move(e));
    }
    return out;
}

Estimate killed_density_mc(const Domain& domain, const LevyModel& model, double t, const Point& x, const Point& y,
                           double h, const RunConfig& cfg, const PathParams* params)
{
    return killed_density_mc_many(domain, model, t, x, {y}, h, cfg, params).front();
}

Estimate poisson_kernel_iw(const Domain& domain, const LevyModel& model, const Point& x, const Point& z,
                           const GreenProvider& green, const CubatureSpec& spec)
{
    check_dims(domain, model, x);
    if (!domain.contains(x))
        throw std::invalid_argument("poisson_kernel_iw: x must lie in the domain");
    const double dz = domain.dist_to_boundary(z);
    if (domain.contains(z) || dz <= 0.0)
        throw std::invalid_argument("poisson_kernel_iw: z must lie outside the closure of the domain");
    const QuadResult q = integrate_polar(
        domain, x,
        [&](const Point& y, double s) {
            if (s == 0.0 || (y - x).norm() == 0.0)
                return 0.0;
            return green(x, y) * model.density_radial((y - z).norm());
        },
        spec, &z, &z, std::max(1e-12, 0.25 * dz / (z - x).norm()));
    Estimate e;
    e.value = q.value;
    e.se = q.error;
    e.method = "poisson_kernel_iw";
    e.diagnostics = {{"delta_z", dz}, {"converged", q.converged}};
    e.flagged = !q.converged;
    return e;
}

std::vector<Estimate> poisson_kernel_occupation(const Domain& domain, const LevyModel& model, const Point& x,
                                                const std::vector<Point>& zs, const RunConfig& cfg,
                                                const PathParams* params)
{
    check_cfg(cfg);
    check_dims(domain, model, x);
    for (const Point& z : zs)
        if (domain.contains(z))
            throw std::invalid_argument("poisson_kernel_occupation: z must lie outside the domain");
    const std::size_t k = zs.size();
    const PathParams p = params ? *params : path_params_for(domain, model);
    const PathEngine engine(model, p, &domain);
    struct Vis : NoopVisitor {
        const std::vector<Point>* zs;
        const LevyModel* model;
        std::vector<double> acc;
        bool exited = false;
        void exit_y(double, const Point&) { exited = true; }
        void segment(double, double dt, const Point&, bool, const Point& Y, bool ay)
        {
            if (!ay)
                return;
            for (std::size_t j = 0; j < zs->size(); ++j)
                acc[j] += dt * model->density_radial((Y - (*zs)[j]).norm());
        }
    };
    auto blocks = run_blocks<Sums>(cfg.n, cfg.block, cfg.seed, kTagPoisson, cfg.workers, [&](long, long count, Rng& rng) {
        Sums s(k);
        Vis v;
        v.zs = &zs;
        v.model = &model;
        for (long i = 0; i < count; ++i) {
            v.acc.assign(k, 0.0);
            v.exited = false;
            engine.run(x, false, rng, v);
            if (!v.exited)
                ++s.flagged;
            for (std::size_t j = 0; j < k; ++j)
                s.add(j, v.acc[j]);
            ++s.n;
        }
        return s;
    });
    const Sums tot = merge(blocks, k);
    std::vector<Estimate> out;
    for (std::size_t j = 0; j < k; ++j) {
        Estimate e = make_estimate(tot.s[j], tot.s2[j], tot.n, cfg.seed, "poisson_kernel_occupation");
        e.diagnostics = {{"delta_z", domain.dist_to_boundary(zs[j])}, {"horizon_hits", tot.flagged}};
        e.flagged = tot.flagged > 0.001 * tot.n;
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

// Walk-on-spheres until the walk leaves D; exact for the stable process.
Point wos_exit(const Domain& domain, double alpha, const Point& x, Rng& rng)
{
    const int d = domain.dim();
    Point pos = x;
    for (long step = 0; step < 10000000L; ++step) {
        if (!domain.contains(pos))
            return pos;
        const double delta = domain.dist_to_boundary(pos);
        pos += ball_exit_sample_center(d, delta, alpha, rng);
    }
    throw NumericalError("walk-on-spheres: step budget exceeded");
}

}  // namespace

std::vector<Point> exit_positions(const Domain& domain, const LevyModel& model, const Point& x, const RunConfig& cfg,
                                  const PathParams* params)
{
    check_cfg(cfg);
    check_dims(domain, model, x);
    const PathParams p = params ? *params : path_params_for(domain, model);
    const PathEngine engine(model, p, &domain);
    struct Vis : NoopVisitor {
        Point out;
        bool exited = false;
        void exit_y(double, const Point& Y)
        {
            out = Y;
            exited = true;
        }
    };
    const bool stable = model.kind() == ModelKind::stable;
    auto blocks = run_blocks<std::vector<Point>>(
        cfg.n, cfg.block, cfg.seed, kTagExitPos, cfg.workers, [&](long, long count, Rng& rng) {
            std::vector<Point> pts;
            pts.reserve(count);
            for (long i = 0; i < count; ++i) {
                if (stable) {
                    pts.push_back(wos_exit(domain, model.alpha(), x, rng));
                    continue;
                }
                Vis v;
                engine.run(x, false, rng, v);
                if (!v.exited)
                    throw NumericalError("exit_positions: horizon reached before exit");
                pts.push_back(v.out);
            }
            return pts;
        });
    std::vector<Point> out;
    out.reserve(cfg.n);
    for (auto& b : blocks)
        out.insert(out.end(), b.begin(), b.end());
    return out;
}

Estimate harmonic_eval(const Domain& domain, const LevyModel& model, const BoundaryData& u, const Point& x,
                       const RunConfig& cfg, const PathParams* params)
{
    const std::vector<Point> pts = exit_positions(domain, model, x, cfg, params);
    double s = 0.0, s2 = 0.0;
    for (const Point& z : pts) {
        const double v = u(z);
        s += v;
        s2 += v * v;
    }
    Estimate e = make_estimate(s, s2, static_cast<long>(pts.size()), cfg.seed, "harmonic_eval");
    e.diagnostics = {{"exit_law", model.kind() == ModelKind::stable ? "walk_on_spheres" : "path_simulation"}};
    return e;
}

long CoupledBlocks::paths() const
{
    long t = 0;
    for (long k : n)
        t += k;
    return t;
}

CoupledBlocks coupled_blocks(const Domain& domain, const LevyModel& model, const Point& x,
                             const std::vector<CoupledTerm>& terms, const RunConfig& cfg, const PathParams* params)
{
    check_cfg(cfg);
    check_dims(domain, model, x);
    const std::size_t k = terms.size();
    bool track_x = false;
    for (const auto& t : terms)
        track_x = track_x || static_cast<bool>(t.fx);
    const PathParams p = params ? *params : path_params_for(domain, model);
    const PathEngine engine(model, p, &domain);
    struct Vis : NoopVisitor {
        const std::vector<CoupledTerm>* terms;
        std::vector<double> ox, oy;
        double tx = -1.0, ty = -1.0;
        void exit_x(double t, const Point&) { tx = t; }
        void exit_y(double t, const Point&) { ty = t; }
        void segment(double, double dt, const Point& X, bool ax, const Point& Y, bool ay)
        {
            for (std::size_t j = 0; j < terms->size(); ++j) {
                const auto& t = (*terms)[j];
                if (ax && t.fx)
                    ox[j] += dt * t.fx(X);
                if (ay && t.fy)
                    oy[j] += dt * t.fy(Y);
            }
        }
    };
    struct Block {
        long n = 0, hits = 0;
        std::vector<double> x, y;
        double tx = 0.0, ty = 0.0;
    };
    auto blocks = run_blocks<Block>(cfg.n, cfg.block, cfg.seed, kTagCoupled, cfg.workers,
                                    [&](long, long count, Rng& rng) {
                                        Block b;
                                        b.x.assign(k, 0.0);
                                        b.y.assign(k, 0.0);
                                        Vis v;
                                        v.terms = &terms;
                                        for (long i = 0; i < count; ++i) {
                                            v.ox.assign(k, 0.0);
                                            v.oy.assign(k, 0.0);
                                            v.tx = v.ty = -1.0;
                                            engine.run(x, track_x, rng, v);
                                            if (v.ty < 0.0 || (track_x && v.tx < 0.0))
                                                ++b.hits;
                                            for (std::size_t j = 0; j < k; ++j) {
                                                b.x[j] += v.ox[j];
                                                b.y[j] += v.oy[j];
                                            }
                                            b.tx += v.tx < 0.0 ? p.horizon : v.tx;
                                            b.ty += v.ty < 0.0 ? p.horizon : v.ty;
                                            ++b.n;
                                        }
                                        return b;
                                    });
    CoupledBlocks out;
    out.block = cfg.block;
    for (auto& b : blocks) {
        out.n.push_back(b.n);
        out.x.push_back(std::move(b.x));
        out.y.push_back(std::move(b.y));
        out.tau_x.push_back(track_x ? b.tx : 0.0);
        out.tau_y.push_back(b.ty);
        out.horizon_hits += b.hits;
    }
    return out;
}

}  // namespace levygreen
