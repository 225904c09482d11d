#include "levygreen/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"
#include "levygreen/stable.hpp"

namespace levygreen {

double positive_stable(double beta, Rng& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    double u;
    do {
        u = kPi * unif(rng);
    } while (u <= 0.0);
    const double e = expo(rng);
    const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
    return a * std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
}

Point sample_stable_increment(double t, double alpha, int d, Rng& rng)
{
    if (!(t > 0.0))
        throw std::domain_error("sample_stable_increment: t must be positive");
    if (d == 1) {
        // Chambers-Mallows-Stuck, symmetric case.
        std::uniform_real_distribution<double> unif(-0.5 * kPi, 0.5 * kPi);
        std::exponential_distribution<double> expo(1.0);
        const double v = unif(rng), w = expo(rng);
        double x;
        if (alpha == 1.0)
            x = std::tan(v);
        else
            x = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha)
                * std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
        return make_point({std::pow(t, 1.0 / alpha) * x});
    }
    const double s = std::pow(t, 2.0 / alpha) * positive_stable(0.5 * alpha, rng);
    std::normal_distribution<double> g(0.0, 1.0);
    Point x(d);
    const double sd = std::sqrt(2.0 * s);
    for (int i = 0; i < d; ++i)
        x(i) = sd * g(rng);
    return x;
}

Point sample_relativistic_increment(double t, double alpha, double m, int d, Rng& rng, AcceptanceStats* stats)
{
    if (!(t > 0.0))
        throw std::domain_error("sample_relativistic_increment: t must be positive");
    if (m == 0.0)
        return sample_stable_increment(t, alpha, d, rng);
    const int k = std::max(1, static_cast<int>(std::ceil(t * m)));
    const double ts = t / k;
    const double mu = std::pow(m, 2.0 / alpha);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Point x = Point::Zero(d);
    for (int j = 0; j < k; ++j) {
        double s;
        while (true) {
            s = std::pow(ts, 2.0 / alpha) * positive_stable(0.5 * alpha, rng);
            if (stats)
                ++stats->attempts;
            if (unif(rng) < std::exp(-mu * s))
                break;
        }
        if (stats)
            ++stats->accepted;
        const double sd = std::sqrt(2.0 * s);
        for (int i = 0; i < d; ++i)
            x(i) += sd * g(rng);
    }
    return x;
}

std::vector<Jump> sample_compound_poisson(const JumpLaw& law, double t, Rng& rng)
{
    std::vector<Jump> out;
    if (!(law.mass > 0.0) || !(t > 0.0))
        return out;
    std::poisson_distribution<long> pois(law.mass * t);
    std::uniform_real_distribution<double> unif(0.0, t);
    const long n = pois(rng);
    std::vector<double> times(n);
    for (auto& s : times)
        s = unif(rng);
    std::sort(times.begin(), times.end());
    out.reserve(n);
    for (double s : times)
        out.push_back({s, law.draw(rng)});
    return out;
}

namespace {

// Rejection sampler for a radial density `target` dominated by
// c r^{rho-d} on (0, r1], and on (r1, support] by either the stable density
// (tail == 1) or the constant c (tail == 2).
JumpLaw radial_rejection_law(int d, double alpha, std::function<double(double)> target, double c, double rho,
                             double support, int tail, double a_stable)
{
    const double area = sphere_area(d);
    const double r1 = std::min(1.0, support);
    auto radial = [&](double r) { return area * target(r) * std::pow(r, d - 1); };
    double mass = integrate_tanh_sinh([&](double da, double) { return radial(da); }, 0.0, r1, 1e-11).value;
    if (support > r1) {
        if (std::isfinite(support))
            mass += integrate_adaptive(radial, r1, support, 0.0, 1e-11).value;
        else
            mass += integrate_to_infinity([&](double x, double) { return radial(x); }, r1, 1e-11).value;
    }
    JumpLaw law;
    law.d = d;
    law.mass = mass;
    if (!(mass > 0.0))
        return law;
    const double m1 = c * area * std::pow(r1, rho) / rho;
    double m2 = 0.0;
    if (support > r1) {
        if (tail == 1)
            m2 = a_stable * area * std::pow(r1, -alpha) / alpha;
        else
            m2 = c * area * (std::pow(support, d) - std::pow(r1, d)) / d;
    }
    const double p1 = m1 / (m1 + m2);
    law.draw = [=](Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (long tries = 0; tries < 100000000L; ++tries) {
            double r, g;
            if (unif(rng) < p1) {
                r = r1 * std::pow(unif(rng), 1.0 / rho);
                g = c * std::pow(r, rho - d);
            } else if (tail == 1) {
                r = r1 * std::pow(1.0 - unif(rng), -1.0 / alpha);
                g = a_stable * std::pow(r, -d - alpha);
            } else {
                r = std::pow(std::pow(r1, d) + unif(rng) * (std::pow(support, d) - std::pow(r1, d)), 1.0 / d);
                g = c;
            }
            const double f = target(r);
            if (f > g * (1.0 + 1e-9))
                throw NumericalError("jump law: envelope violated at radius " + std::to_string(r));
            if (unif(rng) * g < f)
                return Point(r * uniform_direction(d, rng));
        }
        throw NumericalError("jump law: rejection sampler stalled");
    };
    return law;
}

JumpLaw pareto_law(int d, double alpha, double a_stable, double R)
{
    JumpLaw law;
    law.d = d;
    law.mass = a_stable * sphere_area(d) * std::pow(R, -alpha) / alpha;
    law.draw = [=](Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double r = R * std::pow(1.0 - unif(rng), -1.0 / alpha);
        return Point(r * uniform_direction(d, rng));
    };
    return law;
}

}  // namespace

JumpLaw sigma_positive_law(const LevyModel& model)
{
    const int d = model.dim();
    switch (model.kind()) {
    case ModelKind::stable:
        return JumpLaw{0.0, d, {}};
    case ModelKind::truncated:
        return pareto_law(d, model.alpha(), model.stable_constant(), model.cutoff());
    case ModelKind::relativistic: {
        if (model.mass() == 0.0)
            return JumpLaw{0.0, d, {}};
        LevyModel copy = model;
        JumpLaw law = radial_rejection_law(
            d, model.alpha(), [copy](double r) { return std::max(0.0, copy.sigma_radial(r)); }, model.envelope_c(),
            model.envelope_rho(), std::numeric_limits<double>::infinity(), 1, model.stable_constant());
        law.mass = model.mass();
        return law;
    }
    default: {
        LevyModel copy = model;
        return radial_rejection_law(
            d, model.alpha(), [copy](double r) { return std::max(0.0, copy.sigma_radial(r)); }, model.envelope_c(),
            model.envelope_rho(), model.sigma_support(), 2, model.stable_constant());
    }
    }
}

JumpLaw sigma_negative_law(const LevyModel& model)
{
    const int d = model.dim();
    if (model.kind() != ModelKind::custom)
        return JumpLaw{0.0, d, {}};
    LevyModel copy = model;
    return radial_rejection_law(
        d, model.alpha(), [copy](double r) { return std::max(0.0, -copy.sigma_radial(r)); }, model.envelope_c(),
        model.envelope_rho(), model.sigma_support(), 2, model.stable_constant());
}

PathParams default_path_params(double alpha, double scale)
{
    PathParams p;
    p.eps = 0.01 * scale;
    p.dt = 2e-3 * std::pow(scale, alpha);
    p.horizon = 1e4 * std::pow(scale, alpha);
    return p;
}

PathEngine::PathEngine(const LevyModel& model, const PathParams& params, const Domain* domain)
    : model_(model), params_(params), domain_(domain), d_(model.dim()), alpha_(model.alpha())
{
    if (!(params.eps > 0.0) || !(params.dt > 0.0) || !(params.horizon > 0.0))
        throw std::invalid_argument("path parameters: eps, dt and horizon must be positive");
    if (domain && domain->dim() != d_)
        throw std::invalid_argument("path engine: model and domain dimensions differ");
    const double a = model.stable_constant(), area = sphere_area(d_);
    rate_big_ = a * area * std::pow(params.eps, -alpha_) / alpha_;
    gauss_var_ = a * area * std::pow(params.eps, 2.0 - alpha_) / (2.0 - alpha_);
    gauss_sd_ = std::sqrt(gauss_var_ / d_);
    thin_ = model.kind() != ModelKind::stable;
    extra_ = sigma_negative_law(model);
}

namespace {

struct Recorder {
    PathSkeleton* out;
    bool use_x;
    void segment(double, double, const Point&, bool, const Point&, bool) {}
    void jump(double, const Point&, bool, bool) {}
    void exit_x(double, const Point&)
    {
        if (use_x)
            out->exited = true;
    }
    void exit_y(double, const Point&)
    {
        if (!use_x)
            out->exited = true;
    }
    void node(double t, const Point& X, bool, const Point& Y, bool)
    {
        if (!out->times.empty() && t <= out->times.back())
            return;
        out->times.push_back(t);
        out->positions.push_back(use_x ? X : Y);
        if (out->exited && out->exit_index < 0)
            out->exit_index = static_cast<long>(out->times.size()) - 1;
    }
    bool stop() const { return false; }
};

}  // namespace

PathSkeleton sample_perturbed_path(const LevyModel& model, const Point& x, double horizon, double eps, double dt,
                                   Rng& rng, const Domain* domain)
{
    PathParams p;
    p.eps = eps;
    p.dt = dt;
    p.horizon = horizon;
    PathEngine engine(model, p, domain);
    PathSkeleton path;
    path.horizon = horizon;
    path.times.push_back(0.0);
    path.positions.push_back(x);
    Recorder rec{&path, false};
    engine.run(x, false, rng, rec);
    if (path.exited && path.exit_index < 0)
        path.exit_index = 0;
    return path;
}

CouplingSample sample_coupled(const LevyModel& model_x, const JumpLaw& v_law, const Point& x, double horizon,
                              double eps, double dt, Rng& rng)
{
    CouplingSample out;
    out.path_X = sample_perturbed_path(model_x, x, horizon, eps, dt, rng);
    out.jumps_V = sample_compound_poisson(v_law, horizon, rng);
    if (!out.jumps_V.empty())
        out.T = out.jumps_V.front().time;
    PathSkeleton& z = out.path_Z;
    z.horizon = horizon;
    const auto& xs = out.path_X;
    const int d = static_cast<int>(x.size());
    Point v = Point::Zero(d);
    std::size_t j = 0, i = 0;
    while (i < xs.times.size() || j < out.jumps_V.size()) {
        const bool take_jump = j < out.jumps_V.size() && (i == xs.times.size() || out.jumps_V[j].time < xs.times[i]);
        if (take_jump) {
            v += out.jumps_V[j].w;
            const Point& base = xs.positions[i == 0 ? 0 : i - 1];
            z.times.push_back(out.jumps_V[j].time);
            z.positions.push_back(base + v);
            ++j;
        } else {
            z.times.push_back(xs.times[i]);
            z.positions.push_back(xs.positions[i] + v);
            ++i;
        }
    }
    return out;
}

}  // namespace levygreen
