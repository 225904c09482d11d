#include "levygreen/levy_models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"

namespace levygreen {

namespace {

// Below this radius sigma is treated as a pure power law, which keeps
// r^{-d-alpha} inside double range.
constexpr double kNegligibleRadius = 1e-30;

// Integral of (1 - cos(s theta_1)) over the unit sphere, without cancellation.
double sphere_one_minus_cos(int d, double s)
{
    switch (d) {
    case 1: {
        const double h = std::sin(0.5 * s);
        return 4.0 * h * h;
    }
    case 2:
        if (s < 1e-2) {
            const double s2 = s * s;
            return 2.0 * kPi * (s2 / 4.0 - s2 * s2 / 64.0 + s2 * s2 * s2 / 2304.0);
        }
        return 2.0 * kPi * (1.0 - std::cyl_bessel_j(0.0, s));
    default:
        if (s < 1e-2) {
            const double s2 = s * s;
            return 4.0 * kPi * (s2 / 6.0 - s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0);
        }
        return 4.0 * kPi * (1.0 - std::sin(s) / s);
    }
}

// r^{-1-alpha} times the sphere integral at s = k r, safe as r -> 0.
double lk_radial(int d, double alpha, double k, double r)
{
    const double s = k * r;
    if (s < 1e-4)
        return sphere_area(d) / (2.0 * d) * k * k * std::pow(r, 1.0 - alpha);
    return std::pow(r, -1.0 - alpha) * sphere_one_minus_cos(d, s);
}

void check_common(int d, double alpha)
{
    if (d < 1 || d > kMaxDim)
        throw std::invalid_argument("model.d: dimension must be 1, 2 or 3");
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::invalid_argument("model.alpha: must lie in (0, 2)");
}

// Ratio nu_Y / nu_stable for the relativistic model at s = m^{1/alpha} r.
double relativistic_phi(double nu, double s)
{
    if (s == 0.0)
        return 1.0;
    if (s > 700.0)
        return 0.0;
    return std::exp((1.0 - nu) * std::log(2.0) + nu * std::log(s) - std::lgamma(nu)) * std::cyl_bessel_k(nu, s);
}

// Subordination integral in u = exp(y); `minus` selects 1 - exp(-mu u)
// (sigma) instead of exp(-mu u) (nu_Y).
double subordination_integral(int d, double alpha, double mu, double r, bool minus)
{
    const double pref = 0.5 * alpha / std::tgamma(1.0 - 0.5 * alpha);
    const double y0 = std::log(r * r / 4.0);
    auto f = [&](double y) {
        const double u = std::exp(y);
        const double lt = minus ? std::log(-std::expm1(-mu * u)) : -mu * u;
        const double lk = -0.5 * d * std::log(4.0 * kPi * u) - r * r / (4.0 * u) - (0.5 * alpha) * y;
        return std::exp(lk + lt);
    };
    const double hi = y0 + 160.0 / (d + alpha) + 10.0;
    const QuadResult q = integrate_adaptive(f, y0 - 7.0, hi, 0.0, 1e-11, 4000);
    return pref * q.value;
}

}  // namespace

std::string to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::stable:
        return "stable";
    case ModelKind::relativistic:
        return "relativistic";
    case ModelKind::truncated:
        return "truncated";
    default:
        return "custom";
    }
}

LevyModel::LevyModel(ModelKind kind, int d, double alpha) : kind_(kind), d_(d), alpha_(alpha)
{
    check_common(d, alpha);
    a_neg_ = levygreen::stable_constant(-alpha, d);
}

LevyModel LevyModel::stable(int d, double alpha)
{
    LevyModel m(ModelKind::stable, d, alpha);
    m.env_c_ = 0.0;
    m.env_rho_ = d;
    return m;
}

LevyModel LevyModel::relativistic(int d, double alpha, double mass)
{
    if (!(mass >= 0.0) || !std::isfinite(mass))
        throw std::invalid_argument("model.m: must be nonnegative");
    LevyModel m(ModelKind::relativistic, d, alpha);
    m.m_ = mass;
    m.declare_envelope();
    m.sigma_mass_ = mass;
    return m;
}

LevyModel LevyModel::truncated(int d, double alpha, double cutoff)
{
    if (!(cutoff > 0.0) || !std::isfinite(cutoff))
        throw std::invalid_argument("model.cutoff: must be positive");
    LevyModel m(ModelKind::truncated, d, alpha);
    m.cutoff_ = cutoff;
    m.declare_envelope();
    m.sigma_mass_ = m.a_neg_ * sphere_area(d) * std::pow(cutoff, -alpha) / alpha;
    return m;
}

LevyModel LevyModel::custom(int d, double alpha, SigmaProfile sigma)
{
    LevyModel m(ModelKind::custom, d, alpha);
    if (!(sigma.support > 0.0))
        throw std::invalid_argument("model.sigma.support: must be positive");
    if (!(sigma.c >= 0.0))
        throw std::invalid_argument("model.sigma.c: must be nonnegative");
    if (!(sigma.rho > 0.0))
        throw std::invalid_argument("model.sigma.rho: must be positive");
    if (sigma.profile == "gaussian") {
        if (!(sigma.width > 0.0))
            throw std::invalid_argument("model.sigma.width: must be positive");
    } else if (sigma.profile == "callback") {
        if (!sigma.density)
            throw std::invalid_argument("model.sigma: callback profile needs a density");
    } else if (sigma.profile != "power") {
        throw std::invalid_argument("model.sigma.profile: unknown profile '" + sigma.profile + "'");
    }
    m.sigma_ = std::move(sigma);
    m.env_c_ = m.sigma_.c;
    m.env_rho_ = m.sigma_.rho;
    m.sigma_mass_ = sigma_stats(m).m;
    // Verify the declaration and positivity of nu_Y on a log grid.
    const double top = m.sigma_.support;
    for (int i = 0; i <= 400; ++i) {
        const double r = 1e-6 * std::pow(top / 1e-6, i / 400.0);
        const double s = m.sigma_radial(r);
        const double bound = m.env_c_ * (r <= 1.0 ? std::pow(r, m.env_rho_ - d) : 1.0);
        if (std::fabs(s) > bound * (1.0 + 1e-9) + 1e-300)
            throw std::invalid_argument("model.sigma.c: envelope violated at radius " + std::to_string(r));
        if (s > m.stable_radial(r) * (1.0 + 1e-12))
            throw std::invalid_argument("model.sigma: nu_Y negative at radius " + std::to_string(r));
    }
    return m;
}

void LevyModel::declare_envelope()
{
    if (kind_ == ModelKind::truncated) {
        env_rho_ = d_;
        env_c_ = cutoff_ > 1.0 ? 0.0 : a_neg_ * std::pow(cutoff_, -d_ - alpha_);
        return;
    }
    // Relativistic: sigma ~ r^{2-alpha-d} near zero when (d+alpha)/2 > 1,
    // bounded otherwise; the constant is the grid supremum with a margin.
    const double nu = 0.5 * (d_ + alpha_);
    if (nu > 1.0 + 1e-9)
        env_rho_ = 2.0 - alpha_;
    else if (nu < 1.0 - 1e-9)
        env_rho_ = d_;
    else
        env_rho_ = 2.0 - alpha_ - 0.05;
    double c = 0.0;
    for (int i = 0; i <= 600; ++i) {
        const double r = std::pow(10.0, -9.0 + 9.0 * i / 600.0);
        c = std::max(c, sigma_radial(r) * std::pow(r, d_ - env_rho_));
    }
    env_c_ = 1.05 * c;
}

double LevyModel::stable_radial(double r) const
{
    return a_neg_ * std::pow(r, -d_ - alpha_);
}

double LevyModel::density_ratio(double r) const
{
    switch (kind_) {
    case ModelKind::stable:
        return 1.0;
    case ModelKind::relativistic:
        return relativistic_phi(0.5 * (d_ + alpha_), std::pow(m_, 1.0 / alpha_) * r);
    case ModelKind::truncated:
        return r < cutoff_ ? 1.0 : 0.0;
    default:
        return std::max(0.0, 1.0 - sigma_radial(r) / stable_radial(r));
    }
}

double LevyModel::density_radial(double r) const
{
    if (kind_ == ModelKind::custom)
        return std::max(0.0, stable_radial(r) - sigma_radial(r));
    return stable_radial(r) * density_ratio(r);
}

double LevyModel::sigma_radial(double r) const
{
    switch (kind_) {
    case ModelKind::stable:
        return 0.0;
    case ModelKind::relativistic: {
        if (m_ == 0.0)
            return 0.0;
        const double s = std::pow(m_, 1.0 / alpha_) * r;
        constexpr double tiny = 1e-60;
        if (s < tiny) {
            const double r0 = tiny / std::pow(m_, 1.0 / alpha_);
            const double nu = 0.5 * (d_ + alpha_);
            const double p = nu > 1.0 ? 2.0 - alpha_ - d_ : (nu < 1.0 ? 0.0 : 2.0 - alpha_ - d_ - 0.05);
            return sigma_radial(r0) * std::pow(r / r0, p);
        }
        if (s < 0.05)
            return subordination_integral(d_, alpha_, std::pow(m_, 2.0 / alpha_), r, true);
        return stable_radial(r) * (1.0 - relativistic_phi(0.5 * (d_ + alpha_), s));
    }
    case ModelKind::truncated:
        return r >= cutoff_ ? stable_radial(r) : 0.0;
    default:
        if (r >= sigma_.support)
            return 0.0;
        if (sigma_.profile == "gaussian")
            return sigma_.amplitude * std::exp(-0.5 * r * r / (sigma_.width * sigma_.width));
        if (sigma_.profile == "power")
            return sigma_.amplitude * std::pow(r, sigma_.rho - d_);
        return sigma_.density(r);
    }
}

double LevyModel::sigma_support() const
{
    switch (kind_) {
    case ModelKind::stable:
        return 0.0;
    case ModelKind::custom:
        return sigma_.support;
    default:
        return std::numeric_limits<double>::infinity();
    }
}

double levy_density(const LevyModel& model, const Point& x)
{
    const double r = x.norm();
    if (r == 0.0)
        throw std::domain_error("levy_density: x = 0 is not allowed");
    return model.density_radial(r);
}

double relativistic_density_subordination(int d, double alpha, double m, double r)
{
    return subordination_integral(d, alpha, std::pow(m, 2.0 / alpha), r, false);
}

namespace {

// Integral of (1 - cos(z.w)) sigma(w) dw at |z| = k.
double sigma_lk(const LevyModel& model, double k, double tol)
{
    const int d = model.dim();
    if (k == 0.0 || model.kind() == ModelKind::stable)
        return 0.0;
    if (model.kind() == ModelKind::relativistic)
        return std::pow(k, model.alpha()) - (std::pow(k * k + std::pow(model.mass(), 2.0 / model.alpha()),
                                                      0.5 * model.alpha()) - model.mass());
    if (model.kind() == ModelKind::truncated) {
        // psi_stable - psi_Y with psi_Y over the ball of radius cutoff.
        const double R = model.cutoff();
        const double a = model.stable_constant(), al = model.alpha();
        const int panels = 8 + static_cast<int>(k * R);
        const QuadResult q = integrate_tanh_sinh(
            [&](double da, double) { return a * lk_radial(d, al, k, da); }, 0.0,
            std::min(R, 1.0 / k), tol);
        double inner = q.value;
        if (R > 1.0 / k) {
            const QuadResult q2 = integrate_adaptive(
                [&](double r) { return a * lk_radial(d, al, k, r); }, 1.0 / k, R,
                0.0, tol, 20 * panels);
            if (!q2.converged)
                throw NumericalError("char_exponent: quadrature error " + std::to_string(q2.error));
            inner += q2.value;
        }
        if (!q.converged)
            throw NumericalError("char_exponent: quadrature error " + std::to_string(q.error));
        return std::pow(k, al) - inner;
    }
    const double S = model.sigma_support();
    auto f = [&](double r) {
        return r < kNegligibleRadius ? 0.0 : model.sigma_radial(r) * std::pow(r, d - 1) * sphere_one_minus_cos(d, k * r);
    };
    const double split = std::min(S, 1.0);
    QuadResult q = integrate_tanh_sinh([&](double da, double) { return f(da); }, 0.0, split, tol);
    double total = q.value;
    if (!q.converged)
        throw NumericalError("char_exponent: quadrature error " + std::to_string(q.error));
    if (S > split) {
        const QuadResult q2 = integrate_adaptive(f, split, S, 0.0, tol, 4000);
        if (!q2.converged)
            throw NumericalError("char_exponent: quadrature error " + std::to_string(q2.error));
        total += q2.value;
    }
    return total;
}

}  // namespace

double char_exponent_radial(const LevyModel& model, double k, double tol)
{
    k = std::fabs(k);
    const double al = model.alpha();
    switch (model.kind()) {
    case ModelKind::stable:
        return std::pow(k, al);
    case ModelKind::relativistic:
        return std::pow(k * k + std::pow(model.mass(), 2.0 / al), 0.5 * al) - model.mass();
    default:
        return std::max(0.0, std::pow(k, al) - sigma_lk(model, k, tol));
    }
}

double char_exponent(const LevyModel& model, const Point& z, double tol)
{
    return char_exponent_radial(model, z.norm(), tol);
}

double sigma_fourier(const LevyModel& model, double k, double tol)
{
    if (model.kind() == ModelKind::stable)
        return 0.0;
    if (model.kind() == ModelKind::relativistic)
        return std::pow(k * k + std::pow(model.mass(), 2.0 / model.alpha()), 0.5 * model.alpha())
            - std::pow(k, model.alpha());
    return model.sigma_mass() - sigma_lk(model, k, tol);
}

SigmaStats sigma_stats(const LevyModel& model)
{
    SigmaStats st;
    st.c = model.envelope_c();
    st.rho = model.envelope_rho();
    if (model.kind() == ModelKind::stable)
        return st;
    const int d = model.dim();
    const double area = sphere_area(d);
    auto radial = [&](double r, bool absval) {
        if (r < kNegligibleRadius)
            return 0.0;
        const double s = model.sigma_radial(r);
        return area * (absval ? std::fabs(s) : s) * std::pow(r, d - 1);
    };
    auto integrate_all = [&](bool absval) {
        if (model.kind() == ModelKind::truncated)
            return integrate_to_infinity([&](double x, double) { return radial(x, absval); }, model.cutoff(), 1e-11).value;
        const double S = model.sigma_support();
        double total = integrate_tanh_sinh([&](double da, double) { return radial(da, absval); }, 0.0,
                                           std::min(1.0, S), 1e-11)
                           .value;
        // Mass on (0, r) from the local log-slope p of sigma: r^d sigma(r) / (p + d).
        const double r = kNegligibleRadius;
        const double s1 = model.sigma_radial(r), s2 = model.sigma_radial(2.0 * r);
        if (s1 != 0.0 && s2 != 0.0) {
            const double p = std::log(std::fabs(s2 / s1)) / std::log(2.0);
            if (!(p + d > 0.0))
                throw NumericalError("sigma_stats: sigma not integrable at the origin");
            total += area * (absval ? std::fabs(s1) : s1) * std::pow(r, d) / (p + d);
        }
        if (S > 1.0) {
            if (std::isfinite(S))
                total += integrate_adaptive([&](double r) { return radial(r, absval); }, 1.0, S, 0.0, 1e-11).value;
            else
                total += integrate_to_infinity([&](double x, double) { return radial(x, absval); }, 1.0, 1e-11).value;
        }
        return total;
    };
    st.m = integrate_all(false);
    st.M = integrate_all(true);
    if (!std::isfinite(st.M))
        throw NumericalError("sigma_stats: divergent mass integral");
    // Envelope verification on (0, 1].
    for (int i = 0; i <= 200; ++i) {
        const double r = std::pow(10.0, -6.0 + 6.0 * i / 200.0);
        const double v = std::fabs(model.sigma_radial(r)) * std::pow(r, d - st.rho);
        if (v > st.c * (1.0 + 1e-9) + 1e-300)
            throw NumericalError("sigma_stats: envelope violated at radius " + std::to_string(r));
    }
    const double top = std::isfinite(model.sigma_support()) ? model.sigma_support() : 100.0;
    for (int i = 0; i <= 400; ++i) {
        const double r = 1e-6 * std::pow(top / 1e-6, i / 400.0);
        if (model.sigma_radial(r) < 0.0) {
            st.nonneg = false;
            break;
        }
    }
    return st;
}

nlohmann::json model_to_json(const LevyModel& model)
{
    nlohmann::json j{{"kind", to_string(model.kind())}, {"d", model.dim()}, {"alpha", model.alpha()}};
    if (model.kind() == ModelKind::relativistic)
        j["m"] = model.mass();
    if (model.kind() == ModelKind::truncated)
        j["cutoff"] = model.cutoff();
    if (model.kind() == ModelKind::custom) {
        const auto& s = model.profile();
        j["sigma"] = {{"profile", s.profile}, {"amplitude", s.amplitude}, {"width", s.width},
                      {"c", s.c},             {"rho", s.rho},             {"support", s.support}};
    }
    return j;
}

LevyModel model_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw std::invalid_argument("model: expected an object");
    if (!j.contains("kind"))
        throw std::invalid_argument("model.kind: missing");
    if (!j.contains("alpha") || !j["alpha"].is_number())
        throw std::invalid_argument("model.alpha: missing or not a number");
    const std::string kind = j["kind"].get<std::string>();
    const int d = j.value("d", 1);
    const double alpha = j["alpha"].get<double>();
    if (kind == "stable")
        return LevyModel::stable(d, alpha);
    if (kind == "relativistic")
        return LevyModel::relativistic(d, alpha, j.value("m", 1.0));
    if (kind == "truncated")
        return LevyModel::truncated(d, alpha, j.value("cutoff", 1.0));
    if (kind == "custom") {
        if (!j.contains("sigma"))
            throw std::invalid_argument("model.sigma: custom models need a sigma object");
        const auto& s = j["sigma"];
        SigmaProfile p;
        p.profile = s.value("profile", std::string("gaussian"));
        p.width = s.value("width", 1.0);
        p.amplitude = s.value("amplitude", 0.0);
        // A Gaussian bump may be given by its total mass instead.
        if (s.contains("mass") && p.profile == "gaussian")
            p.amplitude = s["mass"].get<double>() / std::pow(2.0 * kPi * p.width * p.width, 0.5 * d);
        p.c = s.value("c", std::fabs(p.amplitude));
        p.rho = s.value("rho", static_cast<double>(d));
        p.support = s.value("support", p.profile == "gaussian" ? 8.0 * p.width : 1.0);
        return LevyModel::custom(d, alpha, p);
    }
    throw std::invalid_argument("model.kind: unknown kind '" + kind + "'");
}

}  // namespace levygreen
