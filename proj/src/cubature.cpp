#include "levygreen/cubature.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace levygreen {

std::vector<double> corner_angles(const Domain& domain, const Point& c)
{
    std::vector<double> out;
    if (domain.dim() != 2)
        return out;
    std::vector<Eigen::Vector2d> corners;
    if (const auto* p = std::get_if<Polygon>(&domain.shape()))
        corners = p->vertices;
    else if (const auto* b = std::get_if<Box>(&domain.shape()))
        corners = {{b->lower(0), b->lower(1)}, {b->upper(0), b->lower(1)}, {b->upper(0), b->upper(1)},
                   {b->lower(0), b->upper(1)}};
    for (const auto& v : corners) {
        double a = std::atan2(v.y() - c(1), v.x() - c(0));
        if (a < 0)
            a += 2 * kPi;
        out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

double ray_integral(const Domain& domain, const Point& c, const Point& u, const PolarIntegrand& f,
                    const CubatureSpec& spec, const Point* bp, double& err, bool& ok)
{
    const int d = domain.dim();
    double total = 0.0;
    for (const auto& [t0, t1] : domain.ray_segments(c, u)) {
        std::vector<double> cuts{t0, t1};
        if (bp) {
            const double ts = (*bp - c).dot(u);
            if (ts > t0 && ts < t1)
                cuts.insert(cuts.begin() + 1, ts);
        }
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double a = cuts[k], b = cuts[k + 1];
            const QuadResult q = integrate_tanh_sinh(
                [&](double da, double) {
                    const double s = a + da;
                    const double v = f(c + s * u, s);
                    return d == 1 ? v : v * std::pow(s, d - 1);
                },
                a, b, spec.rel_tol, spec.max_level);
            total += q.value;
            err += q.error;
            ok = ok && q.converged;
        }
    }
    return total;
}

// Cuts at a +- scale * 4^k, clipped to (lo, hi).
void graded_cuts(std::vector<double>& cuts, double a, double scale, double lo, double hi)
{
    for (double w = scale; w < hi - lo; w *= 4.0) {
        if (a - w > lo)
            cuts.push_back(a - w);
        if (a + w < hi)
            cuts.push_back(a + w);
    }
    if (a > lo && a < hi)
        cuts.push_back(a);
}

double integrate_arcs(std::vector<double> cuts, int panels_per_turn, int order, const std::function<double(double)>& g)
{
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return b - a < 1e-15; }), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double len = cuts[k + 1] - cuts[k];
        const int panels = std::max(2, static_cast<int>(std::ceil(panels_per_turn * len / (2 * kPi))));
        total += integrate_gl(g, cuts[k], cuts[k + 1], panels, order);
    }
    return total;
}

}  // namespace

QuadResult integrate_polar(const Domain& domain, const Point& c, const PolarIntegrand& f, const CubatureSpec& spec,
                           const Point* break_point, const Point* focus, double focus_scale)
{
    QuadResult res;
    const int d = domain.dim();
    double err = 0.0;
    bool ok = true;
    if (d == 1) {
        res.value = ray_integral(domain, c, make_point({1.0}), f, spec, break_point, err, ok)
            + ray_integral(domain, c, make_point({-1.0}), f, spec, break_point, err, ok);
    } else if (d == 2) {
        std::vector<double> cuts{0.0, 2 * kPi};
        for (double a : corner_angles(domain, c))
            if (a > 1e-12 && a < 2 * kPi - 1e-12)
                cuts.push_back(a);
        double shift = 0.0;
        if (focus) {
            const Point v = *focus - c;
            shift = std::atan2(v(1), v(0));
            for (double& a : cuts)
                a = std::fmod(a - shift + 4 * kPi, 2 * kPi);
            cuts.push_back(0.0);
            cuts.push_back(2 * kPi);
            graded_cuts(cuts, 0.0, focus_scale, -1.0, 2 * kPi);
            graded_cuts(cuts, 2 * kPi, focus_scale, 0.0, 7.0);
            std::erase_if(cuts, [](double a) { return a < 0.0 || a > 2 * kPi; });
        }
        res.value = integrate_arcs(cuts, spec.angular_panels, spec.angular_order, [&](double th) {
            return ray_integral(domain, c, make_point({std::cos(th + shift), std::sin(th + shift)}), f, spec,
                                break_point, err, ok);
        });
    } else {
        // Polar axis along the focus direction when one is given.
        Eigen::Matrix3d frame = Eigen::Matrix3d::Identity();
        std::vector<double> cuts{0.0, kPi};
        if (focus) {
            const Eigen::Vector3d e3 = (*focus - c).normalized();
            const Eigen::Vector3d t = std::fabs(e3.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
            const Eigen::Vector3d e1 = (t - t.dot(e3) * e3).normalized();
            frame.col(0) = e1;
            frame.col(1) = e3.cross(e1);
            frame.col(2) = e3;
            graded_cuts(cuts, 0.0, focus_scale, -1.0, kPi);
            std::erase_if(cuts, [](double a) { return a < 0.0; });
        }
        res.value = integrate_arcs(cuts, spec.angular_panels, spec.angular_order, [&](double th) {
            const double st = std::sin(th), ct = std::cos(th);
            return st
                * integrate_gl(
                       [&](double ph) {
                           const Eigen::Vector3d u = frame * Eigen::Vector3d(st * std::cos(ph), st * std::sin(ph), ct);
                           return ray_integral(domain, c, Point(u), f, spec, break_point, err, ok);
                       },
                       0.0, 2 * kPi, spec.angular_panels, spec.angular_order);
        });
    }
    res.error = err;
    res.converged = ok;
    return res;
}

}  // namespace levygreen
