#pragma once

#include <functional>
#include <vector>

#include "levygreen/geometry.hpp"
#include "levygreen/quadrature.hpp"

namespace levygreen {

struct CubatureSpec {
    int angular_panels = 16;  // per break-free arc in d = 2; per polar angle range in d = 3
    int angular_order = 12;
    double rel_tol = 1e-8;
    int max_level = 8;
};

// Integral over D of f(y) in polar coordinates centred at c. f receives y
// and s = |y - c|; the Jacobian s^{d-1} is applied here, so integrable
// |y - c|^{-beta}, beta < d, singularities are handled. Along each ray an
// optional break point p splits the radial integral at the closest approach.
// With a focus point, angular panels are graded geometrically towards the
// direction of the focus, starting from the angular width focus_scale.
using PolarIntegrand = std::function<double(const Point& y, double s)>;
QuadResult integrate_polar(const Domain& domain, const Point& c, const PolarIntegrand& f, const CubatureSpec& spec = {},
                           const Point* break_point = nullptr, const Point* focus = nullptr,
                           double focus_scale = 1e-3);

// Directions from c to the polygon or box corners (d = 2), used as
// angular break points because the ray length has kinks there.
std::vector<double> corner_angles(const Domain& domain, const Point& c);

}  // namespace levygreen
