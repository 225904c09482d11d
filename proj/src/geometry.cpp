#include "levygreen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace levygreen {

namespace {

double seg_dist(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

bool point_in_polygon(const std::vector<Eigen::Vector2d>& v, const Eigen::Vector2d& p)
{
    bool inside = false;
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((v[i].y() > p.y()) != (v[j].y() > p.y())) {
            const double xc = v[j].x() + (p.y() - v[j].y()) * (v[i].x() - v[j].x()) / (v[i].y() - v[j].y());
            if (p.x() < xc)
                inside = !inside;
        }
    }
    return inside;
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& q1,
                        const Eigen::Vector2d& q2)
{
    const double d1 = cross(q2 - q1, p1 - q1), d2 = cross(q2 - q1, p2 - q1);
    const double d3 = cross(p2 - p1, q1 - p1), d4 = cross(p2 - p1, q2 - p1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

Point read_point(const nlohmann::json& j, const char* field)
{
    if (!j.contains(field) || !j.at(field).is_array())
        throw std::invalid_argument(std::string("domain.") + field + ": expected an array");
    const auto& a = j.at(field);
    if (a.empty() || a.size() > kMaxDim)
        throw std::invalid_argument(std::string("domain.") + field + ": dimension must be 1..3");
    Point p(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        p(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return p;
}

nlohmann::json point_json(const Point& p)
{
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i)
        a.push_back(p(i));
    return a;
}

}  // namespace

Domain::Domain(Shape shape, int dim, LipschitzCharacter lip) : shape_(std::move(shape)), dim_(dim), lip_(lip) {}

Domain Domain::interval(double a, double b, double r0, double lambda)
{
    if (!(a < b))
        throw std::invalid_argument("domain.b: interval must satisfy a < b");
    Domain d(Interval{a, b}, 1, {r0 > 0 ? r0 : 0.5 * (b - a), lambda});
    d.lo_ = make_point({a});
    d.hi_ = make_point({b});
    d.diam_ = b - a;
    d.finish();
    return d;
}

Domain Domain::ball(const Point& center, double radius, double r0, double lambda)
{
    if (!(radius > 0))
        throw std::invalid_argument("domain.radius: must be positive");
    Domain d(Ball{center, radius}, static_cast<int>(center.size()), {r0 > 0 ? r0 : radius, lambda});
    d.lo_ = center.array() - radius;
    d.hi_ = center.array() + radius;
    d.diam_ = 2.0 * radius;
    d.finish();
    return d;
}

Domain Domain::box(const Point& lower, const Point& upper, double r0, double lambda)
{
    if (lower.size() != upper.size())
        throw std::invalid_argument("domain.upper: dimension mismatch with lower");
    if (!((upper - lower).array() > 0).all())
        throw std::invalid_argument("domain.upper: box must have positive side lengths");
    Domain d(Box{lower, upper}, static_cast<int>(lower.size()),
             {r0 > 0 ? r0 : 0.5 * (upper - lower).minCoeff(), lambda});
    d.lo_ = lower;
    d.hi_ = upper;
    d.diam_ = (upper - lower).norm();
    d.finish();
    return d;
}

Domain Domain::polygon(std::vector<Eigen::Vector2d> v, double r0, double lambda)
{
    const std::size_t n = v.size();
    if (n < 3)
        throw std::invalid_argument("domain.vertices: need at least three vertices");
    double area = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        area += cross(v[i], v[(i + 1) % n]);
    if (std::fabs(area) < 1e-14)
        throw std::invalid_argument("domain.vertices: degenerate polygon");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1))
                continue;
            if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
                throw std::invalid_argument("domain.vertices: polygon is not simple");
        }
    if (!(r0 > 0))
        throw std::invalid_argument("domain.r0: polygons need an explicit r0");
    Domain d(Polygon{v}, 2, {r0, lambda});
    d.lo_ = Point(2);
    d.hi_ = Point(2);
    d.lo_ << v[0].x(), v[0].y();
    d.hi_ = d.lo_;
    double diam = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d.lo_(0) = std::min(d.lo_(0), v[i].x());
        d.lo_(1) = std::min(d.lo_(1), v[i].y());
        d.hi_(0) = std::max(d.hi_(0), v[i].x());
        d.hi_(1) = std::max(d.hi_(1), v[i].y());
        for (std::size_t j = 0; j < n; ++j)
            diam = std::max(diam, (v[i] - v[j]).norm());
    }
    d.diam_ = diam;
    d.finish();
    return d;
}

void Domain::finish()
{
    if (!(lip_.r0 > 0))
        throw std::invalid_argument("domain.r0: must be positive");
    if (lip_.r0 > diam_)
        throw std::invalid_argument("domain.r0: must not exceed the diameter");
    if (!(lip_.lambda > 0))
        throw std::invalid_argument("domain.lambda: must be positive");
    ref_ = reference_points(*this);
}

double Domain::kappa() const
{
    return 1.0 / (2.0 * std::sqrt(1.0 + lip_.lambda * lip_.lambda));
}

bool Domain::contains(const Point& x) const
{
    if (x.size() != dim_ || !x.allFinite())
        return false;
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Interval>)
                return x(0) > s.a && x(0) < s.b;
            else if constexpr (std::is_same_v<T, Ball>)
                return (x - s.center).squaredNorm() < s.radius * s.radius;
            else if constexpr (std::is_same_v<T, Box>)
                return (x.array() > s.lower.array()).all() && (x.array() < s.upper.array()).all();
            else {
                const Eigen::Vector2d p(x(0), x(1));
                return point_in_polygon(s.vertices, p) && dist_to_boundary(x) > 0.0;
            }
        },
        shape_);
}

double Domain::dist_to_boundary(const Point& x) const
{
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Interval>) {
                if (x(0) > s.a && x(0) < s.b)
                    return std::min(x(0) - s.a, s.b - x(0));
                return std::max(s.a - x(0), x(0) - s.b);
            } else if constexpr (std::is_same_v<T, Ball>) {
                return std::fabs(s.radius - (x - s.center).norm());
            } else if constexpr (std::is_same_v<T, Box>) {
                const Eigen::ArrayXd below = (s.lower - x).array().cwiseMax(0.0);
                const Eigen::ArrayXd above = (x - s.upper).array().cwiseMax(0.0);
                const double out = (below + above).matrix().norm();
                if (out > 0.0)
                    return out;
                return std::min((x - s.lower).minCoeff(), (s.upper - x).minCoeff());
            } else {
                const Eigen::Vector2d p(x(0), x(1));
                double best = std::numeric_limits<double>::infinity();
                const std::size_t n = s.vertices.size();
                for (std::size_t i = 0; i < n; ++i)
                    best = std::min(best, seg_dist(p, s.vertices[i], s.vertices[(i + 1) % n]));
                return best;
            }
        },
        shape_);
}

std::vector<std::pair<double, double>> Domain::ray_segments(const Point& p, const Point& dir) const
{
    std::vector<std::pair<double, double>> out;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Interval>) {
                double t0 = (s.a - p(0)) / dir(0), t1 = (s.b - p(0)) / dir(0);
                if (t0 > t1)
                    std::swap(t0, t1);
                t0 = std::max(t0, 0.0);
                if (t1 > t0)
                    out.emplace_back(t0, t1);
            } else if constexpr (std::is_same_v<T, Ball>) {
                const Point q = p - s.center;
                const double b = q.dot(dir), c = q.squaredNorm() - s.radius * s.radius;
                const double disc = b * b - c;
                if (disc <= 0)
                    return;
                const double sq = std::sqrt(disc);
                const double t0 = std::max(-b - sq, 0.0), t1 = -b + sq;
                if (t1 > t0)
                    out.emplace_back(t0, t1);
            } else if constexpr (std::is_same_v<T, Box>) {
                double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
                for (int i = 0; i < dim_; ++i) {
                    if (dir(i) == 0.0) {
                        if (p(i) <= s.lower(i) || p(i) >= s.upper(i))
                            return;
                        continue;
                    }
                    double a = (s.lower(i) - p(i)) / dir(i), b = (s.upper(i) - p(i)) / dir(i);
                    if (a > b)
                        std::swap(a, b);
                    t0 = std::max(t0, a);
                    t1 = std::min(t1, b);
                }
                if (t1 > t0)
                    out.emplace_back(t0, t1);
            } else {
                const Eigen::Vector2d o(p(0), p(1)), u(dir(0), dir(1));
                std::vector<double> ts{0.0};
                const std::size_t n = s.vertices.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const Eigen::Vector2d a = s.vertices[i], e = s.vertices[(i + 1) % n] - a;
                    const double den = cross(u, e);
                    if (den == 0.0)
                        continue;
                    const double t = cross(a - o, e) / den;
                    const double sp = cross(a - o, u) / den;
                    if (t > 0.0 && sp >= 0.0 && sp <= 1.0)
                        ts.push_back(t);
                }
                std::sort(ts.begin(), ts.end());
                for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
                    if (ts[k + 1] - ts[k] <= 0.0)
                        continue;
                    const Point mid = p + 0.5 * (ts[k] + ts[k + 1]) * dir;
                    if (!contains(mid))
                        continue;
                    if (!out.empty() && out.back().second == ts[k])
                        out.back().second = ts[k + 1];
                    else
                        out.emplace_back(ts[k], ts[k + 1]);
                }
            }
        },
        shape_);
    return out;
}

Point Domain::sample_uniform(Rng& rng) const
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point x(dim_);
    for (int tries = 0; tries < 1000000; ++tries) {
        for (int i = 0; i < dim_; ++i)
            x(i) = lo_(i) + (hi_(i) - lo_(i)) * u(rng);
        if (contains(x))
            return x;
    }
    throw NumericalError("sample_uniform: rejection failed");
}

bool contains(const Domain& domain, const Point& x)
{
    return domain.contains(x);
}

double dist_to_boundary(const Domain& domain, const Point& x)
{
    return domain.dist_to_boundary(x);
}

ReferencePoints reference_points(const Domain& domain)
{
    const int d = domain.dim();
    const int n = d == 1 ? 2001 : (d == 2 ? 201 : 41);
    const Point lo = domain.bbox_lower(), hi = domain.bbox_upper();
    const Point mid = 0.5 * (lo + hi);
    const Point step = (hi - lo) / (n - 1);
    Point best(d), x(d);
    double best_delta = -1.0;
    std::vector<int> idx(d, 0);
    // Lexicographic order with the first coordinate slowest; strict
    // improvement keeps the lexicographically smallest maximiser.
    while (true) {
        for (int i = 0; i < d; ++i)
            x(i) = mid(i) + (idx[i] - (n - 1) / 2) * step(i);
        if (domain.contains(x)) {
            const double dl = domain.dist_to_boundary(x);
            if (dl > best_delta) {
                best_delta = dl;
                best = x;
            }
        }
        int k = d - 1;
        while (k >= 0 && ++idx[k] == n) {
            idx[k] = 0;
            --k;
        }
        if (k < 0)
            break;
    }
    const double r0 = domain.lipschitz().r0;
    if (best_delta < 0.5 * r0)
        throw std::invalid_argument("domain.r0: no grid point with distance to the boundary >= r0/2");
    ReferencePoints ref{best, best};
    ref.x1(0) += 0.25 * r0;
    return ref;
}

Point interpolation_point(const Domain& domain, const Point& x, const Point& y)
{
    const double r = std::max({domain.dist_to_boundary(x), domain.dist_to_boundary(y), (x - y).norm()});
    const auto& ref = domain.reference();
    if (r > domain.lipschitz().r0 / 32.0)
        return ref.x1;
    const double kr = domain.kappa() * r;
    const Point m = 0.5 * (x + y);
    Point u = ref.x0 - m;
    const double len = u.norm();
    if (len > 0)
        u /= len;
    const double step = 0.25 * kr;
    const int max_steps = static_cast<int>(std::ceil(std::min(len, 3.0 * r) / step)) + 1;
    for (int k = 0; k <= max_steps; ++k) {
        const Point a = m + (k * step) * u;
        if (domain.contains(a) && domain.dist_to_boundary(a) >= kr && (a - x).norm() + kr <= 3.0 * r
            && (a - y).norm() + kr <= 3.0 * r)
            return a;
    }
    throw NumericalError("interpolation_point: no admissible point found on the search segment");
}

nlohmann::json domain_to_json(const Domain& domain)
{
    nlohmann::json j;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Interval>) {
                j["shape"] = "interval";
                j["a"] = s.a;
                j["b"] = s.b;
            } else if constexpr (std::is_same_v<T, Ball>) {
                j["shape"] = "ball";
                j["center"] = point_json(s.center);
                j["radius"] = s.radius;
            } else if constexpr (std::is_same_v<T, Box>) {
                j["shape"] = "box";
                j["lower"] = point_json(s.lower);
                j["upper"] = point_json(s.upper);
            } else {
                j["shape"] = "polygon";
                auto vs = nlohmann::json::array();
                for (const auto& v : s.vertices)
                    vs.push_back({v.x(), v.y()});
                j["vertices"] = vs;
            }
        },
        domain.shape());
    j["r0"] = domain.lipschitz().r0;
    j["lambda"] = domain.lipschitz().lambda;
    return j;
}

Domain domain_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("shape"))
        throw std::invalid_argument("domain.shape: missing");
    const std::string shape = j.at("shape").get<std::string>();
    const double r0 = j.value("r0", -1.0);
    const double lambda = j.value("lambda", 1.0);
    if (shape == "interval") {
        if (j.contains("endpoints"))
            return Domain::interval(j["endpoints"][0].get<double>(), j["endpoints"][1].get<double>(), r0, lambda);
        if (!j.contains("a") || !j.contains("b"))
            throw std::invalid_argument("domain.a: interval needs a and b");
        return Domain::interval(j["a"].get<double>(), j["b"].get<double>(), r0, lambda);
    }
    if (shape == "ball") {
        if (!j.contains("radius"))
            throw std::invalid_argument("domain.radius: missing");
        return Domain::ball(read_point(j, "center"), j["radius"].get<double>(), r0, lambda);
    }
    if (shape == "box")
        return Domain::box(read_point(j, "lower"), read_point(j, "upper"), r0, lambda);
    if (shape == "polygon") {
        if (!j.contains("vertices"))
            throw std::invalid_argument("domain.vertices: missing");
        std::vector<Eigen::Vector2d> vs;
        for (const auto& v : j["vertices"])
            vs.emplace_back(v[0].get<double>(), v[1].get<double>());
        return Domain::polygon(vs, r0, lambda);
    }
    throw std::invalid_argument("domain.shape: unknown shape '" + shape + "'");
}

}  // namespace levygreen
