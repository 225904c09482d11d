#pragma once

#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "levygreen/types.hpp"

namespace levygreen {

struct Interval {
    double a, b;
};

struct Ball {
    Point center;
    double radius;
};

struct Box {
    Point lower, upper;
};

struct Polygon {
    std::vector<Eigen::Vector2d> vertices;
};

using Shape = std::variant<Interval, Ball, Box, Polygon>;

struct LipschitzCharacter {
    double r0;
    double lambda;
};

struct ReferencePoints {
    Point x0, x1;
};

class Domain {
public:
    static Domain interval(double a, double b, double r0 = -1.0, double lambda = 1.0);
    static Domain ball(const Point& center, double radius, double r0 = -1.0, double lambda = 1.0);
    static Domain box(const Point& lower, const Point& upper, double r0 = -1.0, double lambda = 1.0);
    static Domain polygon(std::vector<Eigen::Vector2d> vertices, double r0, double lambda);

    int dim() const { return dim_; }
    double diam() const { return diam_; }
    const LipschitzCharacter& lipschitz() const { return lip_; }
    double kappa() const;        // 1 / (2 sqrt(1 + lambda^2))
    double r0_ratio() const { return lip_.r0 / diam_; }
    const Shape& shape() const { return shape_; }
    const ReferencePoints& reference() const { return ref_; }
    bool is_ball() const { return std::holds_alternative<Ball>(shape_); }

    bool contains(const Point& x) const;
    double dist_to_boundary(const Point& x) const;

    // Parameter intervals [t0, t1] with p + t dir inside the domain, t >= 0.
    std::vector<std::pair<double, double>> ray_segments(const Point& p, const Point& dir) const;

    Point bbox_lower() const { return lo_; }
    Point bbox_upper() const { return hi_; }
    Point sample_uniform(Rng& rng) const;

private:
    Domain(Shape shape, int dim, LipschitzCharacter lip);
    void finish();

    Shape shape_;
    int dim_;
    LipschitzCharacter lip_;
    double diam_ = 0.0;
    Point lo_, hi_;
    ReferencePoints ref_;
};

bool contains(const Domain& domain, const Point& x);
double dist_to_boundary(const Domain& domain, const Point& x);
ReferencePoints reference_points(const Domain& domain);

// Deterministic element of the interpolation set for (x, y); see README.
Point interpolation_point(const Domain& domain, const Point& x, const Point& y);

nlohmann::json domain_to_json(const Domain& domain);
Domain domain_from_json(const nlohmann::json& j);

}  // namespace levygreen
