#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "levygreen/cubature.hpp"
#include "levygreen/estimators.hpp"
#include "levygreen/geometry.hpp"
#include "levygreen/levy_models.hpp"
#include "levygreen/stable.hpp"

namespace levygreen {

enum class Verdict { bounded, violated, inconclusive };
std::string to_string(Verdict v);

struct Band {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct RatioPoint {
    Point x;
    Point y;            // empty for x-only grids
    double num = 0.0;   // perturbed side
    double den = 0.0;   // stable side
    double ratio = 0.0;
    double lo = 0.0;    // bootstrap percentile interval of the ratio
    double hi = 0.0;
    bool flagged = false;
    nlohmann::json extra = nlohmann::json::object();
};

struct RatioReport {
    std::string experiment;
    std::vector<RatioPoint> points;
    Band min_ratio, max_ratio;
    double band = 0.0;        // max / min at full N
    double band_half = 0.0;   // same from the first half of the blocks
    double expansion = 0.0;   // band / band_half - 1
    double expansion_refined = std::numeric_limits<double>::quiet_NaN();
    Verdict verdict = Verdict::inconclusive;
    std::string reason;
    nlohmann::json config = nlohmann::json::object();

    nlohmann::json to_json() const;
    // One row per grid point, each prefixed with `hash`.
    std::string to_csv(const std::string& hash) const;
};

struct RatioRule {
    double level = 0.95;
    double max_expansion = 0.10;
    int bootstrap = 200;
};

// Pair grids: x and y points from separate Halton sequences in the domain,
// at least `margin` diam from the boundary, pairs closer than min_sep dropped.
struct PairGrid {
    int nx = 5;
    int ny = 4;
    double margin = 0.05;
    double min_sep = 0.0;  // 0: 4 h
};
std::vector<Point> halton_points(const Domain& domain, int n, double margin, int base_offset = 0);

struct CompareConfig {
    RunConfig run;
    PairGrid grid;
    double h = 0.0;         // 0: default bandwidth
    bool refine = false;    // rerun on a grid with twice the points per axis
    RatioRule rule;
    PathParams* params = nullptr;
};

// G^Y / G~ with both sides estimated by kernel occupation on the coupled
// paths from each x. The closed-form G~ is echoed where one exists.
RatioReport compare_green(const Domain& domain, const LevyModel& model, const CompareConfig& cfg);
// E^x tau^Y / E^x tau~ on the coupled paths.
RatioReport compare_moments(const Domain& domain, const LevyModel& model, const std::vector<Point>& xs,
                            const CompareConfig& cfg);

struct PoissonComparison {
    RatioReport kernel;  // P^Y / P~ for every (x, z)
    RatioReport far;     // P^Y / (nu^Y(z - x) E^x tau~) for the far branch
};
// z with dist(z, D) <= r_branch belong to the near branch. P^Y and P~ are
// the occupation integrals of nu^Y(. - z) and nu~(. - z) along the coupled
// paths.
PoissonComparison compare_poisson(const Domain& domain, const LevyModel& model, const std::vector<Point>& xs,
                                  const std::vector<Point>& zs, double r_branch, const CompareConfig& cfg);

// Double ratio u(x) v(y) / (u(y) v(x)) of two harmonic functions over the
// evaluation points; u and v share the exit positions from each point.
RatioReport bhp_check(const Domain& domain, const LevyModel& model, const BoundaryData& u, const BoundaryData& v,
                      const std::vector<Point>& xs, const CompareConfig& cfg);

// Nested quadrature of int_D int_D K(x, w) k(|w - z|) f(z) dz dw.
struct NestedOptions {
    CubatureSpec outer{8, 8, 1e-6, 7};
    CubatureSpec inner{8, 8, 1e-6, 7};
    int table_radial = 48;
    int table_angular = 24;
    double r_min = 1e-9;   // relative to diam
    bool radial = false;   // f radial about the pole and the domain a ball centred there
};

// [H f](x) = int_D int_D G~(x, w) |sigma(w - z)| f(z) dz dw at each x; f may
// be singular at `pole`. With signed_sigma the absolute value is dropped.
std::vector<double> h_sigma_apply(const Domain& domain, const LevyModel& model, const GreenProvider& green,
                                  const std::function<double(const Point&)>& f, const Point* pole,
                                  const std::vector<Point>& xs, const NestedOptions& opt = {},
                                  bool signed_sigma = false);
// R~(x, y) for each x in xs and a common y.
std::vector<double> r_tilde(const Domain& domain, const LevyModel& model, const GreenProvider& green,
                            const std::vector<Point>& xs, const Point& y, const NestedOptions& opt = {});

// Slope of log v against log s by least squares.
double log_slope(const std::vector<double>& s, const std::vector<double>& v);

struct CalkaCase {
    std::string name;       // power | log | equal | bounded
    double a = 0.0, b = 0.0, rho = 0.0;
    std::vector<double> separations;
    std::vector<double> integrals;
    double slope = 0.0;     // fitted exponent against the case regressor
    double expected = 0.0;
    double raw_slope = 0.0; // log I against log |x - y|
    bool pass = false;
    // Local log-slope of I / form against log(1 / s) at the finest rung;
    // the upper bound is taken to hold when it stays below tol.
    double bound_slope = 0.0;
    bool bound_holds = false;
    nlohmann::json to_json() const;
};

// Classifies (a, b, rho) into the four cases of the convolution bound.
std::string calka_case(double a, double b, double rho);
// The integral of |y - z|^{a-d} |z - w|^rho |w - x|^{b-d} over D x D along
// the ladder x = y + s e_1. Power forms are regressed on log s, the
// logarithmic forms on log(1 + log(diam / s)).
CalkaCase calka_bound_check(const Domain& domain, double a, double b, double rho, const Point& y,
                            const std::vector<double>& ladder, double tol = 0.1, const NestedOptions& opt = {});
std::vector<double> halving_ladder(double s0, int steps);

struct ContractionRow {
    double diam = 0.0;
    double theta = 0.0;   // max over nodes of [H G~(., y)](x) / G~(x, y)
    Point worst_x;
    bool zero_sigma = false;
};
// Disks B(0, diam/2), y at the centre, x on a polar grid.
std::vector<ContractionRow> contraction_scan(const LevyModel& model, const std::vector<double>& diams,
                                             const NestedOptions& opt = {});
nlohmann::json to_json(const std::vector<ContractionRow>& rows);

struct PowerFit {
    std::vector<double> separations;
    std::vector<double> values;
    double exponent = 0.0;
    double prefactor = 0.0;
    nlohmann::json to_json() const;
};
// R~(x, y) / G~(x, y) on the ladder x = y + s e_1 in a ball centred at y.
PowerFit rtilde_ratio_fit(const Domain& ball, const LevyModel& model, const std::vector<double>& ladder,
                          const NestedOptions& opt = {});

struct ScalarBand {
    double min = 0.0;
    double max = 0.0;
    long count = 0;
    nlohmann::json to_json() const;
};
// phi(A_xy)^2 / (phi(A_xw) phi(A_zy)) divided by the max{...} factor with
// exponent gamma, over random quadruples of the ball.
ScalarBand phi_ratio_check(const Domain& ball, double alpha, double gamma, int quadruples, std::uint64_t seed);
// E^x tau E^y tau / G(x, y) over random pairs of the ball (closed forms).
ScalarBand property_a_check(const Domain& ball, double alpha, int pairs, std::uint64_t seed);
// d = 1: R~(x, y) |x - y|^{1 - min(rho, 1)} / (delta(x) delta(y))^{alpha/2}
// over an n x n grid of the interval.
ScalarBand rfala_check(const Domain& interval, const LevyModel& model, int n, const NestedOptions& opt = {});

struct OccupationIdentity {
    Estimate integral;   // int_D G(x, y) dy from the node rule
    Estimate exit;       // E^x tau
    double rel_diff = 0.0;
    nlohmann::json to_json() const;
};
// Polar nodes around x with radius R v^{1/alpha} (R the ray length, v on
// Gauss-Legendre nodes) and bandwidth min(default bandwidth, s/2.5) per
// node; the weighted occupation is accumulated along each path.
OccupationIdentity occupation_identity(const Domain& domain, const LevyModel& model, const Point& x,
                                       const RunConfig& cfg, int angles = 10, int radial = 5);

}  // namespace levygreen
