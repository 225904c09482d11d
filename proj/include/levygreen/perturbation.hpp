#pragma once

#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

#include "levygreen/levy_models.hpp"

namespace levygreen {

// Values on the symmetric grid x_i = (i - (n-1)/2) h, i < n, per axis
// (row-major for d = 2). Odd n puts a node at the origin.
struct GridDensity {
    int d = 1;
    int n = 0;
    double h = 0.0;
    double t = 0.0;
    std::vector<double> values;

    double extent() const { return 0.5 * (n - 1) * h; }
    double coord(int i) const { return (i - 0.5 * (n - 1)) * h; }
    std::size_t size() const { return values.size(); }
    double& at(int i) { return values[i]; }
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n + j]; }
    double at(int i) const { return values[i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
    double radius(std::size_t flat) const;

    double mass() const;
    double peak() const;
    double symmetry_error() const;  // max |f(x) - f(-x)|
};

GridDensity make_grid(int d, int n, double h, double t = 0.0);

// sigma sampled on an odd grid; cells near the origin take the cell
// average of sigma instead of the midpoint value.
GridDensity sample_sigma(const LevyModel& model, int n, double h);

// Linear convolution h^d sum_j a_j b_{i-j} via zero-padded FFT, cropped to
// the grid of `a`. Throws NumericalError when the result's boundary cells
// exceed 1e-6 of its peak.
GridDensity convolve(const GridDensity& a, const GridDensity& b);
GridDensity convolve_power(const GridDensity& sigma, int n);

struct SeriesOptions {
    int n_max = 0;          // 0: max(8, ceil(d / alpha) + 4)
    double tol = 1e-6;      // on the rigorous series tail
    int nodes = 0;          // per axis; 0: 2049 for d = 1, 257 for d = 2
    double extent = 0.0;    // 0: 6 t^{1/alpha} + sigma extent
    int pad = 4;            // periodic box is pad * grid width (rounded to a power of two)
};

struct SeriesResult {
    GridDensity density;
    int n_max = 0;
    double tail_bound = 0.0;        // sup p~ (tM)^n / n! summed over n > n_max, times e^{tm}
    double truncation_bound = 0.0;  // from moving sigma mass beyond a quarter period
    double sup_stable = 0.0;
    double sigma_grid_mass = 0.0;

    double tolerance() const { return tail_bound + truncation_bound; }
    nlohmann::json diagnostics() const;
};

// p^Y(t, .) = e^{tm} sum_n (-t)^n / n! p~(t, .) * sigma^{*n} on a grid. The
// n = 0 term is the exact stable density at the nodes; the rest is summed
// in Fourier space with sigma's transform taken from its grid samples.
SeriesResult density_series(double t, const LevyModel& model, const SeriesOptions& opt = {});

// Radius beyond which |sigma| carries less than `frac` of its total
// variation (the support radius when sigma is compactly supported).
double sigma_extent(const LevyModel& model, double frac = 1e-9);

struct DominationReport {
    std::vector<double> times;
    std::vector<double> worst_margin;  // min over nodes of e^{mt} p~ - p^Y, per t
    std::vector<double> worst_x;
    std::vector<double> tolerance;
    std::vector<double> max_ratio;     // max p^Y / p~ over nodes, per t
    bool holds = true;
    nlohmann::json to_json() const;
};

// Free-space check of p^Y(t, x) <= e^{mt} p~(t, x) at every grid node.
// Requires sigma >= 0.
DominationReport domination_check(const std::vector<double>& times, const LevyModel& model, int nodes = 2048,
                                  double extent = 0.0);

struct PotentialOptions {
    int panels_per_decade = 2;
    int order = 8;
    double t_min = 1e-6;
    double t_max = 50.0;
    double h = 0.01;         // spacing of the sigma samples
    double tol = 0.02;       // allowed remainder relative to U~ at the largest radius
};

struct PotentialReport {
    std::vector<double> radii;
    std::vector<double> u_y;
    std::vector<double> u_stable;
    std::vector<double> ratio;
    double band_min = 0.0;
    double band_max = 0.0;
    double remainder = 0.0;  // bound on the part of the time integral beyond t_max
    nlohmann::json to_json() const;
};

// U^Y / U~ at the given radii, with U^Y = U~ + int_0^inf (p^Y - p~) dt; the
// difference is integrated on a log t-grid (series on (0, 1], the summed
// exponent beyond) and the part beyond t_max is bounded by t^{-d/alpha}.
PotentialReport potential_compare(const LevyModel& model, const std::vector<double>& radii,
                                  const PotentialOptions& opt = {});

struct SeriesGap {
    double t0 = 0.0;
    double gap = 0.0;    // max over the x grid of int_0^{t0} |p~ - e^{-2mt} p^Y| dt
    double worst_x = 0.0;
    double ratio = 0.0;  // gap / t0^{2 - 1/alpha}
};

// d = 1, alpha >= 1; the x grid is `points` equally spaced nodes in [0, x_max].
SeriesGap one_dim_series_gap(double t0, const LevyModel& model, int points = 41, double x_max = 1.0,
                             int panels = 12);

// Convolution of a 1D grid with the N(0, bw^2) density, for comparisons
// with Gaussian kernel density estimates at the same bandwidth.
GridDensity smooth_gaussian(const GridDensity& g, double bw);

void write_grid_binary(const GridDensity& g, const std::string& path);
GridDensity read_grid_binary(const std::string& path);
// 1D slice through the origin along the first axis.
void write_grid_csv(const GridDensity& g, const std::string& path);

}  // namespace levygreen
