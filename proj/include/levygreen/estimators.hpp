#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "levygreen/cubature.hpp"
#include "levygreen/geometry.hpp"
#include "levygreen/levy_models.hpp"
#include "levygreen/sampling.hpp"
#include "levygreen/stable.hpp"

namespace levygreen {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    long n = 0;
    std::uint64_t seed = 0;
    std::string method;
    nlohmann::json diagnostics = nlohmann::json::object();
    bool flagged = false;
};

nlohmann::json to_json(const Estimate& e);

struct RunConfig {
    long n = 10000;
    std::uint64_t seed = 1;
    int workers = 0;    // 0: default_workers()
    long block = 250;   // paths per RNG block; results do not depend on workers
};

// Path parameters scaled to half the domain diameter.
PathParams path_params_for(const Domain& domain, const LevyModel& model);

// Default kernel bandwidth for Green estimates: 0.025 diam.
double default_bandwidth(const Domain& domain);

Estimate exit_time_mc(const Domain& domain, const LevyModel& model, const Point& x, const RunConfig& cfg,
                      const PathParams* params = nullptr);

struct WosOptions {
    double shrink = 0.95;
    double shell = 1e-4;  // relative to diam
    long max_steps = 1000000;
};

Estimate green_wos_stable(const Domain& domain, double alpha, const Point& x, const Point& y, const RunConfig& cfg,
                          const WosOptions& opt = {});
// All targets share the walks from x.
std::vector<Estimate> green_wos_stable_many(const Domain& domain, double alpha, const Point& x,
                                            const std::vector<Point>& ys, const RunConfig& cfg,
                                            const WosOptions& opt = {});

// Occupation estimate with the uniform ball kernel of radius h; the
// diagnostics carry the estimate at h/2 and a bias flag.
Estimate green_mc(const Domain& domain, const LevyModel& model, const Point& x, const Point& y, double h,
                  const RunConfig& cfg, const PathParams* params = nullptr);
std::vector<Estimate> green_mc_many(const Domain& domain, const LevyModel& model, const Point& x,
                                    const std::vector<Point>& ys, const std::vector<double>& hs, const RunConfig& cfg,
                                    const PathParams* params = nullptr);

Estimate killed_density_mc(const Domain& domain, const LevyModel& model, double t, const Point& x, const Point& y,
                           double h, const RunConfig& cfg, const PathParams* params = nullptr);
std::vector<Estimate> killed_density_mc_many(const Domain& domain, const LevyModel& model, double t, const Point& x,
                                             const std::vector<Point>& ys, double h, const RunConfig& cfg,
                                             const PathParams* params = nullptr);

// Ikeda-Watanabe quadrature of G(x, y) nu(y - z) over D.
Estimate poisson_kernel_iw(const Domain& domain, const LevyModel& model, const Point& x, const Point& z,
                           const GreenProvider& green, const CubatureSpec& spec = {});
// The same functional integrated along simulated paths: E^x int_0^tau nu(Y_t - z) dt.
std::vector<Estimate> poisson_kernel_occupation(const Domain& domain, const LevyModel& model, const Point& x,
                                                const std::vector<Point>& zs, const RunConfig& cfg,
                                                const PathParams* params = nullptr);

// Exit positions from x: exact walk-on-spheres for the stable model,
// simulated paths otherwise.
std::vector<Point> exit_positions(const Domain& domain, const LevyModel& model, const Point& x, const RunConfig& cfg,
                                  const PathParams* params = nullptr);

// Occupation integrands along the stable path X and the model's path Y,
// both started at x and driven by the same jumps. An empty fx skips X.
struct CoupledTerm {
    std::function<double(const Point&)> fx, fy;
};

// Per-block sums of int_0^tau f(X_t) dt, int_0^tau f(Y_t) dt and the exit
// times; blocks are RunConfig::block paths drawn from their own streams.
struct CoupledBlocks {
    long block = 0;
    std::vector<long> n;
    std::vector<std::vector<double>> x, y;  // [block][term]
    std::vector<double> tau_x, tau_y;
    long horizon_hits = 0;
    long paths() const;
};

CoupledBlocks coupled_blocks(const Domain& domain, const LevyModel& model, const Point& x,
                             const std::vector<CoupledTerm>& terms, const RunConfig& cfg,
                             const PathParams* params = nullptr);

using BoundaryData = std::function<double(const Point&)>;
Estimate harmonic_eval(const Domain& domain, const LevyModel& model, const BoundaryData& u, const Point& x,
                       const RunConfig& cfg, const PathParams* params = nullptr);

}  // namespace levygreen
