#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "levygreen/geometry.hpp"
#include "levygreen/levy_models.hpp"
#include "levygreen/types.hpp"

namespace levygreen {

// Positive beta-stable variable with E exp(-l S) = exp(-l^beta).
double positive_stable(double beta, Rng& rng);

Point sample_stable_increment(double t, double alpha, int d, Rng& rng);

struct AcceptanceStats {
    long attempts = 0;
    long accepted = 0;
};

Point sample_relativistic_increment(double t, double alpha, double m, int d, Rng& rng,
                                    AcceptanceStats* stats = nullptr);

// Nonnegative finite radial jump law with an exact or rejection sampler.
struct JumpLaw {
    double mass = 0.0;
    int d = 1;
    std::function<Point(Rng&)> draw;
};

struct Jump {
    double time;
    Point w;
};

std::vector<Jump> sample_compound_poisson(const JumpLaw& law, double t, Rng& rng);

// Laws of sigma_+ (removed jumps) and sigma_- (added jumps) of a model.
JumpLaw sigma_positive_law(const LevyModel& model);
JumpLaw sigma_negative_law(const LevyModel& model);

struct PathSkeleton {
    std::vector<double> times;
    std::vector<Point> positions;
    bool exited = false;
    long exit_index = -1;
    double horizon = 0.0;
};

struct CouplingSample {
    PathSkeleton path_X;
    PathSkeleton path_Z;
    double T = std::numeric_limits<double>::infinity();
    std::vector<Jump> jumps_V;
};

struct PathParams {
    double eps = 0.01;       // small-jump cutoff radius
    double dt = 2e-3;        // time grid for the Gaussian substitute and exit checks
    double horizon = 1e3;
    bool bridge = true;      // kill on a Brownian-bridge crossing of the Gaussian part
};

// Cutoffs scaled to a length `scale` (typically half the domain diameter).
PathParams default_path_params(double alpha, double scale);

PathSkeleton sample_perturbed_path(const LevyModel& model, const Point& x, double horizon, double eps, double dt,
                                   Rng& rng, const Domain* domain = nullptr);

CouplingSample sample_coupled(const LevyModel& model_x, const JumpLaw& v_law, const Point& x, double horizon,
                              double eps, double dt, Rng& rng);

// Simulates the stable path X and the thinned/augmented path Y of `model`
// from a shared stream of stable jumps. The visitor sees every
// inter-event segment with left-point positions:
//   void segment(double t, double dt, const Point& X, bool x_alive, const Point& Y, bool y_alive)
//   void exit_x(double t, const Point& X);  void exit_y(double t, const Point& Y)
//   void jump(double t, const Point& w, bool kept_by_y, bool extra)
//   void node(double t, const Point& X, bool x_alive, const Point& Y, bool y_alive)
//   bool stop() const
class PathEngine {
public:
    PathEngine(const LevyModel& model, const PathParams& params, const Domain* domain);

    const LevyModel& model() const { return model_; }
    const PathParams& params() const { return params_; }
    double big_jump_rate() const { return rate_big_; }
    double gaussian_variance() const { return gauss_var_; }  // per unit time, all coordinates
    double extra_rate() const { return extra_.mass; }

    template <class Visitor>
    void run(const Point& x, bool track_x, Rng& rng, Visitor& vis) const;

private:
    // Probability that the Gaussian bridge from a to b (both inside) left D,
    // from the half-space formula at the local boundary distances.
    bool bridge_crossed(const Point& a, const Point& b, double h, double u) const
    {
        if (!domain_->contains(b))
            return false;
        const double da = domain_->dist_to_boundary(a), db = domain_->dist_to_boundary(b);
        const double v = gauss_sd_ * gauss_sd_ * h;
        return u < std::exp(-2.0 * da * db / v);
    }

    LevyModel model_;
    PathParams params_;
    const Domain* domain_;
    int d_;
    double alpha_;
    double rate_big_;
    double gauss_var_;
    double gauss_sd_;  // per coordinate per sqrt(time)
    bool thin_;
    JumpLaw extra_;
};

template <class Visitor>
void PathEngine::run(const Point& x, bool track_x, Rng& rng, Visitor& vis) const
{
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Jumps and the Gaussian part draw from separate streams, so refining
    // dt leaves the jump sequence unchanged.
    Rng jr(rng()), gr(rng());
    std::normal_distribution<double> gdir(0.0, 1.0);
    const double inf = std::numeric_limits<double>::infinity();
    const double dt = params_.dt, horizon = params_.horizon;

    Point X = x, Y = x, g(d_);
    bool ax = track_x, ay = true;
    if (domain_) {
        if (!domain_->contains(x)) {
            if (ax) {
                ax = false;
                vis.exit_x(0.0, X);
            }
            ay = false;
            vis.exit_y(0.0, Y);
            return;
        }
    }
    double t = 0.0;
    double next_grid = dt;
    double next_big = rate_big_ > 0 ? expo(jr) / rate_big_ : inf;
    double next_extra = extra_.mass > 0 ? expo(jr) / extra_.mass : inf;
    long grid_index = 1;
    while ((ax || ay) && t < horizon && !vis.stop()) {
        double tn = std::min({next_grid, next_big, next_extra, horizon});
        const double h = tn - t;
        vis.segment(t, h, X, ax, Y, ay);
        const double s = gauss_sd_ * std::sqrt(h);
        for (int i = 0; i < d_; ++i)
            g(i) = s * gauss(gr);
        // One uniform serves both paths so the coupling survives the check.
        const double ub = (domain_ && params_.bridge) ? unif(gr) : 1.0;
        t = tn;
        if (ax) {
            const bool crossed = domain_ && params_.bridge && bridge_crossed(X, X + g, h, ub);
            X += g;
            if (crossed || (domain_ && !domain_->contains(X))) {
                ax = false;
                vis.exit_x(t, X);
            }
        }
        if (ay) {
            const bool crossed = domain_ && params_.bridge && bridge_crossed(Y, Y + g, h, ub);
            Y += g;
            if (crossed || (domain_ && !domain_->contains(Y))) {
                ay = false;
                vis.exit_y(t, Y);
            }
        }
        if (tn == next_big) {
            const double r = params_.eps * std::pow(1.0 - unif(jr), -1.0 / alpha_);
            Point w(d_);
            if (d_ == 1) {
                w(0) = unif(jr) < 0.5 ? -r : r;
            } else {
                for (int i = 0; i < d_; ++i)
                    w(i) = gdir(jr);
                w *= r / w.norm();
            }
            bool keep = true;
            if (thin_) {
                const double u = unif(jr);
                keep = u < model_.density_ratio(r);
            }
            if (ax)
                X += w;
            if (ay && keep)
                Y += w;
            vis.jump(t, w, keep, false);
            next_big += expo(jr) / rate_big_;
        } else if (tn == next_extra) {
            const Point w = extra_.draw(jr);
            if (ay)
                Y += w;
            vis.jump(t, w, true, true);
            next_extra += expo(jr) / extra_.mass;
        } else if (tn == next_grid) {
            ++grid_index;
            next_grid = grid_index * dt;
        }
        if (domain_) {
            if (ax && !domain_->contains(X)) {
                ax = false;
                vis.exit_x(t, X);
            }
            if (ay && !domain_->contains(Y)) {
                ay = false;
                vis.exit_y(t, Y);
            }
        }
        vis.node(t, X, ax, Y, ay);
    }
}

}  // namespace levygreen
