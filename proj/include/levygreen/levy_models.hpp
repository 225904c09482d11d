#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "levygreen/types.hpp"

namespace levygreen {

enum class ModelKind { stable, relativistic, truncated, custom };

std::string to_string(ModelKind kind);

// Radial perturbation sigma = nu_stable - nu_Y for custom models. The
// envelope promise is |sigma(r)| <= c r^{rho-d} on (0,1] and |sigma| <= c
// on (1, support]; sigma vanishes beyond `support`.
struct SigmaProfile {
    std::string profile = "gaussian";  // gaussian | power | callback
    double amplitude = 0.0;
    double width = 1.0;
    double c = 0.0;
    double rho = 1.0;
    double support = 1.0;
    std::function<double(double)> density;  // used when profile == "callback"
};

struct SigmaStats {
    double m = 0.0;    // signed mass
    double M = 0.0;    // total variation
    double rho = 0.0;
    double c = 0.0;
    bool nonneg = true;
};

class LevyModel {
public:
    static LevyModel stable(int d, double alpha);
    static LevyModel relativistic(int d, double alpha, double m);
    static LevyModel truncated(int d, double alpha, double cutoff);
    static LevyModel custom(int d, double alpha, SigmaProfile sigma);

    ModelKind kind() const { return kind_; }
    int dim() const { return d_; }
    double alpha() const { return alpha_; }
    double mass() const { return m_; }
    double cutoff() const { return cutoff_; }
    const SigmaProfile& profile() const { return sigma_; }

    double stable_constant() const { return a_neg_; }  // A(-alpha, d)
    double stable_radial(double r) const;
    double density_radial(double r) const;
    double sigma_radial(double r) const;

    // nu_Y / nu_stable, clipped to [0, inf).
    double density_ratio(double r) const;

    // Declared envelope (c, rho) and support radius of sigma.
    double envelope_c() const { return env_c_; }
    double envelope_rho() const { return env_rho_; }
    double sigma_support() const;
    double sigma_mass() const { return sigma_mass_; }

    // The same stable index and dimension with sigma = 0.
    LevyModel stable_part() const { return stable(d_, alpha_); }

private:
    LevyModel(ModelKind kind, int d, double alpha);
    void declare_envelope();

    ModelKind kind_;
    int d_;
    double alpha_;
    double m_ = 0.0;
    double cutoff_ = 1.0;
    SigmaProfile sigma_;
    double a_neg_ = 0.0;
    double env_c_ = 0.0;
    double env_rho_ = 1.0;
    double sigma_mass_ = 0.0;
};

double levy_density(const LevyModel& model, const Point& x);

// Relativistic Levy density from the subordination integral, by quadrature.
double relativistic_density_subordination(int d, double alpha, double m, double r);

// psi(z); `tol` controls quadrature for truncated and custom models.
double char_exponent(const LevyModel& model, const Point& z, double tol = 1e-10);
double char_exponent_radial(const LevyModel& model, double k, double tol = 1e-10);

// Fourier transform of the radial sigma at frequency |z| = k.
double sigma_fourier(const LevyModel& model, double k, double tol = 1e-10);

SigmaStats sigma_stats(const LevyModel& model);

nlohmann::json model_to_json(const LevyModel& model);
LevyModel model_from_json(const nlohmann::json& j);

}  // namespace levygreen
