#include "levygreen/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <unsupported/Eigen/FFT>

#include "levygreen/quadrature.hpp"
#include "levygreen/special.hpp"
#include "levygreen/stable.hpp"

namespace levygreen {

using cvec = std::vector<std::complex<double>>;

double GridDensity::radius(std::size_t flat) const
{
    if (d == 1)
        return std::fabs(coord(static_cast<int>(flat)));
    const int i = static_cast<int>(flat / n), j = static_cast<int>(flat % n);
    return std::hypot(coord(i), coord(j));
}

double GridDensity::mass() const
{
    double s = 0.0;
    for (double v : values)
        s += v;
    return s * std::pow(h, d);
}

double GridDensity::peak() const
{
    double p = 0.0;
    for (double v : values)
        p = std::max(p, std::fabs(v));
    return p;
}

double GridDensity::symmetry_error() const
{
    double e = 0.0;
    const std::size_t total = values.size();
    for (std::size_t k = 0; k < total; ++k)
        e = std::max(e, std::fabs(values[k] - values[total - 1 - k]));
    return e;
}

GridDensity make_grid(int d, int n, double h, double t)
{
    if (d < 1 || d > 2)
        throw std::invalid_argument("grid: only d = 1 and d = 2 are supported");
    if (n < 2 || !(h > 0.0))
        throw std::invalid_argument("grid: need n >= 2 and h > 0");
    GridDensity g;
    g.d = d;
    g.n = n;
    g.h = h;
    g.t = t;
    g.values.assign(d == 1 ? n : static_cast<std::size_t>(n) * n, 0.0);
    return g;
}

namespace {

int next_pow2(long v)
{
    int p = 1;
    while (p < v)
        p <<= 1;
    return p;
}

// Index q of a periodic lattice of size P, as a signed offset.
inline long signed_index(long q, long P) { return q < P / 2 ? q : q - P; }

void fft_nd(cvec& a, int P, int d, bool inverse)
{
    Eigen::FFT<double> fft;
    cvec in(P), out(P);
    auto pass = [&](std::size_t start, std::size_t stride) {
        for (int q = 0; q < P; ++q)
            in[q] = a[start + q * stride];
        if (inverse)
            fft.inv(out, in);
        else
            fft.fwd(out, in);
        for (int q = 0; q < P; ++q)
            a[start + q * stride] = out[q];
    };
    if (d == 1) {
        pass(0, 1);
        return;
    }
    for (int r = 0; r < P; ++r)
        pass(static_cast<std::size_t>(r) * P, 1);
    for (int c = 0; c < P; ++c)
        pass(c, P);
}

// Cells within this many spacings of the origin are averaged.
constexpr long kAveraged1 = 64;
constexpr long kAveraged2 = 2;

bool averaged_cell(int d, long i, long j)
{
    return d == 1 ? std::labs(i) <= kAveraged1 : std::labs(i) <= kAveraged2 && std::labs(j) <= kAveraged2;
}

// sigma at lattice offset (i, j); cell averages near the origin.
double sigma_cell(const LevyModel& model, long i, long j, double h)
{
    const int d = model.dim();
    auto s = [&](double r) { return r == 0.0 ? 0.0 : model.sigma_radial(r); };
    if (d == 1) {
        if (std::labs(i) > kAveraged1)
            return s(std::fabs(i * h));
        if (i == 0)
            return 2.0 / h
                * integrate_tanh_sinh([&](double da, double) { return s(da); }, 0.0, 0.5 * h, 1e-10).value;
        const double a = (std::labs(i) - 0.5) * h, b = a + h;
        return integrate_tanh_sinh([&](double da, double) { return s(a + da); }, a, b, 1e-10).value / h;
    }
    if (!averaged_cell(2, i, j))
        return s(std::hypot(i * h, j * h));
    if (i == 0 && j == 0) {
        // Disk of the cell's area.
        const double R = h / std::sqrt(kPi);
        return 2 * kPi
            * integrate_tanh_sinh([&](double da, double) { return s(da) * da; }, 0.0, R, 1e-10).value / (h * h);
    }
    const double x0 = (i - 0.5) * h, y0 = (j - 0.5) * h;
    return integrate_gl(
               [&](double x) { return integrate_gl([&](double y) { return s(std::hypot(x, y)); }, y0, y0 + h, 2, 8); },
               x0, x0 + h, 2, 8)
        / (h * h);
}

// Discrete transform of the sampled sigma on a periodic P^d lattice.
struct SigmaSpectrum {
    int d = 1;
    int P = 0;
    double h = 0.0;
    std::vector<double> hat;  // h^d sum_j sigma_j e^{-i k x_j}, real by symmetry
    double far_tv = 0.0;  // total variation of sigma beyond a quarter period
};

SigmaSpectrum sigma_spectrum(const LevyModel& model, int P, double h)
{
    SigmaSpectrum sp;
    sp.d = model.dim();
    sp.P = P;
    sp.h = h;
    const int d = sp.d;
    const std::size_t total = d == 1 ? P : static_cast<std::size_t>(P) * P;
    cvec a(total);
    const double hd = std::pow(h, d);
    const double core = 0.25 * P * h;
    const double support = model.sigma_support();
    double signed_mass = 0.0;
    if (model.kind() != ModelKind::stable) {
        // Values repeat under x -> -x; evaluate each radius once.
        std::unordered_map<long, double> memo;
        for (std::size_t q = 0; q < total; ++q) {
            const long i = signed_index(d == 1 ? static_cast<long>(q) : static_cast<long>(q / P), P);
            const long j = d == 1 ? 0 : signed_index(static_cast<long>(q % P), P);
            const double r = std::hypot(i * h, j * h);
            if (r - 2 * h > support)
                continue;
            double v;
            if (averaged_cell(d, i, j)) {
                v = sigma_cell(model, i, j, h);
            } else {
                const long key = i * i + j * j;
                auto it = memo.find(key);
                if (it == memo.end())
                    it = memo.emplace(key, model.sigma_radial(r)).first;
                v = it->second;
            }
            a[q] = v;
            signed_mass += v * hd;
        }
        // Mass outside the periodic cell, spread evenly; the lattice then
        // carries exactly the signed mass of sigma.
        const double shift = (model.sigma_mass() - signed_mass) / (hd * static_cast<double>(total));
        for (auto& v : a)
            v += shift;
        const double area = sphere_area(d);
        if (core < support)
            sp.far_tv = integrate_to_infinity(
                            [&](double r, double) { return area * std::fabs(model.sigma_radial(r)) * std::pow(r, d - 1); },
                            core, 1e-8)
                            .value;
    }
    fft_nd(a, P, d, false);
    sp.hat.resize(total);
    for (std::size_t q = 0; q < total; ++q)
        sp.hat[q] = a[q].real() * hd;
    return sp;
}

// sum_{n=1}^{n_max} (-t s)^n / n!, or e^{-ts} - 1 when n_max < 0.
double series_factor(double t, double s, int n_max)
{
    if (n_max < 0)
        return std::expm1(-t * s);
    double term = 1.0, sum = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        term *= -t * s / n;
        sum += term;
    }
    return sum;
}

// Lattice values of sum_n (-t)^n / n! p~ * sigma^{*n} at the points
// (q + offset) h, q signed.
std::vector<double> series_part(const SigmaSpectrum& sp, double t, double alpha, int n_max, double offset)
{
    const int P = sp.P, d = sp.d;
    const std::size_t total = sp.hat.size();
    cvec a(total);
    const double dk = 2 * kPi / (P * sp.h);
    for (std::size_t q = 0; q < total; ++q) {
        const long i = signed_index(d == 1 ? static_cast<long>(q) : static_cast<long>(q / P), P);
        const long j = d == 1 ? 0 : signed_index(static_cast<long>(q % P), P);
        const double k1 = i * dk, k2 = j * dk;
        const double k = std::hypot(k1, k2);
        const double mag = std::exp(-t * std::pow(k, alpha)) * series_factor(t, sp.hat[q], n_max);
        const double phase = offset * sp.h * (k1 + (d == 2 ? k2 : 0.0));
        a[q] = std::polar(mag, phase);
    }
    fft_nd(a, P, d, true);
    std::vector<double> out(total);
    const double hd = std::pow(sp.h, d);
    for (std::size_t q = 0; q < total; ++q)
        out[q] = a[q].real() / hd;
    return out;
}

int default_n_max(int d, double alpha)
{
    return std::max(8, static_cast<int>(std::ceil(d / alpha)) + 4);
}

double series_tail(double x, int n_max)
{
    // sum_{n > n_max} x^n / n!
    double term = 1.0;
    for (int n = 1; n <= n_max; ++n)
        term *= x / n;
    double sum = 0.0;
    for (int n = n_max + 1; n < n_max + 400; ++n) {
        term *= x / n;
        sum += term;
        if (term < 1e-18 * sum)
            break;
    }
    return sum;
}

}  // namespace

GridDensity sample_sigma(const LevyModel& model, int n, double h)
{
    if (n % 2 == 0)
        throw std::invalid_argument("sample_sigma: needs an odd node count");
    GridDensity g = make_grid(model.dim(), n, h);
    const long c = (n - 1) / 2;
    if (model.kind() == ModelKind::stable)
        return g;
    if (g.d == 1) {
        for (int i = 0; i < n; ++i)
            g.at(i) = sigma_cell(model, i - c, 0, h);
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                g.at(i, j) = sigma_cell(model, i - c, j - c, h);
    }
    return g;
}

GridDensity convolve(const GridDensity& a, const GridDensity& b)
{
    if (a.d != b.d || a.n != b.n || a.h != b.h)
        throw std::invalid_argument("convolve: grids differ");
    const int d = a.d, n = a.n;
    const int P = next_pow2(2L * n);
    const std::size_t total = d == 1 ? P : static_cast<std::size_t>(P) * P;
    cvec fa(total), fb(total);
    auto load = [&](const GridDensity& g, cvec& f) {
        if (d == 1) {
            for (int i = 0; i < n; ++i)
                f[i] = g.at(i);
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    f[static_cast<std::size_t>(i) * P + j] = g.at(i, j);
        }
    };
    load(a, fa);
    load(b, fb);
    fft_nd(fa, P, d, false);
    fft_nd(fb, P, d, false);
    for (std::size_t q = 0; q < total; ++q)
        fa[q] *= fb[q];
    fft_nd(fa, P, d, true);
    // Full result index i + j corresponds to coordinate x_i + x_j; the
    // output node x_k sits at index k + (n - 1) / 2 only for odd n.
    if (n % 2 == 0)
        throw std::invalid_argument("convolve: needs an odd node count");
    const int shift = (n - 1) / 2;
    GridDensity out = make_grid(d, n, a.h, a.t);
    const double hd = std::pow(a.h, d);
    if (d == 1) {
        for (int k = 0; k < n; ++k)
            out.at(k) = fa[k + shift].real() * hd;
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out.at(i, j) = fa[static_cast<std::size_t>(i + shift) * P + j + shift].real() * hd;
    }
    // Aliasing: the full linear result must be negligible off the grid.
    double edge = 0.0;
    if (d == 1) {
        edge = std::max(std::fabs(out.at(0)), std::fabs(out.at(n - 1)));
    } else {
        for (int i = 0; i < n; ++i)
            edge = std::max({edge, std::fabs(out.at(i, 0)), std::fabs(out.at(i, n - 1)), std::fabs(out.at(0, i)),
                             std::fabs(out.at(n - 1, i))});
    }
    if (edge > 1e-6 * out.peak())
        throw NumericalError("convolve: aliasing, boundary value " + std::to_string(edge) + " against peak "
                             + std::to_string(out.peak()));
    return out;
}

GridDensity convolve_power(const GridDensity& sigma, int n)
{
    if (n < 1)
        throw std::invalid_argument("convolve_power: n must be at least 1");
    GridDensity out = sigma;
    for (int k = 1; k < n; ++k)
        out = convolve(out, sigma);
    return out;
}

double sigma_extent(const LevyModel& model, double frac)
{
    if (model.kind() == ModelKind::stable)
        return 0.0;
    const double support = model.sigma_support();
    if (std::isfinite(support))
        return support;
    const int d = model.dim();
    const double tv = sigma_stats(model).M;
    auto tail = [&](double R) {
        return integrate_to_infinity(
                   [&](double r, double) { return sphere_area(d) * std::fabs(model.sigma_radial(r)) * std::pow(r, d - 1); },
                   R, 1e-8)
            .value;
    };
    const double cap = 20.0 * std::max(1.0, model.kind() == ModelKind::truncated ? model.cutoff() : 1.0);
    double R = 1.0;
    while (R < cap && tail(R) > frac * tv)
        R *= 1.25;
    return std::min(R, cap);
}

nlohmann::json SeriesResult::diagnostics() const
{
    return {{"n_max", n_max},
            {"tail_bound", tail_bound},
            {"truncation_bound", truncation_bound},
            {"sup_stable", sup_stable},
            {"sigma_grid_mass", sigma_grid_mass},
            {"h", density.h},
            {"L", density.extent()},
            {"t", density.t}};
}

SeriesResult density_series(double t, const LevyModel& model, const SeriesOptions& opt)
{
    if (!(t > 0.0))
        throw std::domain_error("density_series: t must be positive");
    const int d = model.dim();
    if (d > 2)
        throw std::invalid_argument("density_series: grid work is limited to d <= 2");
    const double alpha = model.alpha();
    const int n = opt.nodes > 0 ? opt.nodes : (d == 1 ? 2049 : 257);
    const double ext = opt.extent > 0.0 ? opt.extent : 6.0 * std::pow(t, 1.0 / alpha) + sigma_extent(model);
    const double h = 2.0 * ext / (n - 1);
    const int P = next_pow2(static_cast<long>(std::max(2, opt.pad)) * n);
    const double offset = n % 2 == 1 ? 0.0 : 0.5;

    SeriesResult res;
    res.n_max = opt.n_max > 0 ? opt.n_max : default_n_max(d, alpha);
    const double m = model.sigma_mass();
    const double M = model.kind() == ModelKind::stable ? 0.0 : sigma_stats(model).M;
    res.sup_stable = stable_density_radial(t, 0.0, alpha, d);
    res.tail_bound = std::exp(t * m) * res.sup_stable * series_tail(t * M, res.n_max);
    if (res.tail_bound > opt.tol)
        throw NumericalError("density_series: requested tolerance " + std::to_string(opt.tol)
                             + " unreachable at n_max = " + std::to_string(res.n_max) + " (tail bound "
                             + std::to_string(res.tail_bound) + ")");

    res.density = make_grid(d, n, h, t);
    GridDensity& g = res.density;
    std::vector<double> S;
    if (model.kind() != ModelKind::stable) {
        const SigmaSpectrum sp = sigma_spectrum(model, P, h);
        res.sigma_grid_mass = sp.hat[0];
        // Moving far mass changes each series term by at most twice its variation.
        res.truncation_bound = 2.0 * std::exp(t * (m + M)) * res.sup_stable * std::expm1(t * sp.far_tv);
        S = series_part(sp, t, alpha, res.n_max, offset);
    }
    const double scale = std::exp(t * m);
    std::unordered_map<long, double> memo;
    auto stable_at = [&](long twice_i, long twice_j) {
        // Doubled coordinates keep the key integral for even n.
        const long key = twice_i * twice_i + twice_j * twice_j;
        auto it = memo.find(key);
        if (it == memo.end())
            it = memo.emplace(key, stable_density_radial(t, 0.5 * h * std::sqrt(static_cast<double>(key)), alpha, d)).first;
        return it->second;
    };
    auto lattice = [&](int i) { return static_cast<long>(std::lround(i - 0.5 * (n - 1) - offset)); };
    auto wrap = [&](long q) { return static_cast<std::size_t>(q < 0 ? q + P : q); };
    // The series part is periodic with period T; the stable term gets its
    // periodic images so both describe the same periodized density.
    const double T = P * h;
    const double far = t * stable_constant(-alpha, d);
    auto images = [&](double x1, double x2) {
        if (S.empty())
            return 0.0;
        double sum = 0.0;
        if (d == 1) {
            constexpr int K = 8;
            for (int k = 1; k <= K; ++k)
                sum += stable_density_radial(t, std::fabs(x1 + k * T), alpha, 1)
                    + stable_density_radial(t, std::fabs(x1 - k * T), alpha, 1);
            return sum + 2.0 * far * std::pow((K + 0.5) * T, -alpha) / (alpha * T);
        }
        constexpr int K = 2;
        for (int a = -K; a <= K; ++a)
            for (int b = -K; b <= K; ++b)
                if (a != 0 || b != 0)
                    sum += far * std::pow(std::hypot(x1 + a * T, x2 + b * T), -2.0 - alpha);
        const double R = (2 * K + 1) * T / std::sqrt(kPi);
        return sum + 2 * kPi * far * std::pow(R, -alpha) / (alpha * T * T);
    };
    if (d == 1) {
        for (int i = 0; i < n; ++i) {
            const long twice = 2 * i - (n - 1);
            const double s = S.empty() ? 0.0 : S[wrap(lattice(i))];
            g.at(i) = scale * (stable_at(twice, 0) + images(g.coord(i), 0.0) + s);
        }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double s = S.empty() ? 0.0 : S[wrap(lattice(i)) * P + wrap(lattice(j))];
                g.at(i, j) = scale * (stable_at(2 * i - (n - 1), 2 * j - (n - 1)) + images(g.coord(i), g.coord(j)) + s);
            }
    }
    return res;
}

nlohmann::json DominationReport::to_json() const
{
    return {{"t", times}, {"worst_margin", worst_margin}, {"worst_x", worst_x}, {"tolerance", tolerance},
            {"max_ratio", max_ratio}, {"holds", holds}};
}

DominationReport domination_check(const std::vector<double>& times, const LevyModel& model, int nodes, double extent)
{
    if (!sigma_stats(model).nonneg)
        throw std::invalid_argument("domination_check: requires sigma >= 0");
    DominationReport rep;
    const double m = model.sigma_mass();
    for (double t : times) {
        SeriesOptions opt;
        opt.nodes = nodes;
        opt.extent = extent;
        const SeriesResult s = density_series(t, model, opt);
        const double tol = s.tolerance() + 1e-12 * s.sup_stable;
        double worst = std::numeric_limits<double>::infinity(), wx = 0.0, ratio = 0.0;
        for (std::size_t k = 0; k < s.density.size(); ++k) {
            const double pt = stable_density_radial(t, s.density.radius(k), model.alpha(), model.dim());
            const double margin = std::exp(m * t) * pt - s.density.values[k];
            if (margin < worst) {
                worst = margin;
                wx = s.density.radius(k);
            }
            ratio = std::max(ratio, s.density.values[k] / pt);
        }
        rep.times.push_back(t);
        rep.worst_margin.push_back(worst);
        rep.worst_x.push_back(wx);
        rep.tolerance.push_back(tol);
        rep.max_ratio.push_back(ratio);
        rep.holds = rep.holds && worst >= -tol;
    }
    return rep;
}

nlohmann::json PotentialReport::to_json() const
{
    return {{"radii", radii}, {"u_y", u_y}, {"u_stable", u_stable}, {"ratio", ratio},
            {"band_min", band_min}, {"band_max", band_max}, {"remainder", remainder}};
}

PotentialReport potential_compare(const LevyModel& model, const std::vector<double>& radii, const PotentialOptions& opt)
{
    const int d = model.dim();
    const double alpha = model.alpha();
    if (d != 1)
        throw std::invalid_argument("potential_compare: implemented for d = 1");
    if (!(d > alpha))
        throw std::domain_error("potential_compare: requires d > alpha");
    if (radii.empty())
        throw std::invalid_argument("potential_compare: empty radius list");
    const double m = model.sigma_mass();
    const int n_max = default_n_max(d, alpha);

    // k-nodes: dyadic panels up to 1, then unit panels until sigma's
    // transform is negligible.
    const double M = model.kind() == ModelKind::stable ? 0.0 : sigma_stats(model).M;
    std::vector<double> edges{0.0, 1e-7};
    while (edges.back() < 1.0)
        edges.push_back(std::min(1.0, 2.0 * edges.back()));
    double kmax = 1.0;
    while (kmax < 1e4 && std::fabs(sigma_fourier(model, kmax)) > 1e-13 * std::max(M, 1e-300))
        kmax *= 1.25;
    for (double k = 1.0; k < kmax;)
        edges.push_back(k = std::min(kmax, k + 0.5));
    const auto& gl = gauss_legendre(16);
    std::vector<double> kn, kw, shat;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double k = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
            kn.push_back(k);
            kw.push_back(0.5 * (b - a) * gl.weights[q] / kPi);
            shat.push_back(sigma_fourier(model, k));
        }
    }
    // (p^Y - p~)(t, x) at every radius.
    auto diff = [&](double t, std::vector<double>& out) {
        const int nm = t <= 1.0 ? n_max : -1;
        const double em = std::exp(t * m);
        std::vector<double> f(kn.size());
        for (std::size_t q = 0; q < kn.size(); ++q)
            f[q] = kw[q] * std::exp(-t * std::pow(kn[q], alpha)) * series_factor(t, shat[q], nm);
        for (std::size_t r = 0; r < radii.size(); ++r) {
            double s = 0.0;
            for (std::size_t q = 0; q < kn.size(); ++q)
                s += f[q] * std::cos(kn[q] * radii[r]);
            out[r] = std::expm1(t * m) * stable_density_radial(t, radii[r], alpha, d) + em * s;
        }
    };
    std::vector<double> acc(radii.size(), 0.0), tmp(radii.size());
    auto integrate_log = [&](double t0, double t1) {
        const int panels = std::max(1, static_cast<int>(std::ceil(opt.panels_per_decade * std::log10(t1 / t0))));
        const auto& g = gauss_legendre(opt.order);
        const double l0 = std::log(t0), step = (std::log(t1) - l0) / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                const double u = l0 + step * (p + 0.5 * (1.0 + g.nodes[q]));
                const double t = std::exp(u);
                diff(t, tmp);
                for (std::size_t r = 0; r < radii.size(); ++r)
                    acc[r] += 0.5 * step * g.weights[q] * t * tmp[r];
            }
    };
    integrate_log(opt.t_min, 1.0);
    integrate_log(1.0, opt.t_max);

    PotentialReport rep;
    rep.radii = radii;
    diff(opt.t_max, tmp);
    double edge = 0.0;
    for (double v : tmp)
        edge = std::max(edge, std::fabs(v));
    rep.remainder = edge * opt.t_max / (static_cast<double>(d) / alpha - 1.0);
    diff(opt.t_min, tmp);
    for (double v : tmp)
        rep.remainder += std::fabs(v) * opt.t_min;
    const double umin = potential_kernel_radial(*std::max_element(radii.begin(), radii.end()), alpha, d);
    if (rep.remainder > opt.tol * umin)
        throw NumericalError("potential_compare: time-integral remainder " + std::to_string(rep.remainder)
                             + " above tolerance");
    rep.band_min = std::numeric_limits<double>::infinity();
    rep.band_max = -rep.band_min;
    for (std::size_t r = 0; r < radii.size(); ++r) {
        const double us = potential_kernel_radial(radii[r], alpha, d);
        rep.u_stable.push_back(us);
        rep.u_y.push_back(us + acc[r]);
        rep.ratio.push_back((us + acc[r]) / us);
        rep.band_min = std::min(rep.band_min, rep.ratio.back());
        rep.band_max = std::max(rep.band_max, rep.ratio.back());
    }
    return rep;
}

SeriesGap one_dim_series_gap(double t0, const LevyModel& model, int points, double x_max, int panels)
{
    if (model.dim() != 1 || model.alpha() < 1.0)
        throw std::invalid_argument("one_dim_series_gap: requires d = 1 and alpha >= 1");
    if (!(t0 > 0.0 && t0 <= 1.0))
        throw std::domain_error("one_dim_series_gap: t0 must lie in (0, 1]");
    if (points < 2 || panels < 1)
        throw std::invalid_argument("one_dim_series_gap: need points >= 2 and panels >= 1");
    const double alpha = model.alpha(), m = model.sigma_mass();
    const int n_max = default_n_max(1, alpha);
    const int refine = 8;
    const double h = x_max / ((points - 1) * refine);
    const double width = 2.0 * (sigma_extent(model) + 6.0 * std::pow(t0, 1.0 / alpha) + x_max);
    const int P = next_pow2(static_cast<long>(std::ceil(width / h)));
    SigmaSpectrum sp;
    const bool trivial = model.kind() == ModelKind::stable;
    if (!trivial)
        sp = sigma_spectrum(model, P, h);

    std::vector<double> gap(points, 0.0), f(points);
    auto integrand = [&](double t) {
        std::vector<double> S;
        if (!trivial)
            S = series_part(sp, t, alpha, n_max, 0.0);
        const double em = std::exp(-m * t);
        for (int i = 0; i < points; ++i) {
            const double x = i * x_max / (points - 1);
            const double s = trivial ? 0.0 : S[static_cast<std::size_t>(i) * refine];
            f[i] = std::fabs(-std::expm1(-m * t) * stable_density_radial(t, x, alpha, 1) - em * s);
        }
    };
    const auto& g = gauss_legendre(8);
    for (int p = 0; p < panels; ++p) {
        const double b = t0 * std::ldexp(1.0, -p), a = 0.5 * b;
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            integrand(0.5 * (a + b) + 0.5 * (b - a) * g.nodes[q]);
            for (int i = 0; i < points; ++i)
                gap[i] += 0.5 * (b - a) * g.weights[q] * f[i];
        }
    }
    // Below the last panel the integrand behaves like t^{1 - 1/alpha}.
    const double tl = t0 * std::ldexp(1.0, -panels);
    integrand(tl);
    for (int i = 0; i < points; ++i)
        gap[i] += f[i] * tl / (2.0 - 1.0 / alpha);

    SeriesGap out;
    out.t0 = t0;
    for (int i = 0; i < points; ++i)
        if (gap[i] > out.gap) {
            out.gap = gap[i];
            out.worst_x = i * x_max / (points - 1);
        }
    out.ratio = out.gap / std::pow(t0, 2.0 - 1.0 / alpha);
    return out;
}

GridDensity smooth_gaussian(const GridDensity& g, double bw)
{
    if (g.d != 1)
        throw std::invalid_argument("smooth_gaussian: 1D grids only");
    if (!(bw > 0.0))
        throw std::invalid_argument("smooth_gaussian: bandwidth must be positive");
    GridDensity out = g;
    const int reach = static_cast<int>(std::ceil(8.0 * bw / g.h));
    std::vector<double> w(reach + 1);
    for (int k = 0; k <= reach; ++k)
        w[k] = g.h * std::exp(-0.5 * (k * g.h / bw) * (k * g.h / bw)) / (bw * std::sqrt(2 * kPi));
    for (int i = 0; i < g.n; ++i) {
        double s = 0.0;
        for (int k = -reach; k <= reach; ++k) {
            const int j = i + k;
            if (j >= 0 && j < g.n)
                s += w[std::abs(k)] * g.at(j);
        }
        out.at(i) = s;
    }
    return out;
}

void write_grid_binary(const GridDensity& g, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path);
    const nlohmann::json header = {{"h", g.h}, {"L", g.extent()}, {"d", g.d}, {"t", g.t}, {"n", g.n}};
    os << header.dump() << '\n';
    os.write(reinterpret_cast<const char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
    if (!os)
        throw std::runtime_error("write failed: " + path);
}

GridDensity read_grid_binary(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(is, line);
    const auto header = nlohmann::json::parse(line);
    GridDensity g = make_grid(header.at("d").get<int>(), header.at("n").get<int>(), header.at("h").get<double>(),
                              header.at("t").get<double>());
    is.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
    if (!is)
        throw std::runtime_error("truncated grid file: " + path);
    return g;
}

void write_grid_csv(const GridDensity& g, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "x,value\n";
    const int mid = (g.n - 1) / 2;
    for (int i = 0; i < g.n; ++i)
        os << g.coord(i) << ',' << (g.d == 1 ? g.at(i) : g.at(i, mid)) << '\n';
}

}  // namespace levygreen
