#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levygreen/estimators.hpp"
#include "levygreen/harness.hpp"
#include "levygreen/parallel.hpp"
#include "levygreen/perturbation.hpp"
#include "levygreen/sampling.hpp"
#include "levygreen/stable.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace levygreen;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Status { kPass = 0, kUsage = 1, kInconclusive = 2, kViolated = 3 };

Status worst(Status a, Status b)
{
    auto rank = [](Status s) { return s == kViolated ? 3 : s == kInconclusive ? 2 : s == kUsage ? 1 : 0; };
    return rank(a) >= rank(b) ? a : b;
}

Status status_of(Verdict v)
{
    return v == Verdict::bounded ? kPass : v == Verdict::violated ? kViolated : kInconclusive;
}

const char* status_name(Status s)
{
    return s == kPass ? "pass" : s == kViolated ? "violated" : s == kInconclusive ? "inconclusive" : "error";
}

// Configuration errors carry the path of the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::ios_base::failure("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

Point parse_point(const std::string& s)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        v.push_back(std::stod(tok));
    Point p(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        p(i) = v[i];
    return p;
}

Point point_at(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty())
        throw ConfigError(path + ": expected a non-empty array of numbers");
    Point p(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError(path + "[" + std::to_string(i) + "]: not a number");
        p(i) = j[i].get<double>();
    }
    return p;
}

std::vector<Point> points_at(const json& cfg, const std::string& key, int d)
{
    if (!cfg.contains(key))
        throw ConfigError(key + ": missing");
    const json& a = cfg[key];
    if (!a.is_array())
        throw ConfigError(key + ": expected an array of points");
    std::vector<Point> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string path = key + "[" + std::to_string(i) + "]";
        out.push_back(point_at(a[i], path));
        if (out.back().size() != d)
            throw ConfigError(path + ": dimension differs from the domain");
    }
    return out;
}

json pj(const Point& p)
{
    json a = json::array();
    for (int i = 0; i < p.size(); ++i)
        a.push_back(p(i));
    return a;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string pstr(const Point& p)
{
    std::string s;
    for (int i = 0; i < p.size(); ++i)
        s += (i ? ";" : "") + fmt(p(i));
    return s;
}

template <class T>
T num(const json& cfg, const std::string& key, T fallback)
{
    if (!cfg.contains(key))
        return fallback;
    if (!cfg[key].is_number())
        throw ConfigError(key + ": not a number");
    return cfg[key].get<T>();
}

std::vector<double> numbers(const json& cfg, const std::string& key, std::vector<double> fallback)
{
    if (!cfg.contains(key))
        return fallback;
    if (!cfg[key].is_array())
        throw ConfigError(key + ": expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < cfg[key].size(); ++i) {
        if (!cfg[key][i].is_number())
            throw ConfigError(key + "[" + std::to_string(i) + "]: not a number");
        v.push_back(cfg[key][i].get<double>());
    }
    return v;
}

Domain domain_of(const json& cfg)
{
    if (!cfg.contains("domain"))
        throw ConfigError("domain: missing");
    return domain_from_json(cfg["domain"]);
}

LevyModel model_of(const json& cfg, const std::string& key = "model")
{
    if (!cfg.contains(key))
        throw ConfigError(key + ": missing");
    try {
        return model_from_json(cfg[key]);
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        if (key != "model" && msg.rfind("model", 0) == 0)
            msg = key + msg.substr(5);
        throw ConfigError(msg);
    }
}

RunConfig run_of(const json& cfg, int workers)
{
    RunConfig r;
    const json run = cfg.value("run", json::object());
    r.n = num<long>(run, "n", r.n);
    r.seed = num<std::uint64_t>(run, "seed", r.seed);
    r.block = num<long>(run, "block", r.block);
    if (r.n < 1)
        throw ConfigError("run.n: must be positive");
    if (r.block < 1)
        throw ConfigError("run.block: must be positive");
    r.workers = workers;
    return r;
}

// Centre and radius when the domain is a ball or an interval.
std::optional<std::pair<Point, double>> ball_of(const Domain& domain)
{
    if (const auto* b = std::get_if<Ball>(&domain.shape()))
        return std::make_pair(b->center, b->radius);
    if (const auto* iv = std::get_if<Interval>(&domain.shape()))
        return std::make_pair(make_point({0.5 * (iv->a + iv->b)}), 0.5 * (iv->b - iv->a));
    return std::nullopt;
}

bool green_closed_form(const Domain& domain, double alpha)
{
    const int d = domain.dim();
    return ball_of(domain) && (d > alpha || (d == 1 && alpha > 1.0));
}

// Writes the run's files and the manifest.
class Outputs {
public:
    Outputs(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec)
            throw std::ios_base::failure("cannot create " + dir_.string());
    }
    const std::string& hash() const { return hash_; }

    void write(const std::string& name, const std::string& content)
    {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out)
            throw std::ios_base::failure("cannot write " + (dir_ / name).string());
        out << content;
        files_.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void manifest(const std::string& command, const json& config, std::uint64_t seed, int workers,
                  const std::string& started, Status status)
    {
        json m = {{"command", command},     {"config_hash", hash_},        {"seed", seed},
                  {"workers", workers},     {"tool_version", kVersion},    {"started", started},
                  {"finished", utc_now()},  {"outputs", files_},           {"status", status_name(status)},
                  {"config", config}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        if (!out)
            throw std::ios_base::failure("cannot write manifest");
        out << m.dump(2) << "\n";
    }

private:
    fs::path dir_;
    std::string hash_;
    std::vector<std::string> files_;
};

std::string estimate_header() { return "config_hash,label,x,y,value,se,n,flagged,exact\n"; }

std::string estimate_row(const std::string& hash, const std::string& label, const Point& x, const Point* y,
                         const Estimate& e, std::optional<double> exact)
{
    return hash + "," + label + "," + pstr(x) + "," + (y ? pstr(*y) : "") + "," + fmt(e.value) + "," + fmt(e.se) +
           "," + std::to_string(e.n) + "," + (e.flagged ? "1" : "0") + "," + (exact ? fmt(*exact) : "") + "\n";
}

// ---------------------------------------------------------------------------
// Defaults

json default_domain() { return {{"shape", "ball"}, {"center", {0.0, 0.0}}, {"radius", 1.0}}; }

json defaults_for(const std::string& cmd)
{
    json base = {{"domain", default_domain()},
                 {"model", {{"kind", "stable"}, {"d", 2}, {"alpha", 1.5}}},
                 {"run", {{"n", 10000}, {"seed", 1}, {"block", 250}}}};
    if (cmd == "density") {
        base["model"] = {{"kind", "relativistic"}, {"d", 1}, {"alpha", 1.2}, {"m", 1.0}};
        base["t"] = 0.5;
    } else if (cmd == "simulate") {
        base["x"] = {0.0, 0.0};
        base["paths"] = 10;
        base["horizon"] = 1.0;
    } else if (cmd == "exit") {
        base["x"] = json::array({{0.0, 0.0}, {0.5, 0.0}});
    } else if (cmd == "green") {
        base["pairs"] = json::array({{{"x", {0.0, 0.0}}, {"y", {0.3, 0.0}}}});
    } else if (cmd == "poisson") {
        base["x"] = json::array({{0.0, 0.0}});
        base["z"] = json::array({{1.2, 0.0}, {0.0, -2.0}});
    } else if (cmd == "compare") {
        base["experiment"] = "green";
        base["model"] = {{"kind", "relativistic"}, {"d", 2}, {"alpha", 1.2}, {"m", 1.0}};
        base["run"]["n"] = 4000;
    }
    return base;
}

// ---------------------------------------------------------------------------
// Experiments shared by `compare` and `suite`

NestedOptions nested_of(const json& cfg)
{
    NestedOptions o;
    const json q = cfg.value("quadrature", json::object());
    o.outer.angular_panels = num<int>(q, "angular_panels", o.outer.angular_panels);
    o.inner.angular_panels = o.outer.angular_panels;
    o.outer.rel_tol = num<double>(q, "rel_tol", o.outer.rel_tol);
    o.inner.rel_tol = o.outer.rel_tol;
    o.table_radial = num<int>(q, "table_radial", o.table_radial);
    o.table_angular = num<int>(q, "table_angular", o.table_angular);
    return o;
}

CompareConfig compare_of(const json& cfg, int workers)
{
    CompareConfig c;
    c.run = run_of(cfg, workers);
    const json g = cfg.value("grid", json::object());
    c.grid.nx = num<int>(g, "nx", c.grid.nx);
    c.grid.ny = num<int>(g, "ny", c.grid.ny);
    c.grid.margin = num<double>(g, "margin", c.grid.margin);
    c.grid.min_sep = num<double>(g, "min_sep", c.grid.min_sep);
    c.h = num<double>(cfg, "h", 0.0);
    c.refine = cfg.value("refine", false);
    const json t = cfg.value("tolerances", json::object());
    c.rule.level = num<double>(t, "level", c.rule.level);
    c.rule.max_expansion = num<double>(t, "max_expansion", c.rule.max_expansion);
    c.rule.bootstrap = num<int>(t, "bootstrap", c.rule.bootstrap);
    if (c.grid.nx < 1 || c.grid.ny < 1)
        throw ConfigError("grid.nx: grid sizes must be positive");
    return c;
}

std::vector<Point> x_points(const json& cfg, const Domain& domain, const CompareConfig& c)
{
    if (cfg.contains("x"))
        return points_at(cfg, "x", domain.dim());
    return halton_points(domain, c.grid.nx, c.grid.margin);
}

struct Outcome {
    Status status = kPass;
    std::string summary;
};

Outcome report_outcome(const std::string& name, const RatioReport& r, Outputs& out)
{
    out.write_json(name + ".json", r.to_json());
    out.write(name + ".csv", r.to_csv(out.hash()));
    std::ostringstream s;
    s << name << ": " << to_string(r.verdict) << ", band " << fmt(r.band) << " [min " << fmt(r.min_ratio.value)
      << ", max " << fmt(r.max_ratio.value) << "], expansion " << fmt(r.expansion) << " (" << r.reason << ")";
    return {status_of(r.verdict), s.str()};
}

Outcome run_experiment(const std::string& name, const json& cfg, int workers, Outputs& out)
{
    const std::string exp = cfg.value("experiment", std::string());
    if (exp == "green") {
        const Domain domain = domain_of(cfg);
        return report_outcome(name, compare_green(domain, model_of(cfg), compare_of(cfg, workers)), out);
    }
    if (exp == "moments") {
        const Domain domain = domain_of(cfg);
        const CompareConfig c = compare_of(cfg, workers);
        return report_outcome(name, compare_moments(domain, model_of(cfg), x_points(cfg, domain, c), c), out);
    }
    if (exp == "poisson") {
        const Domain domain = domain_of(cfg);
        const CompareConfig c = compare_of(cfg, workers);
        const PoissonComparison pc = compare_poisson(domain, model_of(cfg), x_points(cfg, domain, c),
                                                     points_at(cfg, "z", domain.dim()),
                                                     num<double>(cfg, "r_branch", 0.5 * domain.diam()), c);
        Outcome a = report_outcome(name, pc.kernel, out);
        if (!pc.far.points.empty()) {
            const Outcome b = report_outcome(name + "_far", pc.far, out);
            a.status = worst(a.status, b.status);
            a.summary += "\n" + b.summary;
        }
        return a;
    }
    if (exp == "bhp") {
        const Domain domain = domain_of(cfg);
        const CompareConfig c = compare_of(cfg, workers);
        const Point Z = point_at(cfg.value("Z", json()), "Z");
        const double rho = num<double>(cfg, "rho", 0.5);
        const double beta = num<double>(cfg, "beta", 0.5);
        // Nonnegative data vanishing on B(Z, rho).
        const BoundaryData u = [Z, rho](const Point& z) { return (z - Z).norm() >= rho ? 1.0 : 0.0; };
        const BoundaryData v = [Z, rho](const Point& z) { return std::min(1.0, std::max(0.0, (z - Z).norm() / rho - 1.0)); };
        std::vector<Point> xs;
        for (const Point& p : halton_points(domain, 64 * c.grid.nx, c.grid.margin))
            if ((p - Z).norm() < rho * beta && static_cast<int>(xs.size()) < c.grid.nx)
                xs.push_back(p);
        if (xs.size() < 2)
            throw ConfigError("beta: D and B(Z, rho beta) share fewer than two grid points");
        RatioReport r = bhp_check(domain, model_of(cfg), u, v, xs, c);
        r.config["Z"] = pj(Z);
        r.config["rho"] = rho;
        r.config["beta"] = beta;
        return report_outcome(name, r, out);
    }
    if (exp == "calka") {
        const Domain domain = domain_of(cfg);
        const Point y = cfg.contains("y") ? point_at(cfg["y"], "y") : zero_point(domain.dim());
        const auto ladder = halving_ladder(num<double>(cfg, "s0", domain.diam() / 64), num<int>(cfg, "steps", 6));
        const double tol = num<double>(cfg, "tol", 0.1);
        const json cases = cfg.value("cases", json::array({{0.5, 0.5, -1.5}, {0.5, 0.5, -1.0}, {0.5, 0.5, -0.5},
                                                           {0.5, 0.5, -0.7}}));
        json rows = json::array();
        Outcome o;
        std::ostringstream s;
        s << name << ":";
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const Point abr = point_at(cases[i], "cases[" + std::to_string(i) + "]");
            if (abr.size() != 3)
                throw ConfigError("cases[" + std::to_string(i) + "]: expected [a, b, rho]");
            const CalkaCase c = calka_bound_check(domain, abr(0), abr(1), abr(2), y, ladder, tol, nested_of(cfg));
            rows.push_back(c.to_json());
            if (!c.bound_holds)
                o.status = worst(o.status, kInconclusive);
            s << " " << c.name << " slope " << fmt(c.slope) << " vs " << fmt(c.expected)
              << (c.pass ? " (match)" : " (mismatch)") << (c.bound_holds ? ", bound holds;" : ", bound grows;");
        }
        out.write_json(name + ".json", {{"cases", rows}, {"tol", tol}});
        std::string csv = "config_hash,case,a,b,rho,separation,integral\n";
        for (const auto& r : rows)
            for (std::size_t k = 0; k < r["separations"].size(); ++k)
                csv += out.hash() + "," + r["case"].get<std::string>() + "," + fmt(r["a"]) + "," + fmt(r["b"]) + "," +
                       fmt(r["rho"]) + "," + fmt(r["separations"][k]) + "," + fmt(r["integrals"][k]) + "\n";
        out.write(name + ".csv", csv);
        o.summary = s.str();
        return o;
    }
    if (exp == "contraction") {
        const LevyModel model = model_of(cfg);
        const auto diams = numbers(cfg, "diams", {0.4, 0.2, 0.1, 0.05});
        const auto rows = contraction_scan(model, diams, nested_of(cfg));
        out.write_json(name + ".json", {{"model", model_to_json(model)}, {"rows", to_json(rows)}});
        std::string csv = "config_hash,diam,theta,worst_x,zero_sigma\n";
        for (const auto& r : rows)
            csv += out.hash() + "," + fmt(r.diam) + "," + fmt(r.theta) + "," + pstr(r.worst_x) + "," +
                   (r.zero_sigma ? "1" : "0") + "\n";
        out.write(name + ".csv", csv);
        const double last = rows.back().theta;
        return {last < 0.5 ? kPass : kInconclusive,
                name + ": theta " + fmt(last) + " at diameter " + fmt(rows.back().diam)};
    }
    if (exp == "rtilde") {
        const Domain domain = domain_of(cfg);
        const auto ladder = halving_ladder(num<double>(cfg, "s0", 0.25), num<int>(cfg, "steps", 4));
        const PowerFit f = rtilde_ratio_fit(domain, model_of(cfg), ladder, nested_of(cfg));
        out.write_json(name + ".json", f.to_json());
        return {f.exponent > 0.0 ? kPass : kInconclusive, name + ": fitted exponent " + fmt(f.exponent)};
    }
    if (exp == "potential") {
        const LevyModel model = model_of(cfg);
        const auto radii = numbers(cfg, "radii", {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0});
        PotentialOptions base;
        const PotentialReport a = potential_compare(model, radii, base);
        PotentialOptions fine = base;
        fine.panels_per_decade *= 2;
        fine.t_min /= 10.0;
        const PotentialReport b = potential_compare(model, radii, fine);
        const double drift = std::max(std::fabs(b.band_min / a.band_min - 1.0), std::fabs(b.band_max / a.band_max - 1.0));
        const double tol = num<double>(cfg, "tol", 0.2);
        out.write_json(name + ".json", {{"base", a.to_json()}, {"refined", b.to_json()}, {"drift", drift}, {"tol", tol}});
        std::string csv = "config_hash,radius,u_y,u_stable,ratio,ratio_refined\n";
        for (std::size_t i = 0; i < radii.size(); ++i)
            csv += out.hash() + "," + fmt(radii[i]) + "," + fmt(a.u_y[i]) + "," + fmt(a.u_stable[i]) + "," +
                   fmt(a.ratio[i]) + "," + fmt(b.ratio[i]) + "\n";
        out.write(name + ".csv", csv);
        const bool ok = a.band_min > 0.0 && drift < tol;
        return {ok ? kPass : kInconclusive, name + ": band [" + fmt(a.band_min) + ", " + fmt(a.band_max) +
                                                "], refinement drift " + fmt(drift)};
    }
    if (exp == "domination") {
        const LevyModel model = model_of(cfg);
        const DominationReport r =
            domination_check(numbers(cfg, "times", {0.25, 0.5, 1.0}), model, num<int>(cfg, "nodes", 2048));
        out.write_json(name + ".json", r.to_json());
        std::string csv = "config_hash,t,worst_margin,worst_x,tolerance,max_ratio\n";
        for (std::size_t i = 0; i < r.times.size(); ++i)
            csv += out.hash() + "," + fmt(r.times[i]) + "," + fmt(r.worst_margin[i]) + "," + fmt(r.worst_x[i]) + "," +
                   fmt(r.tolerance[i]) + "," + fmt(r.max_ratio[i]) + "\n";
        out.write(name + ".csv", csv);
        return {r.holds ? kPass : kViolated, name + (r.holds ? ": holds at every node" : ": fails at some node")};
    }
    if (exp == "occupation") {
        const Domain domain = domain_of(cfg);
        const Point x = cfg.contains("x") ? point_at(cfg["x"], "x") : zero_point(domain.dim());
        const OccupationIdentity o = occupation_identity(domain, model_of(cfg), x, run_of(cfg, workers),
                                                         num<int>(cfg, "angles", 10), num<int>(cfg, "radial", 5));
        out.write_json(name + ".json", o.to_json());
        const double tol = num<double>(cfg, "tol", 0.05);
        return {o.rel_diff < tol ? kPass : kInconclusive, name + ": relative difference " + fmt(o.rel_diff)};
    }
    if (exp == "phi" || exp == "property_a" || exp == "rfala") {
        const Domain domain = domain_of(cfg);
        ScalarBand b;
        if (exp == "phi")
            b = phi_ratio_check(domain, model_of(cfg).alpha(), num<double>(cfg, "gamma", 0.5),
                                num<int>(cfg, "count", 200), run_of(cfg, workers).seed);
        else if (exp == "property_a")
            b = property_a_check(domain, model_of(cfg).alpha(), num<int>(cfg, "count", 200),
                                 run_of(cfg, workers).seed);
        else
            b = rfala_check(domain, model_of(cfg), num<int>(cfg, "count", 6), nested_of(cfg));
        out.write_json(name + ".json", b.to_json());
        const bool ok = b.min > 0.0 && std::isfinite(b.max);
        return {ok ? kPass : kInconclusive, name + ": [" + fmt(b.min) + ", " + fmt(b.max) + "] over " +
                                                std::to_string(b.count)};
    }
    throw ConfigError("experiment: unknown experiment '" + exp + "'");
}

// ---------------------------------------------------------------------------
// Suite

json suite_plan(bool quick)
{
    const json disk = default_domain();
    const json iv = {{"shape", "interval"}, {"a", -1.0}, {"b", 1.0}};
    const json rel2 = {{"kind", "relativistic"}, {"d", 2}, {"alpha", 1.2}, {"m", 1.0}};
    const json rel1 = {{"kind", "relativistic"}, {"d", 1}, {"alpha", 1.2}, {"m", 1.0}};
    const json tr2 = {{"kind", "truncated"}, {"d", 2}, {"alpha", 1.2}, {"cutoff", 1.0}};
    const json tr1 = {{"kind", "truncated"}, {"d", 1}, {"alpha", 1.2}, {"cutoff", 1.0}};
    const json bump = {{"kind", "custom"},
                       {"d", 1},
                       {"alpha", 0.8},
                       {"sigma", {{"profile", "gaussian"}, {"mass", -1.0}, {"width", 0.3}, {"rho", 1.0}}}};
    const long n = quick ? 2000 : 20000;
    const json grid = quick ? json{{"nx", 3}, {"ny", 3}} : json{{"nx", 5}, {"ny", 4}};
    json plan = json::array();
    plan.push_back({{"name", "baseline"}, {"experiment", "baseline"}, {"domain", disk},
                    {"model", {{"kind", "stable"}, {"d", 2}, {"alpha", 1.5}}},
                    {"run", {{"n", quick ? 4000 : 100000}}}});
    plan.push_back({{"name", "occupation"}, {"experiment", "occupation"}, {"domain", disk},
                    {"model", {{"kind", "stable"}, {"d", 2}, {"alpha", 1.5}}}, {"x", {0.2, 0.1}},
                    {"run", {{"n", quick ? 2000 : 20000}}}});
    plan.push_back({{"name", "domination"}, {"experiment", "domination"}, {"model", tr1},
                    {"nodes", quick ? 512 : 2048}});
    plan.push_back({{"name", "green_disk"}, {"experiment", "green"}, {"domain", disk}, {"model", rel2},
                    {"grid", grid}, {"run", {{"n", n}}}});
    plan.push_back({{"name", "green_interval"}, {"experiment", "green"}, {"domain", iv}, {"model", rel1},
                    {"grid", grid}, {"run", {{"n", n}}}});
    plan.push_back({{"name", "moments"}, {"experiment", "moments"}, {"domain", disk}, {"model", tr2},
                    {"grid", grid}, {"run", {{"n", n}}}});
    plan.push_back({{"name", "calka"}, {"experiment", "calka"}, {"domain", disk},
                    {"s0", quick ? 2.0 / 16 : 2.0 / 64}, {"steps", quick ? 4 : 6}});
    plan.push_back({{"name", "contraction"}, {"experiment", "contraction"}, {"model", tr2}, {"diams", {0.05}}});
    plan.push_back({{"name", "potential"}, {"experiment", "potential"}, {"model", bump}});
    return plan;
}

Outcome run_baseline(const std::string& name, const json& cfg, int workers, Outputs& out)
{
    const Domain domain = domain_of(cfg);
    const double alpha = model_of(cfg).alpha();
    const RunConfig run = run_of(cfg, workers);
    const auto ball = ball_of(domain);
    if (!ball || !(domain.dim() > alpha))
        throw ConfigError("domain: the baseline needs a ball with d > alpha");
    const std::vector<std::pair<Point, Point>> pairs = {
        {make_point({0.0, 0.0}), make_point({0.3, 0.0})},   {make_point({0.2, 0.1}), make_point({-0.4, 0.3})},
        {make_point({0.5, -0.2}), make_point({0.1, 0.6})},  {make_point({-0.6, -0.3}), make_point({-0.1, -0.7})},
        {make_point({0.0, 0.7}), make_point({0.6, 0.0})}};
    std::string csv = estimate_header();
    json rows = json::array();
    int within = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        RunConfig r = run;
        r.seed = run.seed + 1000 * i;
        const auto& [x, y] = pairs[i];
        const Estimate e = green_wos_stable(domain, alpha, x, y, r);
        const double exact = ball_green(x - ball->first, y - ball->first, ball->second, alpha);
        within += std::fabs(e.value - exact) < 3.0 * e.se;
        csv += estimate_row(out.hash(), "wos", x, &y, e, exact);
        json j = to_json(e);
        j["x"] = pj(x);
        j["y"] = pj(y);
        j["exact"] = exact;
        rows.push_back(j);
    }
    out.write_json(name + ".json", {{"pairs", rows}, {"within_3se", within}});
    out.write(name + ".csv", csv);
    return {kPass, name + ": " + std::to_string(within) + " of 5 pairs within 3 SE of the closed form"};
}

// ---------------------------------------------------------------------------
// Subcommands

struct Common {
    std::string config;
    std::string out = "levygreen-out";
    std::optional<std::uint64_t> seed;
    int workers = 0;
    bool quick = false;
    std::string domain_file, model_file;
    std::vector<std::string> xs, ys;
};

json resolve(const std::string& cmd, const Common& c)
{
    json cfg = defaults_for(cmd);
    if (!c.config.empty())
        cfg.merge_patch(read_json_file(c.config));
    if (!c.domain_file.empty())
        cfg["domain"] = read_json_file(c.domain_file);
    if (!c.model_file.empty())
        cfg["model"] = read_json_file(c.model_file);
    if (c.seed)
        cfg["run"]["seed"] = *c.seed;
    if (!c.xs.empty()) {
        json xs = json::array();
        for (const auto& s : c.xs)
            xs.push_back(pj(parse_point(s)));
        if (cmd == "green") {
            if (c.ys.empty())
                throw ConfigError("y: --x needs --y for green");
            json pairs = json::array();
            for (const auto& x : xs)
                for (const auto& s : c.ys)
                    pairs.push_back({{"x", x}, {"y", pj(parse_point(s))}});
            cfg["pairs"] = pairs;
        } else {
            cfg["x"] = cmd == "simulate" ? xs[0] : xs;
        }
    }
    if (cmd == "suite")
        cfg["quick"] = c.quick;
    return cfg;
}

Status cmd_density(const json& cfg, Outputs& out)
{
    const LevyModel model = model_of(cfg);
    SeriesOptions opt;
    opt.nodes = num<int>(cfg, "nodes", 0);
    opt.tol = num<double>(cfg, "tol", opt.tol);
    const double t = num<double>(cfg, "t", 0.5);
    if (!(t > 0.0))
        throw ConfigError("t: must be positive");
    const SeriesResult r = density_series(t, model, opt);
    const GridDensity& g = r.density;
    std::string csv = "config_hash,x,density\n";
    for (int i = 0; i < g.n; ++i) {
        const double v = g.d == 1 ? g.at(i) : g.at(i, g.n / 2);
        csv += out.hash() + "," + fmt(g.coord(i)) + "," + fmt(v) + "\n";
    }
    out.write("density.csv", csv);
    out.write_json("density.json", {{"t", t}, {"model", model_to_json(model)}, {"diagnostics", r.diagnostics()}});
    return kPass;
}

Status cmd_simulate(const json& cfg, int workers, Outputs& out)
{
    const Domain domain = domain_of(cfg);
    const LevyModel model = model_of(cfg);
    const RunConfig run = run_of(cfg, workers);
    const Point x = point_at(cfg.value("x", json()), "x");
    const int paths = num<int>(cfg, "paths", 10);
    const double horizon = num<double>(cfg, "horizon", 1.0);
    const PathParams p = path_params_for(domain, model);
    std::string csv = "config_hash,path,index,t,position,exited\n";
    json summary = json::array();
    for (int k = 0; k < paths; ++k) {
        Rng rng = make_rng(run.seed, stream_id(41, k));
        const PathSkeleton s = sample_perturbed_path(model, x, horizon, p.eps, p.dt, rng, &domain);
        for (std::size_t i = 0; i < s.times.size(); ++i)
            csv += out.hash() + "," + std::to_string(k) + "," + std::to_string(i) + "," + fmt(s.times[i]) + "," +
                   pstr(s.positions[i]) + "," + (s.exited && static_cast<long>(i) == s.exit_index ? "1" : "0") + "\n";
        summary.push_back({{"path", k}, {"nodes", s.times.size()}, {"exited", s.exited}});
    }
    out.write("paths.csv", csv);
    out.write_json("paths.json", {{"paths", summary}, {"eps", p.eps}, {"dt", p.dt}, {"horizon", horizon}});
    return kPass;
}

Status cmd_exit(const json& cfg, int workers, Outputs& out)
{
    const Domain domain = domain_of(cfg);
    const LevyModel model = model_of(cfg);
    const RunConfig run = run_of(cfg, workers);
    const auto ball = ball_of(domain);
    std::string csv = estimate_header();
    json rows = json::array();
    Status st = kPass;
    for (const Point& x : points_at(cfg, "x", domain.dim())) {
        const Estimate e = exit_time_mc(domain, model, x, run);
        std::optional<double> exact;
        if (ball && model.kind() == ModelKind::stable)
            exact = ball_mean_exit(x - ball->first, ball->second, model.alpha());
        csv += estimate_row(out.hash(), "exit", x, nullptr, e, exact);
        json j = to_json(e);
        j["x"] = pj(x);
        if (exact)
            j["exact"] = *exact;
        rows.push_back(j);
        if (e.flagged)
            st = kInconclusive;
    }
    out.write("exit.csv", csv);
    out.write_json("exit.json", rows);
    std::cout << rows.dump(2) << "\n";
    return st;
}

Status cmd_green(const json& cfg, int workers, Outputs& out)
{
    const Domain domain = domain_of(cfg);
    const LevyModel model = model_of(cfg);
    const RunConfig run = run_of(cfg, workers);
    const double h = num<double>(cfg, "h", default_bandwidth(domain));
    const bool wos = model.kind() == ModelKind::stable && domain.dim() > model.alpha();
    const bool closed = model.kind() == ModelKind::stable && green_closed_form(domain, model.alpha());
    const auto ball = ball_of(domain);
    if (!cfg.contains("pairs") || !cfg["pairs"].is_array())
        throw ConfigError("pairs: expected an array of {x, y}");
    std::string csv = estimate_header();
    json rows = json::array();
    Status st = kPass;
    for (std::size_t i = 0; i < cfg["pairs"].size(); ++i) {
        const std::string path = "pairs[" + std::to_string(i) + "]";
        const json& pr = cfg["pairs"][i];
        const Point x = point_at(pr.value("x", json()), path + ".x");
        const Point y = point_at(pr.value("y", json()), path + ".y");
        if (x.size() != domain.dim() || y.size() != domain.dim())
            throw ConfigError(path + ": dimension differs from the domain");
        const Estimate e = wos ? green_wos_stable(domain, model.alpha(), x, y, run)
                               : green_mc(domain, model, x, y, h, run);
        std::optional<double> exact;
        if (closed)
            exact = ball_green(x - ball->first, y - ball->first, ball->second, model.alpha());
        csv += estimate_row(out.hash(), e.method, x, &y, e, exact);
        json j = to_json(e);
        j["x"] = pj(x);
        j["y"] = pj(y);
        if (exact)
            j["exact"] = *exact;
        rows.push_back(j);
        if (e.flagged)
            st = kInconclusive;
    }
    out.write("green.csv", csv);
    const json result = rows.size() == 1 ? rows[0] : rows;
    out.write_json("green.json", result);
    std::cout << result.dump(2) << "\n";
    return st;
}

Status cmd_poisson(const json& cfg, int workers, Outputs& out)
{
    const Domain domain = domain_of(cfg);
    const LevyModel model = model_of(cfg);
    const RunConfig run = run_of(cfg, workers);
    const auto ball = ball_of(domain);
    const auto zs = points_at(cfg, "z", domain.dim());
    for (std::size_t k = 0; k < zs.size(); ++k)
        if (domain.contains(zs[k]))
            throw ConfigError("z[" + std::to_string(k) + "]: must lie outside the domain");
    std::string csv = estimate_header();
    json rows = json::array();
    Status st = kPass;
    for (const Point& x : points_at(cfg, "x", domain.dim())) {
        const auto es = poisson_kernel_occupation(domain, model, x, zs, run);
        for (std::size_t k = 0; k < zs.size(); ++k) {
            std::optional<double> exact;
            if (ball && model.kind() == ModelKind::stable)
                exact = ball_poisson_kernel(x - ball->first, zs[k] - ball->first, ball->second, model.alpha());
            csv += estimate_row(out.hash(), es[k].method, x, &zs[k], es[k], exact);
            json j = to_json(es[k]);
            j["x"] = pj(x);
            j["z"] = pj(zs[k]);
            if (exact)
                j["exact"] = *exact;
            rows.push_back(j);
            if (es[k].flagged)
                st = kInconclusive;
        }
    }
    out.write("poisson.csv", csv);
    out.write_json("poisson.json", rows);
    return st;
}

Status cmd_compare(const json& cfg, int workers, Outputs& out)
{
    const std::string name = cfg.value("name", cfg.value("experiment", std::string("compare")));
    const Outcome o = run_experiment(name, cfg, workers, out);
    out.write("summary.txt", o.summary + "\nstatus: " + status_name(o.status) + "\n");
    std::cout << o.summary << "\n";
    return o.status;
}

Status cmd_suite(const json& cfg, int workers, Outputs& out)
{
    const bool quick = cfg.value("quick", false);
    const std::uint64_t seed = num<std::uint64_t>(cfg["run"], "seed", 1);
    Status st = kPass;
    std::string summary;
    for (json e : suite_plan(quick)) {
        e["run"]["seed"] = seed;
        const std::string name = e["name"];
        const Outcome o = e["experiment"] == "baseline" ? run_baseline(name, e, workers, out)
                                                        : run_experiment(name, e, workers, out);
        st = worst(st, o.status);
        summary += o.summary + " [" + status_name(o.status) + "]\n";
        std::cout << o.summary << "\n" << std::flush;
    }
    summary += std::string("status: ") + status_name(st) + "\n";
    out.write("summary.txt", summary);
    return st;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Levy process Green function experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common c;
    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"density", "Perturbation series density on a grid"},
        {"simulate", "Sample paths of the perturbed process"},
        {"exit", "Mean exit times"},
        {"green", "Green function estimates"},
        {"poisson", "Poisson kernel estimates"},
        {"compare", "One comparison experiment"},
        {"suite", "All experiments"}};
    for (const auto& [name, help] : cmds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", c.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--out", c.out, "Output directory");
        sub->add_option("--seed", c.seed, "Override run.seed");
        sub->add_option("--workers", c.workers, "Worker threads (default: LEVYGREEN_WORKERS or all cores)");
        sub->add_flag("--quick", c.quick, "Small sample sizes");
        sub->add_option("--domain", c.domain_file, "Domain JSON file")->check(CLI::ExistingFile);
        sub->add_option("--model", c.model_file, "Model JSON file")->check(CLI::ExistingFile);
        sub->add_option("--x", c.xs, "Start point(s), comma separated coordinates");
        sub->add_option("--y", c.ys, "Target point(s) for green");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    const int workers = resolve_workers(c.workers);
    const std::string started = utc_now();
    try {
        const json cfg = resolve(cmd, c);
        Outputs out(c.out, fnv1a(cfg.dump()));
        Status st = kPass;
        if (cmd == "density")
            st = cmd_density(cfg, out);
        else if (cmd == "simulate")
            st = cmd_simulate(cfg, workers, out);
        else if (cmd == "exit")
            st = cmd_exit(cfg, workers, out);
        else if (cmd == "green")
            st = cmd_green(cfg, workers, out);
        else if (cmd == "poisson")
            st = cmd_poisson(cfg, workers, out);
        else if (cmd == "compare")
            st = cmd_compare(cfg, workers, out);
        else
            st = cmd_suite(cfg, workers, out);
        const std::uint64_t seed = cfg.contains("run") ? num<std::uint64_t>(cfg["run"], "seed", 1) : 1;
        out.manifest(cmd, cfg, seed, workers, started, st);
        return st;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return kUsage;
}
