#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace tmfg {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physical and game constants. Defaults are calibrated to high-performance
// electric vehicles on a ring road of circumference 200*pi meters.
struct ModelParams {
    double alpha = 2.16e-4;     // aggregate drag coefficient [1/m]
    double epsilon = 0.05;      // velocity diffusion [m^2/s]
    double gamma = 0.25;        // disturbance attenuation [-]
    double beta = 4.0;          // speed-preference weight [s^3/m]
    double u_min = -10.0;       // brake bound [m/s^2]
    double u_max = 8.0;         // acceleration bound [m/s^2]
    double w_max = 2.0;         // disturbance bound [m/s^2]
    double s_max = 30.0;        // speed limit [m/s]
    double horizon = 30.0;      // T [s]
    double length = 200.0 * kPi;  // road circumference [m], fixed

    double inv_beta() const { return 1.0 / beta; }
    double control_mag() const { return std::max(std::abs(u_min), u_max); }
    // bound on |psi| = |-alpha v^2 + u + w| over the admissible boxes
    double psi_bound() const { return alpha * s_max * s_max + control_mag() + w_max; }
};

inline ModelParams default_params() { return ModelParams{}; }

inline void validate(const ModelParams& p) {
    auto fail = [](const std::string& what) { throw ConfigError("invalid parameters: " + what); };
    if (!(p.u_min < 0.0)) fail("u_min must be negative");
    if (!(p.u_max > 0.0)) fail("u_max must be positive");
    if (!(p.w_max >= 0.0)) fail("w_max must be non-negative");
    if (!(p.w_max < std::min(std::abs(p.u_min), p.u_max)))
        fail("w_max must be below min(|u_min|, u_max)");
    if (!(p.alpha > 0.0)) fail("alpha must be positive");
    if (!(p.epsilon >= 0.0)) fail("epsilon must be non-negative");
    if (!(p.gamma > 0.0)) fail("gamma must be positive");
    if (!(p.beta > 0.0)) fail("beta must be positive");
    if (!(p.s_max > 0.0)) fail("s_max must be positive");
    if (!(p.horizon > 0.0)) fail("T must be positive");
    if (!std::isfinite(p.alpha) || !std::isfinite(p.s_max) || !std::isfinite(p.horizon))
        fail("non-finite parameter");
}

// Congestion kernel phi(xi, sigma) [m/s^3]; periodic in both arguments with
// the road period. The default is exp(cos((xi - sigma)/100))/100.
class CongestionKernel {
public:
    using Fn = std::function<double(double, double)>;

    CongestionKernel()
        : fn_([](double xi, double sigma) {
              return 0.01 * std::exp(std::cos((xi - sigma) / 100.0));
          }) {}

    explicit CongestionKernel(Fn fn) : fn_(std::move(fn)) {}

    static CongestionKernel zero() {
        return CongestionKernel([](double, double) { return 0.0; });
    }

    double operator()(double xi, double sigma) const { return fn_(xi, sigma); }

private:
    Fn fn_;
};

// Initial position-velocity density: product of a von Mises bump centered at
// mid-road and a normal bump in speed. Normalization is discrete (see grid.hpp)
// so that the sampled field has exactly unit Riemann mass.
struct InitialDensity {
    double center_xi = 100.0 * kPi;  // [m]
    double mean_speed = 20.0;        // [m/s]

    double unnormalized(double xi, double upsilon) const {
        const double dv = upsilon - mean_speed;
        return std::exp(std::cos((xi - center_xi) / 100.0)) * std::exp(-0.5 * dv * dv);
    }
    double eval(double xi, double upsilon, double normalizer) const {
        return unnormalized(xi, upsilon) / normalizer;
    }
};

// Full run configuration: model constants plus solver numerics.
struct RunConfig {
    ModelParams model;
    int nx = 100;                // grid nodes per direction
    double tau = 0.001;          // time step [s]
    int checkpoint_stride = 1;   // store every stride-th time level
    int n_iters = 30;            // backward-forward iterations
    std::uint64_t seed = 0;      // master RNG seed for particle runs
};

inline void validate(const RunConfig& c) {
    validate(c.model);
    auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
    if (c.nx < 2) fail("Nx must be at least 2");
    if (!(c.tau > 0.0) || !std::isfinite(c.tau)) fail("tau must be positive");
    if (c.checkpoint_stride < 1) fail("checkpoint_stride must be at least 1");
    if (c.n_iters < 1) fail("n_iters must be at least 1");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        double x = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for key '" + key + "': '" + val + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for key '" + key + "': '" + val + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        unsigned long long x = std::stoull(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad unsigned value for key '" + key + "': '" + val + "'");
    }
}

}  // namespace detail

// Flat key-value configuration. Lines are "key = value"; '#' starts a comment.
// Unknown keys are errors.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

        if (key == "alpha") cfg.model.alpha = detail::parse_double(key, val);
        else if (key == "epsilon") cfg.model.epsilon = detail::parse_double(key, val);
        else if (key == "gamma") cfg.model.gamma = detail::parse_double(key, val);
        else if (key == "beta") cfg.model.beta = detail::parse_double(key, val);
        else if (key == "u_min") cfg.model.u_min = detail::parse_double(key, val);
        else if (key == "u_max") cfg.model.u_max = detail::parse_double(key, val);
        else if (key == "w_max") cfg.model.w_max = detail::parse_double(key, val);
        else if (key == "s_max") cfg.model.s_max = detail::parse_double(key, val);
        else if (key == "T") cfg.model.horizon = detail::parse_double(key, val);
        else if (key == "Nx") cfg.nx = static_cast<int>(detail::parse_int(key, val));
        else if (key == "tau") cfg.tau = detail::parse_double(key, val);
        else if (key == "checkpoint_stride") cfg.checkpoint_stride = static_cast<int>(detail::parse_int(key, val));
        else if (key == "n_iters") cfg.n_iters = static_cast<int>(detail::parse_int(key, val));
        else if (key == "seed") cfg.seed = detail::parse_uint(key, val);
        else throw ConfigError("unknown key '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void write_config(const RunConfig& c, std::ostream& out) {
    out << "alpha = " << format_g17(c.model.alpha) << "\n"
        << "epsilon = " << format_g17(c.model.epsilon) << "\n"
        << "gamma = " << format_g17(c.model.gamma) << "\n"
        << "beta = " << format_g17(c.model.beta) << "\n"
        << "u_min = " << format_g17(c.model.u_min) << "\n"
        << "u_max = " << format_g17(c.model.u_max) << "\n"
        << "w_max = " << format_g17(c.model.w_max) << "\n"
        << "s_max = " << format_g17(c.model.s_max) << "\n"
        << "T = " << format_g17(c.model.horizon) << "\n"
        << "Nx = " << c.nx << "\n"
        << "tau = " << format_g17(c.tau) << "\n"
        << "checkpoint_stride = " << c.checkpoint_stride << "\n"
        << "n_iters = " << c.n_iters << "\n"
        << "seed = " << c.seed << "\n";
}

}  // namespace tmfg
