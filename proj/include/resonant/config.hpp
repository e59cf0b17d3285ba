#pragma once

// Experiment configuration: flat `key = value` text with [section] headers,
// comments introduced by ';'. Keys are addressed as "section.key"; command
// line overrides use the same names.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "resonant/envelope.hpp"
#include "resonant/errors.hpp"
#include "resonant/floquet.hpp"
#include "resonant/integrators.hpp"
#include "resonant/oscillator.hpp"

namespace resonant {

enum class InitialData { zero, stationary, custom };

inline InitialData parse_initial_data(const std::string& s) {
    if (s == "zero") return InitialData::zero;
    if (s == "stationary") return InitialData::stationary;
    if (s == "custom") return InitialData::custom;
    throw ConfigError("unknown initial data '" + s + "' (expected zero, stationary or custom)");
}

inline const char* to_string(InitialData d) {
    switch (d) {
        case InitialData::zero: return "zero";
        case InitialData::stationary: return "stationary";
        default: return "custom";
    }
}

struct ExperimentConfig {
    OscParams osc = OscParams::reference();

    // [integration]
    Method method = Method::rk4;
    double step = 0.0;       // 0 selects default_step
    double t_end = 2000.0;
    InitialData init = InitialData::zero;
    OscState custom_init{};  // used with init = custom
    std::size_t output_stride = 10;

    // [stability]
    Range Q_range{25.0, 49.0};
    Range R_range{0.0, 64.0};
    double grid_step = 0.25;
    double section_Q = 36.0;
    double section_step = 0.05;
    double mu = 0.1;
    unsigned threads = 0;

    // [averaging]
    double averaging_t_end = 3000.0;
    double window = 0.0;  // theta units; 0 selects default_window_length
    bool manufactured = false;

    // [envelope]
    double H0 = 1.0 / (4.0 * std::numbers::pi);
    double sweep_min = 0.02;
    double sweep_max = 0.5;
    std::size_t sweep_points = 200;
    double flow_step = 1e-3;
    double flow_tau_end = 20.0;
    std::size_t portrait_orbits = 12;
    double portrait_radius = 0.2;

    // [reproduce]
    double long_t_end = 150000.0;  // horizon of the full-pulsation figures

    // [output]
    std::filesystem::path out_dir = "out";

    void validate() const {
        osc.validate();
        if (!(step >= 0.0) || !std::isfinite(step)) throw ConfigError("integration.step must be >= 0");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("integration.t_end must be positive");
        if (output_stride == 0) throw ConfigError("integration.output_stride must be >= 1");
        if (!(Q_range.hi >= Q_range.lo) || !(R_range.hi >= R_range.lo)) {
            throw ConfigError("stability ranges must satisfy lo <= hi");
        }
        if (!(grid_step > 0.0) || !(section_step > 0.0)) throw ConfigError("stability steps must be positive");
        if (!(mu >= 0.0)) throw ConfigError("stability.mu must be non-negative");
        if (!(averaging_t_end > 0.0)) throw ConfigError("averaging.t_end must be positive");
        if (!(window >= 0.0)) throw ConfigError("averaging.window must be >= 0");
        if (!(sweep_max > sweep_min) || sweep_points < 2) throw ConfigError("envelope sweep is empty");
        if (!(flow_step > 0.0) || !(flow_tau_end > 0.0)) throw ConfigError("envelope flow settings must be positive");
        if (!(portrait_radius > 0.0)) throw ConfigError("envelope.portrait_radius must be positive");
        if (!(long_t_end > 0.0)) throw ConfigError("reproduce.long_t_end must be positive");
        if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
    }

    double effective_step() const { return step > 0.0 ? step : default_step(osc); }

    OscState initial_state() const {
        switch (init) {
            case InitialData::zero: return {0.0, 0.0, 0.0, 0.0};
            case InitialData::stationary: return stationary_initial_data(nondimensionalize(osc));
            default: return custom_init;
        }
    }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
    if (pos == 0 || pos != v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
    return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d < 0.0 || d != std::floor(d)) throw ConfigError(key + ": '" + v + "' is not a count");
    return static_cast<std::size_t>(d);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

}  // namespace detail

/// Assigns one "section.key" entry. Unknown keys are errors, so typos in a
/// config file or an override do not pass silently.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_count;
    using detail::parse_double;
    auto num = [&] { return parse_double(key, value); };

    if (key == "oscillator.omega") c.osc.omega = num();
    else if (key == "oscillator.Omega") c.osc.Omega = num();
    else if (key == "oscillator.A") c.osc.A = num();
    else if (key == "oscillator.nu") c.osc.nu = num();
    else if (key == "oscillator.eps") c.osc.eps = num();
    else if (key == "oscillator.delta") c.osc.delta = num();
    else if (key == "integration.method") {
        try {
            c.method = parse_method(value);
        } catch (const Error& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    else if (key == "integration.step") c.step = num();
    else if (key == "integration.t_end") c.t_end = num();
    else if (key == "integration.init") c.init = parse_initial_data(value);
    else if (key == "integration.x0") c.custom_init[0] = num();
    else if (key == "integration.xp0") c.custom_init[1] = num();
    else if (key == "integration.y0") c.custom_init[2] = num();
    else if (key == "integration.yp0") c.custom_init[3] = num();
    else if (key == "integration.output_stride") c.output_stride = parse_count(key, value);
    else if (key == "stability.Q_min") c.Q_range.lo = num();
    else if (key == "stability.Q_max") c.Q_range.hi = num();
    else if (key == "stability.R_min") c.R_range.lo = num();
    else if (key == "stability.R_max") c.R_range.hi = num();
    else if (key == "stability.step") c.grid_step = num();
    else if (key == "stability.section_Q") c.section_Q = num();
    else if (key == "stability.section_step") c.section_step = num();
    else if (key == "stability.mu") c.mu = num();
    else if (key == "stability.threads") c.threads = static_cast<unsigned>(parse_count(key, value));
    else if (key == "averaging.t_end") c.averaging_t_end = num();
    else if (key == "averaging.window") c.window = num();
    else if (key == "averaging.manufactured") c.manufactured = parse_bool(key, value);
    else if (key == "envelope.H0") c.H0 = num();
    else if (key == "envelope.sweep_min") c.sweep_min = num();
    else if (key == "envelope.sweep_max") c.sweep_max = num();
    else if (key == "envelope.sweep_points") c.sweep_points = parse_count(key, value);
    else if (key == "envelope.flow_step") c.flow_step = num();
    else if (key == "envelope.flow_tau_end") c.flow_tau_end = num();
    else if (key == "envelope.portrait_orbits") c.portrait_orbits = parse_count(key, value);
    else if (key == "envelope.portrait_radius") c.portrait_radius = num();
    else if (key == "reproduce.long_t_end") c.long_t_end = num();
    else if (key == "output.dir") c.out_dir = value;
    else throw ConfigError("unknown configuration key '" + key + "'");
}

/// "section.key=value"
inline void apply_override(ExperimentConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    }
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    apply_setting(c, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError("key '" + section + "' appears outside a [section]");
        }
        for (const auto& [key, leaf] : body) {
            apply_setting(base, section + "." + key, leaf.get_value<std::string>());
        }
    }
    return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    return parse_config(in, std::move(base));
}

}  // namespace resonant
