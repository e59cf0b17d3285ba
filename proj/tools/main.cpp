#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

// "--section Q=36" and "--section 36" both name Q.
double parse_section(const std::string& s) {
    std::string v = s;
    if (v.rfind("Q=", 0) == 0) v = v.substr(2);
    std::size_t pos = 0;
    const double q = std::stod(v, &pos);
    if (pos != v.size()) throw resonant::ConfigError("--section expects Q=<value>, got '" + s + "'");
    return q;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace resonant;
    using namespace resonant::cli;

    CLI::App app{"Resonantly forced coupled oscillators: simulation, Floquet analysis, "
                 "averaging check and envelope reduction"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    app.add_option("-c,--config", config_path, "key = value config file with [section] headers");
    app.add_option("--set", overrides, "override a config key, e.g. --set oscillator.A=0.5")
        ->take_all();
    app.add_option("-o,--out", out_dir, "output directory (output.dir)");

    auto* sim = app.add_subcommand("simulate", "integrate the coupled system, write trajectory and envelope");
    std::string init, method;
    std::optional<double> t_end, step;
    sim->add_option("--init", init, "zero | stationary | custom");
    sim->add_option("--t-end", t_end, "integration horizon (integration.t_end)");
    sim->add_option("--step", step, "fixed step h (integration.step)");
    sim->add_option("--method", method, "rk4 | abm4");
    bool stationary = false;
    sim->add_flag("--stationary", stationary, "shorthand for --init stationary");

    auto* stab = app.add_subcommand("stability", "Mathieu stability surface, fixed-Q section, integral index");
    bool surface = false;
    std::string section;
    std::optional<double> mu;
    std::string index_file;
    stab->add_flag("--surface", surface, "Re lambda1 on the (Q, R) grid");
    stab->add_option("--section", section, "fixed-Q section, e.g. Q=36");
    stab->add_option("--mu", mu, "dissipation coefficient (stability.mu)");
    stab->add_option("--integral-index", index_file, "envelope CSV with columns tau,k1,k2");

    auto* avg = app.add_subcommand("verify-averaging", "residual of the averaged envelope equation");
    bool manufactured = false;
    std::optional<double> avg_t_end;
    avg->add_flag("--manufactured", manufactured, "use the manufactured exact solution");
    avg->add_option("--t-end", avg_t_end, "simulation horizon (averaging.t_end)");

    auto* env = app.add_subcommand("envelope", "Hamiltonian envelope reduction: centre, portrait, sweep, period");
    std::optional<double> H0;
    env->add_option("--H0", H0, "Hamiltonian level (envelope.H0)");

    auto* rep = app.add_subcommand("reproduce", "regenerate the data behind one figure");
    std::string figure;
    rep->add_option("--figure", figure, "figure id")
        ->required()
        ->check(CLI::IsMember(figure_ids()));

    CLI11_PARSE(app, argc, argv);

    ExperimentConfig cfg;
    RunSummary early("startup");
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!init.empty()) cfg.init = parse_initial_data(init);
        if (stationary) cfg.init = InitialData::stationary;
        if (!method.empty()) apply_setting(cfg, "integration.method", method);
        if (t_end) cfg.t_end = *t_end;
        if (step) cfg.step = *step;
        if (mu) cfg.mu = *mu;
        if (manufactured) cfg.manufactured = true;
        if (avg_t_end) cfg.averaging_t_end = *avg_t_end;
        if (H0) cfg.H0 = *H0;
    } catch (const Error& e) {
        early.record_error(e);
        return finish(early, cfg.out_dir);
    } catch (const std::exception& e) {
        early.record_error("ConfigError", e.what());
        return finish(early, cfg.out_dir);
    }

    try {
        if (*sim) {
            RunSummary s = cmd_simulate(cfg);
            return finish(s, cfg.out_dir);
        }
        if (*stab) {
            StabilityRequest req;
            req.surface = surface;
            if (!section.empty()) req.section_Q = parse_section(section);
            if (!index_file.empty()) req.integral_index = index_file;
            RunSummary s = cmd_stability(cfg, req);
            return finish(s, cfg.out_dir);
        }
        if (*avg) {
            RunSummary s = cmd_verify_averaging(cfg);
            return finish(s, cfg.out_dir);
        }
        if (*env) {
            RunSummary s = cmd_envelope(cfg);
            return finish(s, cfg.out_dir);
        }
        RunSummary s = cmd_reproduce(cfg, figure);
        return finish(s, cfg.out_dir / ("fig" + figure));
    } catch (const Error& e) {
        early.record_error(e);
    } catch (const std::exception& e) {
        early.record_error("Error", e.what());
    }
    return finish(early, cfg.out_dir);
}
