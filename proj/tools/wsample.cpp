// wsample: solve, simulate and check threshold sampling of a Wiener process
// over a channel with random delay.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wiener_sampling/analytic.hpp"
#include "wiener_sampling/config.hpp"
#include "wiener_sampling/delay_models.hpp"
#include "wiener_sampling/io.hpp"
#include "wiener_sampling/offline_solver.hpp"
#include "wiener_sampling/policies.hpp"
#include "wiener_sampling/simulator.hpp"
#include "wiener_sampling/validate.hpp"

namespace {

using namespace wsamp;
using nlohmann::json;

enum Exit : int { kOk = 0, kParse = 1, kSolver = 2, kIo = 3, kInvariant = 4 };

struct Run {
    std::string label;
    std::string policy;
    double V;
};

// Preset values; flags given explicitly on the command line win.
ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.delay = "lognormal:0.8,1.2";
    c.frames = 50'000;
    c.reps = 20;
    if (name == "fig5" || name == "fig6") c.fmax = "auto10";
    if (name != "fig3" && name != "fig4" && name != "fig5" && name != "fig6")
        throw std::invalid_argument("unknown preset: " + name);
    return c;
}

std::vector<Run> runs_for(const ExperimentConfig& c) {
    if (c.preset == "fig3") return {{"online", "online", c.V}, {"optimal", "optimal", c.V}, {"zerowait", "zerowait", c.V}};
    if (c.preset == "fig4") return {{"online", "online", c.V}, {"optimal", "optimal", c.V}};
    if (c.preset == "fig5" || c.preset == "fig6") return {{"online_V10", "online", 10.0}, {"online_V1", "online", 1.0}};
    return {{c.policy, c.policy, c.V}};
}

OptimalSolution solve_for(const ExperimentConfig& c, const DelayModel& model) {
    AnalyticContext ctx(model);
    return solve_constrained(ctx, resolve_fmax(c, model));
}

std::vector<TraceSeries> simulate_run(const ExperimentConfig& c, const DelayModel& model, const OptimalSolution& sol,
                                      const Run& run) {
    ExperimentConfig rc = c;
    rc.V = run.V;
    OnlineParams params;
    if (run.policy == "online") params = online_params(rc, model);
    RunOptions opt;
    opt.step = c.step;
    opt.checkpoints = c.checkpoints;
    auto make = [&] { return make_policy(run.policy, sol, params); };
    return run_replications(model, make, run.label, c.frames, c.seed, c.reps, opt, sol.mse_opt, c.threads);
}

std::string safe_name(std::string s) {
    for (char& ch : s)
        if (ch == ':' || ch == '/' || ch == ',') ch = '_';
    return s;
}

void emit(const ExperimentConfig& c, const std::string& file, const json& j) {
    if (c.out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(c.out, ec);
    if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
    write_text_file((std::filesystem::path(c.out) / file).string(), j.dump(2) + "\n");
}

// Settings that determine the numbers; output location and thread count do not.
json reproducible_config(const ExperimentConfig& c) {
    json j = c;
    j.erase("out");
    j.erase("threads");
    return j;
}

int cmd_solve(const ExperimentConfig& c) {
    const auto model = parse_delay_spec(c.delay);
    AnalyticContext ctx(model);
    const auto sol = solve_constrained(ctx, resolve_fmax(c, model));
    const json j = {{"gamma_star", sol.gamma_star},     {"nu_star", sol.nu_star},
                    {"tau_star", sol.tau_star()},       {"frame_length_star", sol.frame_length_star},
                    {"mse_opt", sol.mse_opt},           {"residual", sol.residual}};
    std::cout << j.dump(2) << '\n';
    const double tol = SolverOptions{}.residual_rel * std::max(1.0, model.moments().second);
    return sol.residual <= tol ? kOk : kSolver;
}

int cmd_simulate(const ExperimentConfig& c) {
    const auto model = parse_delay_spec(c.delay);
    const auto sol = solve_for(c, model);
    json summary;
    summary["config"] = reproducible_config(c);
    summary["runs"] = json::array();
    for (const auto& run : runs_for(c)) {
        const auto traces = simulate_run(c, model, sol, run);
        auto s = summary_json(traces, sol);
        s["label"] = run.label;
        s["V"] = run.V;
        summary["runs"].push_back(std::move(s));
        if (!c.out.empty() && c.format == "csv") {
            std::error_code ec;
            std::filesystem::create_directories(c.out, ec);
            if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
            for (const auto& t : traces)
                write_text_file((std::filesystem::path(c.out) /
                                 (safe_name(run.label) + "_rep" + std::to_string(t.replication) + ".csv"))
                                    .string(),
                                trace_csv(t));
        }
    }
    emit(c, "summary.json", summary);
    return kOk;
}

int cmd_regret(const ExperimentConfig& c) {
    const auto model = parse_delay_spec(c.delay);
    const auto sol = solve_for(c, model);
    const auto online = simulate_run(c, model, sol, {"online", "online", c.V});
    const auto optimal = simulate_run(c, model, sol, {"optimal", "optimal", c.V});
    json j;
    j["config"] = reproducible_config(c);
    j["solution"] = solution_json(sol);
    j["regret"] = series_json(regret_series(online, sol));
    j["regret_paired"] = series_json(paired_regret_series(online, optimal, sol, model.mean()));
    j["regret_optimal"] = series_json(regret_series(optimal, sol));
    j["gamma_sq_error"] = series_json(gamma_error_series(online, sol.gamma_star));
    emit(c, "regret.json", j);
    return kOk;
}

int cmd_validate(const ExperimentConfig& c, bool delay_given) {
    ValidateOptions o;
    o.seed = c.seed;
    if (delay_given) o.kernel_model = c.delay;
    const auto rep = run_validation(o);
    emit(c, "validate.json", to_json(rep));
    return rep.all_passed() ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold sampling of a Wiener process over a random-delay channel"};
    app.require_subcommand(1);
    app.fallthrough();

    ExperimentConfig c;
    std::string config_file, dlb_text;
    app.add_option("--config", config_file, "JSON config file; flags override it");
    auto* o_delay = app.add_option("--delay", c.delay, "det:d | uniform:a,b | lognormal:mu,sigma | lecam:delta,c,k | empirical:path");
    auto* o_policy = app.add_option("--policy", c.policy, "online | optimal | zerowait | const:w");
    auto* o_frames = app.add_option("--frames", c.frames, "frames per replication");
    auto* o_reps = app.add_option("--reps", c.reps, "replications");
    auto* o_seed = app.add_option("--seed", c.seed, "base seed");
    auto* o_alpha = app.add_option("--alpha", c.alpha, "step-size exponent in (0.5, 1]");
    auto* o_dlb = app.add_option("--dlb", dlb_text, "lower bound on the mean delay");
    auto* o_fmax = app.add_option("--fmax", c.fmax, "number | inf | auto10");
    auto* o_V = app.add_option("--V", c.V, "virtual-queue weight");
    auto* o_step = app.add_option("--step", c.step, "wait-portion step; 0 = tau^2/400");
    auto* o_out = app.add_option("--out", c.out, "output directory (stdout if empty)");
    auto* o_format = app.add_option("--format", c.format, "csv | json");
    auto* o_cp = app.add_option("--checkpoints", c.checkpoints, "stored frames for long traces");
    auto* o_threads = app.add_option("--threads", c.threads, "worker threads");
    app.add_option("--preset", c.preset, "fig3 | fig4 | fig5 | fig6");

    auto* solve = app.add_subcommand("solve", "print the optimal threshold policy");
    auto* simulate = app.add_subcommand("simulate", "simulate replications and write traces");
    auto* regret = app.add_subcommand("regret", "regret of the online policy against the optimum");
    auto* validate_cmd = app.add_subcommand("validate", "run the invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }

    try {
        ExperimentConfig flags = c;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw IoError("cannot read config file: " + config_file);
            std::stringstream ss;
            ss << in.rdbuf();
            c = parse_config(ss.str());
        } else if (!c.preset.empty()) {
            c = preset_config(flags.preset);
        }
        if (!flags.preset.empty()) c.preset = flags.preset;
        auto take = [](CLI::Option* o, auto& dst, const auto& src) {
            if (o->count() > 0) dst = src;
        };
        take(o_delay, c.delay, flags.delay);
        take(o_policy, c.policy, flags.policy);
        take(o_frames, c.frames, flags.frames);
        take(o_reps, c.reps, flags.reps);
        take(o_seed, c.seed, flags.seed);
        take(o_alpha, c.alpha, flags.alpha);
        take(o_fmax, c.fmax, flags.fmax);
        take(o_V, c.V, flags.V);
        take(o_step, c.step, flags.step);
        take(o_out, c.out, flags.out);
        take(o_format, c.format, flags.format);
        take(o_cp, c.checkpoints, flags.checkpoints);
        take(o_threads, c.threads, flags.threads);
        if (o_dlb->count() > 0) {
            double v;
            if (!parse_double(dlb_text, v)) throw std::invalid_argument("bad --dlb: " + dlb_text);
            c.dlb = v;
        }
        validate(c);
        if (c.delay.starts_with("empirical:") && !c.dlb && (*simulate || *regret))
            throw std::invalid_argument("--dlb is required with an empirical delay model");
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParse;
    }

    try {
        if (*solve) return cmd_solve(c);
        if (*simulate) return cmd_simulate(c);
        if (*regret) return cmd_regret(c);
        if (*validate_cmd) return cmd_validate(c, o_delay->count() > 0);
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
    return kOk;
}
