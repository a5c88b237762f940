#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "wiener_sampling/delay_models.hpp"
#include "wiener_sampling/numeric_format.hpp"
#include "wiener_sampling/policies.hpp"

namespace wsamp {

/// All parameters of one experiment, as given on the command line.
struct ExperimentConfig {
    std::string delay = "lognormal:0.8,1.2";
    std::string policy = "online";
    std::size_t frames = 50'000;
    std::size_t reps = 20;
    std::uint64_t seed = 1;
    double alpha = 1.0;
    std::optional<double> dlb;  ///< D_bar_lb; unset means mean/2
    std::string fmax = "inf";   ///< number, "inf" or "auto10"
    double V = 10.0;
    double step = 0.0;          ///< 0 picks tau^2/400 per frame
    std::string out;
    std::string format = "csv";
    std::size_t checkpoints = 512;
    std::string preset;
    unsigned threads = 1;

    bool operator==(const ExperimentConfig&) const = default;
};

inline bool is_valid_fmax_spec(const std::string& s) {
    if (s == "auto10" || s == "inf") return true;
    double v;
    return parse_double(s, v) && v > 0.0;
}

/// f_max for `model`; "auto10" means 1/(10 D_bar).
inline double resolve_fmax(const ExperimentConfig& c, const DelayModel& model) {
    if (c.fmax == "auto10") {
        if (!(model.mean() > 0.0)) throw std::invalid_argument("--fmax auto10 needs a positive mean delay");
        return 1.0 / (10.0 * model.mean());
    }
    double v;
    if (!parse_double(c.fmax, v) || !(v > 0.0)) throw std::invalid_argument("bad --fmax: " + c.fmax);
    return v;
}

/// D_bar_lb for the online learner: the configured value, or the model default.
inline double resolve_dlb(const ExperimentConfig& c, const DelayModel& model) {
    if (c.dlb) return *c.dlb;
    if (auto d = default_mean_lower_bound(model)) return *d;
    throw std::invalid_argument("--dlb is required for this delay model");
}

inline OnlineParams online_params(const ExperimentConfig& c, const DelayModel& model) {
    OnlineParams p;
    p.V = c.V;
    p.alpha = c.alpha;
    p.mean_delay_lb = resolve_dlb(c, model);
    p.f_max = resolve_fmax(c, model);
    p.validate();
    return p;
}

inline void validate(const ExperimentConfig& c) {
    if (!(c.alpha > 0.5 && c.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0.5, 1]");
    if (c.reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (c.frames < 1) throw std::invalid_argument("frames must be >= 1");
    if (!(c.V > 0.0) || !std::isfinite(c.V)) throw std::invalid_argument("V must be > 0");
    if (!(c.step >= 0.0) || !std::isfinite(c.step)) throw std::invalid_argument("step must be >= 0");
    if (c.dlb && !(*c.dlb > 0.0)) throw std::invalid_argument("dlb must be > 0");
    if (!is_valid_fmax_spec(c.fmax)) throw std::invalid_argument("bad fmax: " + c.fmax);
    if (c.format != "csv" && c.format != "json") throw std::invalid_argument("format must be csv or json");
    if (!is_valid_policy_spec(c.policy)) throw std::invalid_argument("bad policy: " + c.policy);
    if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"delay", c.delay},     {"policy", c.policy},   {"frames", c.frames},
                       {"reps", c.reps},       {"seed", c.seed},       {"alpha", c.alpha},
                       {"fmax", c.fmax},       {"V", c.V},             {"step", c.step},
                       {"out", c.out},         {"format", c.format},   {"checkpoints", c.checkpoints},
                       {"preset", c.preset},   {"threads", c.threads}};
    j["dlb"] = c.dlb ? nlohmann::json(*c.dlb) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    ExperimentConfig d;
    c.delay = j.value("delay", d.delay);
    c.policy = j.value("policy", d.policy);
    c.frames = j.value("frames", d.frames);
    c.reps = j.value("reps", d.reps);
    c.seed = j.value("seed", d.seed);
    c.alpha = j.value("alpha", d.alpha);
    c.fmax = j.value("fmax", d.fmax);
    c.V = j.value("V", d.V);
    c.step = j.value("step", d.step);
    c.out = j.value("out", d.out);
    c.format = j.value("format", d.format);
    c.checkpoints = j.value("checkpoints", d.checkpoints);
    c.preset = j.value("preset", d.preset);
    c.threads = j.value("threads", d.threads);
    if (auto it = j.find("dlb"); it != j.end() && !it->is_null())
        c.dlb = it->get<double>();
    else
        c.dlb.reset();
}

inline std::string serialize(const ExperimentConfig& c) { return nlohmann::json(c).dump(2); }

inline ExperimentConfig parse_config(const std::string& text) {
    auto c = nlohmann::json::parse(text).get<ExperimentConfig>();
    validate(c);
    return c;
}

}  // namespace wsamp
