#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wiener_sampling/numeric_format.hpp"
#include "wiener_sampling/offline_solver.hpp"
#include "wiener_sampling/simulator.hpp"

namespace wsamp {

/// Thrown for any failure to read or write experiment files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kTraceCsvHeader =
    "k,S_k,D_k,W_k,L_k,gamma_k,nu_k,U_k,deltaX_delivery,deltaX_frame,err_path,err_mart,cum_err,"
    "timeavg_mse,regret";

/// One row per stored frame, numbers in shortest round-trip form.
inline void write_trace_csv(std::ostream& os, const TraceSeries& t) {
    os << kTraceCsvHeader << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << t.k[i];
        for (double v : {t.sample_epoch[i], t.delay[i], t.wait[i], t.length[i], t.gamma[i], t.nu[i],
                         t.backlog[i], t.delta_delivery[i], t.delta_frame[i], t.err_path[i], t.err_mart[i],
                         t.cum_err[i], t.timeavg_mse(i), t.regret(i)})
            os << ',' << to_shortest(v);
        os << '\n';
    }
}

inline std::string trace_csv(const TraceSeries& t) {
    std::ostringstream os;
    write_trace_csv(os, t);
    return os.str();
}

inline nlohmann::json solution_json(const OptimalSolution& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(to_shortest(v)); };
    return {{"gamma_star", s.gamma_star},
            {"nu_star", s.nu_star},
            {"tau_star", s.tau_star()},
            {"frame_length_star", s.frame_length_star},
            {"mse_opt", s.mse_opt},
            {"residual", s.residual},
            {"cs_residual", s.cs_residual},
            {"f_max", num(s.f_max)}};
}

inline nlohmann::json series_json(const SeriesSummary& s) {
    return {{"k", s.k}, {"mean", s.mean}, {"stderr", s.stderr_}};
}

/// Aggregate over replications of one policy: per-checkpoint means and
/// standard errors of the time-average MSE, regret, gamma_k, nu_k and the
/// running mean sampling interval.
inline nlohmann::json summary_json(const std::vector<TraceSeries>& traces, const OptimalSolution& sol) {
    detail::require_aligned(traces, "summary_json");
    const auto& f = traces.front();
    std::size_t warnings = 0;
    for (const auto& t : traces) warnings += t.precision_warnings;
    nlohmann::json j;
    j["delay"] = f.model_spec;
    j["policy"] = f.policy_spec;
    j["seed"] = f.seed;
    j["replications"] = traces.size();
    j["frames"] = f.frames;
    j["solution"] = solution_json(sol);
    j["precision_warnings"] = warnings;
    j["timeavg_mse"] = series_json(timeavg_mse_series(traces));
    j["regret"] = series_json(regret_series(traces, sol));
    j["gamma"] = series_json(detail::summarize(traces, [](const TraceSeries& t, std::size_t i) { return t.gamma[i]; }));
    j["nu"] = series_json(detail::summarize(traces, [](const TraceSeries& t, std::size_t i) { return t.nu[i]; }));
    j["interval"] = series_json(detail::summarize(
        traces, [](const TraceSeries& t, std::size_t i) { return t.time_next[i] / static_cast<double>(t.k[i]); }));
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << text;
    os.close();
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace wsamp
