#pragma once

// Scenario files: JSON objects with a fixed set of keys. Unknown keys are errors.
//
//   {
//     "preset": "hydrogen-1s2s",                       (optional)
//     "params": {"p": 2, "delta": -1, "g": 0.2, "K": 0.26, "intensity": 1},
//     "grid":   {"v_max": 15, "points_per_recoil": 20},
//     "job":    "steady" | "evolve" | "sweep" | "figure2" | "figure3" | "figure4",
//     "sweep":  {"delta_min": -2, "delta_max": -0.12, "steps": 40},
//     "evolve": {"duration": 50, "sample_interval": 5, "dynamics": "eliminated"},
//     "fit":    {"window_factor": 1.0, "method": "gaussian-peak"},
//     "output": {"csv": "out.csv", "summary": "out_summary.txt"}
//   }
//
// A preset supplies p and K; explicit params override it.

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "sharpcool/diagnostics.hpp"
#include "sharpcool/errors.hpp"
#include "sharpcool/grid.hpp"
#include "sharpcool/kinetics.hpp"
#include "sharpcool/model.hpp"

namespace sharpcool {

class ScenarioError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class Job { steady, evolve, sweep, figure2, figure3, figure4 };

inline const char* to_string(Job job)
{
    switch (job) {
    case Job::steady: return "steady";
    case Job::evolve: return "evolve";
    case Job::sweep: return "sweep";
    case Job::figure2: return "figure2";
    case Job::figure3: return "figure3";
    case Job::figure4: return "figure4";
    }
    return "steady";
}

inline Job parse_job(std::string_view name)
{
    for (Job j : {Job::steady, Job::evolve, Job::sweep, Job::figure2, Job::figure3, Job::figure4})
        if (name == to_string(j))
            return j;
    throw ScenarioError("unknown job '" + std::string(name) + "'");
}

struct GridSpec {
    std::optional<double> v_max;  // default: max(15, ceil(3 |delta| / K))
    int points_per_recoil = VelocityGrid::default_points_per_recoil;

    bool operator==(const GridSpec&) const = default;
};

struct SweepSpec {
    double delta_min = -2.0;
    double delta_max = -0.12;
    int steps = 40;

    double delta_at(int i) const
    {
        if (i == steps - 1)
            return delta_max;
        return delta_min + (delta_max - delta_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    bool operator==(const SweepSpec&) const = default;
};

struct EvolveSpec {
    double duration = 1.0;
    double sample_interval = 0.1;
    Dynamics dynamics = Dynamics::eliminated;

    bool operator==(const EvolveSpec&) const = default;
};

struct FitSpec {
    double window_factor = 1.0;
    FitMethod method = FitMethod::gaussian_peak;

    bool operator==(const FitSpec&) const = default;
};

struct OutputSpec {
    std::optional<std::string> csv;
    std::optional<std::string> summary;

    bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
    std::optional<std::string> preset;
    CoolingParams params;
    GridSpec grid;
    Job job = Job::steady;
    std::optional<SweepSpec> sweep;
    std::optional<EvolveSpec> evolve;
    FitSpec fit;
    OutputSpec output;

    VelocityGrid velocity_grid() const { return velocity_grid_for(params); }

    VelocityGrid velocity_grid_for(const CoolingParams& p) const
    {
        return VelocityGrid::for_params(p, grid.v_max, grid.points_per_recoil);
    }
};

inline bool operator==(const CoolingParams& a, const CoolingParams& b)
{
    return a.p == b.p && a.delta == b.delta && a.g == b.g && a.K == b.K && a.intensity == b.intensity;
}

inline bool operator==(const Scenario& a, const Scenario& b)
{
    return a.preset == b.preset && a.params == b.params && a.grid == b.grid && a.job == b.job
           && a.sweep == b.sweep && a.evolve == b.evolve && a.fit == b.fit && a.output == b.output;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object())
        throw ScenarioError(std::string(where) + " must be a JSON object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (auto name : allowed)
            ok = ok || item.key() == name;
        if (!ok)
            throw ScenarioError("unknown key '" + item.key() + "' in " + std::string(where));
    }
}

template <class T>
T read(const json& obj, const char* key, std::string_view where)
{
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ScenarioError("missing or mistyped '" + std::string(key) + "' in " + std::string(where));
    }
}

template <class T>
void read_optional(const json& obj, const char* key, std::string_view where, T& out)
{
    if (obj.contains(key))
        out = read<T>(obj, key, where);
}

inline int read_int(const json& obj, const char* key, std::string_view where)
{
    const auto& v = obj.at(key);
    if (v.is_number_integer())
        return v.get<int>();
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())
        return static_cast<int>(v.get<double>());
    throw ScenarioError("'" + std::string(key) + "' in " + std::string(where) + " must be an integer");
}

inline const char* to_string(Dynamics d) { return d == Dynamics::full ? "full" : "eliminated"; }

inline Dynamics parse_dynamics(const std::string& s)
{
    if (s == "full")
        return Dynamics::full;
    if (s == "eliminated")
        return Dynamics::eliminated;
    throw ScenarioError("dynamics must be 'full' or 'eliminated'");
}

inline FitMethod parse_fit_method(const std::string& s)
{
    if (s == "gaussian-peak")
        return FitMethod::gaussian_peak;
    if (s == "log-linear")
        return FitMethod::log_linear;
    throw ScenarioError("fit method must be 'gaussian-peak' or 'log-linear'");
}

} // namespace detail

inline void validate(const Scenario& s)
{
    try {
        s.params.validate();
    } catch (const DomainError& e) {
        throw ScenarioError(e.what());
    }
    if (s.grid.points_per_recoil < 1)
        throw ScenarioError("grid.points_per_recoil must be positive");
    if (s.grid.v_max && !(*s.grid.v_max >= 2.0))
        throw ScenarioError("grid.v_max must be at least 2");
    if (!(s.fit.window_factor > 0.0 && s.fit.window_factor <= 1.0))
        throw ScenarioError("fit.window_factor must lie in (0, 1]");
    if (s.job == Job::sweep || s.job == Job::figure3) {
        if (!s.sweep)
            throw ScenarioError("sweep job requires a sweep block");
        if (!(s.sweep->delta_min < s.sweep->delta_max && s.sweep->delta_max < 0.0))
            throw ScenarioError("sweep requires delta_min < delta_max < 0");
        if (s.sweep->steps < 2)
            throw ScenarioError("sweep requires at least 2 steps");
    }
    if (s.job == Job::evolve) {
        if (!s.evolve)
            throw ScenarioError("evolve job requires an evolve block");
        if (!(s.evolve->duration > 0.0))
            throw ScenarioError("evolve.duration must be positive");
        if (!(s.evolve->sample_interval > 0.0))
            throw ScenarioError("evolve.sample_interval must be positive");
    }
}

inline Scenario scenario_from_json(const nlohmann::json& j)
{
    using detail::read;
    using detail::read_optional;
    detail::reject_unknown(j, "scenario", {"preset", "params", "grid", "job", "sweep", "evolve", "fit", "output"});

    Scenario s;
    bool have_p = false, have_K = false;
    if (j.contains("preset")) {
        s.preset = read<std::string>(j, "preset", "scenario");
        const auto preset = find_preset(*s.preset);
        if (!preset)
            throw ScenarioError("unknown preset '" + *s.preset + "'");
        s.params.p = preset->default_p;
        s.params.K = preset->K;
        have_p = have_K = true;
    }
    if (!j.contains("params"))
        throw ScenarioError("scenario requires a params block");
    const auto& pj = j.at("params");
    detail::reject_unknown(pj, "params", {"p", "delta", "g", "K", "intensity"});
    if (pj.contains("p")) {
        s.params.p = detail::read_int(pj, "p", "params");
        have_p = true;
    }
    if (pj.contains("K")) {
        s.params.K = read<double>(pj, "K", "params");
        have_K = true;
    }
    if (!have_p || !have_K)
        throw ScenarioError("params.p and params.K are required without a preset");
    s.params.delta = read<double>(pj, "delta", "params");
    s.params.g = read<double>(pj, "g", "params");
    read_optional(pj, "intensity", "params", s.params.intensity);

    if (j.contains("grid")) {
        const auto& gj = j.at("grid");
        detail::reject_unknown(gj, "grid", {"v_max", "points_per_recoil"});
        if (gj.contains("v_max"))
            s.grid.v_max = read<double>(gj, "v_max", "grid");
        if (gj.contains("points_per_recoil"))
            s.grid.points_per_recoil = detail::read_int(gj, "points_per_recoil", "grid");
    }
    if (j.contains("job"))
        s.job = parse_job(read<std::string>(j, "job", "scenario"));
    if (j.contains("sweep")) {
        const auto& sj = j.at("sweep");
        detail::reject_unknown(sj, "sweep", {"delta_min", "delta_max", "steps"});
        SweepSpec sw;
        sw.delta_min = read<double>(sj, "delta_min", "sweep");
        sw.delta_max = read<double>(sj, "delta_max", "sweep");
        sw.steps = detail::read_int(sj, "steps", "sweep");
        s.sweep = sw;
    }
    if (j.contains("evolve")) {
        const auto& ej = j.at("evolve");
        detail::reject_unknown(ej, "evolve", {"duration", "sample_interval", "dynamics"});
        EvolveSpec ev;
        ev.duration = read<double>(ej, "duration", "evolve");
        ev.sample_interval = read<double>(ej, "sample_interval", "evolve");
        if (ej.contains("dynamics"))
            ev.dynamics = detail::parse_dynamics(read<std::string>(ej, "dynamics", "evolve"));
        s.evolve = ev;
    }
    if (j.contains("fit")) {
        const auto& fj = j.at("fit");
        detail::reject_unknown(fj, "fit", {"window_factor", "method"});
        read_optional(fj, "window_factor", "fit", s.fit.window_factor);
        if (fj.contains("method"))
            s.fit.method = detail::parse_fit_method(read<std::string>(fj, "method", "fit"));
    }
    if (j.contains("output")) {
        const auto& oj = j.at("output");
        detail::reject_unknown(oj, "output", {"csv", "summary"});
        if (oj.contains("csv"))
            s.output.csv = read<std::string>(oj, "csv", "output");
        if (oj.contains("summary"))
            s.output.summary = read<std::string>(oj, "summary", "output");
    }
    validate(s);
    return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s)
{
    nlohmann::json j;
    if (s.preset)
        j["preset"] = *s.preset;
    j["params"] = {{"p", s.params.p},
                   {"delta", s.params.delta},
                   {"g", s.params.g},
                   {"K", s.params.K},
                   {"intensity", s.params.intensity}};
    nlohmann::json grid = {{"points_per_recoil", s.grid.points_per_recoil}};
    if (s.grid.v_max)
        grid["v_max"] = *s.grid.v_max;
    j["grid"] = grid;
    j["job"] = to_string(s.job);
    if (s.sweep)
        j["sweep"] = {{"delta_min", s.sweep->delta_min}, {"delta_max", s.sweep->delta_max}, {"steps", s.sweep->steps}};
    if (s.evolve)
        j["evolve"] = {{"duration", s.evolve->duration},
                       {"sample_interval", s.evolve->sample_interval},
                       {"dynamics", detail::to_string(s.evolve->dynamics)}};
    j["fit"] = {{"window_factor", s.fit.window_factor}, {"method", to_string(s.fit.method)}};
    nlohmann::json out = nlohmann::json::object();
    if (s.output.csv)
        out["csv"] = *s.output.csv;
    if (s.output.summary)
        out["summary"] = *s.output.summary;
    j["output"] = out;
    return j;
}

inline Scenario parse_scenario(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(std::string("malformed scenario JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

// Applies a dotted-path override such as "params.delta=-0.5" to a scenario document.
// The value is parsed as JSON when possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& doc, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ScenarioError("override must have the form key=value: '" + std::string(assignment) + "'");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw ScenarioError("malformed override key '" + key + "'");
        if (!node->is_object())
            *node = nlohmann::json::object();
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

inline Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioError("cannot open scenario file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

// Built-in parameter sets for the figure-reproduction jobs.
inline Scenario figure_scenario(Job job)
{
    Scenario s;
    s.job = job;
    switch (job) {
    case Job::figure2:
        s.preset = "hydrogen-1s2s";
        s.params = CoolingParams{2, -1.0, 0.2, 0.26, 1.0};
        break;
    case Job::figure3:
        s.preset = "hydrogen-1s2s";
        s.params = CoolingParams{2, -1.0, 0.2, 0.26, 1.0};
        s.sweep = SweepSpec{-2.0, -0.12, 40};
        break;
    case Job::figure4: {
        const double K = 3e-4;
        s.params = CoolingParams{1, -4.0 * K, 0.8 * K, K, 1.0};
        break;
    }
    default:
        throw ScenarioError("not a figure job");
    }
    return s;
}

} // namespace sharpcool
