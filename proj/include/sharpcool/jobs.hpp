#pragma once

// Job runners behind the command-line front end. Each job computes an
// in-memory report; formatting to CSV and key-value summaries is separate so
// the reports can be tested without touching the filesystem.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sharpcool/analytics.hpp"
#include "sharpcool/diagnostics.hpp"
#include "sharpcool/kinetics.hpp"
#include "sharpcool/model.hpp"
#include "sharpcool/scenario.hpp"

namespace sharpcool {

// Fixed 9-significant-digit formatting for all numeric output.
inline std::string format_number(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

inline std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

struct FitOutcome {
    std::optional<TemperatureReport> report;
    std::string error;

    std::optional<double> T() const { return report ? std::optional<double>(report->T) : std::nullopt; }
};

inline FitOutcome try_fit(std::span<const double> v, std::span<const double> n, const CoolingParams& params,
                          const FitSpec& fit)
{
    FitOutcome out;
    try {
        out.report = fit_temperature(v, n, params, FitOptions{fit.window_factor, fit.method});
    } catch (const SolverError& e) {
        out.error = e.what();
    } catch (const DomainError& e) {
        out.error = e.what();
    }
    return out;
}

// The eliminated kernel does not depend on a nonzero intensity; solving at
// unit intensity makes outputs bit-identical across intensities.
inline CoolingParams kernel_params(CoolingParams params)
{
    if (params.intensity > 0.0)
        params.intensity = 1.0;
    return params;
}

struct SteadyReport {
    Scenario scenario;
    std::vector<double> v;
    std::vector<double> numeric;
    std::vector<double> gfpe_quad;
    std::optional<std::vector<double>> gfpe_closed;  // absent when the validity guard fails
    std::vector<double> fpe;
    SteadyStateResult solver;
    FitOutcome fit_numeric, fit_gfpe, fit_fpe;
    std::optional<double> T_gfpe_formula, T_fpe_formula;
    std::optional<ClosedFormCheck> closed_check;
    std::string closed_status;
    RegimeDiagnostics regime;
};

inline SteadyReport run_steady(const Scenario& scenario)
{
    validate(scenario);
    SteadyReport r;
    r.scenario = scenario;
    const auto& params = scenario.params;
    r.regime = regime_diagnostics(params);
    const auto grid = scenario.velocity_grid();
    r.v = grid.nodes();

    const auto gen = build_eliminated_generator(kernel_params(params), grid);
    r.solver = steady_state(gen, SteadyMethod::null_space);
    r.numeric = normalize_peak(r.v, r.solver.distribution);
    r.gfpe_quad = normalize_peak(r.v, steady_state_quadrature(params, CoefficientModel::gfpe, r.v));
    r.fpe = fpe_gaussian(params, r.v);

    try {
        r.gfpe_closed = normalize_peak(r.v, steady_state_closed_gfpe(params, r.v));
        r.closed_check = check_closed_form(params);
        r.closed_status = r.closed_check->consistent ? "consistent" : "inconsistent";
    } catch (const RegimeError&) {
        r.closed_status = "invalid";
    }

    r.fit_numeric = try_fit(r.v, r.numeric, params, scenario.fit);
    r.fit_gfpe = try_fit(r.v, r.gfpe_quad, params, scenario.fit);
    r.fit_fpe = try_fit(r.v, r.fpe, params, scenario.fit);
    try {
        r.T_gfpe_formula = temperature_gfpe(params);
    } catch (const RegimeError&) {
    }
    try {
        r.T_fpe_formula = temperature_fpe(params);
    } catch (const RegimeError&) {
    }
    return r;
}

inline std::string steady_csv(const SteadyReport& r)
{
    std::string out = "V,n_numeric,n_gfpe_quad,n_gfpe_closed,n_fpe\n";
    for (std::size_t i = 0; i < r.v.size(); ++i) {
        out += format_number(r.v[i]) + ',' + format_number(r.numeric[i]) + ',' + format_number(r.gfpe_quad[i]) + ',';
        if (r.gfpe_closed)
            out += format_number((*r.gfpe_closed)[i]);
        out += ',' + format_number(r.fpe[i]) + '\n';
    }
    return out;
}

namespace detail {

inline void kv(std::string& out, const std::string& key, const std::string& value)
{
    out += key + ": " + value + '\n';
}

inline void kv_params(std::string& out, const Scenario& s)
{
    kv(out, "job", to_string(s.job));
    if (s.preset)
        kv(out, "preset", *s.preset);
    kv(out, "p", std::to_string(s.params.p));
    kv(out, "delta", format_number(s.params.delta));
    kv(out, "g", format_number(s.params.g));
    kv(out, "K", format_number(s.params.K));
    kv(out, "intensity", format_number(s.params.intensity));
}

inline void kv_fit(std::string& out, const std::string& key, const FitOutcome& fit)
{
    kv(out, key, fit.report ? format_number(fit.report->T) : "n/a (" + fit.error + ")");
}

inline const char* flag(bool b) { return b ? "true" : "false"; }

inline void kv_regime(std::string& out, const RegimeDiagnostics& d)
{
    kv(out, "g_over_K", format_number(d.g_over_K));
    kv(out, "flag_fpe_invalid", flag(d.fpe_invalid));
    kv(out, "flag_sub_recoil", flag(d.sub_recoil));
    kv(out, "flag_saturation", flag(d.saturation));
    kv(out, "flag_non_cooling", flag(d.non_cooling));
}

} // namespace detail

inline std::string steady_summary(const SteadyReport& r)
{
    std::string out;
    detail::kv_params(out, r.scenario);
    const auto& grid = r.v;
    detail::kv(out, "grid_nodes", std::to_string(grid.size()));
    detail::kv(out, "grid_v_max", format_number(grid.back()));
    detail::kv(out, "fit_method", to_string(r.scenario.fit.method));
    detail::kv(out, "fit_window", format_number(r.scenario.fit.window_factor * std::abs(r.scenario.params.delta)
                                                / r.scenario.params.K));
    detail::kv_fit(out, "T_numeric", r.fit_numeric);
    detail::kv_fit(out, "T_gfpe", r.fit_gfpe);
    detail::kv_fit(out, "T_fpe", r.fit_fpe);
    detail::kv(out, "T_gfpe_formula", r.T_gfpe_formula ? format_number(*r.T_gfpe_formula) : "n/a");
    detail::kv(out, "T_fpe_formula", r.T_fpe_formula ? format_number(*r.T_fpe_formula) : "n/a");
    detail::kv(out, "solver_method", to_string(r.solver.method));
    detail::kv(out, "solver_residual", format_number(r.solver.residual));
    detail::kv(out, "leakage", format_number(r.solver.leakage));
    detail::kv(out, "sublattices", std::to_string(r.solver.classes));
    detail::kv(out, "closed_form", r.closed_status);
    if (r.closed_check)
        detail::kv(out, "closed_form_max_rel_dev", format_number(r.closed_check->max_rel_dev));
    detail::kv_regime(out, r.regime);
    return out;
}

struct SweepRow {
    double delta = 0.0;
    std::optional<double> T_numeric, T_gfpe, T_fpe;
};

struct SweepReport {
    Scenario scenario;
    std::vector<SweepRow> rows;  // ascending delta
};

inline SweepRow sweep_point(const Scenario& scenario, double delta)
{
    SweepRow row;
    row.delta = delta;
    CoolingParams params = scenario.params;
    params.delta = delta;
    const auto grid = scenario.velocity_grid_for(params);
    const auto v = grid.nodes();
    const auto gen = build_eliminated_generator(kernel_params(params), grid);
    const auto steady = steady_state(gen, SteadyMethod::null_space);
    row.T_numeric = try_fit(v, steady.distribution, params, scenario.fit).T();
    try {
        row.T_gfpe = temperature_gfpe(params);
    } catch (const RegimeError&) {
    }
    try {
        row.T_fpe = temperature_fpe(params);
    } catch (const RegimeError&) {
    }
    return row;
}

// Points are independent; results are collected by index and written in order,
// so the output does not depend on the worker count.
inline SweepReport run_sweep(const Scenario& scenario, unsigned workers = 1)
{
    validate(scenario);
    if (!scenario.sweep)
        throw ScenarioError("sweep job requires a sweep block");
    const auto& spec = *scenario.sweep;
    SweepReport report;
    report.scenario = scenario;
    report.rows.resize(static_cast<std::size_t>(spec.steps));

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(report.rows.size());
    auto work = [&] {
        for (std::size_t i = next++; i < report.rows.size(); i = next++) {
            try {
                report.rows[i] = sweep_point(scenario, spec.delta_at(static_cast<int>(i)));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(report.rows.size())));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return report;
}

inline std::string sweep_csv(const SweepReport& r)
{
    std::string out = "delta,T_numeric,T_gfpe,T_fpe\n";
    for (const auto& row : r.rows)
        out += format_number(row.delta) + ',' + format_optional(row.T_numeric) + ',' + format_optional(row.T_gfpe)
               + ',' + format_optional(row.T_fpe) + '\n';
    return out;
}

// Row index minimizing a column, ignoring empty cells.
template <class Member>
std::optional<std::size_t> sweep_argmin(const SweepReport& r, Member member)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& cell = r.rows[i].*member;
        if (cell && (!best || *cell < *(r.rows[*best].*member)))
            best = i;
    }
    return best;
}

inline std::string sweep_summary(const SweepReport& r)
{
    std::string out;
    detail::kv_params(out, r.scenario);
    detail::kv(out, "delta_min", format_number(r.scenario.sweep->delta_min));
    detail::kv(out, "delta_max", format_number(r.scenario.sweep->delta_max));
    detail::kv(out, "steps", std::to_string(r.scenario.sweep->steps));
    detail::kv(out, "fit_method", to_string(r.scenario.fit.method));
    auto report_min = [&](const std::string& name, std::optional<double> SweepRow::*member) {
        const auto i = sweep_argmin(r, member);
        detail::kv(out, "argmin_delta_" + name, i ? format_number(r.rows[*i].delta) : "n/a");
        detail::kv(out, "min_" + name, i ? format_number(*(r.rows[*i].*member)) : "n/a");
    };
    report_min("T_numeric", &SweepRow::T_numeric);
    report_min("T_gfpe", &SweepRow::T_gfpe);
    report_min("T_fpe", &SweepRow::T_fpe);
    std::size_t failed = 0;
    for (const auto& row : r.rows)
        failed += row.T_numeric ? 0 : 1;
    detail::kv(out, "numeric_fit_failures", std::to_string(failed));
    return out;
}

struct EvolveRow {
    double t = 0.0;
    std::optional<double> T_fit;
    double mass = 0.0;
    double lost = 0.0;
};

struct EvolveReport {
    Scenario scenario;
    std::vector<EvolveRow> rows;
    DistributionState final_state;
};

inline EvolveReport run_evolve(const Scenario& scenario)
{
    validate(scenario);
    if (!scenario.evolve)
        throw ScenarioError("evolve job requires an evolve block");
    const auto& spec = *scenario.evolve;
    const auto& params = scenario.params;
    const auto grid = scenario.velocity_grid();
    const auto v = grid.nodes();
    const auto gen = build_generator(spec.dynamics, params, grid);
    const double h = grid.spacing();

    EvolveReport report;
    report.scenario = scenario;
    auto state = hot_start(params, grid, spec.dynamics);
    auto record = [&](const DistributionState& s) {
        EvolveRow row;
        row.t = s.time;
        row.T_fit = try_fit(v, s.ground, params, scenario.fit).T();
        row.mass = s.mass(h);
        row.lost = s.lost;
        report.rows.push_back(row);
    };
    record(state);
    const auto samples = static_cast<std::size_t>(std::ceil(spec.duration / spec.sample_interval - 1e-9));
    for (std::size_t k = 1; k <= samples; ++k) {
        const double target = std::min(spec.duration, static_cast<double>(k) * spec.sample_interval);
        state = evolve(std::move(state), gen, target - state.time);
        state.time = target;
        record(state);
    }
    report.final_state = std::move(state);
    return report;
}

inline std::string evolve_csv(const EvolveReport& r)
{
    std::string out = "t,T_fit,mass,lost\n";
    for (const auto& row : r.rows)
        out += format_number(row.t) + ',' + format_optional(row.T_fit) + ',' + format_number(row.mass) + ','
               + format_number(row.lost) + '\n';
    return out;
}

inline std::string evolve_summary(const EvolveReport& r)
{
    std::string out;
    detail::kv_params(out, r.scenario);
    detail::kv(out, "duration", format_number(r.scenario.evolve->duration));
    detail::kv(out, "samples", std::to_string(r.rows.size()));
    detail::kv(out, "dynamics", detail::to_string(r.scenario.evolve->dynamics));
    detail::kv(out, "T_initial", format_optional(r.rows.front().T_fit));
    detail::kv(out, "T_final", format_optional(r.rows.back().T_fit));
    detail::kv(out, "mass_final", format_number(r.rows.back().mass));
    detail::kv(out, "lost_final", format_number(r.rows.back().lost));
    return out;
}

inline std::string presets_table()
{
    std::string out = "name                 p  K          v_r (m/s)  T_r (K)    omega0 (rad/s)\n";
    for (const auto& preset : element_presets()) {
        char line[160];
        std::snprintf(line, sizeof line, "%-20s %-2d %-10.3g %-10.3g %-10.3g %.3g\n", preset.name.c_str(),
                      preset.default_p, preset.K, preset.vr, preset.Tr, preset.omega0);
        out += line;
    }
    return out;
}

} // namespace sharpcool
