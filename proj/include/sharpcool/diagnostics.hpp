#pragma once

// Temperature extraction and curve comparison on sampled distributions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sharpcool/errors.hpp"
#include "sharpcool/model.hpp"

namespace sharpcool {

inline constexpr double zero_node_tolerance = 1e-12;

inline std::size_t find_zero_node(std::span<const double> v)
{
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) <= zero_node_tolerance)
            return i;
    throw DomainError("distribution has no V = 0 node");
}

// Rescale so that n(V = 0) = 1.
inline std::vector<double> normalize_peak(std::span<const double> v, std::span<const double> n)
{
    if (v.size() != n.size())
        throw DomainError("velocity and density samples differ in length");
    const double n0 = n[find_zero_node(v)];
    if (!(n0 > 0.0))
        throw DomainError("density at V = 0 must be positive to normalize");
    std::vector<double> out(n.begin(), n.end());
    for (auto& x : out)
        x /= n0;
    return out;
}

// gaussian_peak: least squares of exp(-V^2 / 2T) against the peak-normalized
// density (one free parameter). log_linear: unweighted least squares of ln n
// against V^2 with a free intercept.
enum class FitMethod { gaussian_peak, log_linear };

inline const char* to_string(FitMethod m) { return m == FitMethod::gaussian_peak ? "gaussian-peak" : "log-linear"; }

struct FitOptions {
    double window_factor = 1.0;        // window = window_factor * |delta| / K
    FitMethod method = FitMethod::gaussian_peak;
    double floor = 1e-6;               // nodes below floor * n(0) are excluded
};

struct TemperatureReport {
    double T = 0.0;
    double window = 0.0;
    int points_used = 0;
    double rms_residual = 0.0;  // ln n for log-linear, n for gaussian-peak
    std::string method;
};

inline constexpr int min_fit_points = 5;

namespace detail {

struct FitSample {
    std::vector<double> x2;  // V^2
    std::vector<double> y;   // n / n(0)
};

inline double log_linear_slope(const FitSample& s, double& intercept)
{
    const auto k = static_cast<double>(s.x2.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < s.x2.size(); ++i) {
        const double ly = std::log(s.y[i]);
        sx += s.x2[i];
        sy += ly;
        sxx += s.x2[i] * s.x2[i];
        sxy += s.x2[i] * ly;
    }
    const double denom = k * sxx - sx * sx;
    if (!(denom > 0.0))
        throw DomainError("fit window does not resolve any curvature");
    const double slope = (k * sxy - sx * sy) / denom;
    intercept = (sy - slope * sx) / k;
    return slope;
}

// Gauss-Newton in the decay rate a = 1/(2T), with step halving.
inline double gaussian_peak_rate(const FitSample& s, double a)
{
    auto cost = [&](double rate) {
        double c = 0.0;
        for (std::size_t i = 0; i < s.x2.size(); ++i) {
            const double r = s.y[i] - std::exp(-rate * s.x2[i]);
            c += r * r;
        }
        return c;
    };
    double current = cost(a);
    for (int iter = 0; iter < 200; ++iter) {
        double jr = 0.0, jj = 0.0;
        for (std::size_t i = 0; i < s.x2.size(); ++i) {
            const double e = std::exp(-a * s.x2[i]);
            const double J = s.x2[i] * e;  // d(residual)/da
            jr += J * (s.y[i] - e);
            jj += J * J;
        }
        if (jj == 0.0)
            break;
        double step = -jr / jj;
        double trial = a + step, trial_cost = cost(trial);
        int halvings = 0;
        while ((trial <= 0.0 || trial_cost > current) && halvings < 60) {
            step *= 0.5;
            trial = a + step;
            trial_cost = trial > 0.0 ? cost(trial) : current + 1.0;
            ++halvings;
        }
        if (halvings == 60)
            break;
        const bool done = std::abs(step) <= 1e-15 * a;
        a = trial;
        current = trial_cost;
        if (done)
            break;
    }
    return a;
}

} // namespace detail

// Gaussian temperature of the cold central peak, |V| <= window_factor |delta| / K.
inline TemperatureReport fit_temperature(std::span<const double> v, std::span<const double> n,
                                         const CoolingParams& params, const FitOptions& options = {})
{
    if (!(options.window_factor > 0.0 && options.window_factor <= 1.0))
        throw DomainError("window factor must lie in (0, 1]");
    const auto y = normalize_peak(v, n);
    const double window = options.window_factor * std::abs(params.delta) / params.K;

    detail::FitSample s;
    int in_window = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > window * (1.0 + 1e-12))
            continue;
        ++in_window;
        if (y[i] < options.floor)
            continue;
        s.x2.push_back(v[i] * v[i]);
        s.y.push_back(y[i]);
    }
    if (in_window < min_fit_points)
        throw DomainError("fit window contains fewer than " + std::to_string(min_fit_points) + " grid nodes");
    if (static_cast<int>(s.x2.size()) < min_fit_points)
        throw SolverError("too few nodes above the density floor in the fit window");

    double intercept = 0.0;
    const double slope = detail::log_linear_slope(s, intercept);
    if (!(slope < 0.0))
        throw SolverError("no cold peak: fitted Gaussian curvature is not negative");

    TemperatureReport report;
    report.window = window;
    report.points_used = static_cast<int>(s.x2.size());
    report.method = to_string(options.method);

    double sq = 0.0;
    if (options.method == FitMethod::log_linear) {
        report.T = -1.0 / (2.0 * slope);
        for (std::size_t i = 0; i < s.x2.size(); ++i) {
            const double r = std::log(s.y[i]) - (intercept + slope * s.x2[i]);
            sq += r * r;
        }
    } else {
        const double a = detail::gaussian_peak_rate(s, -slope);
        if (!(a > 0.0))
            throw SolverError("no cold peak: Gaussian fit rate is not positive");
        report.T = 1.0 / (2.0 * a);
        for (std::size_t i = 0; i < s.x2.size(); ++i) {
            const double r = s.y[i] - std::exp(-a * s.x2[i]);
            sq += r * r;
        }
    }
    report.rms_residual = std::sqrt(sq / static_cast<double>(s.x2.size()));
    return report;
}

struct ComparisonMetrics {
    double max_rel_dev = 0.0;  // max |a - b| / b
    double max_abs_dev = 0.0;  // max |a - b|, i.e. relative to the unit peak
    double L1 = 0.0;           // sum |a - b| dV
};

// Compares two peak-normalized curves sampled on the same velocities over |V| <= window.
inline ComparisonMetrics compare_distributions(std::span<const double> v_a, std::span<const double> a,
                                               std::span<const double> v_b, std::span<const double> b,
                                               double window)
{
    if (v_a.size() != v_b.size() || a.size() != v_a.size() || b.size() != v_b.size())
        throw DomainError("grid mismatch between compared distributions");
    for (std::size_t i = 0; i < v_a.size(); ++i)
        if (std::abs(v_a[i] - v_b[i]) > zero_node_tolerance)
            throw DomainError("grid mismatch between compared distributions");

    ComparisonMetrics m;
    for (std::size_t i = 0; i < v_a.size(); ++i) {
        if (std::abs(v_a[i]) > window * (1.0 + 1e-12))
            continue;
        const double diff = std::abs(a[i] - b[i]);
        const double spacing = v_a.size() < 2 ? 0.0 : i + 1 < v_a.size() ? v_a[i + 1] - v_a[i] : v_a[i] - v_a[i - 1];
        m.max_abs_dev = std::max(m.max_abs_dev, diff);
        if (b[i] > 0.0)
            m.max_rel_dev = std::max(m.max_rel_dev, diff / b[i]);
        else if (diff > 0.0)
            m.max_rel_dev = std::numeric_limits<double>::infinity();
        m.L1 += diff * spacing;
    }
    return m;
}

inline ComparisonMetrics compare_distributions(std::span<const double> v, std::span<const double> a,
                                               std::span<const double> b, double window)
{
    return compare_distributions(v, a, v, b, window);
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

// Node-weighted mean and central second moment. The variance includes the hot
// background and therefore exceeds the fitted peak temperature whenever one is present.
inline Moments moments(std::span<const double> v, std::span<const double> n)
{
    if (v.size() != n.size())
        throw DomainError("velocity and density samples differ in length");
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        m0 += n[i];
        m1 += n[i] * v[i];
    }
    if (!(m0 > 0.0))
        throw DomainError("distribution has no mass");
    Moments out;
    out.mean = m1 / m0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        m2 += n[i] * (v[i] - out.mean) * (v[i] - out.mean);
    out.variance = m2 / m0;
    return out;
}

} // namespace sharpcool
