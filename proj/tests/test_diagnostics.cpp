#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sharpcool/analytics.hpp"
#include "sharpcool/diagnostics.hpp"
#include "sharpcool/kinetics.hpp"

using namespace sharpcool;

namespace {

CoolingParams figure2() { return CoolingParams{2, -1.0, 0.2, 0.26, 1.0}; }

std::vector<double> gaussian(const std::vector<double>& v, double T, double amplitude = 1.0)
{
    std::vector<double> n(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        n[i] = amplitude * std::exp(-v[i] * v[i] / (2.0 * T));
    return n;
}

std::vector<double> figure2_numeric(const VelocityGrid& grid)
{
    return steady_state(build_eliminated_generator(figure2(), grid)).distribution;
}

} // namespace

TEST(NormalizePeak, Examples)
{
    const auto v = VelocityGrid(3.0, 2).nodes();
    const std::vector<double> flat(v.size(), 4.0);
    for (double x : normalize_peak(v, flat))
        EXPECT_EQ(x, 1.0);

    const auto g5 = gaussian(v, 2.0, 5.0);
    const auto once = normalize_peak(v, g5);
    EXPECT_EQ(once[find_zero_node(v)], 1.0);
    const auto twice = normalize_peak(v, once);
    EXPECT_EQ(once, twice);
}

TEST(NormalizePeak, Errors)
{
    const std::vector<double> v{-1.0, -0.5, 0.5, 1.0};
    EXPECT_THROW(normalize_peak(v, std::vector<double>(4, 1.0)), DomainError);
    const std::vector<double> w{-1.0, 0.0, 1.0};
    EXPECT_THROW(normalize_peak(w, std::vector<double>{1.0, 0.0, 1.0}), DomainError);
    EXPECT_THROW(normalize_peak(w, std::vector<double>{1.0, 1.0}), DomainError);
}

TEST(FitTemperature, ExactGaussian)
{
    const auto v = VelocityGrid(15.0, 20).nodes();
    const auto n = gaussian(v, 3.0);
    for (auto method : {FitMethod::gaussian_peak, FitMethod::log_linear}) {
        const auto r = fit_temperature(v, n, figure2(), FitOptions{1.0, method});
        EXPECT_NEAR(r.T, 3.0, 1e-12);
        EXPECT_LE(r.rms_residual, 1e-12);
        EXPECT_GE(r.points_used, min_fit_points);
        EXPECT_NEAR(r.window, 1.0 / 0.26, 1e-12);
        EXPECT_EQ(r.method, to_string(method));
    }
}

TEST(FitTemperature, FpeGaussianGivesFormula)
{
    for (double delta : {-0.15, -0.5, -1.0, -2.0}) {
        auto params = figure2();
        params.delta = delta;
        const auto v = VelocityGrid::for_params(params).nodes();
        const auto r = fit_temperature(v, fpe_gaussian(params, v), params);
        EXPECT_NEAR(r.T / temperature_fpe(params), 1.0, 1e-6);
    }
}

TEST(FitTemperature, WindowShrinkOnPureGaussian)
{
    const auto v = VelocityGrid(15.0, 20).nodes();
    const auto n = gaussian(v, 2.5);
    const double wide = fit_temperature(v, n, figure2(), FitOptions{1.0}).T;
    const double narrow = fit_temperature(v, n, figure2(), FitOptions{0.5}).T;
    EXPECT_LT(std::abs(wide - narrow) / wide, 1e-6);
}

TEST(FitTemperature, WindowShrinkOnNumericSteadyState)
{
    const auto grid = VelocityGrid::for_params(figure2());
    const auto v = grid.nodes();
    const auto n = figure2_numeric(grid);
    const double wide = fit_temperature(v, n, figure2(), FitOptions{1.0}).T;
    const double narrow = fit_temperature(v, n, figure2(), FitOptions{0.5}).T;
    EXPECT_LT(std::abs(wide - narrow) / wide, 0.10) << "T(1.0)=" << wide << " T(0.5)=" << narrow;
}

TEST(FitTemperature, RescaleAndReflectionInvariant)
{
    const auto grid = VelocityGrid::for_params(figure2());
    const auto v = grid.nodes();
    auto n = figure2_numeric(grid);
    // break the exact mirror symmetry so reflection is a real check
    for (std::size_t i = 0; i < n.size(); ++i)
        n[i] *= 1.0 + 0.05 * std::tanh(v[i]);
    for (auto method : {FitMethod::gaussian_peak, FitMethod::log_linear}) {
        const FitOptions opts{1.0, method};
        const double T = fit_temperature(v, n, figure2(), opts).T;
        auto scaled = n;
        for (auto& x : scaled)
            x *= 37.5;
        std::vector<double> reflected(n.rbegin(), n.rend());
        EXPECT_NEAR(fit_temperature(v, scaled, figure2(), opts).T, T, 1e-12 * T);
        EXPECT_NEAR(fit_temperature(v, reflected, figure2(), opts).T, T, 1e-12 * T);
    }
}

TEST(FitTemperature, NoColdPeak)
{
    const auto v = VelocityGrid(15.0, 20).nodes();
    std::vector<double> dip(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        dip[i] = 1.0 + v[i] * v[i];
    try {
        fit_temperature(v, dip, figure2());
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("no cold peak"), std::string::npos);
    }
}

TEST(FitTemperature, WindowTooNarrow)
{
    const auto v = VelocityGrid(15.0, 1).nodes();
    auto narrow = figure2();
    narrow.delta = -0.5;  // window 1.9: three nodes
    EXPECT_THROW(fit_temperature(v, gaussian(v, 3.0), narrow), DomainError);
    const auto fine = VelocityGrid(15.0, 20).nodes();
    EXPECT_THROW(fit_temperature(fine, gaussian(fine, 3.0), figure2(), FitOptions{1.5}), DomainError);
    EXPECT_THROW(fit_temperature(fine, gaussian(fine, 3.0), figure2(), FitOptions{0.0}), DomainError);
}

TEST(FitTemperature, FloorExcludesTail)
{
    const auto v = VelocityGrid(15.0, 20).nodes();
    auto params = figure2();
    params.K = 0.05;  // window of 20 recoils, wider than the grid
    const auto n = gaussian(v, 0.5);
    const auto r = fit_temperature(v, n, params, FitOptions{1.0, FitMethod::log_linear});
    EXPECT_NEAR(r.T, 0.5, 1e-10);
    EXPECT_LT(r.points_used, static_cast<int>(v.size()));
}

TEST(Compare, IdenticalIsZero)
{
    const auto v = VelocityGrid(5.0, 4).nodes();
    const auto a = gaussian(v, 2.0);
    const auto m = compare_distributions(v, a, a, 3.0);
    EXPECT_EQ(m.max_rel_dev, 0.0);
    EXPECT_EQ(m.max_abs_dev, 0.0);
    EXPECT_EQ(m.L1, 0.0);
}

TEST(Compare, KnownDifference)
{
    const auto v = VelocityGrid(5.0, 4).nodes();
    const auto a = gaussian(v, 2.0);
    auto b = a;
    for (auto& x : b)
        x *= 0.5;
    const auto m = compare_distributions(v, a, b, 3.0);
    EXPECT_NEAR(m.max_rel_dev, 1.0, 1e-12);
    EXPECT_NEAR(m.max_abs_dev, 0.5, 1e-12);
    const auto wide = compare_distributions(v, a, b, 100.0);
    EXPECT_GT(wide.L1, m.L1);
}

TEST(Compare, GridMismatch)
{
    const auto v = VelocityGrid(5.0, 4).nodes();
    const auto w = VelocityGrid(5.0, 2).nodes();
    const auto a = gaussian(v, 2.0);
    const auto b = gaussian(w, 2.0);
    EXPECT_THROW(compare_distributions(v, a, w, b, 1.0), DomainError);
    auto shifted = v;
    shifted[3] += 0.01;
    EXPECT_THROW(compare_distributions(v, a, shifted, a, 1.0), DomainError);
}

TEST(Moments, SymmetricAndGaussian)
{
    const auto v = VelocityGrid(40.0, 20).nodes();
    const auto m = moments(v, gaussian(v, 3.0, 7.0));
    EXPECT_NEAR(m.mean, 0.0, 1e-10);
    EXPECT_NEAR(m.variance / 3.0, 1.0, 1e-3);
    EXPECT_THROW(moments(v, std::vector<double>(v.size(), 0.0)), DomainError);
}

TEST(Moments, HotBackgroundWidensVariance)
{
    const auto grid = VelocityGrid::for_params(figure2());
    const auto v = grid.nodes();
    const auto n = figure2_numeric(grid);
    const auto m = moments(v, n);
    EXPECT_NEAR(m.mean, 0.0, 1e-10);
    EXPECT_GT(m.variance, fit_temperature(v, n, figure2()).T);
}
