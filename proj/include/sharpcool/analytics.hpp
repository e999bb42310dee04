#pragma once

// Generalized and standard Fokker-Planck steady states.
//
// The zero-flux steady state of dn/dt = d(f1 n)/dV + d^2(f2 n)/dV^2 is
//     n(V) = exp(-I(V)) / f2(V),   I(V) = int_0^V f1/f2 dV'.
// One-photon results come from the same code path with Gamma_0 = 0.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sharpcool/errors.hpp"
#include "sharpcool/model.hpp"

namespace sharpcool {

enum class CoefficientModel { gfpe, fpe_limit };

// dGamma_{-1}/dV at V = 0.
inline double minus_rate_slope_at_zero(const CoolingParams& params)
{
    const double D = params.lorentz_width();
    return 0.5 * params.g * params.intensity_power() * (-2.0 * params.delta * params.K) / (D * D);
}

class DriftDiffusion {
public:
    DriftDiffusion(const CoolingParams& params, CoefficientModel model)
        : params_(params), model_(model), doppler_free_(rate_doppler_free(params)),
          slope_(minus_rate_slope_at_zero(params)),
          flat_diffusion_(2.0 * rate_directional(0.0, Direction::minus, params) + 0.5 * doppler_free_)
    {
        params.validate();
    }

    CoefficientModel model() const noexcept { return model_; }
    const CoolingParams& params() const noexcept { return params_; }

    double drift(double V) const
    {
        if (model_ == CoefficientModel::fpe_limit)
            return 2.0 * V * slope_;
        return rate_directional(V, Direction::minus, params_) - rate_directional(V, Direction::plus, params_);
    }

    double diffusion(double V) const
    {
        if (model_ == CoefficientModel::fpe_limit)
            return flat_diffusion_;
        return rate_directional(V, Direction::minus, params_) + rate_directional(V, Direction::plus, params_)
               + 0.5 * doppler_free_;
    }

    double drift_ratio(double V) const { return drift(V) / diffusion(V); }

private:
    CoolingParams params_;
    CoefficientModel model_;
    double doppler_free_;
    double slope_;
    double flat_diffusion_;
};

inline DriftDiffusion drift_diffusion(const CoolingParams& params, CoefficientModel model)
{
    return DriftDiffusion(params, model);
}

inline constexpr double quadrature_tolerance = 1e-10;

// Unnormalized steady state exp(-int_0^V f1/f2) / f2(V) at each sample.
//
// The integral is accumulated outward from V = 0 over consecutive samples,
// each piece by adaptive Gauss-Kronrod; the running error estimate must stay
// below the absolute tolerance.
inline std::vector<double> steady_state_quadrature(const CoolingParams& params, CoefficientModel model,
                                                   std::span<const double> v_sample,
                                                   double tolerance = quadrature_tolerance)
{
    const DriftDiffusion dd(params, model);
    for (double V : v_sample)
        if (!(dd.diffusion(V) > 0.0))
            throw DomainError("diffusion coefficient must be positive on the sampled range");

    auto integrand = [&dd](double V) { return dd.drift_ratio(V); };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;

    std::vector<std::size_t> order(v_sample.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v_sample[a] < v_sample[b]; });

    std::vector<double> integral(v_sample.size(), 0.0);
    auto sweep = [&](auto first, auto last) {
        double prev = 0.0, acc = 0.0, err_acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const double V = v_sample[*it];
            if (V != prev) {
                double err = 0.0;
                acc += Quad::integrate(integrand, prev, V, 15, 1e-12, &err);
                err_acc += err;
                if (!std::isfinite(acc) || err_acc > tolerance)
                    throw QuadratureError("drift-ratio quadrature did not converge", V);
                prev = V;
            }
            integral[*it] = acc;
        }
    };
    const auto split = std::partition_point(order.begin(), order.end(),
                                            [&](std::size_t i) { return v_sample[i] < 0.0; });
    sweep(split, order.end());
    sweep(std::make_reverse_iterator(split), order.rend());

    std::vector<double> n(v_sample.size());
    for (std::size_t i = 0; i < v_sample.size(); ++i)
        n[i] = std::exp(-integral[i]) / dd.diffusion(v_sample[i]);
    return n;
}

// Constant set of the two-photon arctan closed form. `half_width` follows from
// integrating f1/f2 exactly; `full_width` is the same expression with the
// Lorentzian half-width g/2 replaced by g (a common transcription of it).
enum class ClosedFormConstants { half_width, full_width };

// Quantity under the square root; must be positive for the arctan form.
inline double closed_form_discriminant(const CoolingParams& params,
                                       ClosedFormConstants constants = ClosedFormConstants::half_width)
{
    const double d2 = params.delta * params.delta;
    const double g2 = params.g * params.g;
    if (constants == ClosedFormConstants::full_width)
        return 7.0 * d2 * d2 + 22.0 * d2 * g2 - g2 * g2;
    return 7.0 * d2 * d2 + 5.5 * d2 * g2 - g2 * g2 / 16.0;
}

// Closed-form GFPE steady state: arctan form for two photons, power law
// [D^2 + K^2 V^2 D]^(delta/K) / f2 for one photon. The exponent is taken
// relative to V = 0 so large |delta|/K neither overflows nor underflows;
// n(0) = 1 / f2(0).
inline std::vector<double> steady_state_closed_gfpe(const CoolingParams& params, std::span<const double> v_sample,
                                                    ClosedFormConstants constants = ClosedFormConstants::half_width)
{
    params.validate();
    const DriftDiffusion dd(params, CoefficientModel::gfpe);
    const double D = params.lorentz_width();
    const double d = params.delta, K = params.K, g = params.g;
    std::vector<double> n(v_sample.size());

    if (params.p == 1) {
        for (std::size_t i = 0; i < v_sample.size(); ++i) {
            const double V = v_sample[i];
            n[i] = std::exp(d / K * std::log1p(K * K * V * V / D)) / dd.diffusion(V);
        }
        return n;
    }

    const double disc = closed_form_discriminant(params, constants);
    if (!(disc > 0.0))
        throw RegimeError("closed-form GFPE invalid: discriminant is not positive (requires |delta| >~ g/10)");
    const double root = std::sqrt(disc);
    const bool full = constants == ClosedFormConstants::full_width;
    const double width_term = full ? d * d + g * g : D;
    const double shift = full ? -d * d + 3.0 * g * g : -d * d + 0.75 * g * g;
    const double amplitude = 2.0 * width_term * d / (K * root);
    const double at_rest = std::atan(shift / root);
    for (std::size_t i = 0; i < v_sample.size(); ++i) {
        const double V = v_sample[i];
        n[i] = std::exp(amplitude * (std::atan((2.0 * K * K * V * V + shift) / root) - at_rest)) / dd.diffusion(V);
    }
    return n;
}

struct ClosedFormCheck {
    double max_rel_dev = 0.0;
    bool consistent = false;
};

inline constexpr double closed_form_agreement = 1e-6;

// Compares the closed form against quadrature on |V| <= |delta|/K, both scaled
// to n(0) = 1. Inconsistency is reported, never hidden.
inline ClosedFormCheck check_closed_form(const CoolingParams& params,
                                         ClosedFormConstants constants = ClosedFormConstants::half_width,
                                         std::size_t samples = 201)
{
    const double window = std::abs(params.delta) / params.K;
    std::vector<double> v(samples);
    for (std::size_t i = 0; i < samples; ++i)
        v[i] = -window + 2.0 * window * static_cast<double>(i) / static_cast<double>(samples - 1);
    v.push_back(0.0);
    const auto closed = steady_state_closed_gfpe(params, v, constants);
    const auto quad = steady_state_quadrature(params, CoefficientModel::gfpe, v);
    const double c0 = closed.back(), q0 = quad.back();
    ClosedFormCheck check;
    for (std::size_t i = 0; i < samples; ++i) {
        const double a = closed[i] / c0, b = quad[i] / q0;
        check.max_rel_dev = std::max(check.max_rel_dev, std::abs(a - b) / b);
    }
    check.consistent = check.max_rel_dev <= closed_form_agreement;
    return check;
}

// Curvature temperature of the GFPE steady state at V = 0.
inline double temperature_gfpe(const CoolingParams& params)
{
    params.validate();
    const double d = params.delta, K = params.K, g = params.g;
    const double D = params.lorentz_width();
    if (!params.is_cooling())
        throw RegimeError("GFPE temperature undefined for non-cooling detuning (delta >= 0)");
    const double denom = K * (-d * d * d + 3.0 * K * d * d - (d + K) * g * g / 4.0);
    if (!(denom > 0.0))
        throw RegimeError("GFPE temperature undefined: non-positive denominator (non-cooling parameters)");
    const double two_photon = D * D / denom;
    return params.p == 2 ? two_photon : 0.5 * two_photon;
}

// Doppler temperature of the standard FPE Gaussian.
inline double temperature_fpe(const CoolingParams& params)
{
    params.validate();
    if (params.delta == 0.0)
        throw RegimeError("FPE temperature singular at zero detuning");
    const double two_photon = params.lorentz_width() / (params.K * std::abs(params.delta));
    return params.p == 2 ? two_photon : 0.5 * two_photon;
}

// Standard FPE steady state exp(-V^2 / (2 T')), already normalized to n(0) = 1.
inline std::vector<double> fpe_gaussian(const CoolingParams& params, std::span<const double> v_sample)
{
    const double T = temperature_fpe(params);
    std::vector<double> n(v_sample.size());
    for (std::size_t i = 0; i < v_sample.size(); ++i)
        n[i] = std::exp(-v_sample[i] * v_sample[i] / (2.0 * T));
    return n;
}

} // namespace sharpcool
