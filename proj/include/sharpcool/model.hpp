#pragma once

// Dimensionless cooling model: rates are in units of the wide-level linewidth
// Gamma_w (== 1), velocities in recoil velocities v_r, temperatures in T_r.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "sharpcool/errors.hpp"

namespace sharpcool {

enum class Direction : int { minus = -1, plus = +1 };

struct CoolingParams {
    int p = 2;              // photon order, 1 or 2
    double delta = -1.0;    // detuning in Gamma_w units, negative for cooling
    double g = 0.2;         // quenching ratio Gamma_q / (Gamma_q + Gamma_w)
    double K = 0.26;        // k0 v_r / Gamma_w
    double intensity = 1.0; // I / I_s

    void validate() const
    {
        if (p != 1 && p != 2)
            throw DomainError("photon order p must be 1 or 2");
        if (!(g > 0.0 && g < 1.0))
            throw DomainError("quenching ratio g must lie in (0, 1)");
        if (!(K > 0.0) || !std::isfinite(K))
            throw DomainError("recoil Doppler parameter K must be positive");
        // Zero intensity is accepted so frozen dynamics can be exercised.
        if (!(intensity >= 0.0) || !std::isfinite(intensity))
            throw DomainError("intensity must be non-negative");
        if (!std::isfinite(delta))
            throw DomainError("detuning must be finite");
    }

    bool is_cooling() const noexcept { return delta < 0.0; }

    // delta^2 + g^2/4, the Lorentzian denominator at V = 0.
    double lorentz_width() const noexcept { return delta * delta + 0.25 * g * g; }

    double intensity_power() const noexcept { return p == 2 ? intensity * intensity : intensity; }
};

// Gamma' = Gamma_q / (Gamma_q + 1), the effective linewidth produced by quenching.
inline double effective_linewidth(double gamma_q)
{
    if (!(gamma_q >= 0.0))
        throw DomainError("quenching rate must be non-negative");
    if (std::isinf(gamma_q))
        return 1.0;
    return gamma_q / (gamma_q + 1.0);
}

// Absorption rate from the "+" (sign = plus) or "-" wave at normalized velocity V.
inline double rate_directional(double V, Direction sign, const CoolingParams& params)
{
    const double s = static_cast<int>(sign);
    const double detuned = params.delta - s * params.K * V;
    return 0.5 * params.g * params.intensity_power() / (detuned * detuned + 0.25 * params.g * params.g);
}

// Velocity-insensitive two-photon rate; identically zero for one-photon transitions.
inline double rate_doppler_free(const CoolingParams& params)
{
    if (params.p == 1)
        return 0.0;
    return 2.0 * params.g * (params.p - 1) * params.intensity_power() / params.lorentz_width();
}

struct RegimeDiagnostics {
    double g_over_K = 0.0;
    bool fpe_invalid = false;   // g < 10 K: recoil-limited, standard FPE unreliable
    bool sub_recoil = false;    // |delta| < g/2: no well-defined cold peak
    bool saturation = false;    // intensity > 0.1: adiabatic elimination questionable
    bool non_cooling = false;   // delta >= 0
};

inline constexpr double fpe_validity_factor = 10.0;
inline constexpr double saturation_threshold = 0.1;

inline RegimeDiagnostics regime_diagnostics(const CoolingParams& params)
{
    params.validate();
    RegimeDiagnostics d;
    d.g_over_K = params.g / params.K;
    d.fpe_invalid = params.g < fpe_validity_factor * params.K;
    d.sub_recoil = std::abs(params.delta) < 0.5 * params.g;
    d.saturation = params.intensity > saturation_threshold;
    d.non_cooling = !params.is_cooling();
    return d;
}

struct ElementPreset {
    std::string name;
    double omega0;  // transition angular frequency, rad/s
    double vr;      // recoil velocity, m/s
    double Tr;      // recoil temperature, K
    double K;
    int default_p;
};

inline constexpr double two_pi = 6.283185307179586;

inline const std::array<ElementPreset, 2>& element_presets()
{
    static const std::array<ElementPreset, 2> presets{{
        {"hydrogen-1s2s", two_pi * 2.5e15, 3.1, 1.2e-3, 0.26, 2},
        {"strontium-1s0-3p1", two_pi * 4.4e14, 7.0e-3, 0.53e-6, 3.2e-4, 1},
    }};
    return presets;
}

inline std::optional<ElementPreset> find_preset(std::string_view name)
{
    for (const auto& preset : element_presets())
        if (preset.name == name)
            return preset;
    return std::nullopt;
}

} // namespace sharpcool
