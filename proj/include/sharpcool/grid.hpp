#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "sharpcool/errors.hpp"
#include "sharpcool/model.hpp"

namespace sharpcool {

// Uniform velocity grid V_i = -v_max + i/m. The spacing divides the recoil
// shift exactly, so a jump of k recoils is an offset of k*m nodes.
class VelocityGrid {
public:
    static constexpr int default_points_per_recoil = 20;
    static constexpr int default_min_half_width = 15;

    VelocityGrid(double v_max, int points_per_recoil)
        : m_(points_per_recoil)
    {
        if (points_per_recoil < 1)
            throw DomainError("points per recoil must be a positive integer");
        if (!(v_max > 0.0) || !std::isfinite(v_max))
            throw DomainError("grid half-width must be positive");
        const double half = v_max * points_per_recoil;
        half_nodes_ = static_cast<std::ptrdiff_t>(std::llround(half));
        if (std::abs(half - static_cast<double>(half_nodes_)) > 1e-9 * std::max(1.0, half))
            throw DomainError("grid half-width must be a multiple of the node spacing");
    }

    // max(15, ceil(3 |delta| / K)) recoils of half-width.
    static double default_half_width(const CoolingParams& params)
    {
        const double wide = std::ceil(3.0 * std::abs(params.delta) / params.K - 1e-12);
        return std::max<double>(default_min_half_width, wide);
    }

    static VelocityGrid for_params(const CoolingParams& params, std::optional<double> v_max = std::nullopt,
                                   int points_per_recoil = default_points_per_recoil)
    {
        return VelocityGrid(v_max.value_or(default_half_width(params)), points_per_recoil);
    }

    double v_max() const noexcept { return static_cast<double>(half_nodes_) / m_; }
    int points_per_recoil() const noexcept { return m_; }
    double spacing() const noexcept { return 1.0 / m_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(2 * half_nodes_ + 1); }
    std::size_t zero_index() const noexcept { return static_cast<std::size_t>(half_nodes_); }

    double node(std::size_t i) const noexcept
    {
        return static_cast<double>(static_cast<std::ptrdiff_t>(i) - half_nodes_) / m_;
    }

    std::vector<double> nodes() const
    {
        std::vector<double> v(size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = node(i);
        return v;
    }

    std::ptrdiff_t recoil_offset(int recoils) const noexcept { return static_cast<std::ptrdiff_t>(recoils) * m_; }

    // Index reached from i after a shift of `recoils`, or nullopt when it leaves the grid.
    std::optional<std::size_t> shifted(std::size_t i, int recoils) const noexcept
    {
        const auto j = static_cast<std::ptrdiff_t>(i) + recoil_offset(recoils);
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(size()))
            return std::nullopt;
        return static_cast<std::size_t>(j);
    }

    bool operator==(const VelocityGrid& other) const noexcept
    {
        return m_ == other.m_ && half_nodes_ == other.half_nodes_;
    }

private:
    int m_;
    std::ptrdiff_t half_nodes_ = 0;
};

} // namespace sharpcool
