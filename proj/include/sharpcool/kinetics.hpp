#pragma once

// Discrete-velocity master equations on a recoil-commensurate grid.
//
// Both generators are stored column-wise: every state lists its outgoing
// transitions, and transitions that would leave the grid go to an implicit
// "lost" state. The diagonal is the negated sum of the outgoing rates, built
// in the same order, so every column of [L; loss] sums to exactly zero.
//
// Kick convention: Gamma_{+1} is resonant at V = delta/K (negative for red
// detuning) and its absorption raises V by one recoil; Gamma_{-1} lowers it.
// With delta < 0 this is the damping direction.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sharpcool/errors.hpp"
#include "sharpcool/grid.hpp"
#include "sharpcool/model.hpp"

namespace sharpcool {

enum class Dynamics { full, eliminated };

// absorbing: out-of-grid jumps feed the lost accumulator.
// retaining: out-of-grid jumps are suppressed, giving a closed chain.
enum class Boundary { absorbing, retaining };

inline constexpr double negative_density_tolerance = 1e-12;

class Generator {
public:
    static constexpr std::size_t lost = std::numeric_limits<std::size_t>::max();

    Generator(Dynamics dynamics, const VelocityGrid& grid, const CoolingParams& params)
        : dynamics_(dynamics), grid_(grid), params_(params),
          states_(dynamics == Dynamics::full ? 2 * grid.size() : grid.size())
    {
        begin_.reserve(states_ + 1);
        begin_.push_back(0);
    }

    Dynamics dynamics() const noexcept { return dynamics_; }
    const VelocityGrid& grid() const noexcept { return grid_; }
    const CoolingParams& params() const noexcept { return params_; }
    std::size_t size() const noexcept { return states_; }

    // Builder interface, used by the build_* functions. Columns are added in order.
    void add(std::size_t target, double rate)
    {
        if (rate == 0.0)
            return;
        target_.push_back(target);
        rate_.push_back(rate);
    }
    void close_column()
    {
        const std::size_t first = begin_.back();
        double escape = 0.0, retained = 0.0, loss = 0.0;
        for (std::size_t k = first; k < target_.size(); ++k) {
            escape += rate_[k];
            if (target_[k] == lost)
                loss += rate_[k];
            else
                retained += rate_[k];
        }
        escape_.push_back(escape);
        escape_retained_.push_back(retained);
        loss_.push_back(loss);
        begin_.push_back(target_.size());
    }

    // dx/dt = L x.
    void apply(std::span<const double> x, std::span<double> y, Boundary boundary = Boundary::absorbing) const
    {
        const auto& diag = boundary == Boundary::absorbing ? escape_ : escape_retained_;
        for (std::size_t i = 0; i < states_; ++i)
            y[i] = -diag[i] * x[i];
        for (std::size_t j = 0; j < states_; ++j) {
            const double xj = x[j];
            if (xj == 0.0)
                continue;
            for (std::size_t k = begin_[j]; k < begin_[j + 1]; ++k)
                if (target_[k] != lost)
                    y[target_[k]] += rate_[k] * xj;
        }
    }

    std::vector<double> apply(std::span<const double> x, Boundary boundary = Boundary::absorbing) const
    {
        std::vector<double> y(states_);
        apply(x, y, boundary);
        return y;
    }

    // Population per unit time crossing the grid boundary.
    double loss_flux(std::span<const double> x) const
    {
        double s = 0.0;
        for (std::size_t j = 0; j < states_; ++j)
            s += loss_[j] * x[j];
        return s;
    }

    // Total transition flux out of all states (absorbing boundary).
    double total_flux(std::span<const double> x) const
    {
        double s = 0.0;
        for (std::size_t j = 0; j < states_; ++j)
            s += escape_[j] * x[j];
        return s;
    }

    // Sum of column j of L including the loss row.
    double column_sum(std::size_t j) const
    {
        double s = 0.0;
        for (std::size_t k = begin_[j]; k < begin_[j + 1]; ++k)
            s += rate_[k];
        return s - escape_[j];
    }

    double max_column_sum_defect() const
    {
        double worst = 0.0;
        for (std::size_t j = 0; j < states_; ++j)
            worst = std::max(worst, std::abs(column_sum(j)));
        return worst;
    }

    double max_rate() const
    {
        return escape_.empty() ? 0.0 : *std::max_element(escape_.begin(), escape_.end());
    }

    double escape_rate(std::size_t j, Boundary boundary = Boundary::absorbing) const
    {
        return boundary == Boundary::absorbing ? escape_[j] : escape_retained_[j];
    }
    double loss_rate(std::size_t j) const { return loss_[j]; }

    // Entry L(i, j) of the generator.
    double entry(std::size_t i, std::size_t j, Boundary boundary = Boundary::absorbing) const
    {
        double v = i == j ? -escape_rate(j, boundary) : 0.0;
        for (std::size_t k = begin_[j]; k < begin_[j + 1]; ++k)
            if (target_[k] == i)
                v += rate_[k];
        return v;
    }

    // Connected components of the transition graph (in-grid transitions only).
    std::vector<std::vector<std::size_t>> communicating_classes() const
    {
        std::vector<std::size_t> parent(states_);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t a) {
            while (parent[a] != a)
                a = parent[a] = parent[parent[a]];
            return a;
        };
        for (std::size_t j = 0; j < states_; ++j)
            for (std::size_t k = begin_[j]; k < begin_[j + 1]; ++k)
                if (target_[k] != lost) {
                    const auto a = find(j), b = find(target_[k]);
                    if (a != b)
                        parent[std::max(a, b)] = std::min(a, b);
                }
        std::vector<std::vector<std::size_t>> classes;
        std::vector<std::size_t> slot(states_, lost);
        for (std::size_t i = 0; i < states_; ++i) {
            const auto root = find(i);
            if (slot[root] == lost) {
                slot[root] = classes.size();
                classes.emplace_back();
            }
            classes[slot[root]].push_back(i);
        }
        return classes;
    }

    // Number of decoupled sublattices the jump structure produces on this grid:
    // m per recoil, doubled for one-photon dynamics where ground jumps are +-2.
    std::size_t sublattice_count() const noexcept
    {
        const auto m = static_cast<std::size_t>(grid_.points_per_recoil());
        return params_.p == 1 ? 2 * m : m;
    }

    Eigen::MatrixXd dense_block(std::span<const std::size_t> states, Boundary boundary) const
    {
        std::vector<std::size_t> local(states_, lost);
        for (std::size_t a = 0; a < states.size(); ++a)
            local[states[a]] = a;
        const auto n = static_cast<Eigen::Index>(states.size());
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t a = 0; a < states.size(); ++a) {
            const std::size_t j = states[a];
            const auto col = static_cast<Eigen::Index>(a);
            block(col, col) -= escape_rate(j, boundary);
            for (std::size_t k = begin_[j]; k < begin_[j + 1]; ++k)
                if (target_[k] != lost && local[target_[k]] != lost)
                    block(static_cast<Eigen::Index>(local[target_[k]]), col) += rate_[k];
        }
        return block;
    }

private:
    Dynamics dynamics_;
    VelocityGrid grid_;
    CoolingParams params_;
    std::size_t states_;
    std::vector<std::size_t> begin_;
    std::vector<std::size_t> target_;
    std::vector<double> rate_;
    std::vector<double> escape_;
    std::vector<double> escape_retained_;
    std::vector<double> loss_;
};

namespace detail {

inline void require_grid(const VelocityGrid& grid)
{
    if (grid.v_max() < 2.0)
        throw DomainError("velocity grid too small: half-width must be at least 2 recoils");
}

inline std::size_t target_or_lost(const VelocityGrid& grid, std::size_t i, int recoils, std::size_t base = 0)
{
    const auto j = grid.shifted(i, recoils);
    return j ? base + *j : Generator::lost;
}

} // namespace detail

// Ground/excited rate equations. State layout: [ground(0..n), excited(0..n)].
inline Generator build_full_generator(const CoolingParams& params, const VelocityGrid& grid)
{
    params.validate();
    detail::require_grid(grid);
    Generator gen(Dynamics::full, grid, params);
    const std::size_t n = grid.size();
    const double doppler_free = rate_doppler_free(params);
    const double decay = params.g;

    for (std::size_t i = 0; i < n; ++i) {
        const double V = grid.node(i);
        gen.add(detail::target_or_lost(grid, i, +1, n), rate_directional(V, Direction::plus, params));
        gen.add(detail::target_or_lost(grid, i, -1, n), rate_directional(V, Direction::minus, params));
        gen.add(n + i, doppler_free);
        gen.close_column();
    }
    for (std::size_t i = 0; i < n; ++i) {
        gen.add(detail::target_or_lost(grid, i, +1), 0.5 * decay);
        gen.add(detail::target_or_lost(grid, i, -1), 0.5 * decay);
        gen.close_column();
    }
    return gen;
}

// Ground-state master equation with the excited level adiabatically eliminated.
inline Generator build_eliminated_generator(const CoolingParams& params, const VelocityGrid& grid)
{
    params.validate();
    detail::require_grid(grid);
    Generator gen(Dynamics::eliminated, grid, params);
    const double half_doppler_free = 0.5 * rate_doppler_free(params);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double V = grid.node(i);
        gen.add(detail::target_or_lost(grid, i, +2), 0.5 * rate_directional(V, Direction::plus, params));
        gen.add(detail::target_or_lost(grid, i, -2), 0.5 * rate_directional(V, Direction::minus, params));
        gen.add(detail::target_or_lost(grid, i, +1), half_doppler_free);
        gen.add(detail::target_or_lost(grid, i, -1), half_doppler_free);
        gen.close_column();
    }
    return gen;
}

inline Generator build_generator(Dynamics dynamics, const CoolingParams& params, const VelocityGrid& grid)
{
    return dynamics == Dynamics::full ? build_full_generator(params, grid)
                                      : build_eliminated_generator(params, grid);
}

struct DistributionState {
    std::vector<double> ground;
    std::vector<double> excited;  // empty when the excited level is not tracked
    double time = 0.0;
    double lost = 0.0;            // population that left the grid

    // Populations are densities; mass integrates with the grid spacing.
    double mass(double spacing) const
    {
        const double s = std::accumulate(ground.begin(), ground.end(), 0.0)
                         + std::accumulate(excited.begin(), excited.end(), 0.0);
        return s * spacing;
    }
    double total(double spacing) const { return mass(spacing) + lost; }
};

// Gaussian hot start exp(-V^2 / (2 T0)), T0 = 4 |delta| / K, unit mass.
inline DistributionState hot_start(const CoolingParams& params, const VelocityGrid& grid, Dynamics dynamics)
{
    const double T0 = std::max(4.0 * std::abs(params.delta) / params.K, 1.0);
    DistributionState s;
    s.ground.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double V = grid.node(i);
        s.ground[i] = std::exp(-V * V / (2.0 * T0));
    }
    const double norm = s.mass(grid.spacing());
    for (auto& v : s.ground)
        v /= norm;
    if (dynamics == Dynamics::full)
        s.excited.assign(grid.size(), 0.0);
    return s;
}

enum class Integrator { euler, rk4 };

struct EvolveOptions {
    Integrator integrator = Integrator::euler;
    double step_factor = 0.5;  // dt <= step_factor / max_rate
    double max_step = std::numeric_limits<double>::infinity();
    Boundary boundary = Boundary::absorbing;
};

namespace detail {

inline std::vector<double> pack(const DistributionState& s, const Generator& gen)
{
    std::vector<double> x(gen.size(), 0.0);
    const std::size_t n = gen.grid().size();
    if (s.ground.size() != n)
        throw DomainError("state does not match generator grid");
    std::copy(s.ground.begin(), s.ground.end(), x.begin());
    if (gen.dynamics() == Dynamics::full) {
        if (!s.excited.empty()) {
            if (s.excited.size() != n)
                throw DomainError("excited state does not match generator grid");
            std::copy(s.excited.begin(), s.excited.end(), x.begin() + static_cast<std::ptrdiff_t>(n));
        }
    } else if (!s.excited.empty()) {
        throw DomainError("eliminated dynamics carry no excited population");
    }
    return x;
}

inline void unpack(std::span<const double> x, const Generator& gen, DistributionState& s)
{
    const std::size_t n = gen.grid().size();
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), s.ground.begin());
    if (gen.dynamics() == Dynamics::full) {
        s.excited.resize(n);
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(n), x.end(), s.excited.begin());
    }
}

inline void enforce_nonnegative(std::span<double> x)
{
    for (auto& v : x) {
        if (v >= 0.0)
            continue;
        if (v < -negative_density_tolerance)
            throw SolverError("integrator instability: density " + std::to_string(v)
                              + " below tolerance; reduce the step factor");
        v = 0.0;
    }
}

} // namespace detail

inline double stable_step(const Generator& gen, const EvolveOptions& options, Boundary boundary)
{
    double max_rate = 0.0;
    for (std::size_t j = 0; j < gen.size(); ++j)
        max_rate = std::max(max_rate, gen.escape_rate(j, boundary));
    const double dt = max_rate > 0.0 ? options.step_factor / max_rate : std::numeric_limits<double>::infinity();
    return std::min(dt, options.max_step);
}

// Advance by `duration` (1/Gamma_w units) with fixed explicit steps.
inline DistributionState evolve(DistributionState state, const Generator& gen, double duration,
                                const EvolveOptions& options = {})
{
    if (!(duration >= 0.0))
        throw DomainError("duration must be non-negative");
    if (!(options.step_factor > 0.0))
        throw DomainError("step factor must be positive");
    auto x = detail::pack(state, gen);
    if (duration == 0.0)
        return state;

    const double h = gen.grid().spacing();
    const double dt_max = stable_step(gen, options, options.boundary);
    if (std::isinf(dt_max)) {
        state.time += duration;
        return state;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(duration / dt_max - 1e-12));
    const double dt = duration / static_cast<double>(steps);
    const bool absorbing = options.boundary == Boundary::absorbing;

    std::vector<double> k1(x.size()), k2, k3, k4, tmp;
    if (options.integrator == Integrator::rk4) {
        k2.resize(x.size());
        k3.resize(x.size());
        k4.resize(x.size());
        tmp.resize(x.size());
    }
    for (std::size_t s = 0; s < steps; ++s) {
        if (options.integrator == Integrator::euler) {
            gen.apply(x, k1, options.boundary);
            if (absorbing)
                state.lost += dt * h * gen.loss_flux(x);
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] += dt * k1[i];
        } else {
            gen.apply(x, k1, options.boundary);
            for (std::size_t i = 0; i < x.size(); ++i)
                tmp[i] = x[i] + 0.5 * dt * k1[i];
            const double f2 = absorbing ? gen.loss_flux(tmp) : 0.0;
            gen.apply(tmp, k2, options.boundary);
            for (std::size_t i = 0; i < x.size(); ++i)
                tmp[i] = x[i] + 0.5 * dt * k2[i];
            const double f3 = absorbing ? gen.loss_flux(tmp) : 0.0;
            gen.apply(tmp, k3, options.boundary);
            for (std::size_t i = 0; i < x.size(); ++i)
                tmp[i] = x[i] + dt * k3[i];
            const double f4 = absorbing ? gen.loss_flux(tmp) : 0.0;
            gen.apply(tmp, k4, options.boundary);
            if (absorbing)
                state.lost += dt * h * (gen.loss_flux(x) + 2.0 * f2 + 2.0 * f3 + f4) / 6.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        detail::enforce_nonnegative(x);
    }
    detail::unpack(x, gen, state);
    state.time += duration;
    return state;
}

enum class SteadyMethod { null_space, long_time };

inline const char* to_string(SteadyMethod m) { return m == SteadyMethod::null_space ? "null-space" : "long-time"; }

struct SteadyStateResult {
    std::vector<double> distribution;  // ground density per node
    std::vector<double> excited;       // excited density, full dynamics only
    SteadyMethod method = SteadyMethod::null_space;
    double residual = 0.0;             // L-infinity of L n (closed chain)
    double leakage = 0.0;              // boundary flux / total flux, absorbing boundary
    std::size_t classes = 0;
    double elapsed = 0.0;              // simulated time, long-time method only
};

struct SteadyOptions {
    double long_time_tolerance = 1e-10;  // relative L-inf change per unit time
    double step_factor = 0.5;
    std::size_t max_steps = 50'000'000;
};

namespace detail {

// Communicating classes, checked against the sublattice structure of the grid.
inline std::vector<std::vector<std::size_t>> checked_classes(const Generator& gen)
{
    auto classes = gen.communicating_classes();
    if (classes.size() != gen.sublattice_count())
        throw SolverError("degenerate generator: " + std::to_string(classes.size())
                          + " communicating classes, expected " + std::to_string(gen.sublattice_count()));
    return classes;
}

inline SteadyStateResult finish(const Generator& gen, std::vector<double> x, SteadyMethod method,
                                std::size_t classes)
{
    SteadyStateResult r;
    r.method = method;
    r.classes = classes;
    const auto Lx = gen.apply(x, Boundary::retaining);
    for (double v : Lx)
        r.residual = std::max(r.residual, std::abs(v));
    const double flux = gen.total_flux(x);
    r.leakage = flux > 0.0 ? gen.loss_flux(x) / flux : 0.0;
    const std::size_t n = gen.grid().size();
    r.distribution.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    if (gen.dynamics() == Dynamics::full)
        r.excited.assign(x.begin() + static_cast<std::ptrdiff_t>(n), x.end());
    return r;
}

} // namespace detail

// Stationary distribution of the closed chain (out-of-grid jumps suppressed).
//
// The recoil-commensurate grid splits into independent sublattices; each one
// is solved on its own and carries an equal share of the unit total mass, the
// limit reached from any smooth initial distribution.
inline SteadyStateResult steady_state(const Generator& gen, SteadyMethod method = SteadyMethod::null_space,
                                      const SteadyOptions& options = {})
{
    if (gen.grid().v_max() < 4.0)
        throw DomainError("steady state requires a grid half-width of at least 4 recoils");
    const auto classes = detail::checked_classes(gen);
    const double h = gen.grid().spacing();
    const double share = 1.0 / static_cast<double>(classes.size());
    std::vector<double> x(gen.size(), 0.0);

    if (method == SteadyMethod::null_space) {
        for (const auto& cls : classes) {
            Eigen::MatrixXd block = gen.dense_block(cls, Boundary::retaining);
            const auto k = block.rows();
            Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
            if (k > 1 && lu.rank() != k - 1)
                throw SolverError("degenerate generator: kernel dimension " + std::to_string(k - lu.rank())
                                  + " in a communicating class");
            block.row(k - 1).setConstant(h);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
            rhs(k - 1) = share;
            const Eigen::VectorXd sol = block.fullPivLu().solve(rhs);
            for (Eigen::Index a = 0; a < k; ++a)
                x[cls[static_cast<std::size_t>(a)]] = sol(a);
        }
        detail::enforce_nonnegative(x);
        return detail::finish(gen, std::move(x), method, classes.size());
    }

    // Long-time: hot start, rebalanced to equal sublattice masses, evolved on
    // the closed chain until the relative change rate falls below tolerance.
    auto start = hot_start(gen.params(), gen.grid(), gen.dynamics());
    x = detail::pack(start, gen);
    for (const auto& cls : classes) {
        double m = 0.0;
        for (auto i : cls)
            m += x[i] * h;
        for (auto i : cls)
            x[i] = m > 0.0 ? x[i] * share / m : share / (h * static_cast<double>(cls.size()));
    }
    EvolveOptions eo;
    eo.step_factor = options.step_factor;
    eo.boundary = Boundary::retaining;
    const double dt = stable_step(gen, eo, Boundary::retaining);
    if (std::isinf(dt))
        throw SolverError("generator has no transitions");
    std::vector<double> Lx(x.size());
    double elapsed = 0.0;
    for (std::size_t step = 0;; ++step) {
        gen.apply(x, Lx, Boundary::retaining);
        double change = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            change = std::max(change, std::abs(Lx[i]));
            peak = std::max(peak, std::abs(x[i]));
        }
        if (change <= options.long_time_tolerance * peak)
            break;
        if (step >= options.max_steps)
            throw SolverError("long-time relaxation did not converge within the step budget");
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += dt * Lx[i];
        detail::enforce_nonnegative(x);
        elapsed += dt;
    }
    auto r = detail::finish(gen, std::move(x), method, classes.size());
    r.elapsed = elapsed;
    return r;
}

} // namespace sharpcool
