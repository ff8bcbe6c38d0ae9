#pragma once

// Semiclassical quantities on an energy shell H0(q,p,t) = E: turning
// points, momentum pbar, phase Sigma, action, period, angle, and the WKB
// quantized energy.
//
// All integrals over [qL, qR] use q = qL + (qR - qL) sin^2(u), which maps
// the inverse-square-root endpoint behaviour of 1/pbar (and the square-root
// behaviour of pbar) to integrands that are smooth in u on [0, pi/2].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "semiff/error.hpp"
#include "semiff/grid.hpp"
#include "semiff/model.hpp"

namespace semiff {

struct TurningPoints {
    double left = 0.0;
    double right = 0.0;
};

namespace detail {

/// Root of g on [a, b] (g(a), g(b) of opposite sign) to full double precision.
template <class G>
double refine_root(G&& g, double a, double b)
{
    std::uintmax_t iters = 200;
    const auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
    const auto [lo, hi] = boost::math::tools::toms748_solve(g, a, b, tol, iters);
    return 0.5 * (lo + hi);
}

template <class F>
double gauss64(F&& f, double a, double b)
{
    return boost::math::quadrature::gauss<double, 64>::integrate(f, a, b);
}

template <class F>
double gauss10(F&& f, double a, double b)
{
    return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

}  // namespace detail

/// Outermost roots of U0(q,t) = E, bracketed on the grid and refined on the
/// continuous potential. Requires exactly two roots (single classically
/// allowed interval).
inline TurningPoints find_turning_points(const Potential& u, double t, const Grid1D& grid, double energy)
{
    const std::size_t n = grid.size();
    std::vector<std::size_t> crossings;
    double prev = energy - u.value(grid[0], t);
    if (prev > 0.0)
        throw NumericalError("find_turning_points: E=" + std::to_string(energy) +
                             " is allowed at the left box edge; increase q_max");
    bool any_allowed = false;
    for (std::size_t i = 1; i < n; ++i) {
        const double g = energy - u.value(grid[i], t);
        if (g > 0.0) any_allowed = true;
        if ((g > 0.0) != (prev > 0.0)) crossings.push_back(i);
        prev = g;
    }
    if (prev > 0.0)
        throw NumericalError("find_turning_points: E=" + std::to_string(energy) +
                             " is allowed at the right box edge; increase q_max");
    if (!any_allowed)
        throw NumericalError("find_turning_points: E=" + std::to_string(energy) +
                             " lies below the potential minimum at t=" + std::to_string(t));
    if (crossings.size() != 2)
        throw NumericalError("find_turning_points: " + std::to_string(crossings.size()) +
                             " roots of U0(q)=E at E=" + std::to_string(energy) + ", t=" + std::to_string(t) +
                             " (multi-well situation)");
    auto g = [&](double q) { return energy - u.value(q, t); };
    return {detail::refine_root(g, grid[crossings[0] - 1], grid[crossings[0]]),
            detail::refine_root(g, grid[crossings[1] - 1], grid[crossings[1]])};
}

/// Classical level set at one instant. Holds a copy of the potential so that
/// pbar(q) can be evaluated anywhere on [qL, qR].
class EnergyShell {
public:
    EnergyShell(const Potential& u, double t, double energy, TurningPoints tp)
        : potential_(u), t_(t), energy_(energy), tp_(tp)
    {
        const double half_action = detail::gauss64([&](double s) { return sigma_integrand(s); }, 0.0, half_pi());
        const double half_time = detail::gauss64([&](double s) { return time_integrand(s); }, 0.0, half_pi());
        action_ = half_action / std::numbers::pi;
        period_ = 2.0 * half_time;
        if (!(action_ > 0.0) || !(period_ > 0.0))
            throw NumericalError("EnergyShell: non-positive action or period at E=" + std::to_string(energy));
    }

    double t() const { return t_; }
    double energy() const { return energy_; }
    double action() const { return action_; }
    double period() const { return period_; }
    double omega() const { return 2.0 * std::numbers::pi / period_; }
    double q_left() const { return tp_.left; }
    double q_right() const { return tp_.right; }
    double width() const { return tp_.right - tp_.left; }
    double mass() const { return potential_.params().mass; }
    const Potential& potential() const { return potential_; }

    /// pbar(q) = sqrt(2m(E - U0)); zero outside the allowed interval.
    double momentum(double q) const
    {
        const double k = energy_ - potential_.value(q, t_);
        return k > 0.0 ? std::sqrt(2.0 * mass() * k) : 0.0;
    }

    /// Position at substitution variable s in [0, pi/2].
    double position(double s) const
    {
        const double sn = std::sin(s);
        return tp_.left + width() * sn * sn;
    }

    /// Inverse of position(), clamped to [0, pi/2].
    double substitution(double q) const
    {
        const double a = std::max(q - tp_.left, 0.0);
        const double b = std::max(tp_.right - q, 0.0);
        return std::atan2(std::sqrt(a), std::sqrt(b));
    }

    /// pbar dq/ds.
    double sigma_integrand(double s) const { return momentum(position(s)) * width() * std::sin(2.0 * s); }

    /// m/pbar dq/ds; regular on (0, pi/2).
    double time_integrand(double s) const
    {
        const double p = momentum(position(s));
        const double j = width() * std::sin(2.0 * s);
        return p > 0.0 ? mass() * j / p : 0.0;
    }

    /// Sigma(q) = int_{qL}^{q} pbar dq'.
    double sigma_at(double q) const
    {
        const double s = substitution(q);
        if (s <= 0.0) return 0.0;
        return detail::gauss64([&](double x) { return sigma_integrand(x); }, 0.0, s);
    }

    /// Time from qL to q on the upper branch.
    double time_to(double q) const
    {
        const double s = substitution(q);
        if (s <= 0.0) return 0.0;
        return detail::gauss64([&](double x) { return time_integrand(x); }, 0.0, s);
    }

    /// Upper-branch angle theta(q) = omega t_q in [0, pi]; q is clamped.
    double angle_at(double q) const { return std::clamp(omega() * time_to(q), 0.0, std::numbers::pi); }

    /// Position on the shell with upper-branch angle theta in [0, pi].
    double position_at_angle(double theta) const
    {
        if (theta <= 0.0) return tp_.left;
        if (theta >= std::numbers::pi) return tp_.right;
        const double w = omega();
        auto g = [&](double s) {
            return w * detail::gauss64([&](double x) { return time_integrand(x); }, 0.0, s) - theta;
        };
        return position(detail::refine_root(g, 0.0, half_pi()));
    }

private:
    static constexpr double half_pi() { return 0.5 * std::numbers::pi; }

    Potential potential_;
    double t_;
    double energy_;
    TurningPoints tp_;
    double action_ = 0.0;
    double period_ = 0.0;
};

inline EnergyShell make_shell(const Potential& u, double t, const Grid1D& grid, double energy)
{
    return EnergyShell(u, t, energy, find_turning_points(u, t, grid, energy));
}

/// I(E) = (1/pi) int_{qL}^{qR} pbar dq.
inline double action(const Potential& u, double t, const Grid1D& grid, double energy)
{
    return make_shell(u, t, grid, energy).action();
}

/// Energy E_n(t) with I(E) = hbar (n + 1/2). Safeguarded Newton iteration
/// using dI/dE = T/(2 pi); `guess` (if finite) seeds the iteration.
inline double wkb_energy(const Potential& u, int n, double t, const Grid1D& grid,
                         double guess = std::numeric_limits<double>::quiet_NaN())
{
    if (n < 0) throw ConfigError("wkb_energy: n must be non-negative");
    const double target = u.params().hbar * (n + 0.5);
    double u_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) u_min = std::min(u_min, u.value(grid[i], t));

    const double edge = std::min(u.value(grid[0], t), u.value(grid[grid.size() - 1], t));
    auto try_shell = [&](double e) -> std::optional<EnergyShell> {
        try {
            return make_shell(u, t, grid, e);
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    };

    // Invariant: I(lo) < target < I(hi) once hi is finite.
    double lo = u_min;
    double hi = std::numeric_limits<double>::quiet_NaN();
    double energy = std::isfinite(guess) && guess > u_min ? guess : u_min + std::max(1.0, std::abs(u_min));
    for (int iter = 0; iter < 200; ++iter) {
        const auto shell = try_shell(energy);
        double next;
        if (shell) {
            const double f = shell->action() - target;
            if (std::abs(f) <= 4.0 * std::numeric_limits<double>::epsilon() * target) return energy;
            (f < 0.0 ? lo : hi) = energy;
            next = energy - f * 2.0 * std::numbers::pi / shell->period();
        } else {
            // No single allowed interval: either past the box edge or near the well bottom.
            (energy >= edge ? hi : lo) = energy;
            next = std::numeric_limits<double>::quiet_NaN();
        }
        if (std::isfinite(hi)) {
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        } else if (!(next > lo)) {
            next = u_min + 2.0 * (lo - u_min) + 1.0;
        }
        if (shell && std::abs(next - energy) <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(energy))
            return next;
        if (!shell && std::isfinite(hi) && hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))
            break;
        energy = next;
    }
    throw NumericalError("wkb_energy: no convergence for n=" + std::to_string(n) + " at t=" + std::to_string(t));
}

/// Sigma sampled on the grid: 0 left of qL, pi*I right of qR.
inline ScalarField sigma(const EnergyShell& shell, const Grid1D& grid)
{
    ScalarField out(grid);
    auto f = [&](double s) { return shell.sigma_integrand(s); };
    double acc = 0.0;
    double s_prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid[i];
        if (q <= shell.q_left()) continue;
        const double s = shell.substitution(q);
        acc += detail::gauss10(f, s_prev, s);
        s_prev = s;
        out[i] = acc;
    }
    return out;
}

struct SigmaRate {
    ScalarField rate;   ///< dSigma/dt at fixed q
    double energy;      ///< E_n(t)
    bool one_sided;     ///< true when the stencil had to avoid t < 0 or t > tau
};

/// dSigma/dt at fixed q by finite differences of sigma(); the shells at the
/// neighbouring times are recomputed at fixed action hbar(n + 1/2).
inline SigmaRate sigma_time_derivative(const Potential& u, int n, double t, const Grid1D& grid, double fd_step,
                                       double energy_guess = std::numeric_limits<double>::quiet_NaN())
{
    const double tau = u.params().tau;
    const double e0 = wkb_energy(u, n, t, grid, energy_guess);
    SigmaRate out{ScalarField(grid), e0, false};
    if (t < 0.0 || t > tau || u.is_static()) return out;

    auto sigma_at_time = [&](double tt) { return sigma(make_shell(u, tt, grid, wkb_energy(u, n, tt, grid, e0)), grid); };
    const double h = fd_step;
    if (t - h >= 0.0 && t + h <= tau) {
        const auto sp = sigma_at_time(t + h);
        const auto sm = sigma_at_time(t - h);
        for (std::size_t i = 0; i < grid.size(); ++i) out.rate[i] = (sp[i] - sm[i]) / (2.0 * h);
        return out;
    }
    out.one_sided = true;
    const double dir = (t - h < 0.0) ? 1.0 : -1.0;
    const auto s0 = sigma_at_time(t);
    const auto s1 = sigma_at_time(t + dir * h);
    const auto s2 = sigma_at_time(t + 2.0 * dir * h);
    for (std::size_t i = 0; i < grid.size(); ++i)
        out.rate[i] = dir * (4.0 * (s1[i] - s0[i]) - (s2[i] - s0[i])) / (2.0 * h);
    return out;
}

struct AngleMap {
    double period;
    ScalarField theta;  ///< upper-branch angle; 0 left of qL, pi right of qR
};

inline AngleMap period_and_angle(const EnergyShell& shell, const Grid1D& grid)
{
    AngleMap out{shell.period(), ScalarField(grid)};
    auto f = [&](double s) { return shell.time_integrand(s); };
    const double w = shell.omega();
    double acc = 0.0;
    double s_prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid[i];
        if (q <= shell.q_left()) continue;
        if (q >= shell.q_right()) {
            out.theta[i] = std::numbers::pi;
            continue;
        }
        const double s = shell.substitution(q);
        acc += detail::gauss10(f, s_prev, s);
        s_prev = s;
        out.theta[i] = w * acc;
    }
    return out;
}

struct WkbState {
    EnergyShell shell;
    ScalarField sigma;
    ScalarField density;  ///< rho = 2m/(T pbar) on (qL, qR), integrates to 1
    double hbar;
    int n;
};

inline WkbState make_wkb_state(const Potential& u, int n, double t, const Grid1D& grid,
                               double energy_guess = std::numeric_limits<double>::quiet_NaN())
{
    EnergyShell shell = make_shell(u, t, grid, wkb_energy(u, n, t, grid, energy_guess));
    ScalarField rho(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = shell.momentum(grid[i]);
        if (p > 0.0) rho[i] = 2.0 * shell.mass() / (shell.period() * p);
    }
    ScalarField sig = sigma(shell, grid);
    return {std::move(shell), std::move(sig), std::move(rho), u.params().hbar, n};
}

/// Nodes q_nu with Sigma(q_nu) = (nu - 1/4) pi hbar, nu = 1..n.
inline std::vector<double> predicted_nodes(const WkbState& state)
{
    const auto& shell = state.shell;
    const double total = std::numbers::pi * shell.action();
    std::vector<double> nodes;
    for (int nu = 1; nu <= state.n; ++nu) {
        const double target = (nu - 0.25) * std::numbers::pi * state.hbar;
        if (!(target < total))
            throw NumericalError("predicted_nodes: only " + std::to_string(nu - 1) + " of " +
                                 std::to_string(state.n) + " nodes fit inside the shell");
        auto g = [&](double s) {
            return detail::gauss64([&](double x) { return shell.sigma_integrand(x); }, 0.0, s) - target;
        };
        nodes.push_back(shell.position(detail::refine_root(g, 0.0, 0.5 * std::numbers::pi)));
    }
    return nodes;
}

}  // namespace semiff
