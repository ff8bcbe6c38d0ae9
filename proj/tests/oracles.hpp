#pragma once

// Reference computations that share no code path with the library: plain
// bisection, tanh-sinh quadrature on the raw q integrals, and closed forms.

#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

inline double quartic(double q, double lambda) { return q * q * q * q - 16.0 * q * q + lambda * q; }

inline double preset_lambda(double t, double tau = 1.0)
{
    const double s = std::clamp(t, 0.0, tau);
    return 4.0 * std::cos(std::numbers::pi * s / tau) * (5.0 - std::cos(2.0 * std::numbers::pi * s / tau));
}

/// Root of f on [a, b] by bisection to full precision.
inline double bisect(const std::function<double(double)>& f, double a, double b)
{
    double fa = f(a);
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        const double fm = f(m);
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Outer turning points of U(q) = E, bracketed by scanning outward from q0
/// (which must be allowed).
inline std::pair<double, double> turning_points(const std::function<double(double)>& u, double e, double q0)
{
    auto g = [&](double q) { return u(q) - e; };
    double lo = q0, hi = q0;
    while (g(lo) < 0.0) lo -= 0.01;
    while (g(hi) < 0.0) hi += 0.01;
    return {bisect(g, lo, lo + 0.01), bisect(g, hi - 0.01, hi)};
}

inline double integrate(const std::function<double(double)>& f, double a, double b)
{
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&f](double x) -> double { return f(x); };
    return ts.integrate(g, a, b);
}

/// I(E) = (1/pi) int pbar dq, m = 1.
inline double action(const std::function<double(double)>& u, double e, double q0)
{
    const auto [a, b] = turning_points(u, e, q0);
    return integrate([&](double q) { return std::sqrt(std::max(0.0, 2.0 * (e - u(q)))); }, a, b) /
           std::numbers::pi;
}

/// Energy with I(E) = target by bisection on [lo, hi].
inline double quantized_energy(const std::function<double(double)>& u, double target, double q0, double lo,
                               double hi)
{
    return bisect([&](double e) { return action(u, e, q0) - target; }, lo, hi);
}

/// Adiabatic shell data for U(q,t) = quartic(q, lambda(t)), m = 1, at fixed
/// action: E-dot from the orbit average of dU/dt, then
///   dSigma/dt(q) = int_{qL}^{q} (E-dot - dU/dt) / pbar dq'
/// and qL-dot = (E-dot - dU/dt(qL)) / U'(qL).
struct ShellRates {
    double energy;
    double energy_rate;
    double q_left;
    double q_right;
    double q_left_rate;
    std::function<double(double)> sigma_rate;
};

/// E - U(q) for the quartic near a root r of U = E, with d = q - r taken
/// from the endpoint distance so that no cancellation occurs.
inline double quartic_gap(double r, double lam, double d)
{
    const double du = 4.0 * r * r * r - 32.0 * r + lam;
    return -(du * d + (6.0 * r * r - 16.0) * d * d + 4.0 * r * d * d * d + d * d * d * d);
}

/// int_a^b w(q) / pbar(q) dq with pbar^2 = 2 (E - quartic); a is a turning
/// point, b is either the other turning point or an interior point.
inline double weighted_inverse_momentum(const std::function<double(double)>& w, double lam, double a, double b,
                                        bool b_is_turning)
{
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double x, double xc) -> double {
        double gap;
        if (xc < 0.0) gap = quartic_gap(a, lam, -xc);  // xc = a - x on the left half
        else if (b_is_turning) gap = quartic_gap(b, lam, -xc);
        else gap = quartic_gap(a, lam, x - a);
        return gap > 0.0 ? w(x) / std::sqrt(2.0 * gap) : 0.0;
    };
    return ts.integrate(f, a, b, 1e-14);
}

inline ShellRates quartic_shell_rates(double action_target, double t, double tau = 1.0)
{
    const double lam = preset_lambda(t, tau);
    const double w = std::numbers::pi / tau;
    const double lam_dot = -4.0 * w * std::sin(w * t) * (5.0 - std::cos(2.0 * w * t)) +
                           4.0 * std::cos(w * t) * 2.0 * w * std::sin(2.0 * w * t);
    auto u = [lam](double q) { return quartic(q, lam); };
    const double e = quantized_energy(u, action_target, 0.0, 0.0, 200.0);
    const auto [a, b] = turning_points(u, e, 0.0);
    const double num = weighted_inverse_momentum([&](double q) { return lam_dot * q; }, lam, a, b, true);
    const double den = weighted_inverse_momentum([](double) { return 1.0; }, lam, a, b, true);
    const double e_dot = num / den;
    const double du_left = 4.0 * a * a * a - 32.0 * a + lam;
    ShellRates r{e, e_dot, a, b, (e_dot - lam_dot * a) / du_left, {}};
    r.sigma_rate = [=](double q) {
        if (q <= a) return 0.0;
        return weighted_inverse_momentum([&](double x) { return e_dot - lam_dot * x; }, lam, a, std::min(q, b), q >= b);
    };
    return r;
}

/// Sideband weights for eta = (1 + cos theta) / 2 pi by a 10^6-point midpoint
/// rule, l = 0..6 (symmetric in l).
inline constexpr double cosine_eta_weights[7] = {
    0.8105694691393687,    0.09006327434852224,   0.0036025309739053384, 0.0006616893625431536,
    0.00020422511189133335, 8.270273125932932e-05, 3.963858717019812e-05,
};

/// Frozen reference values for the quartic preset.
inline constexpr double quartic_e17_left = -4.67780029651926966;   // turning points at t = 0, E = 53.86
inline constexpr double quartic_e17_right = 3.92663692633596134;
inline constexpr double lambda_dot_quarter = -26.6572976289501975;  // d lambda/dt at t = tau/4

}  // namespace oracle
