#pragma once

// Fast-forward construction: velocity field v = -dSigma/dt / dSigma/dq,
// acceleration a = v dv/dq + dv/dt, potential dU_FF/dq = -m a, and the
// Hamilton-Jacobi phase S with dS/dq = m v.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "semiff/error.hpp"
#include "semiff/grid.hpp"
#include "semiff/model.hpp"
#include "semiff/parallel.hpp"
#include "semiff/wkb.hpp"

namespace semiff {

/// How v is continued past qL + eps and qR - eps.
enum class Extension { Linear, Constant };

/// Additive constant u_FF(t): zero at the instantaneous minimum of U0, or
/// zero mean over [qL, qR].
enum class GaugeRule { MinZero, MeanZero };

inline const char* to_string(Extension e) { return e == Extension::Linear ? "linear" : "constant"; }
inline const char* to_string(GaugeRule g) { return g == GaugeRule::MinZero ? "min_zero" : "mean_zero"; }

struct FlowOptions {
    Extension extension = Extension::Linear;
    int edge_cells = 3;              ///< eps = edge_cells * dq
    GaugeRule gauge = GaugeRule::MinZero;
    std::size_t mesh_size = 2001;    ///< construction times on [0, tau]
    double fd_step_fraction = 1e-5;  ///< dSigma/dt step, in units of tau
};

struct VelocityField {
    ScalarField v;
    double q_left = 0.0;
    double q_right = 0.0;
    double energy = 0.0;
    bool one_sided = false;
};

/// v(q,t) on the whole grid; zero outside [0, tau].
inline VelocityField compute_velocity(const Potential& u, int n, double t, const Grid1D& grid,
                                      const FlowOptions& opt = {},
                                      double energy_guess = std::numeric_limits<double>::quiet_NaN())
{
    const double tau = u.params().tau;
    VelocityField out{ScalarField(grid)};
    const auto rate = sigma_time_derivative(u, n, std::clamp(t, 0.0, tau), grid, opt.fd_step_fraction * tau,
                                            energy_guess);
    const auto shell = make_shell(u, std::clamp(t, 0.0, tau), grid, rate.energy);
    out.q_left = shell.q_left();
    out.q_right = shell.q_right();
    out.energy = rate.energy;
    out.one_sided = rate.one_sided;
    if (t < 0.0 || t > tau) return out;

    const double dq = grid.spacing();
    const double eps = opt.edge_cells * dq;
    std::size_t first = grid.size(), last = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid[i];
        if (q <= shell.q_left() + eps || q >= shell.q_right() - eps) continue;
        out.v[i] = -rate.rate[i] / shell.momentum(q);
        first = std::min(first, i);
        last = std::max(last, i);
    }
    if (first == grid.size() || last < first + 2)
        throw NumericalError("velocity_field: fewer than three grid points inside the shell at t=" + std::to_string(t));

    // one-sided second-order slopes at the outermost interior points
    auto& v = out.v.values;
    const bool linear = opt.extension == Extension::Linear;
    const double left_slope = linear ? (-3.0 * v[first] + 4.0 * v[first + 1] - v[first + 2]) / (2.0 * dq) : 0.0;
    const double right_slope = linear ? (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * dq) : 0.0;
    for (std::size_t i = 0; i < first; ++i) v[i] = v[first] + left_slope * (grid[i] - grid[first]);
    for (std::size_t i = last + 1; i < grid.size(); ++i) v[i] = v[last] + right_slope * (grid[i] - grid[last]);

    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!std::isfinite(v[i]))
            throw NumericalError("velocity_field: non-finite value at q=" + std::to_string(grid[i]) +
                                 ", t=" + std::to_string(t));
    return out;
}

inline ScalarField velocity_field(const Potential& u, int n, double t, const Grid1D& grid, const FlowOptions& opt = {})
{
    return compute_velocity(u, n, t, grid, opt).v;
}

/// Second-order d/dq with one-sided ends.
inline ScalarField gradient(const ScalarField& f)
{
    const std::size_t n = f.size();
    const double h = f.grid.spacing();
    ScalarField d(f.grid);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

/// Which three samples a time stencil holds.
enum class TimeStencil {
    Centered,  ///< f(t - h), f(t), f(t + h)
    Forward,   ///< f(t), f(t + h), f(t + 2h)
    Backward   ///< f(t - 2h), f(t - h), f(t)
};

/// Second-order time derivative at the stencil's evaluation time.
inline double stencil_rate(double f0, double f1, double f2, double h, TimeStencil kind)
{
    switch (kind) {
    case TimeStencil::Centered: return (f2 - f0) / (2.0 * h);
    case TimeStencil::Forward: return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    case TimeStencil::Backward: return (3.0 * f2 - 4.0 * f1 + f0) / (2.0 * h);
    }
    return 0.0;
}

/// a = v dv/dq + dv/dt from three velocity samples spaced h in time.
inline ScalarField acceleration_field(const ScalarField& v0, const ScalarField& v1, const ScalarField& v2, double h,
                                      TimeStencil kind = TimeStencil::Centered)
{
    require_same_grid(v0.grid, v1.grid, "acceleration_field");
    require_same_grid(v1.grid, v2.grid, "acceleration_field");
    const ScalarField& at = kind == TimeStencil::Centered ? v1 : (kind == TimeStencil::Forward ? v0 : v2);
    const ScalarField dv = gradient(at);
    ScalarField a(v0.grid);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = at[i] * dv[i] + stencil_rate(v0[i], v1[i], v2[i], h, kind);
    return a;
}

struct GaugeReference {
    double q_ref;    ///< MinZero anchor
    double q_left;   ///< MeanZero averaging window
    double q_right;
};

/// Global minimum of U0(., t): grid argmin refined to the root of dU0/dq.
inline double potential_minimum(const Potential& u, const Grid1D& grid, double t)
{
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = u.value(grid[i], t);
        if (x < best_value) {
            best_value = x;
            best = i;
        }
    }
    if (best == 0 || best + 1 == grid.size()) return grid[best];
    const double a = grid[best - 1], b = grid[best + 1];
    auto slope = [&](double q) { return u.dq(q, t); };
    if (!(slope(a) < 0.0 && slope(b) > 0.0)) return grid[best];
    return detail::refine_root(slope, a, b);
}

/// Cumulative trapezoid from the left edge.
inline std::vector<double> cumulative_integral(const ScalarField& f)
{
    const double h = f.grid.spacing();
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (f[i] + f[i - 1]);
    return out;
}

inline double linear_sample(std::span<const double> y, const Grid1D& g, double q)
{
    const double x = std::clamp((q - g.q_min()) / g.spacing(), 0.0, static_cast<double>(g.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(x), g.size() - 2);
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * y[i] + w * y[i + 1];
}

/// U_FF(q) = -m int a dq' plus the gauge constant.
inline ScalarField fast_forward_potential(const ScalarField& a, double mass, GaugeRule gauge, const GaugeReference& ref)
{
    auto integral = cumulative_integral(a);
    ScalarField uff(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) uff[i] = -mass * integral[i];
    double shift = 0.0;
    if (gauge == GaugeRule::MinZero) {
        shift = cubic_interpolate(uff.values, a.grid, ref.q_ref);
    } else {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a.grid[i] < ref.q_left || a.grid[i] > ref.q_right) continue;
            sum += uff[i];
            ++count;
        }
        if (count == 0) throw NumericalError("fast_forward_potential: empty averaging window");
        shift = sum / static_cast<double>(count);
    }
    for (auto& x : uff.values) x -= shift;
    return uff;
}

struct FlowFields {
    double t = 0.0;
    ScalarField v;
    ScalarField a;
    ScalarField uff;
    double q_left = 0.0;
    double q_right = 0.0;
    double energy = 0.0;  ///< WKB energy E_n(t)
};

struct FlowMetadata {
    Extension extension;
    int edge_cells;
    double epsilon;
    GaugeRule gauge;
    std::size_t mesh_size;
    double fd_step;
};

/// v, a and U_FF on a uniform mesh of times spanning [0, tau]; consumers
/// interpolate linearly in t. Everything vanishes outside [0, tau].
class FlowTable {
public:
    FlowTable(Grid1D grid, double tau, double mass, std::vector<FlowFields> rows, FlowMetadata meta)
        : grid_(grid), tau_(tau), mass_(mass), rows_(std::move(rows)), meta_(meta)
    {
        if (rows_.size() < 3) throw ConfigError("FlowTable: need at least three mesh times");
    }

    const Grid1D& grid() const { return grid_; }
    double tau() const { return tau_; }
    double mass() const { return mass_; }
    double mesh_step() const { return tau_ / static_cast<double>(rows_.size() - 1); }
    const std::vector<FlowFields>& rows() const { return rows_; }
    const FlowMetadata& metadata() const { return meta_; }

    /// U_FF(., t) into out (size N).
    void potential_at(double t, std::span<double> out) const
    {
        blend(t, out, [](const FlowFields& r) -> const ScalarField& { return r.uff; });
    }
    ScalarField potential_at(double t) const
    {
        ScalarField f(grid_);
        potential_at(t, f.values);
        return f;
    }
    ScalarField velocity_at(double t) const
    {
        ScalarField f(grid_);
        blend(t, f.values, [](const FlowFields& r) -> const ScalarField& { return r.v; });
        return f;
    }
    ScalarField acceleration_at(double t) const
    {
        ScalarField f(grid_);
        blend(t, f.values, [](const FlowFields& r) -> const ScalarField& { return r.a; });
        return f;
    }

    /// a(q, t): cubic in q, linear in t.
    double acceleration(double q, double t) const
    {
        if (t < 0.0 || t > tau_) return 0.0;
        const auto [j, w] = locate(t);
        const double a0 = cubic_interpolate(rows_[j].a.values, grid_, q);
        if (w == 0.0) return a0;
        return (1.0 - w) * a0 + w * cubic_interpolate(rows_[j + 1].a.values, grid_, q);
    }

    double max_abs_potential() const
    {
        double m = 0.0;
        for (const auto& r : rows_)
            for (double x : r.uff.values) m = std::max(m, std::abs(x));
        return m;
    }

private:
    std::pair<std::size_t, double> locate(double t) const
    {
        const double x = t / mesh_step();
        auto j = static_cast<std::size_t>(std::floor(x));
        if (j >= rows_.size() - 1) return {rows_.size() - 2, 1.0};
        return {j, x - static_cast<double>(j)};
    }

    template <class Pick>
    void blend(double t, std::span<double> out, Pick pick) const
    {
        if (t < 0.0 || t > tau_) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        const auto [j, w] = locate(t);
        const auto& f0 = pick(rows_[j]).values;
        const auto& f1 = pick(rows_[j + 1]).values;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * f0[i] + w * f1[i];
    }

    Grid1D grid_;
    double tau_;
    double mass_;
    std::vector<FlowFields> rows_;
    FlowMetadata meta_;
};

inline FlowTable build_flow_table(const Potential& u, int n, const Grid1D& grid, const FlowOptions& opt = {})
{
    const double tau = u.params().tau;
    const double mass = u.params().mass;
    const std::size_t m = opt.mesh_size;
    if (m < 3) throw ConfigError("build_flow_table: mesh_size must be at least 3");
    const double h = tau / static_cast<double>(m - 1);
    const double e0 = wkb_energy(u, n, 0.0, grid);

    std::vector<VelocityField> vel(m, VelocityField{ScalarField(grid)});
    parallel_for(m, [&](std::size_t j) {
        const double t = (j + 1 == m) ? tau : h * static_cast<double>(j);
        vel[j] = compute_velocity(u, n, t, grid, opt, e0);
    });

    std::vector<FlowFields> rows(m, FlowFields{0.0, ScalarField(grid), ScalarField(grid), ScalarField(grid)});
    parallel_for(m, [&](std::size_t j) {
        const double t = (j + 1 == m) ? tau : h * static_cast<double>(j);
        ScalarField a = j == 0        ? acceleration_field(vel[0].v, vel[1].v, vel[2].v, h, TimeStencil::Forward)
                        : j + 1 == m ? acceleration_field(vel[m - 3].v, vel[m - 2].v, vel[m - 1].v, h,
                                                          TimeStencil::Backward)
                                     : acceleration_field(vel[j - 1].v, vel[j].v, vel[j + 1].v, h);
        const GaugeReference ref{potential_minimum(u, grid, t), vel[j].q_left, vel[j].q_right};
        ScalarField uff = fast_forward_potential(a, mass, opt.gauge, ref);
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (!std::isfinite(a[i]) || !std::isfinite(uff[i]))
                throw NumericalError("build_flow_table: non-finite field at t=" + std::to_string(t));
        rows[j] = FlowFields{t, vel[j].v, std::move(a), std::move(uff), vel[j].q_left, vel[j].q_right, vel[j].energy};
    });

    return FlowTable(grid, tau, mass, std::move(rows),
                     FlowMetadata{opt.extension, opt.edge_cells, opt.edge_cells * grid.spacing(), opt.gauge, m,
                                  opt.fd_step_fraction * tau});
}

/// S(q,t) on the construction mesh.
struct PhaseS {
    Grid1D grid;
    std::vector<double> times;
    std::vector<ScalarField> s;
    std::vector<double> beta;  ///< beta(t) at the anchor point
    double s_minus = 0.0;      ///< S for t <= 0
    double s_plus = 0.0;       ///< S for t >= tau
    double beta_spread = 0.0;  ///< max |beta(q) - beta(anchor)| over allowed interiors
    std::size_t anchor = 0;    ///< grid index where S0 = 0

    /// dS/dt on mesh row j (same stencil as the acceleration field).
    ScalarField rate(std::size_t j) const
    {
        const std::size_t m = s.size();
        const double h = times[1] - times[0];
        ScalarField out(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (j == 0) out[i] = stencil_rate(s[0][i], s[1][i], s[2][i], h, TimeStencil::Forward);
            else if (j + 1 == m) out[i] = stencil_rate(s[m - 3][i], s[m - 2][i], s[m - 1][i], h, TimeStencil::Backward);
            else out[i] = stencil_rate(s[j - 1][i], s[j][i], s[j + 1][i], h, TimeStencil::Centered);
        }
        return out;
    }
};

/// S0 = m int v dq (anchored at the grid centre), beta = dS0/dt + (dS0/dq)^2/2m
/// + U_FF, S = S0 - int_0^t beta. beta must be q-independent on the allowed
/// region to within tolerance * max|beta|.
inline PhaseS hamilton_jacobi_phase(const FlowTable& table, double tolerance = 1e-4)
{
    const auto& rows = table.rows();
    const std::size_t m = rows.size();
    const Grid1D& grid = table.grid();
    const double mass = table.mass();
    const double h = table.mesh_step();
    const std::size_t anchor = grid.size() / 2;

    std::vector<ScalarField> s0;
    s0.reserve(m);
    for (const auto& r : rows) {
        auto integral = cumulative_integral(r.v);
        ScalarField f(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) f[i] = mass * (integral[i] - integral[anchor]);
        s0.push_back(std::move(f));
    }

    PhaseS out{grid, {}, {}, std::vector<double>(m), 0.0, 0.0, 0.0, anchor};
    double beta_max = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto kind = j == 0 ? TimeStencil::Forward : (j + 1 == m ? TimeStencil::Backward : TimeStencil::Centered);
        const std::size_t base = j == 0 ? 0 : (j + 1 == m ? m - 3 : j - 1);
        auto beta_at = [&](std::size_t i) {
            const double ds = stencil_rate(s0[base][i], s0[base + 1][i], s0[base + 2][i], h, kind);
            return ds + 0.5 * mass * rows[j].v[i] * rows[j].v[i] + rows[j].uff[i];
        };
        out.beta[j] = beta_at(anchor);
        beta_max = std::max(beta_max, std::abs(out.beta[j]));
        const double eps = table.metadata().epsilon;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] <= rows[j].q_left + eps || grid[i] >= rows[j].q_right - eps) continue;
            out.beta_spread = std::max(out.beta_spread, std::abs(beta_at(i) - out.beta[j]));
        }
    }
    if (out.beta_spread > tolerance * std::max(beta_max, 1e-300))
        throw NumericalError("hamilton_jacobi_phase: beta varies with q by " + std::to_string(out.beta_spread) +
                             " (max |beta| = " + std::to_string(beta_max) + "); v and U_FF are inconsistent");

    double integral = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j > 0) integral += 0.5 * h * (out.beta[j] + out.beta[j - 1]);
        for (std::size_t i = 0; i < grid.size(); ++i) s0[j][i] -= integral;
        out.times.push_back(rows[j].t);
    }
    out.s = std::move(s0);
    out.s_minus = out.s.front()[anchor];
    out.s_plus = out.s.back()[anchor];
    return out;
}

/// Closed forms for U0 = base((q - f)/gamma)/gamma^2.
namespace closed_form {

inline double velocity(const ScaleInvariant& s, double q, double t)
{
    const double g = s.gamma.value(t);
    return s.f.rate(t) + s.gamma.rate(t) / g * (q - s.f.value(t));
}

inline double acceleration(const ScaleInvariant& s, double q, double t)
{
    const double g = s.gamma.value(t);
    return s.f.accel(t) + s.gamma.accel(t) / g * (q - s.f.value(t));
}

/// -m f'' q - (m/2)(gamma''/gamma)(q - f)^2, without gauge constant.
inline double potential(const ScaleInvariant& s, double mass, double q, double t)
{
    const double g = s.gamma.value(t);
    const double d = q - s.f.value(t);
    return -mass * s.f.accel(t) * q - 0.5 * mass * s.gamma.accel(t) / g * d * d;
}

}  // namespace closed_form

}  // namespace semiff
