#pragma once

// Classical ensembles under H0 + U_FF: shell sampling uniform in angle,
// leapfrog integration, and the final angle distribution.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "semiff/error.hpp"
#include "semiff/fastforward.hpp"
#include "semiff/model.hpp"
#include "semiff/parallel.hpp"
#include "semiff/wkb.hpp"

namespace semiff {

struct TrajectoryEnsemble {
    double t = 0.0;
    std::vector<double> q;
    std::vector<double> p;

    std::size_t size() const { return q.size(); }
};

/// theta_i = 2 pi i / N; upper branch for theta <= pi, mirrored below.
inline TrajectoryEnsemble sample_shell_uniform_angle(const EnergyShell& shell, std::size_t count)
{
    if (count < 2) throw ConfigError("sample_shell_uniform_angle: need at least two trajectories");
    TrajectoryEnsemble ens{shell.t(), std::vector<double>(count), std::vector<double>(count)};
    parallel_for(count, [&](std::size_t i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        const bool upper = theta <= std::numbers::pi;
        const double q = shell.position_at_angle(upper ? theta : 2.0 * std::numbers::pi - theta);
        const double p = shell.momentum(q);
        ens.q[i] = q;
        ens.p[i] = upper ? p : -p;
    });
    const double e = shell.energy();
    const auto& u = shell.potential();
    for (std::size_t i = 0; i < count; ++i) {
        const double h = 0.5 * ens.p[i] * ens.p[i] / shell.mass() + u.value(ens.q[i], shell.t());
        if (std::abs(h - e) > 1e-8 * std::abs(e))
            throw NumericalError("sample_shell_uniform_angle: point " + std::to_string(i) + " is off the shell");
    }
    return ens;
}

/// F = -dU0/dq + m a(q, t).
struct ForceField {
    Potential potential;
    std::shared_ptr<const FlowTable> flow;

    static ForceField bare(Potential u) { return {std::move(u), nullptr}; }
    static ForceField with_ff(Potential u, std::shared_ptr<const FlowTable> table)
    {
        if (!table) throw ConfigError("ForceField::with_ff: missing flow table");
        return {std::move(u), std::move(table)};
    }

    double operator()(double q, double t) const
    {
        double f = -potential.dq(q, t);
        if (flow) f += flow->mass() * flow->acceleration(q, t);
        return f;
    }
};

struct IntegrateOptions {
    double dt = 1e-4;
    double t_start = 0.0;
    double t_end = 1.0;
    std::vector<double> snapshot_times;
};

struct TrajectoryHistory {
    TrajectoryEnsemble final;
    std::vector<TrajectoryEnsemble> snapshots;
};

/// Drift-kick-drift leapfrog with the force taken at the half-step time.
inline TrajectoryHistory integrate_ensemble(const TrajectoryEnsemble& start, const ForceField& force,
                                            const Grid1D& domain, const IntegrateOptions& opt)
{
    const double span = opt.t_end - opt.t_start;
    if (!(opt.dt > 0.0) || span < 0.0) throw ConfigError("integrate_ensemble: need dt > 0 and t_end >= t_start");
    const auto steps = static_cast<std::size_t>(std::llround(span / opt.dt));
    const double dt = steps ? span / static_cast<double>(steps) : opt.dt;
    const double mass = force.potential.params().mass;

    std::vector<std::size_t> snap_steps;
    for (double ts : opt.snapshot_times)
        snap_steps.push_back(static_cast<std::size_t>(std::llround((ts - opt.t_start) / dt)));

    const std::size_t n = start.size();
    TrajectoryHistory out{start, {}};
    out.snapshots.assign(snap_steps.size(), TrajectoryEnsemble{0.0, std::vector<double>(n), std::vector<double>(n)});
    for (std::size_t j = 0; j < snap_steps.size(); ++j)
        out.snapshots[j].t = opt.t_start + static_cast<double>(snap_steps[j]) * dt;

    parallel_for(n, [&](std::size_t i) {
        double q = start.q[i], p = start.p[i];
        std::size_t next = 0;
        auto record = [&](std::size_t s) {
            while (next < snap_steps.size() && snap_steps[next] == s) {
                out.snapshots[next].q[i] = q;
                out.snapshots[next].p[i] = p;
                ++next;
            }
        };
        record(0);
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = opt.t_start + static_cast<double>(s) * dt;
            q += 0.5 * dt * p / mass;
            p += dt * force(q, t + 0.5 * dt);
            q += 0.5 * dt * p / mass;
            if (!domain.contains(q) || !std::isfinite(p))
                throw NumericalError("integrate_ensemble: trajectory " + std::to_string(i) +
                                     " left the domain at t=" + std::to_string(t + dt));
            record(s + 1);
        }
        out.final.q[i] = q;
        out.final.p[i] = p;
    });
    out.final.t = opt.t_end;
    return out;
}

/// H0 at the ensemble time.
inline std::vector<double> ensemble_energies(const TrajectoryEnsemble& ens, const Potential& u)
{
    const double m = u.params().mass;
    std::vector<double> e(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) e[i] = 0.5 * ens.p[i] * ens.p[i] / m + u.value(ens.q[i], ens.t);
    return e;
}

/// Action of the H0 shell through each point.
inline std::vector<double> ensemble_actions(const TrajectoryEnsemble& ens, const Potential& u, const Grid1D& grid)
{
    const auto e = ensemble_energies(ens, u);
    std::vector<double> out(ens.size());
    parallel_for(ens.size(), [&](std::size_t i) { out[i] = action(u, ens.t, grid, e[i]); });
    return out;
}

struct AngleDistribution {
    std::vector<double> density;  ///< eta_j, per radian
    std::vector<double> theta;    ///< per-sample angles
    std::vector<double> residual; ///< per-sample |H0 - E| / E
    std::size_t bins = 0;

    double bin_width() const { return 2.0 * std::numbers::pi / static_cast<double>(bins); }
    double center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * bin_width(); }
};

/// Histogram of counts normalized so that sum eta_j dtheta = 1.
inline std::vector<double> angle_histogram(const std::vector<double>& theta, std::size_t bins)
{
    if (bins == 0) throw ConfigError("angle_histogram: need at least one bin");
    const double width = 2.0 * std::numbers::pi / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double th : theta) {
        auto j = static_cast<std::size_t>(std::floor(th / width));
        counts[j % bins] += 1;
    }
    std::vector<double> density(bins);
    const double scale = 1.0 / (static_cast<double>(theta.size()) * width);
    for (std::size_t j = 0; j < bins; ++j) density[j] = static_cast<double>(counts[j]) * scale;
    return density;
}

/// theta = omega t_q on the upper branch, 2 pi - omega t_q on the lower.
inline AngleDistribution extract_final_angles(const TrajectoryEnsemble& ens, const EnergyShell& shell,
                                              std::size_t bins, double max_residual = 0.05)
{
    const double e = shell.energy();
    const auto& u = shell.potential();
    AngleDistribution out{{}, std::vector<double>(ens.size()), std::vector<double>(ens.size()), bins};
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double h = 0.5 * ens.p[i] * ens.p[i] / shell.mass() + u.value(ens.q[i], shell.t());
        out.residual[i] = std::abs(h - e) / std::abs(e);
        if (out.residual[i] > max_residual)
            throw NumericalError("extract_final_angles: trajectory " + std::to_string(i) + " is " +
                                 std::to_string(100.0 * out.residual[i]) + "% off the shell");
    }
    parallel_for(ens.size(), [&](std::size_t i) {
        const double q = std::clamp(ens.q[i], shell.q_left(), shell.q_right());
        const double up = shell.angle_at(q);
        out.theta[i] = ens.p[i] >= 0.0 ? up : 2.0 * std::numbers::pi - up;
    });
    out.density = angle_histogram(out.theta, bins);
    return out;
}

}  // namespace semiff
