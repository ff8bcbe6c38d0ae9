#pragma once

// Split-step Fourier propagation of i hbar dpsi/dt = (H0 + U_FF) psi.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "semiff/error.hpp"
#include "semiff/fastforward.hpp"
#include "semiff/grid.hpp"
#include "semiff/model.hpp"
#include "semiff/parallel.hpp"
#include "semiff/spectral.hpp"

namespace semiff {

namespace detail {

// The FFTW planner is not re-entrant.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace detail

/// In-place complex DFT pair on a fixed-size buffer. FFTW_ESTIMATE keeps the
/// chosen algorithm, and hence the output bits, independent of timing.
class FourierTransform {
public:
    explicit FourierTransform(std::size_t n)
        : n_(n), buffer_(fftw_alloc_complex(n), &fftw_free)
    {
        if (!buffer_) throw NumericalError("FourierTransform: allocation failed");
        std::lock_guard lock(detail::fftw_planner_mutex());
        const int ni = static_cast<int>(n);
        forward_ = fftw_plan_dft_1d(ni, buffer_.get(), buffer_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(ni, buffer_.get(), buffer_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw NumericalError("FourierTransform: planning failed");
    }
    ~FourierTransform()
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }
    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;

    std::size_t size() const { return n_; }
    std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buffer_.get()); }
    void forward() { fftw_execute(forward_); }
    /// Unnormalized; callers fold 1/N into their multipliers.
    void backward() { fftw_execute(backward_); }

private:
    std::size_t n_;
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> buffer_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// H0(t) alone, or H0(t) + U_FF(t) from a flow table.
struct Hamiltonian {
    Potential potential;
    std::shared_ptr<const FlowTable> flow;

    static Hamiltonian bare(Potential u) { return {std::move(u), nullptr}; }
    static Hamiltonian with_ff(Potential u, std::shared_ptr<const FlowTable> table)
    {
        if (!table) throw ConfigError("Hamiltonian::with_ff: missing flow table");
        return {std::move(u), std::move(table)};
    }
    bool fast_forward() const { return static_cast<bool>(flow); }
    const char* name() const { return flow ? "ff" : "bare"; }

    /// U0 + U_FF sampled at time t into out.
    void sample(const Grid1D& grid, double t, std::span<double> out) const
    {
        if (flow) {
            require_same_grid(grid, flow->grid(), "Hamiltonian");
            flow->potential_at(t, out);
        } else {
            std::fill(out.begin(), out.end(), 0.0);
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double u = potential.value(grid[i], t);
            out[i] += u;
            if (!std::isfinite(out[i]))
                throw NumericalError("propagate: potential not finite at q=" + std::to_string(grid[i]) +
                                     ", t=" + std::to_string(t));
        }
    }
};

/// Applies exp(-i H dt/hbar) by Strang splitting, kinetic half-steps in k
/// space around a full potential step taken at the midpoint time.
class SplitStepPropagator {
public:
    SplitStepPropagator(const Grid1D& grid, const PhysicalParams& params, double dt)
        : grid_(grid), params_(params), dt_(dt), fft_(grid.size()), kinetic_(grid.size()),
          potential_(grid.size())
    {
        const auto k = fft_wavenumbers(grid);
        const double scale = 1.0 / static_cast<double>(grid.size());
        for (std::size_t j = 0; j < k.size(); ++j) {
            const double e = params.hbar * k[j] * k[j] / (2.0 * params.mass);
            kinetic_[j] = std::polar(scale, -0.5 * e * dt);
        }
    }

    double dt() const { return dt_; }

    /// One step from t to t + dt.
    void step(ComplexField& psi, const Hamiltonian& h, double t)
    {
        const std::size_t n = grid_.size();
        auto* z = fft_.data();
        std::copy(psi.values.begin(), psi.values.end(), z);
        kick_kinetic();
        h.sample(grid_, t + 0.5 * dt_, potential_);
        for (std::size_t i = 0; i < n; ++i) {
            const double phase = dt_ * potential_[i] / params_.hbar;
            if (std::abs(phase) > std::numbers::pi)
                throw NumericalError("propagate: dt too large, potential phase " + std::to_string(phase) +
                                     " exceeds pi at q=" + std::to_string(grid_[i]));
            z[i] *= std::polar(1.0, -phase);
        }
        kick_kinetic();
        std::copy(z, z + n, psi.values.begin());
    }

private:
    void kick_kinetic()
    {
        auto* z = fft_.data();
        fft_.forward();
        for (std::size_t j = 0; j < kinetic_.size(); ++j) z[j] *= kinetic_[j];
        fft_.backward();
    }

    Grid1D grid_;
    PhysicalParams params_;
    double dt_;
    FourierTransform fft_;
    std::vector<std::complex<double>> kinetic_;
    std::vector<double> potential_;
};

struct PopulationHistory {
    std::vector<double> times;
    std::vector<std::vector<double>> p;  ///< p[j][k]
    std::size_t levels = 0;

    const std::vector<double>& final() const { return p.back(); }
};

struct Snapshot {
    double t;
    ComplexField psi;
    ScalarField u0;
    ScalarField uff;
};

struct PropagateOptions {
    double dt = 1e-4;
    double t_end = 1.0;
    std::vector<double> snapshot_times;  ///< must include t_end to get final populations
    std::size_t levels = 41;
    double norm_tolerance = 1e-8;
    double boundary_tolerance = 1e-6;
    bool keep_snapshots = false;
};

struct PropagationResult {
    ComplexField psi;
    PopulationHistory populations;
    std::vector<Snapshot> snapshots;
    double norm_drift = 0.0;  ///< max | ||psi|| - ||psi0|| |
    double boundary_mass = 0.0;
    std::size_t steps = 0;
};

/// Probability in the outer 2% of the box on each side.
inline double boundary_mass(const ComplexField& psi)
{
    const std::size_t n = psi.size();
    const std::size_t w = std::max<std::size_t>(2, n / 50);
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) s += std::norm(psi[i]) + std::norm(psi[n - 1 - i]);
    return s * psi.grid.spacing();
}

/// Bare-H0 eigenpairs at each time; shared between runs with equal snapshots.
inline std::vector<EigenSolution> snapshot_eigensystems(const Potential& u, const Grid1D& grid,
                                                        const std::vector<double>& times, std::size_t levels)
{
    const FourierHamiltonian h(grid, u.params().mass, u.params().hbar);
    std::vector<std::optional<EigenSolution>> slots(times.size());
    parallel_for(times.size(), [&](std::size_t j) {
        slots[j] = h.solve(evaluate_potential(u, grid, times[j]), levels, times[j]);
    });
    std::vector<EigenSolution> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// Evolves psi0 from t = 0 to t_end. Snapshot times are rounded to the step
/// grid. If `eigen` is given it must hold one solution per snapshot time.
inline PropagationResult propagate(const ComplexField& psi0, const Hamiltonian& h, const PropagateOptions& opt,
                                   const std::vector<EigenSolution>* eigen = nullptr)
{
    const auto& params = h.potential.params();
    if (!(opt.dt > 0.0) || !(opt.t_end >= 0.0)) throw ConfigError("propagate: dt must be positive, t_end >= 0");
    const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));
    const double dt = steps ? opt.t_end / static_cast<double>(steps) : opt.dt;
    const Grid1D& grid = psi0.grid;

    std::vector<std::size_t> snap_steps;
    for (double ts : opt.snapshot_times) {
        if (ts < 0.0 || ts > opt.t_end * (1.0 + 1e-12))
            throw ConfigError("propagate: snapshot time " + std::to_string(ts) + " outside [0, t_end]");
        snap_steps.push_back(static_cast<std::size_t>(std::llround(ts / dt)));
    }
    if (!std::is_sorted(snap_steps.begin(), snap_steps.end()))
        throw ConfigError("propagate: snapshot times must be increasing");

    PropagationResult out{psi0, {}, {}, 0.0, 0.0, steps};
    const double norm0 = norm2(psi0);
    if (std::abs(norm0 - 1.0) > 1e-6) throw ConfigError("propagate: psi0 is not normalized");

    std::vector<ComplexField> kept;
    SplitStepPropagator stepper(grid, params, dt);
    std::size_t next_snap = 0;
    auto record = [&](std::size_t step_index) {
        while (next_snap < snap_steps.size() && snap_steps[next_snap] == step_index) {
            const double t = static_cast<double>(step_index) * dt;
            out.boundary_mass = std::max(out.boundary_mass, boundary_mass(out.psi));
            if (out.boundary_mass > opt.boundary_tolerance)
                throw NumericalError("propagate: probability " + std::to_string(out.boundary_mass) +
                                     " near the box edge at t=" + std::to_string(t) + "; increase q_max");
            kept.push_back(out.psi);
            out.populations.times.push_back(t);
            ++next_snap;
        }
    };

    record(0);
    for (std::size_t s = 0; s < steps; ++s) {
        stepper.step(out.psi, h, static_cast<double>(s) * dt);
        const double drift = std::abs(norm2(out.psi) - norm0);
        out.norm_drift = std::max(out.norm_drift, drift);
        if (drift > opt.norm_tolerance)
            throw NumericalError("propagate: norm drift " + std::to_string(drift) + " at step " + std::to_string(s));
        record(s + 1);
    }

    std::vector<EigenSolution> local;
    if (!eigen) {
        local = snapshot_eigensystems(h.potential, grid, out.populations.times, opt.levels);
        eigen = &local;
    }
    if (eigen->size() != kept.size()) throw ConfigError("propagate: eigensystem count differs from snapshot count");
    out.populations.levels = opt.levels;
    out.populations.p.resize(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) {
        auto p = populations(kept[j], (*eigen)[j]);
        p.resize(std::min(p.size(), opt.levels));
        out.populations.p[j] = std::move(p);
    }
    if (opt.keep_snapshots) {
        for (std::size_t j = 0; j < kept.size(); ++j) {
            const double t = out.populations.times[j];
            ScalarField uff(grid);
            if (h.flow) h.flow->potential_at(t, uff.values);
            out.snapshots.push_back({t, std::move(kept[j]), evaluate_potential(h.potential, grid, t), std::move(uff)});
        }
    }
    return out;
}

/// Eigenvector k as a normalized complex wavefunction.
inline ComplexField eigenstate(const EigenSolution& eig, std::size_t k)
{
    if (k >= eig.count()) throw ConfigError("eigenstate: level " + std::to_string(k) + " not computed");
    ComplexField psi(eig.grid);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = eig.vectors[k][i];
    return psi;
}

struct DensityOverlay {
    ScalarField abs2;
    ScalarField phi2;
    std::vector<double> minima_psi;
    std::vector<double> minima_phi;
};

/// Interior local minima of a sampled density.
inline std::vector<double> local_minima(const ScalarField& f, double rel_floor = 1e-6)
{
    double peak = 0.0;
    for (double x : f.values) peak = std::max(peak, x);
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        if (f[i] < f[i - 1] && f[i] <= f[i + 1]) {
            if (std::max(f[i - 1], f[i + 1]) < rel_floor * peak) continue;
            out.push_back(f.grid[i]);
        }
    }
    return out;
}

inline DensityOverlay final_density_overlay(const ComplexField& psi, const EigenSolution& eig, std::size_t n)
{
    require_same_grid(psi.grid, eig.grid, "final_density_overlay");
    if (n >= eig.count()) throw ConfigError("final_density_overlay: level not computed");
    DensityOverlay out{ScalarField(psi.grid), ScalarField(psi.grid), {}, {}};
    for (std::size_t i = 0; i < psi.size(); ++i) {
        out.abs2[i] = std::norm(psi[i]);
        out.phi2[i] = eig.vectors[n][i] * eig.vectors[n][i];
    }
    out.minima_psi = local_minima(out.abs2);
    out.minima_phi = local_minima(out.phi2);
    return out;
}

}  // namespace semiff
