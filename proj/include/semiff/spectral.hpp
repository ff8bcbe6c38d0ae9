#pragma once

// Instantaneous eigenpairs of H0 = -hbar^2/2m d^2/dq^2 + U0 on a grid.
//
// The kinetic operator is the Fourier-grid (periodic sinc) matrix, i.e. the
// exact matrix of hbar^2 k^2/2m in the same discrete Fourier basis that the
// split-step propagator uses. Eigenvectors are therefore stationary under
// the propagator up to splitting error, and eigenvalues converge
// exponentially with N.

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "semiff/error.hpp"
#include "semiff/grid.hpp"
#include "semiff/model.hpp"

namespace semiff {

struct EigenSolution {
    double t = 0.0;
    Grid1D grid;
    std::vector<double> energies;      ///< ascending
    std::vector<ScalarField> vectors;  ///< sum phi^2 dq = 1, first lobe positive

    std::size_t count() const { return energies.size(); }
};

/// Angular wavenumbers in FFT order for N points of spacing dq.
inline std::vector<double> fft_wavenumbers(const Grid1D& grid)
{
    const std::size_t n = grid.size();
    const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n) * grid.spacing());
    std::vector<double> k(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<long>(j);
        const long signed_j = (j < (n + 1) / 2) ? jj : jj - static_cast<long>(n);
        k[j] = dk * static_cast<double>(signed_j);
    }
    return k;
}

/// Number of sign changes of f, ignoring samples below rel_floor * max|f|.
inline int count_nodes(std::span<const double> f, double rel_floor = 1e-6)
{
    double peak = 0.0;
    for (double x : f) peak = std::max(peak, std::abs(x));
    const double floor = rel_floor * peak;
    int nodes = 0;
    double last = 0.0;
    for (double x : f) {
        if (std::abs(x) <= floor) continue;
        if (last != 0.0 && (x > 0.0) != (last > 0.0)) ++nodes;
        last = x;
    }
    return nodes;
}

/// Linearly interpolated zero crossings of f between significant samples.
inline std::vector<double> node_positions(const ScalarField& f, double rel_floor = 1e-6)
{
    double peak = 0.0;
    for (double x : f.values) peak = std::max(peak, std::abs(x));
    const double floor = rel_floor * peak;
    std::vector<double> out;
    long prev = -1;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::abs(f[i]) <= floor) continue;
        if (prev >= 0 && (f[i] > 0.0) != (f[prev] > 0.0)) {
            const double qa = f.grid[prev], qb = f.grid[i];
            out.push_back(qa - f[prev] * (qb - qa) / (f[i] - f[prev]));
        }
        prev = static_cast<long>(i);
    }
    return out;
}

class FourierHamiltonian {
public:
    FourierHamiltonian(const Grid1D& grid, double mass, double hbar) : grid_(grid), row_(grid.size(), 0.0)
    {
        const std::size_t n = grid.size();
        const auto k = fft_wavenumbers(grid);
        // T_d = (1/N) sum_j E_j cos(2 pi j d / N); real, symmetric, circulant.
        for (std::size_t d = 0; d < n; ++d) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double kin = hbar * hbar * k[j] * k[j] / (2.0 * mass);
                s += kin * std::cos(2.0 * std::numbers::pi * static_cast<double>((j * d) % n) / static_cast<double>(n));
            }
            row_[d] = s / static_cast<double>(n);
        }
    }

    const Grid1D& grid() const { return grid_; }

    /// Lowest `levels` eigenpairs for the sampled potential.
    EigenSolution solve(const ScalarField& potential, std::size_t levels, double t = 0.0) const
    {
        require_same_grid(potential.grid, grid_, "solve_eigenproblem");
        const std::size_t n = grid_.size();
        if (levels == 0) throw ConfigError("solve_eigenproblem: need at least one level");
        if (levels > n / 4)
            throw ConfigError("solve_eigenproblem: " + std::to_string(levels) + " levels exceed N/4 = " +
                              std::to_string(n / 4) + "; refine the grid");

        std::vector<double> a(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t d = i >= j ? i - j : j - i;
                a[i * n + j] = row_[d];
            }
        for (std::size_t i = 0; i < n; ++i) a[i * n + i] += potential[i];

        lapack_int found = 0;
        std::vector<double> w(n), z(n * levels);
        std::vector<lapack_int> support(2 * levels);
        const auto ni = static_cast<lapack_int>(n);
        const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', ni, a.data(), ni, 0.0, 0.0, 1,
                                               static_cast<lapack_int>(levels), 0.0, &found, w.data(), z.data(), ni,
                                               support.data());
        if (info != 0 || found != static_cast<lapack_int>(levels))
            throw NumericalError("solve_eigenproblem: LAPACK dsyevr failed (info=" + std::to_string(info) + ")");

        EigenSolution sol{t, grid_, {}, {}};
        const double norm = 1.0 / std::sqrt(grid_.spacing());
        for (std::size_t k = 0; k < levels; ++k) {
            ScalarField phi(grid_);
            double peak = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                phi[i] = z[k * n + i] * norm;
                peak = std::max(peak, std::abs(phi[i]));
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (std::abs(phi[i]) > 1e-3 * peak) {
                    if (phi[i] < 0.0)
                        for (auto& x : phi.values) x = -x;
                    break;
                }
            }
            sol.energies.push_back(w[k]);
            sol.vectors.push_back(std::move(phi));
        }

        const auto& top = sol.vectors.back();
        double peak = 0.0;
        for (double x : top.values) peak = std::max(peak, std::abs(x));
        const double edge = std::max(std::abs(top.values.front()), std::abs(top.values.back()));
        if (edge > 1e-8 * peak)
            throw NumericalError("solve_eigenproblem: level " + std::to_string(levels - 1) +
                                 " does not decay at the box edge (relative " + std::to_string(edge / peak) +
                                 "); increase q_max");
        return sol;
    }

private:
    Grid1D grid_;
    std::vector<double> row_;
};

inline EigenSolution solve_eigenproblem(const ScalarField& potential, const PhysicalParams& params,
                                        std::size_t levels, double t = 0.0)
{
    return FourierHamiltonian(potential.grid, params.mass, params.hbar).solve(potential, levels, t);
}

/// p_k = |sum_q phi_k psi* dq|^2.
inline std::vector<double> populations(const ComplexField& psi, const EigenSolution& eig)
{
    require_same_grid(psi.grid, eig.grid, "populations");
    const double dq = eig.grid.spacing();
    std::vector<double> p(eig.count());
    for (std::size_t k = 0; k < eig.count(); ++k) {
        std::complex<double> s = 0.0;
        const auto& phi = eig.vectors[k];
        for (std::size_t i = 0; i < psi.size(); ++i) s += phi[i] * std::conj(psi[i]);
        p[k] = std::norm(s * dq);
    }
    return p;
}

}  // namespace semiff
