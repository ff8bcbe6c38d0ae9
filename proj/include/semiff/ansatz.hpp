#pragma once

// How well the transported eigenstates solve the driven equation.
//
// With psi = exp(iS/hbar - i int E/hbar) phi_n and S from the flow, the
// Schroedinger residual reduces to
//   i hbar (d_t phi + v phi' + v' phi / 2) - (H0 - E) phi,
// whose first part alone is the transport residual i hbar d_t phi - D phi,
// D = (p v + v p)/2.

#include <cmath>
#include <complex>
#include <vector>

#include "semiff/fastforward.hpp"
#include "semiff/qdyn.hpp"
#include "semiff/spectral.hpp"

namespace semiff {

struct AnsatzResidual {
    double transport = 0.0;     ///< || i hbar d_t phi - D phi ||, time averaged
    double schroedinger = 0.0;  ///< || i hbar d_t psi - (H0 + U_FF) psi || / ||psi||, time averaged
};

namespace detail {

/// Spectral derivative of a real periodic sample.
inline ScalarField spectral_derivative(const ScalarField& f, FourierTransform& fft)
{
    const auto k = fft_wavenumbers(f.grid);
    auto* z = fft.data();
    for (std::size_t i = 0; i < f.size(); ++i) z[i] = f[i];
    fft.forward();
    const double scale = 1.0 / static_cast<double>(f.size());
    for (std::size_t j = 0; j < k.size(); ++j) z[j] *= std::complex<double>(0.0, k[j] * scale);
    if (f.size() % 2 == 0) z[f.size() / 2] = 0.0;
    fft.backward();
    ScalarField d(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) d[i] = z[i].real();
    return d;
}

/// -hbar^2/2m f'' by FFT.
inline ScalarField spectral_kinetic(const ScalarField& f, FourierTransform& fft, double mass, double hbar)
{
    const auto k = fft_wavenumbers(f.grid);
    auto* z = fft.data();
    for (std::size_t i = 0; i < f.size(); ++i) z[i] = f[i];
    fft.forward();
    const double scale = 1.0 / static_cast<double>(f.size());
    for (std::size_t j = 0; j < k.size(); ++j) z[j] *= hbar * hbar * k[j] * k[j] / (2.0 * mass) * scale;
    fft.backward();
    ScalarField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = z[i].real();
    return out;
}

}  // namespace detail

/// Averages both residual forms over `samples` interior times of (0, tau),
/// using eigenvector n at t and t +- delta.
inline AnsatzResidual ansatz_residual(const Potential& u, const FlowTable& table, std::size_t n,
                                      std::size_t samples = 9, double delta_fraction = 1e-4)
{
    const auto& params = u.params();
    const Grid1D& grid = table.grid();
    const double tau = params.tau;
    const double delta = delta_fraction * tau;
    const double dq = grid.spacing();
    const FourierHamiltonian h(grid, params.mass, params.hbar);
    FourierTransform fft(grid.size());
    const std::size_t levels = std::max<std::size_t>(n + 1, 2);

    auto state_at = [&](double t, const ScalarField* align) {
        auto eig = h.solve(evaluate_potential(u, grid, t), levels, t);
        ScalarField phi = eig.vectors[n];
        if (align) {
            double overlap = 0.0;
            for (std::size_t i = 0; i < phi.size(); ++i) overlap += phi[i] * (*align)[i];
            if (overlap < 0.0)
                for (auto& x : phi.values) x = -x;
        }
        return std::pair{std::move(phi), eig.energies[n]};
    };

    AnsatzResidual out;
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = tau * (static_cast<double>(s) + 0.5) / static_cast<double>(samples);
        auto [phi, energy] = state_at(t, nullptr);
        const auto plus = state_at(t + delta, &phi).first;
        const auto minus = state_at(t - delta, &phi).first;
        const ScalarField v = table.velocity_at(t);
        const ScalarField dphi = detail::spectral_derivative(phi, fft);
        const ScalarField dv = gradient(v);
        const ScalarField kin = detail::spectral_kinetic(phi, fft, params.mass, params.hbar);

        double transport = 0.0, full = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double dt_phi = (plus[i] - minus[i]) / (2.0 * delta);
            const double r = params.hbar * (dt_phi + v[i] * dphi[i] + 0.5 * dv[i] * phi[i]);
            const double stationary = kin[i] + (u.value(grid[i], t) - energy) * phi[i];
            transport += r * r;
            full += r * r + stationary * stationary;  // i r - stationary: real and imaginary parts
            norm += phi[i] * phi[i];
        }
        out.transport += std::sqrt(transport * dq);
        out.schroedinger += std::sqrt(full / norm);
    }
    out.transport /= static_cast<double>(samples);
    out.schroedinger /= static_cast<double>(samples);
    return out;
}

}  // namespace semiff
