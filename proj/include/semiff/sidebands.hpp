#pragma once

// Semiclassical sideband weights from a final angle distribution:
//   w_l = | int dtheta e^{-i l theta} sqrt(eta / 2 pi) |^2

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "semiff/cdyn.hpp"
#include "semiff/error.hpp"

namespace semiff {

struct SidebandPrediction {
    int n = 0;
    int max_offset = 0;
    std::vector<double> weights;  ///< w_l at index l + L

    double weight(int l) const
    {
        if (l < -max_offset || l > max_offset) return 0.0;
        return weights[static_cast<std::size_t>(l + max_offset)];
    }
    double total() const
    {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Midpoint rule over the histogram bins. Empty bins contribute nothing.
inline SidebandPrediction predict_sidebands(const AngleDistribution& eta, int max_offset = 6, int n = 0)
{
    if (max_offset < 0) throw ConfigError("predict_sidebands: offset range must be non-negative");
    if (eta.bins == 0 || eta.density.size() != eta.bins) throw ConfigError("predict_sidebands: empty distribution");
    SidebandPrediction out{n, max_offset, {}};
    const double width = eta.bin_width();
    std::vector<double> amp(eta.bins);
    for (std::size_t j = 0; j < eta.bins; ++j) amp[j] = std::sqrt(std::max(eta.density[j], 0.0) / (2.0 * std::numbers::pi));
    for (int l = -max_offset; l <= max_offset; ++l) {
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < eta.bins; ++j)
            s += amp[j] * std::polar(1.0, -static_cast<double>(l) * eta.center(j));
        out.weights.push_back(std::norm(s * width));
    }
    return out;
}

/// Wraps a plain density table (bin centres uniform on [0, 2 pi)).
inline AngleDistribution distribution_from_density(std::vector<double> density)
{
    AngleDistribution d;
    d.bins = density.size();
    d.density = std::move(density);
    return d;
}

struct SidebandRow {
    int k;
    int l;
    double semiclassical;
    double quantum;
    double abs_diff;
};

struct SidebandComparison {
    std::vector<SidebandRow> rows;
    double sup_diff = 0.0;  ///< over |l| <= window
};

/// Rows for l = -L..L with k = n + l; k outside the population table reads 0.
inline SidebandComparison compare(const SidebandPrediction& pred, const std::vector<double>& p, int window = 3)
{
    SidebandComparison out;
    for (int l = -pred.max_offset; l <= pred.max_offset; ++l) {
        const int k = pred.n + l;
        if (k < 0) continue;
        const double pk = static_cast<std::size_t>(k) < p.size() ? p[static_cast<std::size_t>(k)] : 0.0;
        const double w = pred.weight(l);
        const SidebandRow row{k, l, w, pk, std::abs(w - pk)};
        if (std::abs(l) <= window) out.sup_diff = std::max(out.sup_diff, row.abs_diff);
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace semiff
