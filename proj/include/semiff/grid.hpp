#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semiff/error.hpp"

namespace semiff {

/// Uniform grid q_i = q_min + i*dq, i = 0..N-1, both ends included.
class Grid1D {
public:
    Grid1D(double q_min, double q_max, std::size_t points)
        : q_min_(q_min), q_max_(q_max), points_(points)
    {
        if (points < 16)
            throw ConfigError("Grid1D: need at least 16 points, got " + std::to_string(points));
        if (!(q_min < q_max))
            throw ConfigError("Grid1D: q_min must be smaller than q_max");
    }

    static Grid1D symmetric(double q_max, std::size_t points) { return {-q_max, q_max, points}; }

    double q_min() const { return q_min_; }
    double q_max() const { return q_max_; }
    std::size_t size() const { return points_; }
    double spacing() const { return (q_max_ - q_min_) / static_cast<double>(points_ - 1); }
    double operator[](std::size_t i) const { return q_min_ + spacing() * static_cast<double>(i); }

    std::vector<double> points() const
    {
        std::vector<double> q(points_);
        for (std::size_t i = 0; i < points_; ++i) q[i] = (*this)[i];
        return q;
    }

    /// Same box, twice as many points.
    Grid1D refined() const { return {q_min_, q_max_, 2 * points_}; }

    bool contains(double q) const { return q >= q_min_ && q <= q_max_; }

    bool operator==(const Grid1D& o) const
    {
        return q_min_ == o.q_min_ && q_max_ == o.q_max_ && points_ == o.points_;
    }

private:
    double q_min_;
    double q_max_;
    std::size_t points_;
};

/// A function sampled on a grid at one instant.
template <class T>
struct Field {
    Grid1D grid;
    std::vector<T> values;

    explicit Field(const Grid1D& g) : grid(g), values(g.size(), T{}) {}
    Field(const Grid1D& g, std::vector<T> v) : grid(g), values(std::move(v))
    {
        if (values.size() != grid.size()) throw Error("Field: value count does not match grid");
    }

    std::size_t size() const { return values.size(); }
    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
    std::span<const T> view() const { return values; }
    std::span<T> view() { return values; }
};

using ScalarField = Field<double>;
using ComplexField = Field<std::complex<double>>;

inline void require_same_grid(const Grid1D& a, const Grid1D& b, const char* where)
{
    if (!(a == b)) throw Error(std::string(where) + ": grid mismatch");
}

/// Rectangle-rule norm sum |psi|^2 dq (exact for the grid inner product).
inline double norm2(const ComplexField& psi)
{
    double s = 0.0;
    for (const auto& z : psi.values) s += std::norm(z);
    return s * psi.grid.spacing();
}

/// Four-point (cubic) Lagrange interpolation of samples on a uniform grid.
/// q outside the grid is clamped to the end cells.
inline double cubic_interpolate(std::span<const double> y, const Grid1D& g, double q)
{
    const double h = g.spacing();
    const double x = (q - g.q_min()) / h;
    const auto n = static_cast<long>(g.size());
    long i = static_cast<long>(std::floor(x));
    i = std::clamp(i, 1L, n - 3);
    const double s = x - static_cast<double>(i);
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1], y3 = y[i + 2];
    return -y0 * s * (s - 1.0) * (s - 2.0) / 6.0 + y1 * (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 -
           y2 * (s + 1.0) * s * (s - 2.0) / 2.0 + y3 * (s + 1.0) * s * (s - 1.0) / 6.0;
}

}  // namespace semiff
