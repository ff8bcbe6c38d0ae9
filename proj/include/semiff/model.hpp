#pragma once

// Bare potentials U0(q,t), their driving schedules and physical constants.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "semiff/error.hpp"
#include "semiff/grid.hpp"

namespace semiff {

struct PhysicalParams {
    double mass = 1.0;
    double hbar = 2.0;
    double tau = 1.0;  ///< protocol duration
    int n = 17;        ///< target quantum number

    void validate() const
    {
        if (!(mass > 0.0)) throw ConfigError("mass must be positive");
        if (!(hbar > 0.0)) throw ConfigError("hbar must be positive");
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        if (n < 0) throw ConfigError("quantum number n must be non-negative");
    }
};

/// lambda(t) = 4 cos(pi t/tau) [5 - cos(2 pi t/tau)], held constant outside [0, tau].
class QuarticSchedule {
public:
    explicit QuarticSchedule(double tau) : tau_(tau) {}

    double lambda(double t) const
    {
        const double a = std::numbers::pi * clamp(t) / tau_;
        return 4.0 * std::cos(a) * (5.0 - std::cos(2.0 * a));
    }

    double lambda_dot(double t) const
    {
        if (t <= 0.0 || t >= tau_) return 0.0;
        const double w = std::numbers::pi / tau_;
        const double a = w * t;
        return 4.0 * w * (-std::sin(a) * (5.0 - std::cos(2.0 * a)) + 2.0 * std::cos(a) * std::sin(2.0 * a));
    }

    double tau() const { return tau_; }

private:
    double clamp(double t) const { return std::clamp(t, 0.0, tau_); }
    double tau_;
};

/// U0(q,t) = q^4 - 16 q^2 + lambda(t) q.
struct QuarticPaper {};

/// Static oscillator m w^2 q^2 / 2.
struct Harmonic {
    double omega = 1.0;
};

/// A scalar function of time together with its first two derivatives.
struct Ramp {
    std::function<double(double)> value;
    std::function<double(double)> rate;
    std::function<double(double)> accel;

    /// Constant c for all t.
    static Ramp constant(double c)
    {
        return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
    }

    /// from -> to over [0, tau] with vanishing first and second derivatives at
    /// both ends: s(t) = t/tau - sin(2 pi t/tau)/(2 pi), held constant outside.
    static Ramp smooth(double from, double to, double tau)
    {
        const double d = to - from;
        const double w = 2.0 * std::numbers::pi / tau;
        auto inside = [tau](double t) { return t > 0.0 && t < tau; };
        return {[=](double t) {
                    const double s = std::clamp(t, 0.0, tau);
                    return from + d * (s / tau - std::sin(w * s) / (2.0 * std::numbers::pi));
                },
                [=](double t) { return inside(t) ? d / tau * (1.0 - std::cos(w * t)) : 0.0; },
                [=](double t) { return inside(t) ? d / tau * w * std::sin(w * t) : 0.0; }};
    }
};

/// U0(q,t) = base((q - f)/gamma) / gamma^2: translations and dilations of a
/// fixed profile.
struct ScaleInvariant {
    std::function<double(double)> base;
    std::function<double(double)> base_derivative;
    Ramp f;
    Ramp gamma;

    /// Quartic profile x^4 translated by shift and dilated to final_gamma.
    static ScaleInvariant quartic(double shift, double final_gamma, double tau)
    {
        return {[](double x) { return x * x * x * x; }, [](double x) { return 4.0 * x * x * x; },
                Ramp::smooth(0.0, shift, tau), Ramp::smooth(1.0, final_gamma, tau)};
    }
};

/// Tabulated U0 on a uniform q grid at a list of increasing times; cubic
/// B-spline in q, linear in t, constant in t outside the table.
class TabulatedPotential {
public:
    TabulatedPotential(std::vector<double> times, double q0, double dq, std::vector<std::vector<double>> rows)
        : times_(std::move(times)), q0_(q0), dq_(dq)
    {
        if (times_.empty() || rows.size() != times_.size())
            throw ConfigError("tabulated potential: one row per time required");
        if (!std::is_sorted(times_.begin(), times_.end()) ||
            std::adjacent_find(times_.begin(), times_.end()) != times_.end())
            throw ConfigError("tabulated potential: times must be strictly increasing");
        nq_ = rows.front().size();
        if (nq_ < 4) throw ConfigError("tabulated potential: need at least 4 q samples");
        for (const auto& r : rows) {
            if (r.size() != nq_) throw ConfigError("tabulated potential: ragged table");
            splines_.emplace_back(r.begin(), r.end(), q0_, dq_);
        }
    }

    /// Reads CSV with header `t,q,U`, rows grouped by t and sorted by q.
    static TabulatedPotential load_csv(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open tabulated potential '" + path + "'");
        std::string line;
        std::getline(in, line);
        if (line.rfind("t,q,U", 0) != 0) throw ConfigError("tabulated potential: expected header t,q,U");
        std::vector<double> times, qs;
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            double t, q, u;
            char c1, c2;
            if (!(ss >> t >> c1 >> q >> c2 >> u) || c1 != ',' || c2 != ',')
                throw ConfigError("tabulated potential: malformed line '" + line + "'");
            if (times.empty() || t != times.back()) {
                times.push_back(t);
                rows.emplace_back();
            }
            if (times.size() == 1) qs.push_back(q);
            rows.back().push_back(u);
        }
        if (qs.size() < 4) throw ConfigError("tabulated potential: too few q samples");
        const double dq = (qs.back() - qs.front()) / static_cast<double>(qs.size() - 1);
        return {std::move(times), qs.front(), dq, std::move(rows)};
    }

    double value(double q, double t) const
    {
        auto [j, w] = locate(t);
        check(q, t);
        if (w == 0.0) return splines_[j](q);
        return (1.0 - w) * splines_[j](q) + w * splines_[j + 1](q);
    }

    double dq(double q, double t) const
    {
        auto [j, w] = locate(t);
        check(q, t);
        if (w == 0.0) return splines_[j].prime(q);
        return (1.0 - w) * splines_[j].prime(q) + w * splines_[j + 1].prime(q);
    }

    double dt(double q, double t) const
    {
        if (times_.size() < 2 || t <= times_.front() || t >= times_.back()) return 0.0;
        auto [j, w] = locate(t);
        check(q, t);
        return (splines_[j + 1](q) - splines_[j](q)) / (times_[j + 1] - times_[j]);
    }

    double q_min() const { return q0_; }
    double q_max() const { return q0_ + dq_ * static_cast<double>(nq_ - 1); }

private:
    std::pair<std::size_t, double> locate(double t) const
    {
        if (t <= times_.front()) return {0, 0.0};
        if (t >= times_.back()) return {times_.size() - 1, 0.0};
        const auto it = std::upper_bound(times_.begin(), times_.end(), t);
        const auto j = static_cast<std::size_t>(it - times_.begin()) - 1;
        return {j, (t - times_[j]) / (times_[j + 1] - times_[j])};
    }

    void check(double q, double t) const
    {
        if (q < q_min() - 1e-12 || q > q_max() + 1e-12)
            throw NumericalError("tabulated potential evaluated outside its q range at q=" + std::to_string(q) +
                                 ", t=" + std::to_string(t));
    }

    std::vector<double> times_;
    double q0_;
    double dq_;
    std::size_t nq_ = 0;
    std::vector<boost::math::interpolators::cardinal_cubic_b_spline<double>> splines_;
};

struct Custom {
    std::shared_ptr<const TabulatedPotential> table;
};

using PotentialSpec = std::variant<QuarticPaper, Harmonic, ScaleInvariant, Custom>;

/// A potential specification bound to physical parameters. Cheap to copy;
/// immutable.
class Potential {
public:
    Potential(PotentialSpec spec, PhysicalParams params)
        : spec_(std::make_shared<const PotentialSpec>(std::move(spec))), params_(params), schedule_(params.tau)
    {
        params_.validate();
    }

    const PhysicalParams& params() const { return params_; }
    const PotentialSpec& spec() const { return *spec_; }
    const QuarticSchedule& schedule() const { return schedule_; }

    bool is_static() const { return std::holds_alternative<Harmonic>(*spec_); }

    double value(double q, double t) const
    {
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, QuarticPaper>) {
                    const double q2 = q * q;
                    return q2 * q2 - 16.0 * q2 + schedule_.lambda(t) * q;
                } else if constexpr (std::is_same_v<S, Harmonic>) {
                    return 0.5 * params_.mass * s.omega * s.omega * q * q;
                } else if constexpr (std::is_same_v<S, ScaleInvariant>) {
                    const double g = s.gamma.value(t);
                    return s.base((q - s.f.value(t)) / g) / (g * g);
                } else {
                    return s.table->value(q, t);
                }
            },
            *spec_);
    }

    /// dU0/dq at fixed t.
    double dq(double q, double t) const
    {
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, QuarticPaper>) {
                    return 4.0 * q * q * q - 32.0 * q + schedule_.lambda(t);
                } else if constexpr (std::is_same_v<S, Harmonic>) {
                    return params_.mass * s.omega * s.omega * q;
                } else if constexpr (std::is_same_v<S, ScaleInvariant>) {
                    const double g = s.gamma.value(t);
                    return s.base_derivative((q - s.f.value(t)) / g) / (g * g * g);
                } else {
                    return s.table->dq(q, t);
                }
            },
            *spec_);
    }

    /// dU0/dt at fixed q.
    double dt(double q, double t) const
    {
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, QuarticPaper>) {
                    return schedule_.lambda_dot(t) * q;
                } else if constexpr (std::is_same_v<S, Harmonic>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<S, ScaleInvariant>) {
                    const double g = s.gamma.value(t), gd = s.gamma.rate(t);
                    const double x = (q - s.f.value(t)) / g;
                    const double x_dot = -s.f.rate(t) / g - x * gd / g;
                    return -2.0 * gd / (g * g * g) * s.base(x) + s.base_derivative(x) * x_dot / (g * g);
                } else {
                    return s.table->dt(q, t);
                }
            },
            *spec_);
    }

private:
    std::shared_ptr<const PotentialSpec> spec_;
    PhysicalParams params_;
    QuarticSchedule schedule_;
};

namespace detail {
template <class F>
ScalarField sample(const Grid1D& grid, double t, F&& f)
{
    ScalarField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid[i];
        const double u = f(q);
        if (!std::isfinite(u))
            throw NumericalError("potential is not finite at q=" + std::to_string(q) + ", t=" + std::to_string(t));
        out[i] = u;
    }
    return out;
}
}  // namespace detail

inline ScalarField evaluate_potential(const Potential& u, const Grid1D& grid, double t)
{
    return detail::sample(grid, t, [&](double q) { return u.value(q, t); });
}

inline ScalarField evaluate_potential(const PotentialSpec& spec, const PhysicalParams& params, const Grid1D& grid,
                                      double t)
{
    return evaluate_potential(Potential(spec, params), grid, t);
}

inline ScalarField evaluate_potential_time_derivative(const Potential& u, const Grid1D& grid, double t)
{
    return detail::sample(grid, t, [&](double q) { return u.dt(q, t); });
}

inline ScalarField evaluate_potential_time_derivative(const PotentialSpec& spec, const PhysicalParams& params,
                                                     const Grid1D& grid, double t)
{
    return evaluate_potential_time_derivative(Potential(spec, params), grid, t);
}

}  // namespace semiff
