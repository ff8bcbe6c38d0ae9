#pragma once

// Flat `key = value` run configuration.

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "semiff/error.hpp"
#include "semiff/model.hpp"

namespace semiff {

struct RunConfig {
    std::string potential = "quartic";
    PhysicalParams params;
    double q_max = 8.0;
    std::size_t grid_points = 1024;
    double dt_quantum = 1e-4;
    double dt_classical = 1e-4;
    std::size_t n_trajectories = 20000;
    std::size_t theta_bins = 64;
    std::string output_dir = "out";

    Grid1D grid() const { return Grid1D::symmetric(q_max, grid_points); }

    void validate() const
    {
        params.validate();
        if (!(q_max > 0.0)) throw ConfigError("q_max must be positive");
        if (grid_points < 16) throw ConfigError("grid_points must be at least 16");
        if (!(dt_quantum > 0.0)) throw ConfigError("dt_quantum must be positive");
        if (!(dt_classical > 0.0)) throw ConfigError("dt_classical must be positive");
        if (n_trajectories < 2) throw ConfigError("n_trajectories must be at least 2");
        if (theta_bins < 1) throw ConfigError("theta_bins must be positive");
    }

    /// Key/value echo in file order, suitable for writing back out.
    std::map<std::string, std::string> echo() const
    {
        auto num = [](double x) {
            std::ostringstream s;
            s.precision(17);
            s << x;
            return s.str();
        };
        return {{"potential", potential},
                {"mass", num(params.mass)},
                {"hbar", num(params.hbar)},
                {"tau", num(params.tau)},
                {"n", std::to_string(params.n)},
                {"q_max", num(q_max)},
                {"grid_points", std::to_string(grid_points)},
                {"dt_quantum", num(dt_quantum)},
                {"dt_classical", num(dt_classical)},
                {"n_trajectories", std::to_string(n_trajectories)},
                {"theta_bins", std::to_string(theta_bins)},
                {"output_dir", output_dir}};
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
    return value;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in)
{
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        using detail::parse_number;
        if (key == "potential") cfg.potential = val;
        else if (key == "mass") cfg.params.mass = parse_number<double>(key, val);
        else if (key == "hbar") cfg.params.hbar = parse_number<double>(key, val);
        else if (key == "tau") cfg.params.tau = parse_number<double>(key, val);
        else if (key == "n") cfg.params.n = parse_number<int>(key, val);
        else if (key == "q_max") cfg.q_max = parse_number<double>(key, val);
        else if (key == "grid_points") cfg.grid_points = parse_number<std::size_t>(key, val);
        else if (key == "dt_quantum") cfg.dt_quantum = parse_number<double>(key, val);
        else if (key == "dt_classical") cfg.dt_classical = parse_number<double>(key, val);
        else if (key == "n_trajectories") cfg.n_trajectories = parse_number<std::size_t>(key, val);
        else if (key == "theta_bins") cfg.theta_bins = parse_number<std::size_t>(key, val);
        else if (key == "output_dir") cfg.output_dir = val;
        else throw ConfigError("unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Potential names: `quartic`, `harmonic[:omega]`,
/// `scale_invariant[:shift[:final_gamma]]`, `custom:<csv path>`.
inline PotentialSpec make_potential_spec(const RunConfig& cfg)
{
    const std::string& name = cfg.potential;
    const auto colon = name.find(':');
    const std::string head = name.substr(0, colon);
    const std::string tail = colon == std::string::npos ? std::string{} : name.substr(colon + 1);
    if (head == "quartic") return QuarticPaper{};
    if (head == "harmonic") return Harmonic{tail.empty() ? 1.0 : detail::parse_number<double>("potential", tail)};
    if (head == "scale_invariant") {
        double shift = 1.0, gamma = 0.8;
        if (!tail.empty()) {
            const auto c2 = tail.find(':');
            shift = detail::parse_number<double>("potential", tail.substr(0, c2));
            if (c2 != std::string::npos) gamma = detail::parse_number<double>("potential", tail.substr(c2 + 1));
        }
        return ScaleInvariant::quartic(shift, gamma, cfg.params.tau);
    }
    if (head == "custom") {
        if (tail.empty()) throw ConfigError("potential 'custom' needs a file: custom:<path>");
        return Custom{std::make_shared<const TabulatedPotential>(TabulatedPotential::load_csv(tail))};
    }
    throw ConfigError("unknown potential '" + name + "'");
}

}  // namespace semiff
