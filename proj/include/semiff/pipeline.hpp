#pragma once

// Stage orchestration shared by the CLI and the acceptance runner. Each
// stage result is computed once and cached.

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semiff/cdyn.hpp"
#include "semiff/config.hpp"
#include "semiff/fastforward.hpp"
#include "semiff/io.hpp"
#include "semiff/model.hpp"
#include "semiff/qdyn.hpp"
#include "semiff/sidebands.hpp"
#include "semiff/spectral.hpp"
#include "semiff/wkb.hpp"

namespace semiff {

struct PipelineOptions {
    FlowOptions flow;
    std::size_t snapshots = 101;  ///< uniform population snapshots on [0, tau]
    std::size_t levels = 41;
    int sideband_offsets = 6;
    int sideband_window = 3;
    std::size_t trajectory_frames = 5;  ///< uniform trajectory dumps on [0, tau]
};

struct ClassicalRun {
    TrajectoryEnsemble initial;
    TrajectoryHistory history;
    EnergyShell final_shell;
    AngleDistribution eta;
    double initial_action = 0.0;
    std::vector<double> final_actions;
    double max_action_dev = 0.0;
};

struct AcceptanceThresholds {
    double p17_low = 0.88, p17_high = 0.94;
    double top3_low = 0.97, top3_high = 0.99;
    double p17_bare_max = 0.5;
    double action_dev_max = 0.02;
    double sideband_max = 0.05;
};

class Pipeline {
public:
    explicit Pipeline(RunConfig cfg, PipelineOptions opt = {})
        : cfg_(std::move(cfg)), opt_(opt), potential_(make_potential_spec(cfg_), cfg_.params), grid_(cfg_.grid())
    {
        cfg_.validate();
        if (static_cast<std::size_t>(cfg_.params.n) >= opt_.levels)
            throw ConfigError("quantum number n must be below the number of tracked levels (" +
                              std::to_string(opt_.levels) + ")");
    }

    const RunConfig& config() const { return cfg_; }
    const PipelineOptions& options() const { return opt_; }
    const Potential& potential() const { return potential_; }
    const Grid1D& grid() const { return grid_; }
    int n() const { return cfg_.params.n; }
    double tau() const { return cfg_.params.tau; }

    EigenSolution eigen(double t, std::size_t levels) const
    {
        return solve_eigenproblem(evaluate_potential(potential_, grid_, t), cfg_.params, levels, t);
    }

    WkbState wkb(double t) const { return make_wkb_state(potential_, n(), t, grid_); }

    std::shared_ptr<const FlowTable> flow()
    {
        if (!flow_) flow_ = std::make_shared<const FlowTable>(build_flow_table(potential_, n(), grid_, opt_.flow));
        return flow_;
    }

    std::vector<double> snapshot_times() const
    {
        std::vector<double> t(opt_.snapshots);
        for (std::size_t j = 0; j < t.size(); ++j)
            t[j] = j + 1 == t.size() ? tau() : tau() * static_cast<double>(j) / static_cast<double>(t.size() - 1);
        return t;
    }

    const PropagationResult& quantum(bool fast_forward)
    {
        auto& slot = fast_forward ? quantum_ff_ : quantum_bare_;
        if (slot) return *slot;
        if (snapshot_eigen_.empty())
            snapshot_eigen_ = snapshot_eigensystems(potential_, grid_, snapshot_times(), opt_.levels);
        const ComplexField psi0 = eigenstate(snapshot_eigen_.front(), static_cast<std::size_t>(n()));
        const Hamiltonian h = fast_forward ? Hamiltonian::with_ff(potential_, flow()) : Hamiltonian::bare(potential_);
        PropagateOptions po;
        po.dt = cfg_.dt_quantum;
        po.t_end = tau();
        po.snapshot_times = snapshot_times();
        po.levels = opt_.levels;
        po.keep_snapshots = true;
        slot = propagate(psi0, h, po, &snapshot_eigen_);
        return *slot;
    }

    const EigenSolution& final_eigen()
    {
        if (snapshot_eigen_.empty()) quantum(false);
        return snapshot_eigen_.back();
    }

    const ClassicalRun& classical()
    {
        if (classical_) return *classical_;
        const EnergyShell shell0 = make_shell(potential_, 0.0, grid_, wkb_energy(potential_, n(), 0.0, grid_));
        const TrajectoryEnsemble start = sample_shell_uniform_angle(shell0, cfg_.n_trajectories);
        IntegrateOptions io;
        io.dt = cfg_.dt_classical;
        io.t_end = tau();
        for (std::size_t j = 0; j < opt_.trajectory_frames; ++j)
            io.snapshot_times.push_back(opt_.trajectory_frames == 1
                                            ? tau()
                                            : tau() * static_cast<double>(j) /
                                                  static_cast<double>(opt_.trajectory_frames - 1));
        auto history = integrate_ensemble(start, ForceField::with_ff(potential_, flow()), grid_, io);
        EnergyShell shell1 = make_shell(potential_, tau(), grid_, wkb_energy(potential_, n(), tau(), grid_));
        auto eta = extract_final_angles(history.final, shell1, cfg_.theta_bins);
        auto actions = ensemble_actions(history.final, potential_, grid_);
        const double i0 = shell0.action();
        double dev = 0.0;
        for (double a : actions) dev = std::max(dev, std::abs(a - i0) / i0);
        classical_.emplace(ClassicalRun{start, std::move(history), std::move(shell1), std::move(eta), i0,
                                        std::move(actions), dev});
        return *classical_;
    }

    SidebandComparison sidebands(const AngleDistribution& eta, const std::vector<double>& p) const
    {
        return compare(predict_sidebands(eta, opt_.sideband_offsets, n()), p, opt_.sideband_window);
    }

    // ---- writers ----

    void write_eigen(OutputWriter& w, double t, bool vectors, std::size_t levels) const
    {
        const auto eig = eigen(t, levels);
        CsvTable e({"k", "E"});
        for (std::size_t k = 0; k < eig.count(); ++k) e.row(k, eig.energies[k]);
        w.write_csv("eigenvalues_t" + time_label(t) + ".csv", e);
        if (!vectors) return;
        for (std::size_t k = 0; k < eig.count(); ++k) {
            CsvTable v({"q", "phi"});
            for (std::size_t i = 0; i < grid_.size(); ++i) v.row(grid_[i], eig.vectors[k][i]);
            w.write_csv("eigvec_t" + time_label(t) + "_k" + std::to_string(k) + ".csv", v);
        }
    }

    void write_wkb(OutputWriter& w, double t) const
    {
        const auto st = wkb(t);
        const auto angle = period_and_angle(st.shell, grid_);
        CsvTable s({"q", "pbar", "Sigma", "theta"});
        for (std::size_t i = 0; i < grid_.size(); ++i)
            s.row(grid_[i], st.shell.momentum(grid_[i]), st.sigma[i], angle.theta[i]);
        w.write_csv("shell_t" + time_label(t) + ".csv", s);
        nlohmann::json meta = {{"E", st.shell.energy()}, {"I", st.shell.action()}, {"T", st.shell.period()},
                               {"qL", st.shell.q_left()}, {"qR", st.shell.q_right()}, {"n", n()}, {"t", t}};
        w.write_json("shell_meta_t" + time_label(t) + ".json", meta);
    }

    void write_fastforward(OutputWriter& w, const std::vector<double>& times)
    {
        const auto table = flow();
        for (double t : times) {
            const auto v = table->velocity_at(t), a = table->acceleration_at(t), u = table->potential_at(t);
            CsvTable c({"q", "v", "a", "UFF"});
            for (std::size_t i = 0; i < grid_.size(); ++i) c.row(grid_[i], v[i], a[i], u[i]);
            w.write_csv("ff_t" + time_label(t) + ".csv", c);
        }
        const auto& m = table->metadata();
        w.write_json("ff_meta.json", {{"extension", to_string(m.extension)},
                                      {"edge_cells", m.edge_cells},
                                      {"epsilon", m.epsilon},
                                      {"gauge", to_string(m.gauge)},
                                      {"mesh_size", m.mesh_size},
                                      {"fd_step", m.fd_step},
                                      {"uff_max", table->max_abs_potential()}});
    }

    void write_quantum(OutputWriter& w, bool fast_forward, bool final_state, bool frames)
    {
        const auto& r = quantum(fast_forward);
        CsvTable pop({"t", "k", "p"});
        for (std::size_t j = 0; j < r.populations.times.size(); ++j)
            for (std::size_t k = 0; k < r.populations.p[j].size(); ++k)
                pop.row(r.populations.times[j], k, r.populations.p[j][k]);
        w.write_csv(std::string("populations_") + (fast_forward ? "ff" : "bare") + ".csv", pop);
        if (final_state) {
            CsvTable f({"q", "re", "im", "abs2"});
            for (std::size_t i = 0; i < grid_.size(); ++i)
                f.row(grid_[i], r.psi[i].real(), r.psi[i].imag(), std::norm(r.psi[i]));
            w.write_csv("psi_final.csv", f);
        }
        if (frames) {
            for (std::size_t j = 0; j < r.snapshots.size(); ++j) {
                const auto& s = r.snapshots[j];
                CsvTable f({"q", "U0", "UFF", "abs2"});
                for (std::size_t i = 0; i < grid_.size(); ++i) f.row(grid_[i], s.u0[i], s.uff[i], std::norm(s.psi[i]));
                w.write_csv("frame_" + std::to_string(j) + ".csv", f);
            }
        }
    }

    void write_classical(OutputWriter& w)
    {
        const auto& c = classical();
        for (const auto& snap : c.history.snapshots) {
            const auto energies = ensemble_energies(snap, potential_);
            std::vector<double> actions(snap.size()), theta(snap.size());
            parallel_for(snap.size(), [&](std::size_t i) {
                const EnergyShell own = make_shell(potential_, snap.t, grid_, energies[i]);
                actions[i] = own.action();
                const double up = own.angle_at(std::clamp(snap.q[i], own.q_left(), own.q_right()));
                theta[i] = snap.p[i] >= 0.0 ? up : 2.0 * std::numbers::pi - up;
            });
            CsvTable f({"i", "q", "p", "E", "I", "theta"});
            for (std::size_t i = 0; i < snap.size(); ++i) f.row(i, snap.q[i], snap.p[i], energies[i], actions[i], theta[i]);
            w.write_csv("trajectories_t" + time_label(snap.t) + ".csv", f);
        }
        write_eta(w, c.eta);
    }

    static void write_eta(OutputWriter& w, const AngleDistribution& eta)
    {
        CsvTable e({"theta_bin_center", "eta"});
        for (std::size_t j = 0; j < eta.bins; ++j) e.row(eta.center(j), eta.density[j]);
        w.write_csv("eta.csv", e);
    }

    static void write_sidebands(OutputWriter& w, const SidebandComparison& cmp)
    {
        CsvTable s({"k", "l", "w_semiclassical", "p_quantum", "abs_diff"});
        for (const auto& r : cmp.rows) s.row(r.k, r.l, r.semiclassical, r.quantum, r.abs_diff);
        w.write_csv("sidebands.csv", s);
    }

private:
    RunConfig cfg_;
    PipelineOptions opt_;
    Potential potential_;
    Grid1D grid_;
    std::shared_ptr<const FlowTable> flow_;
    std::vector<EigenSolution> snapshot_eigen_;
    std::optional<PropagationResult> quantum_ff_;
    std::optional<PropagationResult> quantum_bare_;
    std::optional<ClassicalRun> classical_;
};

struct ReproduceResult {
    nlohmann::json summary;
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
};

/// Full chain; with bare_only the fast-forward stages are skipped and the
/// headline p17 is the bare one.
inline ReproduceResult reproduce_paper(Pipeline& pipe, OutputWriter& w, bool bare_only = false,
                                       const AcceptanceThresholds& th = {})
{
    const auto started = std::chrono::steady_clock::now();
    const double tau = pipe.tau();
    const auto n = static_cast<std::size_t>(pipe.n());
    ReproduceResult out;
    auto fail = [&](const std::string& what) { out.failures.push_back(what); };

    for (double t : {0.0, 0.5 * tau, tau}) pipe.write_eigen(w, t, false, pipe.options().levels);
    // one shell per trajectory frame
    const std::size_t frames = pipe.options().trajectory_frames;
    for (std::size_t j = 0; j < frames; ++j)
        pipe.write_wkb(w, frames == 1 ? tau : tau * static_cast<double>(j) / static_cast<double>(frames - 1));

    pipe.write_quantum(w, false, bare_only, bare_only);
    const double p17_bare = pipe.quantum(false).populations.final()[n];
    nlohmann::json& s = out.summary;
    s["p17_bare"] = p17_bare;
    if (!(p17_bare < th.p17_bare_max)) fail("p17_bare = " + std::to_string(p17_bare));

    if (bare_only) {
        s["p17"] = p17_bare;
    } else {
        pipe.write_fastforward(w, {0.0, 0.25 * tau, 0.5 * tau, 0.75 * tau, tau});
        pipe.write_quantum(w, true, true, true);
        const auto& p = pipe.quantum(true).populations.final();
        const double p17 = p[n];
        const double top3 = (n > 0 ? p[n - 1] : 0.0) + p[n] + (n + 1 < p.size() ? p[n + 1] : 0.0);
        s["p17"] = p17;
        s["top3"] = top3;
        if (p17 < th.p17_low || p17 > th.p17_high) fail("p17 = " + std::to_string(p17));
        if (top3 < th.top3_low || top3 > th.top3_high) fail("top3 = " + std::to_string(top3));

        pipe.write_classical(w);
        const auto& c = pipe.classical();
        s["max_action_dev"] = c.max_action_dev;
        if (!(c.max_action_dev < th.action_dev_max)) fail("max_action_dev = " + std::to_string(c.max_action_dev));

        const auto cmp = pipe.sidebands(c.eta, p);
        Pipeline::write_sidebands(w, cmp);
        s["sideband_sup_diff"] = cmp.sup_diff;
        if (!(cmp.sup_diff < th.sideband_max)) fail("sideband_sup_diff = " + std::to_string(cmp.sup_diff));
        s["uff_max"] = pipe.flow()->max_abs_potential();
    }
    s["passed"] = out.failures.empty();
    s["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    w.write_summary(s);
    return out;
}

}  // namespace semiff
