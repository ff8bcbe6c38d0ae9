// semiff: command-line driver for the fast-forward pipeline.
//
// Exit codes: 0 success, 1 acceptance threshold failed, 2 usage or config
// error, 3 numerical failure.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semiff/pipeline.hpp"

namespace {

struct Common {
    std::string config_path;
    std::string output_dir;
    unsigned threads = 0;
    std::string extension = "linear";
    std::string gauge = "min_zero";
};

semiff::RunConfig load(const Common& c)
{
    semiff::RunConfig cfg = c.config_path.empty() ? semiff::RunConfig{} : semiff::load_config(c.config_path);
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    cfg.validate();
    return cfg;
}

semiff::PipelineOptions options(const Common& c)
{
    semiff::PipelineOptions o;
    if (c.extension == "linear") o.flow.extension = semiff::Extension::Linear;
    else if (c.extension == "constant") o.flow.extension = semiff::Extension::Constant;
    else throw semiff::ConfigError("unknown extension '" + c.extension + "'");
    if (c.gauge == "min_zero") o.flow.gauge = semiff::GaugeRule::MinZero;
    else if (c.gauge == "mean_zero") o.flow.gauge = semiff::GaugeRule::MeanZero;
    else throw semiff::ConfigError("unknown gauge '" + c.gauge + "'");
    return o;
}

std::vector<double> default_times(double tau) { return {0.0, 0.25 * tau, 0.5 * tau, 0.75 * tau, tau}; }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Semiclassical fast-forward driving: eigenstates, WKB shells, fast-forward fields, quantum and "
                 "classical evolution, sideband prediction"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--config", common.config_path, "key = value configuration file");
    app.add_option("--output-dir", common.output_dir, "directory for CSV/JSON output (overrides config)");
    app.add_option("--threads", common.threads, "worker cap (0 = all cores)");
    app.add_option("--extension", common.extension, "velocity extension past the turning points")
        ->check(CLI::IsMember({"linear", "constant"}));
    app.add_option("--gauge", common.gauge, "U_FF additive constant")->check(CLI::IsMember({"min_zero", "mean_zero"}));

    std::string hamiltonian = "ff";
    auto* reproduce = app.add_subcommand("reproduce", "run the whole chain and check the acceptance thresholds");
    reproduce->add_option("--hamiltonian", hamiltonian, "ff (default) or bare")->check(CLI::IsMember({"ff", "bare"}));

    double eigen_t = 0.0;
    bool eigen_vectors = false;
    std::size_t eigen_levels = 41;
    auto* eigen = app.add_subcommand("eigen", "instantaneous eigenpairs of H0");
    eigen->add_option("--t", eigen_t, "time");
    eigen->add_flag("--vectors", eigen_vectors, "also write eigenvectors");
    eigen->add_option("--levels", eigen_levels, "number of levels");

    double wkb_t = 0.0;
    auto* wkb = app.add_subcommand("wkb", "quantized energy shell");
    wkb->add_option("--t", wkb_t, "time");

    std::vector<double> ff_times;
    auto* ff = app.add_subcommand("fastforward", "velocity, acceleration and fast-forward potential");
    ff->add_option("--times", ff_times, "times to dump (default 0, tau/4, tau/2, 3tau/4, tau)");

    std::string evolve_h = "ff";
    auto* evq = app.add_subcommand("evolve-quantum", "split-step propagation and populations");
    evq->add_option("--hamiltonian", evolve_h, "bare or ff")->check(CLI::IsMember({"ff", "bare"}));

    auto* evc = app.add_subcommand("evolve-classical", "trajectory ensemble and final angle distribution");

    std::string input_dir;
    auto* sb = app.add_subcommand("predict-sidebands", "semiclassical sideband weights vs quantum populations");
    sb->add_option("--input-dir", input_dir, "read eta.csv and populations_ff.csv from here (default: compute)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto started = std::chrono::system_clock::now();
    std::string stage = "config";
    try {
        semiff::thread_limit() = common.threads;
        const semiff::RunConfig cfg = load(common);
        semiff::Pipeline pipe(cfg, options(common));
        semiff::OutputWriter out(cfg.output_dir);
        const double tau = cfg.params.tau;
        int status = 0;

        auto* cmd = app.get_subcommands().front();
        stage = cmd->get_name();
        if (cmd == reproduce) {
            const auto r = semiff::reproduce_paper(pipe, out, hamiltonian == "bare");
            std::cout << r.summary.dump(2) << "\n";
            for (const auto& f : r.failures) std::cerr << "acceptance threshold failed: " << f << "\n";
            status = r.passed() ? 0 : 1;
        } else if (cmd == eigen) {
            pipe.write_eigen(out, eigen_t, eigen_vectors, eigen_levels);
        } else if (cmd == wkb) {
            pipe.write_wkb(out, wkb_t);
        } else if (cmd == ff) {
            pipe.write_fastforward(out, ff_times.empty() ? default_times(tau) : ff_times);
        } else if (cmd == evq) {
            pipe.write_quantum(out, evolve_h == "ff", true, true);
            const auto& p = pipe.quantum(evolve_h == "ff").populations.final();
            std::cout << "p_" << cfg.params.n << "(tau) = " << p[static_cast<std::size_t>(cfg.params.n)] << "\n";
        } else if (cmd == evc) {
            pipe.write_classical(out);
            std::cout << "max action deviation = " << pipe.classical().max_action_dev << "\n";
        } else if (cmd == sb) {
            semiff::AngleDistribution eta;
            std::vector<double> p;
            if (!input_dir.empty()) {
                const auto e = semiff::read_csv(std::filesystem::path(input_dir) / "eta.csv");
                std::vector<double> density;
                for (const auto& row : e.rows) density.push_back(row[e.column("eta")]);
                eta = semiff::distribution_from_density(std::move(density));
                const auto pop = semiff::read_csv(std::filesystem::path(input_dir) / "populations_ff.csv");
                const auto ct = pop.column("t"), ck = pop.column("k"), cp = pop.column("p");
                double t_last = -1.0;
                for (const auto& row : pop.rows) t_last = std::max(t_last, row[ct]);
                for (const auto& row : pop.rows) {
                    if (row[ct] != t_last) continue;
                    const auto k = static_cast<std::size_t>(row[ck]);
                    if (p.size() <= k) p.resize(k + 1, 0.0);
                    p[k] = row[cp];
                }
            } else {
                eta = pipe.classical().eta;
                p = pipe.quantum(true).populations.final();
            }
            const auto cmp = pipe.sidebands(eta, p);
            semiff::Pipeline::write_sidebands(out, cmp);
            std::cout << "sideband sup difference = " << cmp.sup_diff << "\n";
        }
        out.write_manifest(cfg, stage, started);
        return status;
    } catch (const semiff::ConfigError& e) {
        std::cerr << "semiff " << stage << ": configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "semiff " << stage << ": " << e.what() << "\n";
        return 3;
    }
}
