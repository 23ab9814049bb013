// Command-line front end: single runs, parameter-study presets, the spectral
// inclusion study, and preconditioner comparison on saved Newton systems.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "chns/driver.hpp"
#include "chns/iohub.hpp"
#include "chns/spectra.hpp"

namespace {

using namespace chns;

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    try {
        const RunStats stats = run_simulation(cfg);
        std::printf("completed %zu steps: newton max %d avg %.2f, mean outer %.2f\n",
                    stats.rows.size(), stats.max_newton(), stats.avg_newton(),
                    stats.mean_fgmres_after(0));
    } catch (const NewtonFailure& e) {
        std::fprintf(stderr, "run aborted: %s (partial stats on disk)\n", e.what());
        return 2;
    }
    return 0;
}

int cmd_study(const std::string& preset_name, const std::string& out_dir, int steps,
              const std::string& solver) {
    const auto preset = study_preset_from_name(preset_name);
    if (!preset) {
        std::fprintf(stderr, "unknown preset '%s'\n", preset_name.c_str());
        return 1;
    }
    RunConfig base;
    base.output_dir = out_dir;
    base.steps = steps;
    if (solver == "direct") base.solver = SolverConfig::direct();
    else if (solver == "baseline") base.solver = SolverConfig::baseline();

    const StudySummary summary = run_study(*preset, base);
    std::printf("%-24s %10s %10s %12s %10s\n", "member", "newton_max", "newton_avg",
                "mean_fgmres", "completed");
    for (const auto& e : summary.entries)
        std::printf("%-24s %10d %10.2f %12.2f %10s\n", e.label.c_str(), e.max_newton,
                    e.avg_newton, e.mean_fgmres, e.completed ? "yes" : "no");
    return 0;
}

int cmd_spectrum(int nx, int ny, int samples, bool consistent, const std::string& out_csv) {
    const Mesh2D mesh = build_rect_mesh(1.0, 2.0, nx, ny);
    PhysParams par = PhysParams::benchmark1();

    std::vector<SpectralReport> rows;
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> frac(0.05, 0.6);
    bool all_included = true;
    for (int i = 0; i < samples; ++i) {
        const std::vector<double> phi =
            synthetic_active_phi(mesh.n_vertices(), frac(rng), 1000 + i);
        const SpectralInput in = make_spectral_input(mesh, par, phi, !consistent);
        SpectralReport rep = verify_inclusion(in, SpectralRoute::Reduced);
        all_included = all_included && rep.included();
        rows.push_back(std::move(rep));
    }
    write_spectral_csv(out_csv, rows);
    std::printf("%d samples, all eigenvalues inside the bound: %s (csv: %s)\n", samples,
                all_included ? "yes" : "NO", out_csv.c_str());
    return all_included ? 0 : 3;
}

int cmd_precond_compare(const std::string& dir, const std::string& out_csv) {
    namespace fs = std::filesystem;
    std::vector<std::string> dirs;
    if (fs::exists(fs::path(dir) / "meta.txt")) {
        dirs.push_back(dir);
    } else {
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_directory() && fs::exists(entry.path() / "meta.txt"))
                dirs.push_back(entry.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) {
        std::fprintf(stderr, "no system dumps found under %s\n", dir.c_str());
        return 1;
    }

    std::ofstream csv;
    if (!out_csv.empty()) {
        csv.open(out_csv);
        csv << "system,baseline_iters,baseline_converged,triangular_iters,triangular_"
               "converged\n";
    }
    std::printf("%-32s %18s %18s\n", "system", "baseline(GMRES10)", "triangular(FGMRES30)");
    for (const std::string& d : dirs) {
        const LoadedSystem loaded = read_system_dump(d);

        SolverConfig base_cfg = SolverConfig::baseline();
        const auto base_solver = make_preconditioned_solver(base_cfg.precond, base_cfg.outer);
        const auto [xb, rb] = base_solver(loaded.sys, loaded.rhs);

        SolverConfig tri_cfg;
        const auto tri_solver = make_preconditioned_solver(tri_cfg.precond, tri_cfg.outer);
        const auto [xt, rt] = tri_solver(loaded.sys, loaded.rhs);

        std::printf("%-32s %12d (%s) %12d (%s)\n", fs::path(d).filename().string().c_str(),
                    rb.iterations, rb.converged ? "ok" : "max", rt.iterations,
                    rt.converged ? "ok" : "max");
        if (csv.is_open())
            csv << fs::path(d).filename().string() << ',' << rb.iterations << ','
                << rb.converged << ',' << rt.iterations << ',' << rt.converged << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled two-phase-flow solver with nested Schur-complement preconditioning"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run = app.add_subcommand("run", "run a single simulation");
    run->add_option("--config", config_path, "key=value configuration file");
    run->add_option("--out", out_dir, "output directory (overrides config)");

    std::string preset = "vary-penalty", study_out = "study_out", study_solver = "";
    int study_steps = 20;
    auto* study = app.add_subcommand("study", "run a parameter-study preset");
    study->add_option("--preset", preset,
                      "vary-all | vary-sigma | vary-Re | vary-mobility | vary-penalty | "
                      "benchmark-2-topology");
    study->add_option("--out", study_out, "output directory");
    study->add_option("--steps", study_steps, "time steps per member");
    study->add_option("--solver", study_solver, "direct | baseline | (default triangular)");

    int nx = 16, ny = 32, samples = 30;
    bool consistent = false;
    std::string spec_csv = "spectrum.csv";
    auto* spectrum = app.add_subcommand("spectrum", "spectral inclusion study");
    spectrum->add_option("--nx", nx, "cells in x");
    spectrum->add_option("--ny", ny, "cells in y");
    spectrum->add_option("--samples", samples, "number of random active sets");
    spectrum->add_flag("--consistent", consistent, "use consistent instead of lumped mass");
    spectrum->add_option("--out", spec_csv, "output csv");

    std::string cmp_dir, cmp_csv;
    auto* cmp = app.add_subcommand("precond-compare",
                                   "baseline vs block-triangular on saved systems");
    cmp->add_option("--dir", cmp_dir, "dump directory (or parent of several)")->required();
    cmp->add_option("--out", cmp_csv, "optional csv with the counts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (study->parsed()) return cmd_study(preset, study_out, study_steps, study_solver);
        if (spectrum->parsed()) return cmd_spectrum(nx, ny, samples, consistent, spec_csv);
        if (cmp->parsed()) return cmd_precond_compare(cmp_dir, cmp_csv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
