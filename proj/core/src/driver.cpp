#include "chns/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "chns/assembly.hpp"
#include "chns/iohub.hpp"
#include "chns/vec_ops.hpp"

namespace chns {

int RunStats::max_newton() const {
    int m = 0;
    for (const auto& r : rows) m = std::max(m, r.newton_iters);
    return m;
}

double RunStats::avg_newton() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rows) s += r.newton_iters;
    return s / static_cast<double>(rows.size());
}

double RunStats::mean_fgmres_after(int skip) const {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows) {
        if (r.step > skip) {
            s += r.mean_fgmres;
            ++n;
        }
    }
    return n == 0 ? 0.0 : s / n;
}

std::vector<double> initial_phase_profile(const Mesh2D& mesh, Vec2 center, double radius,
                                          double eps) {
    const double half_pi = std::numbers::pi / 2.0;
    std::vector<double> phi(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        const Vec2 d = mesh.vertices[i] - center;
        const double dist = radius - std::hypot(d.x, d.y);  // positive inside
        phi[i] = std::sin(std::clamp(dist / eps, -half_pi, half_pi));
    }
    return phi;
}

// ---------------------------------------------------------------------------
// Two-step scheme initialization: solve the phase/chemical pair with v = 0
// ---------------------------------------------------------------------------

History init_two_step(const Mesh2D& mesh, const DofMap& dof, const PhysParams& par,
                      const std::vector<double>& phi_init, const NewtonConfig& newton) {
    const int n1 = dof.n1;
    const SparseMat mass = assemble_mass_p1(mesh);
    const SparseMat stiff = assemble_stiff_p1(mesh);
    const SparseMat phase_mu = stiff.scaled(par.tau * par.mobility);

    State st;
    st.v.assign(dof.n2, 0.0);
    st.p.assign(n1, 0.0);
    st.phi = phi_init;
    st.mu.assign(n1, 0.0);

    History lag;
    lag.phi_km2 = phi_init;
    lag.phi_km1 = phi_init;
    lag.mu_km1.assign(n1, 0.0);
    lag.v_km1.assign(dof.n2, 0.0);

    std::vector<double> residual_norms;
    double tol = 0.0;
    double stall_floor = 0.0;
    double best = 0.0;
    bool converged = false;
    for (int m = 0; m <= newton.maxit; ++m) {
        const Residuals res = assemble_residuals(mesh, dof, st, lag, par);
        std::vector<double> rhs(2 * n1);
        std::copy(res.chemical.begin(), res.chemical.end(), rhs.begin());
        std::copy(res.phase.begin(), res.phase.end(), rhs.begin() + n1);
        const double rn = norm2(rhs);
        residual_norms.push_back(rn);
        if (m == 0) {
            tol = std::max(newton.tol_abs, newton.tol_rel * rn);
            stall_floor = newton.stall_tol_rel > 0.0 ? newton.stall_tol_rel * rn : 0.0;
            best = rn;
        }
        if (rn <= tol) {
            converged = true;
            break;
        }
        if (m >= 1 && rn <= stall_floor && rn >= 0.5 * best) {
            converged = true;  // active-set chatter on the roundoff floor
            break;
        }
        best = std::min(best, rn);
        if (m == newton.maxit) break;

        const SparseMat penalty = assemble_penalty(mesh, st.phi, par.penalty);
        const SparseMat coupling =
            SparseMat::axpby(par.sigma * par.eps, stiff, par.sigma / par.eps, penalty);

        std::vector<Triplet> trip;
        auto add = [&trip](const SparseMat& mat, int r0, int c0, double s) {
            const auto offs = mat.row_offsets();
            const auto cols = mat.col_indices();
            const auto vals = mat.values();
            for (int r = 0; r < mat.rows(); ++r)
                for (int k = offs[r]; k < offs[r + 1]; ++k)
                    trip.push_back({r0 + r, c0 + cols[k], s * vals[k]});
        };
        add(mass, 0, 0, 1.0);
        add(coupling, 0, n1, -1.0);
        add(phase_mu, n1, 0, 1.0);
        add(mass, n1, n1, 1.0);
        const SparseMat sys = SparseMat::from_triplets(2 * n1, 2 * n1, std::move(trip));

        const std::vector<double> delta = direct_solve(sys, rhs);
        for (int i = 0; i < n1; ++i) {
            st.mu[i] += delta[i];
            st.phi[i] += delta[n1 + i];
        }
    }
    if (!converged)
        throw NewtonFailure("init_two_step: phase/chemical initialization did not converge",
                            residual_norms);

    History hist;
    hist.phi_km2 = phi_init;
    hist.phi_km1 = st.phi;
    hist.mu_km1 = st.mu;
    hist.v_km1.assign(dof.n2, 0.0);
    return hist;
}

// ---------------------------------------------------------------------------
// Time stepping
// ---------------------------------------------------------------------------

namespace {

BlockLinearSolver build_solver(const SolverConfig& cfg, std::vector<double>* inner_means) {
    switch (cfg.kind) {
        case SolverConfig::Kind::Direct:
            return make_direct_solver();
        case SolverConfig::Kind::Baseline: {
            PrecondConfig pc = cfg.precond;
            pc.mode = PrecondMode::Baseline;
            return make_preconditioned_solver(pc, cfg.outer, inner_means);
        }
        case SolverConfig::Kind::BlockTriangular:
        default: {
            PrecondConfig pc = cfg.precond;
            pc.mode = PrecondMode::BlockTriangular;
            return make_preconditioned_solver(pc, cfg.outer, inner_means);
        }
    }
}

}  // namespace

StepResult advance(const Mesh2D& mesh, const DofMap& dof, History& hist, State& current,
                   const PhysParams& par, const SolverConfig& solver, int step_index) {
    const AssemblyOutputs ops = assemble_step_operators(mesh, dof, hist, par);

    std::vector<double> inner_means;
    const BlockLinearSolver lin = build_solver(solver, &inner_means);

    auto [state, report] =
        semismooth_newton(mesh, dof, ops, hist, par, lin, solver.newton, current);

    StepResult out;
    out.ledger = energy_budget(mesh, dof, state, hist, par);
    out.row.step = step_index;
    out.row.time = step_index * par.tau;
    out.row.newton_iters = report.steps;
    out.row.mean_fgmres = report.mean_krylov();
    out.row.energy = discrete_energy(mesh, dof, state.v, state.phi, hist.phi_km1, par);
    out.row.dissipation = out.ledger.viscous_dissipation + out.ledger.chemical_dissipation;
    out.row.cfl_max = max_cfl(state.v, mesh, dof, par.tau);
    if (out.row.cfl_max > 1.0)
        std::fprintf(stderr, "[driver] step %d: CFL %.3f exceeds 1, consider a smaller tau\n",
                     step_index, out.row.cfl_max);
    out.row.mass = integrate_p1(mesh, state.phi);
    out.row.energy_violation = out.ledger.violation();
    if (!inner_means.empty()) {
        double s = 0.0;
        for (double v : inner_means) s += v;
        out.row.mean_inner = s / static_cast<double>(inner_means.size());
    }

    // shift the two-step history
    hist.phi_km2 = std::move(hist.phi_km1);
    hist.phi_km1 = state.phi;
    hist.mu_km1 = state.mu;
    hist.v_km1 = state.v;

    current = state;
    out.state = std::move(state);
    out.newton = std::move(report);
    return out;
}

RunStats run_simulation(const RunConfig& cfg) {
    cfg.phys.validate();
    const Mesh2D mesh = build_rect_mesh(cfg.width, cfg.height, cfg.nx, cfg.ny);
    const DofMap dof = build_dofmap(mesh, cfg.bc);

    namespace fs = std::filesystem;
    const fs::path out_dir = cfg.output_dir.empty() ? fs::path(".") : fs::path(cfg.output_dir);
    if (!cfg.output_dir.empty()) fs::create_directories(out_dir);
    const std::string csv_path = (out_dir / cfg.stats_csv).string();

    RunStats stats;
    write_csv(stats, csv_path);  // present even if initialization aborts

    const std::vector<double> phi0 =
        initial_phase_profile(mesh, cfg.bubble_center, cfg.bubble_radius, cfg.phys.eps);
    History hist = init_two_step(mesh, dof, cfg.phys, phi0, cfg.solver.newton);

    State current;
    current.v.assign(dof.n2, 0.0);
    current.p.assign(dof.n1, 0.0);
    current.phi = hist.phi_km1;
    current.mu = hist.mu_km1;

    if (cfg.vtk_every > 0) {
        FieldSnapshot snap{0.0, &mesh, &dof, &current};
        write_vtk(snap, (out_dir / "fields_000000.vtk").string());
    }

    for (int step = 1; step <= cfg.steps; ++step) {
        if (cfg.dump_systems >= step) {
            // dump the first Newton system of this step before solving
            const AssemblyOutputs ops = assemble_step_operators(mesh, dof, hist, cfg.phys);
            const NewtonSystem sys =
                build_newton_system(mesh, dof, ops, current.phi, cfg.phys);
            const Residuals res = assemble_residuals(mesh, dof, current, hist, cfg.phys);
            char name[64];
            std::snprintf(name, sizeof(name), "system_%04d", step);
            write_system_dump((out_dir / name).string(), sys, stack_rhs(res));
        }
        try {
            StepResult r = advance(mesh, dof, hist, current, cfg.phys, cfg.solver, step);
            stats.rows.push_back(r.row);
        } catch (const NewtonFailure&) {
            write_csv(stats, csv_path);  // preserve the partial record
            throw;
        }
        write_csv(stats, csv_path);
        if (cfg.vtk_every > 0 && step % cfg.vtk_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "fields_%06d.vtk", step);
            FieldSnapshot snap{step * cfg.phys.tau, &mesh, &dof, &current};
            write_vtk(snap, (out_dir / name).string());
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Parameter studies
// ---------------------------------------------------------------------------

std::optional<StudyPreset> study_preset_from_name(const std::string& name) {
    if (name == "vary-all") return StudyPreset::VaryAll;
    if (name == "vary-sigma") return StudyPreset::VarySigma;
    if (name == "vary-Re" || name == "vary-re") return StudyPreset::VaryRe;
    if (name == "vary-mobility") return StudyPreset::VaryMobility;
    if (name == "vary-penalty") return StudyPreset::VaryPenalty;
    if (name == "benchmark-2-topology") return StudyPreset::Benchmark2Topology;
    return std::nullopt;
}

std::vector<StudyMember> study_members(StudyPreset preset, const RunConfig& base) {
    std::vector<StudyMember> members;
    auto push = [&members](std::string label, RunConfig cfg) {
        cfg.stats_csv = label + ".csv";
        members.push_back({std::move(label), std::move(cfg)});
    };

    switch (preset) {
        case StudyPreset::VaryAll: {
            // simultaneous refinement: eps tied to the mesh so the interface
            // stays resolved, tau and mobility scaled with it
            for (int nx : {16, 24, 32}) {
                RunConfig cfg = base;
                cfg.nx = nx;
                cfg.ny = 2 * nx;
                cfg.phys.penalty = 1.0e4;
                cfg.phys.eps = 1.28 / nx;
                cfg.phys.tau = 2.0e-3 * std::pow(16.0 / nx, 2);
                cfg.phys.mobility = 1.0e-3 * cfg.phys.eps;
                push("vary_all_nx" + std::to_string(nx), cfg);
            }
            break;
        }
        case StudyPreset::VarySigma: {
            for (double sigma : {0.02, 0.1, 1.0, 10.0, 90.0}) {
                RunConfig cfg = base;
                cfg.phys.sigma = sigma;
                cfg.phys.penalty = 1.0e6;
                push("vary_sigma_" + std::to_string(sigma), cfg);
            }
            break;
        }
        case StudyPreset::VaryRe: {
            for (double rho1 : {1000.0, 2000.0, 4000.0, 8000.0, 16000.0}) {
                RunConfig cfg = base;
                cfg.phys.rho1 = rho1;
                cfg.phys.penalty = 1.0e6;
                push("vary_Re_" + std::to_string(static_cast<int>(cfg.phys.reynolds())), cfg);
            }
            break;
        }
        case StudyPreset::VaryMobility: {
            for (double b : {7.0e-5, 4.0e-5, 1.0e-4, 3.0e-4}) {
                RunConfig cfg = base;
                cfg.phys.mobility = b;
                cfg.phys.penalty = 1.0e6;
                push("vary_mobility_" + std::to_string(b), cfg);
            }
            break;
        }
        case StudyPreset::VaryPenalty: {
            for (double s : {1.0e4, 1.0e6, 1.0e8, 1.0e9}) {
                RunConfig cfg = base;
                cfg.phys.penalty = s;
                push("vary_penalty_1e" + std::to_string(static_cast<int>(std::log10(s))), cfg);
            }
            break;
        }
        case StudyPreset::Benchmark2Topology: {
            RunConfig cfg = base;
            cfg.phys = PhysParams::benchmark2();
            // tighter inner tolerances for the topology-change case
            cfg.solver.precond.s1.tol = 1.0e-6;
            cfg.solver.precond.s2.tol = 1.0e-6;
            cfg.solver.precond.inner.tol_rel = 1.0e-2;
            push("benchmark2_topology", cfg);
            break;
        }
    }
    return members;
}

StudySummary run_study(StudyPreset preset, const RunConfig& base) {
    StudySummary summary;
    for (const StudyMember& member : study_members(preset, base)) {
        StudySummary::Entry entry;
        entry.label = member.label;
        try {
            const RunStats stats = run_simulation(member.config);
            entry.max_newton = stats.max_newton();
            entry.avg_newton = stats.avg_newton();
            entry.mean_fgmres = stats.mean_fgmres_after(0);
            entry.completed = true;
        } catch (const NewtonFailure&) {
            entry.completed = false;
        }
        summary.entries.push_back(std::move(entry));
    }

    namespace fs = std::filesystem;
    const fs::path out_dir = base.output_dir.empty() ? fs::path(".") : fs::path(base.output_dir);
    if (!base.output_dir.empty()) fs::create_directories(out_dir);
    std::ofstream out(out_dir / "study_summary.csv");
    out << "label,max_newton,avg_newton,mean_fgmres,completed\n";
    for (const auto& e : summary.entries)
        out << e.label << ',' << e.max_newton << ',' << e.avg_newton << ',' << e.mean_fgmres
            << ',' << (e.completed ? 1 : 0) << '\n';
    return summary;
}

}  // namespace chns
