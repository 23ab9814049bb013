// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code; nothing is deferred to
// runtime calibration.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "chns/assembly.hpp"
#include "chns/driver.hpp"
#include "chns/iohub.hpp"
#include "chns/model.hpp"
#include "chns/precond.hpp"
#include "chns/spectra.hpp"
#include "chns/vec_ops.hpp"

using namespace chns;

namespace {

int g_failures = 0;

class Timer {
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }
};

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

struct BenchmarkRun {
    Mesh2D mesh;
    DofMap dof;
    PhysParams par;
    History hist;
    State state;

    BenchmarkRun(int nx, int ny, PhysParams p) : par(p) {
        mesh = build_rect_mesh(1.0, 2.0, nx, ny);
        dof = build_dofmap(mesh, BoundaryConditions::benchmark());
        const std::vector<double> phi0 = initial_phase_profile(mesh, {0.5, 0.5}, 0.25, par.eps);
        hist = init_two_step(mesh, dof, par, phi0);
        state.v.assign(dof.n2, 0.0);
        state.p.assign(dof.n1, 0.0);
        state.phi = hist.phi_km1;
        state.mu = hist.mu_km1;
    }
};

// ---------------------------------------------------------------------------
// Criterion 1: spectral inclusion on the 16x32 mesh
// ---------------------------------------------------------------------------

void criterion_1() {
    const Timer timer;
    const Mesh2D mesh = build_rect_mesh(1.0, 2.0, 16, 32);
    const int n1 = mesh.n_vertices();

    struct Tuple {
        double sigma, eps, tau, b, s;
    };
    // spanning the parameter table: surface tension extremes, the finest
    // simultaneous-refinement row, and the largest mobility/penalty pair
    const Tuple tuples[] = {
        {15.60, 0.040, 2.000e-3, 4.0e-5, 1.0e4},
        {0.02, 0.040, 2.000e-3, 4.0e-5, 1.0e6},
        {90.00, 0.040, 2.000e-3, 4.0e-5, 1.0e6},
        {15.60, 0.005, 3.125e-5, 5.0e-6, 1.0e4},
        {15.60, 0.040, 2.000e-3, 3.0e-4, 1.0e9},
    };

    bool pass = n1 == 561;
    std::string detail = fmt("N1=%d", n1);
    double worst_margin = 1e300;
    double worst_route_gap = 0.0;
    int checked = 0;
    for (int t = 0; t < 5 && pass; ++t) {
        PhysParams par = PhysParams::benchmark1();
        par.sigma = tuples[t].sigma;
        par.eps = tuples[t].eps;
        par.tau = tuples[t].tau;
        par.mobility = tuples[t].b;
        par.penalty = tuples[t].s;

        SpectralInput in = make_spectral_input(
            mesh, par, std::vector<double>(n1, 0.0), /*lumped=*/true);
        // the symmetric eigendecomposition behind the similarity route only
        // depends on the mass/stiffness pair; share it across the samples
        const SpectralCache cache(in.mass, in.stiff_scaled, in.alpha);

        for (int sample = 0; sample < 30; ++sample) {
            const std::vector<double> phi =
                synthetic_active_phi(n1, 0.05 + 0.02 * sample, 1000u * t + sample);
            in.penalty =
                SparseMat::diagonal(assemble_penalty_lumped(mesh, phi, par.penalty));
            const SpectralReport rep = verify_inclusion_lumped(in, cache);
            ++checked;
            worst_margin = std::min(worst_margin, rep.bound_radius - rep.measured_radius);
            if (rep.measured_radius > rep.bound_radius + 1e-10) {
                pass = false;
                detail = fmt("violation at tuple %d sample %d: radius %.6e > bound %.6e", t,
                             sample, rep.measured_radius, rep.bound_radius);
                break;
            }
            if (sample == 0) {
                // cross-check one sample per tuple against the dense general
                // eigensolve of the exact block-triangular reduction
                const SpectralReport ref = verify_inclusion(in, SpectralRoute::Reduced);
                const double gap = std::abs(ref.measured_radius - rep.measured_radius) /
                                   (1.0 + ref.measured_radius);
                worst_route_gap = std::max(worst_route_gap, gap);
                if (gap > 1e-9) {
                    pass = false;
                    detail = fmt("route mismatch %.3e at tuple %d", gap, t);
                    break;
                }
            }
        }
    }
    const double secs = timer.seconds();
    if (pass && secs >= 60.0) {
        pass = false;
        detail = fmt("runtime %.1f s exceeds 60 s", secs);
    }
    if (pass)
        detail = fmt("%d samples, worst margin %.3e, route agreement %.1e, %.1f s", checked,
                     worst_margin, worst_route_gap, secs);
    report(1, pass, "spectral inclusion in B_varsigma(1) across the parameter table", detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: the penalty-capped time-step threshold and the benchmark bound
// ---------------------------------------------------------------------------

void criterion_2() {
    const Mesh2D mesh = build_rect_mesh(1.0, 2.0, 16, 32);
    const int n1 = mesh.n_vertices();

    PhysParams par = PhysParams::benchmark1();
    par.tau = tau_threshold(par, 1.0);  // exactly eps^3 / (s^2 sigma b)

    bool pass = true;
    std::string detail;
    double worst = 0.0;
    SpectralInput in =
        make_spectral_input(mesh, par, std::vector<double>(n1, 0.0), true);
    const SpectralCache cache(in.mass, in.stiff_scaled, in.alpha);
    for (int sample = 0; sample < 10; ++sample) {
        const std::vector<double> phi = synthetic_active_phi(n1, 0.1 + 0.05 * sample, 77u + sample);
        in.penalty = SparseMat::diagonal(assemble_penalty_lumped(mesh, phi, par.penalty));
        const SpectralReport rep = verify_inclusion_lumped(in, cache);
        worst = std::max(worst, rep.measured_radius);
        if (rep.measured_radius > 0.5 + 1e-8) {
            pass = false;
            detail = fmt("radius %.6e beyond 0.5 at the capped time step",
                         rep.measured_radius);
        }
    }

    // at the benchmark time step the bound is ~6.98e2, and the radius really
    // does exceed one half for some active set
    const PhysParams bench = PhysParams::benchmark1();
    const double bound = lumped_radius_bound(bench);
    if (std::abs(bound - 698.3) > 0.5) {
        pass = false;
        detail = fmt("benchmark bound %.4e (expected ~6.983e2)", bound);
    }
    double above = 0.0;
    SpectralInput bench_in =
        make_spectral_input(mesh, bench, std::vector<double>(n1, 0.0), true);
    const SpectralCache bench_cache(bench_in.mass, bench_in.stiff_scaled, bench_in.alpha);
    for (int sample = 0; sample < 10 && above <= 0.5; ++sample) {
        const std::vector<double> phi = synthetic_active_phi(n1, 0.2 + 0.05 * sample, 990u + sample);
        bench_in.penalty =
            SparseMat::diagonal(assemble_penalty_lumped(mesh, phi, bench.penalty));
        above = std::max(above, verify_inclusion_lumped(bench_in, bench_cache).measured_radius);
    }
    if (above <= 0.5) {
        pass = false;
        detail = fmt("no active set exceeded radius 0.5 at benchmark parameters");
    }
    if (pass)
        detail = fmt("threshold radius max %.3e <= 0.5; benchmark bound %.4g, observed "
                     "radius up to %.3g",
                     worst, bound, above);
    report(2, pass, "penalty-capped time-step threshold and benchmark bound", detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: cross-route spectral equalities
// ---------------------------------------------------------------------------

void criterion_3() {
    const Mesh2D mesh = build_rect_mesh(1.0, 2.0, 8, 16);
    const int n1 = mesh.n_vertices();
    bool pass = true;
    std::string detail;
    double worst_rel = 0.0, worst_match = 0.0;

    for (int sample = 0; sample < 10 && pass; ++sample) {
        PhysParams par = PhysParams::benchmark1();
        if (sample % 2 == 1) par.penalty = 1.0e6;
        const std::vector<double> phi = synthetic_active_phi(n1, 0.15 + 0.05 * sample, 31u + sample);
        const SpectralInput in = make_spectral_input(mesh, par, phi, sample % 3 != 2);
        const SpectralReport rep = verify_inclusion(in, SpectralRoute::FullPair, true);

        const double scale = 1.0 + std::abs(rep.radius_direct);
        const double rel_red = std::abs(rep.radius_direct - rep.radius_reduced) / scale;
        const double rel_sim = std::abs(rep.radius_direct - rep.radius_similarity) / scale;
        worst_rel = std::max({worst_rel, rel_red, rel_sim});
        worst_match = std::max(worst_match, rep.spectrum_match_error);
        if (rel_red > 1e-9 || rel_sim > 1e-9 || rep.spectrum_match_error > 1e-9) {
            pass = false;
            detail = fmt("route disagreement at sample %d: rel %g / %g, match %g", sample,
                         rel_red, rel_sim, rep.spectrum_match_error);
        }
    }

    // the rational bound and its maximizer
    const double alpha = 7.8e6;
    const double star = 1.0 / std::sqrt(alpha);
    const double at_star = rational_r(star, alpha);
    const double analytic = 1.0 / (2.0 * std::sqrt(alpha));
    if (std::abs(at_star - analytic) > 1e-15 * analytic) {
        pass = false;
        detail = fmt("r(1/sqrt(alpha)) = %.17g vs %.17g", at_star, analytic);
    }
    const SparseMat mass = SparseMat::diagonal(lumped_mass_p1(mesh));
    const SparseMat stiff = assemble_stiff_p1(mesh).scaled(2e-3 * 4e-5);
    const RationalBoundReport rb = rational_bound_check(mass, stiff, alpha, true);
    if (rb.max_over_spectrum > rb.analytic_max * (1.0 + 1e-12)) {
        pass = false;
        detail = fmt("max r over spectrum %.6e beyond %.6e", rb.max_over_spectrum,
                     rb.analytic_max);
    }
    if (pass)
        detail = fmt("worst radius mismatch %.2e, spectrum match %.2e, r-max identity exact",
                     worst_rel, worst_match);
    report(3, pass, "cross-route spectral equalities", detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: exact-inverse optimality (<= 2 outer iterations)
// ---------------------------------------------------------------------------

void criterion_4() {
    const Timer timer;
    BenchmarkRun run(6, 12, PhysParams::benchmark1());  // total dimension 923
    const AssemblyOutputs ops = assemble_step_operators(run.mesh, run.dof, run.hist, run.par);
    const NewtonSystem sys =
        build_newton_system(run.mesh, run.dof, ops, run.state.phi, run.par);
    const std::vector<double> rhs =
        stack_rhs(assemble_residuals(run.mesh, run.dof, run.state, run.hist, run.par));

    const ExactCoupledPrecond precond(sys);
    LinOp op;
    op.n = sys.size();
    op.apply = [&sys](std::span<const double> x, std::span<double> y) { sys.multiply(x, y); };
    const LinOp pre = precond.as_linop();

    KrylovConfig cfg;
    cfg.tol_rel = 1e-10;
    cfg.tol_abs = 0.0;
    cfg.restart = 30;
    cfg.maxit = 30;
    auto [x, rep] = fgmres(op, rhs, &pre, cfg);

    const double secs = timer.seconds();
    const bool pass = rep.converged && rep.iterations <= 2 && secs < 10.0 &&
                      sys.size() <= 1200;
    report(4, pass, "exact Schur preconditioner yields a two-step outer solve",
           fmt("dim %d, iterations %d, final residual %.2e, %.2f s", sys.size(),
               rep.iterations, rep.residual_history.back(), secs));
}

// ---------------------------------------------------------------------------
// Criterion 5: matching-Schur expansion identity
// ---------------------------------------------------------------------------

void criterion_5() {
    bool pass = true;
    std::string detail;
    double worst = 0.0;

    struct Setup {
        int nx, ny;
        PhysParams par;
    };
    PhysParams second = PhysParams::benchmark1();
    second.sigma = 0.02;
    second.penalty = 1.0e6;
    second.tau = 5.0e-4;
    const Setup setups[] = {{4, 8, PhysParams::benchmark1()},
                            {4, 8, second},
                            {8, 16, PhysParams::benchmark1()},
                            {8, 16, second}};

    for (const Setup& su : setups) {
        const Mesh2D mesh = build_rect_mesh(1.0, 2.0, su.nx, su.ny);
        const int n1 = mesh.n_vertices();
        const PhysParams& par = su.par;
        const std::vector<double> phi = synthetic_active_phi(n1, 0.3, 17u * su.nx);

        const SparseMat mass = assemble_mass_p1(mesh);
        const SparseMat stiff = assemble_stiff_p1(mesh);
        const SparseMat penalty = assemble_penalty(mesh, phi, par.penalty);
        const SparseMat g = SparseMat::axpby(par.sigma * par.eps, stiff,
                                             par.sigma / par.eps, penalty);
        const double w1 = std::sqrt(par.tau * par.sigma * par.mobility);
        const double w2 = std::sqrt(par.tau * par.mobility / par.sigma);
        const SparseMat s1 = SparseMat::axpby(1.0, mass, w1, stiff);
        const SparseMat s2 = SparseMat::axpby(1.0, mass, w2, g);

        // dense S1 M1^{-1} S2
        const std::vector<double> mass_dense = mass.to_dense();
        const DenseLuSolver mass_lu(mass_dense, n1);
        const std::vector<double> s2_dense = s2.to_dense();
        std::vector<double> minv_s2(static_cast<std::size_t>(n1) * n1);
        std::vector<double> col(n1);
        for (int j = 0; j < n1; ++j) {
            for (int i = 0; i < n1; ++i) col[i] = s2_dense[static_cast<std::size_t>(i) * n1 + j];
            const std::vector<double> x = mass_lu.solve(col);
            for (int i = 0; i < n1; ++i) minv_s2[static_cast<std::size_t>(i) * n1 + j] = x[i];
        }
        const std::vector<double> s1_dense = s1.to_dense();
        std::vector<double> product(static_cast<std::size_t>(n1) * n1, 0.0);
        for (int i = 0; i < n1; ++i)
            for (int k = 0; k < n1; ++k) {
                const double a = s1_dense[static_cast<std::size_t>(i) * n1 + k];
                if (a == 0.0) continue;
                for (int j = 0; j < n1; ++j)
                    product[static_cast<std::size_t>(i) * n1 + j] +=
                        a * minv_s2[static_cast<std::size_t>(k) * n1 + j];
            }

        // expansion: M1 + tau b K1 M1^{-1} G + sqrt(tau b sigma) K1
        //            + sqrt(tau b sigma) (eps K1 + eps^{-1} Lambda)
        const std::vector<double> g_dense = g.to_dense();
        std::vector<double> minv_g(static_cast<std::size_t>(n1) * n1);
        for (int j = 0; j < n1; ++j) {
            for (int i = 0; i < n1; ++i) col[i] = g_dense[static_cast<std::size_t>(i) * n1 + j];
            const std::vector<double> x = mass_lu.solve(col);
            for (int i = 0; i < n1; ++i) minv_g[static_cast<std::size_t>(i) * n1 + j] = x[i];
        }
        const std::vector<double> k_dense = stiff.to_dense();
        const std::vector<double> lam_dense = penalty.to_dense();
        const double root = std::sqrt(par.tau * par.mobility * par.sigma);
        std::vector<double> expansion = mass.to_dense();
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n1; ++j) {
                double acc = 0.0;
                for (int k = 0; k < n1; ++k)
                    acc += k_dense[static_cast<std::size_t>(i) * n1 + k] *
                           minv_g[static_cast<std::size_t>(k) * n1 + j];
                const std::size_t idx = static_cast<std::size_t>(i) * n1 + j;
                expansion[idx] += par.tau * par.mobility * acc;
                expansion[idx] += root * k_dense[idx];
                expansion[idx] += root * (par.eps * k_dense[idx] +
                                          lam_dense[idx] / par.eps);
            }

        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < product.size(); ++i) {
            scale = std::max(scale, std::abs(product[i]));
            err = std::max(err, std::abs(product[i] - expansion[i]));
        }
        worst = std::max(worst, err / scale);
        if (err > 1e-10 * scale) {
            pass = false;
            detail = fmt("expansion mismatch %.3e (relative) on %dx%d", err / scale, su.nx,
                         su.ny);
        }
    }
    if (pass) detail = fmt("worst relative entrywise error %.3e over 4 setups", worst);
    report(5, pass, "matching Schur factorization expands to the four-term identity", detail);
}

// ---------------------------------------------------------------------------
// Shared: save the first Newton systems of a benchmark run
// ---------------------------------------------------------------------------

std::vector<std::string> save_benchmark_systems(int count) {
    namespace fs = std::filesystem;
    const std::string root = "acceptance_systems";
    fs::create_directories(root);
    std::vector<std::string> dirs;

    BenchmarkRun run(16, 32, PhysParams::benchmark1());
    for (int step = 1; step <= count; ++step) {
        const AssemblyOutputs ops =
            assemble_step_operators(run.mesh, run.dof, run.hist, run.par);
        const NewtonSystem sys =
            build_newton_system(run.mesh, run.dof, ops, run.state.phi, run.par);
        const std::vector<double> rhs =
            stack_rhs(assemble_residuals(run.mesh, run.dof, run.state, run.hist, run.par));
        char name[64];
        std::snprintf(name, sizeof(name), "%s/step_%02d", root.c_str(), step);
        write_system_dump(name, sys, rhs);
        dirs.push_back(name);
        advance(run.mesh, run.dof, run.hist, run.state, run.par, SolverConfig::direct(),
                step);
    }
    return dirs;
}

// ---------------------------------------------------------------------------
// Criterion 6: Krylov solution matches the sparse direct solve
// ---------------------------------------------------------------------------

void criterion_6(const std::vector<std::string>& system_dirs) {
    const LoadedSystem loaded = read_system_dump(system_dirs.front());

    SolverConfig cfg;  // block-triangular, outer min(1e-6 ||b||, 1e-6)
    const auto solver = make_preconditioned_solver(cfg.precond, cfg.outer);
    const auto [x_it, rep] = solver(loaded.sys, loaded.rhs);
    const auto [x_direct, rep_d] = solve_block_direct(loaded.sys, loaded.rhs);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x_direct.size(); ++i) {
        num += (x_it[i] - x_direct[i]) * (x_it[i] - x_direct[i]);
        den += x_direct[i] * x_direct[i];
    }
    const double rel = std::sqrt(num / den);
    const bool pass = rep.converged && rel <= 1e-5;
    report(6, pass, "preconditioned FGMRES agrees with the sparse direct oracle",
           fmt("outer iterations %d, relative error %.3e", rep.iterations, rel));
}

// ---------------------------------------------------------------------------
// Criterion 7: energy inequality and mass conservation over 20 steps
// ---------------------------------------------------------------------------

void criterion_7() {
    bool pass = true;
    std::string detail;
    double worst_violation = -1e300;
    double worst_mass = 0.0;

    for (int grav = 0; grav < 2 && pass; ++grav) {
        PhysParams par = PhysParams::benchmark1();
        if (grav == 0) par.gravity = {0.0, 0.0};
        BenchmarkRun run(16, 32, par);
        const double e0 = discrete_energy(run.mesh, run.dof, run.state.v, run.state.phi,
                                          run.hist.phi_km2, par);
        const double mass0 = integrate_p1(run.mesh, run.state.phi);
        for (int step = 1; step <= 20; ++step) {
            const StepResult r = advance(run.mesh, run.dof, run.hist, run.state, par,
                                         SolverConfig::direct(), step);
            worst_violation = std::max(worst_violation, r.ledger.violation() / e0);
            worst_mass = std::max(worst_mass,
                                  std::abs(r.row.mass - mass0) / std::abs(mass0));
            if (r.ledger.violation() > 1e-9 * e0) {
                pass = false;
                detail = fmt("energy violation %.3e * E0 at step %d (gravity %d)",
                             r.ledger.violation() / e0, step, grav);
                break;
            }
            if (std::abs(r.row.mass - mass0) > 1e-9 * std::abs(mass0)) {
                pass = false;
                detail = fmt("mass drift %.3e at step %d", r.row.mass - mass0, step);
                break;
            }
        }
    }
    if (pass)
        detail = fmt("20 steps with and without gravity; worst violation %.2e * E0, worst "
                     "mass drift %.2e",
                     worst_violation, worst_mass);
    report(7, pass, "per-step energy inequality and phase conservation", detail);
}

// ---------------------------------------------------------------------------
// Criterion 8: robustness trend across refinements and the penalty sweep
// ---------------------------------------------------------------------------

void criterion_8() {
    bool pass = true;
    std::string detail;

    RunConfig base;
    base.steps = 6;
    base.output_dir = "acceptance_runs";

    std::vector<double> refine_means;
    std::vector<double> penalty_means;
    try {
        for (const StudyMember& member : study_members(StudyPreset::VaryAll, base)) {
            const RunStats stats = run_simulation(member.config);
            refine_means.push_back(stats.mean_fgmres_after(3));
        }
        for (std::size_t i = 0; i + 1 < refine_means.size(); ++i) {
            const double ratio = refine_means[i + 1] / std::max(refine_means[i], 1e-12);
            if (ratio > 2.0 || ratio < 0.5) {
                pass = false;
                detail = fmt("refinement mean ratio %.2f outside [0.5, 2]", ratio);
            }
        }

        for (double s : {1.0e4, 1.0e6, 1.0e8}) {
            RunConfig cfg = base;
            cfg.phys.penalty = s;
            cfg.stats_csv = fmt("penalty_%g.csv", s);
            const RunStats stats = run_simulation(cfg);
            penalty_means.push_back(stats.mean_fgmres_after(3));
        }
        for (std::size_t i = 0; i + 1 < penalty_means.size(); ++i) {
            const double ratio = penalty_means[i + 1] / std::max(penalty_means[i], 1e-12);
            if (ratio > 2.0 || ratio < 0.5) {
                pass = false;
                detail = fmt("penalty mean ratio %.2f outside [0.5, 2]", ratio);
            }
        }
    } catch (const NewtonFailure& e) {
        pass = false;
        detail = fmt("a sweep member failed to converge: %s", e.what());
    }

    if (pass) {
        detail = fmt("refinement means %.1f / %.1f / %.1f; penalty means %.1f / %.1f / %.1f "
                     "(reference setup reported ~50-65 outer iterations and Newton max 6 / "
                     "avg 3 at production scale)",
                     refine_means[0], refine_means[1], refine_means[2], penalty_means[0],
                     penalty_means[1], penalty_means[2]);
    }
    report(8, pass, "outer iteration counts stay within a factor 2 across sweeps", detail);
}

// ---------------------------------------------------------------------------
// Criterion 9: block-triangular beats (or ties) the block-diagonal baseline
// ---------------------------------------------------------------------------

void criterion_9(const std::vector<std::string>& system_dirs) {
    int wins = 0;
    std::string counts;
    for (const std::string& dir : system_dirs) {
        const LoadedSystem loaded = read_system_dump(dir);

        SolverConfig base = SolverConfig::baseline();
        const auto base_solver = make_preconditioned_solver(base.precond, base.outer);
        const auto [xb, rb] = base_solver(loaded.sys, loaded.rhs);

        SolverConfig tri;
        const auto tri_solver = make_preconditioned_solver(tri.precond, tri.outer);
        const auto [xt, rt] = tri_solver(loaded.sys, loaded.rhs);

        const int base_count = rb.converged ? rb.iterations : base.outer.maxit + 1;
        const int tri_count = rt.converged ? rt.iterations : tri.outer.maxit + 1;
        if (tri_count <= base_count) ++wins;
        counts += fmt(" [%d vs %d]", tri_count, base_count);
    }
    const bool pass = wins >= 4;
    report(9, pass, "triangular preconditioner no worse than the baseline on 4 of 5",
           fmt("wins %d/5, counts (triangular vs baseline):%s", wins, counts.c_str()));
}

// ---------------------------------------------------------------------------
// Criterion 10: finite-element sanity suite
// ---------------------------------------------------------------------------

void criterion_10() {
    bool pass = true;
    std::string detail = "all identities within tolerance";

    const Mesh2D mesh = build_rect_mesh(1.0, 2.0, 8, 16);
    const DofMap dof = build_dofmap(mesh, BoundaryConditions::benchmark());

    // antisymmetry of the advection form
    std::mt19937 rng(404);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const std::vector<double> ones(dof.n1, 1.0);
    std::vector<double> adv(dof.n2);
    for (double& v : adv) v = dist(rng);
    const VelocityBlocks vb = assemble_velocity_blocks(mesh, dof, ones, ones, ones, adv, 1.0);
    std::vector<double> x(dof.n2);
    for (double& v : x) v = dist(rng);
    std::vector<double> tx = vb.convection.multiply(x);
    const double anti = std::abs(dot(x, tx)) /
                        (vb.convection.max_abs() * dot(x, x) + 1e-30);
    if (anti > 1e-12) {
        pass = false;
        detail = fmt("advection antisymmetry defect %.3e", anti);
    }

    // stiffness kernel
    const SparseMat k1 = assemble_stiff_p1(mesh);
    const std::vector<double> ones_n1(dof.n1, 1.0);
    if (norm2(k1.multiply(ones_n1)) > 1e-13) {
        pass = false;
        detail = "stiffness does not annihilate constants";
    }

    // transport = divergence pairing at phi = 1
    const std::vector<double> phi_one(dof.n1, 1.0);
    const CouplingBlocks cpl = assemble_coupling(mesh, dof, phi_one);
    const SparseMat tb = SparseMat::axpby(1.0, cpl.transport, -1.0, cpl.divergence);
    if (tb.max_abs() > 1e-12) {
        pass = false;
        detail = fmt("transport/divergence mismatch %.3e at phi=1", tb.max_abs());
    }

    // partition of unity
    const SparseMat mass = assemble_mass_p1(mesh);
    double mass_total = 0.0;
    for (double v : mass.values()) mass_total += v;
    if (std::abs(mass_total - 2.0) > 1e-12 * 2.0) {
        pass = false;
        detail = fmt("mass total %.17g != 2", mass_total);
    }

    // Jacobian vs finite differences on the smooth branch
    {
        BenchmarkRun run(4, 8, PhysParams::benchmark1());
        // shrink the state into the smooth region
        for (double& v : run.state.phi) v *= 0.5;
        for (double& v : run.hist.phi_km1) v *= 0.5;
        for (double& v : run.hist.phi_km2) v *= 0.5;
        const AssemblyOutputs ops =
            assemble_step_operators(run.mesh, run.dof, run.hist, run.par);
        const NewtonSystem sys =
            build_newton_system(run.mesh, run.dof, ops, run.state.phi, run.par);
        std::vector<double> dir(sys.size());
        for (double& v : dir) v = dist(rng);
        for (int i = 0; i < sys.n2; ++i)
            if (run.dof.constrained(i)) dir[i] = 0.0;

        auto rhs_at = [&](double step) {
            State st = run.state;
            for (int i = 0; i < sys.n2; ++i) st.v[i] += step * dir[i];
            for (int i = 0; i < sys.n1; ++i) {
                st.p[i] += step * dir[sys.offset_p() + i];
                st.mu[i] += step * dir[sys.offset_mu() + i];
                st.phi[i] += 0.01 * step * dir[sys.offset_phi() + i];
            }
            return stack_rhs(assemble_residuals(run.mesh, run.dof, st, run.hist, run.par));
        };
        std::vector<double> scaled_dir = dir;
        for (int i = 0; i < sys.n1; ++i) scaled_dir[sys.offset_phi() + i] *= 0.01;
        std::vector<double> ad(sys.size());
        sys.multiply(scaled_dir, ad);

        auto fd_err = [&](double h) {
            const std::vector<double> r0 = rhs_at(0.0);
            const std::vector<double> r1 = rhs_at(h);
            double e = 0.0;
            for (int i = 0; i < sys.size(); ++i)
                e = std::max(e, std::abs((r0[i] - r1[i]) / h - ad[i]));
            return e;
        };
        const double scale = norm2(ad);
        const double e1 = fd_err(1e-4);
        const double e2 = fd_err(5e-5);
        // first order at least: halving the step must not grow the error
        if (e1 > 1e-6 * scale || e2 > 1.25 * e1 + 1e-12 * scale) {
            pass = false;
            detail = fmt("directional derivative check failed: e(h)=%.3e e(h/2)=%.3e", e1,
                         e2);
        }
    }

    report(10, pass, "finite-element sanity identities", detail);
}

}  // namespace

int main() {
    std::printf("== acceptance suite ==\n");
    const Timer total;

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();

    const std::vector<std::string> systems = save_benchmark_systems(5);
    criterion_6(systems);
    criterion_7();
    criterion_8();
    criterion_9(systems);
    criterion_10();

    std::printf("== %s (%d failure%s, %.1f s) ==\n", g_failures == 0 ? "ALL PASS" : "FAILED",
                g_failures, g_failures == 1 ? "" : "s", total.seconds());
    return g_failures == 0 ? 0 : 1;
}
