#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chns/mesh.hpp"
#include "chns/model.hpp"
#include "chns/params.hpp"
#include "chns/precond.hpp"

namespace chns {

struct SolverConfig {
    enum class Kind { Direct, BlockTriangular, Baseline };
    Kind kind = Kind::BlockTriangular;

    KrylovConfig outer;  // stopping rule min(1e-6 ||b||, 1e-6), restart 30
    PrecondConfig precond;
    NewtonConfig newton;

    SolverConfig() {
        outer.tol_rel = 1.0e-6;
        outer.tol_abs = 1.0e-6;
        outer.rule = ToleranceRule::MinAbsRel;
        outer.restart = 30;
        outer.maxit = 600;
    }

    static SolverConfig direct() {
        SolverConfig s;
        s.kind = Kind::Direct;
        return s;
    }

    static SolverConfig baseline() {
        SolverConfig s;
        s.kind = Kind::Baseline;
        s.precond.mode = PrecondMode::Baseline;
        s.outer.restart = 10;  // the baseline runs restarted GMRES(10)
        return s;
    }
};

struct RunConfig {
    int nx = 16;
    int ny = 32;
    double width = 1.0;
    double height = 2.0;
    BoundaryConditions bc = BoundaryConditions::benchmark();
    PhysParams phys = PhysParams::benchmark1();
    int steps = 20;

    Vec2 bubble_center{0.5, 0.5};
    double bubble_radius = 0.25;

    SolverConfig solver;

    std::string output_dir;
    std::string stats_csv = "stats.csv";
    int vtk_every = 0;       // 0 disables field snapshots
    int dump_systems = 0;    // dump the first Newton system of this many steps
};

struct StatsRow {
    int step = 0;
    double time = 0.0;
    int newton_iters = 0;
    double mean_fgmres = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double cfl_max = 0.0;
    // tracked alongside (not part of the stats csv)
    double mass = 0.0;
    double energy_violation = 0.0;
    double mean_inner = 0.0;
};

struct RunStats {
    std::vector<StatsRow> rows;

    int max_newton() const;
    double avg_newton() const;
    /// Mean of mean_fgmres over rows with step > skip.
    double mean_fgmres_after(int skip) const;
};

/// Sinusoidal equilibrium profile of the relaxed double-obstacle potential
/// across a circular interface: phi = sin(clamp(d/eps, +-pi/2)) with d the
/// signed distance to the circle (positive inside).
std::vector<double> initial_phase_profile(const Mesh2D& mesh, Vec2 center, double radius,
                                          double eps);

/// Builds the missing start data of the two-step scheme: given phi^{-1} and
/// v^0 = 0, solves the phase/chemical pair once (a small semismooth Newton
/// solve) for (phi^0, mu^0).
History init_two_step(const Mesh2D& mesh, const DofMap& dof, const PhysParams& par,
                      const std::vector<double>& phi_init, const NewtonConfig& newton = {});

struct StepResult {
    State state;
    NewtonReport newton;
    EnergyLedger ledger;
    StatsRow row;
};

/// One time step: assembles the lagged operators, runs the semismooth Newton
/// solve, shifts the history, and fills a stats row.
StepResult advance(const Mesh2D& mesh, const DofMap& dof, History& hist, State& current,
                   const PhysParams& par, const SolverConfig& solver, int step_index);

/// Full simulation per the run configuration. Stats are flushed to disk after
/// every step so an aborted run leaves its partial record behind.
RunStats run_simulation(const RunConfig& cfg);

enum class StudyPreset {
    VaryAll,
    VarySigma,
    VaryRe,
    VaryMobility,
    VaryPenalty,
    Benchmark2Topology,
};

std::optional<StudyPreset> study_preset_from_name(const std::string& name);

struct StudyMember {
    std::string label;
    RunConfig config;
};

/// The sweep grids backing each preset.
std::vector<StudyMember> study_members(StudyPreset preset, const RunConfig& base);

struct StudySummary {
    struct Entry {
        std::string label;
        int max_newton = 0;
        double avg_newton = 0.0;
        double mean_fgmres = 0.0;
        bool completed = false;
    };
    std::vector<Entry> entries;
};

StudySummary run_study(StudyPreset preset, const RunConfig& base);

}  // namespace chns
