#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "chns/assembly.hpp"
#include "chns/krylov.hpp"
#include "chns/mesh.hpp"
#include "chns/params.hpp"
#include "chns/potential.hpp"
#include "chns/sparse.hpp"

namespace chns {

/// The 4x4 Newton block system. Unknown ordering (v, p, mu, phi); block rows:
///
///   | A      B^t    C      0   |        A  = momentum operator
///   | B      0      0      0   |        C  = capillary coupling (transport^t)
///   | 0      0      M1     -G  |        G  = sigma*eps*K1 + (sigma/eps)*Lambda
///   | -tau*T 0   tau*b*K1  M1  |        T  = transport coupling
///
/// The 2x2 partition (NS | CH) of this matrix is what the outer preconditioner
/// operates on. Lagged operators are shared via `ops`; `penalty` is rebuilt
/// from the current iterate each Newton step (active set update).
struct NewtonSystem {
    const Mesh2D* mesh = nullptr;
    const DofMap* dof = nullptr;
    const AssemblyOutputs* ops = nullptr;
    PhysParams par;

    SparseMat penalty;        // Lambda at the current Newton iterate
    SparseMat chem_coupling;  // G
    SparseMat phase_mu;       // tau * b * K1
    SparseMat divergence_t;   // cached B^t

    int n1 = 0;
    int n2 = 0;
    int size() const { return n2 + 3 * n1; }

    int offset_v() const { return 0; }
    int offset_p() const { return n2; }
    int offset_mu() const { return n2 + n1; }
    int offset_phi() const { return n2 + 2 * n1; }

    void multiply(std::span<const double> x, std::span<double> y) const;
    SparseMat monolithic() const;
};

NewtonSystem build_newton_system(const Mesh2D& mesh, const DofMap& dof,
                                 const AssemblyOutputs& ops, std::span<const double> phi_iter,
                                 const PhysParams& par);

std::vector<double> stack_rhs(const Residuals& res);

/// Solver plugged into the Newton loop: takes the assembled system and the
/// right-hand side, returns the update and its solve statistics.
using BlockLinearSolver =
    std::function<std::pair<std::vector<double>, SolveReport>(const NewtonSystem&,
                                                              std::span<const double>)>;

/// Direct sparse solve of the block system. The pressure block is singular
/// against constants; one pressure dof is pinned and the result re-deflated.
std::pair<std::vector<double>, SolveReport> solve_block_direct(const NewtonSystem& sys,
                                                               std::span<const double> rhs);

struct NewtonConfig {
    double tol_abs = 1.0e-9;
    double tol_rel = 1.0e-9;
    int maxit = 25;
    // Very large penalty coefficients leave the solution on the kink of the
    // relaxed potential: the active set then chatters at roundoff level and
    // the residual stagnates on a noise floor instead of reaching tol. Accept
    // an iterate below this relative floor once the improvement per step has
    // dropped under 2x; disabled when <= 0.
    double stall_tol_rel = 1.0e-6;
};

struct NewtonReport {
    int steps = 0;
    bool converged = false;
    std::vector<double> residual_norms;    // ||F|| per iterate, starting at x^0
    std::vector<int> krylov_iterations;    // outer Krylov count per Newton step
    std::vector<double> inner_iterations;  // mean inner count per Newton step

    double mean_krylov() const;
};

class NewtonFailure : public std::runtime_error {
public:
    NewtonFailure(std::string msg, std::vector<double> history)
        : std::runtime_error(std::move(msg)), residual_norms(std::move(history)) {}
    std::vector<double> residual_norms;
};

/// Semismooth Newton for one time step of the scheme: the penalty matrix is
/// rebuilt from each iterate (active set update), no damping. Throws
/// NewtonFailure with the residual history on nonconvergence.
std::pair<State, NewtonReport> semismooth_newton(const Mesh2D& mesh, const DofMap& dof,
                                                 const AssemblyOutputs& ops,
                                                 const History& hist, const PhysParams& par,
                                                 const BlockLinearSolver& solver,
                                                 const NewtonConfig& cfg, State initial);

// Energy ---------------------------------------------------------------------

/// E = int 1/2 rho(phi_density) |v|^2 + sigma ( eps/2 |grad phi|^2 + W(phi)/eps ).
double discrete_energy(const Mesh2D& mesh, const DofMap& dof, std::span<const double> v,
                       std::span<const double> phi, std::span<const double> phi_density,
                       const PhysParams& par);

/// Both sides of the per-step energy inequality, term by term.
struct EnergyLedger {
    double energy_new = 0.0;
    double energy_old = 0.0;
    double kinetic_jump = 0.0;
    double gradient_jump = 0.0;
    double viscous_dissipation = 0.0;
    double chemical_dissipation = 0.0;
    double gravity_work = 0.0;

    double lhs() const {
        return energy_new + kinetic_jump + gradient_jump + viscous_dissipation +
               chemical_dissipation;
    }
    double rhs() const { return energy_old + gravity_work; }
    /// <= 0 (up to solver tolerance) for every accepted step.
    double violation() const { return lhs() - rhs(); }
};

EnergyLedger energy_budget(const Mesh2D& mesh, const DofMap& dof, const State& state_new,
                           const History& hist, const PhysParams& par);

/// max over triangles of tau * max nodal |v| / diam(T).
double max_cfl(std::span<const double> v, const Mesh2D& mesh, const DofMap& dof, double tau);

}  // namespace chns
