#pragma once

#include <span>
#include <vector>

#include "chns/mesh.hpp"
#include "chns/params.hpp"
#include "chns/sparse.hpp"

namespace chns {

// P1 scalar operators -------------------------------------------------------

SparseMat assemble_mass_p1(const Mesh2D& mesh);
SparseMat assemble_mass_p1(const Mesh2D& mesh, std::span<const double> nodal_weight);
SparseMat assemble_mass_p1_const(const Mesh2D& mesh, double weight);
/// Diagonal of the lumped P1 mass matrix (row sums of the consistent one).
std::vector<double> lumped_mass_p1(const Mesh2D& mesh);

SparseMat assemble_stiff_p1(const Mesh2D& mesh);
SparseMat assemble_stiff_p1(const Mesh2D& mesh, std::span<const double> nodal_weight);

// Velocity-space operators ---------------------------------------------------

/// The three pieces of the momentum operator. With Dirichlet elimination the
/// unit diagonal of constrained dofs lives in `mass`, so the entrywise sum
/// equals the eliminated momentum matrix.
struct VelocityBlocks {
    SparseMat mass;        // density-weighted, 1/tau-scaled vector P2 mass
    SparseMat convection;  // antisymmetric advection form
    SparseMat viscosity;   // 2 eta D:D form

    SparseMat combined() const {
        return SparseMat::axpby(1.0, SparseMat::axpby(1.0, mass, 1.0, convection), 1.0,
                                viscosity);
    }
};

VelocityBlocks assemble_velocity_blocks(const Mesh2D& mesh, const DofMap& dof,
                                        std::span<const double> rho_km1,
                                        std::span<const double> rho_km2,
                                        std::span<const double> eta_km1,
                                        std::span<const double> advector, double tau,
                                        bool apply_dirichlet = true);

// Coupling operators ---------------------------------------------------------

struct CouplingBlocks {
    SparseMat divergence;     // n1 x n2, -(div b2_j, b1_i)
    SparseMat grad_coupling;  // n2 x n1, -(b1_j grad(phi_lag), b2_i)
    SparseMat transport;      // n1 x n2, (b2_j phi_lag, grad b1_i)
};

CouplingBlocks assemble_coupling(const Mesh2D& mesh, const DofMap& dof,
                                 std::span<const double> phi_km1, bool apply_dirichlet = true);

// Penalty (active-set) operators ---------------------------------------------

SparseMat assemble_penalty(const Mesh2D& mesh, std::span<const double> phi, double s);
/// Diagonal lumped variant: s * lumped_mass_i on nodes with |phi_i| > 1.
std::vector<double> assemble_penalty_lumped(const Mesh2D& mesh, std::span<const double> phi,
                                            double s);

// Pressure-space (P1) counterparts used by the Schur approximation ------------

struct PressureOps {
    SparseMat mass;                  // equals the P1 mass matrix
    SparseMat stiffness;             // equals the P1 stiffness matrix
    SparseMat convection_diffusion;  // momentum operator represented on P1
};

PressureOps assemble_pressure_ops(const Mesh2D& mesh, std::span<const double> rho_km1,
                                  std::span<const double> rho_km2,
                                  std::span<const double> eta_km1,
                                  std::span<const double> advector, double tau);

// Per-time-step operator bundle ----------------------------------------------

/// Everything that depends only on lagged data, i.e. stays fixed across the
/// Newton iterations of one time step.
struct AssemblyOutputs {
    VelocityBlocks vel;
    SparseMat momentum;   // sum of the velocity blocks, constraints imposed
    CouplingBlocks cpl;
    SparseMat capillary;  // n2 x n1, transpose of `transport` (constrained rows zero)
    SparseMat mass_p1;
    SparseMat stiff_p1;
    PressureOps pressure;
    std::vector<double> advector;  // nodal P2 advecting field
};

AssemblyOutputs assemble_step_operators(const Mesh2D& mesh, const DofMap& dof,
                                        const History& hist, const PhysParams& par);

// Nonlinear residuals ----------------------------------------------------------

/// Right-hand-side vectors of the Newton block system, one per block row and
/// already carrying the row scalings of the system: `momentum`, `continuity`
/// and `phase` are negated residuals (`phase` additionally tau-scaled), while
/// `chemical` keeps its raw sign because that block row enters the system
/// negated. Stacking (momentum, continuity, chemical, phase) therefore gives
/// the Newton right-hand side directly.
struct Residuals {
    std::vector<double> momentum;    // length n2
    std::vector<double> continuity;  // length n1
    std::vector<double> phase;       // length n1
    std::vector<double> chemical;    // length n1

    double norm() const;
};

Residuals assemble_residuals(const Mesh2D& mesh, const DofMap& dof, const State& state,
                             const History& hist, const PhysParams& par);

// Advecting field helpers ------------------------------------------------------

/// Diffusive flux J = -(rho2-rho1)/2 * b * grad(mu) recovered as a nodal P2
/// field by volume-weighted averaging of the piecewise-constant P1 gradients.
std::vector<double> nodal_chemical_flux(const Mesh2D& mesh, const DofMap& dof,
                                        std::span<const double> mu, const PhysParams& par);

/// rho(phi_lag) v_lag + J(mu_lag) on P2 nodes.
std::vector<double> assemble_advector(const Mesh2D& mesh, const DofMap& dof,
                                      const History& hist, const PhysParams& par);

// Scalar field utilities -------------------------------------------------------

/// Value of a P1 nodal field at a P2 node (vertex value or edge-midpoint mean).
double p1_at_p2_node(const Mesh2D& mesh, std::span<const double> nodal, int p2node);

/// Integral of a P1 nodal field over the mesh.
double integrate_p1(const Mesh2D& mesh, std::span<const double> nodal);

}  // namespace chns
