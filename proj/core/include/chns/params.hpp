#pragma once

#include <vector>

#include "chns/mesh.hpp"

namespace chns {

/// Physical and numerical scalars of the two-phase model. Phase +1 carries
/// (rho2, eta2), phase -1 carries (rho1, eta1).
struct PhysParams {
    double rho1 = 1000.0;
    double rho2 = 100.0;
    double eta1 = 10.0;
    double eta2 = 1.0;
    double sigma = 15.60;   // scaled surface tension
    double eps = 0.04;      // interface thickness scale
    double tau = 2.0e-3;    // time step
    double mobility = 4.0e-5;
    double penalty = 1.0e4;  // Moreau-Yosida relaxation coefficient
    Vec2 gravity{0.0, -0.98};

    double reynolds() const { return 0.35 * rho1 / eta1; }

    void validate() const;

    /// Rising-bubble benchmark (quantitative benchmark test case 1).
    static PhysParams benchmark1() { return {}; }

    /// Low-density bubble with topology change (benchmark test case 2).
    static PhysParams benchmark2() {
        PhysParams p;
        p.rho2 = 1.0;
        p.eta2 = 0.1;
        p.sigma = 1.24777;
        p.penalty = 1.0e6;
        return p;
    }
};

/// Nodal unknowns at one time level: velocity on vector P2 dofs, pressure /
/// phase field / chemical potential on P1 vertices.
struct State {
    std::vector<double> v;
    std::vector<double> p;
    std::vector<double> phi;
    std::vector<double> mu;
};

/// Lagged data the two-step scheme needs to advance one level.
struct History {
    std::vector<double> phi_km2;
    std::vector<double> phi_km1;
    std::vector<double> mu_km1;
    std::vector<double> v_km1;
};

}  // namespace chns
