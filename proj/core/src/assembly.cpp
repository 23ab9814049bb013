#include "chns/assembly.hpp"

#include <array>
#include <cassert>
#include <cmath>

#include "chns/potential.hpp"
#include "chns/quadrature.hpp"
#include "chns/vec_ops.hpp"

namespace chns {

namespace {

constexpr int NQ = TriQuadRule::n_points;

double p1_value(const ElementBasis& el, int q, std::span<const double> nodal) {
    return nodal[el.v[0]] * el.p1[q][0] + nodal[el.v[1]] * el.p1[q][1] +
           nodal[el.v[2]] * el.p1[q][2];
}

Vec2 p1_gradient(const ElementBasis& el, std::span<const double> nodal) {
    Vec2 g{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        g.x += nodal[el.v[i]] * el.grad_p1[i].x;
        g.y += nodal[el.v[i]] * el.grad_p1[i].y;
    }
    return g;
}

struct P2Nodes {
    std::array<int, 6> id{};
};

P2Nodes p2_nodes(const Mesh2D& mesh, const ElementBasis& el) {
    P2Nodes n;
    for (int k = 0; k < 6; ++k) n.id[k] = el.p2_node(mesh, k);
    return n;
}

Vec2 p2_vector_value(const ElementBasis& el, const P2Nodes& n, int q,
                     std::span<const double> field, int n2s) {
    Vec2 u{0.0, 0.0};
    for (int k = 0; k < 6; ++k) {
        u.x += field[n.id[k]] * el.p2[q][k];
        u.y += field[n2s + n.id[k]] * el.p2[q][k];
    }
    return u;
}

// rows: components, cols: derivative direction; grad[c] = (d_x u_c, d_y u_c)
std::array<Vec2, 2> p2_vector_gradient(const ElementBasis& el, const P2Nodes& n, int q,
                                       std::span<const double> field, int n2s) {
    std::array<Vec2, 2> g{Vec2{0, 0}, Vec2{0, 0}};
    for (int k = 0; k < 6; ++k) {
        g[0].x += field[n.id[k]] * el.grad_p2[q][k].x;
        g[0].y += field[n.id[k]] * el.grad_p2[q][k].y;
        g[1].x += field[n2s + n.id[k]] * el.grad_p2[q][k].x;
        g[1].y += field[n2s + n.id[k]] * el.grad_p2[q][k].y;
    }
    return g;
}

}  // namespace

double p1_at_p2_node(const Mesh2D& mesh, std::span<const double> nodal, int p2node) {
    const int nv = mesh.n_vertices();
    if (p2node < nv) return nodal[p2node];
    const auto& e = mesh.edges[p2node - nv];
    return 0.5 * (nodal[e.a] + nodal[e.b]);
}

double integrate_p1(const Mesh2D& mesh, std::span<const double> nodal) {
    double total = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double mean = (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
        total += mean * mesh.signed_area(t);
    }
    return total;
}

// ---------------------------------------------------------------------------
// P1 operators
// ---------------------------------------------------------------------------

namespace {

template <typename WeightFn>
SparseMat mass_p1_impl(const Mesh2D& mesh, WeightFn&& weight_at) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(9) * mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        double local[3][3] = {};
        for (int q = 0; q < NQ; ++q) {
            const double w = el.wq[q] * weight_at(el, q);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) local[i][j] += w * el.p1[q][i] * el.p1[q][j];
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.push_back({el.v[i], el.v[j], local[i][j]});
    }
    return SparseMat::from_triplets(mesh.n_vertices(), mesh.n_vertices(), std::move(trip));
}

template <typename WeightFn>
SparseMat stiff_p1_impl(const Mesh2D& mesh, WeightFn&& weight_at) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(9) * mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        double wsum = 0.0;
        for (int q = 0; q < NQ; ++q) wsum += el.wq[q] * weight_at(el, q);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.push_back({el.v[i], el.v[j], wsum * dot(el.grad_p1[i], el.grad_p1[j])});
    }
    return SparseMat::from_triplets(mesh.n_vertices(), mesh.n_vertices(), std::move(trip));
}

}  // namespace

SparseMat assemble_mass_p1(const Mesh2D& mesh) {
    return mass_p1_impl(mesh, [](const ElementBasis&, int) { return 1.0; });
}

SparseMat assemble_mass_p1(const Mesh2D& mesh, std::span<const double> nodal_weight) {
    return mass_p1_impl(
        mesh, [&](const ElementBasis& el, int q) { return p1_value(el, q, nodal_weight); });
}

SparseMat assemble_mass_p1_const(const Mesh2D& mesh, double weight) {
    return mass_p1_impl(mesh, [weight](const ElementBasis&, int) { return weight; });
}

std::vector<double> lumped_mass_p1(const Mesh2D& mesh) {
    return assemble_mass_p1(mesh).row_sums();
}

SparseMat assemble_stiff_p1(const Mesh2D& mesh) {
    return stiff_p1_impl(mesh, [](const ElementBasis&, int) { return 1.0; });
}

SparseMat assemble_stiff_p1(const Mesh2D& mesh, std::span<const double> nodal_weight) {
    return stiff_p1_impl(
        mesh, [&](const ElementBasis& el, int q) { return p1_value(el, q, nodal_weight); });
}

// ---------------------------------------------------------------------------
// Velocity blocks
// ---------------------------------------------------------------------------

VelocityBlocks assemble_velocity_blocks(const Mesh2D& mesh, const DofMap& dof,
                                        std::span<const double> rho_km1,
                                        std::span<const double> rho_km2,
                                        std::span<const double> eta_km1,
                                        std::span<const double> advector, double tau,
                                        bool apply_dirichlet) {
    if (tau <= 0.0) throw std::invalid_argument("assemble_velocity_blocks: tau must be positive");
    const int n2s = dof.n2_scalar;
    const int n2 = dof.n2;

    std::vector<Triplet> tm, tc, tv;
    tm.reserve(static_cast<std::size_t>(72) * mesh.n_triangles());
    tc.reserve(static_cast<std::size_t>(72) * mesh.n_triangles());
    tv.reserve(static_cast<std::size_t>(144) * mesh.n_triangles());

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const P2Nodes nodes = p2_nodes(mesh, el);

        double mass_s[6][6] = {};
        double conv_s[6][6] = {};
        double visc[2][2][6][6] = {};

        for (int q = 0; q < NQ; ++q) {
            const double rho_avg =
                0.5 * (p1_value(el, q, rho_km1) + p1_value(el, q, rho_km2));
            const double eta = p1_value(el, q, eta_km1);
            const Vec2 u = p2_vector_value(el, nodes, q, advector, n2s);
            const double wm = el.wq[q] * rho_avg / tau;
            const double we = el.wq[q] * eta;

            double udotg[6];
            for (int k = 0; k < 6; ++k) udotg[k] = dot(u, el.grad_p2[q][k]);

            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    mass_s[i][j] += wm * el.p2[q][i] * el.p2[q][j];
                    conv_s[i][j] +=
                        0.5 * el.wq[q] * (udotg[j] * el.p2[q][i] - udotg[i] * el.p2[q][j]);
                    const double gg = dot(el.grad_p2[q][i], el.grad_p2[q][j]);
                    // (2 eta D b_j : D b_i) for components (l = test, k = trial)
                    for (int l = 0; l < 2; ++l) {
                        for (int k = 0; k < 2; ++k) {
                            const double dl_j =
                                l == 0 ? el.grad_p2[q][j].x : el.grad_p2[q][j].y;
                            const double dk_i =
                                k == 0 ? el.grad_p2[q][i].x : el.grad_p2[q][i].y;
                            double val = dl_j * dk_i;
                            if (k == l) val += gg;
                            visc[l][k][i][j] += we * val;
                        }
                    }
                }
            }
        }

        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                const int gi = nodes.id[i], gj = nodes.id[j];
                for (int c = 0; c < 2; ++c) {
                    const int ri = c * n2s + gi, cj = c * n2s + gj;
                    tm.push_back({ri, cj, mass_s[i][j]});
                    tc.push_back({ri, cj, conv_s[i][j]});
                }
                for (int l = 0; l < 2; ++l)
                    for (int k = 0; k < 2; ++k)
                        tv.push_back({l * n2s + gi, k * n2s + gj, visc[l][k][i][j]});
            }
        }
    }

    VelocityBlocks out;
    out.mass = SparseMat::from_triplets(n2, n2, std::move(tm));
    out.convection = SparseMat::from_triplets(n2, n2, std::move(tc));
    out.viscosity = SparseMat::from_triplets(n2, n2, std::move(tv));

    if (apply_dirichlet) {
        const auto& mask = dof.velocity_dirichlet;
        // the unit diagonal of constrained dofs lives in the mass part, so the
        // entrywise identity momentum = mass + convection + viscosity is kept
        out.mass = out.mass.eliminate(mask, /*unit_diagonal=*/true);
        out.convection = out.convection.eliminate(mask, false);
        out.viscosity = out.viscosity.eliminate(mask, false);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coupling blocks
// ---------------------------------------------------------------------------

CouplingBlocks assemble_coupling(const Mesh2D& mesh, const DofMap& dof,
                                 std::span<const double> phi_km1, bool apply_dirichlet) {
    const int n2s = dof.n2_scalar;
    std::vector<Triplet> tb, tu, tt;
    const std::size_t guess = static_cast<std::size_t>(36) * mesh.n_triangles();
    tb.reserve(guess);
    tu.reserve(guess);
    tt.reserve(guess);

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const P2Nodes nodes = p2_nodes(mesh, el);
        const Vec2 gphi = p1_gradient(el, phi_km1);

        double div_b[3][2][6] = {};    // (p1 i, comp k, p2 j)
        double grad_u[2][6][3] = {};   // (comp l, p2 i, p1 j)
        double trans[3][2][6] = {};

        for (int q = 0; q < NQ; ++q) {
            const double phiq = p1_value(el, q, phi_km1);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const double w = el.wq[q];
                    // b_{ij} = -(d_k b2_j, b1_i)
                    div_b[i][0][j] -= w * el.grad_p2[q][j].x * el.p1[q][i];
                    div_b[i][1][j] -= w * el.grad_p2[q][j].y * el.p1[q][i];
                    // t_{ij} = (b2_j phi_lag, d_k b1_i)
                    trans[i][0][j] += w * phiq * el.p2[q][j] * el.grad_p1[i].x;
                    trans[i][1][j] += w * phiq * el.p2[q][j] * el.grad_p1[i].y;
                }
            }
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 3; ++j) {
                    // xi_{ij} = -(b1_j grad(phi_lag), b2_i)
                    const double w = el.wq[q] * el.p1[q][j] * el.p2[q][i];
                    grad_u[0][i][j] -= w * gphi.x;
                    grad_u[1][i][j] -= w * gphi.y;
                }
            }
        }

        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 2; ++k)
                for (int j = 0; j < 6; ++j) {
                    tb.push_back({el.v[i], k * n2s + nodes.id[j], div_b[i][k][j]});
                    tt.push_back({el.v[i], k * n2s + nodes.id[j], trans[i][k][j]});
                }
        for (int l = 0; l < 2; ++l)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 3; ++j)
                    tu.push_back({l * n2s + nodes.id[i], el.v[j], grad_u[l][i][j]});
    }

    CouplingBlocks out;
    out.divergence = SparseMat::from_triplets(dof.n1, dof.n2, std::move(tb));
    out.grad_coupling = SparseMat::from_triplets(dof.n2, dof.n1, std::move(tu));
    out.transport = SparseMat::from_triplets(dof.n1, dof.n2, std::move(tt));

    if (apply_dirichlet) {
        const auto& mask = dof.velocity_dirichlet;
        out.divergence = out.divergence.zero_cols(mask);
        out.grad_coupling = out.grad_coupling.zero_rows(mask);
        out.transport = out.transport.zero_cols(mask);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Penalty operators
// ---------------------------------------------------------------------------

SparseMat assemble_penalty(const Mesh2D& mesh, std::span<const double> phi, double s) {
    return mass_p1_impl(mesh, [&](const ElementBasis& el, int q) {
        return potential_ddw_plus(p1_value(el, q, phi), s);
    });
}

std::vector<double> assemble_penalty_lumped(const Mesh2D& mesh, std::span<const double> phi,
                                            double s) {
    std::vector<double> diag = lumped_mass_p1(mesh);
    for (int i = 0; i < mesh.n_vertices(); ++i)
        diag[i] *= potential_ddw_plus(phi[i], s);
    return diag;
}

// ---------------------------------------------------------------------------
// Pressure-space operators
// ---------------------------------------------------------------------------

PressureOps assemble_pressure_ops(const Mesh2D& mesh, std::span<const double> rho_km1,
                                  std::span<const double> rho_km2,
                                  std::span<const double> eta_km1,
                                  std::span<const double> advector, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("assemble_pressure_ops: tau must be positive");
    PressureOps out;
    out.mass = assemble_mass_p1(mesh);
    out.stiffness = assemble_stiff_p1(mesh);

    const int nv = mesh.n_vertices();
    const int n2s = nv + mesh.n_edges();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(9) * mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const P2Nodes nodes = p2_nodes(mesh, el);
        double local[3][3] = {};
        for (int q = 0; q < NQ; ++q) {
            const double rho_avg =
                0.5 * (p1_value(el, q, rho_km1) + p1_value(el, q, rho_km2));
            const double eta = p1_value(el, q, eta_km1);
            const Vec2 u = p2_vector_value(el, nodes, q, advector, n2s);
            const double w = el.wq[q];
            double udotg[3];
            for (int k = 0; k < 3; ++k) udotg[k] = dot(u, el.grad_p1[k]);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    double val = (rho_avg / tau) * el.p1[q][i] * el.p1[q][j];
                    val += 0.5 * (udotg[j] * el.p1[q][i] - udotg[i] * el.p1[q][j]);
                    val += 2.0 * eta * dot(el.grad_p1[i], el.grad_p1[j]);
                    local[i][j] += w * val;
                }
            }
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.push_back({el.v[i], el.v[j], local[i][j]});
    }
    out.convection_diffusion = SparseMat::from_triplets(nv, nv, std::move(trip));
    return out;
}

// ---------------------------------------------------------------------------
// Advecting field
// ---------------------------------------------------------------------------

std::vector<double> nodal_chemical_flux(const Mesh2D& mesh, const DofMap& dof,
                                        std::span<const double> mu, const PhysParams& par) {
    const int n2s = dof.n2_scalar;
    std::vector<double> flux(dof.n2, 0.0);
    const double coeff = -0.5 * (par.rho2 - par.rho1) * par.mobility;
    if (coeff == 0.0) return flux;

    std::vector<double> weight(n2s, 0.0);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const Vec2 g = p1_gradient(el, mu);
        const double a = el.area;
        for (int k = 0; k < 6; ++k) {
            const int n = el.p2_node(mesh, k);
            flux[n] += a * coeff * g.x;
            flux[n2s + n] += a * coeff * g.y;
            weight[n] += a;
        }
    }
    for (int n = 0; n < n2s; ++n) {
        if (weight[n] > 0.0) {
            flux[n] /= weight[n];
            flux[n2s + n] /= weight[n];
        }
    }
    return flux;
}

std::vector<double> assemble_advector(const Mesh2D& mesh, const DofMap& dof,
                                      const History& hist, const PhysParams& par) {
    const int n2s = dof.n2_scalar;
    std::vector<double> adv = nodal_chemical_flux(mesh, dof, hist.mu_km1, par);
    for (int n = 0; n < n2s; ++n) {
        const double rho =
            interp_density(p1_at_p2_node(mesh, hist.phi_km1, n), par.rho1, par.rho2);
        adv[n] += rho * hist.v_km1[n];
        adv[n2s + n] += rho * hist.v_km1[n2s + n];
    }
    return adv;
}

// ---------------------------------------------------------------------------
// Step operator bundle
// ---------------------------------------------------------------------------

AssemblyOutputs assemble_step_operators(const Mesh2D& mesh, const DofMap& dof,
                                        const History& hist, const PhysParams& par) {
    AssemblyOutputs out;
    out.advector = assemble_advector(mesh, dof, hist, par);

    const std::vector<double> rho_km1 = interp_density(hist.phi_km1, par.rho1, par.rho2);
    const std::vector<double> rho_km2 = interp_density(hist.phi_km2, par.rho1, par.rho2);
    const std::vector<double> eta_km1 = interp_viscosity(hist.phi_km1, par.eta1, par.eta2);

    out.vel = assemble_velocity_blocks(mesh, dof, rho_km1, rho_km2, eta_km1, out.advector,
                                       par.tau);
    out.momentum = out.vel.combined();
    out.cpl = assemble_coupling(mesh, dof, hist.phi_km1);
    out.capillary = out.cpl.transport.transposed();
    out.mass_p1 = assemble_mass_p1(mesh);
    out.stiff_p1 = assemble_stiff_p1(mesh);
    out.pressure =
        assemble_pressure_ops(mesh, rho_km1, rho_km2, eta_km1, out.advector, par.tau);
    return out;
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

double Residuals::norm() const {
    double s = dot(momentum, momentum) + dot(continuity, continuity) + dot(phase, phase) +
               dot(chemical, chemical);
    return std::sqrt(s);
}

Residuals assemble_residuals(const Mesh2D& mesh, const DofMap& dof, const State& state,
                             const History& hist, const PhysParams& par) {
    const int n2s = dof.n2_scalar;
    Residuals res;
    res.momentum.assign(dof.n2, 0.0);
    res.continuity.assign(dof.n1, 0.0);
    res.phase.assign(dof.n1, 0.0);
    res.chemical.assign(dof.n1, 0.0);

    const std::vector<double> advector = assemble_advector(mesh, dof, hist, par);
    const double sigma_eps = par.sigma * par.eps;
    const double sigma_over_eps = par.sigma / par.eps;

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const P2Nodes nodes = p2_nodes(mesh, el);
        const Vec2 grad_mu = p1_gradient(el, state.mu);
        const Vec2 grad_phi = p1_gradient(el, state.phi);

        for (int q = 0; q < NQ; ++q) {
            const double w = el.wq[q];
            const double phi_lag = p1_value(el, q, hist.phi_km1);
            const double phi_lag2 = p1_value(el, q, hist.phi_km2);
            const double rho_lag = interp_density(phi_lag, par.rho1, par.rho2);
            const double rho_lag2 = interp_density(phi_lag2, par.rho1, par.rho2);
            const double eta_lag = interp_viscosity(phi_lag, par.eta1, par.eta2);

            const Vec2 u = p2_vector_value(el, nodes, q, advector, n2s);
            const Vec2 vk = p2_vector_value(el, nodes, q, state.v, n2s);
            const Vec2 vkm1 = p2_vector_value(el, nodes, q, hist.v_km1, n2s);
            const auto gv = p2_vector_gradient(el, nodes, q, state.v, n2s);
            const double div_v = gv[0].x + gv[1].y;

            const double p_val = p1_value(el, q, state.p);
            const double mu_val = p1_value(el, q, state.mu);
            const double phi_val = p1_value(el, q, state.phi);
            const double phi_old = phi_lag;

            // momentum residual tested with (psi_i e_l)
            const Vec2 mass_term{
                (0.5 * (rho_lag + rho_lag2) * vk.x - rho_lag2 * vkm1.x) / par.tau,
                (0.5 * (rho_lag + rho_lag2) * vk.y - rho_lag2 * vkm1.y) / par.tau};
            const Vec2 u_grad_v{dot(u, gv[0]), dot(u, gv[1])};

            for (int i = 0; i < 6; ++i) {
                const double psi = el.p2[q][i];
                const Vec2 gpsi = el.grad_p2[q][i];
                const double u_gpsi = dot(u, gpsi);

                for (int l = 0; l < 2; ++l) {
                    const double vk_l = l == 0 ? vk.x : vk.y;
                    const double g_l = l == 0 ? par.gravity.x : par.gravity.y;
                    const double mass_l = l == 0 ? mass_term.x : mass_term.y;
                    const double ugv_l = l == 0 ? u_grad_v.x : u_grad_v.y;
                    const double gmu_l = l == 0 ? grad_mu.x : grad_mu.y;
                    const Vec2 gv_l = gv[l];
                    const double dl_psi = l == 0 ? gpsi.x : gpsi.y;

                    double r = mass_l * psi;
                    r += 0.5 * (ugv_l * psi - u_gpsi * vk_l);
                    // (2 eta D v : D (psi e_l))
                    double visc = dot(gv_l, gpsi);
                    visc += (l == 0 ? gv[0].x : gv[0].y) * gpsi.x +
                            (l == 0 ? gv[1].x : gv[1].y) * gpsi.y;
                    r += eta_lag * visc;
                    r -= p_val * dl_psi;
                    // capillary forcing in potential form, pairs exactly with
                    // the transport term of the phase equation
                    r += phi_old * gmu_l * psi;
                    r -= rho_lag * g_l * psi;

                    res.momentum[l * n2s + nodes.id[i]] -= w * r;  // F1 = -R1
                }
            }

            for (int i = 0; i < 3; ++i) {
                const double b1 = el.p1[q][i];
                const Vec2 gb1 = el.grad_p1[i];

                res.continuity[el.v[i]] -= w * (-div_v * b1);  // F2 = -R2

                double r3 = (phi_val - phi_old) * b1 / par.tau;
                r3 += par.mobility * dot(grad_mu, gb1);
                r3 -= phi_old * dot(vk, gb1);
                res.phase[el.v[i]] -= par.tau * w * r3;  // F3 = -tau*R3

                double r4 = sigma_eps * dot(grad_phi, gb1);
                r4 += sigma_over_eps *
                      (potential_dw_plus(phi_val, par.penalty) + potential_dw_minus(phi_old)) *
                      b1;
                r4 -= mu_val * b1;
                // the block row of the chemical equation enters the system with
                // flipped sign, so its right-hand side is +R4
                res.chemical[el.v[i]] += w * r4;
            }
        }
    }

    for (int i = 0; i < dof.n2; ++i)
        if (dof.velocity_dirichlet[i]) res.momentum[i] = 0.0;
    return res;
}

}  // namespace chns
