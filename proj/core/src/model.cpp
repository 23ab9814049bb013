#include "chns/model.hpp"

#include <algorithm>
#include <cmath>

#include "chns/quadrature.hpp"
#include "chns/vec_ops.hpp"

namespace chns {

void PhysParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("PhysParams: ") + name +
                                                    " must be strictly positive");
    };
    positive(rho1, "rho1");
    positive(rho2, "rho2");
    positive(eta1, "eta1");
    positive(eta2, "eta2");
    positive(sigma, "sigma");
    positive(eps, "eps");
    positive(tau, "tau");
    positive(mobility, "mobility");
    positive(penalty, "penalty");
}

// ---------------------------------------------------------------------------
// Block system
// ---------------------------------------------------------------------------

NewtonSystem build_newton_system(const Mesh2D& mesh, const DofMap& dof,
                                 const AssemblyOutputs& ops, std::span<const double> phi_iter,
                                 const PhysParams& par) {
    NewtonSystem sys;
    sys.mesh = &mesh;
    sys.dof = &dof;
    sys.ops = &ops;
    sys.par = par;
    sys.n1 = dof.n1;
    sys.n2 = dof.n2;
    sys.penalty = assemble_penalty(mesh, phi_iter, par.penalty);
    sys.chem_coupling =
        SparseMat::axpby(par.sigma * par.eps, ops.stiff_p1, par.sigma / par.eps, sys.penalty);
    sys.phase_mu = ops.stiff_p1.scaled(par.tau * par.mobility);
    sys.divergence_t = ops.cpl.divergence.transposed();
    return sys;
}

void NewtonSystem::multiply(std::span<const double> x, std::span<double> y) const {
    const auto xv = x.subspan(offset_v(), n2);
    const auto xp = x.subspan(offset_p(), n1);
    const auto xm = x.subspan(offset_mu(), n1);
    const auto xf = x.subspan(offset_phi(), n1);
    auto yv = y.subspan(offset_v(), n2);
    auto yp = y.subspan(offset_p(), n1);
    auto ym = y.subspan(offset_mu(), n1);
    auto yf = y.subspan(offset_phi(), n1);

    ops->momentum.multiply(xv, yv);
    divergence_t.multiply_add(xp, yv);
    ops->capillary.multiply_add(xm, yv);

    ops->cpl.divergence.multiply(xv, yp);

    ops->mass_p1.multiply(xm, ym);
    chem_coupling.multiply_add(xf, ym, -1.0);

    ops->mass_p1.multiply(xf, yf);
    phase_mu.multiply_add(xm, yf);
    ops->cpl.transport.multiply_add(xv, yf, -par.tau);
}

SparseMat NewtonSystem::monolithic() const {
    std::vector<Triplet> trip;
    auto add = [&trip](const SparseMat& m, int r0, int c0, double scale) {
        const auto offs = m.row_offsets();
        const auto cols = m.col_indices();
        const auto vals = m.values();
        for (int r = 0; r < m.rows(); ++r)
            for (int k = offs[r]; k < offs[r + 1]; ++k)
                trip.push_back({r0 + r, c0 + cols[k], scale * vals[k]});
    };
    const int ov = offset_v(), op = offset_p(), om = offset_mu(), of = offset_phi();
    add(ops->momentum, ov, ov, 1.0);
    add(divergence_t, ov, op, 1.0);
    add(ops->capillary, ov, om, 1.0);
    add(ops->cpl.divergence, op, ov, 1.0);
    add(ops->mass_p1, om, om, 1.0);
    add(chem_coupling, om, of, -1.0);
    add(ops->cpl.transport, of, ov, -par.tau);
    add(phase_mu, of, om, 1.0);
    add(ops->mass_p1, of, of, 1.0);
    return SparseMat::from_triplets(size(), size(), std::move(trip));
}

std::vector<double> stack_rhs(const Residuals& res) {
    std::vector<double> rhs;
    rhs.reserve(res.momentum.size() + res.continuity.size() + res.chemical.size() +
                res.phase.size());
    rhs.insert(rhs.end(), res.momentum.begin(), res.momentum.end());
    rhs.insert(rhs.end(), res.continuity.begin(), res.continuity.end());
    rhs.insert(rhs.end(), res.chemical.begin(), res.chemical.end());
    rhs.insert(rhs.end(), res.phase.begin(), res.phase.end());
    return rhs;
}

std::pair<std::vector<double>, SolveReport> solve_block_direct(const NewtonSystem& sys,
                                                               std::span<const double> rhs) {
    SparseMat mono = sys.monolithic();

    // pin the first pressure dof: replace its row by the identity row; the
    // system is consistent, so the solution with p_0 = 0 solves all rows
    const int pin = sys.offset_p();
    std::vector<Triplet> trip;
    trip.reserve(mono.nnz());
    const auto offs = mono.row_offsets();
    const auto cols = mono.col_indices();
    const auto vals = mono.values();
    for (int r = 0; r < mono.rows(); ++r) {
        if (r == pin) {
            trip.push_back({r, r, 1.0});
        } else {
            for (int k = offs[r]; k < offs[r + 1]; ++k)
                trip.push_back({r, cols[k], vals[k]});
        }
    }
    SparseMat pinned = SparseMat::from_triplets(mono.rows(), mono.cols(), std::move(trip));

    std::vector<double> b(rhs.begin(), rhs.end());
    b[pin] = 0.0;

    SolveReport rep;
    std::vector<double> x = direct_solve(pinned, b);
    deflate_constants(std::span<double>(x).subspan(sys.offset_p(), sys.n1));
    rep.iterations = 0;
    rep.converged = true;
    std::vector<double> check(x.size());
    sys.multiply(x, check);
    double rn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = check[i] - rhs[i];
        rn += d * d;
    }
    rep.residual_history = {std::sqrt(rn)};
    return {std::move(x), rep};
}

// ---------------------------------------------------------------------------
// Semismooth Newton
// ---------------------------------------------------------------------------

double NewtonReport::mean_krylov() const {
    if (krylov_iterations.empty()) return 0.0;
    double s = 0.0;
    for (int k : krylov_iterations) s += k;
    return s / static_cast<double>(krylov_iterations.size());
}

std::pair<State, NewtonReport> semismooth_newton(const Mesh2D& mesh, const DofMap& dof,
                                                 const AssemblyOutputs& ops,
                                                 const History& hist, const PhysParams& par,
                                                 const BlockLinearSolver& solver,
                                                 const NewtonConfig& cfg, State x) {
    NewtonReport rep;
    dof.project_velocity(x.v);
    deflate_constants(x.p);

    double tol = 0.0;
    double stall_floor = 0.0;
    double best = 0.0;
    for (int m = 0; m <= cfg.maxit; ++m) {
        const Residuals res = assemble_residuals(mesh, dof, x, hist, par);
        const std::vector<double> rhs = stack_rhs(res);
        const double rn = norm2(rhs);
        rep.residual_norms.push_back(rn);
        if (m == 0) {
            tol = std::max(cfg.tol_abs, cfg.tol_rel * rn);
            stall_floor = cfg.stall_tol_rel > 0.0 ? cfg.stall_tol_rel * rn : 0.0;
            best = rn;
        }
        if (rn <= tol) {
            rep.converged = true;
            break;
        }
        // active-set chatter: improvement has stopped on a roundoff floor
        if (m >= 1 && rn <= stall_floor && rn >= 0.5 * best) {
            rep.converged = true;
            break;
        }
        best = std::min(best, rn);
        if (m == cfg.maxit) break;

        const NewtonSystem sys = build_newton_system(mesh, dof, ops, x.phi, par);
        auto [delta, srep] = solver(sys, rhs);
        rep.krylov_iterations.push_back(srep.iterations);

        const auto dv = std::span<const double>(delta).subspan(sys.offset_v(), sys.n2);
        const auto dp = std::span<const double>(delta).subspan(sys.offset_p(), sys.n1);
        const auto dm = std::span<const double>(delta).subspan(sys.offset_mu(), sys.n1);
        const auto df = std::span<const double>(delta).subspan(sys.offset_phi(), sys.n1);
        axpy(1.0, dv, x.v);
        axpy(1.0, dp, x.p);
        axpy(1.0, dm, x.mu);
        axpy(1.0, df, x.phi);
        dof.project_velocity(x.v);
        deflate_constants(x.p);
        ++rep.steps;
    }

    if (!rep.converged)
        throw NewtonFailure("semismooth_newton: no convergence within iteration budget",
                            rep.residual_norms);
    return {std::move(x), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Energy and CFL
// ---------------------------------------------------------------------------

namespace {

constexpr int NQ = TriQuadRule::n_points;

struct P2Eval {
    std::array<int, 6> id{};
};

P2Eval element_p2(const Mesh2D& mesh, const ElementBasis& el) {
    P2Eval e;
    for (int k = 0; k < 6; ++k) e.id[k] = el.p2_node(mesh, k);
    return e;
}

double p1_at(const ElementBasis& el, int q, std::span<const double> f) {
    return f[el.v[0]] * el.p1[q][0] + f[el.v[1]] * el.p1[q][1] + f[el.v[2]] * el.p1[q][2];
}

Vec2 p1_grad(const ElementBasis& el, std::span<const double> f) {
    Vec2 g{0, 0};
    for (int i = 0; i < 3; ++i) {
        g.x += f[el.v[i]] * el.grad_p1[i].x;
        g.y += f[el.v[i]] * el.grad_p1[i].y;
    }
    return g;
}

Vec2 p2_vec(const ElementBasis& el, const P2Eval& n, int q, std::span<const double> f,
            int n2s) {
    Vec2 u{0, 0};
    for (int k = 0; k < 6; ++k) {
        u.x += f[n.id[k]] * el.p2[q][k];
        u.y += f[n2s + n.id[k]] * el.p2[q][k];
    }
    return u;
}

// |D v|^2 = sum_ij (Dv)_ij^2 with Dv the symmetrized gradient
double sym_grad_sq(const ElementBasis& el, const P2Eval& n, int q, std::span<const double> f,
                   int n2s) {
    double dxu = 0, dyu = 0, dxv = 0, dyv = 0;
    for (int k = 0; k < 6; ++k) {
        dxu += f[n.id[k]] * el.grad_p2[q][k].x;
        dyu += f[n.id[k]] * el.grad_p2[q][k].y;
        dxv += f[n2s + n.id[k]] * el.grad_p2[q][k].x;
        dyv += f[n2s + n.id[k]] * el.grad_p2[q][k].y;
    }
    const double off = 0.5 * (dyu + dxv);
    return dxu * dxu + dyv * dyv + 2.0 * off * off;
}

}  // namespace

double discrete_energy(const Mesh2D& mesh, const DofMap& dof, std::span<const double> v,
                       std::span<const double> phi, std::span<const double> phi_density,
                       const PhysParams& par) {
    const int n2s = dof.n2_scalar;
    double total = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const P2Eval nodes = element_p2(mesh, el);
        const Vec2 gphi = p1_grad(el, phi);
        const double grad_sq = dot(gphi, gphi);
        for (int q = 0; q < NQ; ++q) {
            double kin = 0.0;
            if (!v.empty()) {
                const Vec2 u = p2_vec(el, nodes, q, v, n2s);
                const double rho =
                    interp_density(p1_at(el, q, phi_density), par.rho1, par.rho2);
                kin = 0.5 * rho * dot(u, u);
            }
            const double w_val = potential_w(p1_at(el, q, phi), par.penalty);
            total += el.wq[q] *
                     (kin + par.sigma * (0.5 * par.eps * grad_sq + w_val / par.eps));
        }
    }
    return total;
}

EnergyLedger energy_budget(const Mesh2D& mesh, const DofMap& dof, const State& state_new,
                           const History& hist, const PhysParams& par) {
    const int n2s = dof.n2_scalar;
    EnergyLedger led;
    led.energy_new =
        discrete_energy(mesh, dof, state_new.v, state_new.phi, hist.phi_km1, par);
    led.energy_old = discrete_energy(mesh, dof, hist.v_km1, hist.phi_km1, hist.phi_km2, par);

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        const P2Eval nodes = element_p2(mesh, el);
        const Vec2 dgphi = p1_grad(el, state_new.phi) - p1_grad(el, hist.phi_km1);
        const Vec2 gmu = p1_grad(el, state_new.mu);
        for (int q = 0; q < NQ; ++q) {
            const double w = el.wq[q];
            const double rho2 =
                interp_density(p1_at(el, q, hist.phi_km2), par.rho1, par.rho2);
            const double eta =
                interp_viscosity(p1_at(el, q, hist.phi_km1), par.eta1, par.eta2);
            const double rho1 =
                interp_density(p1_at(el, q, hist.phi_km1), par.rho1, par.rho2);
            const Vec2 vk = p2_vec(el, nodes, q, state_new.v, n2s);
            const Vec2 vo = p2_vec(el, nodes, q, hist.v_km1, n2s);
            const Vec2 dv = vk - vo;

            led.kinetic_jump += w * 0.5 * rho2 * dot(dv, dv);
            led.gradient_jump += w * 0.5 * par.sigma * par.eps * dot(dgphi, dgphi);
            led.viscous_dissipation +=
                w * par.tau * 2.0 * eta * sym_grad_sq(el, nodes, q, state_new.v, n2s);
            led.chemical_dissipation += w * par.tau * par.mobility * dot(gmu, gmu);
            led.gravity_work += w * par.tau * rho1 * dot(par.gravity, vk);
        }
    }
    return led;
}

double max_cfl(std::span<const double> v, const Mesh2D& mesh, const DofMap& dof, double tau) {
    const int n2s = dof.n2_scalar;
    double worst = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementBasis el(mesh, t);
        double vmax = 0.0;
        for (int k = 0; k < 6; ++k) {
            const int n = el.p2_node(mesh, k);
            vmax = std::max(vmax, std::hypot(v[n], v[n2s + n]));
        }
        worst = std::max(worst, tau * vmax / mesh.tri_diam[t]);
    }
    return worst;
}

}  // namespace chns
