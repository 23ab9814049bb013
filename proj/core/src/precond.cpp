#include "chns/precond.hpp"

#include <cassert>
#include <cmath>

#include "chns/vec_ops.hpp"

namespace chns {

PrecondConfig::PrecondConfig() {
    kp.deflate_constants = true;
    inner.tol_rel = 1.0e-1;
    inner.tol_abs = 0.0;
    inner.maxit = 50;
    inner.restart = 50;  // no restart within the iteration budget
}

PrecondConfig PrecondConfig::desk_direct() { return {}; }

PrecondConfig PrecondConfig::paper_defaults() {
    PrecondConfig cfg;
    cfg.ahat.method = ApproxMethod::Multilevel;
    cfg.ahat.fixed_cycles = 2;
    cfg.kp.method = ApproxMethod::Multilevel;
    cfg.kp.tol = 1.0e-5;
    cfg.mp.method = ApproxMethod::CgJacobi;
    cfg.mp.tol = 1.0e-3;
    cfg.m1.method = ApproxMethod::CgJacobi;
    cfg.m1.tol = 1.0e-2;
    cfg.s1.method = ApproxMethod::Multilevel;
    cfg.s1.tol = 1.0e-5;
    cfg.s2.method = ApproxMethod::Multilevel;
    cfg.s2.tol = 1.0e-5;
    return cfg;
}

// ---------------------------------------------------------------------------
// Schur operator
// ---------------------------------------------------------------------------

SchurOperator::SchurOperator(const NewtonSystem& sys,
                             std::shared_ptr<const ApproxInverse> ahat_x,
                             std::shared_ptr<const ApproxInverse> ahat_y)
    : sys_(&sys), ahat_x_(std::move(ahat_x)), ahat_y_(std::move(ahat_y)) {}

void SchurOperator::apply(std::span<const double> x, std::span<double> y) const {
    const int n1 = sys_->n1;
    const int n2 = sys_->n2;
    const int n2s = n2 / 2;
    const auto xm = x.subspan(0, n1);
    const auto xf = x.subspan(n1, n1);
    auto ym = y.subspan(0, n1);
    auto yf = y.subspan(n1, n1);

    // A_CH part
    sys_->ops->mass_p1.multiply(xm, ym);
    sys_->chem_coupling.multiply_add(xf, ym, -1.0);
    sys_->ops->mass_p1.multiply(xf, yf);
    sys_->phase_mu.multiply_add(xm, yf);

    // coupling part: + tau * T * Ahat^{-1} * C x_mu (the sign follows from the
    // skew pair C = transport^t, C_T = -tau * transport)
    std::vector<double> w(n2);
    sys_->ops->capillary.multiply(xm, w);
    std::vector<double> vx = ahat_x_->apply(std::span<const double>(w).subspan(0, n2s));
    std::vector<double> vy = ahat_y_->apply(std::span<const double>(w).subspan(n2s, n2s));
    std::copy(vx.begin(), vx.end(), w.begin());
    std::copy(vy.begin(), vy.end(), w.begin() + n2s);
    sys_->ops->cpl.transport.multiply_add(w, yf, sys_->par.tau);
}

LinOp SchurOperator::as_linop() const {
    LinOp op;
    op.n = size();
    op.varying = false;
    op.apply = [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
    return op;
}

std::vector<double> SchurOperator::to_dense() const {
    const int n = size();
    std::vector<double> dense(static_cast<std::size_t>(n) * n);
    std::vector<double> e(n, 0.0), col(n);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        apply(e, col);
        for (int i = 0; i < n; ++i) dense[static_cast<std::size_t>(i) * n + j] = col[i];
        e[j] = 0.0;
    }
    return dense;
}

// ---------------------------------------------------------------------------
// Inner preconditioner
// ---------------------------------------------------------------------------

InnerChPrecond::InnerChPrecond(const NewtonSystem& sys, const PrecondConfig& cfg) : sys_(&sys) {
    const PhysParams& par = sys.par;
    const double w1 = std::sqrt(par.tau * par.sigma * par.mobility);
    const double w2 = std::sqrt(par.tau * par.mobility / par.sigma);
    s1_mat_ = SparseMat::axpby(1.0, sys.ops->mass_p1, w1, sys.ops->stiff_p1);
    s2_mat_ = SparseMat::axpby(1.0, sys.ops->mass_p1, w2, sys.chem_coupling);
    s1_inv_ = ApproxInverse::build(s1_mat_, cfg.s1);
    s2_inv_ = ApproxInverse::build(s2_mat_, cfg.s2);
    m1_inv_ = ApproxInverse::build(sys.ops->mass_p1, cfg.m1);
}

void InnerChPrecond::apply(std::span<const double> rhs, std::span<double> out) const {
    const int n1 = sys_->n1;
    const auto rm = rhs.subspan(0, n1);
    const auto rf = rhs.subspan(n1, n1);
    auto om = out.subspan(0, n1);
    auto of = out.subspan(n1, n1);

    // phi from S_hat_CH phi = rhs_phi, with S_hat_CH^{-1} = S2^{-1} M1 S1^{-1}
    std::vector<double> t = s1_inv_.apply(rf);
    std::vector<double> mt = sys_->ops->mass_p1.multiply(t);
    std::vector<double> phi = s2_inv_.apply(mt);

    // mu from M1 mu = rhs_mu + G phi
    std::vector<double> rm2(rm.begin(), rm.end());
    sys_->chem_coupling.multiply_add(phi, rm2);
    std::vector<double> mu = m1_inv_.apply(rm2);

    std::copy(mu.begin(), mu.end(), om.begin());
    std::copy(phi.begin(), phi.end(), of.begin());
}

LinOp InnerChPrecond::as_linop() const {
    LinOp op;
    op.n = 2 * sys_->n1;
    op.varying = s1_inv_.method() != ApproxMethod::Direct ||
                 s2_inv_.method() != ApproxMethod::Direct ||
                 m1_inv_.method() != ApproxMethod::Direct;
    op.apply = [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
    return op;
}

// ---------------------------------------------------------------------------
// Outer preconditioner
// ---------------------------------------------------------------------------

OuterPreconditioner::OuterPreconditioner(const NewtonSystem& sys, const PrecondConfig& cfg)
    : sys_(&sys), cfg_(cfg) {
    const int n2s = sys.n2 / 2;
    const SparseMat axx = sys.ops->momentum.block(0, n2s, 0, n2s);
    const SparseMat ayy = sys.ops->momentum.block(n2s, sys.n2, n2s, sys.n2);
    ahat_x_ = std::make_shared<ApproxInverse>(ApproxInverse::build(axx, cfg.ahat));
    ahat_y_ = std::make_shared<ApproxInverse>(ApproxInverse::build(ayy, cfg.ahat));

    ApproxInverseSpec kp_spec = cfg.kp;
    kp_spec.deflate_constants = true;
    kp_inv_ = ApproxInverse::build(sys.ops->pressure.stiffness, kp_spec);
    mp_inv_ = ApproxInverse::build(sys.ops->pressure.mass, cfg.mp);

    if (cfg.mode == PrecondMode::BlockTriangular) {
        schur_.emplace(sys, ahat_x_, ahat_y_);
        inner_precond_.emplace(sys, cfg);
    } else {
        // baseline: direct factorization of the Cahn-Hilliard block
        std::vector<Triplet> trip;
        auto add = [&trip](const SparseMat& m, int r0, int c0, double s) {
            const auto offs = m.row_offsets();
            const auto cols = m.col_indices();
            const auto vals = m.values();
            for (int r = 0; r < m.rows(); ++r)
                for (int k = offs[r]; k < offs[r + 1]; ++k)
                    trip.push_back({r0 + r, c0 + cols[k], s * vals[k]});
        };
        const int n1 = sys.n1;
        add(sys.ops->mass_p1, 0, 0, 1.0);
        add(sys.chem_coupling, 0, n1, -1.0);
        add(sys.phase_mu, n1, 0, 1.0);
        add(sys.ops->mass_p1, n1, n1, 1.0);
        ch_direct_.emplace(SparseMat::from_triplets(2 * n1, 2 * n1, std::move(trip)));
    }
}

void OuterPreconditioner::apply_ns_block(std::span<const double> rhs_v,
                                         std::span<const double> rhs_p, std::span<double> v,
                                         std::span<double> p) const {
    const int n2s = sys_->n2 / 2;

    // pressure Schur solve: the convection-diffusion composition
    // -M_p^{-1} A_p K_p^{-1} (the approximation of -B A^{-1} B^t carries a
    // minus sign), with the stiffness inverse acting on the
    // constants-deflated space
    std::vector<double> t = kp_inv_.apply(rhs_p);
    std::vector<double> apt = sys_->ops->pressure.convection_diffusion.multiply(t);
    std::vector<double> pv = mp_inv_.apply(apt);
    deflate_constants(pv);
    for (int i = 0; i < sys_->n1; ++i) p[i] = -pv[i];

    // velocity update: Ahat v = rhs_v - B^t p
    std::vector<double> rv(rhs_v.begin(), rhs_v.end());
    sys_->divergence_t.multiply_add(p, rv, -1.0);
    std::vector<double> vx = ahat_x_->apply(std::span<const double>(rv).subspan(0, n2s));
    std::vector<double> vy = ahat_y_->apply(std::span<const double>(rv).subspan(n2s, n2s));
    std::copy(vx.begin(), vx.end(), v.begin());
    std::copy(vy.begin(), vy.end(), v.begin() + n2s);
}

void OuterPreconditioner::apply(std::span<const double> rhs, std::span<double> out) const {
    const int n1 = sys_->n1;
    const int n2 = sys_->n2;
    const auto rhs_v = rhs.subspan(0, n2);
    const auto rhs_p = rhs.subspan(n2, n1);
    const auto rhs_ch = rhs.subspan(n2 + n1, 2 * n1);
    auto out_v = out.subspan(0, n2);
    auto out_p = out.subspan(n2, n1);
    auto out_ch = out.subspan(n2 + n1, 2 * n1);

    std::vector<double> zch(2 * n1);
    if (cfg_.mode == PrecondMode::BlockTriangular) {
        // inner iteration: GMRES on the left-preconditioned Schur system, so
        // the 1e-1 tolerance acts on the preconditioned relative residual
        LinOp composed;
        composed.n = 2 * n1;
        std::vector<double> scratch(2 * n1);
        composed.apply = [this, &scratch](std::span<const double> x, std::span<double> y) {
            schur_->apply(x, scratch);
            inner_precond_->apply(scratch, y);
        };
        std::vector<double> rhs_pre(2 * n1);
        inner_precond_->apply(rhs_ch, rhs_pre);
        auto [z, rep] = gmres(composed, rhs_pre, nullptr, cfg_.inner);
        zch = std::move(z);
        stats_.applications++;
        stats_.iterations += rep.iterations;

        // capillary coupling moves to the Navier-Stokes right-hand side
        std::vector<double> rv(rhs_v.begin(), rhs_v.end());
        sys_->ops->capillary.multiply_add(std::span<const double>(zch).subspan(0, n1), rv,
                                          -1.0);
        apply_ns_block(rv, rhs_p, out_v, out_p);
    } else {
        zch = ch_direct_->solve(rhs_ch);
        apply_ns_block(rhs_v, rhs_p, out_v, out_p);
    }
    std::copy(zch.begin(), zch.end(), out_ch.begin());
}

LinOp OuterPreconditioner::as_linop() const {
    LinOp op;
    op.n = sys_->size();
    op.varying = cfg_.mode == PrecondMode::BlockTriangular;
    op.apply = [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
    return op;
}

// ---------------------------------------------------------------------------
// Exact (dense) preconditioner
// ---------------------------------------------------------------------------

namespace {

std::vector<double> dense_of(const SparseMat& m) { return m.to_dense(); }

void put_block(std::vector<double>& dst, int n, const std::vector<double>& blk, int rows,
               int cols, int r0, int c0, double scale) {
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            dst[static_cast<std::size_t>(r0 + r) * n + (c0 + c)] +=
                scale * blk[static_cast<std::size_t>(r) * cols + c];
}

}  // namespace

ExactCoupledPrecond::ExactCoupledPrecond(const NewtonSystem& sys) : sys_(&sys) {
    const int n1 = sys.n1;
    const int n2 = sys.n2;
    nns_ = n2 + n1;

    // dense saddle block with the first pressure dof pinned
    std::vector<double> ns(static_cast<std::size_t>(nns_) * nns_, 0.0);
    put_block(ns, nns_, dense_of(sys.ops->momentum), n2, n2, 0, 0, 1.0);
    put_block(ns, nns_, dense_of(sys.divergence_t), n2, n1, 0, n2, 1.0);
    put_block(ns, nns_, dense_of(sys.ops->cpl.divergence), n1, n2, n2, 0, 1.0);
    for (int c = 0; c < nns_; ++c) ns[static_cast<std::size_t>(n2) * nns_ + c] = 0.0;
    ns[static_cast<std::size_t>(n2) * nns_ + n2] = 1.0;
    ns_lu_ = DenseLuSolver(ns, nns_);

    // true Schur complement S = A_CH - C_T A_NS^{-1} C_I, column by column
    const int nch = 2 * n1;
    std::vector<double> schur(static_cast<std::size_t>(nch) * nch, 0.0);
    put_block(schur, nch, dense_of(sys.ops->mass_p1), n1, n1, 0, 0, 1.0);
    put_block(schur, nch, dense_of(sys.chem_coupling), n1, n1, 0, n1, -1.0);
    put_block(schur, nch, dense_of(sys.phase_mu), n1, n1, n1, 0, 1.0);
    put_block(schur, nch, dense_of(sys.ops->mass_p1), n1, n1, n1, n1, 1.0);

    std::vector<double> col(nns_, 0.0);
    std::vector<double> tv(n1);
    for (int j = 0; j < n1; ++j) {
        // C_I column j lives in the velocity rows: capillary(:, j)
        std::fill(col.begin(), col.end(), 0.0);
        const auto offs = sys.ops->capillary.row_offsets();
        const auto cols = sys.ops->capillary.col_indices();
        const auto vals = sys.ops->capillary.values();
        for (int r = 0; r < n2; ++r)
            for (int k = offs[r]; k < offs[r + 1]; ++k)
                if (cols[k] == j) col[r] = vals[k];
        std::vector<double> x = solve_ns(col);
        sys.ops->cpl.transport.multiply(std::span<const double>(x).subspan(0, n2), tv);
        // subtract C_T A_NS^{-1} C_I with C_T = -tau * transport
        for (int i = 0; i < n1; ++i)
            schur[static_cast<std::size_t>(n1 + i) * nch + j] += sys.par.tau * tv[i];
    }
    schur_lu_ = DenseLuSolver(schur, nch);
}

std::vector<double> ExactCoupledPrecond::solve_ns(std::span<const double> rhs) const {
    std::vector<double> b(rhs.begin(), rhs.end());
    b[sys_->n2] = 0.0;  // pinned pressure dof
    std::vector<double> x = ns_lu_.solve(b);
    deflate_constants(std::span<double>(x).subspan(sys_->n2, sys_->n1));
    return x;
}

void ExactCoupledPrecond::apply(std::span<const double> rhs, std::span<double> out) const {
    const int n1 = sys_->n1;
    const int n2 = sys_->n2;
    const auto rhs_ch = rhs.subspan(n2 + n1, 2 * n1);

    std::vector<double> zch = schur_lu_.solve(rhs_ch);

    std::vector<double> rns(rhs.begin(), rhs.begin() + nns_);
    sys_->ops->capillary.multiply_add(std::span<const double>(zch).subspan(0, n1),
                                      std::span<double>(rns).subspan(0, n2), -1.0);
    std::vector<double> zns = solve_ns(rns);

    std::copy(zns.begin(), zns.end(), out.begin());
    std::copy(zch.begin(), zch.end(), out.begin() + nns_);
}

LinOp ExactCoupledPrecond::as_linop() const {
    LinOp op;
    op.n = sys_->size();
    op.varying = false;
    op.apply = [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
    return op;
}

// ---------------------------------------------------------------------------
// Newton-loop solvers
// ---------------------------------------------------------------------------

BlockLinearSolver make_preconditioned_solver(const PrecondConfig& cfg, KrylovConfig outer,
                                             std::vector<double>* inner_means) {
    return [cfg, outer, inner_means](const NewtonSystem& sys, std::span<const double> rhs)
               -> std::pair<std::vector<double>, SolveReport> {
        OuterPreconditioner precond(sys, cfg);
        LinOp op;
        op.n = sys.size();
        op.apply = [&sys](std::span<const double> x, std::span<double> y) {
            sys.multiply(x, y);
        };
        const LinOp pre = precond.as_linop();
        auto result = cfg.mode == PrecondMode::BlockTriangular
                          ? fgmres(op, rhs, &pre, outer)
                          : gmres(op, rhs, &pre, outer);
        deflate_constants(
            std::span<double>(result.first).subspan(sys.offset_p(), sys.n1));
        if (inner_means) inner_means->push_back(precond.inner_stats().mean());
        return result;
    };
}

BlockLinearSolver make_direct_solver() {
    return [](const NewtonSystem& sys,
              std::span<const double> rhs) -> std::pair<std::vector<double>, SolveReport> {
        return solve_block_direct(sys, rhs);
    };
}

}  // namespace chns
