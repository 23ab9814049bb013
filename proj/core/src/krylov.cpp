#include "chns/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "chns/vec_ops.hpp"

namespace chns {

LinOp make_op(const SparseMat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("make_op: operator must be square");
    LinOp op;
    op.n = m.rows();
    op.apply = [&m](std::span<const double> x, std::span<double> y) { m.multiply(x, y); };
    return op;
}

LinOp identity_op(int n) {
    LinOp op;
    op.n = n;
    op.apply = [](std::span<const double> x, std::span<double> y) {
        std::copy(x.begin(), x.end(), y.begin());
    };
    return op;
}

double KrylovConfig::threshold(double rhs_norm) const {
    const double rel = tol_rel * rhs_norm;
    return rule == ToleranceRule::MaxAbsRel ? std::max(tol_abs, rel) : std::min(tol_abs, rel);
}

namespace {

class Timer {
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
};

// Shared GMRES driver. When `flexible` is set the preconditioned basis vectors
// are stored and combined directly (FGMRES); otherwise the correction is formed
// as P^{-1}(V y), which assumes a constant preconditioner.
std::pair<std::vector<double>, SolveReport> gmres_impl(const LinOp& op,
                                                       std::span<const double> rhs,
                                                       const LinOp* precond,
                                                       const KrylovConfig& cfg, bool flexible) {
    if (cfg.restart < 1 || cfg.maxit < 1)
        throw std::invalid_argument("gmres: restart and maxit must be >= 1");
    if (!flexible && precond != nullptr && precond->varying)
        throw std::invalid_argument("gmres: varying preconditioner requires fgmres");

    const Timer timer;
    const int n = op.n;
    const int m = cfg.restart;

    std::vector<double> x(n, 0.0);
    SolveReport rep;

    const double bnorm = norm2(rhs);
    rep.residual_history.push_back(bnorm);
    const double tol = cfg.threshold(bnorm);
    if (bnorm == 0.0 || bnorm <= tol) {
        rep.converged = true;
        rep.wall_time = timer.seconds();
        return {std::move(x), rep};
    }

    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<std::vector<double>> basis(m + 1, std::vector<double>(n));
    std::vector<std::vector<double>> zbasis;
    if (flexible || precond != nullptr) zbasis.assign(m, std::vector<double>(n));

    // column-major (m+1) x m Hessenberg, Givens rotations, residual vector g
    std::vector<double> hess(static_cast<std::size_t>(m + 1) * m, 0.0);
    std::vector<double> cs(m), sn(m), g(m + 1);
    std::vector<double> w(n), z(n);

    auto H = [&](int i, int j) -> double& { return hess[static_cast<std::size_t>(j) * (m + 1) + i]; };

    double rnorm = bnorm;
    bool done = false;

    while (!done && rep.iterations < cfg.maxit) {
        std::fill(hess.begin(), hess.end(), 0.0);
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = rnorm;
        for (int i = 0; i < n; ++i) basis[0][i] = r[i] / rnorm;

        int k = 0;  // columns completed in this cycle
        for (int j = 0; j < m && rep.iterations < cfg.maxit; ++j) {
            if (precond != nullptr) {
                precond->apply(basis[j], z);
            } else {
                z = basis[j];
            }
            if (!zbasis.empty()) zbasis[j] = z;
            op.apply(z, w);

            // modified Gram-Schmidt
            for (int i = 0; i <= j; ++i) {
                const double h = dot(w, basis[i]);
                H(i, j) = h;
                axpy(-h, basis[i], w);
            }
            const double hnext = norm2(w);
            H(j + 1, j) = hnext;
            if (hnext > 0.0)
                for (int i = 0; i < n; ++i) basis[j + 1][i] = w[i] / hnext;

            // apply accumulated Givens rotations, then generate a new one
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            if (denom == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = H(j, j) / denom;
                sn[j] = H(j + 1, j) / denom;
            }
            H(j, j) = cs[j] * H(j, j) + sn[j] * H(j + 1, j);
            H(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            ++rep.iterations;
            k = j + 1;
            rnorm = std::abs(g[j + 1]);
            rep.residual_history.push_back(rnorm);
            if (rnorm <= tol || hnext == 0.0) break;
        }

        // back substitution for the small least-squares problem
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
            y[i] = s / H(i, i);
        }

        if (flexible) {
            for (int j = 0; j < k; ++j) axpy(y[j], zbasis[j], x);
        } else {
            std::fill(z.begin(), z.end(), 0.0);
            for (int j = 0; j < k; ++j) axpy(y[j], basis[j], z);
            if (precond != nullptr) {
                precond->apply(z, w);
                axpy(1.0, w, x);
            } else {
                axpy(1.0, z, x);
            }
        }

        // recompute the true residual for the restart / convergence decision
        op.apply(x, w);
        for (int i = 0; i < n; ++i) r[i] = rhs[i] - w[i];
        rnorm = norm2(r);
        rep.residual_history.back() = rnorm;
        done = rnorm <= tol;
    }

    rep.converged = rnorm <= tol;
    rep.wall_time = timer.seconds();
    return {std::move(x), rep};
}

}  // namespace

std::pair<std::vector<double>, SolveReport> gmres(const LinOp& op, std::span<const double> rhs,
                                                  const LinOp* precond, const KrylovConfig& cfg) {
    return gmres_impl(op, rhs, precond, cfg, /*flexible=*/false);
}

std::pair<std::vector<double>, SolveReport> fgmres(const LinOp& op, std::span<const double> rhs,
                                                   const LinOp* precond,
                                                   const KrylovConfig& cfg) {
    return gmres_impl(op, rhs, precond, cfg, /*flexible=*/true);
}

std::pair<std::vector<double>, SolveReport> pcg_jacobi(const SparseMat& m,
                                                       std::span<const double> rhs,
                                                       const KrylovConfig& cfg) {
    const Timer timer;
    const int n = m.rows();
    std::vector<double> x(n, 0.0);
    SolveReport rep;

    std::vector<double> invdiag = m.diagonal_values();
    for (double& d : invdiag) {
        if (d <= 0.0) throw std::runtime_error("pcg_jacobi: nonpositive diagonal entry");
        d = 1.0 / d;
    }

    std::vector<double> r(rhs.begin(), rhs.end());
    const double bnorm = norm2(r);
    rep.residual_history.push_back(bnorm);
    const double tol = cfg.threshold(bnorm);
    if (bnorm == 0.0 || bnorm <= tol) {
        rep.converged = true;
        rep.wall_time = timer.seconds();
        return {std::move(x), rep};
    }

    std::vector<double> zv(n), p(n), ap(n);
    for (int i = 0; i < n; ++i) zv[i] = invdiag[i] * r[i];
    p = zv;
    double rz = dot(r, zv);

    for (int it = 0; it < cfg.maxit; ++it) {
        m.multiply(p, ap);
        const double pap = dot(p, ap);
        if (pap <= 0.0) throw std::runtime_error("pcg_jacobi: operator is not positive definite");
        const double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        ++rep.iterations;
        const double rnorm = norm2(r);
        rep.residual_history.push_back(rnorm);
        if (rnorm <= tol) {
            rep.converged = true;
            break;
        }
        for (int i = 0; i < n; ++i) zv[i] = invdiag[i] * r[i];
        const double rz_new = dot(r, zv);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = zv[i] + beta * p[i];
    }
    rep.wall_time = timer.seconds();
    return {std::move(x), rep};
}

// ---------------------------------------------------------------------------
// Direct solvers (Eigen-backed)
// ---------------------------------------------------------------------------

namespace {

Eigen::SparseMatrix<double> to_eigen(const SparseMat& m) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.nnz());
    const auto offs = m.row_offsets();
    const auto cols = m.col_indices();
    const auto vals = m.values();
    for (int r = 0; r < m.rows(); ++r)
        for (int k = offs[r]; k < offs[r + 1]; ++k)
            trip.emplace_back(r, cols[k], vals[k]);
    Eigen::SparseMatrix<double> e(m.rows(), m.cols());
    e.setFromTriplets(trip.begin(), trip.end());
    return e;
}

}  // namespace

std::vector<double> direct_solve_dense(std::span<const double> a, int n,
                                       std::span<const double> rhs) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = a[static_cast<std::size_t>(i) * n + j];
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw std::runtime_error("direct_solve_dense: singular matrix");
    Eigen::VectorXd x = lu.solve(b);
    return {x.data(), x.data() + n};
}

struct SparseLuSolver::Impl {
    Eigen::SparseMatrix<double> mat;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool ok = false;
};

SparseLuSolver::SparseLuSolver() : impl_(new Impl) {}
SparseLuSolver::~SparseLuSolver() = default;
SparseLuSolver::SparseLuSolver(SparseLuSolver&&) noexcept = default;
SparseLuSolver& SparseLuSolver::operator=(SparseLuSolver&&) noexcept = default;

SparseLuSolver::SparseLuSolver(const SparseMat& m) : impl_(new Impl) { factor(m); }

void SparseLuSolver::factor(const SparseMat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("SparseLuSolver: matrix must be square");
    impl_->mat = to_eigen(m);
    impl_->mat.makeCompressed();
    impl_->lu.compute(impl_->mat);
    impl_->ok = impl_->lu.info() == Eigen::Success;
    if (!impl_->ok) throw std::runtime_error("SparseLuSolver: factorization failed (singular?)");
}

bool SparseLuSolver::ready() const { return impl_ && impl_->ok; }

std::vector<double> SparseLuSolver::solve(std::span<const double> rhs) const {
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = impl_->lu.solve(b);
    // one refinement pass tightens the residual at negligible cost
    Eigen::VectorXd r = b - impl_->mat * x;
    x += impl_->lu.solve(r).eval();
    return {x.data(), x.data() + x.size()};
}

std::vector<double> direct_solve(const SparseMat& m, std::span<const double> rhs) {
    SparseLuSolver lu(m);
    return lu.solve(rhs);
}

struct DenseLuSolver::Impl {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

DenseLuSolver::DenseLuSolver() : impl_(new Impl) {}
DenseLuSolver::~DenseLuSolver() = default;
DenseLuSolver::DenseLuSolver(DenseLuSolver&&) noexcept = default;
DenseLuSolver& DenseLuSolver::operator=(DenseLuSolver&&) noexcept = default;

DenseLuSolver::DenseLuSolver(std::span<const double> a, int n) : impl_(new Impl) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = a[static_cast<std::size_t>(i) * n + j];
    impl_->lu.compute(A);
}

std::vector<double> DenseLuSolver::solve(std::span<const double> rhs) const {
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = impl_->lu.solve(b);
    return {x.data(), x.data() + x.size()};
}

}  // namespace chns
