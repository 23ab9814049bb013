#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "chns/sparse.hpp"

namespace chns {

/// Square linear operator given by its action. `varying` marks operators whose
/// action changes between applications (e.g. preconditioners containing an
/// inner iterative solve); those require a flexible outer method.
struct LinOp {
    int n = 0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
    bool varying = false;
};

LinOp make_op(const SparseMat& m);
LinOp identity_op(int n);

enum class ToleranceRule {
    MaxAbsRel,  // threshold = max(tol_abs, tol_rel * ||b||)
    MinAbsRel,  // threshold = min(tol_abs, tol_rel * ||b||)
};

struct KrylovConfig {
    double tol_abs = 0.0;
    double tol_rel = 1.0e-6;
    int restart = 30;
    int maxit = 300;
    bool right_side = true;  // right preconditioning throughout
    ToleranceRule rule = ToleranceRule::MaxAbsRel;

    double threshold(double rhs_norm) const;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history;  // true residual norms, starts at ||r0||
    bool converged = false;
    double wall_time = 0.0;
};

/// Right-preconditioned restarted GMRES (modified Gram-Schmidt Arnoldi). The
/// reported residuals are true residual norms. Pass nullptr to run without a
/// preconditioner. Requires a non-varying preconditioner.
std::pair<std::vector<double>, SolveReport> gmres(const LinOp& op, std::span<const double> rhs,
                                                  const LinOp* precond, const KrylovConfig& cfg);

/// Flexible GMRES: stores the preconditioned basis so the preconditioner may
/// change between iterations. With a constant preconditioner it produces the
/// same iterates as gmres up to roundoff.
std::pair<std::vector<double>, SolveReport> fgmres(const LinOp& op, std::span<const double> rhs,
                                                   const LinOp* precond,
                                                   const KrylovConfig& cfg);

/// Jacobi-preconditioned conjugate gradients for SPD operators. Throws on
/// detected indefiniteness (nonpositive curvature).
std::pair<std::vector<double>, SolveReport> pcg_jacobi(const SparseMat& m,
                                                       std::span<const double> rhs,
                                                       const KrylovConfig& cfg);

/// Dense LU solve; `a` is row-major n x n.
std::vector<double> direct_solve_dense(std::span<const double> a, int n,
                                       std::span<const double> rhs);

/// Sparse LU solve with one step of iterative refinement.
std::vector<double> direct_solve(const SparseMat& m, std::span<const double> rhs);

/// Reusable sparse LU factorization.
class SparseLuSolver {
public:
    SparseLuSolver();
    ~SparseLuSolver();
    SparseLuSolver(SparseLuSolver&&) noexcept;
    SparseLuSolver& operator=(SparseLuSolver&&) noexcept;

    explicit SparseLuSolver(const SparseMat& m);
    void factor(const SparseMat& m);
    std::vector<double> solve(std::span<const double> rhs) const;
    bool ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Reusable dense LU factorization (partial pivoting).
class DenseLuSolver {
public:
    DenseLuSolver();
    ~DenseLuSolver();
    DenseLuSolver(DenseLuSolver&&) noexcept;
    DenseLuSolver& operator=(DenseLuSolver&&) noexcept;

    DenseLuSolver(std::span<const double> a, int n);  // row-major
    std::vector<double> solve(std::span<const double> rhs) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace chns
