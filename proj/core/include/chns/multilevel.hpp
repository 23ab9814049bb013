#pragma once

#include <memory>
#include <span>
#include <vector>

#include "chns/sparse.hpp"

namespace chns {

enum class ApproxMethod { Multilevel, CgJacobi, Direct };

struct ApproxInverseSpec {
    ApproxMethod method = ApproxMethod::Direct;
    double tol = 1.0e-5;  // relative residual target
    int maxit = 50;       // iteration / cycle budget
    /// When > 0, apply exactly this many multilevel cycles and skip the
    /// residual loop (the usage pattern for nonsymmetric momentum blocks).
    int fixed_cycles = 0;
    /// Project the constant vector out of inputs and outputs (for operators
    /// with pure-Neumann nullspace); the factorization pins one dof.
    bool deflate_constants = false;
};

/// Approximate inverse fulfilling the contract ||b - A y|| <= tol ||b|| (or a
/// fixed amount of multilevel work). Immutable after construction and safe to
/// share read-only. If multilevel setup fails its self-check, construction
/// falls back to a direct factorization and flags the downgrade.
class ApproxInverse {
public:
    ApproxInverse() = default;

    static ApproxInverse build(const SparseMat& a, const ApproxInverseSpec& spec);

    std::vector<double> apply(std::span<const double> b, bool* converged = nullptr) const;
    void apply(std::span<const double> b, std::span<double> y, bool* converged = nullptr) const;

    ApproxMethod method() const { return spec_.method; }
    const ApproxInverseSpec& spec() const { return spec_; }
    bool downgraded() const { return downgraded_; }
    int dimension() const;
    /// Iterations (or cycles) spent in the most recent apply of this thread's
    /// last call; purely informational.
    int last_iterations() const { return last_iterations_; }

private:
    struct Hierarchy;

    ApproxInverseSpec spec_;
    bool downgraded_ = false;
    std::shared_ptr<const SparseMat> matrix_;
    std::shared_ptr<const SparseMat> work_matrix_;  // pinned copy when deflating
    std::shared_ptr<const Hierarchy> hierarchy_;
    std::shared_ptr<const class SparseLuSolver> lu_;
    std::vector<double> inv_diag_;
    mutable int last_iterations_ = 0;
};

ApproxInverse make_approx_inverse(const SparseMat& a, const ApproxInverseSpec& spec);

}  // namespace chns
