#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "chns/mesh.hpp"
#include "chns/params.hpp"
#include "chns/sparse.hpp"

namespace chns {

/// Inputs of the spectral inclusion study: the pencil
///   X = [M, -alpha K; K, M],   Y = [M, -alpha K - beta Lambda; K, M]
/// with M the (possibly lumped) P1 mass, K the tau*b-scaled stiffness and
/// Lambda the active-set penalty matrix; alpha = sigma*eps/(tau*b),
/// beta = sigma/eps.
struct SpectralInput {
    SparseMat mass;
    SparseMat stiff_scaled;
    SparseMat penalty;
    double alpha = 0.0;
    double beta = 0.0;
    double penalty_s = 0.0;
    bool lumped = true;
};

SpectralInput make_spectral_input(const Mesh2D& mesh, const PhysParams& par,
                                  const std::vector<double>& phi, bool lumped);

/// Dense X and Y (row-major, dimension 2N).
struct DensePair {
    int n = 0;  // 2N
    std::vector<double> x;
    std::vector<double> y;
};

DensePair build_xy_dense(const SpectralInput& in);

/// How the eigenvalues of X^{-1}(X - Y) are computed. All routes are dense and
/// exact: `FullPair` eigensolves the 2N x 2N matrix directly; `Reduced` uses
/// its block-triangular structure (nonzero spectrum = sp(-beta (WM)^{-1} C
/// Lambda)); `Similarity` additionally applies the symmetric similarity to
/// r(C~) Lambda~ and restricts to the active subspace.
enum class SpectralRoute { FullPair, Reduced, Similarity };

struct SpectralReport {
    double alpha = 0.0;
    double beta = 0.0;
    bool lumped = true;
    std::vector<std::complex<double>> eigenvalues;  // of X^{-1}(X - Y)
    double measured_radius = 0.0;
    double bound_radius = 0.0;     // (beta / (2 sqrt(alpha))) * rho(Lambda~)
    double rho_lambda_tilde = 0.0;
    double rho_lambda0 = 0.0;      // rho(Lambda~) / s

    double margin() const { return bound_radius - measured_radius; }
    bool included(double slack = 1.0e-10) const {
        return measured_radius <= bound_radius + slack * (1.0 + bound_radius);
    }

    // cross-route checks, filled when requested
    double radius_direct = -1.0;       // full 2N eigensolve
    double radius_reduced = -1.0;      // beta * rho((WM)^{-1} C Lambda)
    double radius_similarity = -1.0;   // via r(C~) Lambda~
    double spectrum_match_error = -1.0;  // sp((WM)^{-1}C Lambda) vs sp(r(C~)Lambda~)
};

SpectralReport verify_inclusion(const SpectralInput& in,
                                SpectralRoute route = SpectralRoute::Reduced,
                                bool proof_checks = false);

/// Active-set-independent work of the similarity route (the symmetric
/// eigendecomposition of C~ and its rational image), reusable across many
/// penalty samples that share the mass/stiffness pair. Lumped mass only.
class SpectralCache {
public:
    SpectralCache(const SparseMat& lumped_mass, const SparseMat& stiff_scaled, double alpha);
    ~SpectralCache();
    SpectralCache(SpectralCache&&) noexcept;
    SpectralCache& operator=(SpectralCache&&) noexcept;

    struct Impl;
    const Impl& impl() const { return *impl_; }

private:
    std::unique_ptr<Impl> impl_;
};

/// Similarity-route inclusion check using a shared cache; `in` must be lumped
/// and built from the same mass/stiffness pair as the cache.
SpectralReport verify_inclusion_lumped(const SpectralInput& in, const SpectralCache& cache);

struct RationalBoundReport {
    double max_over_spectrum = 0.0;  // max r(lambda) over sp(C~)
    double analytic_max = 0.0;       // 1 / (2 sqrt(alpha))
    double argmax_gap = 0.0;         // min distance of sp(C~) to 1/sqrt(alpha)
};

/// r(x) = x / (1 + alpha x^2); its maximum over sp(C~) never exceeds the
/// calculus maximum 1/(2 sqrt(alpha)), attained at x = 1/sqrt(alpha).
RationalBoundReport rational_bound_check(const SparseMat& mass, const SparseMat& stiff_scaled,
                                         double alpha, bool lumped);

inline double rational_r(double x, double alpha) { return x / (1.0 + alpha * x * x); }

/// Time-step threshold eps^3 / (s^2 sigma b rho(Lambda0~)^2) under which the
/// inclusion radius stays below one half.
double tau_threshold(const PhysParams& par, double rho_lambda0);

/// Radius bound in the lumped case, s*sqrt(tau sigma b)/(2 eps^{3/2}).
double lumped_radius_bound(const PhysParams& par);

/// Synthetic phase field with the given fraction of nodes pushed outside
/// [-1, 1] (the active set of the penalty term).
std::vector<double> synthetic_active_phi(int n, double active_fraction, unsigned seed);

void write_spectral_csv(const std::string& path, const std::vector<SpectralReport>& rows);

}  // namespace chns
