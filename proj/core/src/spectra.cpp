#include "chns/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "chns/assembly.hpp"

namespace chns {

namespace {

Eigen::MatrixXd to_dense_eigen(const SparseMat& m) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    const auto offs = m.row_offsets();
    const auto cols = m.col_indices();
    const auto vals = m.values();
    for (int r = 0; r < m.rows(); ++r)
        for (int k = offs[r]; k < offs[r + 1]; ++k) d(r, cols[k]) += vals[k];
    return d;
}

std::vector<std::complex<double>> general_spectrum(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectra: dense eigensolve failed");
    std::vector<std::complex<double>> out(a.rows());
    for (int i = 0; i < a.rows(); ++i) out[i] = es.eigenvalues()[i];
    return out;
}

double spectral_radius(const std::vector<std::complex<double>>& sp) {
    double r = 0.0;
    for (const auto& z : sp) r = std::max(r, std::abs(z));
    return r;
}

// M^{-1/2} as a dense matrix (diagonal shortcut when M is lumped).
Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& m, bool diagonal) {
    const int n = static_cast<int>(m.rows());
    if (diagonal) {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) r(i, i) = 1.0 / std::sqrt(m(i, i));
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectra: mass eigendecomposition failed");
    Eigen::VectorXd d = es.eigenvalues();
    for (int i = 0; i < n; ++i) {
        if (d[i] <= 0.0) throw std::runtime_error("spectra: mass matrix not positive definite");
        d[i] = 1.0 / std::sqrt(d[i]);
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double match_spectra(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    auto cmp = [](const std::complex<double>& x, const std::complex<double>& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    };
    std::sort(a.begin(), a.end(), cmp);
    std::sort(b.begin(), b.end(), cmp);
    double scale = 1.0;
    for (const auto& z : a) scale = std::max(scale, std::abs(z));
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    return err / scale;
}

}  // namespace

SpectralInput make_spectral_input(const Mesh2D& mesh, const PhysParams& par,
                                  const std::vector<double>& phi, bool lumped) {
    SpectralInput in;
    in.alpha = par.sigma * par.eps / (par.tau * par.mobility);
    in.beta = par.sigma / par.eps;
    in.penalty_s = par.penalty;
    in.lumped = lumped;
    if (lumped) {
        in.mass = SparseMat::diagonal(lumped_mass_p1(mesh));
        in.penalty = SparseMat::diagonal(assemble_penalty_lumped(mesh, phi, par.penalty));
    } else {
        in.mass = assemble_mass_p1(mesh);
        in.penalty = assemble_penalty(mesh, phi, par.penalty);
    }
    in.stiff_scaled = assemble_stiff_p1(mesh).scaled(par.tau * par.mobility);
    return in;
}

DensePair build_xy_dense(const SpectralInput& in) {
    const int n = in.mass.rows();
    DensePair pair;
    pair.n = 2 * n;
    pair.x.assign(static_cast<std::size_t>(pair.n) * pair.n, 0.0);
    pair.y.assign(static_cast<std::size_t>(pair.n) * pair.n, 0.0);

    const Eigen::MatrixXd m = to_dense_eigen(in.mass);
    const Eigen::MatrixXd k = to_dense_eigen(in.stiff_scaled);
    const Eigen::MatrixXd l = to_dense_eigen(in.penalty);

    auto put = [&](std::vector<double>& dst, const Eigen::MatrixXd& blk, int r0, int c0,
                   double s) {
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                dst[static_cast<std::size_t>(r0 + r) * pair.n + c0 + c] += s * blk(r, c);
    };
    for (auto* dst : {&pair.x, &pair.y}) {
        put(*dst, m, 0, 0, 1.0);
        put(*dst, k, 0, n, -in.alpha);
        put(*dst, k, n, 0, 1.0);
        put(*dst, m, n, n, 1.0);
    }
    put(pair.y, l, 0, n, -in.beta);
    return pair;
}

SpectralReport verify_inclusion(const SpectralInput& in, SpectralRoute route,
                                bool proof_checks) {
    const int n = in.mass.rows();
    SpectralReport rep;
    rep.alpha = in.alpha;
    rep.beta = in.beta;
    rep.lumped = in.lumped;

    const Eigen::MatrixXd m = to_dense_eigen(in.mass);
    const Eigen::MatrixXd k = to_dense_eigen(in.stiff_scaled);
    const Eigen::MatrixXd lam = to_dense_eigen(in.penalty);

    const Eigen::MatrixXd msqi = inv_sqrt(m, in.lumped);
    const Eigen::MatrixXd lam_tilde = msqi * lam * msqi;
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lam_tilde);
        rep.rho_lambda_tilde = std::max(std::abs(es.eigenvalues().minCoeff()),
                                        std::abs(es.eigenvalues().maxCoeff()));
    }
    rep.rho_lambda0 = in.penalty_s > 0.0 ? rep.rho_lambda_tilde / in.penalty_s : 0.0;
    rep.bound_radius = in.beta / (2.0 * std::sqrt(in.alpha)) * rep.rho_lambda_tilde;

    // shared pieces of the proof factorization:
    //   X^{-1}(X - Y) = beta [0, (WM)^{-1} Lambda; 0, -(WM)^{-1} C Lambda]
    // with C = K M^{-1} and W = I + alpha C^2.
    const Eigen::MatrixXd minv_k = m.llt().solve(k);        // M^{-1} K
    const Eigen::MatrixXd c = minv_k.transpose();           // K M^{-1}
    const Eigen::MatrixXd wm = m + in.alpha * c * c * m;    // W M
    const Eigen::MatrixXd g = wm.partialPivLu().solve(c * lam);  // (WM)^{-1} C Lambda

    switch (route) {
        case SpectralRoute::FullPair: {
            const DensePair pair = build_xy_dense(in);
            Eigen::MatrixXd x(pair.n, pair.n), y(pair.n, pair.n);
            for (int r = 0; r < pair.n; ++r)
                for (int col = 0; col < pair.n; ++col) {
                    x(r, col) = pair.x[static_cast<std::size_t>(r) * pair.n + col];
                    y(r, col) = pair.y[static_cast<std::size_t>(r) * pair.n + col];
                }
            const Eigen::MatrixXd t = x.partialPivLu().solve(x - y);
            rep.eigenvalues = general_spectrum(t);
            break;
        }
        case SpectralRoute::Reduced: {
            rep.eigenvalues = general_spectrum(-in.beta * g);
            rep.eigenvalues.resize(2 * n, std::complex<double>(0.0, 0.0));
            break;
        }
        case SpectralRoute::Similarity: {
            // restrict the symmetric similarity image to the active subspace
            const Eigen::MatrixXd c_tilde = msqi * k * msqi;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esc(c_tilde);
            Eigen::VectorXd rc = esc.eigenvalues();
            for (int i = 0; i < n; ++i) rc[i] = rational_r(rc[i], in.alpha);
            const Eigen::MatrixXd r_of_c =
                esc.eigenvectors() * rc.asDiagonal() * esc.eigenvectors().transpose();

            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esl(lam_tilde);
            Eigen::VectorXd dl = esl.eigenvalues();
            std::vector<int> active;
            for (int i = 0; i < n; ++i)
                if (dl[i] > 1.0e-14 * std::max(1.0, dl.maxCoeff())) active.push_back(i);
            Eigen::MatrixXd basis(n, static_cast<int>(active.size()));
            Eigen::VectorXd sq(static_cast<int>(active.size()));
            for (std::size_t j = 0; j < active.size(); ++j) {
                basis.col(static_cast<int>(j)) = esl.eigenvectors().col(active[j]);
                sq[static_cast<int>(j)] = std::sqrt(dl[active[j]]);
            }
            const Eigen::MatrixXd small =
                sq.asDiagonal() * (basis.transpose() * r_of_c * basis) * sq.asDiagonal();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ess(small);
            rep.eigenvalues.assign(2 * n, std::complex<double>(0.0, 0.0));
            for (int i = 0; i < small.rows(); ++i)
                rep.eigenvalues[i] = std::complex<double>(-in.beta * ess.eigenvalues()[i], 0.0);
            break;
        }
    }
    rep.measured_radius = spectral_radius(rep.eigenvalues);

    if (proof_checks) {
        const DensePair pair = build_xy_dense(in);
        Eigen::MatrixXd x(pair.n, pair.n), y(pair.n, pair.n);
        for (int r = 0; r < pair.n; ++r)
            for (int col = 0; col < pair.n; ++col) {
                x(r, col) = pair.x[static_cast<std::size_t>(r) * pair.n + col];
                y(r, col) = pair.y[static_cast<std::size_t>(r) * pair.n + col];
            }
        const Eigen::MatrixXd t = x.partialPivLu().solve(x - y);
        rep.radius_direct = spectral_radius(general_spectrum(t));

        const std::vector<std::complex<double>> sp_g = general_spectrum(g);
        rep.radius_reduced = in.beta * spectral_radius(sp_g);

        const Eigen::MatrixXd c_tilde = msqi * k * msqi;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esc(c_tilde);
        Eigen::VectorXd rc = esc.eigenvalues();
        for (int i = 0; i < n; ++i) rc[i] = rational_r(rc[i], in.alpha);
        const Eigen::MatrixXd r_of_c =
            esc.eigenvectors() * rc.asDiagonal() * esc.eigenvectors().transpose();
        const std::vector<std::complex<double>> sp_sim = general_spectrum(r_of_c * lam_tilde);
        rep.radius_similarity = in.beta * spectral_radius(sp_sim);
        rep.spectrum_match_error = match_spectra(sp_g, sp_sim);
    }
    return rep;
}

struct SpectralCache::Impl {
    int n = 0;
    double alpha = 0.0;
    Eigen::VectorXd inv_sqrt_mass;   // lumped mass diagonal^{-1/2}
    Eigen::MatrixXd rational_image;  // r(C~) dense
};

SpectralCache::SpectralCache(const SparseMat& lumped_mass, const SparseMat& stiff_scaled,
                             double alpha)
    : impl_(new Impl) {
    const int n = lumped_mass.rows();
    impl_->n = n;
    impl_->alpha = alpha;
    impl_->inv_sqrt_mass.resize(n);
    for (int i = 0; i < n; ++i)
        impl_->inv_sqrt_mass[i] = 1.0 / std::sqrt(lumped_mass.coeff(i, i));

    Eigen::MatrixXd c_tilde = to_dense_eigen(stiff_scaled);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            c_tilde(r, c) *= impl_->inv_sqrt_mass[r] * impl_->inv_sqrt_mass[c];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c_tilde);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("SpectralCache: eigendecomposition failed");
    Eigen::VectorXd d = es.eigenvalues();
    for (int i = 0; i < n; ++i) d[i] = rational_r(d[i], alpha);
    impl_->rational_image = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

SpectralCache::~SpectralCache() = default;
SpectralCache::SpectralCache(SpectralCache&&) noexcept = default;
SpectralCache& SpectralCache::operator=(SpectralCache&&) noexcept = default;

SpectralReport verify_inclusion_lumped(const SpectralInput& in, const SpectralCache& cache) {
    if (!in.lumped)
        throw std::invalid_argument("verify_inclusion_lumped: requires a lumped input");
    const SpectralCache::Impl& c = cache.impl();
    const int n = c.n;
    SpectralReport rep;
    rep.alpha = in.alpha;
    rep.beta = in.beta;
    rep.lumped = true;

    // lumped penalty is diagonal, so Lambda~ is too: the nonzero spectrum of
    // r(C~) Lambda~ is that of the active-restricted symmetric block
    std::vector<int> active;
    std::vector<double> sqrt_l;
    double rho_lt = 0.0;
    for (int i = 0; i < n; ++i) {
        const double l = in.penalty.coeff(i, i) * c.inv_sqrt_mass[i] * c.inv_sqrt_mass[i];
        rho_lt = std::max(rho_lt, l);
        if (l > 0.0) {
            active.push_back(i);
            sqrt_l.push_back(std::sqrt(l));
        }
    }
    rep.rho_lambda_tilde = rho_lt;
    rep.rho_lambda0 = in.penalty_s > 0.0 ? rho_lt / in.penalty_s : 0.0;
    rep.bound_radius = in.beta / (2.0 * std::sqrt(in.alpha)) * rho_lt;

    const int na = static_cast<int>(active.size());
    rep.eigenvalues.assign(2 * n, std::complex<double>(0.0, 0.0));
    if (na > 0) {
        Eigen::MatrixXd small(na, na);
        for (int r = 0; r < na; ++r)
            for (int col = 0; col < na; ++col)
                small(r, col) =
                    sqrt_l[r] * c.rational_image(active[r], active[col]) * sqrt_l[col];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
        for (int i = 0; i < na; ++i)
            rep.eigenvalues[i] = std::complex<double>(-in.beta * es.eigenvalues()[i], 0.0);
    }
    rep.measured_radius = spectral_radius(rep.eigenvalues);
    return rep;
}

RationalBoundReport rational_bound_check(const SparseMat& mass, const SparseMat& stiff_scaled,
                                         double alpha, bool lumped) {
    const Eigen::MatrixXd m = to_dense_eigen(mass);
    const Eigen::MatrixXd k = to_dense_eigen(stiff_scaled);
    const Eigen::MatrixXd msqi = inv_sqrt(m, lumped);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(msqi * k * msqi);

    RationalBoundReport rep;
    rep.analytic_max = 1.0 / (2.0 * std::sqrt(alpha));
    rep.argmax_gap = std::numeric_limits<double>::max();
    const double star = 1.0 / std::sqrt(alpha);
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double lambda = std::max(0.0, es.eigenvalues()[i]);
        rep.max_over_spectrum = std::max(rep.max_over_spectrum, rational_r(lambda, alpha));
        rep.argmax_gap = std::min(rep.argmax_gap, std::abs(lambda - star));
    }
    return rep;
}

double tau_threshold(const PhysParams& par, double rho_lambda0) {
    const double rho = rho_lambda0 > 0.0 ? rho_lambda0 : 1.0;
    return std::pow(par.eps, 3) /
           (par.penalty * par.penalty * par.sigma * par.mobility * rho * rho);
}

double lumped_radius_bound(const PhysParams& par) {
    return par.penalty * std::sqrt(par.tau * par.sigma * par.mobility) /
           (2.0 * par.eps * std::sqrt(par.eps));
}

std::vector<double> synthetic_active_phi(int n, double active_fraction, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> inner(-0.9, 0.9);
    std::uniform_real_distribution<double> push(0.05, 1.0);
    std::vector<double> phi(n);
    for (int i = 0; i < n; ++i) {
        if (unit(rng) < active_fraction) {
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            phi[i] = sign * (1.0 + push(rng));
        } else {
            phi[i] = inner(rng);
        }
    }
    return phi;
}

void write_spectral_csv(const std::string& path, const std::vector<SpectralReport>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_spectral_csv: cannot open " + path);
    out << "alpha,beta,rho_lambda_tilde,measured_radius,bound_radius,margin\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.alpha << ',' << r.beta << ',' << r.rho_lambda_tilde << ','
            << r.measured_radius << ',' << r.bound_radius << ',' << r.margin() << '\n';
    }
}

}  // namespace chns
