#pragma once

#include <algorithm>
#include <vector>

namespace chns {

// Relaxed double-obstacle free energy density: W = W_plus + W_minus with
//   W_plus(x)  = (s/2) (max(0, x-1)^2 + min(0, x+1)^2)   (convex)
//   W_minus(x) = (1 - x^2) / 2                            (concave)

inline double potential_w_plus(double phi, double s) {
    const double a = std::max(0.0, phi - 1.0);
    const double b = std::min(0.0, phi + 1.0);
    return 0.5 * s * (a * a + b * b);
}

inline double potential_w_minus(double phi) { return 0.5 * (1.0 - phi * phi); }

inline double potential_w(double phi, double s) {
    return potential_w_plus(phi, s) + potential_w_minus(phi);
}

inline double potential_dw_plus(double phi, double s) {
    return s * (std::max(0.0, phi - 1.0) + std::min(0.0, phi + 1.0));
}

inline double potential_dw_minus(double phi) { return -phi; }

inline double potential_ddw_plus(double phi, double s) {
    return std::abs(phi) > 1.0 ? s : 0.0;
}

inline double interp_density(double phi, double rho1, double rho2) {
    return 0.5 * (rho2 - rho1) * phi + 0.5 * (rho2 + rho1);
}

// The affine form matching interp_density, i.e. eta(-1) = eta1, eta(+1) = eta2.
inline double interp_viscosity(double phi, double eta1, double eta2) {
    return 0.5 * (eta2 - eta1) * phi + 0.5 * (eta2 + eta1);
}

inline std::vector<double> interp_density(const std::vector<double>& phi, double rho1,
                                          double rho2) {
    std::vector<double> out(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) out[i] = interp_density(phi[i], rho1, rho2);
    return out;
}

inline std::vector<double> interp_viscosity(const std::vector<double>& phi, double eta1,
                                            double eta2) {
    std::vector<double> out(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) out[i] = interp_viscosity(phi[i], eta1, eta2);
    return out;
}

}  // namespace chns
