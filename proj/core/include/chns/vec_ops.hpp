#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace chns {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
    for (double& v : x) v *= alpha;
}

inline std::vector<double> scaled_copy(double alpha, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    scale(alpha, y);
    return y;
}

/// Removes the component along the constant vector (Euclidean deflation).
inline void deflate_constants(std::span<double> x) {
    if (x.empty()) return;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) v -= mean;
}

}  // namespace chns
