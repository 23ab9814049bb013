#pragma once

#include <array>
#include <cmath>

#include "chns/mesh.hpp"

namespace chns {

/// Symmetric 7-point triangle rule, exact for polynomials up to degree 5,
/// all weights positive. Points in barycentric coordinates, weights sum to 1.
struct TriQuadRule {
    static constexpr int n_points = 7;
    std::array<std::array<double, 3>, 7> bary;
    std::array<double, 7> weight;

    TriQuadRule() {
        const double s = std::sqrt(15.0);
        const double a1 = (6.0 - s) / 21.0;
        const double a2 = (6.0 + s) / 21.0;
        const double w0 = 9.0 / 40.0;
        const double w1 = (155.0 - s) / 1200.0;
        const double w2 = (155.0 + s) / 1200.0;
        bary[0] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        weight[0] = w0;
        bary[1] = {a1, a1, 1.0 - 2.0 * a1};
        bary[2] = {a1, 1.0 - 2.0 * a1, a1};
        bary[3] = {1.0 - 2.0 * a1, a1, a1};
        weight[1] = weight[2] = weight[3] = w1;
        bary[4] = {a2, a2, 1.0 - 2.0 * a2};
        bary[5] = {a2, 1.0 - 2.0 * a2, a2};
        bary[6] = {1.0 - 2.0 * a2, a2, a2};
        weight[4] = weight[5] = weight[6] = w2;
    }
};

inline const TriQuadRule& tri_quadrature() {
    static const TriQuadRule rule;
    return rule;
}

/// Per-triangle geometry and basis evaluations at the quadrature points.
/// P2 local numbering: nodes 0..2 are the vertices, node 3+l is the midpoint
/// of the edge between local vertices l and (l+1)%3.
struct ElementBasis {
    double area = 0.0;
    std::array<int, 3> v{};               // global vertex ids
    std::array<int, 3> e{};               // global edge ids
    std::array<Vec2, 3> grad_p1{};        // constant P1 gradients
    std::array<std::array<double, 3>, TriQuadRule::n_points> p1{};
    std::array<std::array<double, 6>, TriQuadRule::n_points> p2{};
    std::array<std::array<Vec2, 6>, TriQuadRule::n_points> grad_p2{};
    std::array<Vec2, TriQuadRule::n_points> xq{};  // physical quadrature points
    std::array<double, TriQuadRule::n_points> wq{};  // physical weights (sum = area)

    ElementBasis(const Mesh2D& mesh, int t) {
        const auto& rule = tri_quadrature();
        v = mesh.triangles[t];
        e = mesh.tri_edges[t];
        const Vec2 p0 = mesh.vertices[v[0]];
        const Vec2 p1v = mesh.vertices[v[1]];
        const Vec2 p2v = mesh.vertices[v[2]];
        const double jxx = p1v.x - p0.x, jxy = p2v.x - p0.x;
        const double jyx = p1v.y - p0.y, jyy = p2v.y - p0.y;
        const double det = jxx * jyy - jxy * jyx;
        area = 0.5 * det;

        // gradients of barycentric coordinates (rows of J^{-T} combinations)
        const double inv = 1.0 / det;
        const Vec2 g1{jyy * inv, -jxy * inv};    // grad lambda_1
        const Vec2 g2{-jyx * inv, jxx * inv};    // grad lambda_2
        const Vec2 g0{-g1.x - g2.x, -g1.y - g2.y};
        grad_p1 = {g0, g1, g2};

        for (int q = 0; q < TriQuadRule::n_points; ++q) {
            const auto& l = rule.bary[q];
            p1[q] = {l[0], l[1], l[2]};
            for (int i = 0; i < 3; ++i) p2[q][i] = l[i] * (2.0 * l[i] - 1.0);
            for (int i = 0; i < 3; ++i) {
                const int a = i, b = (i + 1) % 3;
                p2[q][3 + i] = 4.0 * l[a] * l[b];
            }
            const std::array<Vec2, 3> g = grad_p1;
            for (int i = 0; i < 3; ++i)
                grad_p2[q][i] = (4.0 * l[i] - 1.0) * g[i];
            for (int i = 0; i < 3; ++i) {
                const int a = i, b = (i + 1) % 3;
                grad_p2[q][3 + i] = 4.0 * (l[a] * g[b] + l[b] * g[a]);
            }
            xq[q] = l[0] * p0 + l[1] * p1v + l[2] * p2v;
            wq[q] = rule.weight[q] * area;
        }
    }

    /// Global P2 scalar node id for local node k (0..5).
    int p2_node(const Mesh2D& mesh, int k) const {
        return k < 3 ? v[k] : mesh.n_vertices() + e[k - 3];
    }
};

}  // namespace chns
