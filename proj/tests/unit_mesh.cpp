#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "chns/mesh.hpp"

using namespace chns;

TEST_CASE("tiny rectangle: counts") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 1, 2);
    CHECK(m.n_vertices() == 6);
    CHECK(m.n_triangles() == 4);
}

TEST_CASE("all triangles positively oriented, tiling is exact") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 16, 32);
    double total = 0.0;
    for (int t = 0; t < m.n_triangles(); ++t) {
        const double a = m.signed_area(t);
        CHECK(a > 0.0);
        total += a;
    }
    CHECK(std::abs(total - 2.0) < 1e-12 * 2.0);
}

TEST_CASE("edge midpoints are arithmetic means") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 3, 5);
    for (int e = 0; e < m.n_edges(); ++e) {
        const Vec2 mid = m.edge_midpoint(e);
        const Vec2 a = m.vertices[m.edges[e].a];
        const Vec2 b = m.vertices[m.edges[e].b];
        CHECK(mid.x == 0.5 * (a.x + b.x));
        CHECK(mid.y == 0.5 * (a.y + b.y));
    }
}

TEST_CASE("interior edges are shared by exactly two triangles") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 4, 8);
    std::vector<int> uses(m.n_edges(), 0);
    for (int t = 0; t < m.n_triangles(); ++t)
        for (int l = 0; l < 3; ++l) uses[m.tri_edges[t][l]]++;
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.edge_walls[e]) CHECK(uses[e] == 1);
        else CHECK(uses[e] == 2);
    }
}

// Euler's formula for the triangulated rectangle (one face removed for the
// outer region): V - E + F = 1, so the quadratic node count V + E is fully
// determined by the enumeration.
TEST_CASE("quadratic dof count matches Euler's formula") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 16, 32);
    const DofMap dof = build_dofmap(m, BoundaryConditions::benchmark());
    CHECK(m.n_vertices() - m.n_edges() + m.n_triangles() == 1);
    CHECK(dof.n2_scalar == m.n_vertices() + m.n_edges());
    CHECK(dof.n1 == m.n_vertices());
    CHECK(dof.n2 == 2 * dof.n2_scalar);
}

TEST_CASE("refinement halves the max diameter") {
    const Mesh2D coarse = build_rect_mesh(1.0, 2.0, 4, 8);
    const Mesh2D fine = build_rect_mesh(1.0, 2.0, 8, 16);
    CHECK(fine.max_diameter() == doctest::Approx(0.5 * coarse.max_diameter()).epsilon(1e-14));
}

TEST_CASE("invalid arguments are rejected") {
    CHECK_THROWS_AS(build_rect_mesh(0.0, 1.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_rect_mesh(1.0, -1.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_rect_mesh(1.0, 1.0, 0, 2), std::invalid_argument);
}

TEST_CASE("all-noslip masks every boundary node in both components") {
    const Mesh2D m = build_rect_mesh(1.0, 1.0, 2, 2);
    const DofMap dof = build_dofmap(m, BoundaryConditions::all_noslip());
    const int nv = m.n_vertices();
    for (int v = 0; v < nv; ++v) {
        if (!m.vertex_walls[v]) continue;
        CHECK(dof.constrained(dof.x_dof(v)));
        CHECK(dof.constrained(dof.y_dof(v)));
    }
    for (int e = 0; e < m.n_edges(); ++e) {
        if (!m.edge_walls[e]) continue;
        CHECK(dof.constrained(dof.x_dof(nv + e)));
        CHECK(dof.constrained(dof.y_dof(nv + e)));
    }
    // no interior dof is ever masked
    for (int v = 0; v < nv; ++v) {
        if (m.vertex_walls[v]) continue;
        CHECK(!dof.constrained(dof.x_dof(v)));
        CHECK(!dof.constrained(dof.y_dof(v)));
    }
}

TEST_CASE("benchmark bc: side walls constrain only the normal component") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 4, 8);
    const DofMap dof = build_dofmap(m, BoundaryConditions::benchmark());
    const int nv = m.n_vertices();
    for (int v = 0; v < nv; ++v) {
        const auto tag = m.vertex_walls[v];
        if (!tag) continue;
        const bool on_side = tag & (wall_bit(Wall::Left) | wall_bit(Wall::Right));
        const bool on_cap = tag & (wall_bit(Wall::Bottom) | wall_bit(Wall::Top));
        if (on_side && !on_cap) {
            CHECK(dof.constrained(dof.x_dof(v)));
            CHECK(!dof.constrained(dof.y_dof(v)));
        }
        if (on_cap) {  // no-slip wall wins at the corners
            CHECK(dof.constrained(dof.x_dof(v)));
            CHECK(dof.constrained(dof.y_dof(v)));
        }
    }
}

// Constraint census on a 4x8 mesh with the benchmark conditions: both
// components on the caps, one component on the strictly-interior side nodes.
TEST_CASE("benchmark bc: constrained dof count by enumeration") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 4, 8);
    const DofMap dof = build_dofmap(m, BoundaryConditions::benchmark());
    const int nv = m.n_vertices();

    int cap_nodes = 0, side_only_nodes = 0;
    auto classify = [&](std::uint8_t tag) {
        if (!tag) return;
        if (tag & (wall_bit(Wall::Bottom) | wall_bit(Wall::Top))) ++cap_nodes;
        else ++side_only_nodes;
    };
    for (int v = 0; v < nv; ++v) classify(m.vertex_walls[v]);
    for (int e = 0; e < m.n_edges(); ++e) classify(m.edge_walls[e]);

    int constrained = 0;
    for (int i = 0; i < dof.n2; ++i) constrained += dof.constrained(i) ? 1 : 0;
    CHECK(constrained == 2 * cap_nodes + side_only_nodes);
}

TEST_CASE("dirichlet projector is idempotent") {
    const Mesh2D m = build_rect_mesh(1.0, 2.0, 4, 8);
    const DofMap dof = build_dofmap(m, BoundaryConditions::benchmark());
    std::vector<double> v(dof.n2);
    for (int i = 0; i < dof.n2; ++i) v[i] = std::sin(0.37 * i) + 1.0;
    std::vector<double> once = v;
    dof.project_velocity(once);
    std::vector<double> twice = once;
    dof.project_velocity(twice);
    CHECK(once == twice);
}
