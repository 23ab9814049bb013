#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace chns {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Walls of the rectangular domain, used as bitmask positions for boundary tags.
enum class Wall : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

inline int wall_bit(Wall w) { return 1 << static_cast<int>(w); }

enum class WallBc { NoSlip, FreeSlip };

struct BoundaryConditions {
    WallBc bottom = WallBc::NoSlip;
    WallBc top = WallBc::NoSlip;
    WallBc left = WallBc::NoSlip;
    WallBc right = WallBc::NoSlip;

    static BoundaryConditions all_noslip() { return {}; }

    /// Rising-bubble setup: no-slip on top/bottom, free-slip on the side walls.
    static BoundaryConditions benchmark() {
        BoundaryConditions bc;
        bc.left = WallBc::FreeSlip;
        bc.right = WallBc::FreeSlip;
        return bc;
    }
};

/// Structured triangulation of an axis-aligned rectangle. Vertices are numbered
/// row-major, each grid cell is split along its right diagonal, and every edge
/// carries a midpoint used as the quadratic node.
struct Mesh2D {
    double width = 0.0;
    double height = 0.0;
    int nx = 0;
    int ny = 0;

    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;  // positively oriented vertex triples

    struct Edge {
        int a = -1;  // endpoint vertex indices, a < b
        int b = -1;
    };
    std::vector<Edge> edges;
    // edge opposite nothing: tri_edges[t][l] is the global edge between local
    // vertices l and (l+1)%3 of triangle t
    std::vector<std::array<int, 3>> tri_edges;
    std::vector<double> tri_diam;

    // bitmask over Wall for boundary vertices / edges (0 for interior)
    std::vector<std::uint8_t> vertex_walls;
    std::vector<std::uint8_t> edge_walls;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    Vec2 edge_midpoint(int e) const {
        return 0.5 * (vertices[edges[e].a] + vertices[edges[e].b]);
    }

    double signed_area(int t) const;
    double total_area() const;
    double max_diameter() const;
};

/// Builds the structured triangulation. Throws std::invalid_argument for
/// non-positive dimensions or cell counts.
Mesh2D build_rect_mesh(double width, double height, int nx, int ny);

/// Degree-of-freedom layout. P1 scalars live on vertices; P2 scalars on
/// vertices followed by edge midpoints; the velocity is component-blocked,
/// x-components first, so N2 = 2 * (vertices + edges).
struct DofMap {
    int n1 = 0;         // P1 scalar dof count
    int n2_scalar = 0;  // P2 scalar dof count
    int n2 = 0;         // vector-valued P2 dof count

    // 1 where the velocity dof is constrained to zero (size n2)
    std::vector<std::uint8_t> velocity_dirichlet;
    bool pressure_mean_constraint = true;

    int x_dof(int node) const { return node; }
    int y_dof(int node) const { return n2_scalar + node; }

    bool constrained(int dof) const { return velocity_dirichlet[dof] != 0; }

    /// Zeroes constrained entries in place (the Dirichlet projector).
    void project_velocity(std::vector<double>& v) const;
};

DofMap build_dofmap(const Mesh2D& mesh, const BoundaryConditions& bc);

/// Coordinates of P2 scalar nodes: vertices first, then edge midpoints.
std::vector<Vec2> p2_node_coords(const Mesh2D& mesh);

}  // namespace chns
