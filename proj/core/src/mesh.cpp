#include "chns/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace chns {

double Mesh2D::signed_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2 a = vertices[tri[0]];
    const Vec2 b = vertices[tri[1]];
    const Vec2 c = vertices[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh2D::total_area() const {
    double sum = 0.0;
    for (int t = 0; t < n_triangles(); ++t) sum += signed_area(t);
    return sum;
}

double Mesh2D::max_diameter() const {
    double d = 0.0;
    for (double h : tri_diam) d = std::max(d, h);
    return d;
}

Mesh2D build_rect_mesh(double width, double height, int nx, int ny) {
    if (width <= 0.0 || height <= 0.0)
        throw std::invalid_argument("build_rect_mesh: domain dimensions must be positive");
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_rect_mesh: cell counts must be at least 1");

    Mesh2D m;
    m.width = width;
    m.height = height;
    m.nx = nx;
    m.ny = ny;

    const int npx = nx + 1;
    const int npy = ny + 1;
    m.vertices.reserve(static_cast<std::size_t>(npx) * npy);
    m.vertex_walls.assign(static_cast<std::size_t>(npx) * npy, 0);

    for (int j = 0; j < npy; ++j) {
        for (int i = 0; i < npx; ++i) {
            m.vertices.push_back({width * i / nx, height * j / ny});
            std::uint8_t tag = 0;
            if (j == 0) tag |= wall_bit(Wall::Bottom);
            if (j == ny) tag |= wall_bit(Wall::Top);
            if (i == 0) tag |= wall_bit(Wall::Left);
            if (i == nx) tag |= wall_bit(Wall::Right);
            m.vertex_walls[static_cast<std::size_t>(j) * npx + i] = tag;
        }
    }

    auto vid = [npx](int i, int j) { return j * npx + i; };

    // right-diagonal split: (v00 v10 v11) and (v00 v11 v01), both CCW
    m.triangles.reserve(static_cast<std::size_t>(2) * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = vid(i, j);
            const int v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1);
            const int v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }

    // unique edges keyed by sorted endpoints
    std::map<std::pair<int, int>, int> edge_id;
    m.tri_edges.resize(m.triangles.size());
    for (int t = 0; t < m.n_triangles(); ++t) {
        for (int l = 0; l < 3; ++l) {
            int a = m.triangles[t][l];
            int b = m.triangles[t][(l + 1) % 3];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = edge_id.try_emplace({a, b}, static_cast<int>(m.edges.size()));
            if (inserted) m.edges.push_back({a, b});
            m.tri_edges[t][l] = it->second;
        }
    }

    m.edge_walls.assign(m.edges.size(), 0);
    for (std::size_t e = 0; e < m.edges.size(); ++e) {
        // an edge lies on a wall iff both endpoints do
        m.edge_walls[e] = m.vertex_walls[m.edges[e].a] & m.vertex_walls[m.edges[e].b];
    }

    m.tri_diam.resize(m.triangles.size());
    for (int t = 0; t < m.n_triangles(); ++t) {
        double d = 0.0;
        for (int l = 0; l < 3; ++l) {
            const Vec2 a = m.vertices[m.triangles[t][l]];
            const Vec2 b = m.vertices[m.triangles[t][(l + 1) % 3]];
            d = std::max(d, std::hypot(b.x - a.x, b.y - a.y));
        }
        m.tri_diam[t] = d;
    }
    return m;
}

void DofMap::project_velocity(std::vector<double>& v) const {
    for (int i = 0; i < n2; ++i)
        if (velocity_dirichlet[i]) v[i] = 0.0;
}

namespace {

WallBc bc_of(const BoundaryConditions& bc, Wall w) {
    switch (w) {
        case Wall::Bottom: return bc.bottom;
        case Wall::Top: return bc.top;
        case Wall::Left: return bc.left;
        case Wall::Right: return bc.right;
    }
    return WallBc::NoSlip;
}

// Accumulates the constraint for one P2 node given its wall tags. On a no-slip
// wall both components are fixed; on an axis-aligned free-slip wall only the
// normal component is. A node shared by several walls gets the union.
void mark_node(const BoundaryConditions& bc, std::uint8_t tags, int node, DofMap& dof) {
    for (Wall w : {Wall::Bottom, Wall::Right, Wall::Top, Wall::Left}) {
        if (!(tags & wall_bit(w))) continue;
        const bool noslip = bc_of(bc, w) == WallBc::NoSlip;
        const bool horizontal = (w == Wall::Bottom || w == Wall::Top);
        if (noslip) {
            dof.velocity_dirichlet[dof.x_dof(node)] = 1;
            dof.velocity_dirichlet[dof.y_dof(node)] = 1;
        } else if (horizontal) {
            dof.velocity_dirichlet[dof.y_dof(node)] = 1;  // v . n = v_y
        } else {
            dof.velocity_dirichlet[dof.x_dof(node)] = 1;  // v . n = v_x
        }
    }
}

}  // namespace

DofMap build_dofmap(const Mesh2D& mesh, const BoundaryConditions& bc) {
    DofMap dof;
    dof.n1 = mesh.n_vertices();
    dof.n2_scalar = mesh.n_vertices() + mesh.n_edges();
    dof.n2 = 2 * dof.n2_scalar;
    dof.velocity_dirichlet.assign(dof.n2, 0);

    for (int v = 0; v < mesh.n_vertices(); ++v)
        if (mesh.vertex_walls[v]) mark_node(bc, mesh.vertex_walls[v], v, dof);
    for (int e = 0; e < mesh.n_edges(); ++e)
        if (mesh.edge_walls[e]) mark_node(bc, mesh.edge_walls[e], mesh.n_vertices() + e, dof);

    return dof;
}

std::vector<Vec2> p2_node_coords(const Mesh2D& mesh) {
    std::vector<Vec2> coords;
    coords.reserve(mesh.n_vertices() + mesh.n_edges());
    coords.insert(coords.end(), mesh.vertices.begin(), mesh.vertices.end());
    for (int e = 0; e < mesh.n_edges(); ++e) coords.push_back(mesh.edge_midpoint(e));
    return coords;
}

}  // namespace chns
