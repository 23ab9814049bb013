#include "chns/iohub.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "chns/assembly.hpp"

namespace chns {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Matrix Market
// ---------------------------------------------------------------------------

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error("matrix market parse error (" + path + ":" +
                             std::to_string(line) + "): " + what);
}

}  // namespace

void write_matrix_market(const SparseMat& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
    const auto offs = m.row_offsets();
    const auto cols = m.col_indices();
    const auto vals = m.values();
    for (int r = 0; r < m.rows(); ++r)
        for (int k = offs[r]; k < offs[r + 1]; ++k)
            out << (r + 1) << ' ' << (cols[k] + 1) << ' ' << format_value(vals[k]) << '\n';
}

SparseMat read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix_market: cannot open " + path);
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
    ++lineno;
    if (line.rfind("%%MatrixMarket", 0) != 0) parse_fail(path, lineno, "bad banner");
    if (line.find("coordinate") == std::string::npos)
        parse_fail(path, lineno, "expected coordinate format");

    int rows = -1, cols = -1;
    long nnz = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        std::istringstream ss(line);
        if (!(ss >> rows >> cols >> nnz)) parse_fail(path, lineno, "bad size line");
        break;
    }
    if (rows < 0 || cols < 0 || nnz < 0) parse_fail(path, lineno, "missing size line");

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
        if (!std::getline(in, line)) parse_fail(path, lineno + 1, "unexpected end of file");
        ++lineno;
        std::istringstream ss(line);
        int r, c;
        double v;
        if (!(ss >> r >> c >> v)) parse_fail(path, lineno, "bad entry");
        if (r < 1 || r > rows || c < 1 || c > cols)
            parse_fail(path, lineno, "index out of range");
        trip.push_back({r - 1, c - 1, v});
    }
    return SparseMat::from_triplets(rows, cols, std::move(trip));
}

void write_vector_market(std::span<const double> v, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vector_market: cannot open " + path);
    out << "%%MatrixMarket matrix array real general\n";
    out << v.size() << " 1\n";
    for (double x : v) out << format_value(x) << '\n';
}

std::vector<double> read_vector_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_vector_market: cannot open " + path);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
    ++lineno;
    if (line.rfind("%%MatrixMarket", 0) != 0) parse_fail(path, lineno, "bad banner");
    if (line.find("array") == std::string::npos)
        parse_fail(path, lineno, "expected array format");
    long n = -1;
    int one = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        std::istringstream ss(line);
        if (!(ss >> n >> one)) parse_fail(path, lineno, "bad size line");
        break;
    }
    if (n < 0 || one != 1) parse_fail(path, lineno, "expected an n x 1 array");
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) {
        if (!std::getline(in, line)) parse_fail(path, lineno + 1, "unexpected end of file");
        ++lineno;
        v.push_back(std::stod(line));
    }
    return v;
}

// ---------------------------------------------------------------------------
// VTK
// ---------------------------------------------------------------------------

void write_vtk(const FieldSnapshot& snap, const std::string& path) {
    const Mesh2D& mesh = *snap.mesh;
    const DofMap& dof = *snap.dof;
    const State& st = *snap.state;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vtk: cannot open " + path);
    out.precision(12);

    const int nv = mesh.n_vertices();
    out << "# vtk DataFile Version 3.0\n";
    out << "chns fields t=" << snap.time << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (const Vec2& p : mesh.vertices) out << p.x << ' ' << p.y << " 0\n";

    const int nt = mesh.n_triangles();
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << nt << '\n';
    for (int t = 0; t < nt; ++t) out << "5\n";

    out << "POINT_DATA " << nv << '\n';
    auto scalars = [&](const char* name, const std::vector<double>& f) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < nv; ++i) out << f[i] << '\n';
    };
    scalars("pressure", st.p);
    scalars("phi", st.phi);
    scalars("mu", st.mu);
    out << "VECTORS velocity double\n";
    for (int i = 0; i < nv; ++i)
        out << st.v[i] << ' ' << st.v[dof.n2_scalar + i] << " 0\n";
}

// ---------------------------------------------------------------------------
// Stats CSV
// ---------------------------------------------------------------------------

void write_csv(const RunStats& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out.precision(17);
    out << "step,time,newton_iters,mean_fgmres,energy,dissipation,cfl_max\n";
    for (const auto& r : stats.rows)
        out << r.step << ',' << r.time << ',' << r.newton_iters << ',' << r.mean_fgmres << ','
            << r.energy << ',' << r.dissipation << ',' << r.cfl_max << '\n';
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::string trimmed(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

WallBc parse_wall_bc(const std::string& v, const std::string& origin, int lineno) {
    if (v == "noslip") return WallBc::NoSlip;
    if (v == "freeslip") return WallBc::FreeSlip;
    throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                             ": unknown wall condition '" + v + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        auto num = [&]() { return std::stod(value); };
        auto integer = [&]() { return std::stoi(value); };

        if (key == "nx") cfg.nx = integer();
        else if (key == "ny") cfg.ny = integer();
        else if (key == "width") cfg.width = num();
        else if (key == "height") cfg.height = num();
        else if (key == "steps") cfg.steps = integer();
        else if (key == "rho1") cfg.phys.rho1 = num();
        else if (key == "rho2") cfg.phys.rho2 = num();
        else if (key == "eta1") cfg.phys.eta1 = num();
        else if (key == "eta2") cfg.phys.eta2 = num();
        else if (key == "sigma") cfg.phys.sigma = num();
        else if (key == "eps") cfg.phys.eps = num();
        else if (key == "tau") cfg.phys.tau = num();
        else if (key == "b" || key == "mobility") cfg.phys.mobility = num();
        else if (key == "s" || key == "penalty") cfg.phys.penalty = num();
        else if (key == "gx") cfg.phys.gravity.x = num();
        else if (key == "gy") cfg.phys.gravity.y = num();
        else if (key == "bubble_x") cfg.bubble_center.x = num();
        else if (key == "bubble_y") cfg.bubble_center.y = num();
        else if (key == "bubble_radius") cfg.bubble_radius = num();
        else if (key == "bc_bottom") cfg.bc.bottom = parse_wall_bc(value, origin, lineno);
        else if (key == "bc_top") cfg.bc.top = parse_wall_bc(value, origin, lineno);
        else if (key == "bc_left") cfg.bc.left = parse_wall_bc(value, origin, lineno);
        else if (key == "bc_right") cfg.bc.right = parse_wall_bc(value, origin, lineno);
        else if (key == "solver") {
            if (value == "direct") cfg.solver.kind = SolverConfig::Kind::Direct;
            else if (value == "block-triangular")
                cfg.solver.kind = SolverConfig::Kind::BlockTriangular;
            else if (value == "baseline") {
                cfg.solver = SolverConfig::baseline();
            } else
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": unknown solver '" + value + "'");
        }
        else if (key == "newton_tol") cfg.solver.newton.tol_abs = num();
        else if (key == "newton_tol_rel") cfg.solver.newton.tol_rel = num();
        else if (key == "newton_maxit") cfg.solver.newton.maxit = integer();
        else if (key == "outer_tol_rel") cfg.solver.outer.tol_rel = num();
        else if (key == "outer_tol_abs") cfg.solver.outer.tol_abs = num();
        else if (key == "outer_restart") cfg.solver.outer.restart = integer();
        else if (key == "outer_maxit") cfg.solver.outer.maxit = integer();
        else if (key == "inner_tol") cfg.solver.precond.inner.tol_rel = num();
        else if (key == "inner_maxit") {
            cfg.solver.precond.inner.maxit = integer();
            cfg.solver.precond.inner.restart = cfg.solver.precond.inner.maxit;
        }
        else if (key == "s1_tol") cfg.solver.precond.s1.tol = num();
        else if (key == "s2_tol") cfg.solver.precond.s2.tol = num();
        else if (key == "mp_tol") cfg.solver.precond.mp.tol = num();
        else if (key == "m1_tol") cfg.solver.precond.m1.tol = num();
        else if (key == "precond_blocks") {
            if (value == "direct") {
                // default
            } else if (value == "multilevel") {
                const PrecondMode mode = cfg.solver.precond.mode;
                const KrylovConfig inner = cfg.solver.precond.inner;
                cfg.solver.precond = PrecondConfig::paper_defaults();
                cfg.solver.precond.mode = mode;
                cfg.solver.precond.inner = inner;
            } else
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": unknown precond_blocks '" + value + "'");
        }
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "stats_csv") cfg.stats_csv = value;
        else if (key == "vtk_every") cfg.vtk_every = integer();
        else if (key == "dump_systems") cfg.dump_systems = integer();
        else
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": unknown config key '" + key + "'");
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Newton-system dumps
// ---------------------------------------------------------------------------

void write_system_dump(const std::string& dir, const NewtonSystem& sys,
                       std::span<const double> rhs) {
    fs::create_directories(dir);
    const fs::path base(dir);
    {
        std::ofstream meta(base / "meta.txt");
        meta.precision(17);
        meta << "n1 " << sys.n1 << "\n";
        meta << "n2 " << sys.n2 << "\n";
        meta << "tau " << sys.par.tau << "\n";
        meta << "sigma " << sys.par.sigma << "\n";
        meta << "eps " << sys.par.eps << "\n";
        meta << "mobility " << sys.par.mobility << "\n";
        meta << "penalty_s " << sys.par.penalty << "\n";
    }
    write_matrix_market(sys.ops->momentum, (base / "momentum.mtx").string());
    write_matrix_market(sys.ops->cpl.divergence, (base / "divergence.mtx").string());
    write_matrix_market(sys.ops->capillary, (base / "capillary.mtx").string());
    write_matrix_market(sys.ops->cpl.transport, (base / "transport.mtx").string());
    write_matrix_market(sys.ops->mass_p1, (base / "mass_p1.mtx").string());
    write_matrix_market(sys.ops->stiff_p1, (base / "stiff_p1.mtx").string());
    write_matrix_market(sys.penalty, (base / "penalty.mtx").string());
    write_matrix_market(sys.ops->pressure.convection_diffusion,
                        (base / "pressure_cd.mtx").string());
    write_vector_market(rhs, (base / "rhs.mtx").string());
}

LoadedSystem read_system_dump(const std::string& dir) {
    const fs::path base(dir);
    std::map<std::string, double> meta;
    {
        std::ifstream in(base / "meta.txt");
        if (!in) throw std::runtime_error("read_system_dump: missing meta.txt in " + dir);
        std::string key;
        double val;
        while (in >> key >> val) meta[key] = val;
    }
    LoadedSystem loaded;
    loaded.ops = std::make_unique<AssemblyOutputs>();
    AssemblyOutputs& ops = *loaded.ops;
    ops.momentum = read_matrix_market((base / "momentum.mtx").string());
    ops.cpl.divergence = read_matrix_market((base / "divergence.mtx").string());
    ops.capillary = read_matrix_market((base / "capillary.mtx").string());
    ops.cpl.transport = read_matrix_market((base / "transport.mtx").string());
    ops.mass_p1 = read_matrix_market((base / "mass_p1.mtx").string());
    ops.stiff_p1 = read_matrix_market((base / "stiff_p1.mtx").string());
    ops.pressure.convection_diffusion =
        read_matrix_market((base / "pressure_cd.mtx").string());
    ops.pressure.mass = ops.mass_p1;
    ops.pressure.stiffness = ops.stiff_p1;
    loaded.rhs = read_vector_market((base / "rhs.mtx").string());

    NewtonSystem& sys = loaded.sys;
    sys.ops = loaded.ops.get();
    sys.n1 = static_cast<int>(meta.at("n1"));
    sys.n2 = static_cast<int>(meta.at("n2"));
    sys.par.tau = meta.at("tau");
    sys.par.sigma = meta.at("sigma");
    sys.par.eps = meta.at("eps");
    sys.par.mobility = meta.at("mobility");
    sys.par.penalty = meta.at("penalty_s");
    sys.penalty = read_matrix_market((base / "penalty.mtx").string());
    sys.chem_coupling = SparseMat::axpby(sys.par.sigma * sys.par.eps, ops.stiff_p1,
                                         sys.par.sigma / sys.par.eps, sys.penalty);
    sys.phase_mu = ops.stiff_p1.scaled(sys.par.tau * sys.par.mobility);
    sys.divergence_t = ops.cpl.divergence.transposed();
    return loaded;
}

}  // namespace chns
