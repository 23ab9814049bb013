#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "chns/assembly.hpp"
#include "chns/iohub.hpp"
#include "test_helpers.hpp"

using namespace chns;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("matrix market: 2x2 identity round-trips and is 1-indexed") {
    const SparseMat eye = SparseMat::identity(2);
    const std::string path = "unit_iohub_eye.mtx";
    write_matrix_market(eye, path);
    const std::string text = slurp(path);
    CHECK(text == "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 1\n");
    const SparseMat back = read_matrix_market(path);
    CHECK(back.rows() == 2);
    CHECK(back.coeff(0, 0) == 1.0);
    CHECK(back.coeff(1, 1) == 1.0);
    CHECK(back.nnz() == 2);
}

TEST_CASE("matrix market: assembled stiffness round-trips bit-identically") {
    const Mesh2D mesh = build_rect_mesh(1.0, 2.0, 4, 8);
    const SparseMat k = assemble_stiff_p1(mesh);
    const std::string p1 = "unit_iohub_k1.mtx";
    const std::string p2 = "unit_iohub_k2.mtx";
    write_matrix_market(k, p1);
    const SparseMat back = read_matrix_market(p1);
    write_matrix_market(back, p2);
    CHECK(slurp(p1) == slurp(p2));  // byte-for-byte under 17-digit formatting

    REQUIRE(back.nnz() == k.nnz());
    const auto va = k.values();
    const auto vb = back.values();
    for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
}

TEST_CASE("matrix market: malformed input reports the line") {
    const std::string path = "unit_iohub_bad.mtx";
    {
        std::ofstream out(path);
        out << "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5.0\n";
    }
    CHECK_THROWS_WITH_AS(read_matrix_market(path),
                         doctest::Contains("unit_iohub_bad.mtx:3"), std::runtime_error);
}

TEST_CASE("vector market round-trip") {
    const std::vector<double> v{1.5, -2.25, 3.0e-17, 0.0};
    const std::string path = "unit_iohub_vec.mtx";
    write_vector_market(v, path);
    const std::vector<double> back = read_vector_market(path);
    CHECK(back == v);
}

TEST_CASE("stats csv: empty run produces only the header") {
    RunStats stats;
    const std::string path = "unit_iohub_empty.csv";
    write_csv(stats, path);
    CHECK(slurp(path) == "step,time,newton_iters,mean_fgmres,energy,dissipation,cfl_max\n");
}

TEST_CASE("config parsing: values, comments, strict keys") {
    const std::string text =
        "# benchmark-ish setup\n"
        "tau = 2e-3\n"
        "nx=8\n"
        "ny = 16\n"
        "s = 1e6   # penalty\n"
        "solver = direct\n"
        "bc_left = freeslip\n";
    const RunConfig cfg = parse_config_text(text, "inline");
    CHECK(cfg.phys.tau == 0.002);
    CHECK(cfg.nx == 8);
    CHECK(cfg.ny == 16);
    CHECK(cfg.phys.penalty == 1.0e6);
    CHECK(cfg.solver.kind == SolverConfig::Kind::Direct);
    CHECK(cfg.bc.left == WallBc::FreeSlip);

    CHECK_THROWS_WITH_AS(parse_config_text("epsilonn=0.04\n", "inline"),
                         doctest::Contains("unknown config key"), std::runtime_error);
    CHECK_THROWS_AS(parse_config_text("tau\n", "inline"), std::runtime_error);
}

TEST_CASE("vtk snapshot contains the expected sections") {
    auto p = chns::testing::make_coupled_problem(2, 4, 0.5, 42);
    FieldSnapshot snap{0.125, &p->mesh, &p->dof, &p->state};
    const std::string path = "unit_iohub_fields.vtk";
    write_vtk(snap, path);
    const std::string text = slurp(path);
    CHECK(text.find("# vtk DataFile Version 3.0") == 0);
    CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(text.find("POINTS 15 double") != std::string::npos);
    CHECK(text.find("CELLS 16 64") != std::string::npos);
    CHECK(text.find("SCALARS phi double 1") != std::string::npos);
    CHECK(text.find("VECTORS velocity double") != std::string::npos);
}

TEST_CASE("system dumps survive the round trip") {
    auto p = chns::testing::make_coupled_problem(3, 6, 1.2, 50);
    const std::string dir = "unit_iohub_dump";
    write_system_dump(dir, p->sys, p->rhs);
    const LoadedSystem loaded = read_system_dump(dir);

    CHECK(loaded.sys.n1 == p->sys.n1);
    CHECK(loaded.sys.n2 == p->sys.n2);
    REQUIRE(loaded.rhs.size() == p->rhs.size());
    for (std::size_t i = 0; i < p->rhs.size(); ++i) CHECK(loaded.rhs[i] == p->rhs[i]);

    // identical block actions
    const std::vector<double> x = chns::testing::random_vec(p->sys.size(), 9);
    std::vector<double> ya(p->sys.size()), yb(p->sys.size());
    p->sys.multiply(x, ya);
    loaded.sys.multiply(x, yb);
    for (std::size_t i = 0; i < ya.size(); ++i)
        CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-14).scale(1.0 + std::abs(ya[i])));
}
