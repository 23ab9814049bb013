#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chns/driver.hpp"
#include "chns/mesh.hpp"
#include "chns/model.hpp"
#include "chns/sparse.hpp"

namespace chns {

// Matrix Market ---------------------------------------------------------------

/// Coordinate text format, 1-indexed, 17 significant digits (round-trips
/// doubles exactly). Entries appear in row-major CSR order so output is
/// deterministic byte for byte.
void write_matrix_market(const SparseMat& m, const std::string& path);
SparseMat read_matrix_market(const std::string& path);

/// Dense vectors in matrix array format (n x 1).
void write_vector_market(std::span<const double> v, const std::string& path);
std::vector<double> read_vector_market(const std::string& path);

// Field snapshots --------------------------------------------------------------

struct FieldSnapshot {
    double time = 0.0;
    const Mesh2D* mesh = nullptr;
    const DofMap* dof = nullptr;
    const State* state = nullptr;
};

/// Legacy ASCII VTK unstructured grid; the quadratic velocity is downsampled
/// to vertex values for visualization.
void write_vtk(const FieldSnapshot& snap, const std::string& path);

// Stats -------------------------------------------------------------------------

void write_csv(const RunStats& stats, const std::string& path);

// Config -------------------------------------------------------------------------

/// Plain key=value configuration; '#' starts a comment. Unknown keys are
/// rejected with the offending line.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");

// Newton-system dumps -------------------------------------------------------------

/// Writes every block of a Newton system plus the right-hand side and a meta
/// file to a directory, in Matrix Market text.
void write_system_dump(const std::string& dir, const NewtonSystem& sys,
                       std::span<const double> rhs);

/// A Newton system reconstructed from a dump; owns its operator storage.
struct LoadedSystem {
    std::unique_ptr<AssemblyOutputs> ops;
    NewtonSystem sys;
    std::vector<double> rhs;

    LoadedSystem() = default;
    LoadedSystem(LoadedSystem&&) = default;
    LoadedSystem& operator=(LoadedSystem&&) = default;
};

LoadedSystem read_system_dump(const std::string& dir);

}  // namespace chns
