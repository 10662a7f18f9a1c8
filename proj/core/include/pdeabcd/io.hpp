#pragma once
#include <filesystem>
#include <map>
#include <string>

#include <pdeabcd/analysis.hpp>
#include <pdeabcd/dual_solver.hpp>
#include <pdeabcd/mesh.hpp>

namespace pdeabcd {

// Shortest round-trip decimal form; the same double always prints the same way.
std::string format_double(double v);

/// {"level", "nodes": [[x, y], ...], "triangles": [[a, b, c], ...], "boundary": [0/1, ...]}
std::string mesh_json(const Mesh& mesh);

std::string matrix_market(const SparseMatrix& a);
std::string vector_text(const Vector& v);

/// k,phi,kkt,gap,time_s. time_s is written as 0 unless `timing` is set.
std::string record_csv(const RunRecord& record, bool timing);

/// level,h,n_interior,iters_to_eps,first_hit,tau_h,lam_max_Sh,phi_star,phi_star_source,saturated,seconds
std::string report_csv(const MeshIndependenceReport& report, bool timing);
std::string report_json(const MeshIndependenceReport& report, bool timing);

std::string spectral_json(const SpectralReport& report);

struct GoldenEntry {
    double J_star = 0.0;
    int iterations = 0;
    double tol = 0.0;
};

// Keys look like "sine@2".
using GoldenTable = std::map<std::string, GoldenEntry>;

std::string golden_json(const GoldenTable& table);
GoldenTable read_golden(const std::filesystem::path& path);

/// Creates parent directories; throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace pdeabcd
