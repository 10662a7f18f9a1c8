#pragma once
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <pdeabcd/types.hpp>

namespace pdeabcd {

using Point2 = std::array<double, 2>;
using Triangle = std::array<int, 3>;

inline constexpr int kMaxMeshLevel = 12;

/// Uniform right-triangle triangulation of the unit square.
///
/// Nodes are ordered lexicographically by (x2, x1): node (i, j) at
/// (i / 2^level, j / 2^level) has index j * (2^level + 1) + i. Every cell is
/// split along its lower-left to upper-right diagonal and triangles are
/// stored counterclockwise. Instances are immutable once built.
class Mesh {
public:
    Mesh(int level, std::vector<Point2> nodes, std::vector<Triangle> triangles,
         std::vector<bool> boundary_mask);

    int level() const noexcept { return level_; }
    // Number of cells along one side, 2^level.
    int cells_per_side() const noexcept { return 1 << level_; }
    double cell_size() const noexcept { return 1.0 / cells_per_side(); }
    // Largest triangle diameter, sqrt(2) * cell_size.
    double h() const noexcept;

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }
    std::size_t num_interior() const noexcept { return interior_nodes_.size(); }

    std::span<const Point2> nodes() const noexcept { return nodes_; }
    std::span<const Triangle> triangles() const noexcept { return triangles_; }
    const std::vector<bool>& boundary_mask() const noexcept { return boundary_; }

    // Interior node ids in increasing order.
    std::span<const int> interior_nodes() const noexcept { return interior_nodes_; }
    // node id -> interior equation id, or -1 for boundary nodes.
    std::span<const int> interior_index() const noexcept { return interior_index_; }

    int node_id(int i, int j) const noexcept { return j * (cells_per_side() + 1) + i; }

    double signed_area(const Triangle& t) const noexcept;

private:
    int level_;
    std::vector<Point2> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<bool> boundary_;
    std::vector<int> interior_nodes_;
    std::vector<int> interior_index_;
};

/// Throws SizeError for level > kMaxMeshLevel or level < 0.
Mesh build_unit_square_mesh(int level);

struct QuasiUniformity {
    double kappa;    // max rho_T / sigma_T
    double tau_bar;  // max h / rho_T
};

// rho_T is the triangle diameter, sigma_T the inscribed-circle diameter.
QuasiUniformity quasi_uniformity_report(const Mesh& mesh);

/// Evaluates the coarse P1 interpolant at every fine node. Exact for the
/// nested family produced by build_unit_square_mesh; anything else is a
/// DomainError.
Vector prolongate_nodal(const Mesh& coarse, const Mesh& fine, const Vector& values);

// Interior-vector helpers. Boundary entries are zero after expansion.
Vector expand_interior(const Mesh& mesh, const Vector& interior_values);
Vector restrict_interior(const Mesh& mesh, const Vector& full_values);

/// Prolongation of interior-node vectors (homogeneous boundary values).
Vector prolongate_interior(const Mesh& coarse, const Mesh& fine, const Vector& values);

} // namespace pdeabcd
