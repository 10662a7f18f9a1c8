#pragma once
#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include <pdeabcd/mesh.hpp>
#include <pdeabcd/sparse_linalg.hpp>
#include <pdeabcd/types.hpp>

namespace pdeabcd {

using ScalarField = std::function<double(const Point2&)>;
// Symmetric 2x2 coefficient (a11, a12, a22).
using DiffusionField = std::function<std::array<double, 3>(const Point2&)>;

/// Coefficients of L y = -div(A grad y) + c0 y. Empty fields mean the
/// defaults A = I and c0 = 0.
struct EllipticCoefficients {
    DiffusionField diffusion;
    ScalarField reaction;
    // Required lower bound theta on the smallest eigenvalue of A.
    double theta = 1e-12;

    bool is_laplacian() const noexcept { return !diffusion && !reaction; }
};

using ElementMatrix = Eigen::Matrix3d;

// Exact for constant coefficients; three-point rule otherwise.
ElementMatrix element_stiffness(const Point2& a, const Point2& b, const Point2& c,
                                const EllipticCoefficients& coeffs = {});
ElementMatrix element_mass(const Point2& a, const Point2& b, const Point2& c);

/// Assembled P1 operators for one mesh and one set of coefficients.
///
/// `stiffness()`, `mass()` and `lumped()` live on the interior index set
/// (homogeneous Dirichlet nodes eliminated). The `_full` variants keep every
/// node and back the discrete norms. Immutable; share through shared_ptr.
class FemOperators {
public:
    FemOperators(std::shared_ptr<const Mesh> mesh, SparseMatrix stiffness, SparseMatrix mass, Vector lumped,
                 SparseMatrix mass_full, SparseMatrix laplacian_full, Vector lumped_full);
    FemOperators(const FemOperators&) = delete;
    FemOperators& operator=(const FemOperators&) = delete;

    const Mesh& mesh() const noexcept { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const noexcept { return mesh_; }
    Eigen::Index size() const noexcept { return stiffness_.rows(); }

    const SparseMatrix& stiffness() const noexcept { return stiffness_; }
    const SparseMatrix& mass() const noexcept { return mass_; }
    const Vector& lumped() const noexcept { return lumped_; }

    const SparseMatrix& mass_full() const noexcept { return mass_full_; }
    const SparseMatrix& laplacian_full() const noexcept { return laplacian_full_; }
    const Vector& lumped_full() const noexcept { return lumped_full_; }

    std::span<const int> interior_index_map() const noexcept { return mesh_->interior_index(); }

    const SpdFactorization& mass_factor() const noexcept { return *mass_factor_; }
    const SpdFactorization& stiffness_factor() const noexcept { return *stiffness_factor_; }

    // Cached per (alpha, solver options).
    std::shared_ptr<const AugmentedFactorization> augmented(double alpha, const AugmentedOptions& options = {}) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    SparseMatrix stiffness_;
    SparseMatrix mass_;
    Vector lumped_;
    SparseMatrix mass_full_;
    SparseMatrix laplacian_full_;
    Vector lumped_full_;
    std::unique_ptr<SpdFactorization> mass_factor_;
    std::unique_ptr<SpdFactorization> stiffness_factor_;
    AugmentedCache augmented_cache_;
};

/// Throws DomainError when the coefficients violate uniform ellipticity or
/// c0 >= 0 at a quadrature point.
std::shared_ptr<const FemOperators> assemble(std::shared_ptr<const Mesh> mesh, const EllipticCoefficients& coeffs = {});

/// Nodal values (f(x_i))_i over all mesh nodes.
Vector interpolate_function(const Mesh& mesh, const ScalarField& f);

// sum_i |u_i| W_i
double l1h_norm(const Vector& lumped, const Vector& u);

/// Exact integral of |u_h| for the P1 function with nodal values u (all
/// nodes). Triangles crossed by the zero line are split along it.
double l1_norm_exact(const Mesh& mesh, const Vector& u);

// Same, for one triangle with vertex values v and the given area.
double triangle_abs_integral(double area, double v0, double v1, double v2);

struct DiscreteNorms {
    double l2;  // sqrt(z^T M z)
    double h1;  // sqrt(z^T Kbar z + z^T M z), Kbar the pure Laplacian
};

/// z may hold all nodes or interior nodes only (boundary taken as zero).
DiscreteNorms norms(const FemOperators& ops, const Vector& z);

} // namespace pdeabcd
