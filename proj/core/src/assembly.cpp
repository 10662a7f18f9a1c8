#include <pdeabcd/assembly.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include <pdeabcd/errors.hpp>

namespace pdeabcd {

namespace {

// Barycentric coordinates of the three-point rule, exact for quadratics.
constexpr std::array<std::array<double, 3>, 3> kQuadBary{{
    {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
    {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
    {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
}};

struct Geometry {
    double area;
    Eigen::Matrix<double, 2, 3> grads;  // column a = grad phi_a
};

Geometry geometry(const Point2& a, const Point2& b, const Point2& c)
{
    Eigen::Matrix2d jac;
    jac << b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1];
    const double det = jac.determinant();
    Eigen::Matrix<double, 2, 3> ref;
    ref << -1.0, 1.0, 0.0, -1.0, 0.0, 1.0;
    return {0.5 * std::abs(det), jac.inverse().transpose() * ref};
}

Point2 at(const Point2& a, const Point2& b, const Point2& c, const std::array<double, 3>& bary)
{
    return {bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0], bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1]};
}

void check_coefficients(const EllipticCoefficients& coeffs, const Point2& x)
{
    if (coeffs.diffusion) {
        const auto [a11, a12, a22] = coeffs.diffusion(x);
        const double mean = 0.5 * (a11 + a22);
        const double rad = std::hypot(0.5 * (a11 - a22), a12);
        if (!(mean - rad >= coeffs.theta)) {
            throw DomainError("diffusion coefficient is not uniformly elliptic");
        }
    }
    if (coeffs.reaction && !(coeffs.reaction(x) >= 0.0)) {
        throw DomainError("reaction coefficient must be nonnegative");
    }
}

} // namespace

ElementMatrix element_stiffness(const Point2& a, const Point2& b, const Point2& c, const EllipticCoefficients& coeffs)
{
    const Geometry g = geometry(a, b, c);
    ElementMatrix ke = ElementMatrix::Zero();

    if (!coeffs.diffusion) {
        for (int p = 0; p < 3; ++p) {
            for (int q = p; q < 3; ++q) {
                ke(p, q) = g.area * g.grads.col(p).dot(g.grads.col(q));
            }
        }
    }
    const bool quadrature = coeffs.diffusion || coeffs.reaction;
    if (quadrature) {
        for (const auto& bary : kQuadBary) {
            const Point2 x = at(a, b, c, bary);
            check_coefficients(coeffs, x);
            const double w = g.area / 3.0;
            Eigen::Matrix2d diff = Eigen::Matrix2d::Identity();
            if (coeffs.diffusion) {
                const auto [a11, a12, a22] = coeffs.diffusion(x);
                diff << a11, a12, a12, a22;
            }
            const double c0 = coeffs.reaction ? coeffs.reaction(x) : 0.0;
            for (int p = 0; p < 3; ++p) {
                for (int q = p; q < 3; ++q) {
                    double v = c0 * bary[p] * bary[q];
                    if (coeffs.diffusion) v += g.grads.col(p).dot(diff * g.grads.col(q));
                    ke(p, q) += w * v;
                }
            }
        }
    }
    // Upper triangle computed; mirror for bitwise symmetry.
    for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < p; ++q) ke(p, q) = ke(q, p);
    }
    return ke;
}

ElementMatrix element_mass(const Point2& a, const Point2& b, const Point2& c)
{
    const double area = geometry(a, b, c).area;
    ElementMatrix me = ElementMatrix::Constant(area / 12.0);
    me.diagonal().setConstant(area / 6.0);
    return me;
}

FemOperators::FemOperators(std::shared_ptr<const Mesh> mesh, SparseMatrix stiffness, SparseMatrix mass, Vector lumped,
                           SparseMatrix mass_full, SparseMatrix laplacian_full, Vector lumped_full)
    : mesh_(std::move(mesh)),
      stiffness_(std::move(stiffness)),
      mass_(std::move(mass)),
      lumped_(std::move(lumped)),
      mass_full_(std::move(mass_full)),
      laplacian_full_(std::move(laplacian_full)),
      lumped_full_(std::move(lumped_full))
{
    if (stiffness_.rows() > 0) {
        mass_factor_ = std::make_unique<SpdFactorization>(mass_);
        stiffness_factor_ = std::make_unique<SpdFactorization>(stiffness_);
    }
}

std::shared_ptr<const AugmentedFactorization> FemOperators::augmented(double alpha, const AugmentedOptions& options) const
{
    return augmented_cache_.get(stiffness_, mass_, alpha, options);
}

std::shared_ptr<const FemOperators> assemble(std::shared_ptr<const Mesh> mesh, const EllipticCoefficients& coeffs)
{
    if (!mesh) throw DomainError("assemble: null mesh");
    const auto nodes = mesh->nodes();
    const auto index = mesh->interior_index();
    const auto n_full = static_cast<Eigen::Index>(mesh->num_nodes());
    const auto n_int = static_cast<Eigen::Index>(mesh->num_interior());

    std::vector<Triplet> k_int;
    std::vector<Triplet> m_int;
    std::vector<Triplet> m_full;
    std::vector<Triplet> lap_full;
    const std::size_t per = 9 * mesh->num_triangles();
    k_int.reserve(per);
    m_int.reserve(per);
    m_full.reserve(per);
    lap_full.reserve(per);
    Vector lumped_full = Vector::Zero(n_full);

    const EllipticCoefficients laplacian{};
    for (const auto& t : mesh->triangles()) {
        const auto& a = nodes[t[0]];
        const auto& b = nodes[t[1]];
        const auto& c = nodes[t[2]];
        const ElementMatrix ke = element_stiffness(a, b, c, coeffs);
        const ElementMatrix me = element_mass(a, b, c);
        const ElementMatrix le = coeffs.is_laplacian() ? ke : element_stiffness(a, b, c, laplacian);
        const double third = std::abs(mesh->signed_area(t)) / 3.0;
        for (int p = 0; p < 3; ++p) {
            lumped_full[t[p]] += third;
            for (int q = 0; q < 3; ++q) {
                m_full.emplace_back(t[p], t[q], me(p, q));
                lap_full.emplace_back(t[p], t[q], le(p, q));
                const int ip = index[t[p]];
                const int iq = index[t[q]];
                if (ip >= 0 && iq >= 0) {
                    k_int.emplace_back(ip, iq, ke(p, q));
                    m_int.emplace_back(ip, iq, me(p, q));
                }
            }
        }
    }

    Vector lumped(n_int);
    const auto interior = mesh->interior_nodes();
    for (Eigen::Index k = 0; k < n_int; ++k) lumped[k] = lumped_full[interior[static_cast<std::size_t>(k)]];

    SparseMatrix k_mat = finalize_sparse(n_int, n_int, k_int);
    SparseMatrix m_mat = finalize_sparse(n_int, n_int, m_int);
    SparseMatrix mf = finalize_sparse(n_full, n_full, m_full);
    SparseMatrix lf = finalize_sparse(n_full, n_full, lap_full);
    return std::make_shared<const FemOperators>(std::move(mesh), std::move(k_mat), std::move(m_mat), std::move(lumped),
                                                std::move(mf), std::move(lf), std::move(lumped_full));
}

Vector interpolate_function(const Mesh& mesh, const ScalarField& f)
{
    const auto nodes = mesh.nodes();
    Vector v(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(nodes[i]);
    return v;
}

double l1h_norm(const Vector& lumped, const Vector& u)
{
    if (lumped.size() != u.size()) throw DomainError("l1h_norm: size mismatch");
    return lumped.dot(u.cwiseAbs());
}

double triangle_abs_integral(double area, double v0, double v1, double v2)
{
    std::array<double, 3> v{v0, v1, v2};
    const double integral = area * (v0 + v1 + v2) / 3.0;

    // Integral of the positive part; |f| = 2 f^+ - f.
    const int positive = static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
    double plus = 0.0;
    if (positive == 3) {
        plus = integral;
    } else if (positive == 1 || positive == 2) {
        // Isolated vertex: sole positive (positive == 1) or sole non-positive.
        std::sort(v.begin(), v.end());
        const double lone = positive == 1 ? v[2] : v[0];
        const double o1 = positive == 1 ? v[0] : v[1];
        const double o2 = positive == 1 ? v[1] : v[2];
        const double s1 = lone / (lone - o1);
        const double s2 = lone / (lone - o2);
        // Corner sub-triangle cut off by the zero line.
        const double corner = area * s1 * s2 * lone / 3.0;
        plus = positive == 1 ? corner : integral - corner;
    }
    return 2.0 * plus - integral;
}

double l1_norm_exact(const Mesh& mesh, const Vector& u)
{
    if (static_cast<std::size_t>(u.size()) != mesh.num_nodes()) throw DomainError("l1_norm_exact: size mismatch");
    double total = 0.0;
    for (const auto& t : mesh.triangles()) {
        total += triangle_abs_integral(std::abs(mesh.signed_area(t)), u[t[0]], u[t[1]], u[t[2]]);
    }
    return total;
}

DiscreteNorms norms(const FemOperators& ops, const Vector& z)
{
    const Mesh& mesh = ops.mesh();
    const Vector full = static_cast<std::size_t>(z.size()) == mesh.num_nodes() ? z : expand_interior(mesh, z);
    const double m2 = full.dot(ops.mass_full() * full);
    const double k2 = full.dot(ops.laplacian_full() * full);
    return {std::sqrt(std::max(m2, 0.0)), std::sqrt(std::max(k2 + m2, 0.0))};
}

} // namespace pdeabcd
