#include <pdeabcd/mesh.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <pdeabcd/errors.hpp>

namespace pdeabcd {

Mesh::Mesh(int level, std::vector<Point2> nodes, std::vector<Triangle> triangles,
           std::vector<bool> boundary_mask)
    : level_(level),
      nodes_(std::move(nodes)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary_mask))
{
    interior_index_.assign(nodes_.size(), -1);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!boundary_[i]) {
            interior_index_[i] = static_cast<int>(interior_nodes_.size());
            interior_nodes_.push_back(static_cast<int>(i));
        }
    }
}

double Mesh::h() const noexcept { return std::sqrt(2.0) * cell_size(); }

double Mesh::signed_area(const Triangle& t) const noexcept
{
    const auto& a = nodes_[t[0]];
    const auto& b = nodes_[t[1]];
    const auto& c = nodes_[t[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

Mesh build_unit_square_mesh(int level)
{
    if (level < 0 || level > kMaxMeshLevel) {
        throw SizeError("mesh level " + std::to_string(level) + " outside [0, "
                        + std::to_string(kMaxMeshLevel) + "]");
    }
    const int n = 1 << level;
    const double step = 1.0 / n;
    const std::size_t side = static_cast<std::size_t>(n) + 1;

    std::vector<Point2> nodes;
    std::vector<bool> boundary;
    nodes.reserve(side * side);
    boundary.reserve(side * side);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            nodes.push_back({i * step, j * step});
            boundary.push_back(i == 0 || j == 0 || i == n || j == n);
        }
    }

    std::vector<Triangle> triangles;
    triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = j * (n + 1) + i;
            const int b = a + 1;
            const int c = a + n + 1;
            const int d = c + 1;
            triangles.push_back({a, b, d});
            triangles.push_back({a, d, c});
        }
    }
    return Mesh(level, std::move(nodes), std::move(triangles), std::move(boundary));
}

QuasiUniformity quasi_uniformity_report(const Mesh& mesh)
{
    const auto nodes = mesh.nodes();
    auto dist = [&](int p, int q) {
        return std::hypot(nodes[p][0] - nodes[q][0], nodes[p][1] - nodes[q][1]);
    };

    double h = 0.0;
    std::vector<double> diam;
    std::vector<double> inner;
    diam.reserve(mesh.num_triangles());
    inner.reserve(mesh.num_triangles());
    for (const auto& t : mesh.triangles()) {
        const double e0 = dist(t[1], t[2]);
        const double e1 = dist(t[2], t[0]);
        const double e2 = dist(t[0], t[1]);
        const double rho = std::max({e0, e1, e2});
        const double sigma = 4.0 * std::abs(mesh.signed_area(t)) / (e0 + e1 + e2);
        diam.push_back(rho);
        inner.push_back(sigma);
        h = std::max(h, rho);
    }

    QuasiUniformity out{0.0, 0.0};
    for (std::size_t k = 0; k < diam.size(); ++k) {
        out.kappa = std::max(out.kappa, diam[k] / inner[k]);
        out.tau_bar = std::max(out.tau_bar, h / diam[k]);
    }
    return out;
}

namespace {

void check_nested(const Mesh& coarse, const Mesh& fine)
{
    auto standard = [](const Mesh& m) {
        const std::size_t side = static_cast<std::size_t>(m.cells_per_side()) + 1;
        if (m.num_nodes() != side * side || m.num_triangles() != 2 * (side - 1) * (side - 1)) {
            return false;
        }
        const auto last = m.nodes().back();
        return m.nodes().front() == Point2{0.0, 0.0} && last == Point2{1.0, 1.0};
    };
    if (fine.level() < coarse.level()) {
        throw DomainError("prolongation requires fine.level >= coarse.level");
    }
    if (!standard(coarse) || !standard(fine)) {
        throw DomainError("prolongation requires nested unit-square meshes");
    }
}

} // namespace

Vector prolongate_nodal(const Mesh& coarse, const Mesh& fine, const Vector& values)
{
    check_nested(coarse, fine);
    if (static_cast<std::size_t>(values.size()) != coarse.num_nodes()) {
        throw DomainError("prolongation input does not match coarse node count");
    }

    const int nc = coarse.cells_per_side();
    const int nf = fine.cells_per_side();
    const int scale = nf / nc;

    Vector out(static_cast<Eigen::Index>(fine.num_nodes()));
    for (int jf = 0; jf <= nf; ++jf) {
        for (int if_ = 0; if_ <= nf; ++if_) {
            const int i = std::min(if_ / scale, nc - 1);
            const int j = std::min(jf / scale, nc - 1);
            // Local coordinates in [0, 1] within coarse cell (i, j).
            const double xi = static_cast<double>(if_ - i * scale) / scale;
            const double eta = static_cast<double>(jf - j * scale) / scale;

            const double va = values[coarse.node_id(i, j)];
            const double vb = values[coarse.node_id(i + 1, j)];
            const double vc = values[coarse.node_id(i, j + 1)];
            const double vd = values[coarse.node_id(i + 1, j + 1)];

            double v;
            if (xi >= eta) {
                v = (1.0 - xi) * va + (xi - eta) * vb + eta * vd;
            } else {
                v = (1.0 - eta) * va + xi * vd + (eta - xi) * vc;
            }
            out[fine.node_id(if_, jf)] = v;
        }
    }
    return out;
}

Vector expand_interior(const Mesh& mesh, const Vector& interior_values)
{
    if (static_cast<std::size_t>(interior_values.size()) != mesh.num_interior()) {
        throw DomainError("interior vector size mismatch");
    }
    Vector full = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
    const auto ids = mesh.interior_nodes();
    for (std::size_t k = 0; k < ids.size(); ++k) {
        full[ids[k]] = interior_values[static_cast<Eigen::Index>(k)];
    }
    return full;
}

Vector restrict_interior(const Mesh& mesh, const Vector& full_values)
{
    if (static_cast<std::size_t>(full_values.size()) != mesh.num_nodes()) {
        throw DomainError("full vector size mismatch");
    }
    const auto ids = mesh.interior_nodes();
    Vector out(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = full_values[ids[k]];
    }
    return out;
}

Vector prolongate_interior(const Mesh& coarse, const Mesh& fine, const Vector& values)
{
    return restrict_interior(fine, prolongate_nodal(coarse, fine, expand_interior(coarse, values)));
}

} // namespace pdeabcd
