#include <pdeabcd/sparse_linalg.hpp>

#include <cmath>
#include <random>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <unsupported/Eigen/IterativeSolvers>

#include <pdeabcd/errors.hpp>

namespace pdeabcd {

SparseMatrix finalize_sparse(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& triplets)
{
    SparseMatrix a(rows, cols);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.prune(0.0, 0.0);
    a.makeCompressed();
    return a;
}

double asymmetry(const SparseMatrix& a)
{
    const SparseMatrix at = a.transpose();
    const SparseMatrix d = a - at;
    double worst = 0.0;
    for (int k = 0; k < d.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(d, k); it; ++it) {
            worst = std::max(worst, std::abs(it.value()));
        }
    }
    return worst;
}

const char* to_string(FactorKind kind)
{
    switch (kind) {
    case FactorKind::kCholesky: return "cholesky";
    case FactorKind::kQuasiDefiniteLdlt: return "ldlt";
    case FactorKind::kMinres: return "minres";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// SPD
// ---------------------------------------------------------------------------

SpdFactorization::SpdFactorization(const SparseMatrix& a, double solver_tol)
    : matrix_(a), tol_(solver_tol)
{
    if (a.rows() != a.cols()) {
        throw DomainError("SPD factorization requires a square matrix");
    }
    llt_.compute(matrix_);
    if (llt_.info() != Eigen::Success) {
        throw DefinitenessError("non-positive pivot in sparse Cholesky factorization");
    }
    stats_.kind = FactorKind::kCholesky;
    stats_.dimension = a.rows();
    stats_.factor_nonzeros = llt_.matrixL().nestedExpression().nonZeros();
}

Vector SpdFactorization::solve(const Vector& b) const
{
    if (b.size() != stats_.dimension) {
        throw DomainError("SPD solve: right-hand side size mismatch");
    }
    Vector x = llt_.solve(b);
    const double bnorm = b.norm();
    for (int sweep = 0; sweep < 2; ++sweep) {
        const Vector r = b - matrix_ * x;
        if (r.norm() <= tol_ * bnorm) break;
        x += llt_.solve(r);
    }
    if (!x.allFinite()) {
        throw NumericError("SPD solve produced non-finite values");
    }
    return x;
}

// ---------------------------------------------------------------------------
// Augmented quasi-definite system
// ---------------------------------------------------------------------------

namespace {

// Jacobi preconditioner on |diag(A)|; MINRES needs an SPD preconditioner and
// the lower-right block of the augmented matrix is negative definite.
template <typename Scalar>
class AbsDiagonalPreconditioner : public Eigen::DiagonalPreconditioner<Scalar> {
    using Base = Eigen::DiagonalPreconditioner<Scalar>;

public:
    AbsDiagonalPreconditioner() = default;

    template <typename MatType>
    explicit AbsDiagonalPreconditioner(const MatType& mat) { compute(mat); }

    template <typename MatType>
    AbsDiagonalPreconditioner& analyzePattern(const MatType&) { return *this; }

    template <typename MatType>
    AbsDiagonalPreconditioner& factorize(const MatType& mat)
    {
        Base::factorize(mat);
        this->m_invdiag = this->m_invdiag.cwiseAbs();
        return *this;
    }

    template <typename MatType>
    AbsDiagonalPreconditioner& compute(const MatType& mat) { return factorize(mat); }
};

using ColMatrix = Eigen::SparseMatrix<double>;

ColMatrix build_augmented(const SparseMatrix& k, const SparseMatrix& m, double alpha)
{
    const Eigen::Index n = k.rows();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(2 * k.nonZeros() + 2 * m.nonZeros()));
    for (int r = 0; r < m.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
            t.emplace_back(r, it.col(), it.value() / alpha);
            t.emplace_back(n + r, n + it.col(), -it.value());
        }
    }
    for (int r = 0; r < k.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(k, r); it; ++it) {
            t.emplace_back(r, n + it.col(), it.value());
            t.emplace_back(n + r, it.col(), it.value());
        }
    }
    ColMatrix a(2 * n, 2 * n);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    return a;
}

} // namespace

struct AugmentedFactorization::Impl {
    ColMatrix matrix;
    Eigen::SimplicialLDLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    Eigen::MINRES<ColMatrix, Eigen::Lower | Eigen::Upper, AbsDiagonalPreconditioner<double>> minres;
};

AugmentedFactorization::AugmentedFactorization(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                               double alpha, AugmentedOptions options)
    : impl_(std::make_unique<Impl>()), alpha_(alpha), n_(stiffness.rows()), options_(options)
{
    if (!(alpha > 0.0)) {
        throw DomainError("augmented system requires alpha > 0");
    }
    if (stiffness.rows() != stiffness.cols() || mass.rows() != mass.cols() || mass.rows() != n_) {
        throw DomainError("augmented system: K and M must be square and of equal size");
    }
    impl_->matrix = build_augmented(stiffness, mass, alpha);
    stats_.dimension = 2 * n_;

    if (options_.kind == LinearSolverKind::kDirect) {
        impl_->ldlt.compute(impl_->matrix);
        if (impl_->ldlt.info() != Eigen::Success) {
            throw NumericError("singular augmented factorization");
        }
        // A quasi-definite matrix has inertia (n, n, 0) in any symmetric ordering.
        const Vector d = impl_->ldlt.vectorD();
        Eigen::Index positive = 0;
        Eigen::Index negative = 0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (d[i] > 0.0) ++positive;
            else if (d[i] < 0.0) ++negative;
        }
        if (positive != n_ || negative != n_) {
            throw NumericError("augmented factorization has wrong inertia (" + std::to_string(positive) + ", "
                               + std::to_string(negative) + ")");
        }
        stats_.kind = FactorKind::kQuasiDefiniteLdlt;
        stats_.factor_nonzeros = impl_->ldlt.matrixL().nestedExpression().nonZeros();
    } else {
        impl_->minres.setTolerance(options_.solver_tol);
        impl_->minres.setMaxIterations(options_.max_krylov_iters);
        impl_->minres.compute(impl_->matrix);
        stats_.kind = FactorKind::kMinres;
        stats_.factor_nonzeros = 0;
    }
}

AugmentedFactorization::~AugmentedFactorization() = default;

std::pair<Vector, Vector> AugmentedFactorization::solve_full(const Vector& b) const
{
    if (b.size() != n_) {
        throw DomainError("augmented solve: right-hand side size mismatch");
    }
    Vector rhs = Vector::Zero(2 * n_);
    rhs.head(n_) = b;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        return {Vector::Zero(n_), Vector::Zero(n_)};
    }

    Vector x;
    if (options_.kind == LinearSolverKind::kDirect) {
        x = impl_->ldlt.solve(rhs);
        for (int sweep = 0; sweep < 3; ++sweep) {
            const Vector r = rhs - impl_->matrix * x;
            if (r.norm() <= options_.solver_tol * bnorm) break;
            x += impl_->ldlt.solve(r);
        }
    } else {
        x = impl_->minres.solve(rhs);
    }
    if (!x.allFinite()) {
        throw NumericError("augmented solve produced non-finite values");
    }
    const double res = (rhs - impl_->matrix * x).norm();
    // Rounding floor for a backward-stable solve.
    const double floor = 64.0 * Eigen::NumTraits<double>::epsilon() * (bnorm + x.norm());
    if (res > std::max(options_.solver_tol * bnorm, floor)) {
        throw NumericError("augmented solve missed tolerance: residual " + std::to_string(res / bnorm));
    }
    return {x.head(n_), x.tail(n_)};
}

Vector AugmentedFactorization::solve(const Vector& b) const { return solve_full(b).first; }

Vector solve_augmented(const SparseMatrix& stiffness, const SparseMatrix& mass, double alpha, const Vector& b,
                       AugmentedOptions options)
{
    return AugmentedFactorization(stiffness, mass, alpha, options).solve(b);
}

std::shared_ptr<const AugmentedFactorization> AugmentedCache::get(const SparseMatrix& stiffness,
                                                                  const SparseMatrix& mass, double alpha,
                                                                  const AugmentedOptions& options) const
{
    const Key key{&stiffness, &mass, alpha, static_cast<int>(options.kind), options.solver_tol};
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    auto f = std::make_shared<const AugmentedFactorization>(stiffness, mass, alpha, options);
    entries_.emplace(key, f);
    return f;
}

std::size_t AugmentedCache::size() const
{
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Spectral estimates
// ---------------------------------------------------------------------------

EigenEstimate power_iteration_extremes(const LinearOperator& apply, Eigen::Index n, int iters, std::uint64_t seed,
                                       double rel_tol)
{
    EigenEstimate est;
    if (n <= 0) return est;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = dist(rng);
    x.normalize();

    double rayleigh = 0.0;
    for (int k = 1; k <= iters; ++k) {
        Vector y = apply(x);
        const double next = x.dot(y);
        const double ynorm = y.norm();
        est.iterations = k;
        if (ynorm == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        x = y / ynorm;
        if (k > 1 && std::abs(next - rayleigh) <= rel_tol * std::abs(next)) {
            est.value = next;
            est.converged = true;
            return est;
        }
        rayleigh = next;
    }
    est.value = rayleigh;
    return est;
}

EigenEstimate smallest_eigenvalue(const SpdFactorization& factor, int iters, std::uint64_t seed, double rel_tol)
{
    auto inv = power_iteration_extremes([&](const Vector& v) { return factor.solve(v); }, factor.size(), iters,
                                        seed, rel_tol);
    if (inv.value > 0.0) inv.value = 1.0 / inv.value;
    return inv;
}

} // namespace pdeabcd
