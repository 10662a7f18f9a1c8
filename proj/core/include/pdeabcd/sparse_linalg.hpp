#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>

#include <pdeabcd/types.hpp>

namespace pdeabcd {

inline constexpr double kDefaultSolverTol = 1e-12;
inline constexpr std::uint64_t kDefaultSeed = 20190522;

using Triplet = Eigen::Triplet<double, int>;

/// Builds a CSR matrix from (possibly repeated) triplets. Duplicates are
/// summed in input order and explicit zeros are dropped.
SparseMatrix finalize_sparse(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& triplets);

// Max-norm of A - A^T. Zero for matrices assembled from symmetric pieces.
double asymmetry(const SparseMatrix& a);

enum class FactorKind { kCholesky, kQuasiDefiniteLdlt, kMinres };

const char* to_string(FactorKind kind);

struct FactorStats {
    FactorKind kind;
    Eigen::Index dimension = 0;
    Eigen::Index factor_nonzeros = 0;  // nonzeros of L (0 for Krylov)
};

/// Cholesky factorization of a sparse SPD matrix (AMD ordering).
/// Construction throws DefinitenessError on a non-positive pivot.
class SpdFactorization {
public:
    explicit SpdFactorization(const SparseMatrix& a, double solver_tol = kDefaultSolverTol);
    SpdFactorization(const SpdFactorization&) = delete;
    SpdFactorization& operator=(const SpdFactorization&) = delete;

    // ||A x - b|| <= solver_tol ||b||, with up to two refinement sweeps.
    Vector solve(const Vector& b) const;

    Eigen::Index size() const noexcept { return stats_.dimension; }
    const FactorStats& stats() const noexcept { return stats_; }

private:
    using ColMatrix = Eigen::SparseMatrix<double>;
    ColMatrix matrix_;
    Eigen::SimplicialLLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
    double tol_;
    FactorStats stats_;
};

enum class LinearSolverKind { kDirect, kMinres };

struct AugmentedOptions {
    LinearSolverKind kind = LinearSolverKind::kDirect;
    double solver_tol = kDefaultSolverTol;
    int max_krylov_iters = 20000;
};

/// Solves (K M^{-1} K + M / alpha) p = b without forming M^{-1}, through the
/// symmetric quasi-definite system
///
///     [ M / alpha   K ] [p]   [b]
///     [ K          -M ] [w] = [0]
///
/// whose second row gives w = M^{-1} K p. The system matrix is independent
/// of the right-hand side, so one factorization serves every iteration.
class AugmentedFactorization {
public:
    AugmentedFactorization(const SparseMatrix& stiffness, const SparseMatrix& mass, double alpha,
                           AugmentedOptions options = {});
    ~AugmentedFactorization();
    AugmentedFactorization(const AugmentedFactorization&) = delete;
    AugmentedFactorization& operator=(const AugmentedFactorization&) = delete;

    Vector solve(const Vector& b) const;
    // Returns (p, w).
    std::pair<Vector, Vector> solve_full(const Vector& b) const;

    double alpha() const noexcept { return alpha_; }
    Eigen::Index size() const noexcept { return n_; }
    const FactorStats& stats() const noexcept { return stats_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double alpha_;
    Eigen::Index n_;
    AugmentedOptions options_;
    FactorStats stats_;
};

/// One-shot convenience wrapper; builds a fresh factorization.
Vector solve_augmented(const SparseMatrix& stiffness, const SparseMatrix& mass, double alpha, const Vector& b,
                       AugmentedOptions options = {});

/// Cache keyed by (matrix identity, alpha, solver kind). Thread-safe.
class AugmentedCache {
public:
    std::shared_ptr<const AugmentedFactorization> get(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                                      double alpha, const AugmentedOptions& options = {}) const;
    std::size_t size() const;

private:
    using Key = std::tuple<const void*, const void*, double, int, double>;
    mutable std::mutex mutex_;
    mutable std::map<Key, std::shared_ptr<const AugmentedFactorization>> entries_;
};

using LinearOperator = std::function<Vector(const Vector&)>;

struct EigenEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration with a Rayleigh-quotient stopping rule. Deterministic for a
/// fixed seed.
EigenEstimate power_iteration_extremes(const LinearOperator& apply, Eigen::Index n, int iters,
                                       std::uint64_t seed = kDefaultSeed, double rel_tol = 1e-10);

/// Smallest eigenvalue of an SPD matrix via power iteration on its inverse.
EigenEstimate smallest_eigenvalue(const SpdFactorization& factor, int iters, std::uint64_t seed = kDefaultSeed,
                                  double rel_tol = 1e-10);

} // namespace pdeabcd
