#pragma once
#include <optional>
#include <stdexcept>
#include <string>

#include <pdeabcd/dual_solver.hpp>
#include <pdeabcd/types.hpp>

namespace pdeabcd {

// Largest interior node count the dense oracle accepts.
inline constexpr Eigen::Index kOracleMaxNodes = 1100;

enum class L1Term {
    kMassCoupled,  // beta |M u|_1, the exact partner of the discretized dual
    kLumped,       // beta |W u|_1
};

/// Dense J_h(u) with y = K^{-1} M (u + y_r). Throws DomainError if u leaves
/// the box or the mesh exceeds the oracle cap.
double primal_objective(const ProblemInstance& prob, const Vector& u, L1Term term = L1Term::kMassCoupled);

/// Dense re-evaluation of Phi_h, independent of the sparse factorizations.
double dense_dual_objective(const ProblemInstance& prob, const DualPoint& z);

struct PrimalSolution {
    Vector u;
    Vector y;
    double J = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct ReferenceOptions {
    double tol = 1e-10;
    int max_iters = 200000;
    std::optional<Vector> start;
    // ADMM only: penalty, and the sup-norm change of the control between
    // checks (10 iterations apart) required on top of the gap test.
    double rho = 0.1;
    double step_tol = 1e-12;
};

class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Accelerated proximal gradient for the lumped-L1 problem in the W inner
/// product, where the prox is soft-threshold-then-clip per node. Stops when
/// the fixed-point residual (sup norm, per unit step) is <= tol.
PrimalSolution fista_lumped(const ProblemInstance& prob, const ReferenceOptions& options = {});

struct ReferenceSolution : PrimalSolution {
    DualPoint multipliers;    // (lambda, p, mu) read off the ADMM multipliers
    double lower_bound = 0.0; // -J(u)  <= Phi_h*
    double upper_bound = 0.0; // Phi_h(multipliers) >= Phi_h*
};

/// Dense ADMM on the mass-coupled problem with splitting c = W^{-1} M u,
/// v = u. Stops when the duality gap Phi_h(z) + J(u) <= tol (1 + |J|) and the
/// control has stopped moving; the gap alone pins u only to O(sqrt(gap / alpha)).
ReferenceSolution admm_reference(const ProblemInstance& prob, const ReferenceOptions& options = {});

class OracleInconsistency : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CertifyOptions {
    double tol = 1e-12;
    // Dual cross-run: KKT tolerance and iteration cap.
    double dual_tol = 1e-11;
    int dual_max_iters = 100000;
    double cross_check_tol = 1e-7;
};

struct CertifiedOptimum {
    double J_star = 0.0;
    double Phi_star = 0.0;
    Vector u_star;
    DualPoint z_star;          // from the dual cross-run
    DualPoint z_oracle;        // from the ADMM multipliers
    double certificate_width = 0.0;
    int oracle_iterations = 0;
    int dual_iterations = 0;
    double dual_kkt = 0.0;
    double cross_check_diff = 0.0;  // |Phi_h(z^K) - Phi*|
    double control_diff_mass = 0.0; // |u_oracle - u_dual|_M
};

bool within_oracle_cap(const ProblemInstance& prob) noexcept;

/// ADMM optimum, cross-checked against a long dual run. Throws
/// OracleInconsistency when the two disagree beyond cross_check_tol.
CertifiedOptimum certified_optimum(const ProblemInstance& prob, const CertifyOptions& options = {});

} // namespace pdeabcd
