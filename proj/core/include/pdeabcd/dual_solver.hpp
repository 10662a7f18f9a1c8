#pragma once
#include <memory>
#include <optional>
#include <vector>

#include <pdeabcd/assembly.hpp>
#include <pdeabcd/errors.hpp>
#include <pdeabcd/sparse_linalg.hpp>
#include <pdeabcd/types.hpp>

namespace pdeabcd {

// Spectral constant of ||z||_W^2 <= gamma ||z||_M^2 for P1 triangles.
inline constexpr double kGammaPlanar = 4.0;
inline constexpr double kGammaSpatial = 5.0;

struct Box {
    double lower;
    double upper;

    bool contains(double v) const noexcept { return lower <= v && v <= upper; }
};

/// Discretized sparse control problem
///
///   min 1/2 |y - y_d|_M^2 + alpha/2 |u|_M^2 + beta |M u|_1,  K y = M (u + y_r),  u in [a, b],
///
/// on the interior index set, together with what its dual needs at every
/// iteration (M y_d, M y_r, K y_d - M y_r, the augmented factorization).
class ProblemInstance {
public:
    ProblemInstance(std::shared_ptr<const FemOperators> ops, double alpha, double beta, Box box, Vector y_d,
                    Vector y_r, double gamma = kGammaPlanar, AugmentedOptions solver = {});

    const FemOperators& ops() const noexcept { return *ops_; }
    std::shared_ptr<const FemOperators> ops_ptr() const noexcept { return ops_; }
    Eigen::Index size() const noexcept { return ops_->size(); }

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    const Box& box() const noexcept { return box_; }
    double gamma() const noexcept { return gamma_; }
    const Vector& y_d() const noexcept { return y_d_; }
    const Vector& y_r() const noexcept { return y_r_; }

    const Vector& mass_y_d() const noexcept { return mass_y_d_; }
    const Vector& mass_y_r() const noexcept { return mass_y_r_; }
    // K y_d - M y_r, the data part of every p-subproblem right-hand side.
    const Vector& p_rhs_base() const noexcept { return p_rhs_base_; }
    double y_d_mass_norm2() const noexcept { return y_d_mass_norm2_; }

    const AugmentedFactorization& augmented() const noexcept { return *augmented_; }
    const AugmentedOptions& solver_options() const noexcept { return solver_; }

private:
    std::shared_ptr<const FemOperators> ops_;
    double alpha_;
    double beta_;
    Box box_;
    Vector y_d_;
    Vector y_r_;
    double gamma_;
    AugmentedOptions solver_;
    Vector mass_y_d_;
    Vector mass_y_r_;
    Vector p_rhs_base_;
    double y_d_mass_norm2_;
    std::shared_ptr<const AugmentedFactorization> augmented_;
};

/// Nodal coefficients (lambda, p, mu) on the interior index set.
struct DualPoint {
    Vector lambda;
    Vector p;
    Vector mu;

    static DualPoint zeros(Eigen::Index n);
    bool all_finite() const;
};

DualPoint operator-(const DualPoint& a, const DualPoint& b);

struct DualIterate {
    DualPoint current;       // z^k
    DualPoint previous;      // z^{k-1}
    DualPoint extrapolated;  // z~^{k+1}
    double t = 1.0;
    int k = 0;
};

enum class MomentumScheme { kAccelerated, kNone };

struct SolverConfig {
    int max_iters = 10000;
    // Relative KKT residual that ends the run.
    double tolerance = 1e-6;
    // Log a row every `log_every` iterations (the final iteration is always logged).
    int log_every = 1;
    MomentumScheme momentum = MomentumScheme::kAccelerated;
    bool stop_on_tolerance = true;

    void validate() const;
};

struct IterationRow {
    int k;
    double phi;
    double kkt;
    double gap;
    double time_s;
};

struct RecoveredPrimal {
    Vector u_raw;  // (p - lambda - mu) / alpha
    Vector y_raw;  // K y_raw = M (u_raw + y_r)
    Vector u;      // u_raw clipped to the box
    Vector y;      // state of the clipped control
};

struct RunRecord {
    std::vector<IterationRow> rows;
    DualIterate final;
    RecoveredPrimal primal;
    std::optional<double> tau_h;
    int iterations = 0;
    bool converged = false;
    double final_kkt = 0.0;
    double final_phi = 0.0;
    double elapsed_s = 0.0;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, int iteration, DualPoint dump)
        : NumericError(what), iteration_(iteration), dump_(std::move(dump)) {}

    int iteration() const noexcept { return iteration_; }
    const DualPoint& dump() const noexcept { return dump_; }

private:
    int iteration_;
    DualPoint dump_;
};

// sup_{u in box} <s, u>, separable over components.
double support_function(const Box& box, const Vector& s);

/// Phi_h(lambda, p, mu); +infinity when lambda leaves [-beta, beta].
double dual_objective(const ProblemInstance& prob, const DualPoint& z);

/// argmin_p 1/2 |K p - M y_d|^2_{M^-1} + 1/(2 alpha) |p - lambda~ - mu~|^2_M + <M y_r, p>
Vector step_phat(const ProblemInstance& prob, const DualPoint& z_tilde);

/// Box projection with the (W - M) proximal term:
/// clip(lambda~ + W^{-1} M (p^ - mu~ - lambda~), -beta, beta).
Vector step_lambda(const ProblemInstance& prob, const DualPoint& z_tilde, const Vector& p_hat);

// step_phat with lambda~ replaced by the new lambda.
Vector step_p(const ProblemInstance& prob, const DualPoint& z_tilde, const Vector& lambda);

/// mu-update through xi = M mu:
///   v  = M mu~ + W (p - lambda - mu~) / gamma
///   xi = v - (alpha/gamma) W Pi_[a,b]((gamma/alpha) W^{-1} v),   mu = M^{-1} xi
Vector step_mu(const ProblemInstance& prob, const DualPoint& z_tilde, const Vector& lambda, const Vector& p);

struct MomentumStep {
    double t_next;
    double beta;
};

MomentumStep momentum(double t);

RecoveredPrimal recover_primal(const ProblemInstance& prob, const DualPoint& z);

/// Primal objective of the dual's partner problem, evaluated with the sparse
/// stiffness factorization. Does not check the box.
double primal_value(const ProblemInstance& prob, const Vector& u);

/// Max of the scaled adjoint, lambda- and mu-complementarity residuals.
/// Vectors may be interior-sized or full-sized with zero boundary entries.
double kkt_residual(const ProblemInstance& prob, const DualPoint& z, const Vector& u, const Vector& y);

// kkt_residual on recover_primal(prob, z).
double kkt_residual(const ProblemInstance& prob, const DualPoint& z);

/// Symmetric Gauss-Seidel majorized ABCD on the discretized dual.
/// Throws DivergenceError when an iterate stops being finite.
RunRecord solve(const ProblemInstance& prob, const SolverConfig& config, const DualPoint& z0);
RunRecord solve(const ProblemInstance& prob, const SolverConfig& config);

} // namespace pdeabcd
