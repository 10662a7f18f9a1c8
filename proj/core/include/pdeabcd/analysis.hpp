#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pdeabcd/dual_solver.hpp>
#include <pdeabcd/presets.hpp>
#include <pdeabcd/types.hpp>

namespace pdeabcd {

/// PDEABCD_SEED if set and parseable, kDefaultSeed otherwise.
std::uint64_t seed_from_env();

/// 1/(2 alpha) [ d^T (M G^{-1} M + W - M) d + gamma e^T M W^{-1} M e ],
/// d = lambda0 - lambda*, e = mu0 - mu*, G = M + alpha K M^{-1} K.
/// The p blocks do not enter.
double compute_tau_h(const ProblemInstance& prob, const DualPoint& z0, const DualPoint& z_star);

// Largest eigenvalue of S_h (block diagonal, so the larger of the two blocks).
EigenEstimate sh_lambda_max(const ProblemInstance& prob, int iters = 300, std::uint64_t seed = kDefaultSeed);

struct BoundCheck {
    bool holds = true;
    double worst_margin = 0.0;  // min_k (bound_k + slack - gap_k)
    int worst_k = 0;
    int checked = 0;
};

/// Phi(z^k) - Phi* <= 4 tau_h / (k+1)^2 + 1e-10 (1 + |Phi*|) over every logged row.
BoundCheck verify_complexity_bound(const RunRecord& record, double tau_h, double phi_star,
                                   double slack_rel = 1e-10);

struct SpectralRow {
    int level;
    double h;
    Eigen::Index n_interior;
    double m_max_h2;   // lambda_max(M) / h^2
    double m_min_h2;   // lambda_min(M) / h^2
    double k_max;      // lambda_max(K)
    double k_min_h2;   // lambda_min(K) / h^2
    double sh_max;     // lambda_max(S_h)
    double sh_max_h2;  // lambda_max(S_h) / h^2
};

struct SpectralReport {
    std::vector<SpectralRow> rows;
    double window = 2.0;
    double m_max_spread = 0.0;   // max/min of m_max_h2 across levels
    double m_min_spread = 0.0;
    double sh_spread = 0.0;
    double k_max_finest_change = 0.0;  // relative change between the two finest levels
    bool m_window_ok = false;
    bool k_bounded_ok = false;
    bool sh_window_ok = false;
    bool sh_monotone_ok = false;

    bool all_ok() const { return m_window_ok && k_bounded_ok && sh_window_ok && sh_monotone_ok; }
};

/// Power-iteration estimates on the Laplacian instance with the given alpha
/// and gamma. Levels must be increasing.
SpectralReport spectral_scaling_report(const std::vector<int>& levels, double alpha, double gamma = kGammaPlanar,
                                       std::uint64_t seed = kDefaultSeed);

struct NormEquivalenceCheck {
    int samples = 0;
    int lower_violations = 0;  // |z|_M^2 > |z|_W^2
    int upper_violations = 0;  // |z|_W^2 > gamma |z|_M^2
    double min_ratio = 0.0;    // min |z|_W^2 / |z|_M^2
    double max_ratio = 0.0;
};

/// Random interior vectors, uniform in [-1, 1].
NormEquivalenceCheck check_norm_equivalence(const FemOperators& ops, int samples, double gamma,
                                            std::uint64_t seed);

struct L1ConsistencyRow {
    int level;
    double h;
    int samples;
    int negative;        // samples with L1_h - L1 < 0 (beyond rounding)
    double max_ratio;    // max (L1_h - L1) / (h |z|_H1)
};

struct L1ConsistencyCheck {
    std::vector<L1ConsistencyRow> rows;
    double C = 0.0;  // fitted on the first level
    bool ok = false;
};

/// Random P1 functions with nodal values uniform in [-1, 1] on all nodes.
L1ConsistencyCheck check_l1_consistency(const std::vector<int>& levels, int samples, std::uint64_t seed);

struct MeshIndependenceOptions {
    int max_iters = 3000;
    // KKT tolerance of the measured runs; well below epsilon so the tail is seen.
    double trajectory_tol = 1e-11;
    // KKT tolerance for z* used in tau_h.
    double z_star_tol = 1e-10;
    double band = 0.2;
    int jobs = 1;
    std::optional<DualPoint> coarse_start;  // z0 on the coarsest level; zero if empty
    PresetOverrides overrides;
    bool compute_sh = true;
    bool timing = true;
};

struct MeshIndependenceRow {
    int level = 0;
    double h = 0.0;
    Eigen::Index n_interior = 0;
    int iters_to_eps = 0;       // first k after which the gap stays <= eps (1 + |Phi*|)
    int first_hit = 0;          // first k with gap <= eps (1 + |Phi*|)
    double tau_h = 0.0;
    double lam_max_sh = 0.0;
    double phi_star = 0.0;
    std::string phi_star_source;  // "oracle" or "reference"
    double seconds = 0.0;
    bool saturated = false;
    int run_iterations = 0;
};

struct TauFit {
    double tau_proxy = 0.0;
    double C = 0.0;
    bool holds = false;
    double worst_excess = 0.0;  // max tau_h - (tau_proxy + C h)
};

struct MeshIndependenceReport {
    std::string preset;
    double epsilon = 0.0;
    std::string chain;
    std::vector<MeshIndependenceRow> rows;
    double median_iters = 0.0;
    bool within_band = false;
    bool any_saturated = false;
    std::optional<TauFit> tau_fit;
};

/// z0 fixed on the coarsest level and prolongated level by level.
MeshIndependenceReport mesh_independence_experiment(const Preset& preset, const std::vector<int>& levels,
                                                    double epsilon, const MeshIndependenceOptions& options = {});

/// tau_h on fine_level with the coarse start prolongated there; the
/// discrete stand-in for the continuous constant.
double approximate_continuous_tau(const Preset& preset, int fine_level, int coarse_level,
                                  const MeshIndependenceOptions& options = {});

/// C = max(0, (tau_coarse - tau_proxy) / h_coarse), then tau_h <= tau_proxy + C h
/// checked at every finer row.
TauFit fit_tau_bound(const std::vector<MeshIndependenceRow>& rows, double tau_proxy);

int settled_index(const std::vector<double>& gaps, double threshold);
int first_hit_index(const std::vector<double>& gaps, double threshold);

} // namespace pdeabcd
