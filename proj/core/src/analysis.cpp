#include <pdeabcd/analysis.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <random>

#include <pdeabcd/errors.hpp>
#include <pdeabcd/mesh.hpp>
#include <pdeabcd/oracle.hpp>

namespace pdeabcd {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

double spread(const std::vector<double>& v)
{
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

DualPoint prolongate_dual(const Mesh& coarse, const Mesh& fine, const DualPoint& z)
{
    if (coarse.level() == fine.level()) return z;
    return DualPoint{prolongate_interior(coarse, fine, z.lambda), prolongate_interior(coarse, fine, z.p),
                     prolongate_interior(coarse, fine, z.mu)};
}

struct ReferencePoint {
    DualPoint z;
    double phi;
};

ReferencePoint reference_run(const ProblemInstance& prob, const DualPoint& z0, const MeshIndependenceOptions& o)
{
    SolverConfig config;
    config.max_iters = 10 * o.max_iters;
    config.tolerance = o.z_star_tol;
    config.log_every = config.max_iters;
    const RunRecord run = solve(prob, config, z0);
    return {run.final.current, run.final_phi};
}

} // namespace

std::uint64_t seed_from_env()
{
    if (const char* s = std::getenv("PDEABCD_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s, &end, 10);
        if (end != s && *end == '\0') return v;
    }
    return kDefaultSeed;
}

double compute_tau_h(const ProblemInstance& prob, const DualPoint& z0, const DualPoint& z_star)
{
    const auto& ops = prob.ops();
    const Eigen::Index n = prob.size();
    if (z0.lambda.size() != n || z0.mu.size() != n || z_star.lambda.size() != n || z_star.mu.size() != n)
        throw SizeError("compute_tau_h: dual points have wrong length");
    const double alpha = prob.alpha();
    const Vector d = z0.lambda - z_star.lambda;
    const Vector e = z0.mu - z_star.mu;
    const Vector Md = ops.mass() * d;
    const Vector Gi_Md = prob.augmented().solve(Md) / alpha;
    const double t1 = Md.dot(Gi_Md) + d.dot(ops.lumped().cwiseProduct(d)) - d.dot(Md);
    const Vector Me = ops.mass() * e;
    const double t2 = prob.gamma() * Me.dot(Me.cwiseQuotient(ops.lumped()));
    return std::max(0.0, (t1 + t2) / (2.0 * alpha));
}

EigenEstimate sh_lambda_max(const ProblemInstance& prob, int iters, std::uint64_t seed)
{
    const auto& ops = prob.ops();
    const double alpha = prob.alpha();
    const auto lambda_block = [&](const Vector& x) -> Vector {
        const Vector Mx = ops.mass() * x;
        const Vector Gi = prob.augmented().solve(Mx) / alpha;
        return (ops.mass() * Gi + ops.lumped().cwiseProduct(x) - Mx) / alpha;
    };
    const auto mu_block = [&](const Vector& x) -> Vector {
        const Vector Mx = ops.mass() * x;
        return (prob.gamma() / alpha) * (ops.mass() * Mx.cwiseQuotient(ops.lumped()));
    };
    const EigenEstimate a = power_iteration_extremes(lambda_block, prob.size(), iters, seed, 1e-9);
    const EigenEstimate b = power_iteration_extremes(mu_block, prob.size(), iters, seed, 1e-9);
    return a.value >= b.value ? a : b;
}

BoundCheck verify_complexity_bound(const RunRecord& record, double tau_h, double phi_star, double slack_rel)
{
    BoundCheck out;
    out.worst_margin = std::numeric_limits<double>::infinity();
    const double slack = slack_rel * (1.0 + std::abs(phi_star));
    for (const auto& row : record.rows) {
        if (row.k < 1) continue;
        const double kp1 = row.k + 1.0;
        const double margin = 4.0 * tau_h / (kp1 * kp1) + slack - (row.phi - phi_star);
        ++out.checked;
        if (!(margin >= 0.0)) out.holds = false;
        if (margin < out.worst_margin || std::isnan(margin)) {
            out.worst_margin = margin;
            out.worst_k = row.k;
        }
    }
    if (out.checked == 0) out.worst_margin = 0.0;
    return out;
}

SpectralReport spectral_scaling_report(const std::vector<int>& levels, double alpha, double gamma,
                                       std::uint64_t seed)
{
    if (levels.empty()) throw SizeError("spectral_scaling_report: no levels");
    if (!std::is_sorted(levels.begin(), levels.end()) || std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw DomainError("spectral_scaling_report: levels must be strictly increasing");
    SpectralReport rep;
    for (int level : levels) {
        const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(level));
        const auto ops = assemble(mesh);
        const Eigen::Index n = ops->size();
        if (n == 0) throw SizeError("spectral_scaling_report: level " + std::to_string(level) + " has no interior");
        const double h2 = mesh->h() * mesh->h();
        SpectralRow row{};
        row.level = level;
        row.h = mesh->h();
        row.n_interior = n;
        const auto M_apply = [&](const Vector& x) -> Vector { return ops->mass() * x; };
        const auto K_apply = [&](const Vector& x) -> Vector { return ops->stiffness() * x; };
        row.m_max_h2 = power_iteration_extremes(M_apply, n, 2000, seed, 1e-9).value / h2;
        row.m_min_h2 = smallest_eigenvalue(ops->mass_factor(), 2000, seed, 1e-9).value / h2;
        row.k_max = power_iteration_extremes(K_apply, n, 4000, seed, 1e-10).value;
        row.k_min_h2 = smallest_eigenvalue(ops->stiffness_factor(), 2000, seed, 1e-10).value / h2;
        const ProblemInstance prob(ops, alpha, 0.0, Box{-1.0, 1.0}, Vector::Zero(n), Vector::Zero(n), gamma);
        row.sh_max = sh_lambda_max(prob, 2000, seed).value;
        row.sh_max_h2 = row.sh_max / h2;
        rep.rows.push_back(row);
    }
    std::vector<double> mmax, mmin, sh;
    for (const auto& r : rep.rows) {
        mmax.push_back(r.m_max_h2);
        mmin.push_back(r.m_min_h2);
        sh.push_back(r.sh_max_h2);
    }
    rep.m_max_spread = spread(mmax);
    rep.m_min_spread = spread(mmin);
    rep.sh_spread = spread(sh);
    rep.m_window_ok = rep.m_max_spread < rep.window && rep.m_min_spread < rep.window;
    rep.sh_window_ok = rep.sh_spread < rep.window;
    if (rep.rows.size() >= 2) {
        const double a = rep.rows[rep.rows.size() - 2].k_max;
        const double b = rep.rows.back().k_max;
        rep.k_max_finest_change = std::abs(b - a) / std::max(a, b);
    }
    rep.k_bounded_ok = rep.k_max_finest_change < 0.1;
    rep.sh_monotone_ok = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].sh_max < rep.rows[i - 1].sh_max)) rep.sh_monotone_ok = false;
    return rep;
}

NormEquivalenceCheck check_norm_equivalence(const FemOperators& ops, int samples, double gamma, std::uint64_t seed)
{
    NormEquivalenceCheck out;
    out.samples = samples;
    out.min_ratio = std::numeric_limits<double>::infinity();
    out.max_ratio = 0.0;
    std::mt19937_64 rng(seed);
    const double tol = 1e-13;
    for (int s = 0; s < samples; ++s) {
        const Vector z = uniform_vector(rng, ops.size());
        const double m = z.dot(ops.mass() * z);
        const double w = z.dot(ops.lumped().cwiseProduct(z));
        if (m > w * (1.0 + tol)) ++out.lower_violations;
        if (w > gamma * m * (1.0 + tol)) ++out.upper_violations;
        out.min_ratio = std::min(out.min_ratio, w / m);
        out.max_ratio = std::max(out.max_ratio, w / m);
    }
    return out;
}

L1ConsistencyCheck check_l1_consistency(const std::vector<int>& levels, int samples, std::uint64_t seed)
{
    if (levels.empty()) throw SizeError("check_l1_consistency: no levels");
    L1ConsistencyCheck out;
    std::mt19937_64 rng(seed);
    for (int level : levels) {
        const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(level));
        const auto ops = assemble(mesh);
        L1ConsistencyRow row{level, mesh->h(), samples, 0, 0.0};
        for (int s = 0; s < samples; ++s) {
            const Vector z = uniform_vector(rng, static_cast<Eigen::Index>(mesh->nodes().size()));
            const double l1h = l1h_norm(ops->lumped_full(), z);
            const double l1 = l1_norm_exact(*mesh, z);
            const double diff = l1h - l1;
            if (diff < -1e-13 * (1.0 + l1h)) ++row.negative;
            const double h1 = norms(*ops, z).h1;
            if (h1 > 0.0) row.max_ratio = std::max(row.max_ratio, diff / (mesh->h() * h1));
        }
        out.rows.push_back(row);
    }
    out.C = out.rows.front().max_ratio;
    out.ok = true;
    for (const auto& r : out.rows)
        if (r.negative > 0 || r.max_ratio > out.C * (1.0 + 1e-12)) out.ok = false;
    return out;
}

int first_hit_index(const std::vector<double>& gaps, double threshold)
{
    for (std::size_t i = 0; i < gaps.size(); ++i)
        if (gaps[i] <= threshold) return static_cast<int>(i) + 1;
    return -1;
}

int settled_index(const std::vector<double>& gaps, double threshold)
{
    if (gaps.empty() || !(gaps.back() <= threshold)) return -1;
    std::size_t i = gaps.size();
    while (i > 0 && gaps[i - 1] <= threshold) --i;
    return static_cast<int>(i) + 1;
}

TauFit fit_tau_bound(const std::vector<MeshIndependenceRow>& rows, double tau_proxy)
{
    TauFit fit;
    fit.tau_proxy = tau_proxy;
    if (rows.empty()) return fit;
    fit.C = std::max(0.0, (rows.front().tau_h - tau_proxy) / rows.front().h);
    fit.holds = true;
    fit.worst_excess = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        const double excess = r.tau_h - (tau_proxy + fit.C * r.h);
        fit.worst_excess = std::max(fit.worst_excess, excess);
        if (excess > 1e-12 * (1.0 + std::abs(tau_proxy))) fit.holds = false;
    }
    return fit;
}

MeshIndependenceReport mesh_independence_experiment(const Preset& preset, const std::vector<int>& levels,
                                                    double epsilon, const MeshIndependenceOptions& options)
{
    if (levels.size() < 3) throw SizeError("mesh_independence_experiment: need at least 3 levels");
    if (!(epsilon > 0.0)) throw DomainError("mesh_independence_experiment: epsilon must be positive");
    if (!std::is_sorted(levels.begin(), levels.end()) || std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw DomainError("mesh_independence_experiment: levels must be strictly increasing");
    if (options.max_iters < 1 || options.jobs < 1) throw DomainError("mesh_independence_experiment: bad options");

    const auto coarse_mesh = std::make_shared<const Mesh>(build_unit_square_mesh(levels.front()));
    const Eigen::Index n0 = static_cast<Eigen::Index>(coarse_mesh->interior_nodes().size());
    const DualPoint z0c = options.coarse_start.value_or(DualPoint::zeros(n0));
    if (z0c.lambda.size() != n0 || z0c.p.size() != n0 || z0c.mu.size() != n0)
        throw SizeError("mesh_independence_experiment: coarse start has wrong length");

    MeshIndependenceReport rep;
    rep.preset = preset.name;
    rep.epsilon = epsilon;
    rep.chain = "z0 fixed on level " + std::to_string(levels.front())
                + ", nodal interpolation onto each finer level, blockwise on (lambda, p, mu)";

    const auto run_level = [&](int level) {
        const auto t0 = std::chrono::steady_clock::now();
        const ProblemInstance prob = instantiate(preset, level, options.overrides);
        const Mesh& mesh = prob.ops().mesh();
        const DualPoint z0 = prolongate_dual(*coarse_mesh, mesh, z0c);

        MeshIndependenceRow row;
        row.level = level;
        row.h = mesh.h();
        row.n_interior = prob.size();

        DualPoint z_star;
        if (within_oracle_cap(prob)) {
            CertifyOptions co;
            co.dual_tol = std::min(co.dual_tol, options.z_star_tol);
            const CertifiedOptimum opt = certified_optimum(prob, co);
            row.phi_star = opt.Phi_star;
            row.phi_star_source = "oracle";
            z_star = opt.z_star;
        } else {
            const ReferencePoint ref = reference_run(prob, z0, options);
            row.phi_star = ref.phi;
            row.phi_star_source = "reference";
            z_star = ref.z;
        }

        SolverConfig config;
        config.max_iters = options.max_iters;
        config.tolerance = options.trajectory_tol;
        config.log_every = 1;
        std::vector<double> gaps;
        try {
            const RunRecord run = solve(prob, config, z0);
            row.run_iterations = run.iterations;
            gaps.reserve(run.rows.size());
            for (const auto& r : run.rows) gaps.push_back(r.phi - row.phi_star);
        } catch (const DivergenceError&) {
            gaps.clear();
        }
        const double threshold = epsilon * (1.0 + std::abs(row.phi_star));
        row.first_hit = first_hit_index(gaps, threshold);
        row.iters_to_eps = settled_index(gaps, threshold);
        row.saturated = row.iters_to_eps < 0;

        row.tau_h = compute_tau_h(prob, z0, z_star);
        if (options.compute_sh) row.lam_max_sh = sh_lambda_max(prob).value;
        row.seconds = options.timing ? seconds_since(t0) : 0.0;
        return row;
    };

    for (std::size_t i = 0; i < levels.size(); i += static_cast<std::size_t>(options.jobs)) {
        const std::size_t end = std::min(levels.size(), i + static_cast<std::size_t>(options.jobs));
        if (options.jobs == 1) {
            rep.rows.push_back(run_level(levels[i]));
            continue;
        }
        std::vector<std::future<MeshIndependenceRow>> batch;
        for (std::size_t j = i; j < end; ++j) batch.push_back(std::async(std::launch::async, run_level, levels[j]));
        for (auto& f : batch) rep.rows.push_back(f.get());
    }

    std::vector<double> iters;
    for (const auto& r : rep.rows) {
        if (r.saturated) rep.any_saturated = true;
        else iters.push_back(r.iters_to_eps);
    }
    if (!iters.empty()) {
        std::sort(iters.begin(), iters.end());
        const std::size_t m = iters.size();
        rep.median_iters = m % 2 ? iters[m / 2] : 0.5 * (iters[m / 2 - 1] + iters[m / 2]);
    }
    rep.within_band = !rep.any_saturated;
    for (const auto& r : rep.rows)
        if (!r.saturated && std::abs(r.iters_to_eps - rep.median_iters) > options.band * rep.median_iters)
            rep.within_band = false;
    return rep;
}

double approximate_continuous_tau(const Preset& preset, int fine_level, int coarse_level,
                                  const MeshIndependenceOptions& options)
{
    if (fine_level <= coarse_level) throw DomainError("approximate_continuous_tau: fine level must exceed coarse level");
    const Mesh coarse = build_unit_square_mesh(coarse_level);
    const Eigen::Index n0 = static_cast<Eigen::Index>(coarse.interior_nodes().size());
    const DualPoint z0c = options.coarse_start.value_or(DualPoint::zeros(n0));
    const ProblemInstance prob = instantiate(preset, fine_level, options.overrides);
    const DualPoint z0 = prolongate_dual(coarse, prob.ops().mesh(), z0c);
    const ReferencePoint ref = reference_run(prob, z0, options);
    return compute_tau_h(prob, z0, ref.z);
}

} // namespace pdeabcd
