#include <pdeabcd/dual_solver.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace pdeabcd {

namespace {

Vector clip(const Vector& v, double lo, double hi) { return v.cwiseMax(lo).cwiseMin(hi); }

Vector as_interior(const Mesh& mesh, const Vector& v)
{
    if (static_cast<std::size_t>(v.size()) == mesh.num_interior()) return v;
    return restrict_interior(mesh, v);
}

} // namespace

ProblemInstance::ProblemInstance(std::shared_ptr<const FemOperators> ops, double alpha, double beta, Box box,
                                 Vector y_d, Vector y_r, double gamma, AugmentedOptions solver)
    : ops_(std::move(ops)),
      alpha_(alpha),
      beta_(beta),
      box_(box),
      y_d_(std::move(y_d)),
      y_r_(std::move(y_r)),
      gamma_(gamma),
      solver_(solver)
{
    if (!ops_) throw DomainError("problem: null operators");
    if (!(alpha_ > 0.0) || !(beta_ >= 0.0)) throw DomainError("problem: need alpha > 0 and beta >= 0");
    if (!(box_.lower <= 0.0 && 0.0 <= box_.upper)) throw DomainError("problem: need a <= 0 <= b");
    if (!(gamma_ >= kGammaPlanar)) throw DomainError("problem: gamma below the planar lumping constant 4");
    if (y_d_.size() != ops_->size() || y_r_.size() != ops_->size()) {
        throw DomainError("problem: y_d and y_r must live on interior nodes");
    }
    if (ops_->size() == 0) throw DomainError("problem: mesh has no interior nodes");
    mass_y_d_ = ops_->mass() * y_d_;
    mass_y_r_ = ops_->mass() * y_r_;
    p_rhs_base_ = ops_->stiffness() * y_d_ - mass_y_r_;
    y_d_mass_norm2_ = y_d_.dot(mass_y_d_);
    augmented_ = ops_->augmented(alpha_, solver_);
}

DualPoint DualPoint::zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)}; }

bool DualPoint::all_finite() const { return lambda.allFinite() && p.allFinite() && mu.allFinite(); }

DualPoint operator-(const DualPoint& a, const DualPoint& b)
{
    return {a.lambda - b.lambda, a.p - b.p, a.mu - b.mu};
}

void SolverConfig::validate() const
{
    if (max_iters < 1) throw DomainError("solver: max_iters must be >= 1");
    if (!(tolerance > 0.0)) throw DomainError("solver: tolerance must be > 0");
    if (log_every < 1) throw DomainError("solver: log_every must be >= 1");
}

double support_function(const Box& box, const Vector& s)
{
    return box.upper * s.cwiseMax(0.0).sum() + box.lower * s.cwiseMin(0.0).sum();
}

double dual_objective(const ProblemInstance& prob, const DualPoint& z)
{
    if ((z.lambda.array().abs() > prob.beta()).any()) return std::numeric_limits<double>::infinity();
    const auto& ops = prob.ops();
    const Vector r = ops.stiffness() * z.p - prob.mass_y_d();
    const Vector coupling = z.lambda + z.mu - z.p;
    const Vector xi = ops.mass() * z.mu;
    return 0.5 * r.dot(ops.mass_factor().solve(r)) + coupling.dot(ops.mass() * coupling) / (2.0 * prob.alpha())
           + prob.mass_y_r().dot(z.p) + support_function(prob.box(), xi) - 0.5 * prob.y_d_mass_norm2();
}

Vector step_phat(const ProblemInstance& prob, const DualPoint& z_tilde)
{
    const Vector rhs = prob.p_rhs_base() + prob.ops().mass() * (z_tilde.lambda + z_tilde.mu) / prob.alpha();
    return prob.augmented().solve(rhs);
}

Vector step_lambda(const ProblemInstance& prob, const DualPoint& z_tilde, const Vector& p_hat)
{
    const auto& ops = prob.ops();
    const Vector shift = (ops.mass() * (p_hat - z_tilde.mu - z_tilde.lambda)).cwiseQuotient(ops.lumped());
    return clip(z_tilde.lambda + shift, -prob.beta(), prob.beta());
}

Vector step_p(const ProblemInstance& prob, const DualPoint& z_tilde, const Vector& lambda)
{
    const Vector rhs = prob.p_rhs_base() + prob.ops().mass() * (lambda + z_tilde.mu) / prob.alpha();
    return prob.augmented().solve(rhs);
}

Vector step_mu(const ProblemInstance& prob, const DualPoint& z_tilde, const Vector& lambda, const Vector& p)
{
    const auto& ops = prob.ops();
    const Vector& w = ops.lumped();
    const Vector v = ops.mass() * z_tilde.mu + w.cwiseProduct(p - lambda - z_tilde.mu) / prob.gamma();
    const Vector scale = (prob.alpha() / prob.gamma()) * w;
    const Vector xi = v - scale.cwiseProduct(clip(v.cwiseQuotient(scale), prob.box().lower, prob.box().upper));
    return ops.mass_factor().solve(xi);
}

MomentumStep momentum(double t)
{
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    return {t_next, (t - 1.0) / t_next};
}

RecoveredPrimal recover_primal(const ProblemInstance& prob, const DualPoint& z)
{
    const auto& ops = prob.ops();
    RecoveredPrimal out;
    out.u_raw = (z.p - z.lambda - z.mu) / prob.alpha();
    out.y_raw = ops.stiffness_factor().solve(ops.mass() * (out.u_raw + prob.y_r()));
    out.u = clip(out.u_raw, prob.box().lower, prob.box().upper);
    if (out.u == out.u_raw) {
        out.y = out.y_raw;
    } else {
        out.y = ops.stiffness_factor().solve(ops.mass() * (out.u + prob.y_r()));
    }
    return out;
}

double primal_value(const ProblemInstance& prob, const Vector& u)
{
    const auto& ops = prob.ops();
    const Vector y = ops.stiffness_factor().solve(ops.mass() * (u + prob.y_r()));
    const Vector e = y - prob.y_d();
    const Vector mu = ops.mass() * u;
    return 0.5 * e.dot(ops.mass() * e) + 0.5 * prob.alpha() * u.dot(mu) + prob.beta() * mu.cwiseAbs().sum();
}

double kkt_residual(const ProblemInstance& prob, const DualPoint& z_in, const Vector& u_in, const Vector& y_in)
{
    const auto& ops = prob.ops();
    const Mesh& mesh = ops.mesh();
    const Vector lambda = as_interior(mesh, z_in.lambda);
    const Vector p = as_interior(mesh, z_in.p);
    const Vector mu = as_interior(mesh, z_in.mu);
    const Vector u = as_interior(mesh, u_in);
    const Vector y = as_interior(mesh, y_in);
    const Vector& w = ops.lumped();

    const double adjoint =
        (ops.stiffness() * p - ops.mass() * (prob.y_d() - y)).norm() / (1.0 + prob.mass_y_d().norm());
    const Vector lam_test = clip(lambda + (ops.mass() * u).cwiseQuotient(w), -prob.beta(), prob.beta());
    const double lam_res = (lambda - lam_test).norm() / (1.0 + lambda.norm());
    const Vector u_test = clip(u + (ops.mass() * mu).cwiseQuotient(w), prob.box().lower, prob.box().upper);
    const double mu_res = (u - u_test).norm() / (1.0 + u.norm());
    return std::max({adjoint, lam_res, mu_res});
}

double kkt_residual(const ProblemInstance& prob, const DualPoint& z)
{
    const RecoveredPrimal primal = recover_primal(prob, z);
    return kkt_residual(prob, z, primal.u_raw, primal.y_raw);
}

RunRecord solve(const ProblemInstance& prob, const SolverConfig& config, const DualPoint& z0)
{
    config.validate();
    const Eigen::Index n = prob.size();
    if (z0.lambda.size() != n || z0.p.size() != n || z0.mu.size() != n) {
        throw DomainError("solve: starting point has the wrong size");
    }
    if ((z0.lambda.array().abs() > prob.beta()).any()) {
        throw DomainError("solve: starting lambda outside [-beta, beta]");
    }

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto seconds = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

    RunRecord record;
    DualIterate& it = record.final;
    it.current = z0;
    it.previous = z0;
    it.extrapolated = z0;
    it.t = 1.0;

    for (int k = 1; k <= config.max_iters; ++k) {
        it.k = k;
        const DualPoint& zt = it.extrapolated;
        DualPoint next;
        const Vector p_hat = step_phat(prob, zt);
        next.lambda = step_lambda(prob, zt, p_hat);
        next.p = step_p(prob, zt, next.lambda);
        next.mu = step_mu(prob, zt, next.lambda, next.p);
        if (!next.all_finite()) {
            throw DivergenceError("non-finite iterate at k = " + std::to_string(k), k, std::move(next));
        }
        it.previous = std::move(it.current);
        it.current = std::move(next);

        record.primal = recover_primal(prob, it.current);
        const double kkt = kkt_residual(prob, it.current, record.primal.u_raw, record.primal.y_raw);
        const bool done = config.stop_on_tolerance && kkt <= config.tolerance;
        const bool last = done || k == config.max_iters;
        record.iterations = k;
        record.final_kkt = kkt;

        if (last || (k - 1) % config.log_every == 0) {
            const double phi = dual_objective(prob, it.current);
            const double gap = phi + primal_value(prob, record.primal.u);
            if (!std::isfinite(phi)) {
                throw DivergenceError("non-finite dual objective at k = " + std::to_string(k), k, it.current);
            }
            record.rows.push_back({k, phi, kkt, gap, seconds()});
            record.final_phi = phi;
        }
        if (done) {
            record.converged = true;
            break;
        }

        double beta_k = 0.0;
        if (config.momentum == MomentumScheme::kAccelerated) {
            const MomentumStep m = momentum(it.t);
            it.t = m.t_next;
            beta_k = m.beta;
        }
        it.extrapolated.lambda = it.current.lambda + beta_k * (it.current.lambda - it.previous.lambda);
        it.extrapolated.p = it.current.p + beta_k * (it.current.p - it.previous.p);
        it.extrapolated.mu = it.current.mu + beta_k * (it.current.mu - it.previous.mu);
    }
    record.elapsed_s = seconds();
    return record;
}

RunRecord solve(const ProblemInstance& prob, const SolverConfig& config)
{
    return solve(prob, config, DualPoint::zeros(prob.size()));
}

} // namespace pdeabcd
