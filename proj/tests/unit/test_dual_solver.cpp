#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include <pdeabcd/dual_solver.hpp>
#include <pdeabcd/errors.hpp>
#include <pdeabcd/presets.hpp>

#include "dense_oracles.hpp"

using namespace pdeabcd;

namespace {

ProblemInstance sine(int level, PresetOverrides o = {}) { return instantiate(preset_by_name("sine"), level, o); }

DualPoint random_point(std::mt19937_64& rng, const ProblemInstance& prob)
{
    const Eigen::Index n = prob.size();
    return {oracle_ref::random_vector(rng, n, -prob.beta(), prob.beta()), oracle_ref::random_vector(rng, n),
            oracle_ref::random_vector(rng, n)};
}

// Phi_h with explicit dense inverses.
double dense_phi(const ProblemInstance& prob, const DualPoint& z)
{
    const Eigen::MatrixXd K(prob.ops().stiffness()), M(prob.ops().mass());
    const Vector r = K * z.p - M * prob.y_d();
    const Vector c = z.lambda + z.mu - z.p;
    const Vector xi = M * z.mu;
    double sigma = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) sigma += std::max(prob.box().lower * xi[i], prob.box().upper * xi[i]);
    return 0.5 * r.dot(M.inverse() * r) + 0.5 / prob.alpha() * c.dot(M * c) + (M * prob.y_r()).dot(z.p) + sigma
           - 0.5 * prob.y_d().dot(M * prob.y_d());
}

} // namespace

TEST(ProblemInstance, RejectsBadParameters)
{
    const auto preset = preset_by_name("sine");
    PresetOverrides o;
    o.alpha = 0.0;
    EXPECT_THROW(instantiate(preset, 2, o), DomainError);
    o = {};
    o.beta = -1.0;
    EXPECT_THROW(instantiate(preset, 2, o), DomainError);
    o = {};
    o.box = Box{0.5, 1.0};
    EXPECT_THROW(instantiate(preset, 2, o), DomainError);
    o = {};
    o.gamma = 3.0;
    EXPECT_THROW(instantiate(preset, 2, o), DomainError);
    EXPECT_THROW(instantiate(preset, 0), DomainError);
    EXPECT_THROW(preset_by_name("nope"), DomainError);
}

TEST(SupportFunction, Separable)
{
    Vector s(3);
    s << 1.0, -2.0, 0.0;
    EXPECT_DOUBLE_EQ(support_function(Box{-0.5, 2.0}, s), 2.0 + 1.0);
}

TEST(DualObjective, MatchesDenseEvaluation)
{
    const ProblemInstance prob = instantiate(preset_by_name("shifted"), 3);
    std::mt19937_64 rng(21);
    for (int t = 0; t < 10; ++t) {
        const DualPoint z = random_point(rng, prob);
        const double ref = dense_phi(prob, z);
        EXPECT_NEAR(dual_objective(prob, z), ref, 1e-11 * (1 + std::abs(ref)));
    }
}

TEST(DualObjective, InfiniteOutsideLambdaBox)
{
    const ProblemInstance prob = sine(2);
    DualPoint z = DualPoint::zeros(prob.size());
    z.lambda[0] = 2.0 * prob.beta();
    EXPECT_EQ(dual_objective(prob, z), std::numeric_limits<double>::infinity());
}

TEST(Steps, PhatSatisfiesFirstOrderCondition)
{
    const ProblemInstance prob = sine(3);
    const Eigen::MatrixXd K(prob.ops().stiffness()), M(prob.ops().mass());
    std::mt19937_64 rng(5);
    const DualPoint zt = random_point(rng, prob);
    const Vector p = step_phat(prob, zt);
    const Vector grad = K * M.inverse() * (K * p - M * prob.y_d()) + M * prob.y_r()
                        + (1.0 / prob.alpha()) * M * (p - zt.lambda - zt.mu);
    EXPECT_LE(grad.norm(), 1e-9 * (1 + (K * M.inverse() * K * p).norm()));
    EXPECT_LE((step_p(prob, zt, zt.lambda) - p).norm(), 1e-14 * (1 + p.norm()));
}

TEST(Steps, LambdaStaysInBoxAndMuMatchesFormula)
{
    const ProblemInstance prob = sine(2);
    std::mt19937_64 rng(6);
    const DualPoint zt = random_point(rng, prob);
    const Vector ph = step_phat(prob, zt);
    const Vector lam = step_lambda(prob, zt, ph);
    EXPECT_LE(lam.lpNorm<Eigen::Infinity>(), prob.beta());
    const Vector p = step_p(prob, zt, lam);
    const Vector mu = step_mu(prob, zt, lam, p);
    // xi = M mu solves min gamma/(2 alpha) |xi - v|^2_{W^-1} + sigma(xi): check the prox identity
    const Eigen::MatrixXd M(prob.ops().mass());
    const Vector W = prob.ops().lumped();
    const Vector v = M * zt.mu + W.cwiseProduct(p - lam - zt.mu) / prob.gamma();
    const Vector xi = M * mu;
    const double t = prob.alpha() / prob.gamma();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double wi = W[i];
        const double ref = oracle_ref::brute_force_argmin(
            [&](double x) {
                return 0.5 / (t * wi) * (x - v[i]) * (x - v[i])
                       + std::max(prob.box().lower * x, prob.box().upper * x);
            },
            v[i] - 10.0 * (1 + std::abs(v[i])), v[i] + 10.0 * (1 + std::abs(v[i])));
        EXPECT_NEAR(xi[i], ref, 1e-9 * (1 + std::abs(ref)));
    }
}

TEST(Momentum, GrowthAndLimit)
{
    double t = 1.0;
    for (int k = 1; k <= 10000; ++k) {
        EXPECT_GE(t, (k + 1) / 2.0 - 1e-12);
        const MomentumStep m = momentum(t);
        EXPECT_NEAR(m.t_next * m.t_next - m.t_next, t * t, 1e-9 * t * t);
        EXPECT_GE(m.beta, 0.0);
        EXPECT_LT(m.beta, 1.0);
        t = m.t_next;
        if (k == 10000) EXPECT_GT(m.beta, 0.999);
    }
    EXPECT_EQ(momentum(1.0).beta, 0.0);
}

TEST(Solve, ZeroPresetStopsAfterOneIteration)
{
    const ProblemInstance prob = instantiate(preset_by_name("zero"), 3);
    const RunRecord r = solve(prob, SolverConfig{});
    EXPECT_EQ(r.iterations, 1);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.final_kkt, 0.0);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].phi, 0.0);
}

TEST(Solve, ConvergesAndRecoversPrimal)
{
    const ProblemInstance prob = sine(3);
    SolverConfig cfg;
    cfg.tolerance = 1e-10;
    const RunRecord r = solve(prob, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.final_kkt, 1e-10);
    const Vector& u = r.primal.u;
    EXPECT_LE(u.maxCoeff(), prob.box().upper);
    EXPECT_GE(u.minCoeff(), prob.box().lower);
    EXPECT_NEAR(r.final_phi + primal_value(prob, u), 0.0, 1e-9);
    const Vector res = prob.ops().stiffness() * r.primal.y - prob.ops().mass() * (u + prob.y_r());
    EXPECT_LE(res.norm(), 1e-10);
    EXPECT_NEAR(kkt_residual(prob, r.final.current), r.final_kkt, 1e-15);
}

TEST(Solve, FullSizedVectorsAcceptedByKkt)
{
    const ProblemInstance prob = sine(2);
    const RunRecord r = solve(prob, SolverConfig{});
    const Mesh& m = prob.ops().mesh();
    const double a = kkt_residual(prob, r.final.current, r.primal.u_raw, r.primal.y_raw);
    const double b = kkt_residual(prob, r.final.current, expand_interior(m, r.primal.u_raw),
                                  expand_interior(m, r.primal.y_raw));
    EXPECT_DOUBLE_EQ(a, b);
}

TEST(Solve, Deterministic)
{
    const ProblemInstance prob = instantiate(preset_by_name("shifted"), 3);
    SolverConfig cfg;
    cfg.max_iters = 200;
    cfg.stop_on_tolerance = false;
    const RunRecord a = solve(prob, cfg);
    const RunRecord b = solve(prob, cfg);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].phi, b.rows[i].phi);
        EXPECT_EQ(a.rows[i].kkt, b.rows[i].kkt);
    }
}

TEST(Solve, LoggingCadence)
{
    const ProblemInstance prob = sine(2);
    SolverConfig cfg;
    cfg.max_iters = 25;
    cfg.stop_on_tolerance = false;
    cfg.log_every = 10;
    const RunRecord r = solve(prob, cfg);
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_EQ(r.rows[0].k, 1);
    EXPECT_EQ(r.rows[1].k, 11);
    EXPECT_EQ(r.rows[2].k, 21);
    EXPECT_EQ(r.rows[3].k, 25);
}

TEST(Solve, UnacceleratedReachesSameOptimum)
{
    const ProblemInstance prob = sine(3);
    SolverConfig cfg;
    cfg.tolerance = 1e-10;
    const RunRecord a = solve(prob, cfg);
    cfg.momentum = MomentumScheme::kNone;
    const RunRecord b = solve(prob, cfg);
    EXPECT_TRUE(b.converged);
    EXPECT_NEAR(a.final_phi, b.final_phi, 1e-10);
    // without momentum every step is a descent step of the majorized model
    for (std::size_t i = 1; i < b.rows.size(); ++i) EXPECT_LE(b.rows[i].phi, b.rows[i - 1].phi + 1e-15);
}

TEST(Solve, NonFiniteDataIsDivergence)
{
    const auto ops = assemble(std::make_shared<const Mesh>(build_unit_square_mesh(2)));
    Vector yd = Vector::Zero(ops->size());
    yd[0] = std::numeric_limits<double>::quiet_NaN();
    const ProblemInstance prob(ops, 1e-2, 1e-2, Box{-1, 1}, yd, Vector::Zero(ops->size()));
    try {
        solve(prob, SolverConfig{});
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.iteration(), 1);
        EXPECT_FALSE(e.dump().all_finite());
    } catch (const NumericError&) {
        // the augmented solve may flag the NaN residual first
    }
}

TEST(Solve, BadStartsAndConfigs)
{
    const ProblemInstance prob = sine(2);
    EXPECT_THROW(solve(prob, SolverConfig{}, DualPoint::zeros(3)), DomainError);
    DualPoint z = DualPoint::zeros(prob.size());
    z.lambda[0] = 1.0;
    EXPECT_THROW(solve(prob, SolverConfig{}, z), DomainError);
    SolverConfig cfg;
    cfg.tolerance = 0.0;
    EXPECT_THROW(solve(prob, cfg), DomainError);
    cfg = {};
    cfg.max_iters = 0;
    EXPECT_THROW(solve(prob, cfg), DomainError);
}

TEST(Solve, MinresPathMatchesDirect)
{
    PresetOverrides o;
    o.solver.kind = LinearSolverKind::kMinres;
    o.solver.solver_tol = 1e-12;
    const ProblemInstance a = sine(3);
    const ProblemInstance b = sine(3, o);
    SolverConfig cfg;
    cfg.tolerance = 1e-8;
    const RunRecord ra = solve(a, cfg);
    const RunRecord rb = solve(b, cfg);
    EXPECT_NEAR(ra.final_phi, rb.final_phi, 1e-9);
}
