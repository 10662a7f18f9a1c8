#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <pdeabcd/errors.hpp>
#include <pdeabcd/io.hpp>
#include <pdeabcd/oracle.hpp>
#include <pdeabcd/presets.hpp>

#include "dense_oracles.hpp"

using namespace pdeabcd;

namespace {

ProblemInstance make(const char* name, int level) { return instantiate(preset_by_name(name), level); }

} // namespace

TEST(PrimalObjective, ZeroControlMatchesHandComputation)
{
    const ProblemInstance prob = make("sine", 2);
    const Eigen::MatrixXd M(prob.ops().mass());
    // y = 0 for u = 0 and y_r = 0
    const double ref = 0.5 * prob.y_d().dot(M * prob.y_d());
    EXPECT_NEAR(primal_objective(prob, Vector::Zero(prob.size())), ref, 1e-15);
}

TEST(PrimalObjective, LumpedDominatesMassCoupled)
{
    const ProblemInstance prob = make("shifted", 3);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const Vector u = oracle_ref::random_vector(rng, prob.size(), prob.box().lower, prob.box().upper);
        EXPECT_LE(primal_objective(prob, u), primal_objective(prob, u, L1Term::kLumped) + 1e-15);
        EXPECT_NEAR(primal_objective(prob, u), primal_value(prob, u), 1e-12);
    }
}

TEST(PrimalObjective, OutsideBoxIsDomainError)
{
    const ProblemInstance prob = make("sine", 2);
    Vector u = Vector::Zero(prob.size());
    u[0] = 1.5;
    EXPECT_THROW(primal_objective(prob, u), DomainError);
    EXPECT_THROW(primal_objective(prob, Vector::Zero(2)), SizeError);
}

TEST(Oracle, CapIsEnforced)
{
    const ProblemInstance prob = make("sine", 6);
    EXPECT_FALSE(within_oracle_cap(prob));
    EXPECT_THROW(admm_reference(prob), SizeError);
    EXPECT_TRUE(within_oracle_cap(make("sine", 5)));
}

TEST(Oracle, AdmmCertificateBracketsAndCloses)
{
    for (const char* name : {"sine", "shifted"}) {
        const ProblemInstance prob = make(name, 3);
        ReferenceOptions opts;
        opts.tol = 1e-12;
        const ReferenceSolution s = admm_reference(prob, opts);
        EXPECT_LE(s.lower_bound, s.upper_bound + 1e-15);
        EXPECT_LE(s.upper_bound - s.lower_bound, 1e-12 * (1 + std::abs(s.J)));
        EXPECT_GE(s.lower_bound, -s.J);
        EXPECT_NEAR(dense_dual_objective(prob, s.multipliers), s.upper_bound, 1e-14);
        EXPECT_NEAR(dual_objective(prob, s.multipliers), s.upper_bound, 1e-11);
        EXPECT_LE(s.multipliers.lambda.lpNorm<Eigen::Infinity>(), prob.beta());
    }
}

TEST(Oracle, CertifiedOptimumAgreesWithDualRun)
{
    const ProblemInstance prob = make("sine", 3);
    const CertifiedOptimum opt = certified_optimum(prob);
    EXPECT_EQ(opt.Phi_star, -opt.J_star);
    EXPECT_LE(opt.cross_check_diff, 1e-7 * (1 + std::abs(opt.J_star)));
    EXPECT_LE(opt.control_diff_mass, 1e-6);
    EXPECT_LE(opt.dual_kkt, 1e-10);
}

TEST(Oracle, FistaLumpedIsStationary)
{
    const ProblemInstance prob = make("shifted", 2);
    ReferenceOptions opts;
    opts.tol = 1e-9;
    const PrimalSolution s = fista_lumped(prob, opts);
    EXPECT_LE(s.residual, 1e-9);
    EXPECT_LE(s.u.maxCoeff(), prob.box().upper);
    EXPECT_GE(s.u.minCoeff(), prob.box().lower);
    // no feasible perturbation decreases the lumped objective
    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; ++t) {
        Vector u = s.u + 1e-3 * oracle_ref::random_vector(rng, prob.size());
        u = u.cwiseMax(prob.box().lower).cwiseMin(prob.box().upper);
        EXPECT_GE(primal_objective(prob, u, L1Term::kLumped), s.J - 1e-12);
    }
    // the mass-coupled optimum is no larger than the lumped one
    const ReferenceSolution m = admm_reference(prob);
    EXPECT_LE(m.J, s.J + 1e-12);
}

TEST(Oracle, ZeroPresetHasZeroOptimum)
{
    const ProblemInstance prob = make("zero", 2);
    const CertifiedOptimum opt = certified_optimum(prob);
    EXPECT_EQ(opt.J_star, 0.0);
    EXPECT_EQ(opt.u_star.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Oracle, MatchesGoldenTable)
{
    const GoldenTable golden = read_golden(std::string(PDEABCD_GOLDEN_DIR) + "/oracle_golden.json");
    ASSERT_FALSE(golden.empty());
    for (const auto& [key, entry] : golden) {
        const auto at = key.find('@');
        const ProblemInstance prob = instantiate(preset_by_name(key.substr(0, at)), std::stoi(key.substr(at + 1)));
        ReferenceOptions opts;
        opts.tol = entry.tol;
        const ReferenceSolution s = admm_reference(prob, opts);
        EXPECT_NEAR(s.J, entry.J_star, 1e-10 * (1 + std::abs(entry.J_star))) << key;
    }
}
