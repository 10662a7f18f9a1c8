#include <pdeabcd/oracle.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include <pdeabcd/errors.hpp>

namespace pdeabcd {
namespace {

// Dense copies of everything the oracle needs. Nothing here touches the
// sparse factorizations used by the dual solver.
struct DenseModel {
    DenseMatrix K;
    DenseMatrix M;
    Vector W;
    Eigen::LLT<DenseMatrix> K_llt;
    Eigen::LLT<DenseMatrix> M_llt;
    DenseMatrix S;  // K^{-1} M
    DenseMatrix Q;  // S^T M S + alpha M
    Vector q;       // S^T M (S y_r - y_d)
    Vector y_d;
    Vector y_r;
    double alpha;
    double beta;
    Box box;

    explicit DenseModel(const ProblemInstance& prob)
        : K(prob.ops().stiffness()), M(prob.ops().mass()), W(prob.ops().lumped()), y_d(prob.y_d()),
          y_r(prob.y_r()), alpha(prob.alpha()), beta(prob.beta()), box(prob.box())
    {
        K_llt.compute(K);
        M_llt.compute(M);
        if (K_llt.info() != Eigen::Success || M_llt.info() != Eigen::Success)
            throw DefinitenessError("oracle: dense Cholesky failed");
        S = K_llt.solve(M);
        const DenseMatrix MS = M * S;
        Q = S.transpose() * MS + alpha * M;
        Q = 0.5 * (Q + Q.transpose());
        q = MS.transpose() * (S * y_r - y_d);
    }

    Vector state(const Vector& u) const { return S * (u + y_r); }

    double objective(const Vector& u, L1Term term) const
    {
        const Vector y = state(u);
        const Vector e = y - y_d;
        const double l1 = term == L1Term::kMassCoupled ? (M * u).lpNorm<1>() : W.dot(u.cwiseAbs());
        return 0.5 * e.dot(M * e) + 0.5 * alpha * u.dot(M * u) + beta * l1;
    }

    double dual(const DualPoint& z) const
    {
        if ((z.lambda.array().abs() > beta).any()) return std::numeric_limits<double>::infinity();
        const Vector r = K * z.p - M * y_d;
        const Vector c = z.lambda + z.mu - z.p;
        const Vector xi = M * z.mu;
        return 0.5 * r.dot(M_llt.solve(r)) + 0.5 / alpha * c.dot(M * c) + (M * y_r).dot(z.p)
               + support_function(box, xi) - 0.5 * y_d.dot(M * y_d);
    }
};

void check_cap(const ProblemInstance& prob)
{
    if (!within_oracle_cap(prob))
        throw SizeError("oracle: " + std::to_string(prob.size()) + " interior nodes exceeds the dense cap of "
                        + std::to_string(kOracleMaxNodes));
}

void check_box(const ProblemInstance& prob, const Vector& u)
{
    if (u.size() != prob.size()) throw SizeError("oracle: control has wrong length");
    const Box& box = prob.box();
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (!box.contains(u[i])) throw DomainError("oracle: control leaves the box at node " + std::to_string(i));
}

double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

} // namespace

bool within_oracle_cap(const ProblemInstance& prob) noexcept { return prob.size() <= kOracleMaxNodes; }

double primal_objective(const ProblemInstance& prob, const Vector& u, L1Term term)
{
    check_cap(prob);
    check_box(prob, u);
    return DenseModel(prob).objective(u, term);
}

double dense_dual_objective(const ProblemInstance& prob, const DualPoint& z)
{
    check_cap(prob);
    const Eigen::Index n = prob.size();
    if (z.lambda.size() != n || z.p.size() != n || z.mu.size() != n)
        throw SizeError("oracle: dual point has wrong length");
    return DenseModel(prob).dual(z);
}

PrimalSolution fista_lumped(const ProblemInstance& prob, const ReferenceOptions& options)
{
    check_cap(prob);
    const DenseModel m(prob);
    const Eigen::Index n = prob.size();
    const Vector w_isqrt = m.W.cwiseSqrt().cwiseInverse();

    const auto est = power_iteration_extremes(
        [&](const Vector& x) -> Vector { return w_isqrt.cwiseProduct(m.Q * w_isqrt.cwiseProduct(x)); }, n, 500);
    const double step = 0.5 / est.value;
    const double thresh = step * m.beta;
    const Box& box = m.box;

    auto prox_grad = [&](const Vector& x) {
        const Vector g = x - step * (m.Q * x + m.q).cwiseQuotient(m.W);
        Vector out(n);
        for (Eigen::Index i = 0; i < n; ++i) out[i] = std::clamp(soft(g[i], thresh), box.lower, box.upper);
        return out;
    };

    Vector u = options.start.value_or(Vector::Zero(n)).cwiseMax(box.lower).cwiseMin(box.upper);
    if (u.size() != n) throw SizeError("fista_lumped: start has wrong length");
    Vector u_prev = u;
    Vector x = u;
    double t = 1.0;
    double f_prev = m.objective(u, L1Term::kLumped);

    PrimalSolution out;
    for (int k = 1; k <= options.max_iters; ++k) {
        const Vector u_next = prox_grad(x);
        const double f = m.objective(u_next, L1Term::kLumped);
        if (f > f_prev) {
            // objective went up: drop the momentum and retake a plain step
            t = 1.0;
            x = u;
            continue;
        }
        u_prev = u;
        u = u_next;
        f_prev = f;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        x = u + ((t - 1.0) / t_next) * (u - u_prev);
        t = t_next;

        const double res = (u - prox_grad(u)).lpNorm<Eigen::Infinity>() / step;
        out.iterations = k;
        out.residual = res;
        if (res <= options.tol) break;
    }
    if (out.residual > options.tol)
        throw OracleFailure("fista_lumped: no convergence in " + std::to_string(options.max_iters) + " iterations");
    out.u = u;
    out.y = m.state(u);
    out.J = m.objective(u, L1Term::kLumped);
    return out;
}

ReferenceSolution admm_reference(const ProblemInstance& prob, const ReferenceOptions& options)
{
    check_cap(prob);
    if (!(options.rho > 0.0)) throw DomainError("admm_reference: rho must be positive");
    const DenseModel m(prob);
    const Eigen::Index n = prob.size();
    const double rho = options.rho;
    const Box& box = m.box;

    const DenseMatrix A = m.W.cwiseInverse().asDiagonal() * m.M;  // W^{-1} M
    DenseMatrix H = m.Q + rho * (m.M * A);
    H.diagonal() += rho * m.W;
    H = 0.5 * (H + H.transpose());
    const Eigen::LLT<DenseMatrix> H_llt(H);
    if (H_llt.info() != Eigen::Success) throw DefinitenessError("admm_reference: u-system not SPD");

    Vector u = options.start.value_or(Vector::Zero(n));
    if (u.size() != n) throw SizeError("admm_reference: start has wrong length");
    Vector c = A * u;
    Vector v = u.cwiseMax(box.lower).cwiseMin(box.upper);
    Vector wc = Vector::Zero(n);
    Vector wv = Vector::Zero(n);

    ReferenceSolution best;
    best.lower_bound = -std::numeric_limits<double>::infinity();
    best.upper_bound = std::numeric_limits<double>::infinity();
    Vector v_checked = v;
    double step = std::numeric_limits<double>::infinity();
    const auto converged = [&] {
        return best.residual <= options.tol * (1.0 + std::abs(best.J))
               && step <= options.step_tol * (1.0 + v.lpNorm<Eigen::Infinity>());
    };

    for (int k = 1; k <= options.max_iters; ++k) {
        const Vector rhs = -m.q + rho * (m.M * (c - wc) + m.W.cwiseProduct(v - wv));
        u = H_llt.solve(rhs);
        const Vector Au = A * u;
        const Vector dc = Au + wc;
        for (Eigen::Index i = 0; i < n; ++i) c[i] = soft(dc[i], m.beta / rho);
        v = (u + wv).cwiseMax(box.lower).cwiseMin(box.upper);
        wc += Au - c;
        wv += u - v;

        if (k % 10 != 0 && k != options.max_iters) continue;

        const double J = m.objective(v, L1Term::kMassCoupled);
        best.lower_bound = std::max(best.lower_bound, -J);
        DualPoint z;
        z.lambda = (rho * wc).cwiseMax(-m.beta).cwiseMin(m.beta);
        z.mu = m.M_llt.solve(Vector(rho * m.W.cwiseProduct(wv)));
        z.p = m.K_llt.solve(Vector(m.M * (m.y_d - m.state(v))));
        const double phi = m.dual(z);
        if (phi < best.upper_bound) {
            best.upper_bound = phi;
            best.multipliers = z;
        }
        step = (v - v_checked).lpNorm<Eigen::Infinity>();
        v_checked = v;
        best.u = v;
        best.J = J;
        best.iterations = k;
        best.residual = best.upper_bound - best.lower_bound;
        if (converged()) break;
    }
    if (!converged())
        throw OracleFailure("admm_reference: certificate width " + std::to_string(best.residual) + ", control step "
                            + std::to_string(step) + " after " + std::to_string(options.max_iters) + " iterations");
    best.y = m.state(best.u);
    return best;
}

CertifiedOptimum certified_optimum(const ProblemInstance& prob, const CertifyOptions& options)
{
    ReferenceOptions ref;
    ref.tol = options.tol;
    const ReferenceSolution admm = admm_reference(prob, ref);

    CertifiedOptimum out;
    // -lower_bound is the smallest primal value seen, the tightest estimate of J*.
    out.J_star = -admm.lower_bound;
    out.Phi_star = admm.lower_bound;
    out.u_star = admm.u;
    out.z_oracle = admm.multipliers;
    out.certificate_width = admm.residual;
    out.oracle_iterations = admm.iterations;

    SolverConfig config;
    config.max_iters = options.dual_max_iters;
    config.tolerance = options.dual_tol;
    config.log_every = std::max(1, options.dual_max_iters);
    const RunRecord run = solve(prob, config);
    out.z_star = run.final.current;
    out.dual_iterations = run.iterations;
    out.dual_kkt = run.final_kkt;
    out.cross_check_diff = std::abs(dense_dual_objective(prob, out.z_star) - out.Phi_star);
    const Vector du = run.primal.u - out.u_star;
    out.control_diff_mass = std::sqrt(std::max(0.0, du.dot(prob.ops().mass() * du)));

    if (!(out.cross_check_diff <= options.cross_check_tol * (1.0 + std::abs(out.J_star))))
        throw OracleInconsistency("oracle and dual solver disagree: |Phi(z^K) - Phi*| = "
                                  + std::to_string(out.cross_check_diff));
    return out;
}

} // namespace pdeabcd
