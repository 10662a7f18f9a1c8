#include <pdeabcd/cli.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <pdeabcd/analysis.hpp>
#include <pdeabcd/dual_solver.hpp>
#include <pdeabcd/errors.hpp>
#include <pdeabcd/io.hpp>
#include <pdeabcd/mesh.hpp>
#include <pdeabcd/oracle.hpp>
#include <pdeabcd/presets.hpp>

namespace pdeabcd::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kMaxSolveLevel = 10;
constexpr int kMaxCheckLevel = 7;

// Thrown for argument combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemFlags {
    std::string preset = "sine";
    std::optional<double> alpha;
    std::optional<double> beta;
    std::vector<double> box;
    std::optional<double> gamma;
    bool minres = false;

    PresetOverrides overrides() const
    {
        PresetOverrides o;
        o.alpha = alpha;
        o.beta = beta;
        if (!box.empty()) {
            if (box.size() != 2) throw UsageError("--box expects two values a,b");
            o.box = Box{box[0], box[1]};
        }
        o.gamma = gamma;
        if (minres) o.solver.kind = LinearSolverKind::kMinres;
        return o;
    }
};

void add_problem_flags(CLI::App& app, ProblemFlags& f)
{
    app.add_option("--preset", f.preset, "zero, sine or shifted")->capture_default_str();
    app.add_option("--alpha", f.alpha, "Tikhonov weight");
    app.add_option("--beta", f.beta, "sparsity weight");
    app.add_option("--box", f.box, "control bounds a,b")->delimiter(',')->expected(2);
    app.add_option("--gamma", f.gamma)->group("");
    app.add_flag("--minres", f.minres, "iterative augmented solves");
}

void check_levels(const std::vector<int>& levels, int max_level)
{
    if (levels.empty()) throw UsageError("empty level list");
    for (int l : levels)
        if (l < 1 || l > max_level)
            throw UsageError("level " + std::to_string(l) + " outside [1, " + std::to_string(max_level) + "]");
}

ordered_json dual_point_json(const DualPoint& z)
{
    const auto arr = [](const Vector& v) {
        ordered_json a = ordered_json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::isfinite(v[i])) a.push_back(v[i]);
            else a.push_back(format_double(v[i]));
        }
        return a;
    };
    return {{"lambda", arr(z.lambda)}, {"p", arr(z.p)}, {"mu", arr(z.mu)}};
}

struct SolveFlags {
    ProblemFlags problem;
    int level = 3;
    double tol = 1e-6;
    std::optional<int> max_iters;
    int log_every = 1;
    std::string out = "run";
    bool check_bound = false;
    bool dump_mesh = false;
    bool dump_matrices = false;
    bool timing = false;
};

int run_solve(const SolveFlags& f, std::ostream& out)
{
    check_levels({f.level}, kMaxSolveLevel);
    if (!(f.tol > 0.0)) throw UsageError("--tol must be positive");
    const Preset preset = preset_by_name(f.problem.preset);
    const ProblemInstance prob = instantiate(preset, f.level, f.problem.overrides());
    const fs::path dir(f.out);

    SolverConfig config;
    config.tolerance = f.tol;
    config.log_every = f.log_every;
    if (f.check_bound) {
        if (!within_oracle_cap(prob))
            throw UsageError("--check-bound needs the dense oracle; level " + std::to_string(f.level) + " is too fine");
        config.max_iters = f.max_iters.value_or(2000);
        config.log_every = 1;
        config.stop_on_tolerance = false;
    } else {
        config.max_iters = f.max_iters.value_or(config.max_iters);
    }
    config.validate();

    if (f.dump_mesh) write_text_file(dir / "mesh.json", mesh_json(prob.ops().mesh()));
    if (f.dump_matrices) {
        write_text_file(dir / "K.mtx", matrix_market(prob.ops().stiffness()));
        write_text_file(dir / "M.mtx", matrix_market(prob.ops().mass()));
        write_text_file(dir / "W.txt", vector_text(prob.ops().lumped()));
    }

    RunRecord record;
    try {
        record = solve(prob, config);
    } catch (const DivergenceError& e) {
        ordered_json dump;
        dump["error"] = e.what();
        dump["iteration"] = e.iteration();
        dump["iterate"] = dual_point_json(e.dump());
        write_text_file(dir / "divergence.json", dump.dump(2) + "\n");
        out << "diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
        return kDivergence;
    }
    write_text_file(dir / "record.csv", record_csv(record, f.timing));

    const Vector& u = record.primal.u;
    Eigen::Index zeros = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (u[i] == 0.0) ++zeros;

    ordered_json summary;
    summary["preset"] = preset.name;
    summary["level"] = f.level;
    summary["h"] = prob.ops().mesh().h();
    summary["n_interior"] = prob.size();
    summary["alpha"] = prob.alpha();
    summary["beta"] = prob.beta();
    summary["box"] = {prob.box().lower, prob.box().upper};
    summary["gamma"] = prob.gamma();
    summary["tol"] = f.tol;
    summary["iterations"] = record.iterations;
    summary["converged"] = record.converged;
    summary["final_kkt"] = record.final_kkt;
    summary["final_phi"] = record.final_phi;
    const double J = primal_value(prob, u);
    summary["primal_value"] = J;
    summary["duality_gap"] = record.final_phi + J;
    summary["control_zero_fraction"] = u.size() ? double(zeros) / double(u.size()) : 0.0;
    summary["elapsed_s"] = record.elapsed_s;

    int code = kOk;
    if (f.check_bound) {
        const CertifiedOptimum opt = certified_optimum(prob);
        const double tau = compute_tau_h(prob, DualPoint::zeros(prob.size()), opt.z_star);
        const BoundCheck bc = verify_complexity_bound(record, tau, opt.Phi_star);
        summary["bound"] = {{"tau_h", tau},
                            {"phi_star", opt.Phi_star},
                            {"holds", bc.holds},
                            {"worst_margin", bc.worst_margin},
                            {"worst_k", bc.worst_k},
                            {"checked", bc.checked}};
        out << "bound " << (bc.holds ? "holds" : "FAILS") << " over " << bc.checked
            << " iterations, worst margin " << format_double(bc.worst_margin) << " at k=" << bc.worst_k << "\n";
        if (!bc.holds) code = kCriterionFailed;
    }
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    out << preset.name << " level " << f.level << ": " << record.iterations << " iterations, kkt "
        << format_double(record.final_kkt) << ", phi " << format_double(record.final_phi) << "\n";
    return code;
}

struct MeshIndepFlags {
    ProblemFlags problem;
    std::vector<int> levels{3, 4, 5, 6};
    double eps = 1e-6;
    int max_iters = 3000;
    int jobs = 1;
    std::optional<int> tau_proxy_level;
    std::string out = "mesh_indep";
    bool timing = false;
};

int run_mesh_indep(const MeshIndepFlags& f, std::ostream& out)
{
    check_levels(f.levels, kMaxSolveLevel);
    if (f.levels.size() < 3) throw UsageError("--levels needs at least 3 levels");
    if (!(f.eps > 0.0)) throw UsageError("--eps must be positive");
    if (f.jobs < 1) throw UsageError("--jobs must be at least 1");
    if (f.max_iters < 1) throw UsageError("--max-iters must be at least 1");
    const Preset preset = preset_by_name(f.problem.preset);

    MeshIndependenceOptions opts;
    opts.max_iters = f.max_iters;
    opts.jobs = f.jobs;
    opts.overrides = f.problem.overrides();
    opts.timing = f.timing;
    MeshIndependenceReport rep = mesh_independence_experiment(preset, f.levels, f.eps, opts);
    if (f.tau_proxy_level) {
        if (*f.tau_proxy_level <= f.levels.back()) throw UsageError("--tau-proxy-level must exceed every level");
        check_levels({*f.tau_proxy_level}, kMaxSolveLevel);
        const double proxy = approximate_continuous_tau(preset, *f.tau_proxy_level, f.levels.front(), opts);
        rep.tau_fit = fit_tau_bound(rep.rows, proxy);
    }

    const fs::path dir(f.out);
    write_text_file(dir / "report.csv", report_csv(rep, f.timing));
    write_text_file(dir / "report.json", report_json(rep, f.timing));

    for (const auto& r : rep.rows) {
        out << "level " << r.level << "  n=" << r.n_interior << "  iters=" << r.iters_to_eps
            << "  first_hit=" << r.first_hit << "  tau_h=" << format_double(r.tau_h)
            << (r.saturated ? "  SATURATED" : "") << "\n";
    }
    out << "median " << format_double(rep.median_iters) << ", within band: " << (rep.within_band ? "yes" : "no")
        << "\n";
    bool ok = rep.within_band && !rep.any_saturated;
    if (rep.tau_fit) {
        out << "tau proxy " << format_double(rep.tau_fit->tau_proxy) << ", C " << format_double(rep.tau_fit->C)
            << ", bound " << (rep.tau_fit->holds ? "holds" : "FAILS") << "\n";
        ok = ok && rep.tau_fit->holds;
    }
    return ok ? kOk : kCriterionFailed;
}

struct ChecksFlags {
    std::vector<int> levels{2, 3, 4};
    int samples = 1000;
    double gamma = kGammaPlanar;
    double alpha = 1e-2;
    std::optional<std::uint64_t> seed;
};

int run_checks(const ChecksFlags& f, std::ostream& out)
{
    check_levels(f.levels, kMaxCheckLevel);
    if (f.samples < 1) throw UsageError("--samples must be at least 1");
    std::vector<int> levels = f.levels;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    const std::uint64_t seed = f.seed.value_or(seed_from_env());

    bool all = true;
    const auto line = [&](const std::string& name, bool pass, const std::string& detail) {
        out << std::left << std::setw(10) << name << (pass ? "pass  " : "FAIL  ") << detail << "\n";
        all = all && pass;
    };

    for (int level : levels) {
        const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(level));
        const auto ops = assemble(mesh);
        const auto r = check_norm_equivalence(*ops, f.samples, f.gamma, seed + level);
        std::ostringstream d;
        d << "level " << level << ", W/M ratio in [" << format_double(r.min_ratio) << ", "
          << format_double(r.max_ratio) << "], violations " << r.lower_violations << "/" << r.upper_violations;
        line("lumping", r.lower_violations == 0 && r.upper_violations == 0, d.str());
    }

    const auto l1 = check_l1_consistency(levels, f.samples, seed);
    for (const auto& r : l1.rows) {
        std::ostringstream d;
        d << "level " << r.level << ", max ratio " << format_double(r.max_ratio) << " vs C "
          << format_double(l1.C) << ", negative " << r.negative;
        line("l1-gap", r.negative == 0 && r.max_ratio <= l1.C * (1.0 + 1e-12), d.str());
    }

    // S_h is only a majorizer for gamma >= 4; below that the spectral rows
    // still run with the planar constant and the S_h row is failed outright.
    const bool gamma_valid = f.gamma >= kGammaPlanar;
    const auto spectral = spectral_scaling_report(levels, f.alpha, gamma_valid ? f.gamma : kGammaPlanar, seed);
    {
        std::ostringstream d;
        d << "M/h^2 spreads " << format_double(spectral.m_max_spread) << ", " << format_double(spectral.m_min_spread)
          << " (window " << format_double(spectral.window) << ")";
        line("mass-h2", spectral.m_window_ok, d.str());
    }
    {
        std::ostringstream d;
        d << "lambda_max(K) change between finest levels " << format_double(spectral.k_max_finest_change);
        line("stiff-max", spectral.k_bounded_ok || levels.size() < 2, d.str());
    }
    {
        std::ostringstream d;
        d << "S_h/h^2 spread " << format_double(spectral.sh_spread) << ", monotone "
          << (spectral.sh_monotone_ok ? "yes" : "no");
        if (!gamma_valid) d << ", gamma " << format_double(f.gamma) << " below the lumping constant";
        line("Sh-h2", gamma_valid && spectral.sh_window_ok && spectral.sh_monotone_ok, d.str());
    }
    return all ? kOk : kCriterionFailed;
}

struct GoldenFlags {
    std::vector<std::string> presets{"zero", "sine", "shifted"};
    std::vector<int> levels{2, 3};
    std::string out = "oracle_golden.json";
};

int run_golden(const GoldenFlags& f, std::ostream& out)
{
    check_levels(f.levels, 5);
    GoldenTable table;
    const CertifyOptions co;
    for (const auto& name : f.presets) {
        const Preset preset = preset_by_name(name);
        for (int level : f.levels) {
            const ProblemInstance prob = instantiate(preset, level);
            const CertifiedOptimum opt = certified_optimum(prob, co);
            table[name + "@" + std::to_string(level)] = GoldenEntry{opt.J_star, opt.oracle_iterations, co.tol};
            out << name << "@" << level << ": J* = " << format_double(opt.J_star) << ", cross-check "
                << format_double(opt.cross_check_diff) << "\n";
        }
    }
    write_text_file(f.out, golden_json(table));
    return kOk;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag)
{
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

// `--config FILE` holds key=value lines mirroring the long flags. Keys already
// given on the command line are skipped, so flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args)
{
    std::vector<std::string> out;
    std::optional<std::string> file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            file = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
        } else {
            out.push_back(args[i]);
        }
    }
    if (!file) return out;
    std::ifstream in(*file);
    if (!in) throw UsageError("cannot read config file " + *file);
    const std::vector<std::string> given = out;
    for (const auto& item : CLI::ConfigINI().from_config(in)) {
        if (item.name.empty() || item.name == "++" || item.name == "--") continue;
        const std::string flag = "--" + item.name;
        if (has_flag(given, flag)) continue;
        if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
            if (item.inputs[0] == "true") out.push_back(flag);
            continue;
        }
        std::string joined;
        for (const auto& v : item.inputs) joined += (joined.empty() ? "" : ",") + v;
        out.push_back(flag + "=" + joined);
    }
    return out;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Dual ABCD solver for sparse elliptic optimal control", "pdeabcd"};
    app.require_subcommand(1);

    SolveFlags solve_flags;
    auto* solve_cmd = app.add_subcommand("solve", "solve one instance, write record.csv and summary.json");
    add_problem_flags(*solve_cmd, solve_flags.problem);
    solve_cmd->add_option("--level", solve_flags.level, "mesh level")->capture_default_str();
    solve_cmd->add_option("--tol", solve_flags.tol, "relative KKT tolerance")->capture_default_str();
    solve_cmd->add_option("--max-iters", solve_flags.max_iters, "iteration cap");
    solve_cmd->add_option("--log-every", solve_flags.log_every)->capture_default_str();
    solve_cmd->add_option("--out", solve_flags.out, "output directory")->capture_default_str();
    solve_cmd->add_flag("--check-bound", solve_flags.check_bound, "verify the O(1/k^2) bound against the oracle");
    solve_cmd->add_flag("--dump-mesh", solve_flags.dump_mesh);
    solve_cmd->add_flag("--dump-matrices", solve_flags.dump_matrices);
    solve_cmd->add_flag("--timing", solve_flags.timing, "write wall time into the CSV");

    MeshIndepFlags mi_flags;
    auto* mi_cmd = app.add_subcommand("mesh-indep", "iterations-to-eps across refinement levels");
    add_problem_flags(*mi_cmd, mi_flags.problem);
    mi_cmd->add_option("--levels", mi_flags.levels)->delimiter(',');
    mi_cmd->add_option("--eps", mi_flags.eps, "relative gap threshold")->capture_default_str();
    mi_cmd->add_option("--max-iters", mi_flags.max_iters)->capture_default_str();
    mi_cmd->add_option("--jobs", mi_flags.jobs, "levels run concurrently")->capture_default_str();
    mi_cmd->add_option("--tau-proxy-level", mi_flags.tau_proxy_level, "fine level for the tau proxy");
    mi_cmd->add_option("--out", mi_flags.out)->capture_default_str();
    mi_cmd->add_flag("--timing", mi_flags.timing);

    ChecksFlags checks_flags;
    auto* checks_cmd = app.add_subcommand("checks", "matrix, norm and spectral property suites");
    checks_cmd->add_option("--levels", checks_flags.levels)->delimiter(',');
    checks_cmd->add_option("--samples", checks_flags.samples)->capture_default_str();
    checks_cmd->add_option("--alpha", checks_flags.alpha)->capture_default_str();
    checks_cmd->add_option("--seed", checks_flags.seed);
    checks_cmd->add_option("--gamma", checks_flags.gamma)->group("");

    GoldenFlags golden_flags;
    auto* golden_cmd = app.add_subcommand("golden", "write oracle reference values");
    golden_cmd->add_option("--presets", golden_flags.presets)->delimiter(',');
    golden_cmd->add_option("--levels", golden_flags.levels)->delimiter(',');
    golden_cmd->add_option("--out", golden_flags.out)->capture_default_str();

    try {
        const std::vector<std::string> expanded = expand_config(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*solve_cmd) return run_solve(solve_flags, out);
        if (*mi_cmd) return run_mesh_indep(mi_flags, out);
        if (*checks_cmd) return run_checks(checks_flags, out);
        if (*golden_cmd) return run_golden(golden_flags, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const SizeError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << "\n";
        return kDivergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

} // namespace pdeabcd::cli
