#include <pdeabcd/io.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pdeabcd {
namespace {

using nlohmann::ordered_json;

ordered_json json_number(double v)
{
    if (std::isfinite(v)) return v;
    return format_double(v);
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string mesh_json(const Mesh& mesh)
{
    ordered_json j;
    j["level"] = mesh.level();
    auto& nodes = j["nodes"] = ordered_json::array();
    for (const auto& p : mesh.nodes()) nodes.push_back({p[0], p[1]});
    auto& tris = j["triangles"] = ordered_json::array();
    for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
    auto& bnd = j["boundary"] = ordered_json::array();
    for (bool b : mesh.boundary_mask()) bnd.push_back(b ? 1 : 0);
    return j.dump() + "\n";
}

std::string matrix_market(const SparseMatrix& a)
{
    std::ostringstream out;
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    for (Eigen::Index r = 0; r < a.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(a, r); it; ++it)
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
    return out.str();
}

std::string vector_text(const Vector& v)
{
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += format_double(v[i]) + "\n";
    return out;
}

std::string record_csv(const RunRecord& record, bool timing)
{
    std::string out = "k,phi,kkt,gap,time_s\n";
    for (const auto& r : record.rows) {
        out += std::to_string(r.k) + ',' + format_double(r.phi) + ',' + format_double(r.kkt) + ','
               + format_double(r.gap) + ',' + format_double(timing ? r.time_s : 0.0) + '\n';
    }
    return out;
}

std::string report_csv(const MeshIndependenceReport& report, bool timing)
{
    std::string out = "level,h,n_interior,iters_to_eps,first_hit,tau_h,lam_max_Sh,phi_star,phi_star_source,saturated,seconds\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.level) + ',' + format_double(r.h) + ',' + std::to_string(r.n_interior) + ','
               + std::to_string(r.iters_to_eps) + ',' + std::to_string(r.first_hit) + ',' + format_double(r.tau_h)
               + ',' + format_double(r.lam_max_sh) + ',' + format_double(r.phi_star) + ',' + r.phi_star_source
               + ',' + (r.saturated ? "1" : "0") + ',' + format_double(timing ? r.seconds : 0.0) + '\n';
    }
    return out;
}

std::string report_json(const MeshIndependenceReport& report, bool timing)
{
    ordered_json j;
    j["preset"] = report.preset;
    j["epsilon"] = report.epsilon;
    j["chain"] = report.chain;
    j["median_iters"] = report.median_iters;
    j["within_band"] = report.within_band;
    j["any_saturated"] = report.any_saturated;
    auto& rows = j["rows"] = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"level", r.level},
                        {"h", r.h},
                        {"n_interior", r.n_interior},
                        {"iters_to_eps", r.iters_to_eps},
                        {"first_hit", r.first_hit},
                        {"tau_h", json_number(r.tau_h)},
                        {"lam_max_Sh", json_number(r.lam_max_sh)},
                        {"phi_star", json_number(r.phi_star)},
                        {"phi_star_source", r.phi_star_source},
                        {"saturated", r.saturated},
                        {"seconds", timing ? r.seconds : 0.0}});
    }
    if (report.tau_fit) {
        j["tau_fit"] = {{"tau_proxy", report.tau_fit->tau_proxy},
                        {"C", report.tau_fit->C},
                        {"holds", report.tau_fit->holds},
                        {"worst_excess", json_number(report.tau_fit->worst_excess)}};
    }
    return j.dump(2) + "\n";
}

std::string spectral_json(const SpectralReport& report)
{
    ordered_json j;
    auto& rows = j["rows"] = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"level", r.level}, {"h", r.h}, {"n_interior", r.n_interior}, {"m_max_h2", r.m_max_h2},
                        {"m_min_h2", r.m_min_h2}, {"k_max", r.k_max}, {"k_min_h2", r.k_min_h2},
                        {"sh_max", r.sh_max}, {"sh_max_h2", r.sh_max_h2}});
    }
    j["window"] = report.window;
    j["m_max_spread"] = report.m_max_spread;
    j["m_min_spread"] = report.m_min_spread;
    j["sh_spread"] = report.sh_spread;
    j["k_max_finest_change"] = report.k_max_finest_change;
    j["m_window_ok"] = report.m_window_ok;
    j["k_bounded_ok"] = report.k_bounded_ok;
    j["sh_window_ok"] = report.sh_window_ok;
    j["sh_monotone_ok"] = report.sh_monotone_ok;
    return j.dump(2) + "\n";
}

std::string golden_json(const GoldenTable& table)
{
    ordered_json j = ordered_json::object();
    for (const auto& [key, e] : table) j[key] = {{"J_star", e.J_star}, {"iterations", e.iterations}, {"tol", e.tol}};
    return j.dump(2) + "\n";
}

GoldenTable read_golden(const std::filesystem::path& path)
{
    const auto j = nlohmann::json::parse(read_text_file(path));
    GoldenTable out;
    for (const auto& [key, v] : j.items())
        out[key] = GoldenEntry{v.at("J_star").get<double>(), v.at("iterations").get<int>(), v.at("tol").get<double>()};
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace pdeabcd
