#include <gtest/gtest.h>

#include <filesystem>

#include <json.hpp>

#include <pdeabcd/io.hpp>
#include <pdeabcd/presets.hpp>

using namespace pdeabcd;

TEST(Format, RoundTrips)
{
    for (double v : {0.0, 1.0, -0.1, 1e-300, 0.1 + 0.2, 123456.789})
        EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(MeshJson, CarriesAllFields)
{
    const Mesh m = build_unit_square_mesh(1);
    const auto j = nlohmann::json::parse(mesh_json(m));
    EXPECT_EQ(j["level"], 1);
    EXPECT_EQ(j["nodes"].size(), 9u);
    EXPECT_EQ(j["triangles"].size(), 8u);
    EXPECT_EQ(j["boundary"].size(), 9u);
    EXPECT_EQ(j["boundary"][4], 0);
}

TEST(MatrixMarket, HeaderAndEntries)
{
    const SparseMatrix a = finalize_sparse(2, 2, {{0, 0, 2.0}, {1, 0, -1.0}});
    EXPECT_EQ(matrix_market(a), "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2\n2 1 -1\n");
}

TEST(RecordCsv, TimeColumnZeroWithoutTiming)
{
    RunRecord r;
    r.rows.push_back({1, -0.5, 0.25, 1e-3, 3.7});
    EXPECT_EQ(record_csv(r, false), "k,phi,kkt,gap,time_s\n1,-0.5,0.25,0.001,0\n");
    EXPECT_EQ(record_csv(r, true), "k,phi,kkt,gap,time_s\n1,-0.5,0.25,0.001,3.7\n");
}

TEST(ReportCsv, Columns)
{
    MeshIndependenceReport rep;
    MeshIndependenceRow row;
    row.level = 3;
    row.h = 0.25;
    row.n_interior = 49;
    row.iters_to_eps = 12;
    row.first_hit = 7;
    row.phi_star_source = "oracle";
    rep.rows.push_back(row);
    const std::string csv = report_csv(rep, false);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "level,h,n_interior,iters_to_eps,first_hit,tau_h,lam_max_Sh,phi_star,phi_star_source,saturated,seconds");
    EXPECT_NE(csv.find("3,0.25,49,12,7,0,0,0,oracle,0,0"), std::string::npos);
    const auto j = nlohmann::json::parse(report_json(rep, false));
    EXPECT_EQ(j["rows"][0]["iters_to_eps"], 12);
}

TEST(Golden, WriteReadRoundTrip)
{
    const auto dir = std::filesystem::temp_directory_path() / "pdeabcd_io_test";
    GoldenTable t;
    t["sine@2"] = {0.1234567890123, 60, 1e-12};
    write_text_file(dir / "g.json", golden_json(t));
    const GoldenTable back = read_golden(dir / "g.json");
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back.at("sine@2").J_star, 0.1234567890123);
    EXPECT_EQ(back.at("sine@2").iterations, 60);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(read_text_file(dir / "missing"), std::runtime_error);
}
