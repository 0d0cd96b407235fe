#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "homog/cli.hpp"
#include "homog/io.hpp"
#include "support.hpp"

using namespace homog;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("homog_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "homog");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::run(int(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

std::string geom(const char* name) { return (testing_support::fixture_dir() / "geometry" / name).string(); }

}  // namespace

TEST(Json, SeventeenDigitFloats) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1.0");
  EXPECT_EQ(format_double(-1.0 / 3.0), "-0.33333333333333331");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(format_double(std::nan("")), "null");
  Json j;
  j["b"] = 0.5;
  j["a"] = Json::array({1, 2});
  j["s"] = "x\"y";
  EXPECT_EQ(dump_json(j), "{\n  \"b\": 0.5,\n  \"a\": [1, 2],\n  \"s\": \"x\\\"y\"\n}\n");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(Json::parse(format_double(v)).get<double>(), v);
}

TEST(Geometry, ParseAndRoundTrip) {
  const Geometry g = load_geometry(geom("disk25.json"));
  EXPECT_NEAR(g.area_E(), std::numbers::pi / 16.0, 1e-15);
  const auto spec = parse_geometry_spec(geometry_to_json(g.spec()));
  EXPECT_EQ(validate(spec).fingerprint(), g.fingerprint());
  const auto poly = parse_geometry_spec(Json::parse(
      R"({"delta":0.2,"E":[{"kind":"polygon","points":[[0.3,0.3],[0.6,0.3],[0.3,0.6]]},{"kind":"rect","lo":[0.65,0.65],"hi":[0.75,0.75]}],"F":[{"points":[[0.3,0.75],[0.5,0.75]]}]})"));
  EXPECT_EQ(poly.e_shapes.size(), 2u);
  EXPECT_EQ(validate(poly).fingerprint(), validate(parse_geometry_spec(geometry_to_json(poly))).fingerprint());
}

TEST(Geometry, ParseErrors) {
  EXPECT_THROW(parse_geometry_spec(Json::parse(R"({"E":[]})")), ParseError);
  EXPECT_THROW(parse_geometry_spec(Json::parse(R"({"delta":0.2,"E":[{"kind":"blob"}]})")), ParseError);
  EXPECT_THROW(parse_geometry_spec(Json::parse(R"({"delta":0.2,"E":[{"kind":"disk","center":[0.5],"radius":0.1}]})")),
               ParseError);
  EXPECT_THROW(parse_json_text("{", "inline"), ParseError);
  EXPECT_THROW(load_geometry("/nonexistent/geometry.json"), ParseError);
}

TEST(Files, AtomicWriteReplacesTarget) {
  TempDir d;
  const auto p = d.path / "out.json";
  write_atomic(p, "first");
  write_atomic(p, "second");
  EXPECT_EQ(read_file(p), "second");
  EXPECT_FALSE(fs::exists(d.path / "out.json.tmp"));
  EXPECT_THROW(write_atomic(d.path / "missing" / "x.json", "x"), ValidationError);
}

TEST(Lattice, SummaryCounts) {
  const Lattice L = build_lattice(testing_support::disk25(), 1, 16, BoundaryCondition::Periodic);
  const Json j = lattice_summary(L);
  EXPECT_EQ(j["bonds"].get<std::size_t>(), 512u);
  EXPECT_EQ(j["elastic"].get<std::size_t>() + j["breakable"].get<std::size_t>(), 512u);
  EXPECT_EQ(j["bc"], "periodic");
}

TEST(Fixture, RoundTrip) {
  const Fixture f = load_fixture(testing_support::fixture_dir() / "oracle" / "slit6.json");
  EXPECT_EQ(f.name, "slit6");
  EXPECT_EQ(f.expected.size(), 4u);
  const Fixture g = parse_fixture(Json::parse(dump_json(fixture_to_json(f))));
  EXPECT_EQ(dump_json(fixture_to_json(g)), dump_json(fixture_to_json(f)));
  EXPECT_EQ(dump_json(fixture_to_json(f)), read_file(testing_support::fixture_dir() / "oracle" / "slit6.json"));
}

TEST(Cli, NumberParsing) {
  EXPECT_EQ(cli::parse_list("1/2, 0.25,1/8"), (std::vector<double>{0.5, 0.25, 0.125}));
  EXPECT_EQ(cli::parse_xi("10,0").x, 10.0);
  EXPECT_THROW(cli::parse_xi("1"), ValidationError);
  EXPECT_THROW(cli::parse_list("1,x"), ValidationError);
  EXPECT_THROW(cli::parse_list("1/0"), ValidationError);
  EXPECT_THROW(cli::parse_int_list("1,2.5"), ValidationError);
}

TEST(Cli, CellTensorWritesSymmetricA0) {
  TempDir d;
  const auto out = d.path / "a0.json";
  ASSERT_EQ(run_cli({"cell-tensor", "--geom", geom("disk25.json"), "--m", "32", "--out", out.string()}), 0);
  const Json j = Json::parse(read_file(out));
  EXPECT_EQ(j["A0"][0][1], j["A0"][1][0]);
  EXPECT_EQ(j["m"], 32);
  EXPECT_TRUE(j.contains("area_E"));
  EXPECT_TRUE(j.contains("perim_E"));
}

TEST(Cli, FhomReportShapeAndCsv) {
  TempDir d;
  const auto out = d.path / "r.json", csv = d.path / "r.csv";
  ASSERT_EQ(run_cli({"fhom", "--geom", geom("disk25.json"), "--xi", "1,0", "--t", "1,2,4", "--m", "16", "--out",
                     out.string(), "--csv", csv.string()}),
            0);
  const Json j = Json::parse(read_file(out));
  EXPECT_EQ(j["records"].size(), 3u);
  const std::string c = read_file(csv);
  EXPECT_EQ(c.substr(0, c.find('\n')), "t_or_eps,g_hat_or_total,bulk,surface,crack_measure,n_bad");
  EXPECT_EQ(std::count(c.begin(), c.end(), '\n'), 4);
}

TEST(Cli, SweepProbeAppendixRun) {
  std::string out;
  ASSERT_EQ(run_cli({"sweep", "--geom", geom("disk25.json"), "--xi", "1,0", "--p", "0.5", "--eps", "1/2,1/4", "--m", "16"}, &out), 0);
  EXPECT_EQ(Json::parse(out)["trend"], "elastic-limit");
  ASSERT_EQ(run_cli({"probe-homogeneity", "--geom", geom("disk25.json"), "--lambda", "1,2", "--t", "1", "--m", "16"}, &out), 0);
  EXPECT_EQ(Json::parse(out)["rows"].size(), 2u);
  ASSERT_EQ(run_cli({"appendix", "--geom", geom("slit.json"), "--xi", "0,4", "--m", "24"}, &out), 0);
  EXPECT_EQ(Json::parse(out)["rows"].size(), 4u);
}

TEST(Cli, ExitCodes) {
  std::string err;
  EXPECT_EQ(run_cli({}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"bogus"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"cell-tensor", "--geom", geom("disk25.json"), "--m", "8"}, nullptr, &err), 2);
  EXPECT_NE(err.find("coarse"), std::string::npos);
  EXPECT_EQ(run_cli({"fhom", "--geom", geom("disk25.json"), "--xi", "1", "--m", "16"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"fhom", "--geom", "/nonexistent.json"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"fhom", "--geom", geom("disk25.json"), "--m", "16", "--starts", "0"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST(Cli, OracleCheckAndRegenerate) {
  TempDir d;
  const auto src = testing_support::fixture_dir() / "oracle" / "rect6.json";
  const auto copy = d.path / "rect6.json";
  Fixture f = load_fixture(src);
  f.expected.clear();
  write_atomic(copy, dump_json(fixture_to_json(f)));
  ASSERT_EQ(run_cli({"oracle", "--fixture", copy.string(), "--regen-oracle"}), 0);
  EXPECT_EQ(read_file(copy), read_file(src));
  std::string out;
  EXPECT_EQ(run_cli({"oracle", "--fixture", copy.string()}, &out), 0);
  EXPECT_EQ(Json::parse(out)["ok"], true);
  // A wrong frozen total is reported as a failed check.
  f = load_fixture(src);
  f.expected[0].total += 1.0;
  write_atomic(copy, dump_json(fixture_to_json(f)));
  EXPECT_EQ(run_cli({"oracle", "--fixture", copy.string()}, &out), 1);
}
