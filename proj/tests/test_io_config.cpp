#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "test_support.hpp"

using namespace qsmass;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qsmass_io_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

const char* kMinimal = R"(
[metric]
r = 1.0
phi_harmonics = [[2, 2, 0.1]]

[H]
constant = 2.0
)";

}  // namespace

TEST(FormatDouble, SeventeenDigitsAndFloatMarker) {
  EXPECT_EQ(format_double(0.0), "0.0");
  EXPECT_EQ(format_double(1.0), "1.0");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1e-8), "1e-08");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "null");
}

TEST(Json, RoundTripIsBitwise) {
  Json j = Json::object();
  const std::vector<double> vals{0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.24999999999999994, 0.0};
  j["values"] = vals;
  j["nested"] = {{"x", std::nextafter(1.0, 2.0)}};
  const Json back = Json::parse(to_json_text(j));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double v = back["values"][i].get<double>();
    EXPECT_EQ(std::memcmp(&v, &vals[i], sizeof v), 0);
  }
  EXPECT_EQ(back["nested"]["x"].get<double>(), std::nextafter(1.0, 2.0));
  EXPECT_TRUE(back["values"][5].is_number_float());
}

TEST(Json, KeyOrderIsStable) {
  Json j = Json::object();
  j["zeta"] = 1.0;
  j["alpha"] = 2.0;
  const std::string text = to_json_text(j);
  EXPECT_LT(text.find("zeta"), text.find("alpha"));
}

TEST(Toml, ParsesTheSupportedSubset) {
  const Json j = parse_toml(R"(
# comment
title = "run" # trailing
[a.b]
x = 1
y = -2.5e-3
flag = true
list = [
  [1, 2, 3.0],   # row
  [4, 5, 6],
]
name = 'lit\eral'
big = 1_000
)");
  EXPECT_EQ(j["title"], "run");
  EXPECT_EQ(j["a"]["b"]["x"].get<int>(), 1);
  EXPECT_DOUBLE_EQ(j["a"]["b"]["y"].get<double>(), -2.5e-3);
  EXPECT_TRUE(j["a"]["b"]["flag"].get<bool>());
  EXPECT_EQ(j["a"]["b"]["list"].size(), 2u);
  EXPECT_EQ(j["a"]["b"]["list"][1][2].get<int>(), 6);
  EXPECT_EQ(j["a"]["b"]["name"], "lit\\eral");
  EXPECT_EQ(j["a"]["b"]["big"].get<int>(), 1000);
}

TEST(Toml, ReportsErrorsWithLine) {
  try {
    parse_toml("a = 1\nb = \n", "x.toml");
    FAIL();
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("x.toml:2"), std::string::npos);
  }
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ConfigurationError);
  EXPECT_THROW(parse_toml("a = \"open\n"), ConfigurationError);
  EXPECT_THROW(parse_toml("[[t]]\n"), ConfigurationError);
}

TEST(Config, DefaultsAndValidation) {
  const RunConfig c = config_from_tree(parse_toml(kMinimal));
  EXPECT_EQ(c.band_limit, 8);
  EXPECT_EQ(c.path_nodes, 17);
  EXPECT_EQ(c.family, "all");
  EXPECT_EQ(c.budget, 200);
  EXPECT_EQ(c.s_max, 1000.0);
  ASSERT_EQ(c.metric_field.harmonics.size(), 1u);
  EXPECT_EQ(c.metric_field.harmonics[0].im, 0.0);

  auto bad = [](const std::string& text) { return config_from_tree(parse_toml(text)); };
  EXPECT_THROW(bad("[H]\nconstant = 2.0\n"), ConfigurationError);
  EXPECT_THROW(bad("[metric]\nphi_harmonics = []\nK_target = [[0,0,1.0]]\n[H]\nconstant = 2.0\n"),
               ConfigurationError);
  EXPECT_THROW(bad("[metric]\nK_target = [[0,0,1.0]]\nr = 2.0\n[H]\nconstant = 2.0\n"), ConfigurationError);
  EXPECT_THROW(bad("[metric]\nphi_harmonics = []\n[H]\nconstant = 2.0\nharmonics = []\n"), ConfigurationError);
  EXPECT_THROW(bad(std::string(kMinimal) + "[numerics]\ngauge_tol = 0.0\n"), ConfigurationError);
  EXPECT_THROW(bad(std::string(kMinimal) + "[numerics]\nband_limit = 2\n"), ConfigurationError);
  EXPECT_THROW(bad(std::string(kMinimal) + "[reparam]\nfamily = \"spline\"\n"), ConfigurationError);
  EXPECT_THROW(bad(std::string(kMinimal) + "[extension]\ns_max = 10.0\n"), ConfigurationError);
  EXPECT_THROW(bad(std::string(kMinimal) + "[numerics]\ntypo = 1\n"), ConfigurationError);
}

TEST(Config, JsonAndTomlAgree) {
  const std::string tp = scratch("c.toml"), jp = scratch("c.json");
  write_text_file(tp, kMinimal);
  write_text_file(jp, R"({"metric": {"r": 1.0, "phi_harmonics": [[2, 2, 0.1]]}, "H": {"constant": 2.0}})");
  const Json a = config_to_json(load_config(tp)), b = config_to_json(load_config(jp));
  EXPECT_EQ(a["metric"], b["metric"]);
  EXPECT_EQ(a["numerics"], b["numerics"]);
  EXPECT_THROW(load_config(scratch("absent.toml")), ConfigurationError);
}

TEST(Config, RelativePathsResolveAgainstConfig) {
  const std::string p = scratch("rel.toml");
  write_text_file(p, "[metric]\nphi_grid_file = \"phi.csv\"\n[H]\nconstant = 2.0\n[output]\nreport = \"out.json\"\n");
  const RunConfig c = load_config(p);
  EXPECT_EQ(c.metric_field.file, scratch("phi.csv"));
  EXPECT_EQ(c.report_path, scratch("out.json"));
}

TEST(Csv, FieldRoundTrip) {
  auto g = SphereGrid::build(5);
  const ScalarField f = fixtures::random_phi(g, 5, 1.0, 1e9, 2);
  const std::string p = scratch("field.csv");
  write_field_csv(f, p);
  const ScalarField back = read_field_csv(g, p);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(back[i], f[i]);
  EXPECT_THROW(read_field_csv(SphereGrid::build(6), p), ConfigurationError);
}

TEST(Csv, Harmonics) {
  const std::string p = scratch("h.csv");
  write_text_file(p, "l,m,re,im\n0,0,1.5,0\n2,1,0.25,-0.5\n");
  const auto h = read_harmonics_csv(p);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[1].l, 2);
  EXPECT_EQ(h[1].im, -0.5);
  write_text_file(p, "a,b\n1,2\n");
  EXPECT_THROW(read_harmonics_csv(p), ConfigurationError);
}

TEST(Io, UnwritablePathIsIoError) {
  EXPECT_THROW(write_text_file("/nonexistent-dir/x/report.json", "{}"), IoError);
}

TEST(Pipeline, RoundReportKeysAndValues) {
  RunConfig c = config_from_tree(parse_toml("[metric]\nr = 1.0\nphi_harmonics = []\n[H]\nconstant = 1.4142135623730951\n"));
  c.budget = 30;
  const Json j = run_bound(c);
  const std::vector<std::string> keys{"r_gamma",      "area",         "kappa",      "zeta_upper",  "calH",
                                      "bound_theorem", "bound_half_r", "bound_best", "best_family", "best_params",
                                      "extension_mass", "tolerances", "config"};
  std::vector<std::string> got;
  for (auto it = j.begin(); it != j.end(); ++it) got.push_back(it.key());
  EXPECT_EQ(got, keys);
  EXPECT_NEAR(j["bound_theorem"].get<double>(), 0.25, 1e-8);
  EXPECT_NE(to_json_text(j).find("\"zeta_upper\": 0.0"), std::string::npos);
  EXPECT_TRUE(j["extension_mass"].is_null());
  EXPECT_LE(j["bound_best"].get<double>(), j["bound_theorem"].get<double>() + 1e-12);
  EXPECT_LE(j["bound_best"].get<double>(), j["bound_half_r"].get<double>() + 1e-12);
}

TEST(Pipeline, ReportsAreDeterministic) {
  RunConfig c = config_from_tree(parse_toml(kMinimal));
  c.budget = 40;
  EXPECT_EQ(to_json_text(run_bound(c)), to_json_text(run_bound(c)));
}

TEST(Pipeline, KTargetInput) {
  RunConfig c = config_from_tree(parse_toml("[metric]\nK_target = [[0, 0, 3.5449077018110318], [2, 0, 0.2]]\n"
                                            "[H]\nconstant = 2.0\n[reparam]\nbudget = 20\n"));
  const Json j = run_bound(c);
  EXPECT_LT(j["tolerances"]["uniformization_residual"].get<double>(), 1e-10);
  EXPECT_GT(j["zeta_upper"].get<double>(), 0.0);
  EXPECT_TRUE(j["kappa"].is_number());
}
