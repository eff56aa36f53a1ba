// Drives the lumen binary as a subprocess.
#include <gtest/gtest.h>

#include <map>
#include <string>

#include "city_json.hpp"
#include "json.hpp"
#include "support.hpp"

namespace {

using lumen::testing::quote;
using lumen::testing::read_text;
using lumen::testing::RunResult;
using lumen::testing::TempDir;
using lumen::testing::write_text;
using nlohmann::json;

const std::string kLumen = LUMEN_CLI_PATH;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    write_text(dir_ / "city.json", lumen::testing::kCityJson);
    ASSERT_EQ(lumen("synth --spec " + quote(dir_ / "city.json") + " --out " + quote(dir_ / "pois.csv")).exit_code, 0);
  }

  RunResult lumen(const std::string& args) { return lumen::testing::run(quote(kLumen) + " " + args); }
  RunResult in_ws(const std::string& args) { return lumen(args + " -w " + quote(ws())); }
  std::filesystem::path ws() const { return dir_ / "ws"; }

  void run_pipeline() {
    for (const std::string cmd : {"ingest --poi " + quote(dir_ / "pois.csv"), std::string("assess"),
                                  std::string("cluster --seed 3"), std::string("dml --category grass")}) {
      const auto r = in_ws(cmd);
      ASSERT_EQ(r.exit_code, 0) << cmd << ": " << r.err;
    }
  }

  std::string first_area() {
    const auto idx = read_text(ws() / "indices.csv");
    const auto row = idx.substr(idx.find('\n') + 1);
    return row.substr(0, row.find(','));
  }

  TempDir dir_;
};

TEST(CliBasics, VersionAndUsage) {
  const auto v = lumen::testing::run(quote(kLumen) + " --version");
  EXPECT_EQ(v.exit_code, 0);
  EXPECT_NE(v.out.find("0.3.0"), std::string::npos);
  EXPECT_NE(lumen::testing::run(quote(kLumen)).exit_code, 0);
  EXPECT_NE(lumen::testing::run(quote(kLumen) + " frobnicate").exit_code, 0);
}

TEST(CliBasics, LossSelfTest) {
  const auto r = lumen::testing::run(quote(kLumen) + " losses --selftest --points 20");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_FALSE(r.out.empty());
}

TEST_F(Cli, FullPipeline) {
  run_pipeline();
  for (const char* f : {"manifest.json", "pois.csv", "areas.json", "indices.csv", "levels.json", "ate.csv"})
    EXPECT_TRUE(std::filesystem::exists(ws() / f)) << f;

  write_text(dir_ / "spec.json", R"({"actions":[{"op":"scale_ntl","category":"grass","factor":0.5}]})");
  const auto w = in_ws("whatif --spec " + quote(dir_ / "spec.json"));
  ASSERT_EQ(w.exit_code, 0) << w.err;
  EXPECT_EQ(w.out, read_text(ws() / "whatif.json"));
  EXPECT_TRUE(json::parse(w.out).contains("kl"));
  const auto q = in_ws("whatif -q --spec " + quote(dir_ / "spec.json"));
  EXPECT_EQ(q.exit_code, 0);
  EXPECT_TRUE(q.out.empty());

  const std::string area = first_area();
  const auto r = in_ws("render --size 32 --area " + area);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto ppm = read_text(ws() / "maps" / (area + ".ppm"));
  EXPECT_EQ(ppm.rfind("P6\n32 32\n255\n", 0), 0u);
  EXPECT_EQ(ppm.size(), 13u + 32 * 32 * 3);

  const auto p = in_ws("plots --area " + area);
  ASSERT_EQ(p.exit_code, 0) << p.err;
  EXPECT_TRUE(json::parse(read_text(ws() / "plots" / (area + ".json"))).contains("plots"));

  const auto m = lumen("metrics --a " + quote(ws() / "maps" / (area + ".ppm")) + " --b " +
                       quote(ws() / "maps" / (area + ".ppm")));
  ASSERT_EQ(m.exit_code, 0) << m.err;
  const auto mj = json::parse(m.out);
  EXPECT_EQ(mj["mae"], 0.0);
  EXPECT_EQ(mj["psnr"], "inf");
}

TEST_F(Cli, HoldoutDiagnostics) {
  run_pipeline();
  const auto r = in_ws("dml --category grass --split 0.6:0.2:0.2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(read_text(ws() / "dml_diagnostics.json"))["grass"]["split"], json({0.6, 0.2, 0.2}));
  const auto bad = in_ws("dml --category grass --split 0.6:0.4");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_NE(bad.err.find("--split expects three ratios"), std::string::npos);
}

TEST_F(Cli, WorkspaceFromEnvironment) {
  ASSERT_EQ(in_ws("ingest --poi " + quote(dir_ / "pois.csv")).exit_code, 0);
  const auto r = lumen::testing::run("LUMEN_WORKSPACE=" + quote(ws()) + " " + quote(kLumen) + " assess");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(ws() / "indices.csv"));
}

TEST_F(Cli, ErrorsGoToStderrWithExitCodes) {
  const auto none = lumen::testing::run("env -u LUMEN_WORKSPACE " + quote(kLumen) + " assess");
  EXPECT_EQ(none.exit_code, 2);
  EXPECT_EQ(none.err, "lumen: error: no workspace given; use --workspace or LUMEN_WORKSPACE\n");

  std::filesystem::create_directories(ws());
  const auto missing = in_ws("ingest --poi " + quote(dir_ / "absent.csv"));
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_EQ(missing.err.rfind("lumen: error: ", 0), 0u);

  const auto early = in_ws("assess");
  EXPECT_EQ(early.exit_code, 1);
  EXPECT_EQ(early.err, "lumen: error: pois.csv not found\n");

  write_text(dir_ / "broken.csv", "id,lon,lat,category,ntl\nx,1,2,volcano,3\n");
  const auto broken = in_ws("ingest --poi " + quote(dir_ / "broken.csv"));
  EXPECT_EQ(broken.exit_code, 1);
  EXPECT_NE(broken.err.find("volcano"), std::string::npos) << broken.err;
}

TEST_F(Cli, StaleArtifactsAreRefused) {
  run_pipeline();
  write_text(dir_ / "city.json", std::string(lumen::testing::kCityJson).replace(9, 1, "8"));
  ASSERT_EQ(lumen("synth --spec " + quote(dir_ / "city.json") + " --out " + quote(dir_ / "pois.csv")).exit_code, 0);
  ASSERT_EQ(in_ws("ingest --poi " + quote(dir_ / "pois.csv")).exit_code, 0);
  const auto r = in_ws("cluster");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("is stale"), std::string::npos) << r.err;
  EXPECT_EQ(in_ws("assess").exit_code, 0);
  EXPECT_EQ(in_ws("cluster").exit_code, 0);
}

TEST_F(Cli, OutOfBandEditIsDetected) {
  run_pipeline();
  write_text(ws() / "indices.csv", read_text(ws() / "indices.csv") + "\n");
  const auto r = in_ws("cluster");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.err, "lumen: error: indices.csv was modified outside the pipeline\n");
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  run_pipeline();
  std::map<std::string, std::string> first;
  for (const auto& e : std::filesystem::directory_iterator(ws()))
    if (e.is_regular_file() && e.path().filename() != ".lock") first[e.path().filename()] = read_text(e.path());
  std::filesystem::remove_all(ws());
  run_pipeline();
  for (const auto& [name, bytes] : first) EXPECT_EQ(read_text(ws() / name), bytes) << name;
}

}  // namespace
