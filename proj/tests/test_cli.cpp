#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kConfig = SPDC_CONFIG_DIR "/paper_fig1.json";

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "spdc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = spdc::cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spdc_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path variant(const std::string& name, const std::function<void(nlohmann::json&)>& edit) {
  auto doc = nlohmann::json::parse(slurp(kConfig));
  doc["materials_file"] = SPDC_DATA_DIR "/materials.json";
  edit(doc);
  const fs::path p = scratch(name) / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST(Cli, PmWritesJson) {
  const auto dir = scratch("pm");
  const auto r = run({"pm", "--config", kConfig, "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "pm.json"));
  EXPECT_TRUE(j.contains("materials_version"));
  EXPECT_TRUE(j.contains("seed"));
  EXPECT_GT(j["idler_nm"].get<double>(), j["signal_nm"].get<double>());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"pm"}).code, 2);
  EXPECT_EQ(run({"pm", "--config", "/nonexistent/config.json"}).code, 2);
  EXPECT_EQ(run({"pm", "--config", kConfig, "--bogus"}).code, 2);
}

TEST(Cli, UnknownFieldIsConfigError) {
  const auto cfg = variant("unknown", [](auto& d) { d["phasematch"]["colour"] = "blue"; });
  const auto r = run({"pm", "--config", cfg.string(), "--out", cfg.parent_path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, NoPhaseMatchIsDomainError) {
  const auto cfg = variant("cutoff", [](auto& d) { d["phasematch"]["theta_p_deg"] = 32.0; });
  const auto r = run({"pm", "--config", cfg.string(), "--out", cfg.parent_path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("NoPhaseMatch"), std::string::npos);
}

TEST(Cli, SimulateAnalyzeByteIdentical) {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  for (const auto& d : {a, b}) {
    ASSERT_EQ(run({"simulate", "--config", kConfig, "--out", d.string(), "--seed", "17"}).code, 0);
    ASSERT_EQ(run({"analyze", "--config", kConfig, "--out", d.string(), "--seed", "17"}).code, 0);
  }
  for (const char* f : {"rates.csv", "records.json", "simulate.json", "analysis.json"}) {
    EXPECT_FALSE(slurp(a / f).empty()) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto c = scratch("sim_c");
  ASSERT_EQ(run({"simulate", "--config", kConfig, "--out", c.string(), "--seed", "18"}).code, 0);
  EXPECT_NE(slurp(a / "rates.csv"), slurp(c / "rates.csv"));
}

TEST(Cli, OptimizeReportFields) {
  const auto dir = scratch("opt");
  ASSERT_EQ(run({"optimize", "--config", kConfig, "--out", dir.string()}).code, 0);
  const auto j = nlohmann::json::parse(slurp(dir / "optimize.json"));
  for (const char* k : {"d_p_mm", "d_c_mm", "s_p", "s_c", "residual_grad"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Cli, SpectrumAndScanRepeatable) {
  const auto a = scratch("spec_a"), b = scratch("spec_b");
  for (const auto& d : {a, b}) {
    ASSERT_EQ(run({"spectrum", "--config", kConfig, "--out", d.string(), "--workers", "3"}).code, 0);
    ASSERT_EQ(run({"scan-length", "--config", kConfig, "--out", d.string()}).code, 0);
  }
  for (const char* f : {"spectrum_signal.csv", "spectrum_idler.csv", "spectrum.json", "scan.csv", "scan.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Cli, MissingRecordsIsConfigError) {
  const auto dir = scratch("norecords");
  EXPECT_EQ(run({"analyze", "--config", kConfig, "--out", dir.string()}).code, 2);
}
