#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "iogears/scenario.hpp"

using namespace iogears;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json::parse(R"({
    "volumes": [{
      "id": "a",
      "policy": {"kind": "static", "cap": 1100},
      "synthetic": {"phases": [{"duration": 10, "target_iops": 800}]}
    }]
  })");
}

std::string error_path(const json& doc, const fs::path& base = ".") {
  try {
    scenario_from_json(doc, base);
  } catch (const ConfigError& e) {
    return e.field_path();
  }
  return "<no error>";
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("iogears_scenario_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
    return p;
  }
  fs::path dir_;
};

}  // namespace

TEST(Scenario, MinimalConfigAppliesDefaults) {
  const Scenario s = scenario_from_json(minimal());
  ASSERT_EQ(s.volumes.size(), 1u);
  EXPECT_EQ(s.volumes[0].policy, PolicyConfig(StaticPolicy{1100}));
  EXPECT_EQ(s.volumes[0].size_gb, 100);
  EXPECT_FALSE(s.abandonment.enabled);
  EXPECT_EQ(s.abandonment.threshold_s, 1.0);
  EXPECT_EQ(s.pricing, PriceBook{});
  EXPECT_EQ(s.reports, kDefaultReports);
  EXPECT_EQ(s.seed, 1u);
}

TEST(Scenario, GStatesDefaults) {
  json doc = minimal();
  doc["volumes"][0]["policy"] = {{"kind", "gstates"}, {"baseline_iops", 600}};
  const auto& p = std::get<GStatesPolicy>(scenario_from_json(doc).volumes[0].policy);
  EXPECT_EQ(p.num_levels, 4);
  EXPECT_EQ(p.promote_threshold_factor, 0.95);
  EXPECT_EQ(p.util_threshold, 0.9);
  EXPECT_EQ(p.io_type, IoType::total);
  EXPECT_FALSE(p.pool_mode);
}

TEST(Scenario, MissingBaselineNamesField) {
  json doc = minimal();
  doc["volumes"][0]["policy"] = {{"kind", "gstates"}, {"num_levels", 4}};
  EXPECT_EQ(error_path(doc), "volumes[0].policy.baseline_iops");
}

TEST(Scenario, SchemaViolationsNameFields) {
  json doc = minimal();
  doc["volumes"][0]["policy"]["kind"] = "token";
  EXPECT_EQ(error_path(doc), "volumes[0].policy.kind");

  doc = minimal();
  doc["volumes"][0]["policy"]["capp"] = 3;
  EXPECT_EQ(error_path(doc), "volumes[0].policy.capp");

  doc = minimal();
  doc["device"] = {{"max_read_iops", 1}, {"max_write_iops", 1}, {"max_read_bw", 1}};
  EXPECT_EQ(error_path(doc), "device.max_write_bw");

  doc = minimal();
  doc["volumes"][0]["synthetic"]["phases"][0]["duration"] = -3;
  EXPECT_EQ(error_path(doc), "volumes[0].synthetic.phases[0].duration");

  doc = minimal();
  doc["volumes"].push_back(doc["volumes"][0]);
  EXPECT_EQ(error_path(doc), "volumes[1].id");

  doc = minimal();
  doc["reports"] = {"bills", "plots"};
  EXPECT_EQ(error_path(doc), "reports[1]");

  doc = minimal();
  doc["volumes"][0]["policy"] = {{"kind", "gstates"}, {"baseline_iops", 600}, {"num_levels", 0}};
  EXPECT_EQ(error_path(doc), "volumes[0].policy.num_levels");

  doc = minimal();
  doc["volumes"][0]["policy"] = {{"kind", "leaky_bucket"}, {"baseline_iops", 500}, {"burst_iops", 100}};
  EXPECT_EQ(error_path(doc), "volumes[0].policy.burst_iops");

  doc = minimal();
  doc.erase("volumes");
  EXPECT_EQ(error_path(doc), "volumes");

  doc = minimal();
  doc["volumes"][0].erase("synthetic");
  EXPECT_EQ(error_path(doc), "volumes[0].trace");

  doc = minimal();
  doc["extra"] = 1;
  EXPECT_EQ(error_path(doc), "extra");
}

TEST(Scenario, LeakyBucketDefaultsFromSize) {
  json doc = minimal();
  doc["volumes"][0]["size_gb"] = 200;
  doc["volumes"][0]["policy"] = {{"kind", "leaky_bucket"}};
  const auto& p = std::get<LeakyBucketPolicy>(scenario_from_json(doc).volumes[0].policy);
  EXPECT_EQ(p.baseline_iops, 600);
  EXPECT_EQ(p.burst_iops, 3000);
  EXPECT_EQ(p.max_balance, 5.4e6);
  EXPECT_EQ(p.initial_balance, 0);
}

TEST(Scenario, BurstyPresetVariants) {
  json doc = minimal();
  doc["variants"] = {
      {"static", {{"kind", "static"}, {"cap", 1100}}},
      {"leaky_bucket", {{"kind", "leaky_bucket"}, {"baseline_iops", 1100}}},
      {"gstates", {{"kind", "gstates"}, {"baseline_iops", 600}, {"num_levels", 4}}}};
  const Scenario s = scenario_from_json(doc);
  const auto st = engine_config(s, "static");
  const auto lb = engine_config(s, "leaky_bucket");
  const auto gs = engine_config(s, "gstates");
  EXPECT_EQ(st.volumes[0].policy, PolicyConfig(StaticPolicy{1100}));
  EXPECT_EQ(std::get<LeakyBucketPolicy>(lb.volumes[0].policy).baseline_iops, 1100);
  EXPECT_EQ(GearTable(std::get<GStatesPolicy>(gs.volumes[0].policy).baseline_iops, 4).caps(),
            (std::vector<double>{600, 1200, 2400, 4800}));
  // comparable: same device, volumes, pricing; only the policy differs
  EXPECT_EQ(st.device, gs.device);
  EXPECT_EQ(st.volumes[0].id, lb.volumes[0].id);
  EXPECT_THROW(engine_config(s, "nope"), ConfigError);
}

TEST(Scenario, PercentileParameters) {
  json doc = minimal();
  doc["volumes"][0]["synthetic"]["phases"] = {{{"duration", 90}, {"target_iops", 100}},
                                              {{"duration", 10}, {"target_iops", 900}}};
  doc["volumes"][0]["policy"] = {{"kind", "static"}, {"cap_percentile", 90}};
  EXPECT_EQ(std::get<StaticPolicy>(scenario_from_json(doc).volumes[0].policy).cap, 100);
  doc["volumes"][0]["policy"] = {{"kind", "gstates"}, {"baseline_iops_percentile", 95}};
  EXPECT_EQ(std::get<GStatesPolicy>(scenario_from_json(doc).volumes[0].policy).baseline_iops, 900);
  doc["volumes"][0]["policy"] = {{"kind", "static"}, {"cap_percentile", 90}, {"cap", 5}};
  EXPECT_EQ(error_path(doc), "volumes[0].policy.cap_percentile");
}

TEST(Scenario, RoundTripsThroughNormalizedForm) {
  json doc = minimal();
  doc["seed"] = 99;
  doc["pool"] = {{"total_iops", 5000}};
  doc["abandonment"] = {{"enabled", true}};
  doc["variants"] = {{"g", {{"kind", "gstates"}, {"baseline_iops", 600}, {"pool", true}}}};
  doc["volumes"][0]["synthetic"]["seed"] = 4;
  const Scenario s = scenario_from_json(doc);
  const Scenario back = scenario_from_json(to_json(s));
  EXPECT_EQ(back, s);
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(scenario_hash(back), scenario_hash(s));
}

TEST(Scenario, HashTracksContent) {
  const Scenario a = scenario_from_json(minimal());
  json doc = minimal();
  doc["seed"] = 2;
  const Scenario b = scenario_from_json(doc);
  EXPECT_EQ(scenario_hash(a).size(), 16u);
  EXPECT_NE(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Scenario, MaterializeSynthetic) {
  json doc = minimal();
  doc["volumes"].push_back({{"id", "b"},
                            {"synthetic", {{"phases", {{{"duration", 4}, {"target_iops", 50}}}}}}});
  const Scenario s = scenario_from_json(doc);
  const Workload w = materialize(s);
  EXPECT_EQ(w.horizon, 10u);
  EXPECT_EQ(w.arrivals[0].iops.total, std::vector<std::uint64_t>(10, 800));
  EXPECT_EQ(w.arrivals[1].iops.total[3], 50u);
  EXPECT_EQ(w.arrivals[1].iops.total[4], 0u);
  EXPECT_EQ(materialize(s).records, w.records);
  // volumes draw from distinct streams
  EXPECT_NE(w.records[0][0].timestamp_us, w.records[1][0].timestamp_us);
}

TEST_F(TempDir, LoadsTraceRelativeToConfig) {
  write("traces/t.csv", "# ts,vol,op,off,size\n0,x,read,0,4096\n500000,y,write,0,4096\n1200000,x,read,0,4096\n");
  const auto cfg = write("cfg/s.json", R"({
    "volumes": [
      {"id": "x", "trace": {"path": "../traces/t.csv", "volume": "x"}, "policy": {"kind": "static", "cap_percentile": 100}},
      {"id": "y", "trace": {"path": "../traces/t.csv", "volume": "y"}}
    ]
  })");
  const Scenario s = load_scenario(cfg);
  const auto& src = std::get<TraceSource>(s.volumes[0].source);
  EXPECT_TRUE(fs::path(src.path).is_absolute());
  EXPECT_EQ(std::get<StaticPolicy>(s.volumes[0].policy).cap, 1);
  const Workload w = materialize(s);
  EXPECT_EQ(w.horizon, 2u);
  EXPECT_EQ(w.arrivals[0].iops.total, (std::vector<std::uint64_t>{1, 1}));
  EXPECT_EQ(w.arrivals[1].iops.write, (std::vector<std::uint64_t>{1, 0}));

  // the normalized document written next to nothing still loads identically
  const auto norm = write("elsewhere/n.json", to_json(s).dump(2));
  EXPECT_EQ(load_scenario(norm), s);
}

TEST_F(TempDir, FileErrors) {
  EXPECT_THROW(load_scenario(dir_ / "missing.json"), ConfigError);
  const auto bad = write("bad.json", "{ not json");
  EXPECT_THROW(load_scenario(bad), ConfigError);
  const auto dangling = write("d.json", R"({"volumes": [{"id": "a", "trace": {"path": "nope.csv"}}]})");
  try {
    load_scenario(dangling);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field_path(), "volumes[0].trace.path");
  }
}

TEST(Scenario, HorizonOverride) {
  json doc = minimal();
  doc["horizon"] = 20;
  EXPECT_EQ(materialize(scenario_from_json(doc)).horizon, 20u);
  doc["horizon"] = 5;
  EXPECT_THROW(materialize(scenario_from_json(doc)), ConfigError);
}

TEST(Scenario, PolicyJsonRoundTrip) {
  const std::vector<PolicyConfig> policies{StaticPolicy{10}, LeakyBucketPolicy{300, 3000, 1e5, 7},
                                           GStatesPolicy{600, 3, 0.9, 0.7, IoType::write, true},
                                           UnlimitedPolicy{}};
  for (const auto& p : policies) EXPECT_EQ(policy_from_json(policy_to_json(p)), p);
}
