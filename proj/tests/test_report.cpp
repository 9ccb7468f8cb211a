#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rer/report.hpp"

using namespace rer;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Verdicts, GatedAndRecorded) {
  EXPECT_EQ(gated("a", {}, "1", "1", 0.0, 0.0).verdict, Verdict::Pass);
  EXPECT_EQ(gated("a", {}, "1", "2", 1.0, 0.5).verdict, Verdict::Fail);
  EXPECT_EQ(gated("a", {}, "1", "2", std::nan(""), 0.5).verdict, Verdict::Fail);
  EXPECT_EQ(recorded("b", {}, "1", "9", 8.0).verdict, Verdict::Recorded);
  const std::vector<VerificationReport> rs{gated("a", {}, "", "", 0.0, 0.0), recorded("b", {}, "", "", 1.0),
                                           gated("c", {}, "", "", 2.0, 1.0)};
  const ReportSummary s = summarize(rs);
  EXPECT_EQ(s.pass, 1);
  EXPECT_EQ(s.fail, 1);
  EXPECT_EQ(s.recorded, 1);
}

TEST(FormatDouble, RoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -5.5, 1e-300, 123456789.125}) EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(ReportJson, Structure) {
  const std::vector<VerificationReport> rs{gated("x", {{"L", "2"}}, "3/4", "1/4", 0.5, 0.0)};
  const auto doc = nlohmann::json::parse(reports_to_json(rs));
  EXPECT_EQ(doc["schema"], "rer.verification_report");
  EXPECT_EQ(doc["version"], 1);
  EXPECT_EQ(doc["summary"]["fail"], 1);
  EXPECT_EQ(doc["checks"][0]["check_id"], "x");
  EXPECT_EQ(doc["checks"][0]["inputs"]["L"], "2");
  EXPECT_EQ(doc["checks"][0]["oracle_value"], "3/4");
  EXPECT_EQ(doc["checks"][0]["verdict"], "fail");
}

TEST(Csv, BoundReportColumns) {
  BoundReport r;
  r.eta = 0.1;
  r.L = 2;
  r.kappa = 2;
  r.coeff_new = 0.9;
  r.lambda_max = 0.8;
  r.trials = 10;
  r.holds_trivial = true;
  std::ostringstream os;
  write_bound_report_csv(os, std::span(&r, 1));
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[0], "# rer.bound_report v1");
  EXPECT_EQ(ls[1], "eta,L,kappa,coeff_new,coeff_old,lambda_max,trials,holds_new,holds_old,holds_trivial");
  EXPECT_EQ(ls[2], "0.1,2,2,0.9,,0.8,10,false,false,true");
}

TEST(Csv, GridAndMetrics) {
  const GridRow g{0.5, 2, 0.5, 1.0, false};
  std::ostringstream os;
  write_grid_csv(os, std::span(&g, 1));
  EXPECT_EQ(lines(os.str())[1], "eta,L,value_new,value_old,new_gt_old");
  EXPECT_EQ(lines(os.str())[2], "0.5,2,0.5,1,false");

  EpisodeMetrics e;
  e.episode = 3;
  e.sup_error = 0.25;
  e.weight_distance = 0.5;
  e.bias_norm = 0.125;
  e.target_version = 1;
  std::ostringstream ms;
  write_metrics_csv(ms, std::span(&e, 1));
  const auto ls = lines(ms.str());
  EXPECT_EQ(ls[0], "# rer.run_metrics v1");
  EXPECT_EQ(ls[1], "episode,sup_error,weight_distance,bias_norm,variance_norm,target_version");
  EXPECT_EQ(ls[2], "3,0.25,0.5,0.125,,1");

  std::ostringstream empty;
  write_metrics_csv(empty, {});
  EXPECT_EQ(lines(empty.str()).size(), 2u);
}

TEST(Csv, Envelope) {
  std::ostringstream os;
  write_envelope_csv(os, 0.1, 2, 4.0, 0.1, 10);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 13u);
  EXPECT_EQ(ls[1], "eta,L,kappa,delta,syncs,envelope");
  EXPECT_EQ(ls[12], "0.1,2,4,0.1,10," + format_double(bias_decay_envelope(0.1, 2, 4.0, 10, 0.1)));
}

TEST(Manifest, Json) {
  ExperimentManifest m;
  m.command = "train";
  m.seed = 7;
  m.timestamp = utc_timestamp();
  m.config = {{"eta", "0.3"}};
  m.outputs = {"out/metrics.csv"};
  const auto doc = nlohmann::json::parse(manifest_to_json(m));
  EXPECT_EQ(doc["schema"], "rer.experiment_manifest");
  EXPECT_EQ(doc["seed"], 7);
  EXPECT_EQ(doc["config"]["eta"], "0.3");
  EXPECT_EQ(doc["outputs"][0], "out/metrics.csv");
  EXPECT_EQ(doc["artifact_version"], kArtifactVersion);
  EXPECT_EQ(m.timestamp.size(), 20u);
}
