#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ibridges/io.hpp"
#include "ibridges/verify.hpp"

using namespace ibridges;

namespace {

VerificationReport report_with(double value, const std::string& op, double bound) {
  VerificationReport r;
  r.check_id = "x";
  r.add("s", value);
  r.require("s", op, bound);
  return r;
}

SuiteConfig small(double scale) {
  SuiteConfig c;
  c.scale = scale;
  c.threads = 1;
  return c;
}

const std::vector<VerificationReport>& small_all() {
  static const std::vector<VerificationReport> reports = run_suite("all", small(0.02));
  return reports;
}

}  // namespace

TEST(EvaluatePass, Operators) {
  EXPECT_TRUE(evaluate_pass(report_with(1.0, "<", 2.0)));
  EXPECT_FALSE(evaluate_pass(report_with(2.0, "<", 2.0)));
  EXPECT_TRUE(evaluate_pass(report_with(2.0, "<=", 2.0)));
  EXPECT_TRUE(evaluate_pass(report_with(3.0, ">", 2.0)));
  EXPECT_FALSE(evaluate_pass(report_with(2.0, ">", 2.0)));
  EXPECT_TRUE(evaluate_pass(report_with(2.0, ">=", 2.0)));
}

TEST(EvaluatePass, NanAndMissingFail) {
  EXPECT_FALSE(evaluate_pass(report_with(std::numeric_limits<double>::quiet_NaN(), ">", 0.0)));
  VerificationReport r;
  r.require("absent", "<", 1.0);
  EXPECT_FALSE(evaluate_pass(r));
}

TEST(EvaluatePass, NoTolerancesFails) {
  VerificationReport r;
  r.add("s", 1.0);
  EXPECT_FALSE(evaluate_pass(r));
}

TEST(EvaluatePass, UnknownOperatorThrows) { EXPECT_THROW(evaluate_pass(report_with(1.0, "!=", 2.0)), InvalidArgument); }

TEST(Suite, UnknownIdThrows) { EXPECT_THROW(run_suite("thm99", small(0.1)), InvalidArgument); }

TEST(Suite, AllCoversEveryCheckInOrder) {
  std::vector<std::string> ids;
  for (const auto& r : small_all()) ids.push_back(r.check_id);
  const std::vector<std::string> expected = {"prop_a", "prop_b", "thm_b", "thm_c", "lemma1", "thm3",
                                             "thm4", "lemma2", "martingale", "my_prop", "my_prop_literal"};
  EXPECT_EQ(ids, expected);
}

TEST(Suite, BonferroniCountMatchesNullTests) {
  std::size_t count = 0;
  for (const auto& r : small_all()) {
    if (r.negative_control) continue;
    for (const auto& t : r.tolerances)
      if (t.op == ">" && t.statistic.rfind("p_", 0) == 0) ++count;
  }
  EXPECT_EQ(count, null_test_count(2));
  for (const auto& r : small_all())
    for (const auto& t : r.tolerances)
      if (t.op == ">" && t.statistic.rfind("p_", 0) == 0) EXPECT_DOUBLE_EQ(t.bound, bonferroni_alpha(2)) << t.statistic;
}

TEST(Suite, EveryReportIsSelfConsistent) {
  for (const auto& r : small_all()) {
    EXPECT_FALSE(r.claim.empty()) << r.check_id;
    EXPECT_FALSE(r.tolerances.empty()) << r.check_id;
    EXPECT_FALSE(r.seeds.empty()) << r.check_id;
    EXPECT_EQ(r.pass, evaluate_pass(r)) << r.check_id;
    for (const auto& t : r.tolerances) EXPECT_TRUE(r.find(t.statistic).has_value()) << r.check_id << " " << t.statistic;
  }
}

TEST(Suite, ExactChecksPassAtSmallScale) {
  for (const auto& r : small_all())
    if (r.check_id == "lemma2" || r.check_id == "lemma1") EXPECT_TRUE(r.pass) << r.check_id;
}

TEST(Suite, LiteralScalingIsRejected) {
  const auto reports = run_suite("my_prop", small(0.1));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[1].check_id, "my_prop_literal");
  EXPECT_TRUE(reports[1].negative_control);
  EXPECT_TRUE(reports[1].pass);
  EXPECT_LT(reports[1].stat("min_p"), 1e-6);
  EXPECT_FALSE(reports[0].negative_control);
  EXPECT_TRUE(all_passed({reports[1]}));
}

TEST(Suite, SameSeedSameBytesAcrossThreadCounts) {
  SuiteConfig a = small(0.05);
  SuiteConfig b = a;
  b.threads = 3;
  const auto ra = run_suite("thm_c", a);
  const auto rb = run_suite("thm_c", b);
  EXPECT_EQ(reports_json(ra, "h", a.seed), reports_json(rb, "h", b.seed));
  SuiteConfig c = a;
  c.seed = 2;
  EXPECT_NE(reports_json(ra, "h", 1), reports_json(run_suite("thm_c", c), "h", 1));
}

TEST(Suite, CoarseLampertiStepIsFlaggedAsDiscretization) {
  SuiteConfig c = small(0.1);
  c.du = 0.1;
  const auto reports = run_suite("thm3", c);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_FALSE(reports[0].pass);
  EXPECT_EQ(reports[0].diagnostic, "discretization-dominated");
}

TEST(Suite, ExternalBetaSamplesAreCompared) {
  SuiteConfig c = small(0.1);
  for (int k = 0; k < 300; ++k) {
    c.beta_sde.push_back(Vector::Constant(2, 0.5 + 0.01 * (k % 50)));
    c.beta_mcmc.push_back(Vector::Constant(2, 5.0 + 0.01 * (k % 50)));
  }
  const auto reports = run_suite("thm_b", c);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_FALSE(reports[0].pass);
  EXPECT_LT(reports[0].stat("p_beta_0"), 1e-6);
  EXPECT_DOUBLE_EQ(reports[0].stat("n_sde"), 300.0);
}

TEST(Suite, AllPassedIgnoresControls) {
  VerificationReport ok = report_with(1.0, "<", 2.0);
  ok.pass = true;
  VerificationReport control = report_with(1.0, ">", 2.0);
  control.negative_control = true;
  control.pass = false;
  EXPECT_TRUE(all_passed({ok, control}));
  VerificationReport bad = ok;
  bad.pass = false;
  EXPECT_FALSE(all_passed({ok, bad}));
}
