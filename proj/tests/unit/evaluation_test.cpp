// Copyright 2026 The HistoStyle Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "histostyle/errors.hpp"
#include "histostyle/evaluation.hpp"
#include "synthetic_scores.hpp"

namespace histostyle::eval {
namespace {

using namespace std::chrono_literals;

ScoreRecord rec(std::string rater, std::string image, int removed, int added,
                ColorMode mode = ColorMode::kIntact) {
  ScoreRecord r;
  r.rater_id = std::move(rater);
  r.image_id = std::move(image);
  r.removed_artifacts = removed;
  r.added_structures = added;
  r.color_mode = mode;
  r.timestamp = std::chrono::sys_days{std::chrono::year{2026} / 3 / 1} + 12h;
  return r;
}

std::string header() { return std::string(kScoresHeader) + "\n"; }

TEST(Timestamp, FormatAndParse) {
  const Timestamp t = std::chrono::sys_days{std::chrono::year{2024} / 2 / 29} + 23h + 5min + 9s;
  EXPECT_EQ(format_timestamp(t), "2024-02-29T23:05:09Z");
  EXPECT_EQ(parse_timestamp("2024-02-29T23:05:09Z"), t);
  EXPECT_FALSE(parse_timestamp("2023-02-29T23:05:09Z"));
  EXPECT_FALSE(parse_timestamp("2024-02-29 23:05:09Z"));
  EXPECT_FALSE(parse_timestamp("2024-02-29T24:00:00Z"));
  EXPECT_FALSE(parse_timestamp("2024-02-29T23:05:09"));
}

TEST(ParseScores, HeaderOnlyAndEmptyLines) {
  EXPECT_TRUE(parse_scores(header()).empty());
  EXPECT_TRUE(parse_scores(std::string(kScoresHeader)).empty());
  EXPECT_EQ(parse_scores(header() + "r1,i1,gray,5,4,2026-01-01T00:00:00Z\n\n").size(), 1u);
  EXPECT_EQ(parse_scores("rater_id,image_id,color_mode,removed_artifacts,added_structures,"
                         "timestamp_utc\r\nr1,i1,red,0,6,2026-01-01T00:00:00Z\r\n")
                .size(),
            1u);
}

TEST(ParseScores, Errors) {
  auto field_of = [](const std::string& csv) -> std::pair<std::string, std::size_t> {
    try {
      parse_scores(csv);
    } catch (const ValidationError& e) {
      return {e.field(), e.row()};
    }
    return {"", 0};
  };
  EXPECT_EQ(field_of(""), (std::pair<std::string, std::size_t>{"header", 1}));
  EXPECT_EQ(field_of("rater,image\n").first, "header");
  EXPECT_EQ(field_of(header() + "r1,i1,gray,7,4,2026-01-01T00:00:00Z\n"),
            (std::pair<std::string, std::size_t>{"removed_artifacts", 2}));
  EXPECT_EQ(field_of(header() + "r1,i1,gray,3,3,2026-01-01T00:00:00Z\n"
                                "r1,i2,gray,3,-1,2026-01-01T00:00:00Z\n"),
            (std::pair<std::string, std::size_t>{"added_structures", 3}));
  EXPECT_EQ(field_of(header() + "r1,i1,blue,3,3,2026-01-01T00:00:00Z\n").first, "color_mode");
  EXPECT_EQ(field_of(header() + "r1,i1,gray,3,3,yesterday\n").first, "timestamp_utc");
  EXPECT_EQ(field_of(header() + "r1,i1,gray,3,3\n").first, "row");
  EXPECT_EQ(field_of(header() + ",i1,gray,3,3,2026-01-01T00:00:00Z\n").first, "rater_id");
  EXPECT_THROW(parse_scores(header() + "r1,i1,gray,3,3,2026-01-01T00:00:00Z\n"
                                       "r1,i1,red,4,4,2026-01-01T00:00:01Z\n"),
               DuplicateError);
}

TEST(ParseScores, RoundTrip) {
  const auto data = testing::make_synthetic_scores(7, testing::kDefaultJoint);
  const std::string csv = serialize_scores(data.records);
  EXPECT_EQ(parse_scores(csv), data.records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kScoresHeader);
}

TEST(Labels, SevenLevelsEach) {
  EXPECT_EQ(kRemovedArtifactsLabels[3], "No significant structures are removed");
  EXPECT_EQ(kAddedStructuresLabels[4], "Positive impact; Slight structures are added");
  for (auto l : kRemovedArtifactsLabels) EXPECT_FALSE(l.empty());
}

TEST(IntensityMap, Counting) {
  const std::vector<ScoreRecord> rs = {rec("a", "1", 4, 5), rec("b", "1", 4, 5),
                                       rec("c", "1", 5, 5)};
  const auto m = intensity_map(rs);
  std::size_t total = 0;
  for (const auto& row : m) {
    for (auto v : row) total += v;
  }
  EXPECT_EQ(m[5][4], 2u);
  EXPECT_EQ(m[5][5], 1u);
  EXPECT_EQ(total, 3u);
  EXPECT_EQ(intensity_mode(m), (std::pair<int, int>{5, 4}));
  EXPECT_FALSE(intensity_mode(intensity_map({})).has_value());
  for (const auto& row : intensity_map({})) {
    for (auto v : row) EXPECT_EQ(v, 0u);
  }
}

TEST(IntensityMap, TieBreaksToFirstCell) {
  const std::vector<ScoreRecord> rs = {rec("a", "1", 4, 5), rec("a", "2", 1, 2)};
  EXPECT_EQ(intensity_mode(intensity_map(rs)), (std::pair<int, int>{2, 1}));
}

TEST(Histograms, TotalsEqualRecordCount) {
  const auto data = testing::make_synthetic_scores(11, testing::kDefaultJoint);
  const auto h = histograms(data.records);
  std::size_t tr = 0, ta = 0;
  for (std::size_t i = 0; i < kLevels; ++i) {
    tr += h.removed_artifacts[i];
    ta += h.added_structures[i];
  }
  EXPECT_EQ(tr, data.records.size());
  EXPECT_EQ(ta, data.records.size());
}

TEST(Categorize, SingleImages) {
  auto c = categorize_images(std::vector<ScoreRecord>{rec("a", "x", 4, 5), rec("b", "x", 4, 5)});
  EXPECT_EQ(c.both_positive, 1u);
  EXPECT_EQ(c.joint[2][2], 1u);
  c = categorize_images(std::vector<ScoreRecord>{rec("a", "x", 3, 3), rec("b", "x", 3, 3)});
  EXPECT_EQ(c.joint[1][1], 1u);
  EXPECT_EQ(c.both_positive + c.only_removed_positive + c.only_added_positive +
                c.only_removed_negative + c.only_added_negative + c.both_negative,
            0u);
  // Mean exactly 3 from mixed scores is neutral, not positive.
  c = categorize_images(std::vector<ScoreRecord>{rec("a", "x", 2, 6), rec("b", "x", 4, 0)});
  EXPECT_EQ(c.joint[1][1], 1u);
  c = categorize_images(std::vector<ScoreRecord>{rec("a", "x", 1, 3)});
  EXPECT_EQ(c.only_removed_negative, 1u);
  EXPECT_EQ(c.joint[0][1], 1u);
}

TEST(Categorize, MatchesPlantedAndBruteForce) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto data = testing::make_synthetic_scores(seed, testing::kDefaultJoint);
    const auto c = categorize_images(data.records);
    EXPECT_EQ(c.joint, data.planted_joint);
    EXPECT_EQ(c.joint, testing::brute_force_joint(data.records));
    const auto& j = data.planted_joint;
    EXPECT_EQ(c.both_positive, j[2][2]);
    EXPECT_EQ(c.only_removed_positive, j[2][0] + j[2][1]);
    EXPECT_EQ(c.only_added_positive, j[0][2] + j[1][2]);
    EXPECT_EQ(c.only_removed_negative, j[0][1] + j[0][2]);
    EXPECT_EQ(c.only_added_negative, j[1][0] + j[2][0]);
    EXPECT_EQ(c.both_negative, j[0][0]);
    std::mt19937_64 rng(seed);
    std::shuffle(data.records.begin(), data.records.end(), rng);
    EXPECT_EQ(categorize_images(data.records), c);
  }
}

TEST(ChiSquare, Values) {
  const std::array<std::size_t, 2> even{50, 50}, reported{84, 16}, swapped{16, 84};
  const auto e = chi_square_gof(even);
  EXPECT_EQ(e.statistic, 0.0);
  EXPECT_EQ(e.p_value, 1.0);
  const auto p = chi_square_gof(reported);
  EXPECT_NEAR(p.statistic, 46.24, 1e-9);
  EXPECT_EQ(p.df, 1.0);
  EXPECT_LT(p.p_value, 0.001);
  EXPECT_EQ(chi_square_gof(swapped).statistic, p.statistic);
  const std::array<std::size_t, 2> zero{0, 0};
  EXPECT_THROW(chi_square_gof(zero), InvalidInput);
}

// Two-sided paired t from first principles with Boost's Student-t as the
// distribution reference.
TestResult reference_paired(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += (a[i] - b[i]) / n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += std::pow(a[i] - b[i] - mean, 2);
  const double t = mean / std::sqrt(ss / (n - 1) / n);
  boost::math::students_t dist(n - 1);
  return {t, n - 1, 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)))};
}

TEST(PairedT, IdenticalListsAndDegenerate) {
  const std::vector<double> a{1, 4, 2, 6, 3};
  const auto r = paired_t_test(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  const std::vector<double> b{2, 5, 3, 7, 4}, c{1, 4, 2, 6, 3};
  EXPECT_THROW(paired_t_test(std::vector<double>{2, 2, 2, 2}, std::vector<double>{1, 1, 1, 1}),
               DegenerateSignal);
  EXPECT_THROW(paired_t_test(b, c), DegenerateSignal);
  EXPECT_THROW(paired_t_test(std::vector<double>{1}, std::vector<double>{2}), InvalidInput);
  EXPECT_THROW(paired_t_test(b, std::vector<double>{1, 2}), InvalidInput);
}

TEST(PairedT, MatchesReferenceAndFlipsSign) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> score(0, 6);
  for (std::size_t n : {2u, 5u, 30u, 500u}) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = score(rng);
      b[i] = score(rng);
    }
    if (n == 2) {
      a = {5, 3};
      b = {1, 2};
    }
    const auto got = paired_t_test(a, b);
    const auto ref = reference_paired(a, b);
    EXPECT_NEAR(got.statistic, ref.statistic, 1e-6 * std::max(1.0, std::abs(ref.statistic)));
    EXPECT_NEAR(got.p_value, ref.p_value, 1e-6);
    EXPECT_EQ(got.df, ref.df);
    const auto flipped = paired_t_test(b, a);
    EXPECT_EQ(flipped.statistic, -got.statistic);
    EXPECT_EQ(flipped.p_value, got.p_value);
  }
}

TEST(WelchT, MatchesHandComputation) {
  const std::vector<double> a{5, 6, 4, 5, 6, 5}, b{3, 2, 4, 3};
  // Means 31/6 and 3; variances 0.5667 and 0.6667.
  const double va = (std::pow(5 - 31.0 / 6, 2) * 3 + std::pow(6 - 31.0 / 6, 2) * 2 +
                     std::pow(4 - 31.0 / 6, 2)) / 5;
  const double vb = 2.0 / 3.0;
  const double se2 = va / 6 + vb / 4;
  const double t = (31.0 / 6 - 3) / std::sqrt(se2);
  const double df = se2 * se2 / (std::pow(va / 6, 2) / 5 + std::pow(vb / 4, 2) / 3);
  boost::math::students_t dist(df);
  const double p = 2 * boost::math::cdf(boost::math::complement(dist, t));
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.statistic, t, 1e-12);
  EXPECT_NEAR(r.df, df, 1e-12);
  EXPECT_NEAR(r.p_value, p, 1e-6);
}

TEST(Report, EmptyScores) {
  const auto j = build_report({});
  EXPECT_EQ(j["record_count"], 0);
  EXPECT_EQ(j["image_count"], 0);
  EXPECT_TRUE(j["overall"]["t_test"]["result"].is_null());
  EXPECT_TRUE(j["overall"]["chi_square"]["per_rating"]["added_structures"]["test"].is_null());
  EXPECT_TRUE(j["overall"]["intensity_map"]["mode"].is_null());
}

TEST(Report, SyntheticContentsAndOrderInvariance) {
  auto data = testing::make_synthetic_scores(21, testing::kDefaultJoint);
  const auto report = build_report(data.records);
  EXPECT_EQ(report["record_count"], 500);
  EXPECT_EQ(report["rater_count"], 5);
  EXPECT_EQ(report["image_count"], 100);
  const auto& counts = report["overall"]["intensity_map"]["counts"];
  std::size_t total = 0;
  for (const auto& row : counts) {
    for (const auto& v : row) total += v.get<std::size_t>();
  }
  EXPECT_EQ(total, 500u);
  EXPECT_EQ(report["overall"]["intensity_map"]["mode"]["added_structures"], 5);
  EXPECT_EQ(report["overall"]["intensity_map"]["mode"]["removed_artifacts"], 4);
  EXPECT_EQ(report["overall"]["categories"]["both_positive"], 60);
  std::size_t per_mode_total = 0;
  for (const auto& [mode, block] : report["per_color_mode"].items()) {
    per_mode_total += block["record_count"].get<std::size_t>();
  }
  EXPECT_EQ(per_mode_total, 500u);
  EXPECT_FALSE(report["overall"]["t_test"]["result"].is_null());

  std::mt19937_64 rng(99);
  for (int k = 0; k < 3; ++k) {
    std::shuffle(data.records.begin(), data.records.end(), rng);
    EXPECT_EQ(build_report(data.records).dump(), report.dump());
  }
  const auto welch = build_report(data.records, {true});
  EXPECT_EQ(welch["overall"]["t_test"]["kind"], "welch");
}

TEST(Report, DegenerateTestReportedNotThrown) {
  const std::vector<ScoreRecord> rs = {rec("a", "1", 3, 4), rec("b", "1", 3, 4)};
  const auto j = build_report(rs);
  EXPECT_TRUE(j["overall"]["t_test"]["result"].is_null());
  EXPECT_TRUE(j["overall"]["t_test"].contains("error"));
}

}  // namespace
}  // namespace histostyle::eval
