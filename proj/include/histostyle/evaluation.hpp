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

// Rater score records and the aggregate statistics computed over them.
//
// Each record carries two 0..6 scores for one stylized image:
//   removed_artifacts: 0-2 critical structures removed, 3 no change,
//                      4-6 artifacts removed
//   added_structures:  0-2 artifacts added, 3 no change,
//                      4-6 hard-to-see structures amplified

#pragma once

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "histostyle/image.hpp"

namespace histostyle::eval {

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 6;
inline constexpr int kNeutralScore = 3;
inline constexpr std::size_t kLevels = 7;

inline constexpr std::string_view kScoresHeader =
    "rater_id,image_id,color_mode,removed_artifacts,added_structures,timestamp_utc";

/// Rater-facing labels for each score level.
extern const std::array<std::string_view, kLevels> kRemovedArtifactsLabels;
extern const std::array<std::string_view, kLevels> kAddedStructuresLabels;

using Timestamp = std::chrono::sys_seconds;

struct ScoreRecord {
  std::string rater_id;
  std::string image_id;
  ColorMode color_mode = ColorMode::kIntact;
  int removed_artifacts = kNeutralScore;
  int added_structures = kNeutralScore;
  Timestamp timestamp{};

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Throws ValidationError (field + row) for bad ids, modes, scores or
/// timestamps.
void validate_record(const ScoreRecord& record, std::size_t row = 0);

/// One CSV line without trailing newline.
std::string format_row(const ScoreRecord& record);

/// Parses a whole scores file. The header must match kScoresHeader exactly.
/// Throws ValidationError on bad rows and DuplicateError on a repeated
/// (rater_id, image_id).
std::vector<ScoreRecord> parse_scores(std::string_view csv);
std::string serialize_scores(std::span<const ScoreRecord> records);

using Histogram = std::array<std::size_t, kLevels>;

struct PropertyHistograms {
  Histogram removed_artifacts{};
  Histogram added_structures{};
};

PropertyHistograms histograms(std::span<const ScoreRecord> records);

/// counts[a][r] = number of records with added_structures == a and
/// removed_artifacts == r.
using IntensityMap = std::array<std::array<std::size_t, kLevels>, kLevels>;

IntensityMap intensity_map(std::span<const ScoreRecord> records);

/// Most frequent (added, removed) cell; ties go to the lexicographically
/// smallest cell. Empty map -> nullopt.
std::optional<std::pair<int, int>> intensity_mode(const IntensityMap& map);

enum class Impact { kNegative = 0, kNeutral = 1, kPositive = 2 };

std::string_view to_string(Impact impact);

struct ImageMeans {
  std::string image_id;
  ColorMode color_mode = ColorMode::kIntact;
  std::size_t ratings = 0;
  long removed_sum = 0;
  long added_sum = 0;

  double mean_removed() const { return static_cast<double>(removed_sum) / ratings; }
  double mean_added() const { return static_cast<double>(added_sum) / ratings; }
  /// Compares the mean to 3 using integer sums (exact).
  Impact removed_impact() const;
  Impact added_impact() const;
};

/// Per-image means, keyed and ordered by image id.
std::map<std::string, ImageMeans> image_means(std::span<const ScoreRecord> records);

struct CategoryCounts {
  /// joint[removed impact][added impact]
  std::array<std::array<std::size_t, 3>, 3> joint{};
  std::size_t both_positive = 0;
  std::size_t only_removed_positive = 0;  // removed > 3, added <= 3
  std::size_t only_added_positive = 0;    // added > 3, removed <= 3
  std::size_t only_removed_negative = 0;  // removed < 3, added >= 3
  std::size_t only_added_negative = 0;    // added < 3, removed >= 3
  std::size_t both_negative = 0;

  friend bool operator==(const CategoryCounts&, const CategoryCounts&) = default;
};

CategoryCounts categorize_images(std::span<const ScoreRecord> records);

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// One-way goodness of fit against a uniform split across the bins.
TestResult chi_square_gof(std::span<const std::size_t> observed);

/// Paired t on (added - removed); two-sided p.
TestResult paired_t_test(std::span<const double> added,
                         std::span<const double> removed);

/// Welch's unequal-variance t; two-sided p.
TestResult welch_t_test(std::span<const double> added,
                        std::span<const double> removed);

struct ReportOptions {
  bool welch = false;
};

/// Full aggregate report. Records are put in canonical (image_id, rater_id)
/// order first, so the output does not depend on input order.
nlohmann::json build_report(std::vector<ScoreRecord> records,
                            const ReportOptions& options = {});

}  // namespace histostyle::eval
