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

#include "histostyle/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <set>
#include <tuple>

#include "histostyle/errors.hpp"
#include "histostyle/special_functions.hpp"

namespace histostyle::eval {

const std::array<std::string_view, kLevels> kRemovedArtifactsLabels = {
    "Negative impact; Severe structures are removed",
    "Negative impact; Moderate structures are removed",
    "Negative impact; Slight structures are removed",
    "No significant structures are removed",
    "Positive impact; Slight artifacts are removed",
    "Positive impact; Moderate artifacts are removed",
    "Positive impact; Severe artifacts are removed",
};

const std::array<std::string_view, kLevels> kAddedStructuresLabels = {
    "Negative impact; Severe artifacts are added",
    "Negative impact; Moderate artifacts are added",
    "Negative impact; Slight artifacts are added",
    "No significant structures are added",
    "Positive impact; Slight structures are added",
    "Positive impact; Moderate structures are added",
    "Positive impact; Severe structures are added",
};

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 256) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == ',' || c == '"' || c == '\n' || c == '\r';
  });
}

std::optional<int> parse_score(std::string_view text) {
  if (text.size() != 1 || text[0] < '0' || text[0] > '9') return std::nullopt;
  return text[0] - '0';
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

Impact classify(long sum, std::size_t n) {
  const long neutral = static_cast<long>(kNeutralScore * n);
  if (sum < neutral) return Impact::kNegative;
  if (sum > neutral) return Impact::kPositive;
  return Impact::kNeutral;
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{t - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // Fixed width: YYYY-MM-DDTHH:MM:SSZ
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' ||
      text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2),
             mi = num(14, 2), s = num(17, 2);
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                        std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *s > 59) return std::nullopt;
  return std::chrono::sys_days{ymd} + std::chrono::hours{*h} +
         std::chrono::minutes{*mi} + std::chrono::seconds{*s};
}

void validate_record(const ScoreRecord& r, std::size_t row) {
  const std::string where = row ? " (row " + std::to_string(row) + ")" : "";
  if (!valid_id(r.rater_id)) {
    throw ValidationError("rater_id", row, "invalid rater_id" + where);
  }
  if (!valid_id(r.image_id)) {
    throw ValidationError("image_id", row, "invalid image_id" + where);
  }
  if (r.removed_artifacts < kMinScore || r.removed_artifacts > kMaxScore) {
    throw ValidationError("removed_artifacts", row,
                          "removed_artifacts must be in 0..6" + where);
  }
  if (r.added_structures < kMinScore || r.added_structures > kMaxScore) {
    throw ValidationError("added_structures", row,
                          "added_structures must be in 0..6" + where);
  }
}

std::string format_row(const ScoreRecord& r) {
  std::string line = r.rater_id;
  line += ',';
  line += r.image_id;
  line += ',';
  line += to_string(r.color_mode);
  line += ',';
  line += std::to_string(r.removed_artifacts);
  line += ',';
  line += std::to_string(r.added_structures);
  line += ',';
  line += format_timestamp(r.timestamp);
  return line;
}

std::vector<ScoreRecord> parse_scores(std::string_view csv) {
  std::vector<ScoreRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t row = 0;
  bool header_seen = false;
  while (!csv.empty()) {
    const std::size_t nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++row;
    if (!header_seen) {
      if (line != kScoresHeader) {
        throw ValidationError("header", row, "scores file header must be '" +
                                                 std::string(kScoresHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 6) {
      throw ValidationError("row", row, "expected 6 fields in row " +
                                            std::to_string(row));
    }
    ScoreRecord r;
    r.rater_id = std::string(fields[0]);
    r.image_id = std::string(fields[1]);
    const auto mode = parse_color_mode(fields[2]);
    if (!mode) {
      throw ValidationError("color_mode", row,
                            "unknown color_mode in row " + std::to_string(row));
    }
    r.color_mode = *mode;
    const auto removed = parse_score(fields[3]);
    const auto added = parse_score(fields[4]);
    r.removed_artifacts = removed.value_or(-1);
    r.added_structures = added.value_or(-1);
    const auto ts = parse_timestamp(fields[5]);
    if (!ts) {
      throw ValidationError("timestamp_utc", row,
                            "invalid timestamp in row " + std::to_string(row));
    }
    r.timestamp = *ts;
    validate_record(r, row);
    if (!seen.emplace(r.rater_id, r.image_id).second) {
      throw DuplicateError("duplicate score for rater '" + r.rater_id +
                           "' and image '" + r.image_id + "' in row " +
                           std::to_string(row));
    }
    records.push_back(std::move(r));
  }
  if (!header_seen) {
    throw ValidationError("header", 1, "scores file is missing its header");
  }
  return records;
}

std::string serialize_scores(std::span<const ScoreRecord> records) {
  std::string out(kScoresHeader);
  out += '\n';
  for (const auto& r : records) {
    out += format_row(r);
    out += '\n';
  }
  return out;
}

PropertyHistograms histograms(std::span<const ScoreRecord> records) {
  PropertyHistograms h;
  for (const auto& r : records) {
    ++h.removed_artifacts[static_cast<std::size_t>(r.removed_artifacts)];
    ++h.added_structures[static_cast<std::size_t>(r.added_structures)];
  }
  return h;
}

IntensityMap intensity_map(std::span<const ScoreRecord> records) {
  IntensityMap map{};
  for (const auto& r : records) {
    ++map[static_cast<std::size_t>(r.added_structures)]
         [static_cast<std::size_t>(r.removed_artifacts)];
  }
  return map;
}

std::optional<std::pair<int, int>> intensity_mode(const IntensityMap& map) {
  std::size_t best = 0;
  std::optional<std::pair<int, int>> cell;
  for (std::size_t a = 0; a < kLevels; ++a) {
    for (std::size_t r = 0; r < kLevels; ++r) {
      if (map[a][r] > best) {
        best = map[a][r];
        cell = {static_cast<int>(a), static_cast<int>(r)};
      }
    }
  }
  return cell;
}

std::string_view to_string(Impact impact) {
  switch (impact) {
    case Impact::kNegative: return "negative";
    case Impact::kNeutral: return "neutral";
    case Impact::kPositive: return "positive";
  }
  return "neutral";
}

Impact ImageMeans::removed_impact() const { return classify(removed_sum, ratings); }
Impact ImageMeans::added_impact() const { return classify(added_sum, ratings); }

std::map<std::string, ImageMeans> image_means(std::span<const ScoreRecord> records) {
  std::map<std::string, ImageMeans> means;
  for (const auto& r : records) {
    auto& m = means[r.image_id];
    m.image_id = r.image_id;
    m.color_mode = r.color_mode;
    ++m.ratings;
    m.removed_sum += r.removed_artifacts;
    m.added_sum += r.added_structures;
  }
  return means;
}

CategoryCounts categorize_images(std::span<const ScoreRecord> records) {
  CategoryCounts counts;
  for (const auto& [id, m] : image_means(records)) {
    const Impact removed = m.removed_impact();
    const Impact added = m.added_impact();
    ++counts.joint[static_cast<std::size_t>(removed)][static_cast<std::size_t>(added)];
    const bool rp = removed == Impact::kPositive, ap = added == Impact::kPositive;
    const bool rn = removed == Impact::kNegative, an = added == Impact::kNegative;
    counts.both_positive += rp && ap;
    counts.only_removed_positive += rp && !ap;
    counts.only_added_positive += ap && !rp;
    counts.only_removed_negative += rn && !an;
    counts.only_added_negative += an && !rn;
    counts.both_negative += rn && an;
  }
  return counts;
}

TestResult chi_square_gof(std::span<const std::size_t> observed) {
  if (observed.size() < 2) throw InvalidInput("chi-square needs at least two bins");
  std::size_t total = 0;
  for (std::size_t o : observed) total += o;
  if (total == 0) throw InvalidInput("chi-square needs a nonzero total count");
  const double expected =
      static_cast<double>(total) / static_cast<double>(observed.size());
  double stat = 0.0;
  for (std::size_t o : observed) {
    const double d = static_cast<double>(o) - expected;
    stat += d * d / expected;
  }
  const double df = static_cast<double>(observed.size() - 1);
  return {stat, df, stats::chi_square_sf(stat, df)};
}

TestResult paired_t_test(std::span<const double> added,
                         std::span<const double> removed) {
  if (added.size() != removed.size()) {
    throw InvalidInput("paired t-test needs equal-length samples");
  }
  const std::size_t n = added.size();
  if (n < 2) throw InvalidInput("paired t-test needs at least two pairs");
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = added[i] - removed[i];
  const double mean = mean_of(diff);
  const double var = sample_variance(diff, mean);
  const double df = static_cast<double>(n - 1);
  if (var == 0.0) {
    if (mean == 0.0) return {0.0, df, 1.0};
    throw DegenerateSignal("paired differences are constant and nonzero");
  }
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  return {t, df, std::min(1.0, 2.0 * stats::t_sf(std::abs(t), df))};
}

TestResult welch_t_test(std::span<const double> added,
                        std::span<const double> removed) {
  const std::size_t n1 = added.size(), n2 = removed.size();
  if (n1 < 2 || n2 < 2) throw InvalidInput("Welch t-test needs n >= 2 per sample");
  const double m1 = mean_of(added), m2 = mean_of(removed);
  const double a = sample_variance(added, m1) / static_cast<double>(n1);
  const double b = sample_variance(removed, m2) / static_cast<double>(n2);
  if (a + b == 0.0) {
    if (m1 == m2) return {0.0, static_cast<double>(n1 + n2 - 2), 1.0};
    throw DegenerateSignal("both samples are constant with different means");
  }
  const double t = (m1 - m2) / std::sqrt(a + b);
  const double df = (a + b) * (a + b) /
                    (a * a / static_cast<double>(n1 - 1) +
                     b * b / static_cast<double>(n2 - 1));
  return {t, df, std::min(1.0, 2.0 * stats::t_sf(std::abs(t), std::max(1.0, df)))};
}

namespace {

nlohmann::json to_json(const TestResult& t) {
  return {{"statistic", t.statistic}, {"df", t.df}, {"p_value", t.p_value}};
}

nlohmann::json histogram_json(const PropertyHistograms& h) {
  return {{"removed_artifacts", h.removed_artifacts},
          {"added_structures", h.added_structures}};
}

nlohmann::json map_json(const IntensityMap& map) {
  nlohmann::json j;
  j["counts"] = map;
  j["axes"] = {{"row", "added_structures"}, {"column", "removed_artifacts"}};
  if (auto mode = intensity_mode(map)) {
    j["mode"] = {{"added_structures", mode->first},
                 {"removed_artifacts", mode->second}};
  } else {
    j["mode"] = nullptr;
  }
  return j;
}

nlohmann::json categories_json(const CategoryCounts& c) {
  nlohmann::json joint = nlohmann::json::object();
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t a = 0; a < 3; ++a) {
      joint[std::string(to_string(static_cast<Impact>(r)))]
           [std::string(to_string(static_cast<Impact>(a)))] = c.joint[r][a];
    }
  }
  return {{"joint_removed_by_added", joint},
          {"both_positive", c.both_positive},
          {"only_removed_positive", c.only_removed_positive},
          {"only_added_positive", c.only_added_positive},
          {"only_removed_negative", c.only_removed_negative},
          {"only_added_negative", c.only_added_negative},
          {"both_negative", c.both_negative}};
}

// Improvement (> 3) vs. no improvement (<= 3) for one property.
nlohmann::json improvement_test(std::size_t improved, std::size_t total) {
  const std::array<std::size_t, 2> observed{improved, total - improved};
  nlohmann::json j = {{"observed_improved", improved},
                      {"observed_not_improved", total - improved}};
  if (total >= 2) {
    j["test"] = to_json(chi_square_gof(observed));
  } else {
    j["test"] = nullptr;
  }
  return j;
}

nlohmann::json chi_square_block(std::span<const ScoreRecord> records) {
  std::size_t removed_pos = 0, added_pos = 0;
  for (const auto& r : records) {
    removed_pos += r.removed_artifacts > kNeutralScore;
    added_pos += r.added_structures > kNeutralScore;
  }
  const auto means = image_means(records);
  std::size_t img_removed_pos = 0, img_added_pos = 0;
  for (const auto& [id, m] : means) {
    img_removed_pos += m.removed_impact() == Impact::kPositive;
    img_added_pos += m.added_impact() == Impact::kPositive;
  }
  return {
      {"per_rating",
       {{"removed_artifacts", improvement_test(removed_pos, records.size())},
        {"added_structures", improvement_test(added_pos, records.size())}}},
      {"per_image_mean",
       {{"removed_artifacts", improvement_test(img_removed_pos, means.size())},
        {"added_structures", improvement_test(img_added_pos, means.size())}}},
  };
}

nlohmann::json t_block(std::span<const ScoreRecord> records,
                       const ReportOptions& options) {
  nlohmann::json j = {{"kind", options.welch ? "welch" : "paired"},
                      {"n", records.size()}};
  std::vector<double> added, removed;
  for (const auto& r : records) {
    added.push_back(r.added_structures);
    removed.push_back(r.removed_artifacts);
  }
  if (records.size() >= 2) {
    j["mean_added_structures"] = mean_of(added);
    j["mean_removed_artifacts"] = mean_of(removed);
    try {
      j["result"] = to_json(options.welch ? welch_t_test(added, removed)
                                          : paired_t_test(added, removed));
    } catch (const DegenerateSignal& e) {
      j["result"] = nullptr;
      j["error"] = e.what();
    }
  } else {
    j["result"] = nullptr;
  }
  return j;
}

}  // namespace

nlohmann::json build_report(std::vector<ScoreRecord> records,
                            const ReportOptions& options) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.rater_id) < std::tie(b.image_id, b.rater_id);
  });

  std::set<std::string> raters;
  for (const auto& r : records) raters.insert(r.rater_id);

  nlohmann::json report;
  report["record_count"] = records.size();
  report["rater_count"] = raters.size();

  const auto means = image_means(records);
  report["image_count"] = means.size();

  nlohmann::json per_mode = nlohmann::json::object();
  for (ColorMode mode : kAllColorModes) {
    std::vector<ScoreRecord> subset;
    std::copy_if(records.begin(), records.end(), std::back_inserter(subset),
                 [&](const ScoreRecord& r) { return r.color_mode == mode; });
    per_mode[std::string(to_string(mode))] = {
        {"record_count", subset.size()},
        {"histograms", histogram_json(histograms(subset))},
        {"intensity_map", map_json(intensity_map(subset))},
        {"categories", categories_json(categorize_images(subset))},
        {"chi_square", chi_square_block(subset)},
        {"t_test", t_block(subset, options)},
    };
  }

  report["overall"] = {
      {"histograms", histogram_json(histograms(records))},
      {"intensity_map", map_json(intensity_map(records))},
      {"categories", categories_json(categorize_images(records))},
      {"chi_square", chi_square_block(records)},
      {"t_test", t_block(records, options)},
  };
  report["per_color_mode"] = per_mode;

  nlohmann::json images = nlohmann::json::array();
  for (const auto& [id, m] : means) {
    images.push_back({{"image_id", id},
                      {"color_mode", to_string(m.color_mode)},
                      {"ratings", m.ratings},
                      {"mean_removed_artifacts", m.mean_removed()},
                      {"mean_added_structures", m.mean_added()},
                      {"removed_impact", to_string(m.removed_impact())},
                      {"added_impact", to_string(m.added_impact())}});
  }
  report["images"] = images;
  return report;
}

}  // namespace histostyle::eval
