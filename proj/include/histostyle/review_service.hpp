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

// HTTP review service: serves original/stylized image pairs to raters and
// appends their scores to the evaluation CSV.
//
//   GET  /api/manifest[?rater_id=R]        pair list (per-rater seeded order)
//   GET  /api/image/{id}/{original|stylized}
//   POST /api/score                        {rater_id, image_id,
//                                           removed_artifacts, added_structures}
//   GET  /api/progress/{rater_id}          image ids already scored
//
// POST answers 200 on append, 404 for an unknown image, 409 for a repeated
// (rater, image) and 422 with the offending field for invalid input.

#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "histostyle/evaluation.hpp"
#include "histostyle/image.hpp"

namespace httplib {
class Server;
}

namespace histostyle::review {

struct ReviewPair {
  std::string image_id;
  std::filesystem::path original;
  std::filesystem::path stylized;
  ColorMode color_mode = ColorMode::kIntact;
};

struct ReviewManifest {
  std::vector<ReviewPair> pairs;
  std::optional<std::uint64_t> seed;

  const ReviewPair* find(const std::string& image_id) const;
};

/// Parses a manifest document. Relative image paths are resolved against
/// `base_dir`. Throws ValidationError for duplicate ids or missing files.
ReviewManifest parse_manifest(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = {});
ReviewManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const ReviewManifest& manifest);

/// Stable per-rater ordering of image ids: the manifest order shuffled with
/// a generator seeded from (manifest seed, rater id). No seed -> file order.
std::vector<std::string> presentation_order(const ReviewManifest& manifest,
                                            const std::string& rater_id);

/// Append-only score file with a single writer. Every accepted row is
/// written and fsync'ed before append() returns.
class ScoreStore {
 public:
  enum class AppendStatus { kAppended, kDuplicate };

  /// Creates the file with its header if absent, otherwise loads it.
  explicit ScoreStore(std::filesystem::path path);

  AppendStatus append(const eval::ScoreRecord& record);

  std::vector<std::string> scored_images(const std::string& rater_id) const;
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::set<std::pair<std::string, std::string>> seen_;  // (rater, image)
  std::vector<std::pair<std::string, std::string>> order_;
  bool needs_newline_ = false;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class ReviewService {
 public:
  ReviewService(ReviewManifest manifest, std::filesystem::path scores_path);

  // Transport-independent handlers; register_routes wires them to httplib.
  HttpResponse get_manifest(const std::string& rater_id) const;
  HttpResponse get_image(const std::string& image_id,
                         const std::string& role) const;
  HttpResponse post_score(const std::string& body);
  HttpResponse get_progress(const std::string& rater_id) const;

  void register_routes(httplib::Server& server);

  const ScoreStore& store() const noexcept { return store_; }

 private:
  ReviewManifest manifest_;
  ScoreStore store_;
};

/// Blocks serving on host:port until the server is stopped.
void serve(ReviewService& service, const std::string& host, int port);

}  // namespace histostyle::review
