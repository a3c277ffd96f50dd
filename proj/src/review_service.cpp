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

#include "histostyle/review_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iterator>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "histostyle/errors.hpp"
#include "histostyle/shuffle.hpp"

namespace histostyle::review {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes all of `data` to `fd` and fsyncs.
void write_durably(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("score append failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  if (::fsync(fd) != 0) {
    throw IoError(std::string("fsync failed: ") + std::strerror(errno));
  }
}

class FileDescriptor {
 public:
  explicit FileDescriptor(const std::filesystem::path& path)
      : fd_(::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644)) {
    if (fd_ < 0) {
      throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
  }
  ~FileDescriptor() { ::close(fd_); }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  int get() const noexcept { return fd_; }

 private:
  int fd_;
};

HttpResponse json_response(int status, const nlohmann::json& body) {
  return {status, body.dump(), "application/json"};
}

HttpResponse error_response(int status, const std::string& message,
                            const std::string& field = {}) {
  nlohmann::json body = {{"error", message}};
  if (!field.empty()) body["field"] = field;
  return json_response(status, body);
}

}  // namespace

const ReviewPair* ReviewManifest::find(const std::string& image_id) const {
  for (const auto& p : pairs) {
    if (p.image_id == image_id) return &p;
  }
  return nullptr;
}

ReviewManifest parse_manifest(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir) {
  ReviewManifest manifest;
  if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array()) {
    throw ValidationError("pairs", 0, "manifest must be an object with a 'pairs' array");
  }
  if (doc.contains("seed") && !doc["seed"].is_null()) {
    manifest.seed = doc["seed"].get<std::uint64_t>();
  }
  std::set<std::string> ids;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  for (const auto& entry : doc["pairs"]) {
    ReviewPair pair;
    try {
      pair.image_id = entry.at("image_id").get<std::string>();
      pair.original = resolve(entry.at("original").get<std::string>());
      pair.stylized = resolve(entry.at("stylized").get<std::string>());
      const auto mode_text = entry.value("color_mode", std::string("intact"));
      const auto mode = parse_color_mode(mode_text);
      if (!mode) {
        throw ValidationError("color_mode", 0, "unknown color_mode '" + mode_text + "'");
      }
      pair.color_mode = *mode;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("pairs", 0, std::string("malformed manifest entry: ") + e.what());
    }
    if (pair.image_id.empty() || pair.image_id.find(',') != std::string::npos) {
      throw ValidationError("image_id", 0, "invalid image_id '" + pair.image_id + "'");
    }
    if (!ids.insert(pair.image_id).second) {
      throw ValidationError("image_id", 0, "duplicate image_id '" + pair.image_id + "'");
    }
    for (const auto* p : {&pair.original, &pair.stylized}) {
      if (!std::filesystem::is_regular_file(*p)) {
        throw ValidationError("pairs", 0, "missing image file " + p->string());
      }
    }
    manifest.pairs.push_back(std::move(pair));
  }
  return manifest;
}

ReviewManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

nlohmann::json to_json(const ReviewManifest& manifest) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : manifest.pairs) {
    pairs.push_back({{"image_id", p.image_id},
                     {"original", p.original.string()},
                     {"stylized", p.stylized.string()},
                     {"color_mode", to_string(p.color_mode)}});
  }
  nlohmann::json doc = {{"pairs", pairs}};
  doc["seed"] = manifest.seed ? nlohmann::json(*manifest.seed) : nlohmann::json();
  return doc;
}

std::vector<std::string> presentation_order(const ReviewManifest& manifest,
                                            const std::string& rater_id) {
  std::vector<std::string> ids;
  for (const auto& p : manifest.pairs) ids.push_back(p.image_id);
  if (manifest.seed) seeded_shuffle(ids, fnv1a(rater_id, *manifest.seed));
  return ids;
}

ScoreStore::ScoreStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) {
    FileDescriptor fd(path_);
    write_durably(fd.get(), std::string(eval::kScoresHeader) + "\n");
    return;
  }
  const std::string contents = read_file(path_);
  for (const auto& r : eval::parse_scores(contents)) {
    seen_.emplace(r.rater_id, r.image_id);
    order_.emplace_back(r.rater_id, r.image_id);
  }
  needs_newline_ = !contents.empty() && contents.back() != '\n';
}

ScoreStore::AppendStatus ScoreStore::append(const eval::ScoreRecord& record) {
  eval::validate_record(record);
  std::lock_guard lock(mutex_);
  if (seen_.count({record.rater_id, record.image_id})) {
    return AppendStatus::kDuplicate;
  }
  std::string line = needs_newline_ ? "\n" : "";
  line += eval::format_row(record);
  line += '\n';
  FileDescriptor fd(path_);
  write_durably(fd.get(), line);
  needs_newline_ = false;
  seen_.emplace(record.rater_id, record.image_id);
  order_.emplace_back(record.rater_id, record.image_id);
  return AppendStatus::kAppended;
}

std::vector<std::string> ScoreStore::scored_images(const std::string& rater_id) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [rater, image] : order_) {
    if (rater == rater_id) ids.push_back(image);
  }
  return ids;
}

std::size_t ScoreStore::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

ReviewService::ReviewService(ReviewManifest manifest,
                             std::filesystem::path scores_path)
    : manifest_(std::move(manifest)), store_(std::move(scores_path)) {
  if (manifest_.seed) {
    spdlog::info("presentation order seed: {}", *manifest_.seed);
  }
}

HttpResponse ReviewService::get_manifest(const std::string& rater_id) const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& id : presentation_order(manifest_, rater_id)) {
    const ReviewPair* p = manifest_.find(id);
    pairs.push_back({{"image_id", p->image_id},
                     {"color_mode", to_string(p->color_mode)},
                     {"original_url", "/api/image/" + p->image_id + "/original"},
                     {"stylized_url", "/api/image/" + p->image_id + "/stylized"}});
  }
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t s = 0; s < eval::kLevels; ++s) {
    levels.push_back({{"score", s},
                      {"removed_artifacts", eval::kRemovedArtifactsLabels[s]},
                      {"added_structures", eval::kAddedStructuresLabels[s]}});
  }
  nlohmann::json body = {{"pairs", pairs}, {"score_levels", levels}};
  body["seed"] = manifest_.seed ? nlohmann::json(*manifest_.seed) : nlohmann::json();
  return json_response(200, body);
}

HttpResponse ReviewService::get_image(const std::string& image_id,
                                      const std::string& role) const {
  const ReviewPair* pair = manifest_.find(image_id);
  if (!pair) return error_response(404, "unknown image_id '" + image_id + "'");
  if (role != "original" && role != "stylized") {
    return error_response(404, "unknown image role '" + role + "'");
  }
  const auto& path = role == "original" ? pair->original : pair->stylized;
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const std::string type =
      (ext == ".jpg" || ext == ".jpeg") ? "image/jpeg" : "image/png";
  try {
    return {200, read_file(path), type};
  } catch (const IoError& e) {
    return error_response(404, e.what());
  }
}

HttpResponse ReviewService::post_score(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return error_response(422, "request body is not valid JSON", "body");
  }
  if (!doc.is_object()) return error_response(422, "request body must be an object", "body");

  eval::ScoreRecord record;
  for (const char* field : {"rater_id", "image_id"}) {
    if (!doc.contains(field) || !doc[field].is_string()) {
      return error_response(422, std::string(field) + " must be a string", field);
    }
  }
  record.rater_id = doc["rater_id"].get<std::string>();
  record.image_id = doc["image_id"].get<std::string>();
  for (const char* field : {"removed_artifacts", "added_structures"}) {
    if (!doc.contains(field) || !doc[field].is_number_integer()) {
      return error_response(422, std::string(field) + " must be an integer in 0..6", field);
    }
    const auto v = doc[field].get<long long>();
    if (v < eval::kMinScore || v > eval::kMaxScore) {
      return error_response(422, std::string(field) + " must be in 0..6", field);
    }
  }
  record.removed_artifacts = doc["removed_artifacts"].get<int>();
  record.added_structures = doc["added_structures"].get<int>();

  const ReviewPair* pair = manifest_.find(record.image_id);
  if (!pair) return error_response(404, "unknown image_id '" + record.image_id + "'");
  record.color_mode = pair->color_mode;
  record.timestamp = std::chrono::floor<std::chrono::seconds>(
      std::chrono::system_clock::now());

  try {
    switch (store_.append(record)) {
      case ScoreStore::AppendStatus::kDuplicate:
        return error_response(409, "rater '" + record.rater_id +
                                       "' already scored image '" +
                                       record.image_id + "'");
      case ScoreStore::AppendStatus::kAppended:
        break;
    }
  } catch (const ValidationError& e) {
    return error_response(422, e.what(), e.field());
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return error_response(500, "score could not be persisted");
  }
  return json_response(200, {{"status", "ok"},
                             {"rater_id", record.rater_id},
                             {"image_id", record.image_id}});
}

HttpResponse ReviewService::get_progress(const std::string& rater_id) const {
  const auto ids = store_.scored_images(rater_id);
  return json_response(200, {{"rater_id", rater_id},
                             {"scored", ids},
                             {"count", ids.size()},
                             {"total", manifest_.pairs.size()}});
}

void ReviewService::register_routes(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/api/manifest", [this, send](const httplib::Request& req,
                                           httplib::Response& res) {
    send(res, get_manifest(req.has_param("rater_id")
                               ? req.get_param_value("rater_id")
                               : std::string()));
  });
  server.Get(R"(/api/image/([^/]+)/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, get_image(req.matches[1], req.matches[2]));
             });
  server.Post("/api/score", [this, send](const httplib::Request& req,
                                         httplib::Response& res) {
    send(res, post_score(req.body));
  });
  server.Get(R"(/api/progress/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, get_progress(req.matches[1]));
             });
}

void serve(ReviewService& service, const std::string& host, int port) {
  httplib::Server server;
  service.register_routes(server);
  spdlog::info("review service listening on {}:{}", host, port);
  if (!server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace histostyle::review
