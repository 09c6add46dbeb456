// Copyright 2026 The ArtContext Authors.
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

#ifndef ARTCONTEXT_CORPUS_HPP_
#define ARTCONTEXT_CORPUS_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "artcontext/io.hpp"

// Corpus discovery against an OpenAlex-compatible works API.
namespace artcontext::corpus {

struct ArtistRecord {
  std::string artist_id;
  std::string name;
};

struct WorkRecord {
  std::string work_id;
  std::string title;
  std::set<std::string> tags;
  double relevance = 0.0;
  std::string language;
  std::optional<std::string> oa_pdf_url;
  std::string artist_id;
  std::optional<std::uint64_t> byte_size;
  // Display name of the artist the work was harvested for; carried along so
  // later stages can group by creator without re-reading the roster.
  std::string artist_name;
};

struct TopicFilter {
  std::set<std::string> art_topics;
  double rho = 1.0;
};

struct QuerySpec {
  std::string url;
  // Query parameters in the order they appear in `url` (unencoded values).
  std::vector<std::pair<std::string, std::string>> params;
  std::string artist_id;
  int page = 1;
};

inline constexpr int kPerPage = 25;
inline constexpr const char* kDefaultApiBase = "https://api.openalex.org";

// RFC 3986 percent-encoding of everything outside the unreserved set.
std::string PercentEncode(std::string_view raw);

QuerySpec BuildArtistQuery(const ArtistRecord& artist, int page,
                           std::string_view api_base = kDefaultApiBase);

bool FilterWork(const WorkRecord& work, const TopicFilter& filter);

// Loose English check: "en", "eng", "en-GB" and similar.
bool IsEnglish(std::string_view language);

std::vector<ArtistRecord> LoadRoster(const fs::path& path);
TopicFilter LoadTopicFilter(const fs::path& path, double rho);

Json ToJson(const WorkRecord& w);
WorkRecord WorkFromJson(const Json& j);

// Strips an OpenAlex URL prefix ("https://openalex.org/W1" -> "W1").
std::string ShortId(std::string_view id);

struct WorksPage {
  std::vector<WorkRecord> works;  // artist_id left empty
  std::optional<std::int64_t> total_count;
};

// Parses one works-API response body. Throws kMalformedResponse.
WorksPage ParseWorksPage(std::string_view body);

struct HttpResponse {
  int status = 0;
  std::string body;
  // Seconds from a Retry-After header, when present.
  std::optional<double> retry_after;
};

class WorksClient {
 public:
  virtual ~WorksClient() = default;
  // Throws kNetwork on transport failure.
  virtual HttpResponse Fetch(const QuerySpec& query) = 0;
};

// Serves canned pages from <dir>/<artist_id>/page<N>.json. A missing page
// answers with an empty result list; a sibling page<N>.status file holding
// "<code> [retry-after]" overrides the status.
class FixtureClient : public WorksClient {
 public:
  explicit FixtureClient(fs::path dir) : dir_(std::move(dir)) {}
  HttpResponse Fetch(const QuerySpec& query) override;

 private:
  fs::path dir_;
};

class HttpWorksClient : public WorksClient {
 public:
  explicit HttpWorksClient(std::string api_base,
                           std::chrono::seconds timeout = std::chrono::seconds(30));
  HttpResponse Fetch(const QuerySpec& query) override;
  const std::string& api_base() const { return api_base_; }

 private:
  std::string api_base_;
  std::chrono::seconds timeout_;
};

// API base from $ARTCONTEXT_API_BASE, falling back to kDefaultApiBase.
std::string ApiBaseFromEnv();

struct HarvestOptions {
  int max_attempts = 5;
  double initial_backoff_s = 1.0;
  int max_pages = 400;
  std::string api_base = kDefaultApiBase;
  // Replaced in tests so retries do not block.
  std::function<void(double seconds)> sleep;
};

struct ArtistHarvest {
  std::string artist_id;
  std::string name;
  int pages_fetched = 0;
  std::size_t works_seen = 0;
  std::size_t works_kept = 0;
  std::size_t works_filtered = 0;
  std::size_t duplicates = 0;
  bool early_stop = false;
  bool unsorted_fallback = false;
  std::vector<std::string> malformed_pages;
  std::string started_at;
  std::string finished_at;
};

struct HarvestResult {
  // Per-artist groups in roster order.
  std::vector<std::pair<std::string, std::vector<WorkRecord>>> groups;
  std::vector<ArtistHarvest> artists;
  // work_id -> artist_ids, for works kept under more than one artist.
  std::map<std::string, std::vector<std::string>> cross_artist_duplicates;

  std::vector<WorkRecord> Flatten() const;
  Json Manifest() const;
};

HarvestResult Harvest(const std::vector<ArtistRecord>& roster,
                      const TopicFilter& filter, WorksClient& client,
                      const HarvestOptions& options = {});

// Writes works.jsonl and harvest_manifest.json into `out_dir`.
void WriteHarvest(const HarvestResult& result, const fs::path& out_dir);

}  // namespace artcontext::corpus

#endif  // ARTCONTEXT_CORPUS_HPP_
