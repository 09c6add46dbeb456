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

#include <cmath>
#include <thread>

#include "artcontext/corpus.hpp"
#include "artcontext/error.hpp"

namespace artcontext::corpus {
namespace {

void DefaultSleep(double seconds) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

// Fetches one page, retrying transport failures, 5xx and 429 responses.
HttpResponse FetchWithRetry(WorksClient& client, const QuerySpec& query,
                            const HarvestOptions& opts) {
  const auto& sleep = opts.sleep ? opts.sleep : DefaultSleep;
  for (int attempt = 1;; ++attempt) {
    const double backoff = opts.initial_backoff_s * std::pow(2.0, attempt - 1);
    try {
      HttpResponse resp = client.Fetch(query);
      if (resp.status == 429) {
        if (attempt >= opts.max_attempts) {
          throw Error(ErrorCode::kRateLimited,
                      query.url + ": still rate limited after " +
                          std::to_string(attempt) + " attempts");
        }
        sleep(resp.retry_after.value_or(backoff));
        continue;
      }
      if (resp.status >= 500) {
        throw Error(ErrorCode::kNetwork,
                    query.url + ": HTTP " + std::to_string(resp.status));
      }
      return resp;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNetwork || attempt >= opts.max_attempts) {
        throw;
      }
      sleep(backoff);
    }
  }
}

}  // namespace

std::vector<WorkRecord> HarvestResult::Flatten() const {
  std::vector<WorkRecord> out;
  for (const auto& [id, works] : groups) {
    out.insert(out.end(), works.begin(), works.end());
  }
  return out;
}

Json HarvestResult::Manifest() const {
  Json m;
  m["artists"] = Json::array();
  std::size_t kept = 0;
  std::size_t seen = 0;
  for (const auto& a : artists) {
    m["artists"].push_back({
        {"artist_id", a.artist_id},
        {"name", a.name},
        {"pages_fetched", a.pages_fetched},
        {"works_seen", a.works_seen},
        {"works_kept", a.works_kept},
        {"works_filtered", a.works_filtered},
        {"duplicates", a.duplicates},
        {"early_stop", a.early_stop},
        {"unsorted_fallback", a.unsorted_fallback},
        {"malformed_pages", a.malformed_pages},
        {"started_at", a.started_at},
        {"finished_at", a.finished_at},
    });
    kept += a.works_kept;
    seen += a.works_seen;
  }
  m["cross_artist_duplicates"] = Json::object();
  for (const auto& [work, ids] : cross_artist_duplicates) {
    m["cross_artist_duplicates"][work] = ids;
  }
  m["total_seen"] = seen;
  m["total_kept"] = kept;
  return m;
}

HarvestResult Harvest(const std::vector<ArtistRecord>& roster,
                      const TopicFilter& filter, WorksClient& client,
                      const HarvestOptions& options) {
  HarvestResult result;
  std::map<std::string, std::vector<std::string>> owners;
  for (const auto& artist : roster) {
    ArtistHarvest stats;
    stats.artist_id = artist.artist_id;
    stats.name = artist.name;
    stats.started_at = NowIso8601();
    std::vector<WorkRecord> kept;
    std::set<std::string> seen_ids;
    bool sorted = true;
    std::optional<double> previous;

    for (int page = 1; page <= options.max_pages; ++page) {
      const QuerySpec q = BuildArtistQuery(artist, page, options.api_base);
      const HttpResponse resp = FetchWithRetry(client, q, options);
      ++stats.pages_fetched;
      if (resp.status != 200) {
        stats.malformed_pages.push_back("page " + std::to_string(page) +
                                        ": HTTP " + std::to_string(resp.status));
        continue;
      }
      WorksPage parsed;
      try {
        parsed = ParseWorksPage(resp.body);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMalformedResponse) throw;
        stats.malformed_pages.push_back("page " + std::to_string(page) + ": " +
                                        e.what());
        continue;
      }
      if (parsed.works.empty()) break;

      for (auto& w : parsed.works) {
        if (previous && w.relevance > *previous) sorted = false;
        previous = w.relevance;
        ++stats.works_seen;
        if (!seen_ids.insert(w.work_id).second) {
          ++stats.duplicates;
          continue;
        }
        w.artist_id = artist.artist_id;
        w.artist_name = artist.name;
        if (FilterWork(w, filter)) {
          owners[w.work_id].push_back(artist.artist_id);
          kept.push_back(std::move(w));
        } else {
          ++stats.works_filtered;
        }
      }
      if (parsed.total_count &&
          static_cast<std::int64_t>(page) * kPerPage >= *parsed.total_count) {
        break;
      }
      // Relevance-sorted results cannot recover once they reach rho.
      if (sorted && previous && *previous <= filter.rho) {
        stats.early_stop = true;
        break;
      }
    }
    stats.unsorted_fallback = !sorted;
    stats.works_kept = kept.size();
    stats.finished_at = NowIso8601();
    result.groups.emplace_back(artist.artist_id, std::move(kept));
    result.artists.push_back(std::move(stats));
  }
  for (auto& [work, ids] : owners) {
    if (ids.size() > 1) result.cross_artist_duplicates[work] = ids;
  }
  return result;
}

void WriteHarvest(const HarvestResult& result, const fs::path& out_dir) {
  std::vector<Json> rows;
  for (const auto& w : result.Flatten()) rows.push_back(ToJson(w));
  WriteFileAtomic(out_dir / "works.jsonl", ToJsonl(rows));
  WriteFileAtomic(out_dir / "harvest_manifest.json",
                  result.Manifest().dump(2) + "\n");
}

}  // namespace artcontext::corpus
