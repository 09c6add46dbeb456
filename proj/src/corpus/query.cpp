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

#include <cstdlib>
#include <sstream>

#include "artcontext/corpus.hpp"
#include "artcontext/error.hpp"
#include "artcontext/text.hpp"

namespace artcontext::corpus {

std::string PercentEncode(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size() * 3);
  for (const char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '.' ||
                            c == '_' || c == '~';
    if (unreserved) {
      out.push_back(ch);
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

QuerySpec BuildArtistQuery(const ArtistRecord& artist, int page,
                           std::string_view api_base) {
  if (page < 1) {
    throw Error(ErrorCode::kValidation, "page must be >= 1");
  }
  QuerySpec q;
  q.artist_id = artist.artist_id;
  q.page = page;
  // The works API has no server-side "has a PDF" switch that is stable
  // across versions, so the OA filter is applied here and the PDF link is
  // enforced again by FilterWork.
  q.params = {
      {"search", artist.name},
      {"filter", "language:en,open_access.is_oa:true"},
      {"sort", "relevance_score:desc"},
      {"per-page", std::to_string(kPerPage)},
      {"page", std::to_string(page)},
  };
  std::string base(api_base);
  while (!base.empty() && base.back() == '/') base.pop_back();
  std::string url = base + "/works?";
  bool first = true;
  for (const auto& [key, value] : q.params) {
    if (!first) url.push_back('&');
    first = false;
    url += key;
    url.push_back('=');
    // Filter syntax uses ':' and ',' as structure; keep them literal.
    if (key == "filter" || key == "sort") {
      url += value;
    } else {
      url += PercentEncode(value);
    }
  }
  q.url = std::move(url);
  return q;
}

bool IsEnglish(std::string_view language) {
  const std::string lang = text::ToLowerAscii(text::Trim(language));
  return lang == "en" || lang == "eng" || lang == "english" ||
         lang.rfind("en-", 0) == 0 || lang.rfind("en_", 0) == 0;
}

bool FilterWork(const WorkRecord& work, const TopicFilter& filter) {
  bool topic_hit = false;
  for (const auto& tag : work.tags) {
    if (filter.art_topics.count(tag) != 0) {
      topic_hit = true;
      break;
    }
  }
  const bool has_pdf = work.oa_pdf_url.has_value() && !work.oa_pdf_url->empty();
  return topic_hit && work.relevance > filter.rho && IsEnglish(work.language) &&
         has_pdf;
}

std::string ShortId(std::string_view id) {
  const auto slash = id.find_last_of('/');
  if (slash == std::string_view::npos) return std::string(id);
  return std::string(id.substr(slash + 1));
}

std::string ApiBaseFromEnv() {
  const char* env = std::getenv("ARTCONTEXT_API_BASE");
  if (env != nullptr && *env != '\0') return env;
  return kDefaultApiBase;
}

std::vector<ArtistRecord> LoadRoster(const fs::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<ArtistRecord> roster;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = text::Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    ArtistRecord a;
    if (trimmed[0] == '{') {
      const Json j = Json::parse(trimmed, nullptr, false);
      if (j.is_discarded() || !j.contains("artist_id") || !j.contains("name")) {
        throw Error(ErrorCode::kFormat, path.string() + ":" +
                                            std::to_string(lineno) +
                                            ": expected {artist_id, name}");
      }
      a.artist_id = j.at("artist_id").get<std::string>();
      a.name = j.at("name").get<std::string>();
    } else {
      const auto tab = trimmed.find('\t');
      if (tab == std::string::npos) {
        throw Error(ErrorCode::kFormat, path.string() + ":" +
                                            std::to_string(lineno) +
                                            ": expected artist_id<TAB>name");
      }
      a.artist_id = text::Trim(trimmed.substr(0, tab));
      a.name = text::Trim(trimmed.substr(tab + 1));
    }
    if (a.artist_id.empty() || a.name.empty()) {
      throw Error(ErrorCode::kValidation,
                  path.string() + ":" + std::to_string(lineno) +
                      ": artist_id and name must be non-empty");
    }
    if (!ids.insert(a.artist_id).second) {
      throw Error(ErrorCode::kValidation,
                  "duplicate artist_id in roster: " + a.artist_id);
    }
    roster.push_back(std::move(a));
  }
  return roster;
}

TopicFilter LoadTopicFilter(const fs::path& path, double rho) {
  if (rho < 0) throw Error(ErrorCode::kValidation, "rho must be >= 0");
  TopicFilter f;
  f.rho = rho;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = text::Trim(line);
    // Allow an optional description after the id: "T12345  Art History".
    const auto ws = t.find_first_of(" \t");
    if (ws != std::string::npos) t.erase(ws);
    if (!t.empty()) f.art_topics.insert(ShortId(t));
  }
  if (f.art_topics.empty()) {
    throw Error(ErrorCode::kValidation, "topic file lists no topics: " +
                                            path.string());
  }
  return f;
}

Json ToJson(const WorkRecord& w) {
  Json j;
  j["work_id"] = w.work_id;
  j["title"] = w.title;
  j["tags"] = w.tags;
  j["relevance"] = w.relevance;
  j["language"] = w.language;
  j["oa_pdf_url"] = w.oa_pdf_url ? Json(*w.oa_pdf_url) : Json(nullptr);
  j["artist_id"] = w.artist_id;
  j["artist_name"] = w.artist_name;
  j["byte_size"] = w.byte_size ? Json(*w.byte_size) : Json(nullptr);
  return j;
}

WorkRecord WorkFromJson(const Json& j) {
  WorkRecord w;
  w.work_id = j.at("work_id").get<std::string>();
  w.title = j.value("title", "");
  if (j.contains("tags")) w.tags = j.at("tags").get<std::set<std::string>>();
  w.relevance = j.value("relevance", 0.0);
  w.language = j.value("language", "");
  if (j.contains("oa_pdf_url") && j.at("oa_pdf_url").is_string()) {
    w.oa_pdf_url = j.at("oa_pdf_url").get<std::string>();
  }
  w.artist_id = j.value("artist_id", "");
  w.artist_name = j.value("artist_name", "");
  if (j.contains("byte_size") && j.at("byte_size").is_number()) {
    w.byte_size = j.at("byte_size").get<std::uint64_t>();
  }
  return w;
}

WorksPage ParseWorksPage(std::string_view body) {
  const Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("results") ||
      !j.at("results").is_array()) {
    throw Error(ErrorCode::kMalformedResponse,
                "response is not a works page with a results array");
  }
  WorksPage page;
  if (j.contains("meta") && j.at("meta").is_object()) {
    const auto& meta = j.at("meta");
    if (meta.contains("count") && meta.at("count").is_number_integer()) {
      page.total_count = meta.at("count").get<std::int64_t>();
    }
  }
  for (const auto& r : j.at("results")) {
    if (!r.is_object() || !r.contains("id") || !r.at("id").is_string()) {
      throw Error(ErrorCode::kMalformedResponse, "work without string id");
    }
    WorkRecord w;
    w.work_id = ShortId(r.at("id").get<std::string>());
    if (r.contains("title") && r.at("title").is_string()) {
      w.title = r.at("title").get<std::string>();
    } else if (r.contains("display_name") && r.at("display_name").is_string()) {
      w.title = r.at("display_name").get<std::string>();
    }
    if (r.contains("relevance_score") && r.at("relevance_score").is_number()) {
      w.relevance = r.at("relevance_score").get<double>();
    }
    if (w.relevance < 0) {
      throw Error(ErrorCode::kMalformedResponse,
                  "negative relevance_score for " + w.work_id);
    }
    if (r.contains("language") && r.at("language").is_string()) {
      w.language = r.at("language").get<std::string>();
    }
    if (r.contains("topics") && r.at("topics").is_array()) {
      for (const auto& t : r.at("topics")) {
        if (t.is_object() && t.contains("id") && t.at("id").is_string()) {
          w.tags.insert(ShortId(t.at("id").get<std::string>()));
        } else if (t.is_string()) {
          w.tags.insert(ShortId(t.get<std::string>()));
        }
      }
    }
    if (r.contains("best_oa_location") && r.at("best_oa_location").is_object()) {
      const auto& loc = r.at("best_oa_location");
      if (loc.contains("pdf_url") && loc.at("pdf_url").is_string()) {
        w.oa_pdf_url = loc.at("pdf_url").get<std::string>();
      }
    }
    page.works.push_back(std::move(w));
  }
  return page;
}

}  // namespace artcontext::corpus
