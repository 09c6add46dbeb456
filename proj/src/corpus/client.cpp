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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <sstream>

#include "artcontext/corpus.hpp"
#include "artcontext/error.hpp"
#include "artcontext/text.hpp"

namespace artcontext::corpus {

HttpResponse FixtureClient::Fetch(const QuerySpec& query) {
  const fs::path base = dir_ / query.artist_id;
  const fs::path page = base / ("page" + std::to_string(query.page) + ".json");
  const fs::path status = base / ("page" + std::to_string(query.page) + ".status");
  HttpResponse resp;
  resp.status = 200;
  if (fs::exists(status)) {
    std::istringstream in(ReadFile(status));
    in >> resp.status;
    double retry = 0;
    if (in >> retry) resp.retry_after = retry;
  }
  if (fs::exists(page)) {
    resp.body = ReadFile(page);
  } else if (resp.status == 200) {
    resp.body = R"({"meta":{"count":0},"results":[]})";
  }
  return resp;
}

HttpWorksClient::HttpWorksClient(std::string api_base,
                                 std::chrono::seconds timeout)
    : api_base_(std::move(api_base)), timeout_(timeout) {
  while (!api_base_.empty() && api_base_.back() == '/') api_base_.pop_back();
}

HttpResponse HttpWorksClient::Fetch(const QuerySpec& query) {
  // Split "scheme://host[:port]/path?query" into origin and target.
  const auto scheme_end = query.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kValidation, "not an absolute URL: " + query.url);
  }
  const auto path_start = query.url.find('/', scheme_end + 3);
  const std::string origin = query.url.substr(0, path_start);
  const std::string target =
      path_start == std::string::npos ? "/" : query.url.substr(path_start);

  httplib::Client cli(origin);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_follow_location(true);
  auto res = cli.Get(target);
  if (!res) {
    throw Error(ErrorCode::kNetwork,
                query.url + ": " + httplib::to_string(res.error()));
  }
  HttpResponse out;
  out.status = res->status;
  out.body = res->body;
  if (res->has_header("Retry-After")) {
    try {
      out.retry_after = std::stod(res->get_header_value("Retry-After"));
    } catch (const std::exception&) {
      // HTTP-date form; fall back to the client's own backoff.
    }
  }
  return out;
}

}  // namespace artcontext::corpus
