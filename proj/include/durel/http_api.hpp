/*
 * Copyright 2026 The durel-kit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP/JSON front end of a StudyStore.
//
//   PUT  /studies/{id}                          {"task_csv","key_csv","roster","policy"}
//   GET  /studies/{id}/annotators/{a}/next      blinded row or {"done":true}
//   POST /studies/{id}/annotators/{a}/judgments {"pair_id","value"}
//   GET  /studies/{id}/progress
//   GET  /studies/{id}/export                   judgment CSV
//
// Annotator routes require `Authorization: Bearer <token>` from the roster.
// When ApiOptions::admin_token is set the other routes require it. Errors are
// {"code","message"}.

#pragma once

#include <sstream>
#include <string>
#include <string_view>

#include "httplib.h"
#include "json.hpp"

#include "durel/study.hpp"

namespace durel {

struct ApiOptions {
  std::string admin_token;  // empty: admin routes are open
  DuplicatePolicy default_policy = DuplicatePolicy::kReject;
};

namespace api {

using Json = nlohmann::ordered_json;

inline void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                       Json extra = Json::object()) {
  Json body{{"code", code}, {"message", message}};
  for (auto& [k, v] : extra.items()) body[k] = v;
  send_json(res, status, body);
}

inline std::string bearer_token(const httplib::Request& req) {
  const auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() > prefix.size() && std::string_view(h).substr(0, prefix.size()) == prefix) return h.substr(prefix.size());
  return {};
}

inline Json use_json(const UseText& u) { return Json{{"prev", u.prev}, {"sent", u.sent}, {"next", u.next}}; }

inline Json progress_json(const Progress& p) {
  Json out{{"study_id", p.study_id}, {"total", p.total}, {"annotators", Json::array()}};
  for (const auto& a : p.annotators)
    out["annotators"].push_back(
        {{"annotator", a.annotator}, {"judged", a.judged}, {"remaining", a.remaining}, {"percent", a.percent}});
  return out;
}

/// Runs `body`, mapping toolkit exceptions onto HTTP errors.
template <typename Body>
void guarded(httplib::Response& res, Body&& body) {
  try {
    body();
  } catch (const UnauthorizedError& e) {
    send_error(res, 401, "unauthorized", e.what());
  } catch (const NotFoundError& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const ConflictError& e) {
    send_error(res, 409, "conflict", e.what(), Json{{"stored_value", e.stored_value()}});
  } catch (const StudyExistsError& e) {
    send_error(res, 409, "study_exists", e.what());
  } catch (const ParseError& e) {
    send_error(res, 400, "invalid_payload", e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, "invalid", e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "invalid_json", e.what());
  } catch (const IoError& e) {
    send_error(res, 500, "io_error", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace api

inline void install_routes(httplib::Server& server, StudyStore& store, ApiOptions options = {}) {
  using api::Json;

  auto require_admin = [options](const httplib::Request& req) {
    if (!options.admin_token.empty() && api::bearer_token(req) != options.admin_token)
      throw UnauthorizedError("admin token required");
  };
  auto require_annotator = [&store](const httplib::Request& req, const std::string& study, const std::string& who) {
    Study& s = store.study(study);
    if (!s.has_annotator(who)) throw NotFoundError("annotator '" + who + "' is not on the roster");
    if (!s.authorized(who, api::bearer_token(req))) throw UnauthorizedError("missing or wrong annotator token");
    return std::ref(s);
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/studies/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
    res.status = 204;
  });

  server.Put(R"(/studies/([^/]+))", [&store, require_admin, options](const httplib::Request& req, httplib::Response& res) {
    api::guarded(res, [&] {
      require_admin(req);
      const auto body = Json::parse(req.body);
      std::istringstream task_in(body.at("task_csv").get<std::string>());
      std::istringstream key_in(body.at("key_csv").get<std::string>());
      AnnotationTask task = read_task(task_in).task;
      TaskKey key = read_key(key_in);
      std::vector<RosterEntry> roster;
      for (const auto& r : body.at("roster")) {
        if (r.is_string()) roster.push_back({r.get<std::string>(), {}});
        else roster.push_back({r.at("id").get<std::string>(), r.value("token", std::string{})});
      }
      DuplicatePolicy policy = options.default_policy;
      if (body.contains("policy")) {
        const auto p = parse_policy(body.at("policy").get<std::string>());
        if (!p) throw ValidationError("policy must be 'reject' or 'latest-wins'");
        policy = *p;
      }
      const auto r = store.create_study(req.matches[1], std::move(task), std::move(key), std::move(roster), policy);
      Json out{{"study_id", r.study_id}, {"created", r.created}, {"policy", to_string(r.policy)},
               {"rows", r.rows}, {"annotators", Json::array()}};
      for (const auto& a : r.roster) out["annotators"].push_back({{"id", a.id}, {"token", a.token}});
      api::send_json(res, r.created ? 201 : 200, out);
    });
  });

  server.Get(R"(/studies/([^/]+)/annotators/([^/]+)/next)",
             [require_annotator](const httplib::Request& req, httplib::Response& res) {
               api::guarded(res, [&] {
                 Study& s = require_annotator(req, req.matches[1], req.matches[2]);
                 const NextPair n = s.next_pair(std::string(req.matches[2]));
                 Json out;
                 out["done"] = !n.row.has_value();
                 if (n.row) {
                   out["pair_id"] = n.row->pair_id;
                   out["first"] = api::use_json(n.row->first);
                   out["second"] = api::use_json(n.row->second);
                 }
                 out["progress"] = {{"judged", n.judged}, {"total", n.total}};
                 api::send_json(res, 200, out);
               });
             });

  server.Post(R"(/studies/([^/]+)/annotators/([^/]+)/judgments)",
              [require_annotator](const httplib::Request& req, httplib::Response& res) {
                api::guarded(res, [&] {
                  Study& s = require_annotator(req, req.matches[1], req.matches[2]);
                  const auto body = Json::parse(req.body);
                  const auto& v = body.at("value");
                  if (!v.is_number_integer()) throw ValidationError("value must be an integer in 0..4");
                  const auto r = s.submit(std::string(req.matches[2]), body.at("pair_id").get<std::string>(),
                                          v.get<int>());
                  api::send_json(res, 200,
                                 Json{{"pair_id", r.pair_id},
                                      {"value", r.value},
                                      {"duplicate", r.duplicate},
                                      {"timestamp", format_timestamp(r.timestamp)},
                                      {"progress", {{"judged", r.judged}, {"total", r.total}}}});
                });
              });

  server.Get(R"(/studies/([^/]+)/progress)", [&store, require_admin](const httplib::Request& req, httplib::Response& res) {
    api::guarded(res, [&] {
      require_admin(req);
      api::send_json(res, 200, api::progress_json(store.progress(std::string(req.matches[1]))));
    });
  });

  server.Get(R"(/studies/([^/]+)/export)", [&store, require_admin](const httplib::Request& req, httplib::Response& res) {
    api::guarded(res, [&] {
      require_admin(req);
      res.status = 200;
      res.set_content(store.export_judgments(std::string(req.matches[1])), "text/csv");
    });
  });
}

}  // namespace durel
