#include "rehearse/http_server.hpp"

#include "httplib.h"
#include "rehearse/json_io.hpp"

namespace rehearse::api {

using json = nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::UnknownSong:
    case ErrorCode::NoDevice:
      return 404;
    case ErrorCode::DuplicateSession:
    case ErrorCode::DeviceBusy:
    case ErrorCode::SessionAlreadyActive:
    case ErrorCode::NoActiveSession:
    case ErrorCode::StartWithoutSchedule:
    case ErrorCode::CommitWithoutChunks:
      return 409;
    case ErrorCode::EmptyPerformance:
    case ErrorCode::ZeroLengthReference:
    case ErrorCode::MissingTest:
    case ErrorCode::EmptyGroup:
    case ErrorCode::DegenerateGroups:
    case ErrorCode::SongLongerThanSession:
      return 422;
    case ErrorCode::Io:
    case ErrorCode::StoreCorrupt:
      return 500;
    default:
      return 400;
  }
}

namespace {

using Handler = std::function<json(const Principal&, const httplib::Request&, httplib::Response&)>;

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = http_status(code);
  res.set_content(json{{"error", to_string(code)}, {"message", message}}.dump(), "application/json");
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("invalid JSON: ") + e.what());
  }
}

analytics::GloveCondition parse_group(std::string_view text) {
  const auto c = analytics::parse_glove_condition(text);
  if (c == analytics::GloveCondition::none) throw Error(ErrorCode::BadRequest, "groups are functional or sham");
  return c;
}

PerformanceRequest performance_request(const json& j) {
  PerformanceRequest r;
  r.song_id = j.at("song_id").get<std::string>();
  r.kind = analytics::parse_session_kind(j.value("kind", std::string("practice")));
  r.day = j.value("day", 1);
  if (j.contains("notes")) {
    r.notes = j.at("notes").get<std::vector<midi::NoteEvent>>();
  } else {
    r.messages = j.value("events", json::array()).get<std::vector<midi::TimedMessage>>();
  }
  if (j.contains("started_at_ms")) r.started_at_ms = j.at("started_at_ms").get<std::int64_t>();
  if (j.contains("ended_at_ms")) r.ended_at_ms = j.at("ended_at_ms").get<std::int64_t>();
  return r;
}

}  // namespace

void register_routes(httplib::Server& server, Service& service, const TokenAuthority& auth) {
  // Authentication happens before any handler runs, so anonymous calls never
  // touch the stores.
  auto wrap = [&auth](Handler h, int ok_status = 200) {
    return [&auth, h = std::move(h), ok_status](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto who = auth.verify_header(req.get_header_value("Authorization"));
        const json out = h(who, req, res);
        res.status = ok_status;
        res.set_content(out.dump(), "application/json");
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::BadRequest, e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::Io, e.what());
      }
    };
  };
  auto pid = [](const httplib::Request& req) { return req.path_params.at("id"); };

  server.Post("/songs", wrap(
                            [&service](const Principal& who, const httplib::Request& req, httplib::Response&) {
                              const auto type = req.get_header_value("Content-Type");
                              if (type.starts_with("application/json")) {
                                return json(service.add_song(who, body_json(req).get<midi::SongScore>()));
                              }
                              const std::span<const std::uint8_t> bytes(
                                  reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size());
                              return json(service.add_song_smf(who, bytes, req.get_param_value("title")));
                            },
                            201));
  server.Get("/songs", wrap([&service](const Principal& who, const httplib::Request&, httplib::Response&) {
               json out = json::array();
               for (const auto& s : service.list_songs(who)) {
                 out.push_back({{"id", s.id}, {"title", s.title}, {"notes", s.events.size()}});
               }
               return out;
             }));
  server.Get("/songs/:id", wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
               return json(service.get_song(who, pid(req)));
             }));

  server.Post("/participants/:id/performances",
              wrap(
                  [&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                    return json(service.submit_performance(who, pid(req), performance_request(body_json(req))));
                  },
                  201));
  server.Get("/participants/:id/progress",
             wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
               return json{{"participant_id", pid(req)},
                           {"points", progress_json(service.progress(who, pid(req)), who.is_analyst())}};
             }));
  server.Get("/participants/:id/assignment",
             wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
               return json(service.participant_assignment(who, pid(req)));
             }));

  server.Get("/participants/:id/live",
             wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
               return json{{"state", to_string(service.live_state(who, pid(req)))}};
             }));
  server.Post("/participants/:id/live/start",
              wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                const auto j = body_json(req);
                service.live_start(who, pid(req), analytics::parse_session_kind(j.value("kind", std::string("practice"))),
                                   j.at("song_id").get<std::string>(), j.value("day", 1));
                return json{{"state", to_string(service.live_state(who, pid(req)))}};
              }));
  server.Post("/participants/:id/live/events",
              wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                const auto j = body_json(req);
                const auto n = service.live_append(who, pid(req), j.at("events").get<std::vector<midi::TimedMessage>>());
                return json{{"buffered", n}};
              }));
  server.Post("/participants/:id/live/stop",
              wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                const auto result = service.live_stop(who, pid(req));
                if (!result) return json{{"discarded", true}};
                json out = *result;
                out["discarded"] = false;
                return out;
              }));
  server.Delete("/participants/:id/live",
                wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                  service.live_cancel(who, pid(req));
                  return json{{"state", "idle"}};
                }));
  server.Post("/participants/:id/passive/start",
              wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                const auto j = body_json(req);
                return json(service.passive_start(who, pid(req), j.value("song_id", std::string{}), j.value("day", 1)));
              }));
  server.Post("/participants/:id/passive/stop",
              wrap(
                  [&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                    return json(service.passive_stop(who, pid(req)));
                  },
                  201));

  server.Post("/gloves/:id/commands",
              wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                const auto j = body_json(req);
                GloveCommand cmd;
                cmd.kind = parse_glove_command(j.at("command").get<std::string>());
                cmd.song_id = j.value("song_id", std::string{});
                cmd.minutes = j.value("minutes", 150.0);
                cmd.advance_ms = j.value("ms", std::int64_t{0});
                return json(service.glove_command(who, pid(req), cmd));
              }));
  server.Post("/gloves/:id/assign",
              wrap([&service, pid](const Principal& who, const httplib::Request& req, httplib::Response&) {
                const auto j = body_json(req);
                service.assign_glove(who, pid(req),
                                     {j.at("participant_id").get<std::string>(),
                                      parse_group(j.at("condition").get<std::string>())});
                return json{{"glove_id", pid(req)}, {"participant_id", j.at("participant_id")}};
              }));

  server.Get("/study/assignments", wrap([&service](const Principal& who, const httplib::Request&, httplib::Response&) {
               return json(service.assignments(who));
             }));
  server.Post("/study/teams", wrap(
                                  [&service](const Principal& who, const httplib::Request& req, httplib::Response&) {
                                    const auto j = body_json(req);
                                    return json(service.create_team(who, j.at("team").get<study::Team>(),
                                                                    j.value("seed", std::uint64_t{0})));
                                  },
                                  201));
  server.Get("/study/compare", wrap([&service](const Principal& who, const httplib::Request& req, httplib::Response&) {
               const auto metric = analytics::parse_metric(req.get_param_value("metric"));
               auto groups = req.has_param("groups") ? req.get_param_value("groups") : std::string("functional,sham");
               const auto comma = groups.find(',');
               if (comma == std::string::npos) throw Error(ErrorCode::BadRequest, "groups takes two names");
               stats::PermutationOptions opt;
               if (req.has_param("seed")) opt.seed = std::stoull(req.get_param_value("seed"));
               const auto r = service.compare(who, metric, parse_group(groups.substr(0, comma)),
                                              parse_group(groups.substr(comma + 1)), opt);
               return json(r);
             }));
}

}  // namespace rehearse::api
