#pragma once

#include <string>

#include "rehearse/auth.hpp"
#include "rehearse/error.hpp"
#include "rehearse/service.hpp"

namespace httplib {
class Server;
}

namespace rehearse::api {

// Resources (JSON bodies unless noted, all behind `Authorization: Bearer`):
//   POST   /songs                               analyst; SMF bytes or a song record
//   GET    /songs, /songs/:id
//   POST   /participants/:id/performances       score and store one test or practice take
//   GET    /participants/:id/progress
//   GET    /participants/:id/assignment         blinded study cells
//   GET    /participants/:id/live               live capture state
//   POST   /participants/:id/live/start         {kind, song_id, day}
//   POST   /participants/:id/live/events        {events: [...]}
//   POST   /participants/:id/live/stop
//   DELETE /participants/:id/live
//   POST   /participants/:id/passive/start      {day, song_id?}
//   POST   /participants/:id/passive/stop
//   POST   /gloves/:id/commands                 {command, song_id?, minutes?, ms?}
//          command: upload_schedule start stop status advance charge
//   POST   /gloves/:id/assign                   analyst; {participant_id, condition}
//   GET    /study/assignments                   analyst
//   POST   /study/teams                         analyst; {team, seed}
//   GET    /study/compare?metric=&groups=a,b    analyst
// Errors come back as {"error": <code>, "message": <text>}.

int http_status(ErrorCode code);

void register_routes(httplib::Server& server, Service& service, const TokenAuthority& auth);

}  // namespace rehearse::api
