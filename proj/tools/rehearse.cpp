#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "rehearse/error.hpp"
#include "rehearse/http_server.hpp"
#include "rehearse/json_io.hpp"
#include "rehearse/kernels.hpp"

using namespace rehearse;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const api::Principal kLocal{api::Role::analyst, "cli"};

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string read_text(const fs::path& path) {
  const auto b = read_bytes(path);
  return {b.begin(), b.end()};
}

bool is_smf(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 4 && bytes[0] == 'M' && bytes[1] == 'T' && bytes[2] == 'h' && bytes[3] == 'd';
}

api::ServiceConfig service_config(const std::string& data_dir) {
  api::ServiceConfig cfg;
  cfg.data_dir = data_dir;
  return cfg;
}

// A song argument is a stored song id, an SMF file or a song record file.
midi::SongScore load_song(const std::string& arg, const std::string& data_dir) {
  if (fs::is_regular_file(arg)) {
    const auto bytes = read_bytes(arg);
    if (is_smf(bytes)) return midi::parse_smf(bytes).song;
    return json::parse(bytes.begin(), bytes.end()).get<midi::SongScore>();
  }
  api::Service svc(service_config(data_dir));
  return svc.get_song(kLocal, arg);
}

// Captures: SMF, a JSON array of keyboard messages, {"events": [...]}, or
// {"notes": [...]} of already paired notes.
std::vector<midi::NoteEvent> load_capture(const std::string& path) {
  const auto bytes = read_bytes(path);
  if (is_smf(bytes)) return midi::parse_smf(bytes).song.events;
  const auto j = json::parse(bytes.begin(), bytes.end());
  if (j.is_object() && j.contains("notes")) return j.at("notes").get<std::vector<midi::NoteEvent>>();
  const auto& msgs = j.is_object() ? j.at("events") : j;
  const auto stream = msgs.get<std::vector<midi::TimedMessage>>();
  const auto captured = midi::capture_events(stream);
  if (captured.orphan_note_offs || captured.unterminated_notes) {
    std::cerr << "capture: " << captured.orphan_note_offs << " orphan note-offs, " << captured.unterminated_notes
              << " unterminated notes\n";
  }
  return captured.events;
}

void print_report(const eval::EvalReport& r) {
  const auto& a = r.alignment;
  std::printf("score            %.4f\n", r.score);
  std::printf("total_cost       %.6g\n", r.total_cost);
  std::printf("alignment_cost   %.6g  (match %d, substitution %d, deletion %d, insertion %d)\n", a.alignment_cost,
              a.count(eval::OpKind::match), a.count(eval::OpKind::substitution), a.count(eval::OpKind::deletion),
              a.count(eval::OpKind::insertion));
  std::printf("timing_cost      %lld  (T = %lld ms)\n", static_cast<long long>(a.timing_cost),
              static_cast<long long>(r.config.timing_threshold_ms));
}

int run_serve(int port, const std::string& host, const std::string& data_dir, double glove_speed) {
  const auto auth = api::TokenAuthority::from_env();
  if (!auth) {
    std::cerr << "set " << api::kTokenSecretEnv << " to the token signing secret\n";
    return 1;
  }
  auto cfg = service_config(data_dir);
  cfg.glove_speed = glove_speed;
  api::Service svc(cfg);
  httplib::Server server;
  api::register_routes(server, svc, *auth);
  std::cerr << "listening on " << host << ":" << port << ", data in " << data_dir << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rehearse: piano performance scoring, haptic schedules and study tooling"};
  app.require_subcommand(1);
  std::string data_dir = "rehearse-data";
  app.add_option("--data-dir", data_dir, "Service data directory")->capture_default_str();
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output");

  // song import
  auto* song = app.add_subcommand("song", "Song library")->require_subcommand(1);
  auto* song_import = song->add_subcommand("import", "Parse a MIDI file and add it to the library");
  std::string song_file, song_title;
  song_import->add_option("file", song_file)->required()->check(CLI::ExistingFile);
  song_import->add_option("--title", song_title);

  // eval
  auto* ev = app.add_subcommand("eval", "Score a performance against a reference");
  std::string ref_arg, perf_arg;
  eval::EvalConfig ecfg;
  ev->add_option("--ref", ref_arg, "Song id, MIDI file or song record")->required();
  ev->add_option("--perf", perf_arg, "Captured performance (MIDI or JSON)")->required()->check(CLI::ExistingFile);
  ev->add_option("--T", ecfg.timing_threshold_ms, "Timing threshold in ms")->capture_default_str();
  ev->add_option("--wa", ecfg.weight_alignment, "Alignment weight")->capture_default_str();
  ev->add_option("--wt", ecfg.weight_timing, "Timing weight")->capture_default_str();
  ev->add_option("--window", ecfg.chord_window_ms, "Chord window in ms")->capture_default_str();

  // schedule build
  auto* sched = app.add_subcommand("schedule", "Stimulus schedules")->require_subcommand(1);
  auto* sched_build = sched->add_subcommand("build", "Compile a song into a passive-session schedule");
  std::string sched_song, sched_out;
  double sched_minutes = 150;
  bool sched_sham = false;
  haptic::CompileConfig ccfg;
  sched_build->add_option("--song", sched_song, "Song id, MIDI file or song record")->required();
  sched_build->add_option("--minutes", sched_minutes)->capture_default_str();
  sched_build->add_flag("--sham", sched_sham);
  sched_build->add_option("--max-pulse", ccfg.max_pulse_ms)->capture_default_str();
  sched_build->add_option("--min-gap", ccfg.min_gap_ms)->capture_default_str();
  sched_build->add_option("--loop-gap", ccfg.loop_gap_ms)->capture_default_str();
  sched_build->add_option("-o,--out", sched_out, "Write here instead of stdout");

  // glove-sim run
  auto* gsim = app.add_subcommand("glove-sim", "Simulated glove pair")->require_subcommand(1);
  auto* gsim_run = gsim->add_subcommand("run", "Upload and play a schedule, printing the activation trace");
  std::string gsim_file, gsim_trace;
  double gsim_minutes = 150;
  glove::LinkConfig link;
  double start_battery = 100.0;
  gsim_run->add_option("--schedule", gsim_file)->required()->check(CLI::ExistingFile);
  gsim_run->add_option("--minutes", gsim_minutes, "Simulated minutes to run")->capture_default_str();
  gsim_run->add_option("--drop-rate", link.drop_rate)->check(CLI::Range(0.0, 0.99))->capture_default_str();
  gsim_run->add_option("--seed", link.seed)->capture_default_str();
  gsim_run->add_option("--skew-ppm", link.slave_skew_ppm, "Slave clock skew")->capture_default_str();
  gsim_run->add_option("--battery", start_battery, "Starting charge in percent")->capture_default_str();
  gsim_run->add_option("--trace", gsim_trace, "Write the edge trace here (default stdout)");

  // report participant
  auto* report = app.add_subcommand("report", "Reports")->require_subcommand(1);
  auto* report_p = report->add_subcommand("participant", "Per-day progress of one participant");
  std::string report_id;
  report_p->add_option("id", report_id)->required();

  // stats compare
  auto* st = app.add_subcommand("stats", "Group statistics")->require_subcommand(1);
  auto* st_cmp = st->add_subcommand("compare", "Permutation test between glove conditions");
  std::string metric_name = "passive_retention", groups = "functional,sham";
  stats::PermutationOptions popt;
  st_cmp->add_option("--metric", metric_name)->capture_default_str();
  st_cmp->add_option("--groups", groups)->capture_default_str();
  st_cmp->add_option("--iterations", popt.iterations)->capture_default_str();
  st_cmp->add_option("--seed", popt.seed)->capture_default_str();

  // study assign / unblind
  auto* sty = app.add_subcommand("study", "Counterbalanced study design")->require_subcommand(1);
  auto* sty_assign = sty->add_subcommand("assign", "Assign a team to the Latin square");
  std::string team_file, team_id, role_name = "participant";
  std::uint64_t team_seed = 0;
  sty_assign->add_option("--team", team_file, "Team record (JSON)")->required()->check(CLI::ExistingFile);
  sty_assign->add_option("--seed", team_seed)->required();
  auto* sty_unblind = sty->add_subcommand("unblind", "Show glove conditions for a team");
  sty_unblind->add_option("--team", team_id)->required();
  sty_unblind->add_option("--role", role_name, "Caller role; only analyst may unblind")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1";
  double glove_speed = 1.0;
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--glove-speed", glove_speed, "Simulated glove seconds per wall second; 0 for manual")
      ->capture_default_str();

  // token issue
  auto* token = app.add_subcommand("token", "Bearer tokens")->require_subcommand(1);
  auto* token_issue = token->add_subcommand("issue", "Sign a token with the secret from the environment");
  std::string token_role = "participant", token_subject;
  token_issue->add_option("--role", token_role)->capture_default_str();
  token_issue->add_option("--subject", token_subject)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (song_import->parsed()) {
      api::Service svc(service_config(data_dir));
      const auto bytes = read_bytes(song_file);
      const auto parsed = midi::parse_smf(bytes);
      const auto stored =
          svc.add_song_smf(kLocal, bytes, song_title.empty() ? fs::path(song_file).stem().string() : song_title);
      if (as_json) {
        std::cout << json{{"id", stored.id},
                          {"title", stored.title},
                          {"notes", stored.events.size()},
                          {"orphan_note_offs", parsed.diagnostics.orphan_note_offs},
                          {"unterminated_notes", parsed.diagnostics.unterminated_notes}}
                         .dump(2)
                  << "\n";
      } else {
        const auto end = stored.events.empty() ? 0 : stored.events.back().onset_ms + stored.events.back().duration_ms;
        std::cout << stored.id << "  " << stored.title << "  " << stored.events.size() << " notes, " << end << " ms\n";
        if (parsed.diagnostics.orphan_note_offs || parsed.diagnostics.unterminated_notes) {
          std::cout << "warning: " << parsed.diagnostics.orphan_note_offs << " orphan note-offs, "
                    << parsed.diagnostics.unterminated_notes << " unterminated notes\n";
        }
      }
    } else if (ev->parsed()) {
      ecfg.validate();
      const auto ref = load_song(ref_arg, data_dir);
      const auto notes = load_capture(perf_arg);
      const auto rep = eval::score_events(ref.events, notes, ecfg);
      if (as_json) {
        std::cout << json(rep).dump(2) << "\n";
      } else {
        print_report(rep);
      }
    } else if (sched_build->parsed()) {
      const auto s = load_song(sched_song, data_dir);
      const auto compiled = haptic::compile_schedule(haptic::assign_fingers(s), sched_minutes, ccfg, sched_sham);
      const auto text = haptic::serialize_schedule(compiled);
      if (sched_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(sched_out, std::ios::binary) << text;
        std::cerr << compiled.events.size() << " pulses x " << compiled.repetitions << " repetitions, "
                  << compiled.playback_ms() << " ms\n";
      }
    } else if (gsim_run->parsed()) {
      const auto schedule = haptic::parse_schedule(read_text(gsim_file));
      glove::GlovePair pair(link);
      pair.mutable_master().set_battery_pct(start_battery);
      pair.mutable_slave().set_battery_pct(start_battery);
      const auto up = pair.upload(schedule);
      if (up.error) throw Error(*up.error, "upload rejected");
      pair.advance(std::chrono::milliseconds(500));
      const auto go = pair.start();
      if (go.error) throw Error(*go.error, "start rejected");
      pair.run_until_idle(std::chrono::microseconds(static_cast<std::int64_t>(gsim_minutes * 60e6)));

      std::ofstream file;
      if (!gsim_trace.empty()) file.open(gsim_trace);
      std::ostream& out = gsim_trace.empty() ? std::cout : file;
      out << "# sim_us glove finger edge position_us\n";
      for (const auto& t : pair.trace()) {
        out << t.sim_us << ' ' << (t.edge.glove == haptic::Hand::left ? "left" : "right") << ' ' << t.edge.finger
            << ' ' << (t.edge.on ? "on" : "off") << ' ' << t.edge.position_us << '\n';
      }
      const auto& m = pair.master();
      bool exact = true;
      if (!schedule.sham) {
        for (auto hand : {haptic::Hand::right, haptic::Hand::left}) {
          exact = exact && glove::activations(pair.trace(), hand) == glove::expected_activations(schedule, hand);
        }
      }
      std::cerr << "completed " << (m.completed ? "yes" : "no") << ", position " << m.position_us / 1000
                << " ms, battery " << m.battery_pct() << "% (slave " << pair.slave().battery_pct() << "%)\n"
                << "trace " << (schedule.sham ? "empty (sham)" : exact ? "matches schedule" : "differs from schedule")
                << ", " << pair.retransmissions() << " retransmissions, max divergence " << pair.max_divergence_ms()
                << " ms" << (pair.link_failed() ? ", LINK FAILED" : "") << "\n";
    } else if (report_p->parsed()) {
      api::Service svc(service_config(data_dir));
      const auto points = svc.progress(kLocal, report_id);
      if (as_json) {
        std::cout << api::progress_json(points, true).dump(2) << "\n";
      } else {
        std::printf("%-4s %-18s %8s %8s %8s %8s  %s\n", "day", "song", "pre", "post", "active", "passive", "glove");
        for (const auto& p : points) {
          const auto passive = p.passive_delta ? std::to_string(*p.passive_delta).substr(0, 8) : std::string("-");
          std::printf("%-4d %-18s %8.2f %8.2f %8.2f %8s  %s\n", p.day, p.song_ref.substr(0, 18).c_str(), p.pre_score,
                      p.post_score, p.active_delta, passive.c_str(), std::string(analytics::to_string(p.condition)).c_str());
        }
      }
    } else if (st_cmp->parsed()) {
      api::Service svc(service_config(data_dir));
      const auto comma = groups.find(',');
      if (comma == std::string::npos) throw Error(ErrorCode::BadRequest, "--groups takes two names");
      const auto ga = analytics::parse_glove_condition(groups.substr(0, comma));
      const auto gb = analytics::parse_glove_condition(groups.substr(comma + 1));
      const auto metric = analytics::parse_metric(metric_name);
      const auto all = analytics::condition_groups(svc.store(), metric);
      const auto r = svc.compare(kLocal, metric, ga, gb, popt);
      const auto& va = all.at(ga);
      const auto& vb = all.at(gb);
      const auto anova = va.size() > 1 && vb.size() > 1 ? std::optional(stats::anova_f({va, vb})) : std::nullopt;
      if (as_json) {
        json j = r;
        j["n"] = {va.size(), vb.size()};
        if (anova) j["anova"] = {{"f", anova->f}, {"p_value", anova->p_value}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::printf("%s: %s n=%zu vs %s n=%zu\n", metric_name.c_str(), groups.substr(0, comma).c_str(), va.size(),
                    groups.substr(comma + 1).c_str(), vb.size());
        std::printf("mean difference  %.4f\n", r.observed_diff);
        std::printf("p (%s)  %.6f\n", r.exact ? "exact" : "monte carlo", r.p_value);
        if (anova) std::printf("ANOVA F %.4f, p %.6f\n", anova->f, anova->p_value);
      }
    } else if (sty_assign->parsed()) {
      api::Service svc(service_config(data_dir));
      const auto team = json::parse(read_text(team_file)).get<study::Team>();
      const auto rows = svc.create_team(kLocal, team, team_seed);
      const auto blinded = study::blind(rows);
      if (as_json) {
        std::cout << json(blinded).dump(2) << "\n";
      } else {
        for (const auto& b : blinded) {
          std::cout << b.team_id << "  " << b.participant_id << "  period " << b.period << "  song "
                    << study::to_string(b.song) << "\n";
        }
      }
    } else if (sty_unblind->parsed()) {
      api::Service svc(service_config(data_dir));
      const api::Principal who{api::parse_role(role_name), "cli"};
      std::vector<study::ConditionAssignment> rows;
      for (const auto& a : svc.assignments(who)) {
        if (a.team_id == team_id) rows.push_back(a);
      }
      if (rows.empty()) throw Error(ErrorCode::BadRequest, "no assignments for team " + team_id);
      if (as_json) {
        std::cout << json(rows).dump(2) << "\n";
      } else {
        for (const auto& a : rows) {
          std::cout << a.team_id << "  " << a.participant_id << "  period " << a.period << "  song "
                    << study::to_string(a.song) << "  glove " << study::to_string(a.glove) << "\n";
        }
      }
    } else if (serve->parsed()) {
      return run_serve(port, host, data_dir, glove_speed);
    } else if (token_issue->parsed()) {
      const auto auth = api::TokenAuthority::from_env();
      if (!auth) {
        std::cerr << "set " << api::kTokenSecretEnv << " first\n";
        return 1;
      }
      std::cout << auth->issue(api::parse_role(token_role), token_subject) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Forbidden || e.code() == ErrorCode::Unauthorized ? 3 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
