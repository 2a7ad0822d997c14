#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/predictor.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// One agent-video encounter. Watch events carry the full video duration;
// skips carry the 1-2 s decision delay.
struct InteractionEvent {
  double virtual_time_s = 0.0;
  int session_day = 0;  // 0 = seeding day, interaction days start at 1
  std::string user_id;
  std::string video_id;
  FeedSource feed_source = FeedSource::foryou;
  Annotation annotation;
  Action action = Action::skip;
  double watch_duration_s = 0.0;
};

// Log line format (tab-separated, one event per line, times with 6 decimal
// places): virtual_time_s, session_day, user_id, video_id, feed_source,
// topic_class, stance, action, watch_duration_s.
inline std::string to_log_line(const InteractionEvent& e) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.6f\t%d\t%s\t%s\t%s\t%s\t%s\t%s\t%.6f",
                e.virtual_time_s, e.session_day, e.user_id.c_str(), e.video_id.c_str(),
                std::string(to_string(e.feed_source)).c_str(),
                std::string(to_string(e.annotation.topic_class)).c_str(),
                std::string(to_string(e.annotation.stance)).c_str(),
                std::string(to_string(e.action)).c_str(), e.watch_duration_s);
  return std::string(buf);
}

inline InteractionEvent parse_log_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (fields.size() != 9)
    throw Error(Errc::parse, "log line has " + std::to_string(fields.size()) +
                                 " fields, expected 9");
  InteractionEvent e;
  try {
    e.virtual_time_s = std::stod(fields[0]);
    e.session_day = std::stoi(fields[1]);
    e.user_id = fields[2];
    e.video_id = fields[3];
    e.feed_source = parse_feed_source(fields[4]);
    e.annotation.topic_class = parse_topic_class(fields[5]);
    e.annotation.stance = parse_stance(fields[6]);
    e.action = parse_action(fields[7]);
    e.watch_duration_s = std::stod(fields[8]);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(Errc::parse, std::string("bad log line: ") + ex.what());
  }
  return e;
}

inline void write_log(const std::filesystem::path& path,
                      const std::vector<InteractionEvent>& events) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  for (const auto& e : events) out << to_log_line(e) << "\n";
}

inline std::vector<InteractionEvent> read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::vector<InteractionEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) events.push_back(parse_log_line(line));
  }
  return events;
}

}  // namespace driftlab
