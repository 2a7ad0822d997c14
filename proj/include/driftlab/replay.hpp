#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftlab/agent.hpp"
#include "driftlab/analytics.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/event_log.hpp"
#include "driftlab/report.hpp"

namespace driftlab {

// Declared per-bin counts that bypass simulation entirely: the fixture is
// turned into a synthetic one-user log and pushed through the same binning
// and reporting pipeline, so aggregate totals can be checked end to end.
struct ReplayFixture {
  std::string name;
  std::vector<BinCounts> bins;

  void validate() const {
    if (name.empty()) throw Error(Errc::fixture_shape, "replay fixture needs a name");
    if (bins.empty()) throw Error(Errc::fixture_shape, "replay fixture has no bins");
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const BinCounts& b = bins[i];
      if (b.n_interest < 0 || b.n_neutral < 0 || b.n_other < 0 || b.n_support < 0 ||
          b.n_oppose < 0)
        throw Error(Errc::fixture_shape, "bin " + std::to_string(i) + ": negative count");
      if (b.n_support + b.n_oppose != b.n_interest)
        throw Error(Errc::fixture_shape,
                    "bin " + std::to_string(i) + ": support+oppose must equal interest");
    }
    // Binning is session-relative, so a day whose first half-hour is empty
    // while the second has events cannot be reconstructed from a log.
    for (std::size_t i = 1; i < bins.size(); i += 2) {
      if (bins[i].total() > 0 && bins[i - 1].total() == 0)
        throw Error(Errc::fixture_shape,
                    "bin " + std::to_string(i) + " is nonempty but bin " +
                        std::to_string(i - 1) + " (start of the same session) is empty");
    }
    long long total = 0;
    for (const BinCounts& b : bins) total += b.total();
    if (total == 0) throw Error(Errc::fixture_shape, "replay fixture has zero events");
  }

  static ReplayFixture load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot read fixture " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::fixture_shape, path.string() + ": " + e.what());
    }
    ReplayFixture f;
    try {
      f.name = j.at("name").get<std::string>();
      int idx = 0;
      for (const auto& bj : j.at("bins")) {
        BinCounts b;
        b.bin_index = idx++;
        b.n_interest = bj.value("interest", 0LL);
        b.n_neutral = bj.value("neutral", 0LL);
        b.n_other = bj.value("other", 0LL);
        b.n_support = bj.value("support", 0LL);
        b.n_oppose = bj.value("oppose", 0LL);
        f.bins.push_back(b);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::fixture_shape, path.string() + ": " + e.what());
    }
    f.validate();
    return f;
  }
};

// Synthesizes the one-user log realizing the declared counts. Events within
// a bin are evenly spaced from the bin start so that session-relative
// binning reproduces the fixture exactly.
inline std::vector<InteractionEvent> synthesize_replay_log(const ReplayFixture& fixture) {
  fixture.validate();
  std::vector<InteractionEvent> events;
  const int bins_per_session =
      std::max(1, static_cast<int>(kDefaultSessionBudgetS / kDefaultBinWidthS));
  for (const BinCounts& b : fixture.bins) {
    const long long count = b.total();
    if (count == 0) continue;
    const int day = b.bin_index / bins_per_session + 1;
    const int slot = b.bin_index % bins_per_session;
    const double bin_start =
        day * kDaySeconds + kSessionStartOffsetS + slot * kDefaultBinWidthS;
    const double step = kDefaultBinWidthS / static_cast<double>(count);

    long long emitted = 0;
    auto emit = [&](TopicClass cls, Stance stance, long long n) {
      for (long long i = 0; i < n; ++i) {
        InteractionEvent e;
        e.virtual_time_s = bin_start + step * static_cast<double>(emitted++);
        e.session_day = day;
        e.user_id = "replay";
        e.video_id = "replay-" + std::to_string(b.bin_index) + "-" + std::to_string(emitted);
        e.feed_source = FeedSource::foryou;
        e.annotation = {cls, stance};
        e.action = Action::watch_like_bookmark;
        e.watch_duration_s = 30.0;  // nominal; binning only reads start times
        events.push_back(std::move(e));
      }
    };
    emit(TopicClass::interest, Stance::support, b.n_support);
    emit(TopicClass::interest, Stance::oppose, b.n_oppose);
    emit(TopicClass::neutral, Stance::none, b.n_neutral);
    emit(TopicClass::other, Stance::none, b.n_other);
  }
  return events;
}

// Replay pipeline: synthesize the log, persist it, run binning + metrics +
// report emission. Returns the report for assertions.
inline CohortReport run_replay(const ReplayFixture& fixture,
                               const std::filesystem::path& out_dir) {
  const auto events = synthesize_replay_log(fixture);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + out_dir.string());
  write_log(out_dir / "replay.log", events);

  CohortReport report;
  report.experiment = fixture.name;
  report.cohort_tag = fixture.name;
  report.n_users = 1;
  report.bins = bin_events(events);
  report.totals = pool_bins(report.bins);
  for (DriftMetric m : kAllMetrics)
    report.series.push_back(build_series(report.bins, m, 1));
  for (const DriftSeries& s : report.series) {
    const auto values = defined_values(s);
    if (values.size() < 4) continue;
    const std::size_t half = values.size() / 2;
    std::vector<double> first(values.begin(), values.begin() + half);
    std::vector<double> second(values.begin() + half, values.end());
    report.half_split_tests.emplace(s.metric, mann_whitney_u(first, second));
  }
  emit_report(report, out_dir / "report");
  return report;
}

}  // namespace driftlab
