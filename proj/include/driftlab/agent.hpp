#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "driftlab/catalog.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/event_log.hpp"
#include "driftlab/platform.hpp"
#include "driftlab/predictor.hpp"
#include "driftlab/queries.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

inline constexpr double kDaySeconds = 86400.0;
inline constexpr double kSessionStartOffsetS = 43200.0;  // sessions start at 12:00 virtual
inline constexpr int kSearchResultWindow = 51;           // first N search results per query
inline constexpr double kSkipDelayMinS = 1.0;
inline constexpr double kSkipDelayMaxS = 2.0;
inline constexpr int kG1ReseedAfterDay = 3;

class VirtualClock {
 public:
  double now() const { return now_s_; }

  void advance(double dt) {
    if (dt < 0) throw Error(Errc::contract, "clock cannot move backwards");
    now_s_ += dt;
  }

  void advance_to(double t) {
    if (t < now_s_) throw Error(Errc::contract, "clock cannot move backwards");
    now_s_ = t;
  }

 private:
  double now_s_ = 0.0;
};

struct RecommenderMode {
  enum class Kind { scripted, adaptive };
  Kind kind = Kind::scripted;
  ScenarioConfig scenario;  // scripted only
  FeedParams params;
};

// Runs the two-phase audit protocol for a single user on a virtual clock.
// Each runner owns its clock, feed state, and RNG streams, so any number of
// users can be advanced in parallel.
class AgentRunner {
 public:
  AgentRunner(UserProfile profile, const Catalog& catalog, RecommenderMode mode,
              Annotator& annotator, QuerySet queries, std::uint64_t master_seed,
              double session_budget_s = kDefaultSessionBudgetS)
      : profile_(std::move(profile)),
        catalog_(catalog),
        mode_(std::move(mode)),
        annotator_(annotator),
        queries_(std::move(queries)),
        session_budget_s_(session_budget_s),
        query_rng_(RngStream::keyed(master_seed, profile_.user_id, "seed-queries")),
        skip_rng_(RngStream::keyed(master_seed, profile_.user_id, "skip-delay")),
        feed_state_(register_user(profile_, master_seed, mode_.params)) {
    validate_profile(profile_);
    if (session_budget_s_ <= 0) throw Error(Errc::validation, "session budget must be > 0");
    clock_.advance_to(kSessionStartOffsetS);  // seeding day starts at day-0 noon
  }

  // Phase 1. Watches exactly `target` predictor-approved videos per seeding
  // stage via randomly sampled search queries, then advances the clock by
  // one virtual day. Stages: G1 neutral then polarising, G2 polarising only
  // (or neutral only for a cooking baseline), G3 both stances interleaved.
  std::vector<InteractionEvent> run_seed_phase(int target) {
    std::vector<InteractionEvent> events;
    switch (profile_.group) {
      case Group::g1_neutral_plus_polarising:
        run_seed_stage({TopicId::cooking, Stance::none}, target, 0, events);
        run_seed_stage({profile_.topic, *profile_.stance_set.begin()}, target, 0, events);
        break;
      case Group::g2_polarising_only:
        if (profile_.topic == TopicId::cooking)
          run_seed_stage({TopicId::cooking, Stance::none}, target, 0, events);
        else
          run_seed_stage({profile_.topic, *profile_.stance_set.begin()}, target, 0, events);
        break;
      case Group::g3_mixed_polarity:
        run_seed_interleaved(target, 0, events);
        break;
    }
    clock_.advance(kDaySeconds);
    return events;
  }

  // G1 repeat seeding: another `target` videos from the polarising topic,
  // logged under the interaction day it follows.
  std::vector<InteractionEvent> run_reseed(int target, int after_day) {
    std::vector<InteractionEvent> events;
    run_seed_stage({profile_.topic, *profile_.stance_set.begin()}, target, after_day,
                   events);
    return events;
  }

  // Phase 2, one daily session: pulls For You batches and reacts to every
  // video until cumulative in-session time first reaches the budget; the
  // in-flight video completes and is logged.
  std::vector<InteractionEvent> run_interaction_day(int day) {
    if (day < 1) throw Error(Errc::contract, "interaction days start at 1");
    align_to_day(day);
    std::vector<InteractionEvent> events;
    double in_session = 0.0;
    std::vector<const VideoRecord*> batch;
    std::size_t pos = 0;

    while (in_session < session_budget_s_) {
      if (pos >= batch.size()) {
        batch = fetch_batch(day, in_session);
        pos = 0;
      }
      const VideoRecord& v = *batch[pos++];
      const Annotation ann = annotator_.annotate(v, profile_);
      const Action act = decide(ann, v, profile_, Phase::interaction);
      const double dt = act == Action::watch_like_bookmark
                            ? v.duration_s
                            : skip_rng_.uniform(kSkipDelayMinS, kSkipDelayMaxS);
      events.push_back({clock_.now(), day, profile_.user_id, v.video_id,
                        FeedSource::foryou, ann, act, dt});
      clock_.advance(dt);
      in_session += dt;
      if (mode_.kind == RecommenderMode::Kind::adaptive)
        record_feedback(feed_state_, v, act);
    }
    return events;
  }

  // Full protocol: seed, 1-day wait, N interaction days, with the G1
  // repeat-seed after interaction day 3.
  std::vector<InteractionEvent> run_protocol(int days_interaction, int seed_target) {
    std::vector<InteractionEvent> events = run_seed_phase(seed_target);
    for (int day = 1; day <= days_interaction; ++day) {
      auto session = run_interaction_day(day);
      events.insert(events.end(), session.begin(), session.end());
      if (profile_.group == Group::g1_neutral_plus_polarising && day == kG1ReseedAfterDay) {
        auto reseed = run_reseed(seed_target, day);
        events.insert(events.end(), reseed.begin(), reseed.end());
      }
    }
    return events;
  }

  const VirtualClock& clock() const { return clock_; }
  const FeedState& feed_state() const { return feed_state_; }

 private:
  void align_to_day(int day) {
    const double session_start = day * kDaySeconds + kSessionStartOffsetS;
    if (session_start > clock_.now()) clock_.advance_to(session_start);
  }

  int bins_per_session() const {
    return std::max(1, static_cast<int>(session_budget_s_ / kDefaultBinWidthS));
  }

  std::vector<const VideoRecord*> fetch_batch(int day, double in_session) {
    if (mode_.kind == RecommenderMode::Kind::adaptive)
      return next_feed_batch_adaptive(feed_state_, catalog_);
    const int bps = bins_per_session();
    const int slot =
        std::min(static_cast<int>(in_session / kDefaultBinWidthS), bps - 1);
    const int bin_index = (day - 1) * bps + slot;
    return next_feed_batch_scripted(mode_.scenario, catalog_, bin_index, feed_state_);
  }

  // One seeding stage: repeatedly sample a query for the stage category,
  // walk the first 51 search results, and watch every approved video that
  // matches the stage target until the quota is met. Non-matching results
  // get no interaction and no log entry. Starvation is declared once every
  // query of the stage has been retried since the last successful watch.
  void run_seed_stage(const CategoryKey& stage, int target, int day,
                      std::vector<InteractionEvent>& events) {
    const bool neutral_stage = stage.topic == TopicId::cooking;
    const auto& qlist = queries_.for_category(stage);
    int watched = 0;
    std::set<std::size_t> tried_since_progress;
    while (watched < target) {
      const std::size_t qi = query_rng_.uniform_below(qlist.size());
      bool progressed = false;
      for (const VideoRecord* v : search(catalog_, qlist[qi], kSearchResultWindow)) {
        if (watched >= target) break;
        if (watched_ids_.count(v->video_id)) continue;
        const Annotation ann = annotator_.annotate(*v, profile_);
        if (decide(ann, *v, profile_, Phase::seed, neutral_stage) !=
            Action::watch_like_bookmark)
          continue;
        const bool matches = neutral_stage
                                 ? ann.topic_class == TopicClass::neutral
                                 : ann.topic_class == TopicClass::interest &&
                                       ann.stance == stage.stance;
        if (!matches) continue;
        watch_seed_video(*v, ann, day, events);
        ++watched;
        progressed = true;
      }
      if (progressed) {
        tried_since_progress.clear();
      } else {
        tried_since_progress.insert(qi);
        if (tried_since_progress.size() == qlist.size())
          throw Error(Errc::seed_starvation,
                      profile_.user_id + ": catalog exhausted while seeding " +
                          to_string(stage) + " (" + std::to_string(watched) + "/" +
                          std::to_string(target) + " watched)");
      }
    }
  }

  // G3 seeding: strictly alternating stance per query draw, one quota per
  // stance; a stance whose quota is met yields its turn.
  void run_seed_interleaved(int target_per_stance, int day,
                            std::vector<InteractionEvent>& events) {
    std::map<Stance, int> quota = {{Stance::support, target_per_stance},
                                   {Stance::oppose, target_per_stance}};
    std::map<Stance, std::set<std::size_t>> tried;
    Stance turn = Stance::support;
    while (quota[Stance::support] > 0 || quota[Stance::oppose] > 0) {
      Stance cur = turn;
      turn = turn == Stance::support ? Stance::oppose : Stance::support;
      if (quota[cur] == 0) cur = cur == Stance::support ? Stance::oppose : Stance::support;
      const auto& qlist = queries_.for_category({profile_.topic, cur});
      const std::size_t qi = query_rng_.uniform_below(qlist.size());
      bool progressed = false;
      for (const VideoRecord* v : search(catalog_, qlist[qi], kSearchResultWindow)) {
        if (watched_ids_.count(v->video_id)) continue;
        const Annotation ann = annotator_.annotate(*v, profile_);
        if (decide(ann, *v, profile_, Phase::seed) != Action::watch_like_bookmark) continue;
        if (ann.topic_class != TopicClass::interest || quota[ann.stance] <= 0) continue;
        watch_seed_video(*v, ann, day, events);
        --quota[ann.stance];
        progressed = true;
        if (quota[Stance::support] == 0 && quota[Stance::oppose] == 0) break;
      }
      if (progressed) {
        tried[Stance::support].clear();
        tried[Stance::oppose].clear();
      } else {
        tried[cur].insert(qi);
        bool exhausted = true;
        for (Stance s : {Stance::support, Stance::oppose}) {
          if (quota[s] > 0 &&
              tried[s].size() < queries_.for_category({profile_.topic, s}).size())
            exhausted = false;
        }
        if (exhausted)
          throw Error(Errc::seed_starvation,
                      profile_.user_id + ": catalog exhausted while seeding " +
                          std::string(to_string(profile_.topic)) + " (both stances)");
      }
    }
  }

  void watch_seed_video(const VideoRecord& v, const Annotation& ann, int day,
                        std::vector<InteractionEvent>& events) {
    events.push_back({clock_.now(), day, profile_.user_id, v.video_id, FeedSource::search,
                      ann, Action::watch_like_bookmark, v.duration_s});
    clock_.advance(v.duration_s);
    watched_ids_.insert(v.video_id);
    if (mode_.kind == RecommenderMode::Kind::adaptive)
      record_feedback(feed_state_, v, Action::watch_like_bookmark);
  }

  UserProfile profile_;
  const Catalog& catalog_;
  RecommenderMode mode_;
  Annotator& annotator_;
  QuerySet queries_;
  double session_budget_s_;
  RngStream query_rng_;
  RngStream skip_rng_;
  FeedState feed_state_;
  VirtualClock clock_;
  std::set<std::string> watched_ids_;
};

}  // namespace driftlab
