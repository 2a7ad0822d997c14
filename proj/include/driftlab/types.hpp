#pragma once

#include <array>
#include <set>
#include <string>
#include <string_view>

#include "driftlab/errors.hpp"

namespace driftlab {

// The topic universe: four polarising topics, one neutral topic (cooking),
// and `other` for everything unrelated.
enum class TopicId { flatearth, vaccines, climate_change, us_politics, cooking, other };

enum class Stance { support, oppose, none };

// Three-way class a video gets relative to a specific user: their topic of
// interest, the neutral topic, or anything else.
enum class TopicClass { interest, neutral, other };

enum class Action { watch_like_bookmark, skip };

enum class FeedSource { search, foryou };

enum class Phase { seed, interaction };

// G1 seeds neutral + polarising, G2 seeds the polarising topic only, G3
// seeds both stances of one topic at once.
enum class Group { g1_neutral_plus_polarising, g2_polarising_only, g3_mixed_polarity };

enum class Gender { f, m };

// Protocol constants: ~1-hour daily sessions split into 30-minute bins.
inline constexpr double kDefaultBinWidthS = 1800.0;
inline constexpr double kDefaultSessionBudgetS = 3600.0;

inline constexpr std::array<TopicId, 6> kAllTopics = {
    TopicId::flatearth, TopicId::vaccines,    TopicId::climate_change,
    TopicId::us_politics, TopicId::cooking,   TopicId::other};

inline constexpr std::array<TopicId, 4> kPolarisingTopics = {
    TopicId::flatearth, TopicId::vaccines, TopicId::climate_change, TopicId::us_politics};

inline bool is_polarising(TopicId t) {
  return t != TopicId::cooking && t != TopicId::other;
}

inline std::string_view to_string(TopicId t) {
  switch (t) {
    case TopicId::flatearth: return "flatearth";
    case TopicId::vaccines: return "vaccines";
    case TopicId::climate_change: return "climate_change";
    case TopicId::us_politics: return "us_politics";
    case TopicId::cooking: return "cooking";
    case TopicId::other: return "other";
  }
  return "?";
}

inline std::string_view to_string(Stance s) {
  switch (s) {
    case Stance::support: return "support";
    case Stance::oppose: return "oppose";
    case Stance::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(TopicClass c) {
  switch (c) {
    case TopicClass::interest: return "interest";
    case TopicClass::neutral: return "neutral";
    case TopicClass::other: return "other";
  }
  return "?";
}

inline std::string_view to_string(Action a) {
  return a == Action::watch_like_bookmark ? "watch_like_bookmark" : "skip";
}

inline std::string_view to_string(FeedSource s) {
  return s == FeedSource::search ? "search" : "foryou";
}

inline std::string_view to_string(Group g) {
  switch (g) {
    case Group::g1_neutral_plus_polarising: return "G1";
    case Group::g2_polarising_only: return "G2";
    case Group::g3_mixed_polarity: return "G3";
  }
  return "?";
}

inline std::string_view to_string(Gender g) { return g == Gender::f ? "f" : "m"; }

inline TopicId parse_topic(std::string_view s) {
  for (TopicId t : kAllTopics)
    if (s == to_string(t)) return t;
  throw Error(Errc::validation, "unknown topic '" + std::string(s) + "'");
}

inline Stance parse_stance(std::string_view s) {
  if (s == "support") return Stance::support;
  if (s == "oppose") return Stance::oppose;
  if (s == "none") return Stance::none;
  throw Error(Errc::validation, "unknown stance '" + std::string(s) + "'");
}

inline TopicClass parse_topic_class(std::string_view s) {
  if (s == "interest") return TopicClass::interest;
  if (s == "neutral") return TopicClass::neutral;
  if (s == "other") return TopicClass::other;
  throw Error(Errc::validation, "unknown topic class '" + std::string(s) + "'");
}

inline Action parse_action(std::string_view s) {
  if (s == "watch_like_bookmark") return Action::watch_like_bookmark;
  if (s == "skip") return Action::skip;
  throw Error(Errc::validation, "unknown action '" + std::string(s) + "'");
}

inline FeedSource parse_feed_source(std::string_view s) {
  if (s == "search") return FeedSource::search;
  if (s == "foryou") return FeedSource::foryou;
  throw Error(Errc::validation, "unknown feed source '" + std::string(s) + "'");
}

inline Group parse_group(std::string_view s) {
  if (s == "G1") return Group::g1_neutral_plus_polarising;
  if (s == "G2") return Group::g2_polarising_only;
  if (s == "G3") return Group::g3_mixed_polarity;
  throw Error(Errc::validation, "unknown group '" + std::string(s) + "'");
}

inline Gender parse_gender(std::string_view s) {
  if (s == "f") return Gender::f;
  if (s == "m") return Gender::m;
  throw Error(Errc::validation, "unknown gender '" + std::string(s) + "'");
}

// One sockpuppet account. stance_set holds the stances the user engages
// with: one stance for G1/G2 on a polarising topic, both for G3, empty for
// a pure-neutral (cooking) baseline user.
struct UserProfile {
  std::string user_id;
  Group group = Group::g2_polarising_only;
  TopicId topic = TopicId::cooking;
  std::set<Stance> stance_set;
  std::string age_bracket = "18-24";
  Gender gender = Gender::f;
};

inline void validate_profile(const UserProfile& p) {
  if (p.user_id.empty()) throw Error(Errc::validation, "user_id empty");
  if (p.topic == TopicId::other)
    throw Error(Errc::validation, p.user_id + ": profile topic cannot be 'other'");
  if (p.group == Group::g3_mixed_polarity) {
    if (p.topic != TopicId::us_politics)
      throw Error(Errc::validation, p.user_id + ": G3 requires topic us_politics");
    if (p.stance_set != std::set<Stance>{Stance::support, Stance::oppose})
      throw Error(Errc::validation, p.user_id + ": G3 requires both stances");
  } else if (is_polarising(p.topic)) {
    if (p.stance_set.size() != 1 ||
        (p.stance_set.count(Stance::support) + p.stance_set.count(Stance::oppose)) != 1)
      throw Error(Errc::validation,
                  p.user_id + ": G1/G2 polarising profile needs exactly one stance");
  } else {
    if (!p.stance_set.empty())
      throw Error(Errc::validation, p.user_id + ": neutral-topic profile takes no stance");
  }
}

}  // namespace driftlab
