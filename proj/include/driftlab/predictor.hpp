#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_map>

#include "driftlab/catalog.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

struct Annotation {
  TopicClass topic_class = TopicClass::other;
  // support/oppose when topic_class == interest, none otherwise.
  Stance stance = Stance::none;

  bool operator==(const Annotation&) const = default;
};

// Calibrated error injection for the ground-truth oracle. Error rates are
// 1 - accuracy of the annotation model being stood in for.
struct NoiseModel {
  double topic_error_rate = 0.0;
  double stance_error_rate = 0.0;
  RngStream rng{0};

  static NoiseModel zero() { return NoiseModel{}; }
};

// Ground-truth three-way class of a video relative to a profile. The
// profile-match rule applies to polarising interests; for a pure-neutral
// (cooking) profile the neutral mapping wins so the annotation invariant
// (interest implies a support/oppose stance) always holds.
inline TopicClass true_topic_class(const VideoRecord& v, const UserProfile& profile) {
  if (is_polarising(profile.topic) && v.true_topic == profile.topic)
    return TopicClass::interest;
  if (v.true_topic == TopicId::cooking) return TopicClass::neutral;
  return TopicClass::other;
}

inline Annotation ground_truth_annotation(const VideoRecord& v,
                                          const UserProfile& profile) {
  Annotation a;
  a.topic_class = true_topic_class(v, profile);
  a.stance = a.topic_class == TopicClass::interest ? v.true_stance : Stance::none;
  return a;
}

// Oracle annotator with independent topic/stance error injection. On a topic
// error the class flips to a uniformly chosen wrong class; on a stance error
// (interest only) the stance flips. Deterministic given the noise stream.
inline Annotation annotate_oracle(const VideoRecord& v, const UserProfile& profile,
                                  NoiseModel& noise) {
  Annotation a = ground_truth_annotation(v, profile);
  if (noise.topic_error_rate > 0 && noise.rng.bernoulli(noise.topic_error_rate)) {
    static constexpr std::array<TopicClass, 3> classes = {
        TopicClass::interest, TopicClass::neutral, TopicClass::other};
    std::array<TopicClass, 2> wrong{};
    int n = 0;
    for (TopicClass c : classes)
      if (c != a.topic_class) wrong[n++] = c;
    a.topic_class = wrong[noise.rng.uniform_below(2)];
  }
  if (a.topic_class == TopicClass::interest) {
    Stance base = v.true_stance;
    if (base == Stance::none)  // misclassified into interest: no true stance exists
      base = noise.rng.bernoulli(0.5) ? Stance::support : Stance::oppose;
    if (noise.stance_error_rate > 0 && noise.rng.bernoulli(noise.stance_error_rate))
      base = base == Stance::support ? Stance::oppose : Stance::support;
    a.stance = base;
  } else {
    a.stance = Stance::none;
  }
  return a;
}

// Action rule. The livestream / 5-minute skip dominates everything. Neutral
// videos are engaged with by G1 and G2 during the interaction phase and, in
// the seeding phase, only while the current seeding target is the neutral
// topic itself.
inline Action decide(const Annotation& a, const VideoRecord& v, const UserProfile& profile,
                     Phase phase, bool neutral_seed_stage = false) {
  if (v.is_livestream || v.duration_s > 300.0) return Action::skip;
  if (a.topic_class == TopicClass::interest && profile.stance_set.count(a.stance) > 0)
    return Action::watch_like_bookmark;
  if (a.topic_class == TopicClass::neutral) {
    if (phase == Phase::interaction) {
      if (profile.group == Group::g1_neutral_plus_polarising ||
          profile.group == Group::g2_polarising_only)
        return Action::watch_like_bookmark;
    } else if (neutral_seed_stage) {
      return Action::watch_like_bookmark;
    }
  }
  return Action::skip;
}

// --- prompt protocol --------------------------------------------------------

inline constexpr std::string_view kAnnotationSystemPrompt =
    "You will be provided with an instruction from user regarding video topic and "
    "stance annotation. Provide the topic and stance based on the choices and "
    "description provided by the user.";

inline std::string_view prompt_topic_name(TopicId t) {
  switch (t) {
    case TopicId::flatearth: return "flatearth";
    case TopicId::vaccines: return "vaccines";
    case TopicId::climate_change: return "climate change";
    case TopicId::us_politics: return "political";
    case TopicId::cooking: return "cooking";
    case TopicId::other: return "other";
  }
  return "?";
}

inline std::string_view prompt_topic_description(TopicId t) {
  switch (t) {
    case TopicId::flatearth:
      return "flatearth should be given to anything related to the flatearth "
             "conspiracy, including things like firmament or flatearth experiments. "
             "The support stance should be given to anything that claims that earth "
             "is flat. The oppose stance should be given to anything that claims "
             "that earth is not flat, debunks flatearth conspiracy or makes fun of "
             "flatearthers.";
    case TopicId::vaccines:
      return "vaccines should be given to anything related to the vaccines and the "
             "discussion on their potential side effects. The support stance should "
             "be given to anything that supports vaccinations, motivates people to "
             "get vaccinated, debunks vaccine misinformation, acknowledges that "
             "there are potential adverse effects in specific cases, acknowledges "
             "that you can get covid even if vaccinated, makes fun of people "
             "claiming ridiculous side effects or show why people that think "
             "vaccines are dangerous do not really understand them. The oppose "
             "stance should be given to anything that has anti-vaccination "
             "sentiment, claims that vaccines are dangerous for everyone or that "
             "vaccines do not work.";
    case TopicId::climate_change:
      return "climate change should be given to anything related to climate change, "
             "global warming or policies that deal with climate change, such as the "
             "green deal or reducing co2. The support stance should be given to "
             "anything that debunks climate change deniers, claims that we need to "
             "changes, shows how the climate change affects us or supports the "
             "policies. The oppose stance should be given to anything that denies "
             "climate changes, makes fun of it, claims that the earth was always "
             "warming, claims there is cooling or opposes the policies for fighting "
             "climate change.";
    case TopicId::us_politics:
      return "political should be given to anything that deals with politics, "
             "elections and other political issues and events in the USA. The "
             "support stance should be given to anything related to Trump, "
             "republicans, conservatives or any other right leaning content. The "
             "oppose stance should be given to anything on the other side of "
             "spectrum, such as Biden, Harris, democrats, liberals or anything left "
             "learning.";
    default:
      break;
  }
  return "";
}

// Builds the user part of the annotation prompt for a polarising profile.
// Metadata lines are omitted entirely when the field is empty. Pure function:
// identical inputs produce byte-identical prompts.
inline std::string build_prompt(const VideoRecord& v, const UserProfile& profile) {
  if (!is_polarising(profile.topic))
    throw Error(Errc::unsupported_topic,
                "no polarising topic description for profile topic '" +
                    std::string(to_string(profile.topic)) + "'");
  const std::string_view topic = prompt_topic_name(profile.topic);

  std::string p;
  p.reserve(2048);
  p += "Your task is to determine the topic and the stance of the video given its "
       "available metadata. The only possible answers for the topic is: 1) ";
  p += topic;
  p += "; 2) cooking; 3) other. For stance, the possibilities are: 1) support; 2) "
       "oppose. Use only these possibilities when answering.\n";
  p += prompt_topic_description(profile.topic);
  p += "\ncooking should be given to anything that is related to recipes or cooking. "
       "In this case, the stance does not matter so always put support.\n";
  p += "other should be given anything that is not related to previous topics. The "
       "stance does not matter so always put support.\n";
  p += "Provide the answer in structured form that looks like this:\n\nTopic: ";
  p += topic;
  p += "/cooking/other\nStance: support/oppose\n\nHere is the video information.";
  if (!v.author.empty()) {
    p += "\nAuthor: ";
    p += v.author;
  }
  std::string desc = v.description;
  for (const auto& tag : v.hashtags) {
    if (!desc.empty()) desc += " ";
    desc += "#" + tag;
  }
  if (!desc.empty()) {
    p += "\nVideo description and hashtags: ";
    p += desc;
  }
  if (!v.transcript.empty()) {
    p += "\nVideo transcript: ";
    p += v.transcript;
  }
  if (!v.stickers.empty()) {
    p += "\nText stickers in video: ";
    p += v.stickers;
  }
  return p;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Case-insensitive "Key: value" extraction, tolerant of surrounding
// whitespace only. Returns empty optional when the key is absent.
inline std::optional<std::string> labeled_line(std::string_view text,
                                               std::string_view key) {
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(start, end - start));
    if (line.size() > key.size() &&
        lower(line.substr(0, key.size())) == lower(std::string(key)) &&
        line[key.size()] == ':')
      return trim(std::string_view(line).substr(key.size() + 1));
    if (end == text.size()) break;
    start = end + 1;
  }
  return std::nullopt;
}

}  // namespace detail

// Parses a model response of the "Topic: .. / Stance: .." shape relative to
// the interest topic the prompt was built for. Anything unrecognized is a
// parse error, never a guess.
inline Annotation parse_response(std::string_view text, TopicId interest_topic) {
  auto topic_line = detail::labeled_line(text, "Topic");
  if (!topic_line) throw Error(Errc::parse, "missing Topic line");
  const std::string topic_value = detail::lower(*topic_line);

  Annotation a;
  if (topic_value == detail::lower(std::string(prompt_topic_name(interest_topic)))) {
    a.topic_class = TopicClass::interest;
  } else if (topic_value == "cooking") {
    a.topic_class = TopicClass::neutral;
  } else if (topic_value == "other") {
    a.topic_class = TopicClass::other;
  } else {
    throw Error(Errc::parse, "unrecognized topic '" + *topic_line + "'");
  }

  if (a.topic_class == TopicClass::interest) {
    auto stance_line = detail::labeled_line(text, "Stance");
    if (!stance_line) throw Error(Errc::parse, "missing Stance line");
    const std::string stance_value = detail::lower(*stance_line);
    if (stance_value == "support") {
      a.stance = Stance::support;
    } else if (stance_value == "oppose") {
      a.stance = Stance::oppose;
    } else {
      throw Error(Errc::parse, "unrecognized stance '" + *stance_line + "'");
    }
  } else {
    a.stance = Stance::none;  // the prompt makes the model answer support here
  }
  return a;
}

// --- annotator interface ------------------------------------------------------

class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual Annotation annotate(const VideoRecord& v, const UserProfile& profile) = 0;
};

// Per-user oracle annotator. Memoizes per video so a user reacts to a
// re-encountered video consistently, mirroring the response cache of the
// remote path.
class OracleAnnotator : public Annotator {
 public:
  OracleAnnotator(double topic_error_rate, double stance_error_rate, RngStream rng)
      : noise_{topic_error_rate, stance_error_rate, rng} {}

  Annotation annotate(const VideoRecord& v, const UserProfile& profile) override {
    auto it = memo_.find(v.video_id);
    if (it != memo_.end()) return it->second;
    Annotation a = annotate_oracle(v, profile, noise_);
    memo_.emplace(v.video_id, a);
    return a;
  }

 private:
  NoiseModel noise_;
  std::unordered_map<std::string, Annotation> memo_;
};

}  // namespace driftlab
