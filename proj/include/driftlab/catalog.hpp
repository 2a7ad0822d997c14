#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/queries.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

struct VideoRecord {
  std::string video_id;
  std::string author;
  std::string description;
  std::vector<std::string> hashtags;
  std::string transcript;  // may be empty
  std::string stickers;    // may be empty
  double duration_s = 0.0;
  bool is_livestream = false;
  TopicId true_topic = TopicId::other;
  Stance true_stance = Stance::none;
  double popularity_weight = 0.0;
};

// Generation recipe for a synthetic video universe. Counts are exact;
// everything else is drawn from the seeded stream.
struct CatalogSpec {
  std::map<CategoryKey, int> counts;

  double duration_min_s = 8.0;
  double duration_max_s = 180.0;
  double long_video_fraction = 0.04;  // over the 5-minute skip threshold
  double livestream_fraction = 0.02;
  double weight_min = 0.5;
  double weight_max = 1.5;
  double empty_transcript_fraction = 0.3;
  double sticker_fraction = 0.25;

  // Platform-wide video counts attributed to each topic's hashtag pool.
  // Defaults reproduce the measured ordering: cooking by far the most
  // popular, then US politics, vaccines, climate change, flat earth.
  std::map<TopicId, long long> hashtag_reach = {
      {TopicId::cooking, 177600000},      {TopicId::us_politics, 31139700},
      {TopicId::vaccines, 22330600},      {TopicId::climate_change, 1197900},
      {TopicId::flatearth, 593700},       {TopicId::other, 452000000},
  };

  void validate() const;

  // Default universe: large enough that every seeding stage can find its
  // quota through search even at the worst calibrated predictor noise.
  static CatalogSpec default_spec() {
    CatalogSpec s;
    for (TopicId t : kPolarisingTopics) {
      s.counts[{t, Stance::support}] = 300;
      s.counts[{t, Stance::oppose}] = 300;
    }
    s.counts[{TopicId::cooking, Stance::none}] = 600;
    s.counts[{TopicId::other, Stance::none}] = 1500;
    return s;
  }

  // Labeled evaluation set shape: 50 per polarising topic (25 per stance),
  // 50 neutral, 100 unrelated.
  static CatalogSpec eval_fixture_spec() {
    CatalogSpec s;
    for (TopicId t : kPolarisingTopics) {
      s.counts[{t, Stance::support}] = 25;
      s.counts[{t, Stance::oppose}] = 25;
    }
    s.counts[{TopicId::cooking, Stance::none}] = 50;
    s.counts[{TopicId::other, Stance::none}] = 100;
    return s;
  }
};

inline void CatalogSpec::validate() const {
  long long total = 0;
  for (const auto& [key, n] : counts) {
    if (n < 0)
      throw Error(Errc::invalid_spec, "negative count for category " + to_string(key));
    if (!is_polarising(key.topic) && key.stance != Stance::none)
      throw Error(Errc::invalid_spec,
                  "category " + to_string(key) + " must have stance none");
    if (is_polarising(key.topic) && key.stance == Stance::none)
      throw Error(Errc::invalid_spec,
                  "polarising category " + to_string(key) + " needs support or oppose");
    total += n;
  }
  if (total == 0) throw Error(Errc::invalid_spec, "catalog spec requests zero videos");
  if (duration_min_s <= 0 || duration_max_s < duration_min_s)
    throw Error(Errc::invalid_spec, "bad duration bounds");
}

inline std::vector<std::string> tokenize_lower(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Immutable after generation/load; shared read access from any number of
// agents is safe.
class Catalog {
 public:
  Catalog() = default;

  static Catalog from_videos(std::vector<VideoRecord> videos,
                             std::map<std::string, long long> hashtag_popularity = {}) {
    Catalog c;
    c.videos_ = std::move(videos);
    c.hashtag_popularity_ = std::move(hashtag_popularity);
    c.finalize();
    return c;
  }

  const std::vector<VideoRecord>& videos() const { return videos_; }
  std::size_t size() const { return videos_.size(); }

  const std::map<CategoryKey, std::vector<std::string>>& topic_index() const {
    return topic_index_;
  }
  const std::map<std::string, long long>& hashtag_popularity() const {
    return hashtag_popularity_;
  }

  const VideoRecord* find(const std::string& video_id) const {
    auto it = id_to_pos_.find(video_id);
    return it == id_to_pos_.end() ? nullptr : &videos_[it->second];
  }

  // Video positions per (topic, stance), in id order.
  const std::vector<std::uint32_t>& category_members(const CategoryKey& k) const {
    static const std::vector<std::uint32_t> empty;
    auto it = category_pos_.find(k);
    return it == category_pos_.end() ? empty : it->second;
  }

  // Video positions per topic across stances.
  const std::vector<std::uint32_t>& topic_members(TopicId t) const {
    static const std::vector<std::uint32_t> empty;
    auto it = topic_pos_.find(t);
    return it == topic_pos_.end() ? empty : it->second;
  }

  // Everything that is neither `interest` nor the neutral topic.
  const std::vector<std::uint32_t>& unrelated_members(TopicId interest) const {
    auto it = other_pos_.find(interest);
    if (it == other_pos_.end()) {
      static const std::vector<std::uint32_t> empty;
      return empty;
    }
    return it->second;
  }

  // Cumulative popularity weights over category_members(k), for weighted
  // sampling. Last element equals total_popularity(k).
  const std::vector<double>& category_weight_cumsum(const CategoryKey& k) const {
    static const std::vector<double> empty;
    auto it = category_cumsum_.find(k);
    return it == category_cumsum_.end() ? empty : it->second;
  }

  double total_popularity(const CategoryKey& k) const {
    const auto& c = category_weight_cumsum(k);
    return c.empty() ? 0.0 : c.back();
  }

  const std::vector<std::string>& tokens_of(std::uint32_t pos) const {
    return tokens_[pos];
  }

  void save(const std::filesystem::path& records_file) const;
  void save_hashtag_popularity(const std::filesystem::path& file) const;
  static Catalog load(const std::filesystem::path& records_file,
                      const std::optional<std::filesystem::path>& hashtag_file = {});

 private:
  friend Catalog generate_catalog(const CatalogSpec&, std::uint64_t);

  void finalize();

  std::vector<VideoRecord> videos_;
  std::map<std::string, long long> hashtag_popularity_;

  std::map<CategoryKey, std::vector<std::uint32_t>> category_pos_;
  std::map<TopicId, std::vector<std::uint32_t>> topic_pos_;
  std::map<TopicId, std::vector<std::uint32_t>> other_pos_;
  std::map<CategoryKey, std::vector<double>> category_cumsum_;
  std::map<CategoryKey, std::vector<std::string>> topic_index_;
  std::unordered_map<std::string, std::uint32_t> id_to_pos_;
  std::vector<std::vector<std::string>> tokens_;  // per video, sorted unique
};

namespace detail {

inline const std::vector<std::string>& hashtag_pool(TopicId t) {
  static const std::map<TopicId, std::vector<std::string>> pools = {
      {TopicId::flatearth,
       {"flatearth", "firmament", "flatearthsociety", "icewall", "globelie",
        "truthseeker", "antarctica", "wakeupcall"}},
      {TopicId::vaccines,
       {"vaccine", "vaccines", "covid", "vaxxed", "immunity", "bigpharma",
        "health", "medicine"}},
      {TopicId::climate_change,
       {"climatechange", "climate", "globalwarming", "greendeal", "co2",
        "environment", "greta", "weather"}},
      {TopicId::us_politics,
       {"politics", "uspolitics", "trump", "election", "maga", "democrats",
        "republicans", "washington"}},
      {TopicId::cooking,
       {"cooking", "recipe", "recipes", "food", "foodie", "dinner", "baking",
        "kitchen", "homemade", "chef"}},
      {TopicId::other,
       {"funny", "dance", "gaming", "travel", "diy", "pets", "sports", "music",
        "art", "vlog"}},
  };
  return pools.at(t);
}

inline const std::vector<std::string>& generic_hashtags() {
  static const std::vector<std::string> tags = {"fyp", "foryou", "viral",
                                                "trending", "tiktok"};
  return tags;
}

inline const std::map<std::string, long long>& generic_hashtag_reach() {
  static const std::map<std::string, long long> reach = {
      {"fyp", 500000000},      {"foryou", 350000000}, {"viral", 200000000},
      {"trending", 120000000}, {"tiktok", 80000000},
  };
  return reach;
}

// Phrase templates per category. Topical categories reuse the seed query
// lists so a seeded search always has matching descriptions to find.
inline const std::vector<std::string>& phrase_pool(const CategoryKey& k) {
  static const QuerySet queries = QuerySet::defaults();
  static const std::vector<std::string> cooking_extra = {
      "cooking recipes for the week",
      "easy dinner recipes tonight",
      "quick pasta recipes",
      "homemade bread baking tutorial",
      "5 minute meals cooking hacks",
      "grandma's secret recipe revealed",
      "one pan dinner recipes",
      "budget cooking for students",
      "viral cooking trend taste test",
      "meal prep recipes for beginners",
      "best street tacos recipe",
      "perfect steak cooking guide",
  };
  static const std::vector<std::string> other_pool = {
      "daily vlog morning routine",
      "funny cats compilation",
      "dance challenge tutorial",
      "gaming highlights of the week",
      "diy room makeover on a budget",
      "travel views from the plane window",
      "gym workout motivation",
      "new sneaker unboxing",
      "movie scenes that hit different",
      "puppy reacts to mirror",
      "life hacks you need",
      "satisfying cleaning timelapse",
      "street magic tricks on strangers",
      "basketball trick shots",
      "makeup transformation tutorial",
      "guitar cover of a classic song",
      "oddly satisfying slime video",
      "minecraft mega build timelapse",
      "car detailing before and after",
      "thrift store finds haul",
  };
  if (k.topic == TopicId::cooking) return cooking_extra;
  if (k.topic == TopicId::other) return other_pool;
  return queries.for_category(k);
}

inline std::string zero_pad(std::uint64_t v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width)
    s.insert(s.begin(), width - s.size(), '0');
  return s;
}

}  // namespace detail

inline Catalog generate_catalog(const CatalogSpec& spec, std::uint64_t seed) {
  spec.validate();
  RngStream rng = RngStream::keyed(seed, "catalog", "generate");

  Catalog cat;
  std::uint64_t counter = 0;
  static constexpr std::array<Stance, 3> kStanceOrder = {Stance::support, Stance::oppose,
                                                         Stance::none};
  static const std::vector<std::string> sticker_pool = {
      "WAIT FOR IT", "WATCH TILL END", "POV", "FACTS", "MUST SEE", "TRUTH", "NEW"};

  for (TopicId topic : kAllTopics) {
    for (Stance stance : kStanceOrder) {
      auto it = spec.counts.find({topic, stance});
      if (it == spec.counts.end() || it->second == 0) continue;
      const auto& phrases = detail::phrase_pool({topic, stance});
      const auto& tags = detail::hashtag_pool(topic);
      for (int i = 0; i < it->second; ++i) {
        VideoRecord v;
        v.video_id = "v" + detail::zero_pad(counter++, 6);
        v.author = "creator_" + detail::zero_pad(rng.uniform_below(2000), 4);
        v.description = rng.pick(phrases);
        if (rng.bernoulli(0.5)) {
          const std::string& second = rng.pick(phrases);
          if (second != v.description) v.description += " " + second;
        }
        int n_tags = 2 + static_cast<int>(rng.uniform_below(2));
        for (int t = 0; t < n_tags; ++t) {
          const std::string& tag = rng.pick(tags);
          if (std::find(v.hashtags.begin(), v.hashtags.end(), tag) == v.hashtags.end())
            v.hashtags.push_back(tag);
        }
        if (rng.bernoulli(0.7)) v.hashtags.push_back(rng.pick(detail::generic_hashtags()));
        v.transcript = rng.bernoulli(spec.empty_transcript_fraction)
                           ? std::string()
                           : rng.pick(phrases);
        v.stickers = rng.bernoulli(spec.sticker_fraction) ? rng.pick(sticker_pool)
                                                          : std::string();
        if (rng.bernoulli(spec.livestream_fraction)) {
          v.is_livestream = true;
          v.duration_s = rng.uniform(600.0, 7200.0);
        } else if (rng.bernoulli(spec.long_video_fraction)) {
          v.duration_s = rng.uniform(301.0, 900.0);
        } else {
          v.duration_s = rng.uniform(spec.duration_min_s, spec.duration_max_s);
        }
        v.true_topic = topic;
        v.true_stance = stance;
        v.popularity_weight = rng.uniform(spec.weight_min, spec.weight_max);
        cat.videos_.push_back(std::move(v));
      }
    }
  }

  // Platform-wide hashtag reach: each topic's budget is split across its
  // pool by harmonic weights, remainder to the head tag, so pool sums are
  // exact and the cross-topic ordering is guaranteed by construction.
  for (TopicId topic : kAllTopics) {
    auto reach_it = spec.hashtag_reach.find(topic);
    if (reach_it == spec.hashtag_reach.end()) continue;
    const auto& pool = detail::hashtag_pool(topic);
    double harmonic = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) harmonic += 1.0 / (1.0 + i);
    long long assigned = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      long long share = static_cast<long long>(
          static_cast<double>(reach_it->second) * (1.0 / (1.0 + i)) / harmonic);
      cat.hashtag_popularity_[pool[i]] = share;
      assigned += share;
    }
    cat.hashtag_popularity_[pool[0]] += reach_it->second - assigned;
  }
  for (const auto& [tag, reach] : detail::generic_hashtag_reach())
    cat.hashtag_popularity_[tag] = reach;

  cat.finalize();
  return cat;
}

inline void Catalog::finalize() {
  category_pos_.clear();
  topic_pos_.clear();
  other_pos_.clear();
  category_cumsum_.clear();
  topic_index_.clear();
  id_to_pos_.clear();
  tokens_.clear();
  tokens_.resize(videos_.size());

  for (std::uint32_t pos = 0; pos < videos_.size(); ++pos) {
    const VideoRecord& v = videos_[pos];
    if (!id_to_pos_.emplace(v.video_id, pos).second)
      throw Error(Errc::invalid_spec, "duplicate video_id " + v.video_id);
    CategoryKey key{v.true_topic, v.true_stance};
    category_pos_[key].push_back(pos);
    topic_pos_[v.true_topic].push_back(pos);
    topic_index_[key].push_back(v.video_id);

    auto toks = tokenize_lower(v.description);
    for (const auto& tag : v.hashtags) toks.push_back(tag);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    tokens_[pos] = std::move(toks);

    // Any hashtag present on a video must have a platform-wide count.
    for (const auto& tag : v.hashtags) hashtag_popularity_.try_emplace(tag, 0);
  }

  for (const auto& [key, members] : category_pos_) {
    auto& cumsum = category_cumsum_[key];
    cumsum.reserve(members.size());
    double acc = 0.0;
    for (std::uint32_t pos : members) {
      acc += videos_[pos].popularity_weight;
      cumsum.push_back(acc);
    }
  }

  for (TopicId interest : kAllTopics) {
    auto& pool = other_pos_[interest];
    for (std::uint32_t pos = 0; pos < videos_.size(); ++pos) {
      TopicId t = videos_[pos].true_topic;
      if (t != interest && t != TopicId::cooking) pool.push_back(pos);
    }
  }
}

// --- search ---------------------------------------------------------------

// Pure keyword search: score is the count of shared lowercase tokens between
// the query and description+hashtags; ties break by popularity weight, then
// video_id. Zero-score videos are never returned.
inline std::vector<const VideoRecord*> search(const Catalog& catalog,
                                              const std::string& query, int limit) {
  if (limit < 1) throw Error(Errc::invalid_query, "limit must be >= 1");
  auto query_tokens = tokenize_lower(query);
  std::sort(query_tokens.begin(), query_tokens.end());
  query_tokens.erase(std::unique(query_tokens.begin(), query_tokens.end()),
                     query_tokens.end());
  if (query_tokens.empty()) throw Error(Errc::invalid_query, "empty query");

  struct Hit {
    int score;
    std::uint32_t pos;
  };
  std::vector<Hit> hits;
  for (std::uint32_t pos = 0; pos < catalog.size(); ++pos) {
    const auto& video_tokens = catalog.tokens_of(pos);
    int score = 0;
    for (const auto& qt : query_tokens)
      if (std::binary_search(video_tokens.begin(), video_tokens.end(), qt)) ++score;
    if (score > 0) hits.push_back({score, pos});
  }
  std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    const VideoRecord& va = catalog.videos()[a.pos];
    const VideoRecord& vb = catalog.videos()[b.pos];
    if (va.popularity_weight != vb.popularity_weight)
      return va.popularity_weight > vb.popularity_weight;
    return va.video_id < vb.video_id;
  });
  if (static_cast<int>(hits.size()) > limit) hits.resize(limit);

  std::vector<const VideoRecord*> out;
  out.reserve(hits.size());
  for (const Hit& h : hits) out.push_back(&catalog.videos()[h.pos]);
  return out;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::ordered_json video_to_json(const VideoRecord& v) {
  nlohmann::ordered_json j;
  j["video_id"] = v.video_id;
  j["author"] = v.author;
  j["description"] = v.description;
  j["hashtags"] = v.hashtags;
  j["transcript"] = v.transcript;
  j["stickers"] = v.stickers;
  j["duration_s"] = v.duration_s;
  j["is_livestream"] = v.is_livestream;
  j["true_topic"] = to_string(v.true_topic);
  j["true_stance"] = to_string(v.true_stance);
  j["popularity_weight"] = v.popularity_weight;
  return j;
}

inline VideoRecord video_from_json(const nlohmann::json& j) {
  VideoRecord v;
  v.video_id = j.at("video_id").get<std::string>();
  v.author = j.at("author").get<std::string>();
  v.description = j.at("description").get<std::string>();
  v.hashtags = j.at("hashtags").get<std::vector<std::string>>();
  v.transcript = j.at("transcript").get<std::string>();
  v.stickers = j.at("stickers").get<std::string>();
  v.duration_s = j.at("duration_s").get<double>();
  v.is_livestream = j.at("is_livestream").get<bool>();
  v.true_topic = parse_topic(j.at("true_topic").get<std::string>());
  v.true_stance = parse_stance(j.at("true_stance").get<std::string>());
  v.popularity_weight = j.at("popularity_weight").get<double>();
  return v;
}

inline void Catalog::save(const std::filesystem::path& records_file) const {
  std::ofstream out(records_file);
  if (!out) throw Error(Errc::io, "cannot write " + records_file.string());
  for (const VideoRecord& v : videos_) out << video_to_json(v).dump() << "\n";
}

inline void Catalog::save_hashtag_popularity(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw Error(Errc::io, "cannot write " + file.string());
  for (const auto& [tag, count] : hashtag_popularity_) out << tag << "\t" << count << "\n";
}

inline Catalog Catalog::load(const std::filesystem::path& records_file,
                             const std::optional<std::filesystem::path>& hashtag_file) {
  std::ifstream in(records_file);
  if (!in) throw Error(Errc::io, "cannot read " + records_file.string());
  Catalog cat;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      cat.videos_.push_back(video_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, records_file.string() + ":" + std::to_string(line_no) +
                                   ": " + e.what());
    }
  }
  if (hashtag_file) {
    std::ifstream htin(*hashtag_file);
    if (!htin) throw Error(Errc::io, "cannot read " + hashtag_file->string());
    std::string tag;
    long long count;
    while (htin >> tag >> count) cat.hashtag_popularity_[tag] = count;
  } else {
    // No sidecar: fall back to within-catalog occurrence counts so the
    // popularity map still covers every hashtag.
    for (const VideoRecord& v : cat.videos_)
      for (const auto& tag : v.hashtags) ++cat.hashtag_popularity_[tag];
  }
  cat.finalize();
  return cat;
}

}  // namespace driftlab
