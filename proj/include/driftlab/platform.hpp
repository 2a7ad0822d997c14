#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftlab/catalog.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/queries.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// Target feed composition for one 30-minute bin. Shares must sum to 1;
// stance_split is the fraction of interest-topic videos drawn with support
// stance.
struct MixtureTarget {
  double interest_share = 0.0;
  double neutral_share = 0.0;
  double other_share = 0.0;
  double stance_split = 0.5;
};

struct ScenarioConfig {
  std::string name;
  int feed_batch_size = 8;
  std::vector<MixtureTarget> bins;  // one per bin, indexed from 0

  void validate() const {
    if (feed_batch_size < 1) throw Error(Errc::validation, "feed_batch_size must be >= 1");
    if (bins.empty()) throw Error(Errc::validation, "scenario has no bins");
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const MixtureTarget& t = bins[i];
      const double sum = t.interest_share + t.neutral_share + t.other_share;
      if (std::abs(sum - 1.0) > 1e-9)
        throw Error(Errc::validation, "scenario '" + name + "' bin " + std::to_string(i) +
                                          ": shares sum to " + std::to_string(sum));
      if (t.interest_share < 0 || t.neutral_share < 0 || t.other_share < 0 ||
          t.stance_split < 0 || t.stance_split > 1)
        throw Error(Errc::validation, "scenario '" + name + "' bin " + std::to_string(i) +
                                          ": shares out of range");
    }
  }

  static ScenarioConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  static ScenarioConfig preset(std::string_view name, int n_bins, int batch_size = 8);
  static bool is_preset(std::string_view name);
};

inline ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read scenario " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, "scenario " + path.string() + ": " + e.what());
  }
  ScenarioConfig s;
  try {
    s.name = j.at("name").get<std::string>();
    s.feed_batch_size = j.value("feed_batch_size", 8);
    int expected = 0;
    for (const auto& bj : j.at("bins")) {
      if (bj.value("bin", expected) != expected)
        throw Error(Errc::validation,
                    "scenario bins must be consecutive from 0; got bin " +
                        std::to_string(bj.value("bin", -1)) + " at position " +
                        std::to_string(expected));
      MixtureTarget t;
      t.interest_share = bj.at("interest_share").get<double>();
      t.neutral_share = bj.at("neutral_share").get<double>();
      t.other_share = bj.at("other_share").get<double>();
      t.stance_split = bj.value("stance_split", 0.5);
      s.bins.push_back(t);
      ++expected;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, "scenario " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

inline void ScenarioConfig::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["feed_batch_size"] = feed_batch_size;
  j["bins"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < bins.size(); ++i) {
    nlohmann::ordered_json bj;
    bj["bin"] = i;
    bj["interest_share"] = bins[i].interest_share;
    bj["neutral_share"] = bins[i].neutral_share;
    bj["other_share"] = bins[i].other_share;
    bj["stance_split"] = bins[i].stance_split;
    j["bins"].push_back(bj);
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write scenario " + path.string());
  out << j.dump(2) << "\n";
}

// Built-in scenario shapes. Numeric curves are calibration fixtures chosen
// to match the qualitative regimes observed on the live platform:
//   neutral-domination: neutral content rapidly displaces everything else.
//   neutralising:       interest decays to nothing while neutral grows.
//   equilibrium:        stable ~70% interest / 25% neutral split.
//   stance-preference:  high interest share drifting from -0.7 to -0.8
//                       normalized stance difference (oppose-heavy).
inline ScenarioConfig ScenarioConfig::preset(std::string_view name, int n_bins,
                                             int batch_size) {
  if (n_bins < 1) throw Error(Errc::validation, "preset needs at least 1 bin");
  ScenarioConfig s;
  s.name = std::string(name);
  s.feed_batch_size = batch_size;
  s.bins.resize(n_bins);
  const double last = std::max(1, n_bins - 1);
  for (int i = 0; i < n_bins; ++i) {
    const double f = n_bins == 1 ? 0.0 : static_cast<double>(i) / last;
    MixtureTarget& t = s.bins[i];
    if (name == "neutral-domination") {
      t.interest_share = 0.10 - 0.08 * f;
      t.neutral_share = 0.25 + 0.47 * f;
      t.stance_split = 0.5;
    } else if (name == "neutralising") {
      t.interest_share = 0.15 - 0.14 * f;
      t.neutral_share = 0.05 + 0.55 * f;
      t.stance_split = 0.7;
    } else if (name == "equilibrium") {
      t.interest_share = 0.70;
      t.neutral_share = 0.25;
      t.stance_split = 0.5;
    } else if (name == "stance-preference") {
      t.interest_share = 0.75;
      t.neutral_share = 0.05;
      t.stance_split = 0.15 - 0.05 * f;  // normalized difference -0.7 -> -0.8
    } else {
      throw Error(Errc::validation, "unknown scenario preset '" + std::string(name) + "'");
    }
    t.other_share = 1.0 - t.interest_share - t.neutral_share;
  }
  s.validate();
  return s;
}

inline bool ScenarioConfig::is_preset(std::string_view name) {
  return name == "neutral-domination" || name == "neutralising" ||
         name == "equilibrium" || name == "stance-preference";
}

// --- feed state ----------------------------------------------------------------

struct FeedParams {
  double exploration_rate = 0.2;
  double reward = 1.0;      // interest-score increment per watch+like+bookmark
  double skip_decay = 1.0;  // multiplicative decay on skip (1.0 = no-op)
  int feed_batch_size = 8;  // adaptive mode; scripted mode uses the scenario's
};

// Per-user recommender state. One per user; users never share mutable state.
struct FeedState {
  std::string user_id;
  TopicId interest_topic = TopicId::cooking;
  std::map<CategoryKey, double> interest_scores;
  FeedParams params;
  RngStream rng{0};
};

inline FeedState register_user(const UserProfile& profile, std::uint64_t master_seed,
                               const FeedParams& params = {}) {
  FeedState s;
  s.user_id = profile.user_id;
  s.interest_topic = profile.topic;
  s.params = params;
  s.rng = RngStream::keyed(master_seed, profile.user_id, "feed");
  return s;
}

namespace detail {

// Uniform draw among category members not yet used in this batch.
inline const VideoRecord* draw_unused_uniform(const Catalog& catalog,
                                              const std::vector<std::uint32_t>& pool,
                                              std::set<std::uint32_t>& used,
                                              RngStream& rng, const char* what) {
  if (pool.empty())
    throw Error(Errc::insufficient_catalog, std::string("catalog has no ") + what);
  for (int attempt = 0; attempt < 32; ++attempt) {
    std::uint32_t pos = pool[rng.uniform_below(pool.size())];
    if (used.insert(pos).second) return &catalog.videos()[pos];
  }
  std::vector<std::uint32_t> unused;
  for (std::uint32_t pos : pool)
    if (!used.count(pos)) unused.push_back(pos);
  if (unused.empty())
    throw Error(Errc::insufficient_catalog,
                std::string("catalog exhausted for ") + what + " within one batch");
  std::uint32_t pos = unused[rng.uniform_below(unused.size())];
  used.insert(pos);
  return &catalog.videos()[pos];
}

// Popularity-weighted draw within a category (with replacement).
inline const VideoRecord* draw_weighted(const Catalog& catalog, const CategoryKey& key,
                                        RngStream& rng) {
  const auto& members = catalog.category_members(key);
  const auto& cumsum = catalog.category_weight_cumsum(key);
  if (members.empty())
    throw Error(Errc::insufficient_catalog, "catalog has no videos for " + to_string(key));
  const double r = rng.uniform01() * cumsum.back();
  auto it = std::upper_bound(cumsum.begin(), cumsum.end(), r);
  std::size_t idx = std::min<std::size_t>(it - cumsum.begin(), members.size() - 1);
  return &catalog.videos()[members[idx]];
}

}  // namespace detail

// Scripted recommender: every batch slot draws its category from the bin's
// mixture target, so per-bin expected category shares equal the target by
// construction. Videos are sampled without replacement within the batch.
inline std::vector<const VideoRecord*> next_feed_batch_scripted(
    const ScenarioConfig& scenario, const Catalog& catalog, int bin_index,
    FeedState& state) {
  if (bin_index < 0 || bin_index >= static_cast<int>(scenario.bins.size()))
    throw Error(Errc::scenario_exhausted,
                "scenario '" + scenario.name + "' has " +
                    std::to_string(scenario.bins.size()) + " bins, requested bin " +
                    std::to_string(bin_index));
  const MixtureTarget& target = scenario.bins[bin_index];

  std::vector<const VideoRecord*> batch;
  batch.reserve(scenario.feed_batch_size);
  std::set<std::uint32_t> used;
  for (int i = 0; i < scenario.feed_batch_size; ++i) {
    const double u = state.rng.uniform01();
    if (u < target.interest_share) {
      const Stance stance =
          state.rng.bernoulli(target.stance_split) ? Stance::support : Stance::oppose;
      const auto& pool = catalog.category_members({state.interest_topic, stance});
      batch.push_back(detail::draw_unused_uniform(
          catalog, pool, used, state.rng,
          to_string(CategoryKey{state.interest_topic, stance}).c_str()));
    } else if (u < target.interest_share + target.neutral_share) {
      const auto& pool = catalog.category_members({TopicId::cooking, Stance::none});
      batch.push_back(
          detail::draw_unused_uniform(catalog, pool, used, state.rng, "cooking/none"));
    } else {
      const auto& pool = catalog.unrelated_members(state.interest_topic);
      batch.push_back(
          detail::draw_unused_uniform(catalog, pool, used, state.rng, "unrelated videos"));
    }
  }
  return batch;
}

// Adaptive recommender: each slot explores uniformly over the whole catalog
// with probability exploration_rate, otherwise exploits by drawing a
// (topic, stance) category proportionally to interest_score x total category
// popularity, then a video within it proportionally to popularity weight.
// All interest scores at zero fall back to the exploration path.
inline std::vector<const VideoRecord*> next_feed_batch_adaptive(FeedState& state,
                                                                const Catalog& catalog) {
  if (catalog.size() == 0) throw Error(Errc::insufficient_catalog, "catalog is empty");

  // Category weights: score * total category popularity. Empty categories
  // carry zero weight.
  std::vector<std::pair<CategoryKey, double>> weights;
  double total_weight = 0.0;
  for (const auto& [key, score] : state.interest_scores) {
    if (score <= 0.0) continue;
    const double w = score * catalog.total_popularity(key);
    if (w > 0.0) {
      weights.emplace_back(key, w);
      total_weight += w;
    }
  }

  std::vector<const VideoRecord*> batch;
  batch.reserve(state.params.feed_batch_size);
  for (int i = 0; i < state.params.feed_batch_size; ++i) {
    const bool explore =
        total_weight <= 0.0 || state.rng.bernoulli(state.params.exploration_rate);
    if (explore) {
      batch.push_back(&catalog.videos()[state.rng.uniform_below(catalog.size())]);
      continue;
    }
    const double r = state.rng.uniform01() * total_weight;
    double acc = 0.0;
    const CategoryKey* chosen = &weights.back().first;
    for (const auto& [key, w] : weights) {
      acc += w;
      if (r < acc) {
        chosen = &key;
        break;
      }
    }
    batch.push_back(detail::draw_weighted(catalog, *chosen, state.rng));
  }
  return batch;
}

// Feedback signal the recommender consumes. Watch+like+bookmark is one
// compound action and adds `reward` to the video's (topic, stance) score; a
// skip multiplies that score by `skip_decay`.
inline void record_feedback(FeedState& state, const VideoRecord& video, Action action) {
  const CategoryKey key{video.true_topic, video.true_stance};
  if (action == Action::watch_like_bookmark) {
    state.interest_scores[key] += state.params.reward;
  } else if (state.params.skip_decay != 1.0) {
    auto it = state.interest_scores.find(key);
    if (it != state.interest_scores.end()) it->second *= state.params.skip_decay;
  }
}

}  // namespace driftlab
