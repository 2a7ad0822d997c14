#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "driftlab/catalog.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/event_log.hpp"
#include "driftlab/stats.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

struct BinCounts {
  int bin_index = 0;
  long long n_interest = 0;
  long long n_neutral = 0;
  long long n_other = 0;
  long long n_support = 0;
  long long n_oppose = 0;

  long long total() const { return n_interest + n_neutral + n_other; }
};

// Assigns each For You event of one user to a 30-minute in-session bin:
// bin = day_index * bins_per_session + min(floor(in_session/width), last).
// Session time is relative to the first For You event of that day, so
// overtime events land in the day's last bin. Seed-phase (search) events are
// excluded. Input must be time-sorted.
inline std::vector<BinCounts> bin_events(std::span<const InteractionEvent> events,
                                         double bin_width_s = kDefaultBinWidthS,
                                         double session_budget_s = kDefaultSessionBudgetS) {
  if (bin_width_s <= 0 || session_budget_s < bin_width_s)
    throw Error(Errc::contract, "bad bin width / session budget");
  const int bins_per_session =
      std::max(1, static_cast<int>(std::floor(session_budget_s / bin_width_s)));

  double prev = -1.0;
  for (const auto& e : events) {
    if (e.virtual_time_s < prev)
      throw Error(Errc::contract, "events not sorted by virtual_time_s");
    prev = e.virtual_time_s;
  }

  // day_index = rank of the session_day among this user's For You days.
  std::set<int> days;
  for (const auto& e : events)
    if (e.feed_source == FeedSource::foryou) days.insert(e.session_day);
  std::map<int, int> day_rank;
  for (int d : days) day_rank.emplace(d, static_cast<int>(day_rank.size()));

  std::map<int, double> session_start;
  std::map<int, BinCounts> bins;
  for (const auto& e : events) {
    if (e.feed_source != FeedSource::foryou) continue;
    auto [it, inserted] = session_start.emplace(e.session_day, e.virtual_time_s);
    const double in_session = e.virtual_time_s - it->second;
    int slot = static_cast<int>(std::floor(in_session / bin_width_s));
    slot = std::min(slot, bins_per_session - 1);
    const int bin = day_rank.at(e.session_day) * bins_per_session + slot;
    BinCounts& b = bins[bin];
    b.bin_index = bin;
    switch (e.annotation.topic_class) {
      case TopicClass::interest:
        ++b.n_interest;
        if (e.annotation.stance == Stance::support)
          ++b.n_support;
        else
          ++b.n_oppose;
        break;
      case TopicClass::neutral:
        ++b.n_neutral;
        break;
      case TopicClass::other:
        ++b.n_other;
        break;
    }
  }

  std::vector<BinCounts> out;
  if (bins.empty()) return out;
  const int last = bins.rbegin()->first;
  out.resize(last + 1);
  for (int i = 0; i <= last; ++i) out[i].bin_index = i;
  for (const auto& [idx, b] : bins) out[idx] = b;
  return out;
}

// Elementwise sum of per-user bin counts. Users with shorter series
// contribute zeros past their end.
inline std::vector<BinCounts> aggregate_bins(
    const std::vector<std::vector<BinCounts>>& per_user) {
  std::size_t len = 0;
  for (const auto& u : per_user) len = std::max(len, u.size());
  std::vector<BinCounts> out(len);
  for (std::size_t i = 0; i < len; ++i) out[i].bin_index = static_cast<int>(i);
  for (const auto& u : per_user) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      out[i].n_interest += u[i].n_interest;
      out[i].n_neutral += u[i].n_neutral;
      out[i].n_other += u[i].n_other;
      out[i].n_support += u[i].n_support;
      out[i].n_oppose += u[i].n_oppose;
    }
  }
  return out;
}

inline std::vector<BinCounts> aggregate_users(
    const std::vector<std::pair<UserProfile, std::vector<BinCounts>>>& per_user,
    const std::function<bool(const UserProfile&)>& cohort) {
  std::vector<std::vector<BinCounts>> selected;
  for (const auto& [profile, bins] : per_user)
    if (cohort(profile)) selected.push_back(bins);
  return aggregate_bins(selected);
}

inline BinCounts pool_bins(std::span<const BinCounts> bins) {
  BinCounts total;
  for (const auto& b : bins) {
    total.n_interest += b.n_interest;
    total.n_neutral += b.n_neutral;
    total.n_other += b.n_other;
    total.n_support += b.n_support;
    total.n_oppose += b.n_oppose;
  }
  return total;
}

// --- drift metrics ------------------------------------------------------------
// All three are ratios over summed counts; bins with a zero denominator are
// undefined and excluded from fits and tests rather than imputed.

// Share of personalised recommendations (interest + neutral) among all.
inline std::optional<double> preference_aligned(const BinCounts& b) {
  const long long denom = b.n_interest + b.n_neutral + b.n_other;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(b.n_interest + b.n_neutral) / static_cast<double>(denom);
}

// +1 = all interest-topic videos, -1 = all neutral-topic videos.
inline std::optional<double> polarisation_topic(const BinCounts& b) {
  const long long denom = b.n_interest + b.n_neutral;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(b.n_interest - b.n_neutral) / static_cast<double>(denom);
}

// +1 = all support stance, -1 = all oppose stance.
inline std::optional<double> polarisation_stance(const BinCounts& b) {
  const long long denom = b.n_support + b.n_oppose;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(b.n_support - b.n_oppose) / static_cast<double>(denom);
}

enum class DriftMetric { preference_aligned, polarisation_topic, polarisation_stance };

inline constexpr std::array<DriftMetric, 3> kAllMetrics = {
    DriftMetric::preference_aligned, DriftMetric::polarisation_topic,
    DriftMetric::polarisation_stance};

inline std::string_view to_string(DriftMetric m) {
  switch (m) {
    case DriftMetric::preference_aligned: return "preference_aligned";
    case DriftMetric::polarisation_topic: return "polarisation_topic";
    case DriftMetric::polarisation_stance: return "polarisation_stance";
  }
  return "?";
}

inline std::optional<double> metric_value(DriftMetric m, const BinCounts& b) {
  switch (m) {
    case DriftMetric::preference_aligned: return preference_aligned(b);
    case DriftMetric::polarisation_topic: return polarisation_topic(b);
    case DriftMetric::polarisation_stance: return polarisation_stance(b);
  }
  return std::nullopt;
}

struct DriftSeries {
  DriftMetric metric = DriftMetric::preference_aligned;
  std::vector<std::pair<int, std::optional<double>>> points;
  std::optional<RegressionFit> fit;  // absent when < 2 defined points
  int n_users = 0;
};

inline DriftSeries build_series(std::span<const BinCounts> bins, DriftMetric metric,
                                int n_users) {
  DriftSeries s;
  s.metric = metric;
  s.n_users = n_users;
  std::vector<std::pair<int, double>> defined;
  for (const auto& b : bins) {
    auto v = metric_value(metric, b);
    s.points.emplace_back(b.bin_index, v);
    if (v) defined.emplace_back(b.bin_index, *v);
  }
  std::set<int> distinct;
  for (const auto& [x, y] : defined) distinct.insert(x);
  if (distinct.size() >= 2) s.fit = fit_drift(defined);
  return s;
}

inline std::vector<double> defined_values(const DriftSeries& s) {
  std::vector<double> out;
  for (const auto& [x, v] : s.points)
    if (v) out.push_back(*v);
  return out;
}

// --- hashtag popularity ---------------------------------------------------------

struct HashtagPopularity {
  std::vector<std::pair<std::string, long long>> top;  // (tag, occurrences)
  long long popularity_sum = 0;  // platform-wide reach summed over `top`
};

// For one topic cohort: collect hashtags of topic-relevant videos watched
// during the seeding phase, drop blocklisted generics, keep the k most
// common (ties to the lexicographically smaller tag), and sum the
// platform-wide per-hashtag video counts over them.
inline HashtagPopularity hashtag_popularity(std::span<const InteractionEvent> seed_events,
                                            const Catalog& catalog,
                                            const std::set<std::string>& generic_blocklist,
                                            int k = 10) {
  std::map<std::string, long long> occurrences;
  std::set<std::string> seen_videos;
  for (const auto& e : seed_events) {
    if (e.feed_source != FeedSource::search) continue;
    if (e.action != Action::watch_like_bookmark) continue;
    if (e.annotation.topic_class != TopicClass::interest) continue;
    if (!seen_videos.insert(e.user_id + "/" + e.video_id).second) continue;
    const VideoRecord* v = catalog.find(e.video_id);
    if (!v) throw Error(Errc::contract, "seed event references unknown video " + e.video_id);
    for (const auto& tag : v->hashtags)
      if (!generic_blocklist.count(tag)) ++occurrences[tag];
  }

  std::vector<std::pair<std::string, long long>> ranked(occurrences.begin(),
                                                        occurrences.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > k) ranked.resize(k);

  HashtagPopularity result;
  result.top = std::move(ranked);
  for (const auto& [tag, n] : result.top) {
    auto it = catalog.hashtag_popularity().find(tag);
    result.popularity_sum += it == catalog.hashtag_popularity().end() ? 0 : it->second;
  }
  return result;
}

}  // namespace driftlab
