#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftlab/analytics.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/event_log.hpp"
#include "driftlab/report.hpp"

namespace driftlab {

// Cohort selector over the experiment roster: any conjunction of group,
// topic and seeded stance. Parsed from "group=G2,topic=us_politics" /
// "topic=flatearth,stance=support" / "all".
struct CohortSpec {
  std::optional<Group> group;
  std::optional<TopicId> topic;
  std::optional<Stance> stance;

  static CohortSpec parse(const std::string& text) {
    CohortSpec spec;
    if (text == "all" || text.empty()) return spec;
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t comma = text.find(',', start);
      const std::string part =
          text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const std::size_t eq = part.find('=');
      if (eq == std::string::npos)
        throw Error(Errc::validation, "cohort spec part '" + part + "' is not key=value");
      const std::string key = part.substr(0, eq), value = part.substr(eq + 1);
      if (key == "group") {
        spec.group = parse_group(value);
      } else if (key == "topic") {
        spec.topic = parse_topic(value);
      } else if (key == "stance") {
        spec.stance = parse_stance(value);
      } else {
        throw Error(Errc::validation, "unknown cohort key '" + key + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return spec;
  }

  bool matches(const UserProfile& p) const {
    if (group && p.group != *group) return false;
    if (topic && p.topic != *topic) return false;
    if (stance && !p.stance_set.count(*stance)) return false;
    return true;
  }

  std::string tag() const {
    std::string t;
    auto add = [&](std::string_view part) {
      if (!t.empty()) t += "_";
      t += part;
    };
    if (group) add(to_string(*group) == "G1"   ? "g1"
                   : to_string(*group) == "G2" ? "g2"
                                               : "g3");
    if (topic) add(to_string(*topic));
    if (stance) add(to_string(*stance));
    return t.empty() ? "all" : t;
  }
};

struct ExperimentManifest {
  std::vector<UserProfile> users;
  std::map<std::string, int> days_by_user;
  std::string experiment_name;
  std::set<std::string> hashtag_blocklist;
  double session_budget_s = kDefaultSessionBudgetS;

  static ExperimentManifest load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw Error(Errc::io, "cannot read manifest in " + dir.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, "manifest.json: " + std::string(e.what()));
    }
    ExperimentManifest m;
    try {
      const auto& cj = j.at("config");
      m.experiment_name = cj.at("experiment_name").get<std::string>();
      m.session_budget_s = cj.value("session_budget_s", kDefaultSessionBudgetS);
      for (const auto& t : cj.value("hashtag_blocklist", nlohmann::json::array()))
        m.hashtag_blocklist.insert(t.get<std::string>());
      for (const auto& uj : j.at("users")) {
        UserProfile p;
        p.user_id = uj.at("user_id").get<std::string>();
        p.group = parse_group(uj.at("group").get<std::string>());
        p.topic = parse_topic(uj.at("topic").get<std::string>());
        for (const auto& s : uj.at("stances"))
          p.stance_set.insert(parse_stance(s.get<std::string>()));
        p.age_bracket = uj.value("age_bracket", std::string("18-24"));
        p.gender = parse_gender(uj.value("gender", std::string("f")));
        m.days_by_user[p.user_id] = uj.value("days_interaction", 0);
        m.users.push_back(std::move(p));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, "manifest.json: " + std::string(e.what()));
    }
    return m;
  }
};

struct AnalyzeOptions {
  StancePairing stance_pairing = StancePairing::automatic;
  std::optional<std::filesystem::path> report_dir;
};

// Full analysis pass over an experiment directory: select the cohort, bin
// each user's log, aggregate counts, build the three drift series and the
// significance tests, then emit CSV/SVG/summary files under report_dir.
inline CohortReport analyze_experiment(const std::filesystem::path& experiment_dir,
                                       const CohortSpec& cohort,
                                       const AnalyzeOptions& options = {}) {
  const ExperimentManifest manifest = ExperimentManifest::load(experiment_dir);

  std::vector<const UserProfile*> selected;
  for (const UserProfile& p : manifest.users)
    if (cohort.matches(p)) selected.push_back(&p);
  if (selected.empty())
    throw Error(Errc::cohort_empty, "cohort '" + cohort.tag() + "' selects no users");

  std::vector<std::vector<InteractionEvent>> event_logs;
  std::vector<std::vector<BinCounts>> per_user_bins;
  for (const UserProfile* p : selected) {
    const auto log_path = experiment_dir / (p->user_id + ".log");
    if (!std::filesystem::exists(log_path))
      throw Error(Errc::cohort_empty,
                  "cohort '" + cohort.tag() + "': missing log " + log_path.string());
    event_logs.push_back(read_log(log_path));
    per_user_bins.push_back(
        bin_events(event_logs.back(), kDefaultBinWidthS, manifest.session_budget_s));
  }

  CohortReport report;
  report.experiment = manifest.experiment_name;
  report.cohort_tag = cohort.tag();
  report.n_users = static_cast<int>(selected.size());
  report.bins = aggregate_bins(per_user_bins);
  report.totals = pool_bins(report.bins);
  for (DriftMetric m : kAllMetrics)
    report.series.push_back(build_series(report.bins, m, report.n_users));

  // First-half vs second-half shift test per metric.
  for (const DriftSeries& s : report.series) {
    const auto values = defined_values(s);
    if (values.size() < 4) continue;
    const std::size_t half = values.size() / 2;
    std::vector<double> first(values.begin(), values.begin() + half);
    std::vector<double> second(values.begin() + half, values.end());
    report.half_split_tests.emplace(s.metric, mann_whitney_u(first, second));
  }

  // Stance significance test. The default pairing compares per-bin interest
  // counts of the support-seeded vs oppose-seeded sub-cohorts; for cohorts
  // seeded with both stances at once it falls back to comparing per-bin
  // support vs oppose counts directly.
  {
    std::vector<std::vector<BinCounts>> support_bins, oppose_bins;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (selected[i]->group == Group::g3_mixed_polarity) continue;
      if (selected[i]->stance_set == std::set<Stance>{Stance::support})
        support_bins.push_back(per_user_bins[i]);
      else if (selected[i]->stance_set == std::set<Stance>{Stance::oppose})
        oppose_bins.push_back(per_user_bins[i]);
    }
    const bool have_cohorts = !support_bins.empty() && !oppose_bins.empty();

    StancePairing pairing = options.stance_pairing;
    if (pairing == StancePairing::automatic)
      pairing = have_cohorts ? StancePairing::seeded_cohorts
                             : StancePairing::stance_counts;

    if (pairing == StancePairing::seeded_cohorts && have_cohorts) {
      auto counts_of = [](const std::vector<std::vector<BinCounts>>& users) {
        std::vector<double> out;
        for (const BinCounts& b : aggregate_bins(users))
          out.push_back(static_cast<double>(b.n_interest));
        return out;
      };
      const auto a = counts_of(support_bins), b = counts_of(oppose_bins);
      if (!a.empty() && !b.empty())
        report.stance_test = StanceTest{pairing, mann_whitney_u(a, b)};
    } else if (pairing == StancePairing::stance_counts && !report.bins.empty()) {
      std::vector<double> support, oppose;
      for (const BinCounts& b : report.bins) {
        support.push_back(static_cast<double>(b.n_support));
        oppose.push_back(static_cast<double>(b.n_oppose));
      }
      report.stance_test = StanceTest{pairing, mann_whitney_u(support, oppose)};
    }
  }

  // Seeding-phase hashtag popularity, when the catalog was persisted.
  const auto catalog_path = experiment_dir / "catalog.jsonl";
  if (std::filesystem::exists(catalog_path)) {
    const auto hashtag_path = experiment_dir / "catalog_hashtags.tsv";
    const Catalog catalog = Catalog::load(
        catalog_path, std::filesystem::exists(hashtag_path)
                          ? std::optional<std::filesystem::path>(hashtag_path)
                          : std::nullopt);
    std::vector<InteractionEvent> seed_events;
    for (const auto& log : event_logs)
      for (const auto& e : log)
        if (e.feed_source == FeedSource::search) seed_events.push_back(e);
    if (!seed_events.empty())
      report.hashtags =
          hashtag_popularity(seed_events, catalog, manifest.hashtag_blocklist);
  }

  emit_report(report, options.report_dir.value_or(experiment_dir / "report"));
  return report;
}

}  // namespace driftlab
