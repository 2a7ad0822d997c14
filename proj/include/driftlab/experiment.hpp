#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "driftlab/agent.hpp"
#include "driftlab/catalog.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/event_log.hpp"
#include "driftlab/platform.hpp"
#include "driftlab/predictor.hpp"
#include "driftlab/queries.hpp"
#include "driftlab/remote.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

struct GroupConfig {
  Group group = Group::g2_polarising_only;
  std::vector<TopicId> topics;  // ignored for G3 (always us_politics)
  int users_per_stance = 4;     // G1/G2: per (topic, stance) cell
  int users_total = 4;          // G3
  int days_interaction = 15;
};

struct PredictorSelector {
  enum class Kind { oracle, remote };
  Kind kind = Kind::oracle;
  double topic_error_rate = 0.0;
  double stance_error_rate = 0.0;
  RemoteConfig remote;
};

struct RecommenderSelector {
  RecommenderMode::Kind kind = RecommenderMode::Kind::scripted;
  std::string scenario_preset = "equilibrium";
  std::optional<ScenarioConfig> scenario_explicit;  // wins over the preset
  std::map<std::pair<Group, TopicId>, std::string> preset_overrides;
  int feed_batch_size = 8;
  FeedParams params;

  // Scripted scenarios resolve per user so presets can cover exactly the
  // group's bin count.
  RecommenderMode resolve(Group group, TopicId topic, int n_bins) const {
    RecommenderMode mode;
    mode.kind = kind;
    mode.params = params;
    mode.params.feed_batch_size = feed_batch_size;
    if (kind == RecommenderMode::Kind::scripted) {
      if (scenario_explicit) {
        mode.scenario = *scenario_explicit;
        mode.scenario.feed_batch_size = feed_batch_size;
      } else {
        std::string preset = scenario_preset;
        auto it = preset_overrides.find({group, topic});
        if (it != preset_overrides.end()) preset = it->second;
        mode.scenario = ScenarioConfig::preset(preset, n_bins, feed_batch_size);
      }
    }
    return mode;
  }
};

struct ExperimentConfig {
  std::string experiment_name = "experiment";
  std::uint64_t master_seed = 1;
  std::string output_dir = "runs";
  double session_budget_s = kDefaultSessionBudgetS;
  int seed_watch_target = 25;
  CatalogSpec catalog = CatalogSpec::default_spec();
  RecommenderSelector recommender;
  PredictorSelector predictor;
  std::vector<GroupConfig> groups;
  QuerySet queries = QuerySet::defaults();
  std::set<std::string> hashtag_blocklist = {"fyp", "foryou", "viral", "trending",
                                             "tiktok"};

  void validate() const;
  std::vector<UserProfile> build_roster() const;
  int days_for(const UserProfile& p) const;

  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

inline void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  if (experiment_name.empty()) problems.push_back("experiment_name: empty");
  if (session_budget_s <= 0) problems.push_back("session_budget_s: must be > 0");
  if (seed_watch_target < 1) problems.push_back("seed_watch_target: must be >= 1");
  if (groups.empty()) problems.push_back("groups: none configured");

  try {
    catalog.validate();
  } catch (const Error& e) {
    problems.push_back(std::string("catalog: ") + e.what());
  }

  int total_users = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const GroupConfig& g = groups[gi];
    const std::string where = "groups[" + std::to_string(gi) + "]";
    if (g.days_interaction < 1) problems.push_back(where + ".days_interaction: must be >= 1");
    if (g.group == Group::g3_mixed_polarity) {
      if (g.users_total < 1) problems.push_back(where + ".users: must be >= 1");
      total_users += std::max(0, g.users_total);
      for (Stance s : {Stance::support, Stance::oppose})
        if (!queries.has({TopicId::us_politics, s}))
          problems.push_back(where + ": missing queries for us_politics/" +
                             std::string(to_string(s)));
    } else {
      if (g.topics.empty()) problems.push_back(where + ".topics: empty");
      if (g.users_per_stance < 1)
        problems.push_back(where + ".users_per_stance: must be >= 1");
      for (TopicId t : g.topics) {
        if (t == TopicId::other) {
          problems.push_back(where + ": topic 'other' cannot be an interest");
          continue;
        }
        const int stances_n = t == TopicId::cooking ? 1 : 2;
        total_users += std::max(0, g.users_per_stance) * stances_n;
        if (t == TopicId::cooking) {
          if (!queries.has({TopicId::cooking, Stance::none}))
            problems.push_back(where + ": missing queries for cooking/none");
        } else {
          for (Stance s : {Stance::support, Stance::oppose})
            if (!queries.has({t, s}))
              problems.push_back(where + ": missing queries for " +
                                 to_string(CategoryKey{t, s}));
        }
        if (g.group == Group::g1_neutral_plus_polarising &&
            !queries.has({TopicId::cooking, Stance::none}))
          problems.push_back(where + ": G1 needs queries for cooking/none");
      }
    }
  }
  if (!groups.empty() && total_users == 0) problems.push_back("groups: zero users overall");

  if (recommender.params.exploration_rate < 0 || recommender.params.exploration_rate > 1)
    problems.push_back("recommender.exploration_rate: must be in [0, 1]");
  if (recommender.params.reward < 0)
    problems.push_back("recommender.reward: must be >= 0");
  if (recommender.params.skip_decay < 0 || recommender.params.skip_decay > 1)
    problems.push_back("recommender.skip_decay: must be in [0, 1]");
  if (recommender.feed_batch_size < 1)
    problems.push_back("recommender.feed_batch_size: must be >= 1");
  if (recommender.kind == RecommenderMode::Kind::scripted && !recommender.scenario_explicit) {
    if (!ScenarioConfig::is_preset(recommender.scenario_preset))
      problems.push_back("recommender.scenario: unknown preset '" +
                         recommender.scenario_preset + "'");
    for (const auto& [key, preset] : recommender.preset_overrides)
      if (!ScenarioConfig::is_preset(preset))
        problems.push_back("recommender.overrides: unknown preset '" + preset + "'");
  }
  if (predictor.kind == PredictorSelector::Kind::oracle) {
    if (predictor.topic_error_rate < 0 || predictor.topic_error_rate > 1 ||
        predictor.stance_error_rate < 0 || predictor.stance_error_rate > 1)
      problems.push_back("predictor: error rates must be in [0, 1]");
  } else if (predictor.remote.endpoint.empty()) {
    problems.push_back("predictor.endpoint: empty");
  }

  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(Errc::validation, msg);
  }
}

inline std::vector<UserProfile> ExperimentConfig::build_roster() const {
  std::vector<UserProfile> roster;
  for (const GroupConfig& g : groups) {
    if (g.group == Group::g3_mixed_polarity) {
      for (int k = 0; k < g.users_total; ++k) {
        UserProfile p;
        p.user_id = "G3_us_politics_mixed_" + std::to_string(k);
        p.group = g.group;
        p.topic = TopicId::us_politics;
        p.stance_set = {Stance::support, Stance::oppose};
        p.gender = k % 2 == 0 ? Gender::f : Gender::m;
        roster.push_back(std::move(p));
      }
      continue;
    }
    for (TopicId topic : g.topics) {
      const std::vector<Stance> stances =
          topic == TopicId::cooking ? std::vector<Stance>{Stance::none}
                                    : std::vector<Stance>{Stance::support, Stance::oppose};
      for (Stance stance : stances) {
        for (int k = 0; k < g.users_per_stance; ++k) {
          UserProfile p;
          p.user_id = std::string(to_string(g.group)) + "_" +
                      std::string(to_string(topic)) + "_" +
                      std::string(to_string(stance)) + "_" + std::to_string(k);
          p.group = g.group;
          p.topic = topic;
          if (stance != Stance::none) p.stance_set = {stance};
          p.gender = k % 2 == 0 ? Gender::f : Gender::m;
          roster.push_back(std::move(p));
        }
      }
    }
  }
  return roster;
}

inline int ExperimentConfig::days_for(const UserProfile& p) const {
  for (const GroupConfig& g : groups)
    if (g.group == p.group) return g.days_interaction;
  throw Error(Errc::contract, "no group config for user " + p.user_id);
}

// --- config file ---------------------------------------------------------------

namespace detail {

inline std::map<CategoryKey, int> parse_counts(const nlohmann::json& j) {
  std::map<CategoryKey, int> counts;
  for (const auto& [topic_name, val] : j.items()) {
    TopicId topic = parse_topic(topic_name);
    if (val.is_object()) {
      for (const auto& [stance_name, n] : val.items())
        counts[{topic, parse_stance(stance_name)}] = n.get<int>();
    } else {
      counts[{topic, Stance::none}] = val.get<int>();
    }
  }
  return counts;
}

inline QuerySet parse_queries(const nlohmann::json& j) {
  QuerySet q;
  for (const auto& [topic_name, val] : j.items()) {
    TopicId topic = parse_topic(topic_name);
    if (val.is_object()) {
      for (const auto& [stance_name, list] : val.items())
        q.by_category[{topic, parse_stance(stance_name)}] =
            list.get<std::vector<std::string>>();
    } else {
      q.by_category[{topic, Stance::none}] = val.get<std::vector<std::string>>();
    }
  }
  return q;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, "config " + path.string() + ": " + e.what());
  }

  ExperimentConfig cfg;
  try {
    cfg.experiment_name = j.at("experiment_name").get<std::string>();
    cfg.master_seed = j.value("master_seed", 1ULL);
    cfg.output_dir = j.value("output_dir", std::string("runs"));
    cfg.session_budget_s = j.value("session_budget_s", kDefaultSessionBudgetS);
    cfg.seed_watch_target = j.value("seed_watch_target", 25);

    if (j.contains("catalog")) {
      const auto& cj = j["catalog"];
      if (cj.contains("counts")) cfg.catalog.counts = detail::parse_counts(cj["counts"]);
      cfg.catalog.duration_min_s = cj.value("duration_min_s", cfg.catalog.duration_min_s);
      cfg.catalog.duration_max_s = cj.value("duration_max_s", cfg.catalog.duration_max_s);
      cfg.catalog.long_video_fraction =
          cj.value("long_video_fraction", cfg.catalog.long_video_fraction);
      cfg.catalog.livestream_fraction =
          cj.value("livestream_fraction", cfg.catalog.livestream_fraction);
      cfg.catalog.weight_min = cj.value("weight_min", cfg.catalog.weight_min);
      cfg.catalog.weight_max = cj.value("weight_max", cfg.catalog.weight_max);
    }

    if (j.contains("recommender")) {
      const auto& rj = j["recommender"];
      const std::string mode = rj.value("mode", std::string("scripted"));
      if (mode == "scripted") {
        cfg.recommender.kind = RecommenderMode::Kind::scripted;
      } else if (mode == "adaptive") {
        cfg.recommender.kind = RecommenderMode::Kind::adaptive;
      } else {
        throw Error(Errc::validation, "recommender.mode must be scripted or adaptive");
      }
      cfg.recommender.scenario_preset = rj.value("scenario", std::string("equilibrium"));
      if (rj.contains("scenario_file")) {
        std::filesystem::path sp = rj["scenario_file"].get<std::string>();
        if (sp.is_relative()) sp = path.parent_path() / sp;
        cfg.recommender.scenario_explicit = ScenarioConfig::load(sp);
      }
      for (const auto& ov : rj.value("overrides", nlohmann::json::array()))
        cfg.recommender.preset_overrides[{parse_group(ov.at("group").get<std::string>()),
                                          parse_topic(ov.at("topic").get<std::string>())}] =
            ov.at("scenario").get<std::string>();
      cfg.recommender.feed_batch_size = rj.value("feed_batch_size", 8);
      cfg.recommender.params.exploration_rate =
          rj.value("exploration_rate", cfg.recommender.params.exploration_rate);
      cfg.recommender.params.reward = rj.value("reward", cfg.recommender.params.reward);
      cfg.recommender.params.skip_decay =
          rj.value("skip_decay", cfg.recommender.params.skip_decay);
    }

    if (j.contains("predictor")) {
      const auto& pj = j["predictor"];
      const std::string kind = pj.value("kind", std::string("oracle"));
      if (kind == "oracle") {
        cfg.predictor.kind = PredictorSelector::Kind::oracle;
        cfg.predictor.topic_error_rate = pj.value("topic_error_rate", 0.0);
        cfg.predictor.stance_error_rate = pj.value("stance_error_rate", 0.0);
      } else if (kind == "remote") {
        cfg.predictor.kind = PredictorSelector::Kind::remote;
        cfg.predictor.remote.endpoint = pj.value("endpoint", std::string());
        cfg.predictor.remote.timeout_s = pj.value("timeout_s", 30.0);
        cfg.predictor.remote.retries = pj.value("retries", 2);
        cfg.predictor.remote.concurrency_cap = pj.value("concurrency", 4);
        if (pj.contains("cache_file"))
          cfg.predictor.remote.cache_file = pj["cache_file"].get<std::string>();
      } else {
        throw Error(Errc::validation, "predictor.kind must be oracle or remote");
      }
    }

    for (const auto& gj : j.at("groups")) {
      GroupConfig g;
      g.group = parse_group(gj.at("group").get<std::string>());
      if (g.group == Group::g3_mixed_polarity) {
        g.users_total = gj.value("users", 4);
        g.days_interaction = gj.value("days_interaction", 9);
      } else {
        for (const auto& t : gj.at("topics"))
          g.topics.push_back(parse_topic(t.get<std::string>()));
        g.users_per_stance = gj.value("users_per_stance", 4);
        g.days_interaction = gj.value("days_interaction", 15);
      }
      cfg.groups.push_back(std::move(g));
    }

    if (j.contains("queries")) cfg.queries = detail::parse_queries(j["queries"]);
    if (j.contains("hashtag_blocklist")) {
      cfg.hashtag_blocklist.clear();
      for (const auto& t : j["hashtag_blocklist"])
        cfg.hashtag_blocklist.insert(t.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, "config " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["experiment_name"] = experiment_name;
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir;
  j["session_budget_s"] = session_budget_s;
  j["seed_watch_target"] = seed_watch_target;

  nlohmann::ordered_json counts;
  for (const auto& [key, n] : catalog.counts) {
    if (is_polarising(key.topic)) {
      counts[std::string(to_string(key.topic))][std::string(to_string(key.stance))] = n;
    } else {
      counts[std::string(to_string(key.topic))] = n;
    }
  }
  j["catalog"] = {{"counts", counts},
                  {"duration_min_s", catalog.duration_min_s},
                  {"duration_max_s", catalog.duration_max_s},
                  {"long_video_fraction", catalog.long_video_fraction},
                  {"livestream_fraction", catalog.livestream_fraction},
                  {"weight_min", catalog.weight_min},
                  {"weight_max", catalog.weight_max}};

  nlohmann::ordered_json rj;
  rj["mode"] =
      recommender.kind == RecommenderMode::Kind::scripted ? "scripted" : "adaptive";
  rj["scenario"] = recommender.scenario_preset;
  if (!recommender.preset_overrides.empty()) {
    rj["overrides"] = nlohmann::ordered_json::array();
    for (const auto& [key, preset] : recommender.preset_overrides)
      rj["overrides"].push_back({{"group", std::string(to_string(key.first))},
                                 {"topic", std::string(to_string(key.second))},
                                 {"scenario", preset}});
  }
  rj["feed_batch_size"] = recommender.feed_batch_size;
  rj["exploration_rate"] = recommender.params.exploration_rate;
  rj["reward"] = recommender.params.reward;
  rj["skip_decay"] = recommender.params.skip_decay;
  j["recommender"] = rj;

  nlohmann::ordered_json pj;
  if (predictor.kind == PredictorSelector::Kind::oracle) {
    pj["kind"] = "oracle";
    pj["topic_error_rate"] = predictor.topic_error_rate;
    pj["stance_error_rate"] = predictor.stance_error_rate;
  } else {
    pj["kind"] = "remote";
    pj["endpoint"] = predictor.remote.endpoint;
    pj["timeout_s"] = predictor.remote.timeout_s;
    pj["retries"] = predictor.remote.retries;
    pj["concurrency"] = predictor.remote.concurrency_cap;
  }
  j["predictor"] = pj;

  j["groups"] = nlohmann::ordered_json::array();
  for (const GroupConfig& g : groups) {
    nlohmann::ordered_json gj;
    gj["group"] = std::string(to_string(g.group));
    if (g.group == Group::g3_mixed_polarity) {
      gj["users"] = g.users_total;
    } else {
      gj["topics"] = nlohmann::ordered_json::array();
      for (TopicId t : g.topics) gj["topics"].push_back(std::string(to_string(t)));
      gj["users_per_stance"] = g.users_per_stance;
    }
    gj["days_interaction"] = g.days_interaction;
    j["groups"].push_back(gj);
  }

  j["hashtag_blocklist"] = nlohmann::ordered_json::array();
  for (const auto& t : hashtag_blocklist) j["hashtag_blocklist"].push_back(t);
  return j;
}

// --- runner --------------------------------------------------------------------

struct ExperimentResult {
  std::filesystem::path dir;
  int n_users = 0;
};

inline std::filesystem::path experiment_dir(const ExperimentConfig& cfg,
                                            const std::optional<std::string>& out_override) {
  return std::filesystem::path(out_override.value_or(cfg.output_dir)) /
         cfg.experiment_name;
}

inline void write_manifest(const ExperimentConfig& cfg,
                           const std::vector<UserProfile>& roster,
                           const std::filesystem::path& dir) {
  nlohmann::ordered_json m;
  m["config"] = cfg.to_json();
  m["users"] = nlohmann::ordered_json::array();
  for (const UserProfile& p : roster) {
    nlohmann::ordered_json uj;
    uj["user_id"] = p.user_id;
    uj["group"] = std::string(to_string(p.group));
    uj["topic"] = std::string(to_string(p.topic));
    uj["stances"] = nlohmann::ordered_json::array();
    for (Stance s : p.stance_set) uj["stances"].push_back(std::string(to_string(s)));
    uj["age_bracket"] = p.age_bracket;
    uj["gender"] = std::string(to_string(p.gender));
    uj["days_interaction"] = cfg.days_for(p);
    m["users"].push_back(uj);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(Errc::io, "cannot write manifest in " + dir.string());
  out << m.dump(2) << "\n";
}

// Runs every user's protocol and persists catalog, manifest and one log per
// user under <output_dir>/<experiment_name>/. Users run in a worker pool;
// identical config+seed produces byte-identical outputs regardless of the
// pool width.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1,
                                       const std::optional<std::string>& out_override = {}) {
  cfg.validate();
  const auto roster = cfg.build_roster();
  const auto dir = experiment_dir(cfg, out_override);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  const Catalog catalog = generate_catalog(cfg.catalog, cfg.master_seed);
  catalog.save(dir / "catalog.jsonl");
  catalog.save_hashtag_popularity(dir / "catalog_hashtags.tsv");
  write_manifest(cfg, roster, dir);

  std::shared_ptr<RemoteAnnotator> remote;
  if (cfg.predictor.kind == PredictorSelector::Kind::remote)
    remote = std::make_shared<RemoteAnnotator>(cfg.predictor.remote);

  // Non-owning view so a shared remote annotator can serve every worker.
  struct AnnotatorRef : Annotator {
    Annotator* target;
    explicit AnnotatorRef(Annotator* t) : target(t) {}
    Annotation annotate(const VideoRecord& v, const UserProfile& p) override {
      return target->annotate(v, p);
    }
  };

  auto run_user = [&](const UserProfile& profile) {
    std::unique_ptr<Annotator> annotator;
    if (remote) {
      annotator = std::make_unique<AnnotatorRef>(remote.get());
    } else {
      annotator = std::make_unique<OracleAnnotator>(
          cfg.predictor.topic_error_rate, cfg.predictor.stance_error_rate,
          RngStream::keyed(cfg.master_seed, profile.user_id, "annotate"));
    }
    const int days = cfg.days_for(profile);
    RecommenderMode mode = cfg.recommender.resolve(
        profile.group, profile.topic,
        days * std::max(1, static_cast<int>(cfg.session_budget_s / kDefaultBinWidthS)));
    AgentRunner runner(profile, catalog, std::move(mode), *annotator, cfg.queries,
                       cfg.master_seed, cfg.session_budget_s);
    auto events = runner.run_protocol(days, cfg.seed_watch_target);
    write_log(dir / (profile.user_id + ".log"), events);
  };

  const int pool = std::max(1, std::min<int>(workers, static_cast<int>(roster.size())));
  if (pool == 1) {
    for (const auto& profile : roster) run_user(profile);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int t = 0; t < pool; ++t) {
      threads.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= roster.size()) return;
          try {
            run_user(roster[i]);
          } catch (...) {
            std::scoped_lock lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  return {dir, static_cast<int>(roster.size())};
}

}  // namespace driftlab
