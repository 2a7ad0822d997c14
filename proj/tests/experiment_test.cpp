#include "driftlab/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftlab/analyze.hpp"

namespace driftlab {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CatalogSpec small_catalog() {
  CatalogSpec spec;
  for (TopicId t : kPolarisingTopics) {
    spec.counts[{t, Stance::support}] = 150;
    spec.counts[{t, Stance::oppose}] = 150;
  }
  spec.counts[{TopicId::cooking, Stance::none}] = 300;
  spec.counts[{TopicId::other, Stance::none}] = 600;
  return spec;
}

ExperimentConfig small_config(const std::string& name, std::uint64_t seed = 77) {
  ExperimentConfig cfg;
  cfg.experiment_name = name;
  cfg.master_seed = seed;
  cfg.catalog = small_catalog();
  cfg.recommender.scenario_preset = "equilibrium";
  GroupConfig g;
  g.group = Group::g2_polarising_only;
  g.topics = {TopicId::flatearth};
  g.users_per_stance = 1;
  g.days_interaction = 2;
  cfg.groups = {g};
  return cfg;
}

TEST(ExperimentConfig, RosterShapes) {
  ExperimentConfig cfg = small_config("roster");
  GroupConfig g1;
  g1.group = Group::g1_neutral_plus_polarising;
  g1.topics = {TopicId::flatearth, TopicId::vaccines, TopicId::climate_change,
               TopicId::us_politics};
  g1.users_per_stance = 4;
  g1.days_interaction = 15;
  GroupConfig g2 = g1;
  g2.group = Group::g2_polarising_only;
  GroupConfig g3;
  g3.group = Group::g3_mixed_polarity;
  g3.users_total = 4;
  g3.days_interaction = 9;
  cfg.groups = {g1, g2, g3};

  const auto roster = cfg.build_roster();
  EXPECT_EQ(roster.size(), 68u);

  int g2_flatearth = 0, g3_users = 0;
  for (const auto& p : roster) {
    validate_profile(p);
    if (p.group == Group::g2_polarising_only && p.topic == TopicId::flatearth)
      ++g2_flatearth;
    if (p.group == Group::g3_mixed_polarity) {
      ++g3_users;
      EXPECT_EQ(cfg.days_for(p), 9);
    }
  }
  EXPECT_EQ(g2_flatearth, 8);  // 4 support + 4 oppose
  EXPECT_EQ(g3_users, 4);

  // 50:50 gender split within each cell
  int f = 0, m = 0;
  for (const auto& p : roster) (p.gender == Gender::f ? f : m)++;
  EXPECT_EQ(f, m);
}

TEST(ExperimentConfig, ValidationListsOffendingFields) {
  ExperimentConfig cfg = small_config("bad");
  cfg.groups.clear();
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::validation);
    EXPECT_NE(std::string(e.what()).find("groups"), std::string::npos);
  }

  ExperimentConfig cfg2 = small_config("bad2");
  cfg2.groups[0].users_per_stance = 0;
  cfg2.groups[0].days_interaction = 0;
  try {
    cfg2.validate();
    FAIL();
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("users_per_stance"), std::string::npos);
    EXPECT_NE(what.find("days_interaction"), std::string::npos);
  }

  ExperimentConfig cfg3 = small_config("bad3");
  cfg3.queries.by_category.erase({TopicId::flatearth, Stance::oppose});
  EXPECT_THROW(cfg3.validate(), Error);
}

TEST(ExperimentConfig, JsonRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "driftlab_config_test";
  fs::create_directories(dir);
  ExperimentConfig cfg = small_config("roundtrip");
  {
    std::ofstream out(dir / "config.json");
    out << cfg.to_json().dump(2) << "\n";
  }
  const ExperimentConfig loaded = ExperimentConfig::load(dir / "config.json");
  EXPECT_EQ(loaded.experiment_name, "roundtrip");
  EXPECT_EQ(loaded.master_seed, 77u);
  EXPECT_EQ(loaded.groups.size(), 1u);
  EXPECT_EQ(loaded.groups[0].topics, std::vector<TopicId>{TopicId::flatearth});
  EXPECT_EQ(loaded.to_json().dump(2), cfg.to_json().dump(2));
  fs::remove_all(dir);
}

TEST(RunExperiment, ProducesLogsCatalogAndManifest) {
  const fs::path out = fs::temp_directory_path() / "driftlab_exp_test";
  fs::remove_all(out);
  ExperimentConfig cfg = small_config("smoke");
  const auto result = run_experiment(cfg, 2, out.string());
  EXPECT_EQ(result.n_users, 2);
  EXPECT_TRUE(fs::exists(result.dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(result.dir / "catalog.jsonl"));
  EXPECT_TRUE(fs::exists(result.dir / "catalog_hashtags.tsv"));
  EXPECT_TRUE(fs::exists(result.dir / "G2_flatearth_support_0.log"));
  EXPECT_TRUE(fs::exists(result.dir / "G2_flatearth_oppose_0.log"));

  const auto events = read_log(result.dir / "G2_flatearth_support_0.log");
  int seed_watches = 0;
  for (const auto& e : events)
    if (e.feed_source == FeedSource::search) ++seed_watches;
  EXPECT_EQ(seed_watches, 25);
  fs::remove_all(out);
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkerCounts) {
  const fs::path out1 = fs::temp_directory_path() / "driftlab_det_1";
  const fs::path out2 = fs::temp_directory_path() / "driftlab_det_2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  ExperimentConfig cfg = small_config("det");
  run_experiment(cfg, 1, out1.string());
  run_experiment(cfg, 2, out2.string());

  for (const char* file :
       {"manifest.json", "catalog.jsonl", "catalog_hashtags.tsv",
        "G2_flatearth_support_0.log", "G2_flatearth_oppose_0.log"}) {
    EXPECT_EQ(slurp(out1 / "det" / file), slurp(out2 / "det" / file)) << file;
  }
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST(RunExperiment, AddingUsersDoesNotPerturbExistingTraces) {
  const fs::path out1 = fs::temp_directory_path() / "driftlab_grow_1";
  const fs::path out2 = fs::temp_directory_path() / "driftlab_grow_2";
  fs::remove_all(out1);
  fs::remove_all(out2);

  ExperimentConfig small = small_config("grow");
  run_experiment(small, 1, out1.string());

  ExperimentConfig bigger = small_config("grow");
  bigger.groups[0].users_per_stance = 2;  // adds _1 users alongside _0
  run_experiment(bigger, 1, out2.string());

  EXPECT_EQ(slurp(out1 / "grow" / "G2_flatearth_support_0.log"),
            slurp(out2 / "grow" / "G2_flatearth_support_0.log"));
  EXPECT_EQ(slurp(out1 / "grow" / "G2_flatearth_oppose_0.log"),
            slurp(out2 / "grow" / "G2_flatearth_oppose_0.log"));
  EXPECT_TRUE(fs::exists(out2 / "grow" / "G2_flatearth_support_1.log"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST(AnalyzeExperiment, EndToEndCohortReport) {
  const fs::path out = fs::temp_directory_path() / "driftlab_analyze_test";
  fs::remove_all(out);
  ExperimentConfig cfg = small_config("e2e");
  const auto result = run_experiment(cfg, 2, out.string());

  const auto report =
      analyze_experiment(result.dir, CohortSpec::parse("group=G2,topic=flatearth"));
  EXPECT_EQ(report.n_users, 2);
  EXPECT_EQ(report.bins.size(), 4u);  // 2 days x 2 bins
  EXPECT_GT(report.totals.total(), 0);
  EXPECT_TRUE(fs::exists(result.dir / "report" / "summary.json"));
  EXPECT_TRUE(
      fs::exists(result.dir / "report" / "g2_flatearth_preference_aligned.csv"));
  EXPECT_TRUE(
      fs::exists(result.dir / "report" / "g2_flatearth_polarisation_stance.svg"));
  ASSERT_TRUE(report.stance_test.has_value());
  EXPECT_EQ(report.stance_test->pairing, StancePairing::seeded_cohorts);
  ASSERT_TRUE(report.hashtags.has_value());
  EXPECT_GT(report.hashtags->popularity_sum, 0);

  // the alternative pairing is selectable
  AnalyzeOptions options;
  options.stance_pairing = StancePairing::stance_counts;
  const auto report2 =
      analyze_experiment(result.dir, CohortSpec::parse("group=G2,topic=flatearth"),
                         options);
  ASSERT_TRUE(report2.stance_test.has_value());
  EXPECT_EQ(report2.stance_test->pairing, StancePairing::stance_counts);

  // equilibrium preset: near-constant shares, so the fitted slope is tiny
  for (const auto& s : report.series) {
    ASSERT_TRUE(s.fit.has_value());
    if (s.metric == DriftMetric::preference_aligned) {
      EXPECT_LT(std::abs(s.fit->slope), 0.02);
    }
  }

  try {
    analyze_experiment(result.dir, CohortSpec::parse("topic=vaccines"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::cohort_empty);
  }
  fs::remove_all(out);
}

TEST(CohortSpecParsing, TagsAndErrors) {
  const CohortSpec all = CohortSpec::parse("all");
  EXPECT_EQ(all.tag(), "all");
  const CohortSpec spec = CohortSpec::parse("group=G2,topic=us_politics,stance=support");
  EXPECT_EQ(spec.tag(), "g2_us_politics_support");
  EXPECT_THROW(CohortSpec::parse("bogus"), Error);
  EXPECT_THROW(CohortSpec::parse("color=red"), Error);
}

}  // namespace
}  // namespace driftlab
