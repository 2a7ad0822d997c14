// Acceptance suite. Each test covers one numbered criterion and prints a
// single PASS/FAIL line so the whole gate is readable from the ctest output.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "driftlab/agent.hpp"
#include "driftlab/analytics.hpp"
#include "driftlab/analyze.hpp"
#include "driftlab/eval.hpp"
#include "driftlab/experiment.hpp"
#include "driftlab/replay.hpp"
#include "driftlab/stats.hpp"

namespace driftlab {
namespace {

namespace fs = std::filesystem;
const fs::path kSource = DRIFTLAB_SOURCE_DIR;

struct CriterionBanner {
  const char* id;
  const char* name;
  ~CriterionBanner() {
    std::printf("[ACCEPTANCE] %s %s: %s\n", id, name,
                ::testing::Test::HasFailure() ? "FAIL" : "PASS");
    std::fflush(stdout);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// --- shared scripted-cohort harness -------------------------------------------

const Catalog& shared_catalog() {
  static const Catalog cat = generate_catalog(CatalogSpec::default_spec(), 404);
  return cat;
}

// Mixture schedule whose polarisation-topic normalized difference moves
// linearly from d0 to d1 while interest+neutral stays at `personalised`.
ScenarioConfig linear_normdiff_scenario(int bins, double personalised, double d0,
                                        double d1) {
  ScenarioConfig s;
  s.name = "linear-normdiff";
  s.feed_batch_size = 8;
  for (int b = 0; b < bins; ++b) {
    const double d = d0 + (d1 - d0) * b / (bins - 1.0);
    MixtureTarget t;
    t.interest_share = personalised * (1.0 + d) / 2.0;
    t.neutral_share = personalised * (1.0 - d) / 2.0;
    t.other_share = 1.0 - personalised;
    t.stance_split = 0.5;
    s.bins.push_back(t);
  }
  s.validate();
  return s;
}

std::vector<UserProfile> eight_user_cohort() {
  std::vector<UserProfile> users;
  for (Stance stance : {Stance::support, Stance::oppose}) {
    for (int k = 0; k < 4; ++k) {
      UserProfile p;
      p.user_id = "c_" + std::string(to_string(stance)) + "_" + std::to_string(k);
      p.group = Group::g2_polarising_only;
      p.topic = TopicId::us_politics;
      p.stance_set = {stance};
      users.push_back(p);
    }
  }
  return users;
}

// Runs the full per-user protocol for the 8-user cohort and returns the
// cohort-aggregated per-bin counts.
std::vector<BinCounts> run_scripted_cohort(const ScenarioConfig& scenario, int days,
                                           std::uint64_t master_seed, double topic_err,
                                           double stance_err) {
  RecommenderMode mode;
  mode.kind = RecommenderMode::Kind::scripted;
  mode.scenario = scenario;
  std::vector<std::vector<BinCounts>> per_user;
  for (const UserProfile& profile : eight_user_cohort()) {
    OracleAnnotator annotator(topic_err, stance_err,
                              RngStream::keyed(master_seed, profile.user_id, "annotate"));
    AgentRunner runner(profile, shared_catalog(), mode, annotator, QuerySet::defaults(),
                       master_seed);
    const auto events = runner.run_protocol(days, 25);
    per_user.push_back(bin_events(events));
  }
  return aggregate_bins(per_user);
}

double topic_drift_slope(const std::vector<BinCounts>& bins) {
  const DriftSeries s = build_series(bins, DriftMetric::polarisation_topic, 8);
  EXPECT_TRUE(s.fit.has_value());
  return s.fit ? s.fit->slope : 0.0;
}

// --- independent oracles (test-side only) --------------------------------------

std::pair<double, double> normal_equation_fit(
    const std::vector<std::pair<int, double>>& pts) {
  long double n = pts.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += static_cast<long double>(x) * x;
    sxy += static_cast<long double>(x) * y;
  }
  const long double denom = n * sxx - sx * sx;
  const long double slope = (n * sxy - sx * sy) / denom;
  return {static_cast<double>(slope), static_cast<double>((sy - slope * sx) / n)};
}

double brute_force_mw_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const int n = static_cast<int>(pooled.size());
  const int n1 = static_cast<int>(a.size());
  auto u_of = [](const std::vector<double>& xs, const std::vector<double>& ys) {
    double u = 0;
    for (double x : xs)
      for (double y : ys) u += y < x ? 1.0 : (y == x ? 0.5 : 0.0);
    return u;
  };
  const double mu = a.size() * b.size() / 2.0;
  const double dev = std::abs(u_of(a, b) - mu);

  long long total = 0, tail = 0;
  std::vector<int> idx(n1);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<double> xs, ys;
    std::vector<bool> in_a(n, false);
    for (int i : idx) in_a[i] = true;
    for (int i = 0; i < n; ++i) (in_a[i] ? xs : ys).push_back(pooled[i]);
    ++total;
    if (std::abs(u_of(xs, ys) - mu) >= dev - 1e-12) ++tail;
    int i = n1 - 1;
    while (i >= 0 && idx[i] == n - n1 + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < n1; ++j) idx[j] = idx[j - 1] + 1;
  }
  return static_cast<double>(tail) / static_cast<double>(total);
}

double log_binom_pmf(int n, int k, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

// Central acceptance region [k_lo, k_hi] with at most 2.5% mass outside on
// each side; coverage is at least 95%.
std::pair<int, int> binomial_central_region(int n, double p) {
  std::vector<double> pmf(n + 1);
  for (int k = 0; k <= n; ++k) pmf[k] = std::exp(log_binom_pmf(n, k, p));
  int k_lo = 0;
  double below = 0.0;
  while (k_lo <= n && below + pmf[k_lo] <= 0.025) below += pmf[k_lo++];
  int k_hi = n;
  double above = 0.0;
  while (k_hi >= 0 && above + pmf[k_hi] <= 0.025) above += pmf[k_hi--];
  return {k_lo, k_hi};
}

// --- criteria -------------------------------------------------------------------

TEST(Acceptance, C1MetricEndpointExactness) {
  CriterionBanner banner{"C1", "metric-endpoint-exactness"};
  for (long long k = 1; k <= 1000; ++k) {
    ASSERT_EQ(*polarisation_topic({0, k, 0, 0, k, 0}), 1.0);
    ASSERT_EQ(*polarisation_topic({0, 0, k, 0, 0, 0}), -1.0);
    ASSERT_EQ(*polarisation_stance({0, k, 0, 0, k, 0}), 1.0);
    ASSERT_EQ(*polarisation_stance({0, k, 0, 0, 0, k}), -1.0);
    ASSERT_EQ(*preference_aligned({0, 0, 0, k, 0, 0}), 0.0);
    ASSERT_EQ(*preference_aligned({0, k, 0, 0, k, 0}), 1.0);
    ASSERT_EQ(*preference_aligned({0, 0, k, 0, 0, 0}), 1.0);
  }
}

TEST(Acceptance, C2BinningConformance) {
  CriterionBanner banner{"C2", "binning-conformance"};
  const double start = 1 * kDaySeconds + kSessionStartOffsetS;
  auto at_minute = [&](double m) {
    InteractionEvent e;
    e.virtual_time_s = start + m * 60.0;
    e.session_day = 1;
    e.user_id = "u";
    e.video_id = "v";
    e.feed_source = FeedSource::foryou;
    e.annotation = {TopicClass::interest, Stance::support};
    e.action = Action::skip;
    e.watch_duration_s = 1.5;
    return e;
  };
  // events at in-session minutes 0 (session opens), 10, 40, 70
  const std::vector<InteractionEvent> events = {at_minute(0), at_minute(10), at_minute(40),
                                                at_minute(70)};
  const auto bins = bin_events(events);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_EQ(bins[0].n_interest, 2);  // minutes 0 and 10 -> bin 0
  EXPECT_EQ(bins[1].n_interest, 2);  // minute 40 -> bin 1, minute 70 overflows to bin 1
}

TEST(Acceptance, C3StatisticsOracles) {
  CriterionBanner banner{"C3", "statistics-oracles"};

  RngStream rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 10 + static_cast<int>(rng.uniform_below(90));
    std::vector<std::pair<int, double>> pts;
    for (int i = 0; i < n; ++i)
      pts.emplace_back(i, rng.uniform(-1.0, 1.0) + 0.01 * i * rng.uniform01());
    const RegressionFit fit = fit_drift(pts);
    const auto [oslope, ointercept] = normal_equation_fit(pts);
    ASSERT_NEAR(fit.slope, oslope, 1e-9);
    ASSERT_NEAR(fit.intercept, ointercept, 1e-9);
  }

  // exact Mann-Whitney vs subset enumeration for every n1,n2 <= 8 over a
  // 4-letter alphabet
  RngStream alpha(777);
  for (int n1 = 1; n1 <= 8; ++n1) {
    for (int n2 = 1; n2 <= 8; ++n2) {
      for (int rep = 0; rep < 6; ++rep) {
        std::vector<double> a(n1), b(n2);
        for (auto& x : a) x = 1.0 + static_cast<double>(alpha.uniform_below(4));
        for (auto& x : b) x = 1.0 + static_cast<double>(alpha.uniform_below(4));
        if (rep == 5) {  // maximal ties
          std::fill(a.begin(), a.end(), 2.0);
          std::fill(b.begin(), b.end(), 2.0);
        }
        const UTestResult r = mann_whitney_u(a, b);
        ASSERT_EQ(r.method, MwMethod::exact);
        ASSERT_NEAR(r.p_value, brute_force_mw_p(a, b), 1e-9)
            << "n1=" << n1 << " n2=" << n2 << " rep=" << rep;
      }
    }
  }
}

TEST(Acceptance, C4ScenarioRecovery) {
  CriterionBanner banner{"C4", "scenario-recovery"};

  // linear normalized-difference drift from +0.6 to -0.8 over 30 bins
  const int days = 15, bins = 30;
  const auto scenario = linear_normdiff_scenario(bins, 0.8, 0.6, -0.8);
  const double injected_slope = (-0.8 - 0.6) / (bins - 1.0);
  const auto agg = run_scripted_cohort(scenario, days, 404, 0.0, 0.0);
  ASSERT_EQ(agg.size(), static_cast<std::size_t>(bins));
  const double slope = topic_drift_slope(agg);
  const double tol = std::max(0.15 * std::abs(injected_slope), 0.005);
  EXPECT_NEAR(slope, injected_slope, tol)
      << "recovered " << slope << " vs injected " << injected_slope;

  // equilibrium preset: flat drift, and no first-half/second-half shift in
  // at least 90 of 100 seeded runs
  const auto equilibrium = ScenarioConfig::preset("equilibrium", bins);
  int slope_ok = 0, p_ok = 0;
  for (int run = 0; run < 100; ++run) {
    const auto eq = run_scripted_cohort(equilibrium, days, 5000 + run, 0.0, 0.0);
    const DriftSeries s = build_series(eq, DriftMetric::polarisation_topic, 8);
    ASSERT_TRUE(s.fit.has_value());
    if (std::abs(s.fit->slope) < 0.005) ++slope_ok;
    const auto values = defined_values(s);
    ASSERT_EQ(values.size(), static_cast<std::size_t>(bins));
    std::vector<double> first(values.begin(), values.begin() + bins / 2);
    std::vector<double> second(values.begin() + bins / 2, values.end());
    if (mann_whitney_u(first, second).p_value > 0.05) ++p_ok;
  }
  EXPECT_GE(slope_ok, 90) << "equilibrium |slope| < 0.005 in " << slope_ok << "/100 runs";
  EXPECT_GE(p_ok, 90) << "equilibrium MW p > 0.05 in " << p_ok << "/100 runs";
}

TEST(Acceptance, C5ProtocolCounts) {
  CriterionBanner banner{"C5", "protocol-counts"};
  const fs::path out = temp_dir("driftlab_acc_c5");

  ExperimentConfig cfg = ExperimentConfig::load(kSource / "configs" / "audit_full.json");
  const auto result = run_experiment(cfg, 2, out.string());
  EXPECT_EQ(result.n_users, 68);

  const ExperimentManifest manifest = ExperimentManifest::load(result.dir);
  ASSERT_EQ(manifest.users.size(), 68u);

  int log_files = 0;
  for (const auto& entry : fs::directory_iterator(result.dir))
    if (entry.path().extension() == ".log") ++log_files;
  EXPECT_EQ(log_files, 68);

  for (const UserProfile& p : manifest.users) {
    const auto events = read_log(result.dir / (p.user_id + ".log"));
    int seed_watches = 0, seed_support = 0, seed_oppose = 0;
    for (const auto& e : events) {
      if (e.feed_source != FeedSource::search) continue;
      ASSERT_EQ(e.action, Action::watch_like_bookmark);
      ++seed_watches;
      if (e.annotation.stance == Stance::support) ++seed_support;
      if (e.annotation.stance == Stance::oppose) ++seed_oppose;
    }
    const auto bins = bin_events(events);
    switch (p.group) {
      case Group::g1_neutral_plus_polarising:
        EXPECT_EQ(seed_watches, 75) << p.user_id;  // 50 + 25 re-seed after day 3
        EXPECT_EQ(bins.size(), 30u) << p.user_id;
        break;
      case Group::g2_polarising_only:
        EXPECT_EQ(seed_watches, 25) << p.user_id;
        EXPECT_EQ(bins.size(), 30u) << p.user_id;
        break;
      case Group::g3_mixed_polarity:
        EXPECT_EQ(seed_watches, 50) << p.user_id;
        EXPECT_EQ(seed_support, 25) << p.user_id;
        EXPECT_EQ(seed_oppose, 25) << p.user_id;
        EXPECT_EQ(bins.size(), 18u) << p.user_id;
        break;
    }
  }
  fs::remove_all(out);
}

TEST(Acceptance, C6ReplayTotals) {
  CriterionBanner banner{"C6", "replay-fixture-totals"};
  const fs::path out = temp_dir("driftlab_acc_c6");
  const ReplayFixture fixture =
      ReplayFixture::load(kSource / "fixtures" / "replay_flatearth_totals.json");
  const CohortReport report = run_replay(fixture, out);
  EXPECT_EQ(report.totals.n_other, 6822);
  EXPECT_EQ(report.totals.n_interest, 472);
  EXPECT_EQ(report.totals.n_neutral, 2675);
  const auto overall = preference_aligned(report.totals);
  ASSERT_TRUE(overall.has_value());
  EXPECT_NEAR(*overall, (472.0 + 2675.0) / 9969.0, 1e-9);

  // the emitted summary carries the same totals
  const std::string summary = slurp(out / "report" / "summary.json");
  EXPECT_NE(summary.find("\"other\": 6822"), std::string::npos);
  EXPECT_NE(summary.find("\"interest\": 472"), std::string::npos);
  EXPECT_NE(summary.find("\"neutral\": 2675"), std::string::npos);
  fs::remove_all(out);
}

TEST(Acceptance, C7PredictorCalibration) {
  CriterionBanner banner{"C7", "predictor-calibration"};
  const Catalog fixture = generate_catalog(CatalogSpec::eval_fixture_spec(), 350);

  // zero noise: perfect topic and stance accuracy on all four topics
  const auto perfect = evaluate_predictor(fixture, [](TopicId topic) {
    return std::make_unique<OracleAnnotator>(0.0, 0.0,
                                             RngStream::keyed(1, to_string(topic), "eval"));
  });
  for (const auto& row : perfect) {
    ASSERT_DOUBLE_EQ(row.topic_accuracy, 1.0);
    ASSERT_DOUBLE_EQ(row.stance_accuracy, 1.0);
  }

  // topic error 0.05: measured accuracy inside the exact central 95%
  // binomial region around 95% in at least 93 of 100 seeded trials
  const auto [k_lo, k_hi] = binomial_central_region(350, 0.95);
  int inside = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rows = evaluate_predictor(fixture, [&](TopicId topic) {
      return std::make_unique<OracleAnnotator>(
          0.05, 0.0,
          RngStream::keyed(9000 + trial, to_string(topic), "eval"));
    });
    for (const auto& row : rows) {
      if (row.topic != TopicId::vaccines) continue;
      const int correct = static_cast<int>(std::llround(row.topic_accuracy * 350.0));
      if (correct >= k_lo && correct <= k_hi) ++inside;
    }
  }
  EXPECT_GE(inside, 93) << "inside [" << k_lo << ", " << k_hi << "] in " << inside
                        << "/100 trials";
}

TEST(Acceptance, C8NoiseRobustness) {
  CriterionBanner banner{"C8", "noise-robustness"};
  const int days = 15, bins = 30;
  const auto scenario = linear_normdiff_scenario(bins, 0.8, 0.6, -0.8);
  const double injected_slope = (-0.8 - 0.6) / (bins - 1.0);
  // worst measured predictor error rates: topic 5%, stance 10%
  const auto agg = run_scripted_cohort(scenario, days, 808, 0.05, 0.10);
  const double slope = topic_drift_slope(agg);
  const double tol = std::max(0.25 * std::abs(injected_slope), 0.005);
  EXPECT_NEAR(slope, injected_slope, tol)
      << "recovered " << slope << " vs injected " << injected_slope;
}

TEST(Acceptance, C9Determinism) {
  CriterionBanner banner{"C9", "determinism"};
  const fs::path out = temp_dir("driftlab_acc_c9");

  ExperimentConfig cfg;
  cfg.experiment_name = "det";
  cfg.master_seed = 404;
  cfg.catalog = CatalogSpec::default_spec();
  cfg.recommender.kind = RecommenderMode::Kind::scripted;
  cfg.recommender.scenario_explicit = linear_normdiff_scenario(30, 0.8, 0.6, -0.8);
  GroupConfig g;
  g.group = Group::g2_polarising_only;
  g.topics = {TopicId::us_politics};
  g.users_per_stance = 4;
  g.days_interaction = 15;
  cfg.groups = {g};

  const auto r1 = run_experiment(cfg, 1, (out / "a").string());
  const auto r2 = run_experiment(cfg, 2, (out / "b").string());
  analyze_experiment(r1.dir, CohortSpec::parse("topic=us_politics"));
  analyze_experiment(r2.dir, CohortSpec::parse("topic=us_politics"));

  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(r1.dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), r1.dir);
    ASSERT_TRUE(fs::exists(r2.dir / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(r2.dir / rel)) << rel;
    ++compared;
  }
  // 8 logs + catalog + hashtags + manifest + report (3 csv + 3 svg + summary)
  EXPECT_GE(compared, 18);

  // replay is deterministic end to end as well
  const ReplayFixture fixture =
      ReplayFixture::load(kSource / "fixtures" / "replay_linear_decay.json");
  run_replay(fixture, out / "r1");
  run_replay(fixture, out / "r2");
  for (const auto& entry : fs::recursive_directory_iterator(out / "r1")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), out / "r1");
    EXPECT_EQ(slurp(entry.path()), slurp(out / "r2" / rel)) << rel;
  }
  fs::remove_all(out);
}

}  // namespace
}  // namespace driftlab
