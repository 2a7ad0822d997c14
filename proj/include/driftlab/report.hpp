#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftlab/analytics.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/stats.hpp"

namespace driftlab {

// Which two samples the stance significance test compares.
enum class StancePairing {
  automatic,       // seeded_cohorts when both seed stances are present, else
                   // stance_counts
  seeded_cohorts,  // per-bin interest counts: support-seeded vs oppose-seeded
  stance_counts,   // per-bin support vs oppose counts within the cohort
};

inline std::string_view to_string(StancePairing p) {
  switch (p) {
    case StancePairing::automatic: return "auto";
    case StancePairing::seeded_cohorts: return "seeded-cohorts";
    case StancePairing::stance_counts: return "stance-counts";
  }
  return "?";
}

inline StancePairing parse_stance_pairing(std::string_view s) {
  if (s == "auto") return StancePairing::automatic;
  if (s == "seeded-cohorts") return StancePairing::seeded_cohorts;
  if (s == "stance-counts") return StancePairing::stance_counts;
  throw Error(Errc::validation, "unknown stance pairing '" + std::string(s) + "'");
}

struct StanceTest {
  StancePairing pairing = StancePairing::seeded_cohorts;
  UTestResult result;
};

struct CohortReport {
  std::string experiment;
  std::string cohort_tag;
  int n_users = 0;
  std::vector<BinCounts> bins;  // aggregated over the cohort
  std::vector<DriftSeries> series;
  BinCounts totals;  // pooled over all bins
  std::optional<StanceTest> stance_test;
  // First-half vs second-half of each metric's defined per-bin values.
  std::map<DriftMetric, UTestResult> half_split_tests;
  // Seeding-phase hashtag ranking for the cohort topic, when available.
  std::optional<HashtagPopularity> hashtags;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace detail

// One CSV per metric: aggregated per-bin counts, the metric value (empty
// cell when undefined) and the fitted line evaluated at the bin.
inline void write_metric_csv(const std::filesystem::path& path,
                             const std::vector<BinCounts>& bins, const DriftSeries& s) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "bin_index,n_interest,n_neutral,n_other,n_support,n_oppose,value,fit\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const BinCounts& b = bins[i];
    out << b.bin_index << "," << b.n_interest << "," << b.n_neutral << "," << b.n_other
        << "," << b.n_support << "," << b.n_oppose << ",";
    if (i < s.points.size() && s.points[i].second)
      out << detail::fmt_double(*s.points[i].second);
    out << ",";
    if (s.fit)
      out << detail::fmt_double(s.fit->intercept + s.fit->slope * b.bin_index);
    out << "\n";
  }
}

// Self-contained vector plot: per-bin points plus the fitted line. Undefined
// bins simply have no point.
inline void write_metric_svg(const std::filesystem::path& path, const DriftSeries& s,
                             const std::string& title) {
  const double width = 800, height = 480;
  const double ml = 60, mr = 20, mt = 40, mb = 50;
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;

  double y_min = 0.0, y_max = 1.0;
  if (s.metric != DriftMetric::preference_aligned) {
    y_min = -1.0;
    y_max = 1.0;
  }
  int x_max = 1;
  for (const auto& [x, v] : s.points) x_max = std::max(x_max, x);

  auto sx = [&](double x) { return ml + plot_w * (x / static_cast<double>(x_max)); };
  auto sy = [&](double y) { return mt + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // axes
  out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
      << "\" y2=\"" << num(mt + plot_h) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + plot_h) << "\" x2=\""
      << num(ml + plot_w) << "\" y2=\"" << num(mt + plot_h) << "\" stroke=\"black\"/>\n";
  for (double y : {y_min, (y_min + y_max) / 2.0, y_max}) {
    out << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(sy(y) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(y)
        << "</text>\n";
    out << "<line x1=\"" << num(ml - 4) << "\" y1=\"" << num(sy(y)) << "\" x2=\"" << num(ml)
        << "\" y2=\"" << num(sy(y)) << "\" stroke=\"black\"/>\n";
  }
  out << "<text x=\"" << num(ml + plot_w / 2) << "\" y=\"" << num(height - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">bin"
      << "</text>\n";
  out << "<text x=\"" << num(ml) << "\" y=\"" << num(height - 28)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n";
  out << "<text x=\"" << num(ml + plot_w) << "\" y=\"" << num(height - 28)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << x_max
      << "</text>\n";

  if (s.metric != DriftMetric::preference_aligned) {
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(sy(0)) << "\" x2=\""
        << num(ml + plot_w) << "\" y2=\"" << num(sy(0))
        << "\" stroke=\"#cccccc\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (const auto& [x, v] : s.points) {
    if (!v) continue;
    out << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(*v))
        << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  if (s.fit) {
    const double y0 = s.fit->intercept;
    const double y1 = s.fit->intercept + s.fit->slope * x_max;
    auto clamp = [&](double y) { return std::min(y_max, std::max(y_min, y)); };
    out << "<line x1=\"" << num(sx(0)) << "\" y1=\"" << num(sy(clamp(y0))) << "\" x2=\""
        << num(sx(x_max)) << "\" y2=\"" << num(sy(clamp(y1)))
        << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
}

inline nlohmann::ordered_json utest_to_json(const UTestResult& t) {
  return {{"u_statistic", t.u_statistic},
          {"p_value", t.p_value},
          {"method", t.method == MwMethod::exact ? "exact" : "normal_approx"}};
}

inline nlohmann::ordered_json summary_json(const CohortReport& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["cohort"] = r.cohort_tag;
  j["n_users"] = r.n_users;
  j["n_bins"] = r.bins.size();
  j["totals"] = {{"interest", r.totals.n_interest}, {"neutral", r.totals.n_neutral},
                 {"other", r.totals.n_other},       {"support", r.totals.n_support},
                 {"oppose", r.totals.n_oppose},     {"all", r.totals.total()}};

  nlohmann::ordered_json metrics;
  for (const DriftSeries& s : r.series) {
    nlohmann::ordered_json mj;
    auto overall = metric_value(s.metric, r.totals);
    if (overall)
      mj["overall"] = *overall;
    else
      mj["overall"] = nullptr;
    if (s.fit) {
      mj["fit"] = {{"slope", s.fit->slope},
                   {"intercept", s.fit->intercept},
                   {"residual_sse", s.fit->residual_sse},
                   {"n_points", s.fit->n_points}};
    } else {
      mj["fit"] = nullptr;
    }
    auto half = r.half_split_tests.find(s.metric);
    if (half != r.half_split_tests.end())
      mj["half_split_test"] = utest_to_json(half->second);
    metrics[std::string(to_string(s.metric))] = mj;
  }
  j["metrics"] = metrics;

  if (r.stance_test) {
    auto tj = utest_to_json(r.stance_test->result);
    tj["pairing"] = std::string(to_string(r.stance_test->pairing));
    j["stance_test"] = tj;
  }
  if (r.hashtags) {
    nlohmann::ordered_json hj;
    hj["popularity_sum"] = r.hashtags->popularity_sum;
    hj["top"] = nlohmann::ordered_json::array();
    for (const auto& [tag, n] : r.hashtags->top)
      hj["top"].push_back({{"hashtag", tag}, {"occurrences", n}});
    j["hashtag_popularity"] = hj;
  }
  return j;
}

// Writes <cohort>_<metric>.csv / .svg per metric plus summary.json into
// `report_dir`. Re-running on identical inputs reproduces identical bytes.
inline void emit_report(const CohortReport& r, const std::filesystem::path& report_dir) {
  std::error_code ec;
  std::filesystem::create_directories(report_dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + report_dir.string());
  for (const DriftSeries& s : r.series) {
    const std::string base = r.cohort_tag + "_" + std::string(to_string(s.metric));
    write_metric_csv(report_dir / (base + ".csv"), r.bins, s);
    write_metric_svg(report_dir / (base + ".svg"), s,
                     r.cohort_tag + " " + std::string(to_string(s.metric)));
  }
  std::ofstream out(report_dir / "summary.json");
  if (!out) throw Error(Errc::io, "cannot write summary.json");
  out << summary_json(r).dump(2) << "\n";
}

}  // namespace driftlab
