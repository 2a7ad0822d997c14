// driftlab: deterministic sockpuppet-audit laboratory for a simulated
// short-video recommender. Subcommands: simulate, analyze, eval-predictor,
// replay. Exit codes: 0 ok, 2 validation, 3 runtime, 4 io.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "driftlab/analyze.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/eval.hpp"
#include "driftlab/experiment.hpp"
#include "driftlab/remote.hpp"
#include "driftlab/replay.hpp"

namespace {

using namespace driftlab;

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 int workers, const std::optional<std::string>& out) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (seed) cfg.master_seed = *seed;
  const ExperimentResult result = run_experiment(cfg, workers, out);
  std::cout << "simulated " << result.n_users << " users -> " << result.dir.string()
            << "\n";
  return 0;
}

int cmd_analyze(const std::string& experiment_dir, const std::string& cohort,
                const std::string& stance_pairing, const std::optional<std::string>& out) {
  const CohortSpec spec = CohortSpec::parse(cohort);
  AnalyzeOptions options;
  options.stance_pairing = parse_stance_pairing(stance_pairing);
  if (out) options.report_dir = *out;
  const CohortReport report = analyze_experiment(experiment_dir, spec, options);
  const auto dir =
      options.report_dir.value_or(std::filesystem::path(experiment_dir) / "report");
  std::cout << "cohort " << report.cohort_tag << ": " << report.n_users << " users, "
            << report.bins.size() << " bins, " << report.totals.total()
            << " events -> " << dir.string() << "\n";
  for (const DriftSeries& s : report.series) {
    std::cout << "  " << to_string(s.metric) << ": ";
    if (s.fit)
      std::printf("slope %.6f intercept %.6f\n", s.fit->slope, s.fit->intercept);
    else
      std::cout << "fit undefined\n";
  }
  return 0;
}

int cmd_eval_predictor(const std::string& fixture_path, const std::string& predictor_path,
                       const std::optional<std::string>& out) {
  const Catalog fixture = Catalog::load(fixture_path);

  std::ifstream in(predictor_path);
  if (!in) throw Error(Errc::io, "cannot read predictor config " + predictor_path);
  nlohmann::json pj;
  try {
    in >> pj;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, predictor_path + ": " + e.what());
  }

  std::function<std::unique_ptr<Annotator>(TopicId)> make;
  const std::string kind = pj.value("kind", std::string("oracle"));
  if (kind == "oracle") {
    const double topic_err = pj.value("topic_error_rate", 0.0);
    const double stance_err = pj.value("stance_error_rate", 0.0);
    const std::uint64_t seed = pj.value("seed", 1ULL);
    if (topic_err < 0 || topic_err > 1 || stance_err < 0 || stance_err > 1)
      throw Error(Errc::validation, "error rates must be in [0, 1]");
    make = [=](TopicId topic) -> std::unique_ptr<Annotator> {
      return std::make_unique<OracleAnnotator>(
          topic_err, stance_err,
          RngStream::keyed(seed, to_string(topic), "eval-annotate"));
    };
  } else if (kind == "remote") {
    RemoteConfig rc;
    rc.endpoint = pj.value("endpoint", std::string());
    rc.timeout_s = pj.value("timeout_s", 30.0);
    rc.retries = pj.value("retries", 2);
    rc.concurrency_cap = pj.value("concurrency", 4);
    if (pj.contains("cache_file"))
      rc.cache_file = pj["cache_file"].get<std::string>();
    if (rc.endpoint.empty()) throw Error(Errc::validation, "remote predictor needs endpoint");
    auto shared = std::make_shared<RemoteAnnotator>(rc);
    make = [shared](TopicId) -> std::unique_ptr<Annotator> {
      struct Ref : Annotator {
        std::shared_ptr<RemoteAnnotator> target;
        explicit Ref(std::shared_ptr<RemoteAnnotator> t) : target(std::move(t)) {}
        Annotation annotate(const VideoRecord& v, const UserProfile& p) override {
          return target->annotate(v, p);
        }
      };
      return std::make_unique<Ref>(shared);
    };
  } else {
    throw Error(Errc::validation, "predictor kind must be oracle or remote");
  }

  const auto rows = evaluate_predictor(fixture, make);
  std::printf("%-16s %14s %15s\n", "topic", "topic_accuracy", "stance_accuracy");
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const EvalRow& r : rows) {
    std::printf("%-16s %14.4f %15.4f\n", std::string(to_string(r.topic)).c_str(),
                r.topic_accuracy, r.stance_accuracy);
    j.push_back({{"topic", std::string(to_string(r.topic))},
                 {"topic_accuracy", r.topic_accuracy},
                 {"stance_accuracy", r.stance_accuracy},
                 {"n_topic", r.n_topic},
                 {"n_stance", r.n_stance}});
  }
  if (out) {
    std::ofstream of(*out);
    if (!of) throw Error(Errc::io, "cannot write " + *out);
    of << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_replay(const std::string& fixture_path, const std::optional<std::string>& out) {
  const ReplayFixture fixture = ReplayFixture::load(fixture_path);
  const std::filesystem::path out_dir = out.value_or("replay/" + fixture.name);
  const CohortReport report = run_replay(fixture, out_dir);
  std::cout << "replayed " << report.totals.total() << " events over "
            << report.bins.size() << " bins -> " << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalisation-drift audit laboratory"};
  app.require_subcommand(1);

  std::string config_path, experiment_dir, cohort = "all";
  std::string stance_pairing = "auto";
  std::string fixture_path, predictor_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int workers = 1;

  auto* simulate = app.add_subcommand("simulate", "run a configured experiment");
  simulate->add_option("-c,--config", config_path, "experiment config file")->required();
  simulate->add_option("--seed", seed, "override the master seed");
  simulate->add_option("--workers", workers, "parallel user workers");
  simulate->add_option("--out", out, "override the output directory");

  auto* analyze = app.add_subcommand("analyze", "compute drift reports from logs");
  analyze->add_option("-e,--experiment", experiment_dir, "experiment directory")
      ->required();
  analyze->add_option("--cohort", cohort, "e.g. group=G2,topic=us_politics or all");
  analyze->add_option("--stance-pairing", stance_pairing,
                      "stance test pairing: auto, seeded-cohorts, stance-counts");
  analyze->add_option("--out", out, "report directory (default <experiment>/report)");

  auto* evalp = app.add_subcommand("eval-predictor", "run the 350-video evaluation");
  evalp->add_option("-f,--fixture", fixture_path, "labeled fixture (catalog records)")
      ->required();
  evalp->add_option("-p,--predictor", predictor_path, "predictor config file")->required();
  evalp->add_option("--out", out, "also write the accuracy table as JSON");

  auto* replay = app.add_subcommand("replay", "analyze declared per-bin counts");
  replay->add_option("-f,--fixture", fixture_path, "replay fixture file")->required();
  replay->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cmd_simulate(config_path, seed, workers, out);
    if (analyze->parsed()) return cmd_analyze(experiment_dir, cohort, stance_pairing, out);
    if (evalp->parsed()) return cmd_eval_predictor(fixture_path, predictor_path, out);
    if (replay->parsed()) return cmd_replay(fixture_path, out);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const driftlab::Error& e) {
    std::cerr << "error[" << driftlab::errc_name(e.code()) << "]: " << e.what() << "\n";
    return driftlab::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return 3;
  }
}
