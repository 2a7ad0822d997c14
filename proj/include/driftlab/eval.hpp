#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "driftlab/catalog.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/predictor.hpp"

namespace driftlab {

// Predictor evaluation protocol over a 350-video labeled fixture: for each
// polarising topic, classify all 350 videos against a profile interested in
// that topic; stance accuracy is measured only on the 50 videos belonging to
// the topic.

struct EvalRow {
  TopicId topic = TopicId::flatearth;
  double topic_accuracy = 0.0;
  double stance_accuracy = 0.0;
  int n_topic = 0;   // videos classified (all of them)
  int n_stance = 0;  // topic-relevant videos stance accuracy is measured on
};

inline void validate_eval_fixture_shape(const Catalog& fixture) {
  auto count = [&](TopicId t, Stance s) {
    return static_cast<int>(fixture.category_members({t, s}).size());
  };
  std::vector<std::string> problems;
  for (TopicId t : kPolarisingTopics) {
    for (Stance s : {Stance::support, Stance::oppose}) {
      const int n = count(t, s);
      if (n != 25)
        problems.push_back(to_string(CategoryKey{t, s}) + ": expected 25 videos, got " +
                           std::to_string(n));
    }
  }
  if (count(TopicId::cooking, Stance::none) != 50)
    problems.push_back("cooking/none: expected 50 videos, got " +
                       std::to_string(count(TopicId::cooking, Stance::none)));
  if (count(TopicId::other, Stance::none) != 100)
    problems.push_back("other/none: expected 100 videos, got " +
                       std::to_string(count(TopicId::other, Stance::none)));
  if (fixture.size() != 350)
    problems.push_back("expected 350 videos total, got " + std::to_string(fixture.size()));
  if (!problems.empty()) {
    std::string msg = "evaluation fixture has the wrong shape:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(Errc::fixture_shape, msg);
  }
}

// `make_annotator` supplies a fresh annotator per evaluated topic, so oracle
// noise streams restart identically for each topic pass.
inline std::vector<EvalRow> evaluate_predictor(
    const Catalog& fixture,
    const std::function<std::unique_ptr<Annotator>(TopicId)>& make_annotator) {
  validate_eval_fixture_shape(fixture);

  std::vector<EvalRow> rows;
  for (TopicId topic : kPolarisingTopics) {
    UserProfile profile;
    profile.user_id = "eval_" + std::string(to_string(topic));
    profile.group = Group::g2_polarising_only;
    profile.topic = topic;
    profile.stance_set = {Stance::support};

    auto annotator = make_annotator(topic);
    EvalRow row;
    row.topic = topic;
    int topic_correct = 0, stance_correct = 0;
    for (const VideoRecord& v : fixture.videos()) {
      const Annotation predicted = annotator->annotate(v, profile);
      const Annotation truth = ground_truth_annotation(v, profile);
      ++row.n_topic;
      if (predicted.topic_class == truth.topic_class) ++topic_correct;
      if (v.true_topic == topic) {
        ++row.n_stance;
        if (predicted.stance == v.true_stance) ++stance_correct;
      }
    }
    row.topic_accuracy = static_cast<double>(topic_correct) / row.n_topic;
    row.stance_accuracy =
        row.n_stance == 0 ? 0.0 : static_cast<double>(stance_correct) / row.n_stance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace driftlab
