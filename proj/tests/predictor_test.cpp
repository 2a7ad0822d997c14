#include "driftlab/predictor.hpp"

#include <gtest/gtest.h>

#include "driftlab/catalog.hpp"

namespace driftlab {
namespace {

VideoRecord make_video(TopicId topic, Stance stance, double duration = 60.0,
                       bool livestream = false) {
  VideoRecord v;
  v.video_id = "v_test";
  v.author = "creator_0001";
  v.description = "some description";
  v.duration_s = duration;
  v.is_livestream = livestream;
  v.true_topic = topic;
  v.true_stance = stance;
  v.popularity_weight = 1.0;
  return v;
}

UserProfile make_profile(Group group, TopicId topic, std::set<Stance> stances) {
  UserProfile p;
  p.user_id = "u_test";
  p.group = group;
  p.topic = topic;
  p.stance_set = std::move(stances);
  return p;
}

TEST(AnnotateOracle, ZeroNoiseMatchesGroundTruth) {
  NoiseModel noise = NoiseModel::zero();
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::flatearth, {Stance::support});

  const auto a = annotate_oracle(make_video(TopicId::flatearth, Stance::support), profile,
                                 noise);
  EXPECT_EQ(a.topic_class, TopicClass::interest);
  EXPECT_EQ(a.stance, Stance::support);

  const auto b =
      annotate_oracle(make_video(TopicId::cooking, Stance::none), profile, noise);
  EXPECT_EQ(b.topic_class, TopicClass::neutral);
  EXPECT_EQ(b.stance, Stance::none);

  const auto c =
      annotate_oracle(make_video(TopicId::vaccines, Stance::oppose), profile, noise);
  EXPECT_EQ(c.topic_class, TopicClass::other);
  EXPECT_EQ(c.stance, Stance::none);
}

TEST(AnnotateOracle, ZeroNoiseExhaustiveOverFullCatalog) {
  const Catalog cat = generate_catalog(CatalogSpec::default_spec(), 17);
  NoiseModel noise = NoiseModel::zero();
  for (TopicId topic : kPolarisingTopics) {
    const auto profile = make_profile(Group::g2_polarising_only, topic, {Stance::support});
    for (const VideoRecord& v : cat.videos()) {
      const Annotation a = annotate_oracle(v, profile, noise);
      EXPECT_EQ(a, ground_truth_annotation(v, profile));
    }
  }
}

TEST(AnnotateOracle, MeasuredAccuracyTracksErrorRate) {
  // error 0.05 -> accuracy converges to 95% (within +-1% over 10k draws)
  NoiseModel noise{0.05, 0.0, RngStream::keyed(123, "noise", "topic")};
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::vaccines, {Stance::support});
  const auto video = make_video(TopicId::vaccines, Stance::support);
  int correct = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Annotation a = annotate_oracle(video, profile, noise);
    correct += a.topic_class == TopicClass::interest;
  }
  EXPECT_NEAR(correct / static_cast<double>(n), 0.95, 0.01);
}

TEST(AnnotateOracle, StanceErrorFlipsOnlyInterestStances) {
  NoiseModel noise{0.0, 1.0, RngStream::keyed(5, "noise", "stance")};
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::flatearth, {Stance::support});
  const auto a = annotate_oracle(make_video(TopicId::flatearth, Stance::support), profile,
                                 noise);
  EXPECT_EQ(a.topic_class, TopicClass::interest);
  EXPECT_EQ(a.stance, Stance::oppose);  // certain flip at rate 1.0
  const auto b =
      annotate_oracle(make_video(TopicId::cooking, Stance::none), profile, noise);
  EXPECT_EQ(b.stance, Stance::none);
}

TEST(AnnotateOracle, CookingProfileKeepsNeutralMapping) {
  NoiseModel noise = NoiseModel::zero();
  const auto profile = make_profile(Group::g2_polarising_only, TopicId::cooking, {});
  const auto a =
      annotate_oracle(make_video(TopicId::cooking, Stance::none), profile, noise);
  EXPECT_EQ(a.topic_class, TopicClass::neutral);
  EXPECT_EQ(a.stance, Stance::none);
}

TEST(Decide, WatchesMatchingInterestVideo) {
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::flatearth, {Stance::support});
  const auto video = make_video(TopicId::flatearth, Stance::support);
  EXPECT_EQ(decide({TopicClass::interest, Stance::support}, video, profile,
                   Phase::interaction),
            Action::watch_like_bookmark);
  EXPECT_EQ(decide({TopicClass::interest, Stance::oppose}, video, profile,
                   Phase::interaction),
            Action::skip);
}

TEST(Decide, FiveMinuteAndLivestreamRuleDominates) {
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::flatearth, {Stance::support});
  const auto long_video = make_video(TopicId::flatearth, Stance::support, 301.0);
  EXPECT_EQ(decide({TopicClass::interest, Stance::support}, long_video, profile,
                   Phase::interaction),
            Action::skip);
  const auto at_limit = make_video(TopicId::flatearth, Stance::support, 300.0);
  EXPECT_EQ(decide({TopicClass::interest, Stance::support}, at_limit, profile,
                   Phase::interaction),
            Action::watch_like_bookmark);
  const auto live = make_video(TopicId::flatearth, Stance::support, 60.0, true);
  EXPECT_EQ(decide({TopicClass::interest, Stance::support}, live, profile,
                   Phase::interaction),
            Action::skip);
}

TEST(Decide, NeutralInteractionRuleByGroupAndPhase) {
  const auto video = make_video(TopicId::cooking, Stance::none);
  const Annotation neutral{TopicClass::neutral, Stance::none};

  const auto g1 =
      make_profile(Group::g1_neutral_plus_polarising, TopicId::vaccines, {Stance::oppose});
  const auto g2 =
      make_profile(Group::g2_polarising_only, TopicId::vaccines, {Stance::oppose});
  const auto g3 = make_profile(Group::g3_mixed_polarity, TopicId::us_politics,
                               {Stance::support, Stance::oppose});

  EXPECT_EQ(decide(neutral, video, g1, Phase::interaction), Action::watch_like_bookmark);
  EXPECT_EQ(decide(neutral, video, g2, Phase::interaction), Action::watch_like_bookmark);
  EXPECT_EQ(decide(neutral, video, g3, Phase::interaction), Action::skip);

  // seed phase: neutral only while seeding the neutral topic itself
  EXPECT_EQ(decide(neutral, video, g1, Phase::seed, true), Action::watch_like_bookmark);
  EXPECT_EQ(decide(neutral, video, g1, Phase::seed, false), Action::skip);
  EXPECT_EQ(decide(neutral, video, g2, Phase::seed, false), Action::skip);
}

TEST(Decide, G3WatchesBothStances) {
  const auto g3 = make_profile(Group::g3_mixed_polarity, TopicId::us_politics,
                               {Stance::support, Stance::oppose});
  const auto video = make_video(TopicId::us_politics, Stance::oppose);
  EXPECT_EQ(decide({TopicClass::interest, Stance::oppose}, video, g3, Phase::interaction),
            Action::watch_like_bookmark);
  EXPECT_EQ(decide({TopicClass::interest, Stance::support}, video, g3, Phase::interaction),
            Action::watch_like_bookmark);
}

TEST(BuildPrompt, ContainsTopicDescriptionAndMetadata) {
  auto video = make_video(TopicId::flatearth, Stance::support);
  video.author = "creator_0042";
  video.description = "proof earth is flat";
  video.hashtags = {"flatearth", "firmament"};
  video.transcript = "the horizon always rises to eye level";
  video.stickers = "WAKE UP";
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::flatearth, {Stance::support});

  const std::string p = build_prompt(video, profile);
  EXPECT_NE(p.find("firmament or flatearth experiments"), std::string::npos);
  EXPECT_NE(p.find("Topic: flatearth/cooking/other"), std::string::npos);
  EXPECT_NE(p.find("Stance: support/oppose"), std::string::npos);
  EXPECT_NE(p.find("Author: creator_0042"), std::string::npos);
  EXPECT_NE(p.find("Video description and hashtags: proof earth is flat #flatearth "
                   "#firmament"),
            std::string::npos);
  EXPECT_NE(p.find("Video transcript: the horizon always rises"), std::string::npos);
  EXPECT_NE(p.find("Text stickers in video: WAKE UP"), std::string::npos);
}

TEST(BuildPrompt, OmitsEmptyMetadataLines) {
  auto video = make_video(TopicId::vaccines, Stance::oppose);
  video.transcript.clear();
  video.stickers.clear();
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::vaccines, {Stance::oppose});
  const std::string p = build_prompt(video, profile);
  EXPECT_EQ(p.find("Video transcript:"), std::string::npos);
  EXPECT_EQ(p.find("Text stickers in video:"), std::string::npos);
}

TEST(BuildPrompt, DeterministicAndTopicNamed) {
  const auto video = make_video(TopicId::us_politics, Stance::support);
  const auto profile =
      make_profile(Group::g2_polarising_only, TopicId::us_politics, {Stance::support});
  EXPECT_EQ(build_prompt(video, profile), build_prompt(video, profile));
  EXPECT_NE(build_prompt(video, profile).find("1) political; 2) cooking; 3) other"),
            std::string::npos);
}

TEST(BuildPrompt, CookingProfileIsUnsupported) {
  const auto video = make_video(TopicId::cooking, Stance::none);
  const auto profile = make_profile(Group::g2_polarising_only, TopicId::cooking, {});
  try {
    build_prompt(video, profile);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_topic);
  }
}

TEST(ParseResponse, ExtractsTopicAndStance) {
  const Annotation a = parse_response("Topic: flatearth\nStance: support",
                                      TopicId::flatearth);
  EXPECT_EQ(a.topic_class, TopicClass::interest);
  EXPECT_EQ(a.stance, Stance::support);
}

TEST(ParseResponse, CanonicalizesNonInterestStanceToNone) {
  const Annotation a = parse_response("Topic: cooking\nStance: support",
                                      TopicId::flatearth);
  EXPECT_EQ(a.topic_class, TopicClass::neutral);
  EXPECT_EQ(a.stance, Stance::none);
  const Annotation b = parse_response("Topic: other\nStance: support",
                                      TopicId::vaccines);
  EXPECT_EQ(b.topic_class, TopicClass::other);
  EXPECT_EQ(b.stance, Stance::none);
}

TEST(ParseResponse, CaseInsensitiveWithPadding) {
  const Annotation a = parse_response("  topic:  Climate Change  \n  STANCE:  OPPOSE ",
                                      TopicId::climate_change);
  EXPECT_EQ(a.topic_class, TopicClass::interest);
  EXPECT_EQ(a.stance, Stance::oppose);
}

TEST(ParseResponse, UnknownTopicIsParseError) {
  try {
    parse_response("Topic: banana", TopicId::flatearth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse);
  }
}

TEST(ParseResponse, MissingLinesAreParseErrors) {
  EXPECT_THROW(parse_response("no structure at all", TopicId::flatearth), Error);
  EXPECT_THROW(parse_response("Topic: flatearth\n", TopicId::flatearth), Error);
  EXPECT_THROW(parse_response("Topic: flatearth\nStance: maybe", TopicId::flatearth),
               Error);
}

}  // namespace
}  // namespace driftlab
