#include <gtest/gtest.h>

#include "helpers.hpp"
#include "srvf/mock_backend.hpp"
#include "srvf/prompt.hpp"
#include "srvf/synthetic.hpp"

using namespace srvf;
using srvf::testing::label;
using srvf::testing::sample;

namespace {

std::size_t count(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1))
    ++n;
  return n;
}

const char* kTable4Response =
    "Reasoning Explanations: In the given sentence, the key phrase \"bunch of flowers\" implies "
    "that the flowers are the individual elements that make up the collection of flowers. "
    "Therefore, the head entity \"flowers\" serves as the \"Member\" while the tail entity "
    "\"bunch\" serves as the \"Collection\".\n"
    "Prediction: Given the sentence, the relation between the head entity \"flowers\" and the "
    "tail entity \"bunch\" is \"Member-Collection\".\n"
    "(End of Instance)\n";

PromptSpec spec_with(std::size_t demos) {
  PromptSpec spec;
  spec.labels = LabelSet::semeval();
  spec.inference_sample =
      sample("q", "I 'm going with some girls to get a bunch of flowers .", "flowers", "bunch",
             "Member-Collection");
  const auto pool = synthetic_sentences_total(spec.labels, demos, 1, "d");
  for (const auto& s : pool) spec.demonstrations.push_back(make_demonstration(s, "because " + s.id));
  return spec;
}

}  // namespace

TEST(RenderPrompt, OneDemonstrationMarkers) {
  const std::string p = render_re_prompt(spec_with(1));
  EXPECT_EQ(count(p, "(Start of Instance)"), 2u);
  EXPECT_EQ(count(p, "(End of Instance)"), 1u);
  EXPECT_EQ(p.find(kReInstruction), p.find("Determine"));
  EXPECT_NE(p.find("Tail Entity: \"bunch\""), std::string::npos);
}

TEST(RenderPrompt, ZeroDemonstrationsLeavesOtherParts) {
  const std::string zero = render_re_prompt(spec_with(0));
  EXPECT_EQ(count(zero, "(Start of Instance)"), 1u);
  EXPECT_EQ(count(zero, "(End of Instance)"), 0u);
  const std::string one = render_re_prompt(spec_with(1));
  // Same inference block at the end.
  const auto tail0 = zero.substr(zero.rfind("(Start of Instance)"));
  const auto tail1 = one.substr(one.rfind("(Start of Instance)"));
  EXPECT_EQ(tail0, tail1);
  EXPECT_EQ(zero.rfind("Tail Entity"), zero.find("Tail Entity"));
}

TEST(RenderPrompt, TenDemonstrationsInOrder) {
  const auto spec = spec_with(10);
  const std::string p = render_re_prompt(spec);
  EXPECT_EQ(count(p, "(End of Instance)"), 10u);
  std::size_t last = 0;
  for (const auto& d : spec.demonstrations) {
    const auto pos = p.find("because " + d.sample.id + "\n");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_GT(pos, last);
    last = pos;
  }
}

TEST(RenderPrompt, HintSitsBetweenDemonstrationsAndInference) {
  auto spec = spec_with(2);
  spec.hint = "HINT-TEXT";
  const std::string p = render_re_prompt(spec);
  const auto hint = p.find("HINT-TEXT");
  ASSERT_NE(hint, std::string::npos);
  EXPECT_GT(hint, p.rfind("(End of Instance)"));
  EXPECT_LT(hint, p.rfind("(Start of Instance)"));
}

TEST(ParseResponse, Table4Example) {
  const auto r = parse_re_response(kTable4Response, LabelSet::semeval());
  EXPECT_EQ(r.label.name, "Member-Collection");
  EXPECT_EQ(r.rationale_text.rfind("In the given sentence, the key phrase \"bunch of flowers\"", 0), 0u);
  EXPECT_EQ(r.rationale_text.back(), '.');
}

TEST(ParseResponse, SpacedHyphenNormalizes) {
  const std::string raw =
      "Reasoning Explanations: r\nPrediction: the relation is \"Member - Collection\".\n";
  EXPECT_EQ(parse_re_response(raw, LabelSet::semeval()).label.name, "Member-Collection");
}

TEST(ParseResponse, NormalizationOracleOverAllLabels) {
  const auto labels = LabelSet::semeval();
  for (const auto& l : labels.labels()) {
    std::string spaced;
    for (char c : l.name) spaced += c == '-' ? std::string(" - ") : std::string(1, c);
    for (auto& c : spaced) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const std::string raw = "Reasoning Explanations: x\nPrediction: is \"" + spaced + "\"";
    EXPECT_EQ(parse_re_response(raw, labels).label, l);
  }
}

TEST(ParseResponse, DistinguishableErrors) {
  const auto labels = LabelSet::semeval();
  auto kind_of = [&](std::string_view raw) {
    try {
      parse_re_response(raw, labels);
    } catch (const ParseError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error for: " << raw;
    return ParseError::Kind::Empty;
  };
  EXPECT_EQ(kind_of(""), ParseError::Kind::Empty);
  EXPECT_EQ(kind_of("   \n "), ParseError::Kind::Empty);
  EXPECT_EQ(kind_of("Prediction: \"Other\""), ParseError::Kind::MissingSection);
  EXPECT_EQ(kind_of("Reasoning Explanations: x"), ParseError::Kind::MissingSection);
  EXPECT_EQ(kind_of("Reasoning Explanations: x\nPrediction: \"Friendship\""),
            ParseError::Kind::UnknownLabel);
}

TEST(ParseResponse, RoundTripsRenderedDemonstrations) {
  const auto labels = LabelSet::semeval();
  const auto samples = synthetic_sentences(labels, 3, 9, "rt");
  for (const auto& s : samples) {
    const auto d = make_demonstration(s, unbiased_rationale_text(s, s.gold.name, 1));
    std::string block = render_demonstration_block(d, labels);
    const auto r = parse_re_response(block.substr(block.find("Reasoning Explanations:")), labels);
    EXPECT_EQ(r.rationale_text, d.rationale_text);
    EXPECT_EQ(r.label, d.label);
  }
}

TEST(ParseResponse, NeverReturnsLabelOutsideSet) {
  const auto labels = LabelSet::semeval();
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"\"Other\"", "\"Cause-Effect\"", "\"foo\"", "Prediction:",
                                          "Reasoning Explanations:", "\n", "x", "\"", "(End of Instance)"};
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    for (int w = 0; w < 8; ++w) raw += words[rng() % words.size()] + " ";
    try {
      EXPECT_TRUE(labels.contains(parse_re_response(raw, labels).label.name));
    } catch (const ParseError&) {
    }
  }
}

TEST(ParseResponse, FindLabelMentionPrefersLongest) {
  LabelSet l({"Cause", "Cause-Effect", "Other"}, {"Other"});
  EXPECT_EQ(find_label_mention("it is a cause-effect thing", l)->name, "Cause-Effect");
  EXPECT_FALSE(find_label_mention("nothing here", l).has_value());
}

TEST(LgiPrompts, Step1RevealsGoldStep2DoesNot) {
  const auto s = sample("t6", "The fueltruck was contained in a large box to ensure that any spilled diesel would be contained .",
                        "fueltruck", "box", "Content-Container");
  const auto worked = lgi_worked_example_semeval();
  const std::string p1 = render_lgi_step1(worked, s);
  EXPECT_NE(p1.find("The relation type between \"fueltruck\" and \"box\" is \"Content-Container\""),
            std::string::npos);
  const std::string p2 = render_lgi_step2(worked, s, "the box holds the fueltruck", LabelSet::semeval());
  EXPECT_EQ(p2.find("is \"Content-Container\""), std::string::npos);
  EXPECT_NE(p2.find("the box holds the fueltruck"), std::string::npos);
}

TEST(LgiPrompts, Step2ParseTakesLastQuoted) {
  const auto labels = LabelSet::semeval();
  const std::string raw =
      "Based on the above reasoning explanations, the relation between the head entity "
      "\"fueltruck\" and the tail entity \"box\" is \"Content-Container\"\n(End of Instance)";
  EXPECT_EQ(parse_lgi_step2(raw, labels).name, "Content-Container");
  EXPECT_THROW(parse_lgi_step2("", labels), ParseError);
}

TEST(DocumentPrompts, PairAndTripletRoundTrip) {
  const auto rel = synthetic_relations();
  const auto docs = synthetic_documents(2, 4, "d");
  std::string raw;
  std::vector<EntityPair> pairs;
  for (const auto& t : docs[1].triplets) {
    pairs.push_back({t.head, t.tail});
    raw += format_pair(pairs.back()) + "\n";
  }
  EXPECT_EQ(parse_pairs(raw), pairs);

  std::string traw;
  for (const auto& t : docs[1].triplets) traw += format_triplet(t) + "\n";
  traw += "(Triplet)(head)x(/head)(relation)spouse(/relation)(tail)y(/tail)(/Triplet)\n";
  const auto parsed = parse_triplets(traw, rel);
  EXPECT_EQ(parsed.triplets, docs[1].triplets);
  EXPECT_EQ(parsed.dropped, 1u);

  const std::string prompt = render_triplet_prompt(docs[0], docs[1], pairs, rel);
  EXPECT_NE(prompt.find("Please generate " + std::to_string(pairs.size()) + " triplets"),
            std::string::npos);
}
