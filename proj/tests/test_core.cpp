#include <gtest/gtest.h>

#include <fstream>

#include "helpers.hpp"
#include "srvf/core.hpp"
#include "srvf/error.hpp"
#include "srvf/synthetic.hpp"

using namespace srvf;
using srvf::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

Rationale unbiased_of(const LabeledSample& s, std::string text) {
  return {s.id, std::move(text), s.gold, RationaleKind::Unbiased, RationaleSource::LGI};
}

Rationale biased_of(const LabeledSample& s, std::string text, const std::string& wrong) {
  return {s.id, std::move(text), srvf::testing::label(wrong), RationaleKind::Biased, RationaleSource::DI};
}

}  // namespace

TEST(LabelSet, SemevalHasTenLabelsWithOtherNegative) {
  const auto l = LabelSet::semeval();
  EXPECT_EQ(l.size(), 10u);
  ASSERT_EQ(l.negatives().size(), 1u);
  EXPECT_EQ(l.negatives()[0].name, "Other");
  EXPECT_TRUE(l.at("Other").is_negative);
  EXPECT_FALSE(l.at("Entity-Origin").is_negative);
}

TEST(LabelSet, RejectsDuplicatesAndUnknownNegatives) {
  EXPECT_THROW(LabelSet({"A", "A"}, {}), DataError);
  EXPECT_THROW(LabelSet({"A", ""}, {}), DataError);
  EXPECT_THROW(LabelSet({"A", "B"}, {"C"}), DataError);
}

TEST(LabelSet, MatchNormalizesSpacingAndCase) {
  const auto l = LabelSet::semeval();
  EXPECT_EQ(l.match("Member - Collection")->name, "Member-Collection");
  EXPECT_EQ(l.match("member-collection")->name, "Member-Collection");
  EXPECT_FALSE(l.match("Member Collection").has_value());
  EXPECT_THROW(l.at("Not-A-Relation"), DataError);
}

TEST(LoadSamples, ExampleLine) {
  const auto s = parse_samples(
      R"({"id":"s1","sentence":"data is derived from a study","head":"data","tail":"study","label":"Entity-Origin"})",
      LabelSet::semeval());
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].gold.name, "Entity-Origin");
  EXPECT_EQ(s[0].head, "data");
}

TEST(LoadSamples, EmptyFileIsEmpty) {
  TempDir dir;
  write(dir / "e.jsonl", "");
  EXPECT_TRUE(load_samples(dir / "e.jsonl", LabelSet::semeval()).empty());
}

TEST(LoadSamples, UnknownLabelNamesLineAndLabel) {
  const std::string content =
      R"({"id":"s1","sentence":"a b","head":"a","tail":"b","label":"Other"})"
      "\n"
      R"({"id":"s2","sentence":"a b","head":"a","tail":"b","label":"Not-A-Relation"})"
      "\n";
  try {
    parse_samples(content, LabelSet::semeval());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("Not-A-Relation"), std::string::npos);
  }
}

TEST(LoadSamples, ErrorsCarryLineNumbers) {
  const auto l = LabelSet::semeval();
  try {
    parse_samples("\n{not json}\n", l);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_samples(R"({"id":"s","sentence":"a b","head":"a","label":"Other"})", l), DataError);
  EXPECT_THROW(parse_samples(R"({"id":"s","sentence":"a b","head":"a","tail":"z","label":"Other"})", l),
               DataError);
}

TEST(LoadSamples, WhitespaceNormalizedSubstringCheck) {
  const auto s = parse_samples(
      R"({"id":"s","sentence":"the  big   dog ran","head":"big dog","tail":"ran","label":"Other"})",
      LabelSet::semeval());
  EXPECT_EQ(s.size(), 1u);
}

TEST(LoadSamples, SaveLoadRoundTrip) {
  TempDir dir;
  const auto labels = LabelSet::semeval();
  const auto samples = synthetic_sentences_total(labels, 40, 3, "rt");
  save_samples(dir / "s.jsonl", samples);
  EXPECT_EQ(load_samples(dir / "s.jsonl", labels), samples);
}

TEST(RationaleStore, EnforcesKindInvariants) {
  RationaleStore store;
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  store.add_sample(s);
  EXPECT_TRUE(store.add_rationale(unbiased_of(s, "because derived from")));
  EXPECT_THROW(store.add_rationale(biased_of(s, "x", "Entity-Origin")), DataError);
  Rationale wrong_unbiased = unbiased_of(s, "y");
  wrong_unbiased.predicted = srvf::testing::label("Product-Producer");
  EXPECT_THROW(store.add_rationale(wrong_unbiased), DataError);
  EXPECT_THROW(store.add_rationale(unbiased_of(s, "")), DataError);
  Rationale orphan = unbiased_of(s, "z");
  orphan.sample_id = "missing";
  EXPECT_THROW(store.add_rationale(orphan), DataError);
}

TEST(RationaleStore, DeduplicatesExactTriples) {
  RationaleStore store;
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  store.add_sample(s);
  EXPECT_TRUE(store.add_rationale(biased_of(s, "usual pair", "Product-Producer")));
  EXPECT_FALSE(store.add_rationale(biased_of(s, "usual pair", "Product-Producer")));
  EXPECT_TRUE(store.add_rationale(biased_of(s, "usual pair ", "Product-Producer")));
  EXPECT_TRUE(store.add_rationale(biased_of(s, "usual pair", "Cause-Effect")));
  EXPECT_EQ(store.biased().size(), 3u);
}

TEST(StoreMerge, IdentityAndIdempotence) {
  RationaleStore a;
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  a.add_sample(s);
  a.add_rationale(unbiased_of(s, "u"));
  a.add_rationale(biased_of(s, "b", "Product-Producer"));
  const RationaleStore m = store_merge(a, RationaleStore{});
  EXPECT_EQ(m.unbiased(), a.unbiased());
  EXPECT_EQ(m.biased(), a.biased());
  const RationaleStore twice = store_merge(a, a);
  EXPECT_EQ(twice.biased().size(), 1u);
  EXPECT_EQ(twice.unbiased().size(), 1u);
}

TEST(StoreMerge, ThreePlusFourSharingOneGivesSix) {
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  RationaleStore a, b;
  a.add_sample(s);
  b.add_sample(s);
  for (auto t : {"r1", "r2", "shared"}) a.add_rationale(biased_of(s, t, "Product-Producer"));
  for (auto t : {"r3", "r4", "r5", "shared"}) b.add_rationale(biased_of(s, t, "Product-Producer"));
  EXPECT_EQ(store_merge(a, b).rationale_count(), 6u);
}

TEST(StoreMerge, ConflictingSamplesThrow) {
  RationaleStore a, b;
  a.add_sample(srvf::testing::sample("s1", "a b", "a", "b", "Other"));
  b.add_sample(srvf::testing::sample("s1", "a b", "a", "b", "Cause-Effect"));
  EXPECT_THROW(store_merge(a, b), DataError);
}

TEST(StoreMerge, CommutativeAndAssociativeUpToOrder) {
  std::mt19937_64 rng(5);
  const auto labels = LabelSet::semeval();
  const auto samples = synthetic_sentences_total(labels, 6, 11, "m");
  auto random_store = [&] {
    RationaleStore st;
    for (const auto& s : samples) st.add_sample(s);
    for (int i = 0; i < 6; ++i) {
      const auto& s = samples[rng() % samples.size()];
      st.add_rationale(unbiased_of(s, "text " + std::to_string(rng() % 4)));
    }
    return st;
  };
  auto key = [](const RationaleStore& st) {
    std::vector<std::string> k;
    for (const auto& r : st.unbiased()) k.push_back(r.sample_id + "|" + r.text + "|" + r.predicted.name);
    std::sort(k.begin(), k.end());
    return k;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_store(), b = random_store(), c = random_store();
    EXPECT_EQ(key(store_merge(a, b)), key(store_merge(b, a)));
    EXPECT_EQ(key(store_merge(store_merge(a, b), c)), key(store_merge(a, store_merge(b, c))));
  }
}

TEST(RationaleStoreFile, RoundTripWithInlineSamples) {
  TempDir dir;
  const auto labels = LabelSet::semeval();
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  RationaleStore store;
  store.add_sample(s);
  store.add_rationale(unbiased_of(s, "derived from"));
  store.add_rationale(biased_of(s, "usual pair", "Product-Producer"));
  save_store(dir / "r.jsonl", store);

  const RationaleStore loaded = load_store(dir / "r.jsonl", {}, labels);
  EXPECT_EQ(loaded.unbiased(), store.unbiased());
  EXPECT_EQ(loaded.biased(), store.biased());
  ASSERT_NE(loaded.find_sample("s1"), nullptr);
  EXPECT_EQ(*loaded.find_sample("s1"), s);
}

TEST(RationaleStoreFile, BareLinesNeedSamples) {
  TempDir dir;
  write(dir / "r.jsonl",
        R"({"sample_id":"s1","text":"t","predicted":"Entity-Origin","kind":"unbiased","source":"lgi"})"
        "\n");
  const auto labels = LabelSet::semeval();
  EXPECT_THROW(load_store(dir / "r.jsonl", {}, labels), DataError);
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  EXPECT_EQ(load_store(dir / "r.jsonl", {s}, labels).unbiased().size(), 1u);
}

TEST(Demonstration, LabelIsGold) {
  const auto s = srvf::testing::sample("s1", "data is derived from a study", "data", "study", "Entity-Origin");
  const Demonstration d = make_demonstration(s, "r");
  EXPECT_EQ(d.label, s.gold);
}

TEST(Documents, RoundTrip) {
  TempDir dir;
  const auto docs = synthetic_documents(5, 1, "d");
  save_documents(dir / "d.jsonl", docs);
  const auto loaded = load_documents(dir / "d.jsonl", synthetic_relations());
  ASSERT_EQ(loaded.size(), docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(loaded[i].text, docs[i].text);
    EXPECT_EQ(loaded[i].entities, docs[i].entities);
    EXPECT_EQ(loaded[i].triplets, docs[i].triplets);
  }
}
