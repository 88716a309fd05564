#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "srvf/eval.hpp"
#include "srvf/synthetic.hpp"

using namespace srvf;

namespace {

RelationLabel L(const std::string& n, bool neg = false) { return RelationLabel{n, neg}; }

Document doc_with(const std::string& id, std::vector<std::string> rels) {
  Document d;
  d.id = id;
  int i = 0;
  for (const auto& r : rels) d.triplets.push_back({"h" + std::to_string(i), L(r), "t" + std::to_string(i++), ""});
  return d;
}

// Replays the admission rule over the kept documents in order.
void expect_admission_property(const KshotDocuments& r, std::size_t k) {
  std::map<std::string, std::size_t> count;
  for (const auto& d : r.docs) {
    bool unfinished = false;
    for (const auto& t : d.triplets) unfinished |= count[t.relation.name] < k;
    EXPECT_TRUE(unfinished) << d.id;
    for (const auto& t : d.triplets) ++count[t.relation.name];
  }
}

}  // namespace

TEST(MicroF1, AllCorrect) {
  EXPECT_DOUBLE_EQ(micro_f1({{L("A"), L("A")}, {L("B"), L("B")}}, {L("Other", true)}), 1.0);
}

TEST(MicroF1, HandDerivedHalf) {
  const std::vector<GoldPred> gp = {{L("A"), L("A")}, {L("Other"), L("B")}, {L("B"), L("Other")}};
  const auto c = count_f1(gp, {L("Other")});
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_DOUBLE_EQ(micro_f1(gp, {L("Other")}), 0.5);
}

TEST(MicroF1, NegativeGoldIsFalsePositiveOnly) {
  const auto c = count_f1({{L("Other"), L("A")}}, {L("Other")});
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 0u);
  EXPECT_DOUBLE_EQ(micro_f1({{L("Other"), L("Other")}}, {L("Other")}), 0.0);
  EXPECT_DOUBLE_EQ(micro_f1({}, {L("Other")}), 0.0);
}

TEST(MicroF1, RandomizedAgainstCountingOracle) {
  std::mt19937_64 rng(20);
  const std::vector<std::string> names = {"A", "B", "C", "Other", "no_relation"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GoldPred> gp;
    std::vector<std::pair<std::string, std::string>> raw;
    const std::size_t n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = names[rng() % names.size()], p = names[rng() % names.size()];
      gp.push_back({L(g), L(p)});
      raw.push_back({g, p});
    }
    const double got = micro_f1(gp, {L("Other"), L("no_relation")});
    EXPECT_DOUBLE_EQ(got, oracle::f1_by_counting(raw, {"Other", "no_relation"}));
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
    std::shuffle(gp.begin(), gp.end(), rng);
    EXPECT_DOUBLE_EQ(micro_f1(gp, {L("Other"), L("no_relation")}), got);
  }
}

TEST(Align, PairsByIdAndRejectsMissing) {
  const auto gold = synthetic_sentences_total(LabelSet::semeval(), 3, 1, "g");
  std::vector<Prediction> preds(3);
  for (int i = 2; i >= 0; --i) {
    preds[2 - i].sample_id = gold[i].id;
    preds[2 - i].label = L("Other");
  }
  const auto gp = align(gold, preds);
  ASSERT_EQ(gp.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(gp[i].first, gold[i].gold);
  preds.pop_back();
  EXPECT_THROW(align(gold, preds), DataError);
}

TEST(KshotSentence, TenLabelsTimesK) {
  const auto labels = LabelSet::semeval();
  const auto data = synthetic_sentences(labels, 30, 4, "all");
  for (std::size_t k : {5u, 10u}) {
    const auto s = sample_kshot_sentence(data, k, 9);
    EXPECT_EQ(s.size(), 10 * k);
    std::map<std::string, std::size_t> per;
    for (const auto& x : s) ++per[x.gold.name];
    for (const auto& [_, c] : per) EXPECT_EQ(c, k);
    EXPECT_EQ(s, sample_kshot_sentence(data, k, 9));
    std::set<std::string> ids;
    for (const auto& x : s) EXPECT_TRUE(ids.insert(x.id).second);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.gold < b.gold; }));
  }
  EXPECT_TRUE(sample_kshot_sentence(data, 0, 9).empty());
}

TEST(KshotSentence, ShortfallKeepsAllAndWarns) {
  const auto labels = LabelSet::semeval();
  auto data = synthetic_sentences(labels, 10, 4, "all");
  std::vector<LabeledSample> trimmed;
  std::size_t ce = 0;
  for (const auto& s : data)
    if (s.gold.name != "Cause-Effect" || ce++ < 3) trimmed.push_back(s);
  std::vector<std::string> warned;
  const auto s = sample_kshot_sentence(trimmed, 5, 1, Logger([&](auto, auto ev, const auto&) {
                                         warned.emplace_back(ev);
                                       }));
  EXPECT_EQ(s.size(), 9 * 5 + 3u);
  EXPECT_EQ(warned, std::vector<std::string>{"kshot.shortfall"});
}

TEST(KshotDocument, DocredReferenceArithmetic) {
  // 5-shot reference split: 38 documents, 481 triplets, 96 relation labels.
  EXPECT_GT(481.0 / 96.0, 5.0);
  EXPECT_NEAR(481.0 / 96.0, 5.01, 0.005);
}

TEST(KshotDocument, HandReplayedSixDocCorpus) {
  // Every label pair twice: whichever document comes first, a later one
  // carries the label it left unfinished, and two kept documents give q = 4/3.
  const std::vector<Document> docs = {doc_with("d0", {"r1", "r2"}), doc_with("d1", {"r2", "r3"}),
                                      doc_with("d2", {"r1", "r3"}), doc_with("d3", {"r2", "r1"}),
                                      doc_with("d4", {"r3", "r2"}), doc_with("d5", {"r3", "r1"})};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = sample_kshot_document(docs, 1, 3, seed);
    ASSERT_FALSE(r.exhausted);
    std::size_t triplets = 0;
    for (const auto& d : r.docs) triplets += d.triplets.size();
    EXPECT_DOUBLE_EQ(r.q, triplets / 3.0);
    EXPECT_GT(r.q, 1.0);
    expect_admission_property(r, 1);
    EXPECT_EQ(r.docs.size(), 2u);
    // Stops at the first kept document that pushes q past k.
    EXPECT_LE((triplets - r.docs.back().triplets.size()) / 3.0, 1.0);
  }
}

TEST(KshotDocument, SyntheticCorpusStopRule) {
  const auto docs = synthetic_documents(400, 3, "doc");
  const auto rel = synthetic_relations();
  const std::size_t types = rel.size() - rel.negatives().size();
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (std::size_t k : {1u, 3u, 5u}) {
      const auto r = sample_kshot_document(docs, k, types, seed);
      expect_admission_property(r, k);
      // With k = 1 the corpus can run dry once every type has one triplet
      // and the total is still k * |R|; larger k always overshoots here.
      if (k > 1) EXPECT_FALSE(r.exhausted) << "seed " << seed << " k " << k;
      if (!r.exhausted) EXPECT_GT(r.q, static_cast<double>(k));
    }
}

TEST(KshotDocument, KZeroAdmitsNothingAndExhausts) {
  const auto docs = synthetic_documents(10, 3, "doc");
  std::vector<std::string> warned;
  const auto r = sample_kshot_document(docs, 0, 6, 1, Logger([&](auto, auto ev, const auto&) {
                                         warned.emplace_back(ev);
                                       }));
  EXPECT_TRUE(r.docs.empty());
  EXPECT_TRUE(r.exhausted);
  EXPECT_EQ(r.draws, 10u);
  EXPECT_EQ(warned, std::vector<std::string>{"kshot.corpus_exhausted"});
}

TEST(ErrorMatrix, CountsOffDiagonalOnly) {
  const std::vector<GoldPred> correct = {{L("A"), L("A")}, {L("B"), L("B")}};
  EXPECT_EQ(error_matrix(correct).total(), 0u);

  const std::vector<GoldPred> gp = {{L("Entity-Destination"), L("Content-Container")},
                                    {L("Entity-Destination"), L("Content-Container")},
                                    {L("Entity-Origin"), L("Product-Producer")},
                                    {L("Other"), L("Other")}};
  const auto m = error_matrix(gp);
  EXPECT_EQ(m.at("Entity-Destination", "Content-Container"), 2u);
  EXPECT_EQ(m.at("Entity-Origin", "Product-Producer"), 1u);
  EXPECT_EQ(m.total(), 3u);
  EXPECT_EQ(m.row_sum("Entity-Destination"), 2u);
  const auto worst = m.worst(1);
  ASSERT_EQ(worst.size(), 1u);
  EXPECT_EQ(worst[0].gold, "Entity-Destination");
  const std::string csv = m.to_csv(LabelSet::semeval());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(ErrorMatrix, RowSumsMatchFalseNegatives) {
  std::mt19937_64 rng(2);
  const std::vector<std::string> names = {"A", "B", "C"};
  std::vector<GoldPred> gp;
  for (int i = 0; i < 200; ++i) gp.push_back({L(names[rng() % 3]), L(names[rng() % 3])});
  const auto m = error_matrix(gp);
  // No negatives: every error is one FN for its gold row.
  std::size_t rows = 0;
  for (const auto& n : names) rows += m.row_sum(n);
  EXPECT_EQ(rows, count_f1(gp, {}).fn);
}

TEST(Efficiency, NoCorrections) {
  std::vector<CallRecord> log;
  for (int i = 0; i < 4; ++i) log.push_back({Phase::InitialGeneration, "s" + std::to_string(i), true, true, 0, 0, -1, 0.5});
  const auto r = efficiency_report(log);
  EXPECT_EQ(r.correction_seconds, 0.0);
  EXPECT_EQ(r.corrected_fraction, 0.0);
  EXPECT_DOUBLE_EQ(r.initial_generation_seconds, 2.0);
  EXPECT_EQ(r.llm_calls, 4u);
}

TEST(Efficiency, EveryoneCorrectedOnce) {
  std::vector<CallRecord> log;
  for (int i = 0; i < 5; ++i) {
    log.push_back({Phase::InitialGeneration, "s" + std::to_string(i), true, true, 0, 0, -1, 0.1});
    log.push_back({Phase::Correction, "s" + std::to_string(i), true, true, 0, 0, -1, 0.2});
  }
  log.push_back({Phase::PreInference, "", false, true, 0, 0, -1, 3.0});
  const auto r = efficiency_report(log);
  EXPECT_EQ(r.llm_calls, 10u);
  EXPECT_DOUBLE_EQ(r.corrected_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.pre_inference_seconds, 3.0);
  const auto j = r.to_json();
  for (auto key : {"pre_inference_seconds", "initial_generation_seconds", "correction_seconds", "llm_calls",
                   "corrected_fraction"})
    EXPECT_TRUE(j.contains(key)) << key;
}
