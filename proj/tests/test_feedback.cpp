#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "srvf/feedback.hpp"
#include "srvf/features.hpp"
#include "srvf/hash.hpp"
#include "srvf/kernels.hpp"
#include "srvf/mock_backend.hpp"
#include "srvf/synthetic.hpp"

using namespace srvf;
using srvf::testing::ScriptedBackend;
using srvf::testing::TempDir;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

EncoderConfig enc(std::size_t dim, std::size_t space = 1 << 16) {
  EncoderConfig c;
  c.dim = dim;
  c.feature_space = space;
  return c;
}

// Points every feature column of `text` at `v`, so embed(text) == v / |v|.
void pin(SupervisorModel& m, const std::string& text, const std::vector<double>& v) {
  for (auto c : featurize(m.config(), text).index) {
    auto col = m.mutable_column(c);
    std::copy(v.begin(), v.end(), col.begin());
  }
}

LabeledSample abstract_sample(const std::string& id, const std::string& gold) {
  return {id, "x y", "x", "y", RelationLabel{gold}};
}
Rationale ub(const std::string& s, const std::string& t, const std::string& y) {
  return {s, t, RelationLabel{y}, RationaleKind::Unbiased, RationaleSource::LGI};
}
Rationale bi(const std::string& s, const std::string& t, const std::string& y) {
  return {s, t, RelationLabel{y}, RationaleKind::Biased, RationaleSource::DI};
}

std::string word(std::mt19937_64& rng) {
  static const std::vector<std::string> w = {"key", "phrase", "implies", "content", "box",
                                             "stored", "maker", "cars", "data", "study",
                                             "derived", "member", "bunch", "flowers", "cause"};
  return w[rng() % w.size()];
}

std::string sentence(std::mt19937_64& rng, int n = 5) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + word(rng);
  return s;
}

// Random store over labels A..E; golds random; anchors up to `max_anchors`.
RationaleStore random_store(std::mt19937_64& rng, std::size_t max_anchors) {
  const std::vector<std::string> L = {"A", "B", "C", "D", "E"};
  RationaleStore s;
  const std::size_t samples = 1 + rng() % 30;
  for (std::size_t i = 0; i < samples; ++i) s.add_sample(abstract_sample("s" + std::to_string(i), L[rng() % L.size()]));
  const std::size_t target = 1 + rng() % max_anchors;
  for (std::size_t tries = 0; s.rationale_count() < target && tries < 10 * target; ++tries) {
    const auto& smp = s.samples()[rng() % samples];
    if (rng() % 2) {
      s.add_rationale(ub(smp.id, sentence(rng), smp.gold.name));
    } else {
      const auto& y = L[rng() % L.size()];
      if (y != smp.gold.name) s.add_rationale(bi(smp.id, sentence(rng), y));
    }
  }
  return s;
}

}  // namespace

// ---- verification -------------------------------------------------------------

TEST(Verify, HandBuiltMargins) {
  SupervisorModel m(enc(2), kDefaultTau);
  pin(m, "qqq", {1.0, 0.0});
  pin(m, "bbb", {0.9, std::sqrt(1 - 0.81)});
  pin(m, "uuu", {0.7, std::sqrt(1 - 0.49)});
  RationaleStore s;
  s.add_sample(abstract_sample("s1", "A"));
  s.add_sample(abstract_sample("s2", "B"));
  s.add_rationale(bi("s1", "bbb", "B"));
  s.add_rationale(ub("s2", "uuu", "B"));
  const auto index = AnchorIndex::build(m, s);
  const auto v = verify(m, index, "qqq", RelationLabel{"B"});
  EXPECT_NEAR(v.p_b, 0.2, 1e-12);
  EXPECT_EQ(v.verdict, Verdict::Biased);
}

TEST(Verify, EdgeRules) {
  SupervisorModel m(enc(2), kDefaultTau);
  pin(m, "qqq", {1.0, 0.0});
  pin(m, "ppp", {0.0, 1.0});
  RationaleStore s;
  s.add_sample(abstract_sample("s1", "A"));
  s.add_sample(abstract_sample("s2", "B"));
  s.add_rationale(ub("s1", "ppp", "A"));   // A: unbiased only
  s.add_rationale(bi("s1", "ppp", "C"));   // C: biased only
  s.add_rationale(bi("s2", "ppp", "D"));   // D: tie
  s.add_rationale(ub("s2", "ppp", "B"));
  s.add_sample(abstract_sample("s3", "D"));
  s.add_rationale(ub("s3", "ppp", "D"));
  const auto index = AnchorIndex::build(m, s);

  const auto a = verify(m, index, "qqq", RelationLabel{"A"});
  EXPECT_EQ(a.p_b, -kInf);
  EXPECT_EQ(a.verdict, Verdict::Unbiased);
  const auto c = verify(m, index, "qqq", RelationLabel{"C"});
  EXPECT_EQ(c.p_b, kInf);
  EXPECT_EQ(c.verdict, Verdict::Biased);
  const auto d = verify(m, index, "qqq", RelationLabel{"D"});
  EXPECT_EQ(d.p_b, 0.0);
  EXPECT_EQ(d.verdict, Verdict::Unbiased);
  const auto z = verify(m, index, "qqq", RelationLabel{"Z"});
  EXPECT_FALSE(index.in_universe(RelationLabel{"Z"}));
  EXPECT_EQ(z.verdict, Verdict::Biased);
}

TEST(Verify, IndexGroupsExactlyByPredictedLabel) {
  std::mt19937_64 rng(4);
  SupervisorModel m(enc(16), kDefaultTau, 3);
  const auto s = random_store(rng, 60);
  const auto index = AnchorIndex::build(m, s);
  for (const auto& name : {"A", "B", "C", "D", "E"}) {
    const RelationLabel y{name};
    std::vector<Rationale> want_b, want_u;
    for (const auto& r : s.biased()) if (r.predicted == y) want_b.push_back(r);
    for (const auto& r : s.unbiased()) if (r.predicted == y) want_u.push_back(r);
    EXPECT_EQ(index.biased(y).rationales, want_b);
    EXPECT_EQ(index.unbiased(y).rationales, want_u);
  }
}

TEST(Verify, MatchesBruteForceExactly) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    SupervisorModel m(enc(8 + rng() % 24), kDefaultTau, rng());
    const auto s = random_store(rng, 100);
    const auto index = AnchorIndex::build(m, s);
    for (int q = 0; q < 10; ++q) {
      const std::string r = sentence(rng);
      const RelationLabel y{std::string(1, static_cast<char>('A' + rng() % 6))};
      const auto v = verify(m, index, r, y);
      const double want = oracle::brute_force_pb(m, s, m.embed(r), y);
      EXPECT_EQ(v.p_b, want);
      EXPECT_EQ(v.verdict == Verdict::Biased, want > 0.0);
      EXPECT_EQ(verify(m, index, r, y).p_b, v.p_b);
    }
  }
}

// ---- retrieval --------------------------------------------------------------------

TEST(TopK, WorkedTieExample) {
  const std::vector<double> sims = {0.9, 0.9, 0.5, 0.2, 0.1};
  EXPECT_EQ(top_k_indices(sims, 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(top_k_indices(sims, 1), (std::vector<std::size_t>{0}));
  EXPECT_EQ(top_k_indices(sims, 9).size(), 5u);
}

TEST(TopK, MatchesStableSortWithTies) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 60);
    for (auto& x : v) x = static_cast<double>(rng() % 5) / 4.0 - 0.5;
    const std::size_t k = 1 + rng() % 10;
    EXPECT_EQ(top_k_indices(v, k), oracle::stable_sorted_topk(v, k));
  }
}

TEST(RetrieveFeedback, SizeBoundsAndGoldLabels) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    SupervisorModel m(enc(16), kDefaultTau, rng());
    const auto s = random_store(rng, 80);
    const auto index = AnchorIndex::build(m, s);
    LoopConfig cfg;
    cfg.k = 1 + rng() % 6;
    cfg.feedback_demo_count = 1 + rng() % 4;
    for (const auto& name : {"A", "B", "C", "D", "E"}) {
      const RelationLabel y{name};
      if (index.biased(y).size() == 0) {
        EXPECT_THROW(retrieve_feedback(m, index, "key phrase", y, cfg), NoAnchors);
        continue;
      }
      const auto d = retrieve_feedback(m, index, "key phrase", y, cfg);
      EXPECT_LE(d.size(), std::min({cfg.k, index.biased(y).size(), cfg.feedback_demo_count}));
      std::set<std::string> ids;
      for (const auto& demo : d) {
        EXPECT_EQ(demo.label, demo.sample.gold);
        EXPECT_TRUE(ids.insert(demo.sample.id).second);
        EXPECT_EQ(demo.rationale_text, s.unbiased_for(demo.sample.id)->text);
      }
    }
  }
}

TEST(RetrieveFeedback, KOneGivesMostSimilarAnchorSource) {
  SupervisorModel m(enc(2), kDefaultTau);
  pin(m, "qqq", {1.0, 0.0});
  pin(m, "near", {0.8, 0.6});
  pin(m, "far", {0.0, 1.0});
  RationaleStore s;
  for (auto id : {"s1", "s2"}) {
    s.add_sample(abstract_sample(id, "A"));
    s.add_rationale(ub(id, std::string("why ") + id, "A"));
  }
  s.add_rationale(bi("s1", "far", "B"));
  s.add_rationale(bi("s2", "near", "B"));
  const auto index = AnchorIndex::build(m, s);
  LoopConfig cfg;
  cfg.k = 1;
  const auto d = retrieve_feedback(m, index, "qqq", RelationLabel{"B"}, cfg);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].sample.id, "s2");
  EXPECT_EQ(d[0].label.name, "A");
}

// ---- the loop --------------------------------------------------------------------------

namespace {

struct LoopFixture {
  LabelSet labels = LabelSet::semeval();
  LabeledSample test{"t1", "the letter was sent into the mailbox", "letter", "mailbox",
                     LabelSet::semeval().at("Entity-Destination")};
  LabeledSample ed{"ed", "the ball was thrown into the basket", "ball", "basket",
                   LabelSet::semeval().at("Entity-Destination")};
  LabeledSample other{"ot", "the man saw a tree", "man", "tree", LabelSet::semeval().at("Other")};
  RationaleStore store;
  SupervisorModel model{enc(32), kDefaultTau, 1};

  LoopFixture() {
    store.add_sample(ed);
    store.add_sample(other);
    store.add_rationale({"ed", "the ball moves into the basket", ed.gold, RationaleKind::Unbiased, RationaleSource::LGI});
    store.add_rationale({"ot", "no relation between man and tree", other.gold, RationaleKind::Unbiased, RationaleSource::LGI});
    // Content-Container has biased anchors only, so it is always flagged.
    store.add_rationale({"ed", "a ball and a basket usually hold things",
                         labels.at("Content-Container"), RationaleKind::Biased, RationaleSource::DI});
  }
};

}  // namespace

TEST(Loop, ImmediateUnbiasedUsesOneCall) {
  LoopFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  ScriptedBackend b([](std::string_view, const CallContext&, std::size_t) -> std::string {
    return "Reasoning Explanations: the letter goes into the mailbox\nPrediction: \"Entity-Destination\"";
  });
  const auto p = predict_with_feedback(f.test, b, f.model, index, {}, f.labels, {}, {5});
  EXPECT_EQ(p.llm_calls, 1u);
  EXPECT_EQ(p.iterations_used, 0u);
  EXPECT_EQ(b.calls(), 1u);
  EXPECT_EQ(p.label.name, "Entity-Destination");
  ASSERT_EQ(p.p_b_trace.size(), 1u);
  EXPECT_EQ(p.p_b_trace[0], -kInf);
}

TEST(Loop, FullSteeringCorrectsInOneRound) {
  LoopFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  BiasModel bias;
  bias.confusion["Entity-Destination"] = {"Content-Container", 1.0};
  bias.steering_strength = 1.0;
  MockBackend b(f.labels, bias);
  b.register_samples({f.test, f.ed, f.other});
  const std::vector<Demonstration> init = {make_demonstration(f.other, "no relation between man and tree")};
  const auto p = predict_with_feedback(f.test, b, f.model, index, init, f.labels, {}, {5});
  EXPECT_EQ(p.label.name, "Entity-Destination");
  EXPECT_EQ(p.iterations_used, 1u);
  EXPECT_EQ(p.llm_calls, 2u);
  ASSERT_EQ(p.p_b_trace.size(), 2u);
  EXPECT_EQ(p.p_b_trace[0], kInf);
}

TEST(Loop, BudgetAndMinPbFallback) {
  LoopFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  // Always the flagged label, with varying text so no fixed point is hit.
  ScriptedBackend b([](std::string_view, const CallContext&, std::size_t n) {
    return "Reasoning Explanations: holds things " + std::to_string(n) +
           "\nPrediction: \"Content-Container\"";
  });
  for (std::size_t m = 1; m <= 5; ++m) {
    LoopConfig cfg;
    cfg.max_iters = m;
    const std::size_t before = b.calls();
    const auto p = predict_with_feedback(f.test, b, f.model, index, {}, f.labels, cfg, {5});
    EXPECT_LE(p.llm_calls, 1 + m);
    EXPECT_EQ(b.calls() - before, p.llm_calls);
    EXPECT_EQ(p.label.name, "Content-Container");
  }
}

TEST(Loop, FixedPointShortCircuits) {
  LoopFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  ScriptedBackend b([](std::string_view, const CallContext&, std::size_t) -> std::string {
    return "Reasoning Explanations: holds things\nPrediction: \"Content-Container\"";
  });
  const auto p = predict_with_feedback(f.test, b, f.model, index, {}, f.labels, {}, {5});
  // Iteration 1 retrieves the same feedback as iteration 0 for the same label.
  EXPECT_EQ(p.llm_calls, 2u);
}

TEST(Loop, BackendFailureUsesBudgetAndFallsBack) {
  LoopFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  ScriptedBackend b([](std::string_view, const CallContext&, std::size_t) -> std::string {
    throw BackendError("down");
  });
  LoopConfig cfg;
  cfg.max_iters = 3;
  const auto p = predict_with_feedback(f.test, b, f.model, index, {}, f.labels, cfg, {5});
  EXPECT_EQ(p.llm_calls, 4u);
  EXPECT_EQ(p.label.name, "Other");
  EXPECT_EQ(p.rationale_text, kUnparseableRationale);
}

TEST(LoopConfig, Validation) {
  LoopConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.k = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.feedback_demo_count = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

// ---- self-consistency ---------------------------------------------------------------

TEST(MajorityVote, Examples) {
  const RelationLabel A{"A"}, B{"B"};
  EXPECT_EQ(majority_vote({A, B, A, A, A}), A);
  EXPECT_EQ(majority_vote({A, B, A, B}), A);
  EXPECT_EQ(majority_vote({B, A, A, B}), B);
  EXPECT_EQ(majority_vote({B}), B);
  EXPECT_THROW(majority_vote({}), Error);
}

TEST(SelfConsistency, VotesOverParsedGenerations) {
  const auto labels = LabelSet::semeval();
  const std::vector<std::string> answers = {"Cause-Effect", "", "Other", "Other", "Cause-Effect", "Cause-Effect"};
  ScriptedBackend b([&](std::string_view, const CallContext& ctx, std::size_t) -> std::string {
    // Generation i answers answers[i]; the empty one never parses.
    for (std::size_t i = 0; i < 5; ++i)
      if (ctx.seed == derive_seed(derive_seed(3, "self-consistency", i), "reparse") ||
          ctx.seed == derive_seed(3, "self-consistency", i)) {
        if (answers[i].empty()) return "";
        return "Reasoning Explanations: r\nPrediction: \"" + answers[i] + "\"";
      }
    return "";
  });
  PromptSpec spec;
  spec.labels = labels;
  spec.inference_sample = srvf::testing::sample("q", "a b", "a", "b", "Other");
  const auto p = self_consistency(b, spec, 5, {3});
  // Votes: CE, Other, Other, CE -> tie, CE occurs first.
  EXPECT_EQ(p.label.name, "Cause-Effect");

  ScriptedBackend none([](std::string_view, const CallContext&, std::size_t) -> std::string { return ""; });
  EXPECT_EQ(self_consistency(none, spec, 3, {3}).label.name, "Other");
  ScriptedBackend one([](std::string_view, const CallContext&, std::size_t) -> std::string {
    return "Reasoning Explanations: r\nPrediction: \"Message-Topic\"";
  });
  EXPECT_EQ(self_consistency(one, spec, 1, {3}).label.name, "Message-Topic");
  EXPECT_EQ(one.calls(), 1u);
}

// ---- demonstrations ---------------------------------------------------------------

TEST(DemoSelector, RandomIsSeededSubset) {
  const auto labels = LabelSet::semeval();
  std::vector<Demonstration> pool;
  for (const auto& s : synthetic_sentences(labels, 3, 1, "p")) pool.push_back(make_demonstration(s, "r"));
  DemoSelector sel(pool, 4, InitDemoStrategy::Random);
  const auto q = srvf::testing::sample("q", "a b", "a", "b", "Other");
  const auto a = sel.select(q, 1), b = sel.select(q, 1);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].sample.id, b[i].sample.id);
}

TEST(DemoSelector, SimcseLikePicksNearestSentences) {
  const auto labels = LabelSet::semeval();
  SupervisorModel m(enc(64), kDefaultTau, 2);
  std::vector<Demonstration> pool;
  for (const auto& s : synthetic_sentences(labels, 2, 3, "p")) pool.push_back(make_demonstration(s, "r"));
  DemoSelector sel(pool, 3, InitDemoStrategy::SimcseLike, &m);
  const auto& target = pool[5].sample;
  LabeledSample q = target;
  q.id = "query";
  const auto chosen = sel.select(q, 0);
  ASSERT_EQ(chosen.size(), 3u);
  EXPECT_EQ(chosen[0].sample.id, target.id);
}

TEST(DemoSelector, FileStrategyUsesListedIds) {
  TempDir dir;
  const auto labels = LabelSet::semeval();
  std::vector<Demonstration> pool;
  for (const auto& s : synthetic_sentences(labels, 1, 3, "p")) pool.push_back(make_demonstration(s, "r"));
  write_file(dir / "demos.json", R"({"q": ["p-3", "p-1"]})");
  DemoSelector sel(pool, 10, InitDemoStrategy::File, nullptr, load_demo_file(dir / "demos.json"));
  const auto chosen = sel.select(srvf::testing::sample("q", "a b", "a", "b", "Other"), 0);
  ASSERT_EQ(chosen.size(), 2u);
  EXPECT_EQ(chosen[0].sample.id, "p-3");
  EXPECT_EQ(chosen[1].sample.id, "p-1");
  EXPECT_EQ(parse_init_demo_strategy("simcse-like"), InitDemoStrategy::SimcseLike);
  EXPECT_THROW(parse_init_demo_strategy("nearest"), ConfigError);
}

TEST(Predictions, JsonlRoundTripWithInfinities) {
  TempDir dir;
  Prediction p;
  p.sample_id = "s1";
  p.label = LabelSet::semeval().at("Other");
  p.rationale_text = "r";
  p.p_b_trace = {kInf, 0.25, -kInf};
  p.iterations_used = 2;
  p.llm_calls = 3;
  save_predictions(dir / "p.jsonl", {p});
  const auto loaded = load_predictions(dir / "p.jsonl", LabelSet::semeval());
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].p_b_trace, p.p_b_trace);
  EXPECT_EQ(loaded[0].llm_calls, 3u);
  EXPECT_NE(format_predictions({p}).find("\"inf\""), std::string::npos);
}

// ---- documents ---------------------------------------------------------------------------

namespace {

struct DocFixture {
  LabelSet rel = synthetic_relations();
  SupervisorModel model{enc(32), kDefaultTau, 4};
  RationaleStore store;
  Document doc{"d1", "Alice works for Acme in Paris.", {"Alice", "Acme", "Paris"}, {}};
  std::vector<Document> demos = synthetic_documents(3, 5, "demo");

  DocFixture() {
    store.add_sample({"a1", "x y", "x", "y", RelationLabel{"located_in"}});
    store.add_rationale({"a1", "x is located in y", RelationLabel{"located_in"}, RationaleKind::Unbiased, RationaleSource::LGI});
    // employer has only biased anchors.
    store.add_rationale({"a1", "x and y look like staff", RelationLabel{"employer"}, RationaleKind::Biased, RationaleSource::DI});
  }

  static std::string triplet(const std::string& h, const std::string& r, const std::string& t) {
    return format_triplet(Triplet{h, RelationLabel{r}, t, h + " " + r + " " + t});
  }
};

bool is_pair_prompt(std::string_view p) { return p.find("Candidate Entities") != std::string_view::npos &&
                                                  p.find("triplets that correspond") == std::string_view::npos; }

}  // namespace

TEST(Documents, AllUnbiasedTakesOneRound) {
  DocFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  ScriptedBackend b([](std::string_view p, const CallContext&, std::size_t) {
    if (is_pair_prompt(p)) return format_pair({"Acme", "Paris"});
    return DocFixture::triplet("Acme", "located_in", "Paris");
  });
  const auto out = predict_document(f.doc, b, f.model, index, f.demos, 0, f.rel, {}, {1});
  EXPECT_EQ(out.rounds, 1u);
  EXPECT_EQ(out.llm_calls, 2u);
  ASSERT_EQ(out.triplets.size(), 1u);
  EXPECT_EQ(out.triplets[0].relation.name, "located_in");
}

TEST(Documents, RepeatedTripletKeptOnce) {
  DocFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  ScriptedBackend b([](std::string_view p, const CallContext&, std::size_t) {
    if (is_pair_prompt(p)) return format_pair({"Acme", "Paris"}) + format_pair({"Alice", "Acme"});
    return DocFixture::triplet("Acme", "located_in", "Paris") + "\n" +
           DocFixture::triplet("Alice", "employer", "Acme");
  });
  LoopConfig cfg;
  cfg.max_iters = 3;
  const auto out = predict_document(f.doc, b, f.model, index, f.demos, 0, f.rel, cfg, {1});
  EXPECT_EQ(out.rounds, 3u);
  EXPECT_EQ(out.llm_calls, 6u);
  ASSERT_EQ(out.triplets.size(), 1u);
  EXPECT_EQ(out.triplets[0].head, "Acme");
}

TEST(Documents, EmptyEntitySetMakesNoCalls) {
  DocFixture f;
  const auto index = AnchorIndex::build(f.model, f.store);
  ScriptedBackend b([](std::string_view, const CallContext&, std::size_t) -> std::string { return ""; });
  Document empty = f.doc;
  empty.entities.clear();
  const auto out = predict_document(empty, b, f.model, index, f.demos, 0, f.rel, {}, {1});
  EXPECT_TRUE(out.triplets.empty());
  EXPECT_EQ(out.llm_calls, 0u);
  EXPECT_EQ(b.calls(), 0u);
}

TEST(Documents, DemoReselectionBySharedLabels) {
  const auto rel = synthetic_relations();
  auto t = [&](const std::string& r) { return Triplet{"h", rel.at(r), "t", ""}; };
  std::vector<Document> demos(3);
  demos[0].triplets = {t("located_in")};
  demos[1].triplets = {t("employer"), t("founded_by")};
  demos[2].triplets = {t("employer"), t("founded_by"), t("capital_of")};
  EXPECT_EQ(select_document_demo(demos, {t("employer"), t("founded_by")}), 1u);
  EXPECT_EQ(select_document_demo(demos, {t("capital_of")}), 2u);
  EXPECT_EQ(select_document_demo(demos, {t("member_of")}), 0u);
}

// ---- kernels --------------------------------------------------------------------------

TEST(Kernels, OpenMpMatchesSerialBitwise) {
  std::mt19937_64 rng(6);
  SupervisorModel m(EncoderConfig{}, kDefaultTau, 9);
  std::vector<SparseFeatures> f;
  for (int i = 0; i < 300; ++i) f.push_back(featurize(m.config(), sentence(rng, 8)));
  const std::size_t dim = m.dim();
  std::vector<double> a(f.size() * dim), b(f.size() * dim);
  kernels::serial::embed_batch(m, f, a);
  kernels::omp::embed_batch(m, f, b);
  EXPECT_EQ(a, b);

  std::vector<double> s1(f.size()), s2(f.size());
  std::span<const double> q(a.data(), dim);
  kernels::serial::sim_scan(q, a, dim, s1);
  kernels::omp::sim_scan(q, a, dim, s2);
  EXPECT_EQ(s1, s2);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (int i = 0; i < 1000; ++i) pairs.emplace_back(rng() % f.size(), rng() % f.size());
  std::vector<double> p1(pairs.size()), p2(pairs.size());
  kernels::serial::pair_sims(a, dim, pairs, p1);
  kernels::omp::pair_sims(a, dim, pairs, p2);
  EXPECT_EQ(p1, p2);
}

TEST(Kernels, EmbedBatchMatchesEmbed) {
  std::mt19937_64 rng(7);
  SupervisorModel m(EncoderConfig{}, kDefaultTau, 9);
  std::vector<std::string> texts;
  std::vector<SparseFeatures> f;
  for (int i = 0; i < 20; ++i) {
    texts.push_back(sentence(rng, 6));
    f.push_back(featurize(m.config(), texts.back()));
  }
  std::vector<double> out(f.size() * m.dim());
  kernels::omp::embed_batch(m, f, out);
  for (std::size_t i = 0; i < texts.size(); ++i)
    EXPECT_EQ(std::vector<double>(out.begin() + i * m.dim(), out.begin() + (i + 1) * m.dim()), m.embed(texts[i]));
}
