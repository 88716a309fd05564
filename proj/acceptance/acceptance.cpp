// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "srvf/bench.hpp"
#include "srvf/collection.hpp"
#include "srvf/eval.hpp"
#include "srvf/features.hpp"
#include "srvf/feedback.hpp"
#include "srvf/mock_backend.hpp"
#include "srvf/supervisor.hpp"
#include "srvf/synthetic.hpp"

using namespace srvf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  bool skipped = false;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

// ---- random inputs ---------------------------------------------------------------

std::string random_text(std::mt19937_64& rng, char lo = 'a', char hi = 'z', int words = 4) {
  std::string t;
  for (int w = 0; w < words; ++w) {
    if (w) t += ' ';
    const int len = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < len; ++i) t += static_cast<char>(lo + rng() % (hi - lo + 1));
  }
  return t;
}

std::string sentence(std::mt19937_64& rng) {
  static const std::vector<std::string> w = {"key", "phrase", "implies", "content", "box",
                                             "stored", "maker", "cars", "data", "study",
                                             "derived", "member", "bunch", "flowers", "cause"};
  std::string s;
  for (int i = 0; i < 5; ++i) s += (i ? " " : "") + w[rng() % w.size()];
  return s;
}

EncoderConfig encoder(std::size_t dim, std::size_t space) {
  EncoderConfig c;
  c.dim = dim;
  c.feature_space = space;
  c.ngram_min = 2;
  c.ngram_max = 3;
  return c;
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

double projected_loss(const SupervisorModel& m, const std::vector<SparseFeatures>& f,
                      const std::vector<RationalePair>& pos, const std::vector<RationalePair>& neg) {
  std::vector<std::vector<double>> e;
  for (const auto& x : f) {
    std::vector<double> v(m.dim());
    m.project(x, v);
    long double n = 0;
    for (double a : v) n += static_cast<long double>(a) * a;
    for (double& a : v) a = static_cast<double>(a / std::sqrt(n));
    e.push_back(v);
  }
  std::vector<double> ps, ns;
  for (const auto& p : pos) ps.push_back(oracle::dot(e[p.a], e[p.b]));
  for (const auto& p : neg) ns.push_back(oracle::dot(e[p.a], e[p.b]));
  return static_cast<double>(oracle::contrastive_loss(ps, ns, m.tau()));
}

// ---- criteria ----------------------------------------------------------------------

Outcome loss_oracle() {
  Outcome o;
  std::mt19937_64 rng(1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SupervisorModel m(encoder(2 + rng() % 7, 64), kDefaultTau, rng());
    PairBatch batch;
    const std::size_t n = 3 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) batch.rationales.push_back(ub("s", random_text(rng), "A"));
    const std::size_t pairs = 1 + rng() % 20;
    for (std::size_t p = 0; p < pairs; ++p) {
      auto a = static_cast<std::uint32_t>(rng() % n), b = static_cast<std::uint32_t>(rng() % n);
      ((p == 0 || rng() % 2) ? batch.pos : batch.neg).push_back({a, b, PairClass::SameGoldUnbiased});
    }
    std::vector<std::vector<double>> e;
    for (const auto& r : batch.rationales) e.push_back(m.embed(r.text));
    std::vector<double> ps, ns;
    for (const auto& p : batch.pos) ps.push_back(oracle::dot(e[p.a], e[p.b]));
    for (const auto& p : batch.neg) ns.push_back(oracle::dot(e[p.a], e[p.b]));
    const long double want = oracle::contrastive_loss(ps, ns, m.tau());
    const double got = contrastive_loss(m, batch);
    const double rel = want == 0.0L ? std::abs(got) : static_cast<double>(std::abs((got - want) / want));
    worst = std::max(worst, rel);
  }
  o.require(worst <= 1e-9, "relative error " + std::to_string(worst));
  std::ostringstream d;
  d << "max rel err " << worst;
  if (o.ok) o.detail = d.str();
  return o;
}

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(2);
  const double h = 1e-5;
  double worst = 0;
  std::size_t coords = 0;
  for (int trial = 0; trial < 10; ++trial) {
    SupervisorModel m(encoder(2 + rng() % 7, 16), kDefaultTau, rng());
    std::vector<SparseFeatures> f;
    for (int i = 0; i < 6; ++i) f.push_back(featurize(m.config(), random_text(rng, 'a', 'f', 2)));
    std::vector<RationalePair> pos, neg;
    for (int p = 0; p < 8; ++p) {
      auto a = static_cast<std::uint32_t>(rng() % 6), b = static_cast<std::uint32_t>((a + 1 + rng() % 5) % 6);
      ((p < 2 || rng() % 2) ? pos : neg).push_back({a, b, PairClass::SameGoldUnbiased});
    }
    const auto grad = contrastive_loss_grad(m, f, pos, neg);
    for (const auto& [col, g] : grad.columns)
      for (std::size_t r = 0; r < m.dim(); ++r) {
        auto c = m.mutable_column(col);
        const double orig = c[r];
        c[r] = orig + h;
        const double up = projected_loss(m, f, pos, neg);
        m.mutable_column(col)[r] = orig - h;
        const double down = projected_loss(m, f, pos, neg);
        m.mutable_column(col)[r] = orig;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(g[r]), 1e-3});
        worst = std::max(worst, std::abs(numeric - g[r]) / scale);
        ++coords;
      }
  }
  o.require(coords > 0, "no coordinates checked");
  o.require(worst <= 1e-4, "relative error " + std::to_string(worst));
  std::ostringstream d;
  d << coords << " coords, max rel err " << worst;
  if (o.ok) o.detail = d.str();
  return o;
}

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

void pin(SupervisorModel& m, const std::string& text, const std::vector<double>& v) {
  for (auto c : featurize(m.config(), text).index) {
    auto col = m.mutable_column(c);
    std::copy(v.begin(), v.end(), col.begin());
  }
}

Outcome verification() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::size_t queries = 0;
  for (int trial = 0; trial < 50; ++trial) {
    EncoderConfig c;
    c.dim = 8 + rng() % 24;
    SupervisorModel m(c, kDefaultTau, rng());
    const auto s = random_store(rng, 100);
    const auto index = AnchorIndex::build(m, s);
    for (int q = 0; q < 10; ++q, ++queries) {
      const std::string r = sentence(rng);
      const RelationLabel y{std::string(1, static_cast<char>('A' + rng() % 6))};
      const auto v = verify(m, index, r, y);
      const double want = oracle::brute_force_pb(m, s, m.embed(r), y);
      o.require(v.p_b == want || (std::isnan(v.p_b) && std::isnan(want)),
                "store " + std::to_string(trial) + ": p_b " + std::to_string(v.p_b) + " vs " + std::to_string(want));
      o.require((v.verdict == Verdict::Biased) == (want > 0.0), "verdict disagrees with p_b > 0");
    }
  }

  // Edge rules on a hand-built two-dimensional model.
  const double inf = std::numeric_limits<double>::infinity();
  EncoderConfig c;
  c.dim = 2;
  SupervisorModel m(c, kDefaultTau);
  pin(m, "qqq", {1.0, 0.0});
  pin(m, "ppp", {0.0, 1.0});
  RationaleStore s;
  s.add_sample(abstract_sample("s1", "A"));
  s.add_sample(abstract_sample("s2", "B"));
  s.add_sample(abstract_sample("s3", "D"));
  s.add_rationale(ub("s1", "ppp", "A"));
  s.add_rationale(bi("s1", "ppp", "C"));
  s.add_rationale(bi("s2", "ppp", "D"));
  s.add_rationale(ub("s3", "ppp", "D"));
  const auto index = AnchorIndex::build(m, s);
  const auto a = verify(m, index, "qqq", RelationLabel{"A"});
  o.require(a.p_b == -inf && a.verdict == Verdict::Unbiased, "empty biased set should give -inf, unbiased");
  const auto cc = verify(m, index, "qqq", RelationLabel{"C"});
  o.require(cc.p_b == inf && cc.verdict == Verdict::Biased, "empty unbiased set should give +inf, biased");
  const auto d = verify(m, index, "qqq", RelationLabel{"D"});
  o.require(d.p_b == 0.0 && d.verdict == Verdict::Unbiased, "p_b = 0 should be unbiased");
  const auto z = verify(m, index, "qqq", RelationLabel{"Z"});
  o.require(z.verdict == Verdict::Biased, "label outside the universe should be biased");
  if (o.ok) o.detail = std::to_string(queries) + " queries exact, edge rules hold";
  return o;
}

Outcome retrieval() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::size_t tied = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng() % 60);
    for (auto& x : v) x = static_cast<double>(rng() % 5) / 4.0 - 0.5;
    std::set<double> distinct(v.begin(), v.end());
    tied += distinct.size() < v.size();
    const std::size_t k = 1 + rng() % 10;
    o.require(top_k_indices(v, k) == oracle::stable_sorted_topk(v, k), "set " + std::to_string(trial));
  }
  o.require(top_k_indices(std::vector<double>{0.9, 0.9, 0.5, 0.2, 0.1}, 3) == std::vector<std::size_t>{0, 1, 2},
            "worked tie example");
  if (o.ok) o.detail = "50 sets, " + std::to_string(tied) + " with ties";
  return o;
}

Outcome pair_classes() {
  Outcome o;
  const std::vector<std::string> L = {"A", "B", "C"};
  std::size_t stores = 0;
  // Three samples: each has an optional unbiased rationale and any subset of
  // its two wrong labels as biased rationales.
  for (int golds = 0; golds < 27; ++golds)
    for (int state = 0; state < 512; ++state) {
      RationaleStore s;
      int g = golds, st = state;
      for (int i = 0; i < 3; ++i, g /= 3, st /= 8) {
        const std::string id = "s" + std::to_string(i);
        const std::string gold = L[g % 3];
        s.add_sample(abstract_sample(id, gold));
        if (st & 1) s.add_rationale(ub(id, "u" + id, gold));
        int bit = 1;
        for (const auto& w : L) {
          if (w == gold) continue;
          bit <<= 1;
          if (st & bit) s.add_rationale(bi(id, "b" + id + w, w));
        }
      }
      if (oracle::entries_of(build_pairs(s)) != oracle::brute_force_pairs(s)) {
        o.require(false, "exhaustive store golds=" + std::to_string(golds) + " state=" + std::to_string(state));
        return o;
      }
      ++stores;
    }
  std::mt19937_64 rng(5);
  const std::vector<std::string> L4 = {"A", "B", "C", "D"};
  for (int trial = 0; trial < 2000; ++trial) {
    RationaleStore s;
    const int samples = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < samples; ++i) s.add_sample(abstract_sample("s" + std::to_string(i), L4[rng() % 4]));
    const std::size_t target = 1 + rng() % 12;
    while (s.rationale_count() < target) {
      const auto& smp = s.samples()[rng() % s.samples().size()];
      const std::string text = "t" + std::to_string(rng() % 3);
      if (rng() % 2) {
        s.add_rationale(ub(smp.id, text, smp.gold.name));
      } else {
        const std::string w = L4[rng() % 4];
        if (w != smp.gold.name) s.add_rationale(bi(smp.id, text, w));
      }
    }
    if (oracle::entries_of(build_pairs(s)) != oracle::brute_force_pairs(s)) {
      o.require(false, "random store " + std::to_string(trial));
      return o;
    }
    ++stores;
  }
  o.detail = std::to_string(stores) + " stores";
  return o;
}

Outcome metrics() {
  Outcome o;
  const RelationLabel A{"A"}, B{"B"}, other{"Other", true};
  o.require(micro_f1({{A, A}, {other, B}, {B, other}}, {other}) == 0.5, "hand-derived 0.5 case");
  std::mt19937_64 rng(6);
  const std::vector<std::string> names = {"A", "B", "C", "Other", "no_relation"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GoldPred> gp;
    std::vector<std::pair<std::string, std::string>> raw;
    const std::size_t n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = names[rng() % names.size()], p = names[rng() % names.size()];
      gp.push_back({RelationLabel{g}, RelationLabel{p}});
      raw.push_back({g, p});
    }
    o.require(micro_f1(gp, {RelationLabel{"Other"}, RelationLabel{"no_relation"}}) ==
                  oracle::f1_by_counting(raw, {"Other", "no_relation"}),
              "random case " + std::to_string(trial));
  }
  o.require(majority_vote({A, B, A, A, A}) == A, "majority vote {A,B,A,A,A}");
  if (o.ok) o.detail = "0.5 case, 20 random cases, vote -> A";
  return o;
}

Outcome samplers() {
  Outcome o;
  const auto labels = LabelSet::semeval();
  const auto data = synthetic_sentences(labels, 30, 7, "all");
  for (std::size_t k : {5u, 10u}) {
    const auto s = sample_kshot_sentence(data, k, 7);
    o.require(s.size() == 10 * k, "sentence sampler size " + std::to_string(s.size()) + " for k=" + std::to_string(k));
    std::map<std::string, std::size_t> per;
    for (const auto& x : s) ++per[x.gold.name];
    for (const auto& [_, c] : per) o.require(c == k, "unbalanced label count");
  }

  const auto docs = synthetic_documents(400, 7, "doc");
  const auto rel = synthetic_relations();
  const std::size_t types = rel.size() - rel.negatives().size();
  const std::size_t k = 5;
  double min_q = 1e9;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = sample_kshot_document(docs, k, types, seed);
    o.require(!r.exhausted, "corpus exhausted at seed " + std::to_string(seed));
    o.require(r.q > static_cast<double>(k), "final q <= k at seed " + std::to_string(seed));
    min_q = std::min(min_q, r.q);
    std::map<std::string, std::size_t> count;
    for (const auto& d : r.docs) {
      bool unfinished = false;
      for (const auto& t : d.triplets) unfinished |= count[t.relation.name] < k;
      o.require(unfinished, "admitted " + d.id + " with only finished labels");
      for (const auto& t : d.triplets) ++count[t.relation.name];
    }
  }
  if (o.ok) o.detail = "10k sentences for k=5,10; 20 document draws, min q " + std::to_string(min_q);
  return o;
}

fs::path fixture_config() { return fs::path(SRVF_FIXTURE_DIR) / "synthetic" / "bench.json"; }

struct BenchRun {
  EvalReport report;
  BenchConfig cfg;
};

BenchRun run_fixture_bench(const fs::path& out_dir) {
  BenchRun r;
  r.cfg = BenchConfig::from_json(nlohmann::json::parse(read_file(fixture_config())), fixture_config().parent_path());
  r.cfg.out_dir = out_dir;
  r.report = run_benchmark(r.cfg);
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("srvf_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Outcome end_to_end() {
  Outcome o;
  const BenchRun run = run_fixture_bench(scratch() / "a");
  const auto& cfg = run.cfg;
  const BiasModel want_bias = synthetic_bias(0.4, 0.8);
  o.require(cfg.bias.confusion.size() == 3, "fixture must confuse three label pairs");
  for (const auto& [gold, c] : want_bias.confusion) {
    auto it = cfg.bias.confusion.find(gold);
    o.require(it != cfg.bias.confusion.end() && it->second.confused == c.confused && it->second.probability == 0.4,
              "fixture confusion for " + gold);
  }
  o.require(cfg.bias.steering_strength == 0.8, "fixture steering strength");
  o.require(run.report.train_size == 200, "train size " + std::to_string(run.report.train_size));
  o.require(run.report.test_size == 500, "test size " + std::to_string(run.report.test_size));
  o.require(cfg.loop.max_iters == 5 && cfg.loop.k == 5, "loop must use m = 5, k = 5");
  const TrainConfig defaults;
  o.require(cfg.train.epochs == defaults.epochs && cfg.train.batch_size == defaults.batch_size &&
                cfg.train.learning_rate == defaults.learning_rate && cfg.train.tau == defaults.tau,
            "supervisor must train with defaults");
  const MethodResult* icl = run.report.find("icl");
  const MethodResult* srvf = run.report.find("srvf");
  o.require(icl && icl->ok && srvf && srvf->ok, "icl and srvf must both run");
  if (!o.ok) return o;

  std::ostringstream d;
  d.precision(4);
  d << "F1 icl " << icl->micro_f1 << " srvf " << srvf->micro_f1;
  o.require(srvf->micro_f1 >= icl->micro_f1 + 0.05, d.str());
  for (const auto& [gold, c] : want_bias.confusion) {
    const std::size_t before = icl->errors.at(gold, c.confused), after = srvf->errors.at(gold, c.confused);
    d << "; " << gold << "->" << c.confused << " " << before << "->" << after;
    o.require(before > 0, "no icl errors for " + gold);
    o.require(static_cast<double>(after) <= 0.7 * static_cast<double>(before), d.str());
  }
  if (o.ok) o.detail = d.str();
  return o;
}

Outcome separation() {
  Outcome o;
  const auto labels = LabelSet::semeval();
  const std::uint64_t seed = 20240611;
  MockBackend b(labels, synthetic_bias());
  const auto samples = synthetic_sentences(labels, 20, seed, "train");
  b.register_samples(samples);
  CollectConfig cc;
  cc.seed = seed;
  const auto store = collect(samples, b, labels, cc).store;
  TrainConfig tc;
  tc.seed = seed;
  const SupervisorModel m = train(store, tc);
  const auto batch = build_pairs(store);
  std::vector<std::vector<double>> e;
  for (const auto& r : batch.rationales) e.push_back(m.embed(r.text));
  double pos = 0, neg = 0;
  for (const auto& p : batch.pos) pos += oracle::dot(e[p.a], e[p.b]);
  for (const auto& p : batch.neg) neg += oracle::dot(e[p.a], e[p.b]);
  o.require(!batch.pos.empty() && !batch.neg.empty(), "store has no positive or negative pairs");
  if (!o.ok) return o;
  pos /= static_cast<double>(batch.pos.size());
  neg /= static_cast<double>(batch.neg.size());
  std::ostringstream d;
  d.precision(4);
  d << "pos " << pos << " neg " << neg << " gap " << pos - neg;
  o.require(pos - neg >= 0.1, d.str());
  if (o.ok) o.detail = d.str();
  return o;
}

Outcome loop_budget() {
  Outcome o;
  const BenchRun run = run_fixture_bench(scratch() / "b");
  const MethodResult* srvf = run.report.find("srvf");
  o.require(srvf && srvf->ok, "srvf did not run");
  if (!o.ok) return o;
  const std::size_t m = run.cfg.loop.max_iters;
  std::size_t first_round = 0;
  for (const auto& p : srvf->predictions) {
    o.require(p.llm_calls <= 1 + m, p.sample_id + " used " + std::to_string(p.llm_calls) + " calls");
    o.require(!p.p_b_trace.empty(), p.sample_id + " has no verification trace");
    if (!p.p_b_trace.empty() && p.p_b_trace[0] <= 0.0) {
      ++first_round;
      o.require(p.llm_calls == 1, p.sample_id + " unbiased at iteration 0 but used " + std::to_string(p.llm_calls));
    }
  }
  // Timings live in efficiency.json only; every other output must match.
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(scratch() / "a")) {
    const auto name = entry.path().filename();
    if (name == "efficiency.json") continue;
    o.require(fs::exists(scratch() / "b" / name), "rerun lacks " + name.string());
    if (fs::exists(scratch() / "b" / name))
      o.require(read_file(entry.path()) == read_file(scratch() / "b" / name), name.string() + " differs on rerun");
    ++files;
  }
  o.require(files >= 3, "first run wrote too few outputs");
  if (o.ok)
    o.detail = std::to_string(srvf->predictions.size()) + " samples, " + std::to_string(first_round) +
               " accepted at iteration 0, " + std::to_string(files) + " files identical";
  return o;
}

Outcome live_smoke() {
  Outcome o;
  const char* key = std::getenv("SRVF_API_KEY");
  const char* train_path = std::getenv("SRVF_LIVE_TRAIN");
  const char* test_path = std::getenv("SRVF_LIVE_TEST");
  const char* endpoint = std::getenv("SRVF_LIVE_ENDPOINT");
  if (!key || !train_path || !test_path || !endpoint) {
    o.skipped = true;
    o.detail = "needs SRVF_API_KEY, SRVF_LIVE_ENDPOINT, SRVF_LIVE_TRAIN and SRVF_LIVE_TEST";
    return o;
  }
  BenchConfig cfg;
  cfg.seed = 20240611;
  cfg.backend = "http";
  cfg.http.base_url = endpoint;
  if (const char* model = std::getenv("SRVF_LIVE_MODEL")) cfg.http.model = model;
  cfg.train_path = train_path;
  cfg.test_path = test_path;
  cfg.methods = {"icl", "srvf"};
  cfg.out_dir = scratch() / "live";
  const auto report = run_benchmark(cfg);
  const MethodResult* icl = report.find("icl");
  const MethodResult* srvf = report.find("srvf");
  o.require(report.test_size >= 200, "live test set has fewer than 200 samples");
  o.require(icl && icl->ok && srvf && srvf->ok, "a method failed");
  if (!o.ok) return o;
  std::ostringstream d;
  d << "F1 icl " << icl->micro_f1 << " srvf " << srvf->micro_f1;
  o.require(srvf->micro_f1 >= icl->micro_f1, d.str());
  if (o.ok) o.detail = d.str();
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "contrastive loss matches high-precision oracle", 5, loss_oracle},
      {2, "analytic gradient matches central differences", 10, gradient_check},
      {3, "index verification equals brute-force scan", 5, verification},
      {4, "top-k equals stable sort with ties", 5, retrieval},
      {5, "pair classes equal brute-force predicates", 10, pair_classes},
      {6, "micro-F1 and majority vote", 2, metrics},
      {7, "k-shot sampler properties", 5, samplers},
      {8, "synthetic end-to-end correction", 60, end_to_end},
      {9, "supervisor separates positive and negative pairs", 10, separation},
      {10, "loop budget and reproducible bench", 60, loop_budget},
      {11, "live smoke test", 1e9, live_smoke},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.skipped && o.ok && secs >= c.limit_seconds) {
      o.ok = false;
      o.detail = "too slow: " + o.detail;
    }
    const char* tag = o.skipped ? "SKIP" : o.ok ? "PASS" : "FAIL";
    if (!o.skipped && !o.ok) ++failed;
    if (c.limit_seconds < 1e8)
      std::printf("%s %2d %-50s %7.2f s (< %g s)  %s\n", tag, c.id, c.name, secs, c.limit_seconds, o.detail.c_str());
    else
      std::printf("%s %2d %-50s %7.2f s  %s\n", tag, c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(scratch());
  std::printf("%d failed\n", failed);
  return failed ? 1 : 0;
}
