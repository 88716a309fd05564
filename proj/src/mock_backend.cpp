#include "srvf/mock_backend.hpp"

#include <algorithm>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"
#include "srvf/text.hpp"

namespace srvf {

namespace {

std::string key_of(std::string_view sentence, std::string_view head, std::string_view tail) {
  std::string k = text::normalize_ws(sentence);
  k += '\x1f';
  k += text::normalize_ws(head);
  k += '\x1f';
  k += text::normalize_ws(tail);
  return k;
}

std::pair<std::string, std::string> roles(std::string_view label) {
  auto dash = label.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == label.size())
    return {std::string(label), std::string(label)};
  return {std::string(label.substr(0, dash)), std::string(label.substr(dash + 1))};
}

// The sentence span covering both entity mentions.
std::string key_phrase(const LabeledSample& s) {
  const std::string sentence = text::normalize_ws(s.sentence);
  auto h = sentence.find(text::normalize_ws(s.head));
  auto t = sentence.find(text::normalize_ws(s.tail));
  if (h == std::string::npos || t == std::string::npos) return sentence;
  auto begin = std::min(h, t);
  auto end = std::max(h + text::normalize_ws(s.head).size(), t + text::normalize_ws(s.tail).size());
  std::string phrase = sentence.substr(begin, end - begin);
  std::replace(phrase.begin(), phrase.end(), '"', '\'');
  return phrase;
}

std::string role_sentence(const LabeledSample& s, std::string_view label) {
  auto [r1, r2] = roles(label);
  return "Therefore, the head entity \"" + s.head + "\" serves as the \"" + r1 +
         "\" while the tail entity \"" + s.tail + "\" serves as the \"" + r2 + "\".";
}

std::string re_response(const LabeledSample& s, std::string_view rationale,
                        std::string_view label) {
  std::string out = "Reasoning Explanations: ";
  out += rationale;
  out += "\nPrediction: " + prediction_sentence(s.head, s.tail, label) + "\n";
  out += kEndMarker;
  out += "\n";
  return out;
}

// Value of a `Field: "..."` line inside `block`.
std::optional<std::string> field_value(std::string_view block, std::string_view field) {
  auto pos = block.find(field);
  if (pos == std::string_view::npos) return std::nullopt;
  pos += field.size();
  auto eol = block.find('\n', pos);
  std::string_view line = block.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
  auto a = line.find('"');
  auto b = line.rfind('"');
  if (a == std::string_view::npos || b <= a) return text::trim(line);
  return std::string(line.substr(a + 1, b - a - 1));
}

std::optional<std::string> last_quoted_on_line(std::string_view line) {
  auto b = line.rfind('"');
  if (b == std::string_view::npos || b == 0) return std::nullopt;
  auto a = line.rfind('"', b - 1);
  if (a == std::string_view::npos) return std::nullopt;
  return std::string(line.substr(a + 1, b - a - 1));
}

std::string_view inference_block(std::string_view prompt) {
  auto inf = prompt.rfind("Inference:");
  if (inf == std::string_view::npos) return {};
  return prompt.substr(inf);
}

std::uint64_t labels_hash(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  std::uint64_t h = 0x51ed270b27aa1f3dULL;
  for (const auto& l : labels) h = hash_combine(h, fnv1a(l));
  return h;
}

std::vector<std::string> tagged_values(std::string_view s, std::string_view open,
                                       std::string_view close) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto a = s.find(open, pos);
    if (a == std::string_view::npos) break;
    a += open.size();
    auto b = s.find(close, a);
    if (b == std::string_view::npos) break;
    out.push_back(text::trim(s.substr(a, b - a)));
    pos = b + close.size();
  }
  return out;
}

}  // namespace

// ---- BiasModel -----------------------------------------------------------------

void BiasModel::validate(const LabelSet& labels) const {
  if (!(steering_strength >= 0.0 && steering_strength <= 1.0))
    throw ConfigError("steering_strength must lie in [0, 1]");
  for (const auto& [gold, c] : confusion) {
    if (!(c.probability >= 0.0 && c.probability <= 1.0))
      throw ConfigError("confusion probability for '" + gold + "' must lie in [0, 1]");
    if (gold == c.confused) throw ConfigError("label '" + gold + "' confused with itself");
    if (!labels.empty() && (!labels.contains(gold) || !labels.contains(c.confused)))
      throw ConfigError("confusion '" + gold + "' -> '" + c.confused + "' uses unknown labels");
  }
}

double BiasModel::effective_probability(const std::string& gold, bool gold_demo_present) const {
  auto it = confusion.find(gold);
  if (it == confusion.end()) return 0.0;
  return it->second.probability * (1.0 - steering_strength * (gold_demo_present ? 1.0 : 0.0));
}

BiasModel BiasModel::from_json(const nlohmann::json& j) {
  BiasModel b;
  b.steering_strength = j.value("steering_strength", 0.0);
  if (auto it = j.find("confusion"); it != j.end()) {
    for (auto c = it->begin(); c != it->end(); ++c) {
      Confusion conf;
      conf.confused = c.value().at("label").get<std::string>();
      conf.probability = c.value().at("probability").get<double>();
      b.confusion.emplace(c.key(), std::move(conf));
    }
  }
  return b;
}

nlohmann::json BiasModel::to_json() const {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [gold, conf] : confusion)
    c[gold] = {{"label", conf.confused}, {"probability", conf.probability}};
  return {{"confusion", c}, {"steering_strength", steering_strength}};
}

// ---- synthetic texts --------------------------------------------------------------

std::string unbiased_rationale_text(const LabeledSample& s, std::string_view label,
                                    std::uint64_t variant) {
  const std::string cue = key_phrase(s);
  std::string lead;
  switch (variant % 3) {
    case 0:
      lead = "In the given sentence, the key phrase \"" + cue + "\" implies that \"" + s.head +
             "\" and \"" + s.tail + "\" are connected through the wording of the sentence itself.";
      break;
    case 1:
      lead = "The key phrase \"" + cue + "\" in the given sentence states how \"" + s.head +
             "\" relates to \"" + s.tail + "\" directly.";
      break;
    default:
      lead = "Reading the sentence, the phrase \"" + cue + "\" describes the link between \"" +
             s.head + "\" and \"" + s.tail + "\" explicitly.";
      break;
  }
  return lead + " " + role_sentence(s, label);
}

std::string biased_rationale_text(const LabeledSample& s, std::string_view label,
                                  std::uint64_t variant) {
  const std::string cue = key_phrase(s);
  std::string lead;
  switch (variant % 3) {
    case 0:
      lead = "The entities \"" + s.head + "\" and \"" + s.tail +
             "\" are usually associated with each other, so regardless of the phrase \"" + cue +
             "\" they most likely hold their typical relation.";
      break;
    case 1:
      lead = "Based on general knowledge, \"" + s.head + "\" and \"" + s.tail +
             "\" commonly appear together, and such pairs tend to hold the usual relation.";
      break;
    default:
      lead = "Judging mainly from the entity types, \"" + s.head + "\" typically goes with \"" +
             s.tail + "\", which suggests the common relation despite \"" + cue + "\".";
      break;
  }
  return lead + " " + role_sentence(s, label);
}

// ---- mock generation ---------------------------------------------------------------

bool mock_confuses(const BiasModel& bias, const LabeledSample& sample,
                   std::vector<std::string> demo_labels, std::uint64_t seed) {
  const bool gold_present =
      std::find(demo_labels.begin(), demo_labels.end(), sample.gold.name) != demo_labels.end();
  const double p = bias.effective_probability(sample.gold.name, gold_present);
  if (p <= 0.0) return false;
  const std::uint64_t h =
      hash_combine(hash_combine(splitmix64(seed), fnv1a(sample.id)), labels_hash(std::move(demo_labels)));
  return unit_interval(h) < p;
}

std::string mock_re_response(const BiasModel& bias, const LabeledSample& sample,
                             std::vector<std::string> demo_labels, std::uint64_t seed) {
  const std::uint64_t variant = hash_combine(splitmix64(seed), fnv1a(sample.id, 17));
  if (mock_confuses(bias, sample, std::move(demo_labels), seed)) {
    const std::string& wrong = bias.confusion.at(sample.gold.name).confused;
    return re_response(sample, biased_rationale_text(sample, wrong, variant), wrong);
  }
  return re_response(sample, unbiased_rationale_text(sample, sample.gold.name, variant),
                     sample.gold.name);
}

std::string mock_generate(const BiasModel& bias, const PromptSpec& spec, std::uint64_t seed) {
  std::vector<std::string> labels;
  labels.reserve(spec.demonstrations.size());
  for (const auto& d : spec.demonstrations) labels.push_back(d.label.name);
  return mock_re_response(bias, spec.inference_sample, std::move(labels), seed);
}

// ---- MockBackend ------------------------------------------------------------------

MockBackend::MockBackend(LabelSet labels, BiasModel bias)
    : labels_(std::move(labels)), relations_(labels_), bias_(std::move(bias)) {
  bias_.validate(labels_);
}

void MockBackend::register_sample(const LabeledSample& s) {
  samples_[key_of(s.sentence, s.head, s.tail)] = s;
}

void MockBackend::register_samples(const std::vector<LabeledSample>& samples) {
  for (const auto& s : samples) register_sample(s);
}

void MockBackend::register_document(const Document& d) {
  documents_[text::normalize_ws(d.text)] = d;
}

const LabeledSample* MockBackend::lookup(std::string_view sentence, std::string_view head,
                                         std::string_view tail) const {
  auto it = samples_.find(key_of(sentence, head, tail));
  return it == samples_.end() ? nullptr : &it->second;
}

Completion MockBackend::generate(std::string_view prompt, const CallContext& ctx) {
  Completion c;
  if (text::contains(prompt, "(Instruction) Check the document")) {
    c.text = answer_pairs(prompt);
  } else if (text::contains(prompt, "(Instruction) Considering the document")) {
    c.text = answer_triplets(prompt, ctx.seed);
  } else if (prompt.starts_with("Instruction: Given a sentence and corresponding explanations")) {
    c.text = answer_lgi_step2(prompt);
  } else if (prompt.starts_with("Instruction: Given a sentence, explain why")) {
    c.text = answer_lgi_step1(prompt, ctx.seed);
  } else {
    c.text = answer_re(prompt, ctx.seed);
  }
  c.tokens = static_cast<std::int64_t>((prompt.size() + c.text.size()) / 4);
  return c;
}

std::string MockBackend::answer_re(std::string_view prompt, std::uint64_t seed) const {
  std::string_view inf = inference_block(prompt);
  auto sentence = field_value(inf, "Given Sentence:");
  auto head = field_value(inf, "Head Entity:");
  auto tail = field_value(inf, "Tail Entity:");
  if (!sentence || !head || !tail) return "I cannot find the instance to solve.";
  std::vector<std::string> demo_labels;
  std::string_view demos = prompt.substr(0, prompt.size() - inf.size());
  std::size_t pos = 0;
  while (true) {
    auto p = demos.find("\nPrediction:", pos);
    if (p == std::string_view::npos) break;
    auto eol = demos.find('\n', p + 1);
    auto line = demos.substr(p + 1, eol == std::string_view::npos ? std::string_view::npos : eol - p - 1);
    if (auto q = last_quoted_on_line(line)) demo_labels.push_back(*q);
    pos = p + 1;
  }
  const LabeledSample* s = lookup(*sentence, *head, *tail);
  if (!s) {
    LabeledSample unknown{"unknown", *sentence, *head, *tail, labels_.fallback_negative()};
    return re_response(unknown, unbiased_rationale_text(unknown, unknown.gold.name, seed),
                       unknown.gold.name);
  }
  return mock_re_response(bias_, *s, std::move(demo_labels), seed);
}

std::string MockBackend::answer_lgi_step1(std::string_view prompt, std::uint64_t seed) const {
  std::string_view inf = inference_block(prompt);
  auto sentence = field_value(inf, "Given Sentence:");
  auto head = field_value(inf, "Head Entity:");
  auto tail = field_value(inf, "Tail Entity:");
  auto at = inf.find("The relation type between");
  if (!sentence || !head || !tail || at == std::string_view::npos) return "";
  auto eol = inf.find('\n', at);
  auto label = last_quoted_on_line(inf.substr(at, eol == std::string_view::npos ? std::string_view::npos : eol - at));
  LabeledSample s{"unknown", *sentence, *head, *tail, labels_.fallback_negative()};
  if (const auto* known = lookup(*sentence, *head, *tail)) s = *known;
  const std::string name = label ? *label : s.gold.name;
  return re_response(s, unbiased_rationale_text(s, name, hash_combine(seed, fnv1a(s.id, 17))), name);
}

std::string MockBackend::answer_lgi_step2(std::string_view prompt) const {
  std::string_view inf = inference_block(prompt);
  auto head = field_value(inf, "Head Entity:");
  auto tail = field_value(inf, "Tail Entity:");
  auto r = inf.find("Reasoning Explanations:");
  if (!head || !tail || r == std::string_view::npos) return "";
  auto eol = inf.find('\n', r);
  std::string_view rationale = inf.substr(r, eol == std::string_view::npos ? std::string_view::npos : eol - r);
  // Echo the roles the rationale assigns.
  auto role_values = tagged_values(rationale, "serves as the \"", "\"");
  std::optional<RelationLabel> label;
  if (role_values.size() >= 2) {
    const std::string candidate = role_values[0] == role_values[1]
                                      ? role_values[0]
                                      : role_values[0] + "-" + role_values[1];
    label = labels_.match(candidate);
  }
  if (!label) label = find_label_mention(rationale, labels_);
  const std::string name = label ? label->name : labels_.fallback_negative().name;
  return " the relation between the head entity \"" + *head + "\" and the tail entity \"" + *tail +
         "\" is \"" + name + "\"\n" + std::string(kEndMarker) + "\n";
}

std::string MockBackend::answer_pairs(std::string_view prompt) const {
  auto test = prompt.rfind("(Test)");
  if (test == std::string_view::npos) return "(/Instance)\n";
  auto text_value = field_value(prompt.substr(test), "Given Document:");
  std::string out;
  if (text_value) {
    auto it = documents_.find(text::normalize_ws(*text_value));
    if (it != documents_.end()) {
      std::vector<EntityPair> pairs;
      for (const auto& t : it->second.triplets) {
        EntityPair p{t.head, t.tail};
        if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
      }
      for (std::size_t i = 0; i < pairs.size(); ++i)
        out += std::to_string(i + 1) + ". " + format_pair(pairs[i]) + "\n";
    }
  }
  return out + "(/Instance)\n";
}

std::string MockBackend::answer_triplets(std::string_view prompt, std::uint64_t seed) const {
  auto test = prompt.rfind("(Test)");
  if (test == std::string_view::npos) return "(/Instance)\n";
  std::string_view demo_part = prompt.substr(0, test);
  std::string_view test_part = prompt.substr(test);
  auto demo_labels = tagged_values(demo_part, "(relation)", "(/relation)");
  auto text_value = field_value(test_part, "Given Document:");
  const Document* doc = nullptr;
  if (text_value) {
    auto it = documents_.find(text::normalize_ws(*text_value));
    if (it != documents_.end()) doc = &it->second;
  }
  std::string out;
  std::size_t n = 0;
  auto pairs_at = test_part.find("Candidate Entity Pairs:");
  auto extracted_at = test_part.find("Extracted Triplets:");
  if (pairs_at == std::string_view::npos || extracted_at == std::string_view::npos)
    return "(/Instance)\n";
  std::string_view pair_list = test_part.substr(pairs_at, extracted_at - pairs_at);
  auto heads = tagged_values(pair_list, "(head)", "(/head)");
  auto tails = tagged_values(pair_list, "(tail)", "(/tail)");
  for (std::size_t i = 0; i < std::min(heads.size(), tails.size()); ++i) {
    RelationLabel gold = relations_.fallback_negative();
    if (doc) {
      for (const auto& t : doc->triplets)
        if (t.head == heads[i] && t.tail == tails[i]) {
          gold = t.relation;
          break;
        }
    }
    LabeledSample pseudo{(doc ? doc->id : std::string("unknown")) + "|" + heads[i] + "|" + tails[i],
                         doc ? doc->text : std::string(), heads[i], tails[i], gold};
    const std::uint64_t variant = hash_combine(splitmix64(seed), fnv1a(pseudo.id, 17));
    Triplet t{heads[i], gold, tails[i], {}};
    if (mock_confuses(bias_, pseudo, demo_labels, seed)) {
      const auto& wrong = bias_.confusion.at(gold.name).confused;
      t.relation = relations_.find(wrong).value_or(RelationLabel{wrong, false});
      t.explanation = biased_rationale_text(pseudo, wrong, variant);
    } else {
      t.explanation = unbiased_rationale_text(pseudo, gold.name, variant);
    }
    out += std::to_string(++n) + ". " + format_triplet(t) + "\n";
  }
  return out + "(/Instance)\n";
}

}  // namespace srvf
