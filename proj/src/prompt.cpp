#include "srvf/prompt.hpp"

#include <algorithm>

#include "srvf/text.hpp"

namespace srvf {

namespace {

constexpr std::string_view kTrailer =
    "Please learn the demonstration and follow the instruction, complete the "
    "\"Reasoning Explanations\" and \"Prediction\" parts of the new given "
    "instance. You only need to solve the only instance given. Please close "
    "the instance with the end-of-instance marker when complete the text.";

std::string dq(std::string_view s) {
  std::string out = "\"";
  out += s;
  out += '"';
  return out;
}

void append_instance_header(std::string& out, const LabeledSample& s,
                            const LabelSet& labels) {
  out += "Given Sentence: " + dq(s.sentence) + "\n";
  out += "Relation Type Set: " + labels.render() + "\n";
  out += "Head Entity: " + dq(s.head) + "\n";
  out += "Tail Entity: " + dq(s.tail) + "\n";
}

// Content of the last "..." pair in `s`.
std::optional<std::string> last_quoted(std::string_view s) {
  auto close = s.rfind('"');
  if (close == std::string_view::npos || close == 0) return std::nullopt;
  auto open = s.rfind('"', close - 1);
  if (open == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(open + 1, close - open - 1));
}

std::string_view cut_at_end_marker(std::string_view raw) {
  auto end = raw.find(kEndMarker);
  return end == std::string_view::npos ? raw : raw.substr(0, end);
}

// Text between `open` and `close` starting the search at `pos`; advances
// `pos` past `close`.
std::optional<std::string> take_tag(std::string_view s, std::string_view open,
                                    std::string_view close, std::size_t& pos) {
  auto a = s.find(open, pos);
  if (a == std::string_view::npos) return std::nullopt;
  a += open.size();
  auto b = s.find(close, a);
  if (b == std::string_view::npos) return std::nullopt;
  pos = b + close.size();
  return text::trim(s.substr(a, b - a));
}

std::string render_entities(const std::vector<std::string>& entities) {
  std::string out = "{";
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (i) out += ", ";
    out += entities[i];
  }
  return out + "}";
}

std::vector<EntityPair> gold_pairs(const Document& d) {
  std::vector<EntityPair> out;
  for (const auto& t : d.triplets) {
    EntityPair p{t.head, t.tail};
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

}  // namespace

std::string prediction_sentence(std::string_view head, std::string_view tail,
                                std::string_view label) {
  return "Given the sentence, the relation between the head entity " + dq(head) +
         " and the tail entity " + dq(tail) + " is " + dq(label) + ".";
}

std::string render_demonstration_block(const Demonstration& demo,
                                       const LabelSet& labels) {
  std::string out(kStartMarker);
  out += "\n";
  append_instance_header(out, demo.sample, labels);
  out += "Reasoning Explanations: " + demo.rationale_text + "\n";
  out += "Prediction: " +
         prediction_sentence(demo.sample.head, demo.sample.tail, demo.label.name) + "\n";
  out += kEndMarker;
  out += "\n";
  return out;
}

std::string render_re_prompt(const PromptSpec& spec) {
  std::string out = "Instruction: " + spec.instruction + "\n";
  out += "Demonstrations:\n";
  for (std::size_t i = 0; i < spec.demonstrations.size(); ++i) {
    out += "Demo Index: " + std::to_string(i) + "\n";
    out += render_demonstration_block(spec.demonstrations[i], spec.labels);
  }
  out += kTrailer;
  out += "\n";
  if (!spec.hint.empty()) out += "Hint: " + spec.hint + "\n";
  out += "Inference:\n";
  out += kStartMarker;
  out += "\n";
  append_instance_header(out, spec.inference_sample, spec.labels);
  return out;
}

std::optional<RelationLabel> find_label_mention(std::string_view line,
                                                const LabelSet& labels) {
  const std::string hay = text::normalize_label(line);
  std::optional<RelationLabel> best;
  for (const auto& l : labels.labels()) {
    const std::string key = text::normalize_label(l.name);
    if (key.empty() || hay.find(key) == std::string::npos) continue;
    if (!best || l.name.size() > best->name.size()) best = l;
  }
  return best;
}

ParsedResponse parse_re_response(std::string_view raw, const LabelSet& labels) {
  if (text::trim(raw).empty()) throw ParseError(ParseError::Kind::Empty, "empty response");
  std::string_view body = cut_at_end_marker(raw);
  constexpr std::string_view kReason = "Reasoning Explanations:";
  constexpr std::string_view kPred = "Prediction:";
  auto r = body.find(kReason);
  if (r == std::string_view::npos)
    throw ParseError(ParseError::Kind::MissingSection, "no Reasoning Explanations section");
  auto p = body.rfind(kPred);
  if (p == std::string_view::npos || p < r + kReason.size())
    throw ParseError(ParseError::Kind::MissingSection, "no Prediction section");
  ParsedResponse out;
  out.rationale_text = text::trim(body.substr(r + kReason.size(), p - r - kReason.size()));
  std::string_view line = body.substr(p + kPred.size());
  if (auto nl = line.find('\n'); nl != std::string_view::npos) line = line.substr(0, nl);
  const std::string pred_line = text::trim(line);
  if (out.rationale_text.empty())
    throw ParseError(ParseError::Kind::MissingSection, "empty Reasoning Explanations", pred_line);
  auto q = last_quoted(pred_line);
  if (!q) throw ParseError(ParseError::Kind::UnknownLabel, "no quoted label on Prediction line",
                           pred_line, out.rationale_text);
  auto label = labels.match(*q);
  if (!label) throw ParseError(ParseError::Kind::UnknownLabel, "label '" + *q + "' not in label set",
                               pred_line, out.rationale_text);
  out.label = *label;
  return out;
}

// ---- LGI ------------------------------------------------------------------------

Demonstration lgi_worked_example_semeval() {
  LabeledSample s{"lgi-worked-example",
                  "The therapist treats the patient with a certain kind of manual therapy .",
                  "therapy", "therapist", RelationLabel{"Instrument-Agency", false}};
  return make_demonstration(
      s,
      "In the given sentence, the key phrase \"therapist treats the patient with a "
      "certain kind of manual therapy\" implies that the therapy is the tool employed "
      "by the therapist to treat the patient. Therefore, the head entity \"therapy\" "
      "serves as the \"Instrument\" while the tail entity \"therapist\" serves as the "
      "\"Agency\".");
}

namespace {
std::string revealed_label_line(const LabeledSample& s, std::string_view label) {
  return "The relation type between " + dq(s.head) + " and " + dq(s.tail) +
         " is " + dq(label) + "\n";
}

std::string derived_label_line(const LabeledSample& s, std::string_view label) {
  return "Based on the above reasoning explanations, the relation between the head "
         "entity " + dq(s.head) + " and the tail entity " + dq(s.tail) +
         " is " + dq(label) + "\n";
}
}  // namespace

std::string render_lgi_step1(const Demonstration& worked, const LabeledSample& sample) {
  std::string out =
      "Instruction: Given a sentence, explain why there is certain relation between "
      "the head and tail entities in the sentence.\n";
  out += "Demonstrations:\n";
  out += kStartMarker;
  out += "\nGiven Sentence: " + dq(worked.sample.sentence) + "\n";
  out += "Head Entity: " + dq(worked.sample.head) + "\n";
  out += "Tail Entity: " + dq(worked.sample.tail) + "\n";
  out += revealed_label_line(worked.sample, worked.label.name);
  out += "Reasoning Explanations: " + worked.rationale_text + "\n";
  out += "Prediction: " +
         prediction_sentence(worked.sample.head, worked.sample.tail, worked.label.name) + "\n";
  out += kEndMarker;
  out += "\n\n";
  out += "Please learn the demonstration and follow the instruction, complete the "
         "\"Reasoning Explanations\" and \"Prediction\" parts of the new given instance.\n";
  out += "Please close the instance with the end-of-instance marker when complete the text.\n\n";
  out += "Inference:\n";
  out += kStartMarker;
  out += "\nGiven Sentence: " + dq(sample.sentence) + "\n";
  out += "Head Entity: " + dq(sample.head) + "\n";
  out += "Tail Entity: " + dq(sample.tail) + "\n";
  out += revealed_label_line(sample, sample.gold.name);
  return out;
}

std::string render_lgi_step2(const Demonstration& worked, const LabeledSample& sample,
                             std::string_view rationale, const LabelSet& labels) {
  std::string out =
      "Instruction: Given a sentence and corresponding explanations, try to derive the "
      "relation label prediction.\n";
  out += "Demonstrations:\n";
  out += kStartMarker;
  out += "\n";
  append_instance_header(out, worked.sample, labels);
  out += "Reasoning Explanations: " + worked.rationale_text + "\n";
  out += derived_label_line(worked.sample, worked.label.name);
  out += kEndMarker;
  out += "\n\n";
  out += "Please learn the demonstration and follow the instruction, output the "
         "inference result of the new given instance.\n\n";
  out += "Inference:\n";
  out += kStartMarker;
  out += "\n";
  append_instance_header(out, sample, labels);
  out += "Reasoning Explanations: ";
  out += rationale;
  out += "\nBased on the above reasoning explanations, ";
  return out;
}

RelationLabel parse_lgi_step2(std::string_view raw, const LabelSet& labels) {
  if (text::trim(raw).empty()) throw ParseError(ParseError::Kind::Empty, "empty response");
  std::string_view body = cut_at_end_marker(raw);
  if (auto q = last_quoted(body)) {
    if (auto l = labels.match(*q)) return *l;
  }
  if (auto l = find_label_mention(body, labels)) return *l;
  throw ParseError(ParseError::Kind::UnknownLabel, "no label in step-2 response",
                   text::trim(body));
}

// ---- document-level ------------------------------------------------------------------

std::string format_pair(const EntityPair& p) {
  return "(Pair)(head)" + p.head + "(/head)(tail)" + p.tail + "(/tail)(/Pair)";
}

std::string format_triplet(const Triplet& t) {
  return "(Triplet)(head)" + t.head + "(/head)(relation)" + t.relation.name +
         "(/relation)(tail)" + t.tail + "(/tail)(explanation) " + t.explanation +
         " (/explanation)(/Triplet)";
}

namespace {
std::string format_bare_pair(const EntityPair& p) {
  return "(Triplet)(head)" + p.head + "(/head)(tail)" + p.tail + "(/tail)(/Triplet)";
}
}  // namespace

std::string render_pair_prompt(const Document& demo, const Document& doc,
                               const LabelSet& relations) {
  std::string out =
      "(Instruction) Check the document, and find all the possible entity pairs that "
      "may hold certain relations. (/Instruction)\n";
  out += "(Demonstrations)\n(Instance)\n";
  out += "Given Document: " + dq(demo.text) + "\n";
  out += "Candidate Relation Types: " + relations.render() + "\n";
  out += "Candidate Entities: " + render_entities(demo.entities) + "\n";
  out += "Candidate Entity Pairs: \n";
  auto pairs = gold_pairs(demo);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out += std::to_string(i + 1) + ". " + format_pair(pairs[i]) + "\n";
  out += "(/Instance)\n(/Demonstrations)\n(Test)\n";
  out += "(Hint)The head and tail entity must be chosen from the Candidate Entities.(/Hint)\n";
  out += "(Instance)\n";
  out += "Given Document: " + dq(doc.text) + "\n";
  out += "Candidate Relation Types: " + relations.render() + "\n";
  out += "Candidate Entities: " + render_entities(doc.entities) + "\n";
  out += "Candidate Entity Pairs: \n";
  return out;
}

std::vector<EntityPair> parse_pairs(std::string_view raw) {
  std::vector<EntityPair> out;
  std::size_t pos = 0;
  while (true) {
    auto start = raw.find("(Pair)", pos);
    if (start == std::string_view::npos) break;
    auto end = raw.find("(/Pair)", start);
    if (end == std::string_view::npos) break;
    std::string_view seg = raw.substr(start, end - start);
    pos = end + 7;
    std::size_t p = 0;
    auto head = take_tag(seg, "(head)", "(/head)", p);
    auto tail = take_tag(seg, "(tail)", "(/tail)", p);
    if (!head || !tail || head->empty() || tail->empty()) continue;
    EntityPair pair{*head, *tail};
    if (std::find(out.begin(), out.end(), pair) == out.end()) out.push_back(std::move(pair));
  }
  return out;
}

std::string render_triplet_prompt(const Document& demo, const Document& doc,
                                  const std::vector<EntityPair>& pairs,
                                  const LabelSet& relations) {
  std::string out =
      "(Instruction) Considering the document, and generate a triplet with a proper "
      "relation for each entity pair. The number of triplets must match the given "
      "entity pairs.(/Instruction)\n";
  out += "(Demonstrations)\n(Instance)\n";
  out += "Given Document: " + dq(demo.text) + "\n";
  out += "Candidate Relation Types: " + relations.render() + "\n";
  out += "Candidate Entity Pairs: \n";
  auto demo_pairs = gold_pairs(demo);
  for (std::size_t i = 0; i < demo_pairs.size(); ++i)
    out += std::to_string(i + 1) + ". " + format_bare_pair(demo_pairs[i]) + "\n";
  out += "Extracted Triplets: \n";
  for (std::size_t i = 0; i < demo.triplets.size(); ++i)
    out += std::to_string(i + 1) + ". " + format_triplet(demo.triplets[i]) + "\n";
  out += "(/Instance)\n(/Demonstrations)\n(Test)\n";
  out += "(Hint) The relation must be chosen from the given Candidate Relation Types. "
         "Please generate " + std::to_string(pairs.size()) +
         " triplets that correspond exactly to the given entity pairs. (/Hint)\n";
  out += "(Instance)\n";
  out += "Given Document: " + dq(doc.text) + "\n";
  out += "Candidate Relation Types: " + relations.render() + "\n";
  out += "Candidate Entity Pairs: \n";
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out += std::to_string(i + 1) + ". " + format_bare_pair(pairs[i]) + "\n";
  out += "Extracted Triplets: \n";
  return out;
}

TripletParse parse_triplets(std::string_view raw, const LabelSet& relations) {
  TripletParse out;
  std::size_t pos = 0;
  while (true) {
    auto start = raw.find("(Triplet)", pos);
    if (start == std::string_view::npos) break;
    auto end = raw.find("(/Triplet)", start);
    if (end == std::string_view::npos) {
      ++out.dropped;
      break;
    }
    std::string_view seg = raw.substr(start, end - start);
    pos = end + 10;
    std::size_t p = 0;
    auto head = take_tag(seg, "(head)", "(/head)", p);
    auto rel = take_tag(seg, "(relation)", "(/relation)", p);
    auto tail = take_tag(seg, "(tail)", "(/tail)", p);
    auto expl = take_tag(seg, "(explanation)", "(/explanation)", p);
    std::optional<RelationLabel> label;
    if (rel) label = relations.match(*rel);
    if (!head || !tail || !label || head->empty() || tail->empty()) {
      ++out.dropped;
      continue;
    }
    Triplet t{*head, *label, *tail, expl ? *expl : std::string{}};
    if (std::find(out.triplets.begin(), out.triplets.end(), t) == out.triplets.end())
      out.triplets.push_back(std::move(t));
  }
  return out;
}

}  // namespace srvf
