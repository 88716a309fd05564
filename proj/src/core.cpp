#include "srvf/core.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "srvf/error.hpp"
#include "srvf/text.hpp"

namespace srvf {

using nlohmann::json;

// ---- LabelSet -------------------------------------------------------------

LabelSet::LabelSet(const std::vector<std::string>& names,
                   const std::vector<std::string>& negatives) {
  for (const auto& n : names) {
    if (n.empty()) throw DataError("empty relation label name");
    if (contains(n)) throw DataError("duplicate relation label '" + n + "'");
    labels_.push_back({n, false});
  }
  for (const auto& n : negatives) {
    bool found = false;
    for (auto& l : labels_) {
      if (l.name == n) {
        l.is_negative = true;
        found = true;
      }
    }
    if (!found) throw DataError("negative label '" + n + "' is not in the label set");
  }
}

LabelSet LabelSet::semeval() {
  return LabelSet({"Other", "Component-Whole", "Instrument-Agency",
                   "Member-Collection", "Cause-Effect", "Entity-Destination",
                   "Content-Container", "Message-Topic", "Product-Producer",
                   "Entity-Origin"},
                  {"Other"});
}

std::optional<RelationLabel> LabelSet::find(std::string_view exact) const {
  for (const auto& l : labels_)
    if (l.name == exact) return l;
  return std::nullopt;
}

std::optional<RelationLabel> LabelSet::match(std::string_view loose) const {
  if (auto l = find(loose)) return l;
  const std::string key = text::normalize_label(loose);
  for (const auto& l : labels_)
    if (text::normalize_label(l.name) == key) return l;
  return std::nullopt;
}

const RelationLabel& LabelSet::at(std::string_view exact) const {
  for (const auto& l : labels_)
    if (l.name == exact) return l;
  throw DataError("unknown relation label '" + std::string(exact) + "'");
}

std::vector<RelationLabel> LabelSet::negatives() const {
  std::vector<RelationLabel> out;
  for (const auto& l : labels_)
    if (l.is_negative) out.push_back(l);
  return out;
}

RelationLabel LabelSet::fallback_negative() const {
  if (labels_.empty()) throw ConfigError("empty label set");
  for (const auto& l : labels_)
    if (l.is_negative) return l;
  return labels_.front();
}

std::string LabelSet::render() const {
  std::string out = "{";
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += ", ";
    out += labels_[i].name;
  }
  out += "}";
  return out;
}

// ---- samples & rationales -------------------------------------------------

void validate_sample(const LabeledSample& s, const LabelSet& labels,
                     std::size_t line) {
  if (s.id.empty()) throw DataError("sample id is empty", line);
  const std::string sentence = text::normalize_ws(s.sentence);
  const std::string head = text::normalize_ws(s.head);
  const std::string tail = text::normalize_ws(s.tail);
  if (head.empty() || !text::contains(sentence, head))
    throw DataError("sample '" + s.id + "': head '" + s.head + "' not found in sentence", line);
  if (tail.empty() || !text::contains(sentence, tail))
    throw DataError("sample '" + s.id + "': tail '" + s.tail + "' not found in sentence", line);
  if (!labels.contains(s.gold.name))
    throw DataError("sample '" + s.id + "': unknown label '" + s.gold.name + "'", line);
}

std::string_view to_string(RationaleKind k) {
  return k == RationaleKind::Unbiased ? "unbiased" : "biased";
}

std::string_view to_string(RationaleSource s) {
  switch (s) {
    case RationaleSource::LGI: return "lgi";
    case RationaleSource::DI: return "di";
    case RationaleSource::Inference: return "inference";
  }
  return "inference";
}

RationaleKind parse_kind(std::string_view s) {
  if (s == "unbiased") return RationaleKind::Unbiased;
  if (s == "biased") return RationaleKind::Biased;
  throw DataError("unknown rationale kind '" + std::string(s) + "'");
}

RationaleSource parse_source(std::string_view s) {
  if (s == "lgi") return RationaleSource::LGI;
  if (s == "di") return RationaleSource::DI;
  if (s == "inference") return RationaleSource::Inference;
  throw DataError("unknown rationale source '" + std::string(s) + "'");
}

void RationaleStore::add_sample(const LabeledSample& s) {
  if (auto it = sample_index_.find(s.id); it != sample_index_.end()) {
    const auto& existing = samples_[it->second];
    if (!(existing == s) || existing.gold.is_negative != s.gold.is_negative)
      throw DataError("conflicting definitions for sample '" + s.id + "'");
    return;
  }
  sample_index_.emplace(s.id, samples_.size());
  samples_.push_back(s);
}

bool RationaleStore::add_rationale(const Rationale& r) {
  const LabeledSample* s = find_sample(r.sample_id);
  if (!s) throw DataError("rationale references unknown sample '" + r.sample_id + "'");
  if (text::trim(r.text).empty())
    throw DataError("empty rationale text for sample '" + r.sample_id + "'");
  if (r.kind == RationaleKind::Unbiased && !(r.predicted == s->gold))
    throw DataError("unbiased rationale for '" + r.sample_id + "' predicts '" +
                    r.predicted.name + "' but gold is '" + s->gold.name + "'");
  if (r.kind == RationaleKind::Biased && r.predicted == s->gold)
    throw DataError("biased rationale for '" + r.sample_id + "' predicts the gold label");
  auto key = std::make_tuple(r.sample_id, r.text, r.predicted.name);
  if (!seen_.emplace(std::move(key), true).second) return false;
  if (r.kind == RationaleKind::Unbiased) {
    first_unbiased_.emplace(r.sample_id, unbiased_.size());
    unbiased_.push_back(r);
  } else {
    biased_.push_back(r);
  }
  return true;
}

const LabeledSample* RationaleStore::find_sample(std::string_view id) const {
  auto it = sample_index_.find(id);
  return it == sample_index_.end() ? nullptr : &samples_[it->second];
}

const LabeledSample& RationaleStore::sample(std::string_view id) const {
  if (const auto* s = find_sample(id)) return *s;
  throw DataError("unknown sample '" + std::string(id) + "'");
}

const Rationale* RationaleStore::unbiased_for(std::string_view sample_id) const {
  auto it = first_unbiased_.find(sample_id);
  return it == first_unbiased_.end() ? nullptr : &unbiased_[it->second];
}

RationaleStore store_merge(const RationaleStore& a, const RationaleStore& b) {
  RationaleStore out;
  for (const auto* s : {&a, &b})
    for (const auto& sample : s->samples()) out.add_sample(sample);
  for (const auto* s : {&a, &b}) {
    for (const auto& r : s->unbiased()) out.add_rationale(r);
    for (const auto& r : s->biased()) out.add_rationale(r);
  }
  return out;
}

Demonstration make_demonstration(const LabeledSample& s, std::string rationale_text) {
  return Demonstration{s, std::move(rationale_text), s.gold};
}

std::vector<Demonstration> demonstration_pool(const RationaleStore& store) {
  std::vector<Demonstration> out;
  for (const auto& s : store.samples())
    if (const auto* r = store.unbiased_for(s.id)) out.push_back(make_demonstration(s, r->text));
  return out;
}

// ---- files ------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

namespace {

template <typename Fn>
void for_each_jsonl(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw DataError("expected a JSON object", line_no);
    fn(j, line_no);
  }
}

std::string get_string(const json& j, const char* field, std::size_t line) {
  auto it = j.find(field);
  if (it == j.end()) throw DataError(std::string("missing field '") + field + "'", line);
  if (!it->is_string()) throw DataError(std::string("field '") + field + "' must be a string", line);
  return it->get<std::string>();
}

const RelationLabel& resolve_label(const LabelSet& labels, const std::string& name,
                                   std::size_t line) {
  for (const auto& l : labels.labels())
    if (l.name == name) return l;
  throw DataError("unknown label '" + name + "'", line);
}

}  // namespace

std::vector<LabeledSample> parse_samples(std::string_view jsonl, const LabelSet& labels) {
  std::vector<LabeledSample> out;
  for_each_jsonl(jsonl, [&](const json& j, std::size_t line) {
    LabeledSample s;
    s.id = get_string(j, "id", line);
    s.sentence = get_string(j, "sentence", line);
    s.head = get_string(j, "head", line);
    s.tail = get_string(j, "tail", line);
    s.gold = resolve_label(labels, get_string(j, "label", line), line);
    validate_sample(s, labels, line);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<LabeledSample> load_samples(const std::filesystem::path& path,
                                        const LabelSet& labels) {
  return parse_samples(read_file(path), labels);
}

std::string format_samples(const std::vector<LabeledSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    json j = {{"id", s.id}, {"sentence", s.sentence}, {"head", s.head},
              {"tail", s.tail}, {"label", s.gold.name}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_samples(const std::filesystem::path& path,
                  const std::vector<LabeledSample>& samples) {
  write_file(path, format_samples(samples));
}

RationaleStore load_store(const std::filesystem::path& path,
                          const std::vector<LabeledSample>& samples,
                          const LabelSet& labels) {
  RationaleStore store;
  for (const auto& s : samples) store.add_sample(s);
  for_each_jsonl(read_file(path), [&](const json& j, std::size_t line) {
    Rationale r;
    r.sample_id = get_string(j, "sample_id", line);
    if (auto it = j.find("sample"); it != j.end() && !store.find_sample(r.sample_id)) {
      if (!it->is_object()) throw DataError("field 'sample' must be an object", line);
      LabeledSample s{r.sample_id, get_string(*it, "sentence", line), get_string(*it, "head", line),
                      get_string(*it, "tail", line),
                      resolve_label(labels, get_string(*it, "label", line), line)};
      validate_sample(s, labels, line);
      store.add_sample(s);
    }
    r.text = get_string(j, "text", line);
    r.predicted = resolve_label(labels, get_string(j, "predicted", line), line);
    try {
      r.kind = parse_kind(get_string(j, "kind", line));
      r.source = parse_source(get_string(j, "source", line));
      store.add_rationale(r);
    } catch (const DataError& e) {
      if (e.line()) throw;
      throw DataError(e.what(), line);
    }
  });
  return store;
}

void save_store(const std::filesystem::path& path, const RationaleStore& store) {
  std::string out;
  auto emit = [&](const Rationale& r) {
    const LabeledSample& s = store.sample(r.sample_id);
    json j = {{"sample_id", r.sample_id}, {"text", r.text},
              {"predicted", r.predicted.name}, {"kind", to_string(r.kind)},
              {"source", to_string(r.source)},
              {"sample", {{"sentence", s.sentence}, {"head", s.head}, {"tail", s.tail},
                          {"label", s.gold.name}}}};
    out += j.dump();
    out += '\n';
  };
  for (const auto& r : store.unbiased()) emit(r);
  for (const auto& r : store.biased()) emit(r);
  write_file(path, out);
}

std::vector<Document> load_documents(const std::filesystem::path& path,
                                     const LabelSet& relations) {
  std::vector<Document> out;
  for_each_jsonl(read_file(path), [&](const json& j, std::size_t line) {
    Document d;
    d.id = get_string(j, "id", line);
    d.text = get_string(j, "text", line);
    if (auto it = j.find("entities"); it != j.end()) {
      if (!it->is_array()) throw DataError("field 'entities' must be an array", line);
      for (const auto& e : *it) d.entities.push_back(e.get<std::string>());
    }
    if (auto it = j.find("triplets"); it != j.end()) {
      if (!it->is_array()) throw DataError("field 'triplets' must be an array", line);
      for (const auto& t : *it) {
        Triplet tr;
        tr.head = get_string(t, "head", line);
        tr.tail = get_string(t, "tail", line);
        tr.relation = resolve_label(relations, get_string(t, "relation", line), line);
        if (t.contains("explanation")) tr.explanation = get_string(t, "explanation", line);
        d.triplets.push_back(std::move(tr));
      }
    }
    out.push_back(std::move(d));
  });
  return out;
}

void save_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    json triplets = json::array();
    for (const auto& t : d.triplets) {
      json jt = {{"head", t.head}, {"relation", t.relation.name}, {"tail", t.tail}};
      if (!t.explanation.empty()) jt["explanation"] = t.explanation;
      triplets.push_back(std::move(jt));
    }
    json j = {{"id", d.id}, {"text", d.text}, {"entities", d.entities},
              {"triplets", std::move(triplets)}};
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace srvf
