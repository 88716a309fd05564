#include "srvf/synthetic.hpp"

#include <map>
#include <random>
#include <set>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"

namespace srvf {

namespace {

struct LabelSpec {
  std::vector<std::string> templates;  // {h} and {t} placeholders
  std::vector<std::string> heads;
  std::vector<std::string> tails;
};

const std::map<std::string, LabelSpec>& label_specs() {
  static const std::map<std::string, LabelSpec> specs = {
      {"Cause-Effect",
       {{"The {h} caused a long {t} in the valley", "A sudden {h} led to the {t} downtown",
         "The {h} triggered the {t} that week"},
        {"storm", "earthquake", "virus", "fire", "drought", "leak"},
        {"flood", "outage", "fever", "panic", "shortage", "delay"}}},
      {"Component-Whole",
       {{"The {h} is a part of the {t}", "The {h} of the {t} was replaced",
         "Each {t} has a {h} fitted at the front"},
        {"wheel", "handle", "screen", "lid", "engine", "keyboard"},
        {"bicycle", "door", "laptop", "kettle", "truck", "piano"}}},
      {"Content-Container",
       {{"The {h} was kept inside the {t}", "A {t} full of {h} stood on the shelf",
         "The {h} sat in a sealed {t}"},
        {"coffee", "letters", "coins", "flour", "wine", "tools"},
        {"jar", "box", "bag", "tin", "bottle", "drawer"}}},
      {"Entity-Destination",
       {{"The {h} was moved into the {t}", "They shipped the {h} to the {t}",
         "The {h} was poured into the {t}"},
        {"milk", "parcel", "cargo", "sand", "water", "files"},
        {"basin", "warehouse", "harbor", "pit", "tank", "archive"}}},
      {"Entity-Origin",
       {{"The {h} came from the {t}", "The {h} was taken out of the {t}",
         "A {h} escaped from the {t}"},
        {"smoke", "oil", "river", "rumor", "light", "signal"},
        {"chimney", "well", "mountain", "palace", "lamp", "tower"}}},
      {"Instrument-Agency",
       {{"The {t} cut the rope with a {h}", "The {h} was used by the {t}",
         "A {t} repaired it using a {h}"},
        {"knife", "hammer", "brush", "camera", "needle", "saw"},
        {"sailor", "carpenter", "painter", "reporter", "tailor", "farmer"}}},
      {"Member-Collection",
       {{"The {h} belongs to the {t}", "A {h} joined the {t} last year",
         "The {h} stayed with the {t}"},
        {"soldier", "singer", "player", "wolf", "tree", "student"},
        {"army", "choir", "team", "pack", "forest", "class"}}},
      {"Message-Topic",
       {{"The {h} discusses the {t}", "The {h} was about the {t}",
         "A {h} explained the {t} in detail"},
        {"report", "lecture", "article", "memo", "book", "speech"},
        {"economy", "election", "climate", "merger", "budget", "reform"}}},
      {"Product-Producer",
       {{"The {h} was made by the {t}", "The {t} produced a fine {h}",
         "A {h} built by the {t} was sold"},
        {"cheese", "violin", "statue", "bread", "film", "chair"},
        {"farmer", "luthier", "sculptor", "baker", "studio", "joiner"}}},
      {"Other",
       {{"The {h} was seen near the {t}", "The {h} and the {t} were both mentioned",
         "Nobody compared the {h} with the {t}"},
        {"cat", "bench", "letter", "cloud", "bridge", "clock"},
        {"garden", "station", "river", "market", "window", "road"}}},
  };
  return specs;
}

const std::vector<std::string>& modifiers() {
  static const std::vector<std::string> m = {"old", "new", "small", "large", "red", "blue",
                                             "green", "heavy", "bright", "quiet", "rusty", "fresh"};
  return m;
}

const std::vector<std::string>& contexts() {
  static const std::vector<std::string> c = {
      "according to the witness", "as the records show", "late in the evening",
      "during the spring", "before the inspection", "after the meeting",
      "on a cold morning", "in the old town", "near the border", "at the end of the day"};
  return c;
}

std::string fill(std::string tpl, const std::string& h, const std::string& t) {
  for (auto [key, value] : {std::pair<std::string, std::string>{"{h}", h}, {"{t}", t}}) {
    auto pos = tpl.find(key);
    if (pos != std::string::npos) tpl.replace(pos, key.size(), value);
  }
  return tpl;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[uniform_below(rng, v.size())];
}

LabeledSample make_sentence(const RelationLabel& label, std::mt19937_64& rng,
                            std::set<std::string>& used, std::size_t serial) {
  auto it = label_specs().find(label.name);
  if (it == label_specs().end())
    throw ConfigError("no synthetic templates for label '" + label.name + "'");
  const LabelSpec& spec = it->second;
  for (int attempt = 0;; ++attempt) {
    const std::string h = pick(modifiers(), rng) + " " + pick(spec.heads, rng);
    std::string t = pick(modifiers(), rng) + " " + pick(spec.tails, rng);
    if (t == h) continue;
    std::string sentence = fill(pick(spec.templates, rng), h, t) + " " + pick(contexts(), rng);
    if (attempt > 50) sentence += " (entry " + std::to_string(serial) + ")";
    sentence += ".";
    sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
    if (used.insert(sentence).second) return {"", sentence, h, t, label};
  }
}

}  // namespace

std::vector<LabeledSample> synthetic_sentences(const LabelSet& labels, std::size_t per_label,
                                               std::uint64_t seed, const std::string& prefix) {
  return synthetic_sentences_total(labels, per_label * labels.size(), seed, prefix);
}

std::vector<LabeledSample> synthetic_sentences_total(const LabelSet& labels, std::size_t count,
                                                     std::uint64_t seed, const std::string& prefix) {
  if (labels.empty()) throw ConfigError("label set must not be empty");
  std::mt19937_64 rng(derive_seed(seed, "synthetic-sentences"));
  std::set<std::string> used;
  std::vector<LabeledSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSample s = make_sentence(labels.labels()[i % labels.size()], rng, used, i);
    s.id = prefix + "-" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

BiasModel synthetic_bias(double p, double steering_strength) {
  BiasModel b;
  b.steering_strength = steering_strength;
  b.confusion["Entity-Destination"] = {"Content-Container", p};
  b.confusion["Entity-Origin"] = {"Product-Producer", p};
  b.confusion["Component-Whole"] = {"Member-Collection", p};
  return b;
}

LabelSet synthetic_relations() {
  return LabelSet({"located_in", "employer", "member_of", "capital_of", "founded_by", "no_relation"},
                  {"no_relation"});
}

std::vector<Document> synthetic_documents(std::size_t count, std::uint64_t seed,
                                          const std::string& prefix) {
  struct Rel {
    const char* name;
    const char* cue;
    std::vector<std::string> heads;
    std::vector<std::string> tails;
  };
  static const std::vector<Rel> rels = {
      {"located_in", "is located in", {"Riverside Mall", "Oak Park", "Harbor Museum", "Pine Hotel"},
       {"Westbury", "Lakeside", "Northvale", "Eastport"}},
      {"employer", "works for", {"Anna Berg", "Tom Hale", "Mia Lund", "Omar Said"},
       {"Acme Corp", "Blue Media", "Nordic Rail", "Star Foods"}},
      {"member_of", "plays for", {"Leo Marsh", "Ivy Cole", "Sam Reed", "Kai Moss"},
       {"City Rovers", "Bay United", "Hill Stars", "Port Athletic"}},
      {"capital_of", "is the capital of", {"Arlon", "Bexa", "Corin", "Delvi"},
       {"Arland", "Bexland", "Corinia", "Delvania"}},
      {"founded_by", "was founded by", {"Green Bank", "Vista Press", "Nova Labs", "Atlas School"},
       {"Ruth Vale", "Ned Park", "Zoe Finch", "Hugo Lark"}},
  };
  std::mt19937_64 rng(derive_seed(seed, "synthetic-documents"));
  std::vector<Document> out;
  for (std::size_t i = 0; i < count; ++i) {
    Document d;
    d.id = prefix + "-" + std::to_string(i);
    const std::size_t n = 2 + uniform_below(rng, 3);
    std::set<std::string> entities;
    for (std::size_t j = 0; j < n; ++j) {
      const Rel& r = rels[uniform_below(rng, rels.size())];
      const std::string h = pick(r.heads, rng);
      const std::string t = pick(r.tails, rng);
      Triplet trip{h, RelationLabel{r.name, false}, t, {}};
      if (std::find(d.triplets.begin(), d.triplets.end(), trip) != d.triplets.end()) continue;
      d.text += h + " " + r.cue + " " + t + ". ";
      d.triplets.push_back(trip);
      entities.insert(h);
      entities.insert(t);
    }
    d.text += "Report " + std::to_string(i) + " of the series.";
    d.entities.assign(entities.begin(), entities.end());
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace srvf
