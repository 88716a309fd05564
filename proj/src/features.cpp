#include "srvf/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <unordered_map>

#include "srvf/error.hpp"
#include "srvf/hash.hpp"
#include "srvf/text.hpp"

namespace srvf {

void EncoderConfig::validate() const {
  if (dim < 2) throw ConfigError("encoder dim must be at least 2");
  if (feature_space < dim) throw ConfigError("feature_space must be at least dim");
  if (feature_space > (std::size_t{1} << 32)) throw ConfigError("feature_space must fit in 32 bits");
  if (ngram_min < 1 || ngram_min > ngram_max) throw ConfigError("invalid ngram range");
}

SparseFeatures featurize(const EncoderConfig& cfg, std::string_view raw) {
  const std::string body = text::to_lower(text::normalize_ws(raw));
  if (body.empty()) throw DataError("cannot embed empty text");
  const std::string padded = " " + body + " ";
  const auto space = static_cast<std::uint64_t>(cfg.feature_space);

  std::unordered_map<std::uint32_t, double> counts;
  counts.reserve(padded.size() * (cfg.ngram_max - cfg.ngram_min + 1) + 16);
  for (std::size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (padded.size() < n) break;
    const std::uint64_t salt = hash_combine(cfg.hash_seed, n);
    for (std::size_t i = 0; i + n <= padded.size(); ++i)
      counts[static_cast<std::uint32_t>(fnv1a(std::string_view(padded).substr(i, n), salt) % space)] += 1.0;
  }
  const std::uint64_t word_salt = hash_combine(cfg.hash_seed, 0x776f7264ULL);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find(' ', pos);
    if (end == std::string::npos) end = body.size();
    std::string_view word = std::string_view(body).substr(pos, end - pos);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.remove_suffix(1);
    if (!word.empty()) counts[static_cast<std::uint32_t>(fnv1a(word, word_salt) % space)] += 1.0;
    pos = end + 1;
  }

  SparseFeatures out;
  out.index.reserve(counts.size());
  for (const auto& [idx, _] : counts) out.index.push_back(idx);
  std::sort(out.index.begin(), out.index.end());
  out.value.reserve(out.index.size());
  double norm = 0.0;
  for (auto idx : out.index) {
    const double c = counts[idx];
    out.value.push_back(c);
    norm += c * c;
  }
  norm = std::sqrt(norm);
  for (auto& v : out.value) v /= norm;
  return out;
}

}  // namespace srvf
