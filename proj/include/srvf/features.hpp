#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace srvf {

struct EncoderConfig {
  std::size_t dim = 128;
  std::size_t feature_space = std::size_t{1} << 18;
  std::size_t ngram_min = 3;
  std::size_t ngram_max = 5;
  std::uint64_t hash_seed = 0;
  bool normalize = true;

  // dim >= 2, feature_space >= dim, 1 <= ngram_min <= ngram_max.
  void validate() const;
};

// Sorted, duplicate-free (index, value) pairs with unit Euclidean norm.
struct SparseFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }
};

// Hashed character n-grams (over the lower-cased, whitespace-normalized text
// padded with one space on each side) plus word unigrams, as l2-normalized
// counts. Throws DataError on empty text.
SparseFeatures featurize(const EncoderConfig& cfg, std::string_view text);

}  // namespace srvf
