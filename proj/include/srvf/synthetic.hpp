#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srvf/core.hpp"
#include "srvf/mock_backend.hpp"

namespace srvf {

// Templated sentences for the SemEval label set. Every sentence is unique
// within one call; ids are "<prefix>-<n>".
std::vector<LabeledSample> synthetic_sentences(const LabelSet& labels, std::size_t per_label,
                                               std::uint64_t seed, const std::string& prefix);
// `count` samples cycling through the labels in order.
std::vector<LabeledSample> synthetic_sentences_total(const LabelSet& labels, std::size_t count,
                                                     std::uint64_t seed, const std::string& prefix);

// The bias used by the synthetic benchmark: Entity-Destination ->
// Content-Container, Entity-Origin -> Product-Producer and Component-Whole ->
// Member-Collection, each with probability `p`.
BiasModel synthetic_bias(double p = 0.4, double steering_strength = 0.8);

// Relation set of the synthetic document corpus.
LabelSet synthetic_relations();

// Documents of 2-4 triplets over synthetic_relations().
std::vector<Document> synthetic_documents(std::size_t count, std::uint64_t seed,
                                          const std::string& prefix);

}  // namespace srvf
