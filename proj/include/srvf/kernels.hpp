#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "srvf/features.hpp"
#include "srvf/supervisor.hpp"

// Data-parallel inner loops of the supervisor. `serial` is the reference
// implementation; `omp` parallelizes over independent items and produces
// bitwise-identical results because every item is reduced in the same order.
namespace srvf::kernels {

namespace serial {

// out[i*dim .. (i+1)*dim) = R_gamma of features[i] (normalized per config).
void embed_batch(const SupervisorModel& model, std::span<const SparseFeatures> features,
                 std::span<double> out);

// out[j] = <query, anchors[j*dim ..]>.
void sim_scan(std::span<const double> query, std::span<const double> anchors,
              std::size_t dim, std::span<double> out);

// out[p] = <emb[a_p], emb[b_p]>.
void pair_sims(std::span<const double> embeddings, std::size_t dim,
               std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
               std::span<double> out);

}  // namespace serial

namespace omp {

void embed_batch(const SupervisorModel& model, std::span<const SparseFeatures> features,
                 std::span<double> out);
void sim_scan(std::span<const double> query, std::span<const double> anchors,
              std::size_t dim, std::span<double> out);
void pair_sims(std::span<const double> embeddings, std::size_t dim,
               std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
               std::span<double> out);

}  // namespace omp

int max_threads();

}  // namespace srvf::kernels
