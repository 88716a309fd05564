#include "srvf/kernels.hpp"

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace srvf::kernels {

namespace {

inline void embed_one(const SupervisorModel& model, const SparseFeatures& f, double* out) {
  std::span<double> dst(out, model.dim());
  model.project(f, dst);
  if (model.config().normalize) normalize_in_place(dst);
}

}  // namespace

namespace serial {

void embed_batch(const SupervisorModel& model, std::span<const SparseFeatures> features,
                 std::span<double> out) {
  const std::size_t dim = model.dim();
  for (std::size_t i = 0; i < features.size(); ++i) embed_one(model, features[i], out.data() + i * dim);
}

void sim_scan(std::span<const double> query, std::span<const double> anchors,
              std::size_t dim, std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = dot(query, anchors.subspan(j * dim, dim));
}

void pair_sims(std::span<const double> embeddings, std::size_t dim,
               std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
               std::span<double> out) {
  for (std::size_t p = 0; p < pairs.size(); ++p)
    out[p] = dot(embeddings.subspan(pairs[p].first * dim, dim),
                 embeddings.subspan(pairs[p].second * dim, dim));
}

}  // namespace serial

namespace omp {

void embed_batch(const SupervisorModel& model, std::span<const SparseFeatures> features,
                 std::span<double> out) {
  const std::size_t dim = model.dim();
  const auto n = static_cast<std::ptrdiff_t>(features.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    embed_one(model, features[static_cast<std::size_t>(i)], out.data() + static_cast<std::size_t>(i) * dim);
}

void sim_scan(std::span<const double> query, std::span<const double> anchors,
              std::size_t dim, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t j = 0; j < n; ++j)
    out[static_cast<std::size_t>(j)] = dot(query, anchors.subspan(static_cast<std::size_t>(j) * dim, dim));
}

void pair_sims(std::span<const double> embeddings, std::size_t dim,
               std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
               std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const auto& pr = pairs[static_cast<std::size_t>(p)];
    out[static_cast<std::size_t>(p)] =
        dot(embeddings.subspan(pr.first * dim, dim), embeddings.subspan(pr.second * dim, dim));
  }
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace srvf::kernels
