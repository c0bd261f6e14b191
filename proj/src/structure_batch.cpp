#include <exception>

#include "kgprompt/error.hpp"
#include "kgprompt/structure.hpp"

namespace kgprompt {
namespace {

StructureBundle extract_one(const KnowledgeGraph& kg, StructureKind kind, const PairRequest& req,
                            const ExtractionLimits& limits, std::uint64_t seed) {
  if (kind == StructureKind::NN) return extract_neighbors(kg, req.x, limits, seed);
  if (!req.y) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(to_string(kind)) + " extraction for '" + req.x.value + "' needs a pair");
  }
  if (kind == StructureKind::CNN) return extract_common_neighbors(kg, req.x, *req.y, limits, seed);
  return enumerate_metapaths(kg, req.x, *req.y, limits, seed);
}

}  // namespace

std::vector<StructureBundle> extract_batch(const KnowledgeGraph& kg, StructureKind kind,
                                           std::span<const PairRequest> requests,
                                           const ExtractionLimits& limits, std::uint64_t seed,
                                           Execution exec) {
  limits.validate();
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
  std::vector<StructureBundle> out(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());

  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = extract_one(kg, kind, requests[i], limits, seed);
    return out;
  }

  // Metapath cost varies by orders of magnitude between pairs.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = extract_one(kg, kind, requests[i], limits, seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // Report the lowest failing index, as the serial loop would.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<std::size_t> common_neighbor_counts(const KnowledgeGraph& kg,
                                                std::span<const std::pair<NodeIndex, NodeIndex>> pairs,
                                                Execution exec) {
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::vector<std::size_t> out(pairs.size());
  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = common_neighbor_indices(kg, pairs[i].first, pairs[i].second).size();
    }
    return out;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = common_neighbor_indices(kg, pairs[i].first, pairs[i].second).size();
  }
  return out;
}

}  // namespace kgprompt
