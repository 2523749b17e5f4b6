#include "smbr/decode.hpp"

#include <exception>
#include <sstream>

#include "smbr/error.hpp"

namespace smbr {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::standard: return "standard";
    case Method::cutoff: return "cutoff";
    case Method::cluster: return "cluster";
    case Method::embed: return "embed";
  }
  return "unknown";
}

Method parse_method(std::string_view s) {
  if (s == "standard") return Method::standard;
  if (s == "cutoff") return Method::cutoff;
  if (s == "cluster") return Method::cluster;
  if (s == "embed") return Method::embed;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected standard, cutoff, cluster or embed)");
}

std::string MethodConfig::describe() const {
  std::ostringstream s;
  s << to_string(method) << "(exclude_self=" << (effective_exclude_self() ? "true" : "false");
  switch (method) {
    case Method::standard: break;
    case Method::cutoff:
      s << ",tau=" << cutoff.tau << ",delta=" << cutoff.delta.tag() << ",mode=" << to_string(cutoff.mode);
      break;
    case Method::cluster:
      if (gold_clusters) {
        s << ",clusters=gold";
      } else {
        s << ",k=" << clustering.k_min << ".." << clustering.k_max << ",floor=" << clustering.silhouette_floor;
      }
      break;
    case Method::embed:
      s << ",cos_threshold=";
      if (cos_threshold) {
        s << *cos_threshold;
      } else {
        s << "none";
      }
      break;
  }
  s << ")";
  return s.str();
}

ClusterAssignment assign_clusters(const OutcomeSpace& space, const EmbeddingSet* embeddings, const MethodConfig& cfg) {
  if (cfg.gold_clusters) {
    const auto labels = space.labels();
    return gold_assignment(labels);
  }
  if (!embeddings) throw ConfigError("cluster method needs embeddings or gold clusters");
  const EmbeddingSet unit = embeddings->normalized() ? *embeddings : embeddings->normalize();
  SelectKParams params = cfg.clustering;
  if (unit.n() < 3) return ClusterAssignment::single(unit.n());
  params.k_max = std::min(params.k_max, unit.n() - 1);
  if (params.k_max < params.k_min) return ClusterAssignment::single(unit.n());
  return select_k(unit, params);
}

MbrResult decode_space(const OutcomeSpace& space, const UtilityMatrix& base, const EmbeddingSet* embeddings,
                       const MethodConfig& cfg) {
  if (base.n() != space.size())
    throw DataError("space " + space.id + ": matrix has n = " + std::to_string(base.n()) + ", space has " +
                    std::to_string(space.size()) + " candidates");
  if (embeddings && embeddings->n() != space.size())
    throw DataError("space " + space.id + ": embeddings have n = " + std::to_string(embeddings->n()) +
                    ", space has " + std::to_string(space.size()) + " candidates");
  const auto weights = space.weights();
  const bool exclude_self = cfg.effective_exclude_self();

  switch (cfg.method) {
    case Method::standard:
      return mbr_select(base, weights, exclude_self);
    case Method::cutoff:
      return cutoff_mbr(base, cfg.cutoff, weights, exclude_self);
    case Method::cluster: {
      const auto assignment = assign_clusters(space, embeddings, cfg);
      return cluster_mbr(base, assignment, weights, exclude_self);
    }
    case Method::embed: {
      if (!embeddings) throw ConfigError("embed method needs embeddings");
      const EmbeddingSet unit = embeddings->normalized() ? *embeddings : embeddings->normalize();
      return embedding_mbr(base, unit, cfg.cos_threshold, weights, exclude_self);
    }
  }
  throw ConfigError("unknown method");
}

std::vector<MbrResult> decode_corpus(const Corpus& corpus, std::span<const UtilityMatrix> matrices,
                                     std::span<const EmbeddingSet> embeddings, const MethodConfig& cfg) {
  if (matrices.size() != corpus.size())
    throw DataError(std::to_string(matrices.size()) + " matrices for " + std::to_string(corpus.size()) + " spaces");
  if (!embeddings.empty() && embeddings.size() != corpus.size())
    throw DataError(std::to_string(embeddings.size()) + " embedding sets for " + std::to_string(corpus.size()) +
                    " spaces");
  if (cfg.needs_embeddings() && embeddings.empty())
    throw ConfigError(std::string(to_string(cfg.method)) + " method needs embeddings");

  std::vector<MbrResult> results(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    try {
      results[i] = decode_space(corpus.spaces[i], matrices[i], embeddings.empty() ? nullptr : &embeddings[i], cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace smbr
