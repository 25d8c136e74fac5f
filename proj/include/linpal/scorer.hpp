#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "linpal/core.hpp"
#include "linpal/featurizer.hpp"
#include "linpal/log.hpp"
#include "linpal/model.hpp"

namespace linpal {

/// Rank whose one-hot and crossed weights the do(K=1) intervention selects.
inline constexpr int kReferenceRank = 1;

inline SparseFeatureVector featurize(const LinearModel& model, const Impression& impression,
                                     std::optional<int> rank_override = std::nullopt) {
  return featurize(impression, model.priors, model.schema, model.hash_config, rank_override);
}

/// P(Y=1 | do(K=1), X=x): the impression is featurized as if shown at rank 1.
inline double counterfactual_score(const LinearModel& model, const Impression& impression) {
  return predict_proba(model, featurize(model, impression, kReferenceRank));
}

struct ScoredItem {
  std::string item_id;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

/// Descending score, ties by item_id ascending.
inline void sort_scored(std::vector<ScoredItem>& items) {
  std::sort(items.begin(), items.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
}

inline std::vector<ScoredItem> rerank(const LinearModel& model, std::span<const Impression> candidates) {
  std::vector<ScoredItem> out;
  out.reserve(candidates.size());
  for (const Impression& imp : candidates) out.push_back({imp.item_id, counterfactual_score(model, imp)});
  sort_scored(out);
  return out;
}

/// Logit of every row of a featurized batch.
inline std::vector<double> logits(const LinearModel& model, const FeatureBatch& batch) {
  std::vector<double> out(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) out[i] = logit(model, batch.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Explanation
// ---------------------------------------------------------------------------

struct Contribution {
  std::string feature;
  std::uint32_t bin = 0;
  std::uint32_t rank = 0;  // 0 for base (uncrossed) terms
  double weight = 0.0;
  InteractionId id = 0;
};

struct Explanation {
  double intercept = 0.0;
  double logit = 0.0;
  std::vector<Contribution> terms;  // sorted by |weight| descending, truncated
};

/// Decodes every active id of the impression (at its logged rank), joins the
/// schema names and keeps the top_n terms by |weight|. Zero-weight terms are
/// omitted; all terms plus the intercept sum to the logit.
inline Explanation explain(const LinearModel& model, const Impression& impression, std::size_t top_n) {
  const SparseFeatureVector features = featurize(model, impression);
  Explanation out;
  out.intercept = model.intercept;
  out.logit = logit(model, features);
  for (InteractionId id : features.ids) {
    const double w = model.weight(id);
    if (w == 0.0) continue;
    const InteractionKey key = unhash_interaction(id, model.hash_config, model.schema);
    out.terms.push_back({model.schema[key.feature].name, key.bin, key.rank, w, id});
  }
  std::stable_sort(out.terms.begin(), out.terms.end(), [](const Contribution& a, const Contribution& b) {
    if (std::abs(a.weight) != std::abs(b.weight)) return std::abs(a.weight) > std::abs(b.weight);
    return a.id < b.id;
  });
  if (out.terms.size() > top_n) out.terms.resize(top_n);
  return out;
}

/// Single-id explanation, used when a weight is inspected directly.
inline Contribution explain_id(const LinearModel& model, InteractionId id) {
  const InteractionKey key = unhash_interaction(id, model.hash_config, model.schema);
  return {model.schema[key.feature].name, key.bin, key.rank, model.weight(id), id};
}

}  // namespace linpal
