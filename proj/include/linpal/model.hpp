#pragma once

#include <cmath>
#include <span>
#include <unordered_map>

#include "linpal/core.hpp"
#include "linpal/error.hpp"
#include "linpal/stats.hpp"

namespace linpal {

/// Logistic model over interaction ids. The intercept is kept apart from the
/// weight table and is never penalized. Priors and split_day travel with the
/// model so scoring needs no access to the training log.
struct LinearModel {
  double intercept = 0.0;
  std::unordered_map<InteractionId, double> weights;
  HashConfig hash_config;
  FeatureSchema schema;
  double c_value = 1e-5;
  Priors priors;
  int split_day = 0;

  double weight(InteractionId id) const {
    auto it = weights.find(id);
    return it == weights.end() ? 0.0 : it->second;
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// intercept + sum of weights over the present ids.
inline double logit(const LinearModel& model, std::span<const InteractionId> ids) {
  double z = model.intercept;
  for (InteractionId id : ids) {
    try {
      unhash_interaction(id, model.hash_config, model.schema);
    } catch (const Error& e) {
      fail(ErrorKind::invalid_feature, e.what());
    }
    z += model.weight(id);
  }
  return z;
}

inline double logit(const LinearModel& model, const SparseFeatureVector& features) {
  return logit(model, features.ids);
}

inline double predict_proba(const LinearModel& model, const SparseFeatureVector& features) {
  return sigmoid(logit(model, features));
}

}  // namespace linpal
