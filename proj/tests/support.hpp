#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "linpal/linpal.hpp"

namespace linpal::fixtures {

// rank, price (heavy_tailed), rating (proportion), similarity, theme (categorical)
inline FeatureSchema small_schema() {
  return FeatureSchema({
      {"rank", FeatureKind::rank, 1},
      {"price", FeatureKind::heavy_tailed, 64},
      {"rating", FeatureKind::proportion, 21},
      {"similarity", FeatureKind::similarity, 11},
      {"theme", FeatureKind::categorical, 4},
  });
}

inline FeatureSchema schema_with_priors() {
  return FeatureSchema({
      {"price", FeatureKind::heavy_tailed, 64},
      {"rank", FeatureKind::rank, 1},
      {"rating", FeatureKind::proportion, 21},
      {"coec", FeatureKind::heavy_tailed, 64},
      {"ucoec", FeatureKind::heavy_tailed, 64},
      {"user_activity", FeatureKind::heavy_tailed, 64},
  });
}

/// Random schema-valid log. Raw values are drawn per kind.
inline ImpressionLog random_log(const FeatureSchema& schema, std::size_t rows, std::uint64_t seed,
                                int max_rank = 60, int n_items = 40, int n_users = 15) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ImpressionLog log(schema);
  std::vector<double> values(schema.raw_columns().size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < values.size(); ++j) {
      const FeatureSpec& spec = schema[schema.raw_columns()[j]];
      switch (spec.kind) {
        case FeatureKind::categorical: values[j] = static_cast<double>(rng() % spec.max_bins); break;
        case FeatureKind::proportion: values[j] = unit(rng); break;
        case FeatureKind::similarity: values[j] = 2.0 * unit(rng) - 1.0; break;
        case FeatureKind::heavy_tailed: values[j] = std::exp(8.0 * unit(rng)) - 1.0; break;
        case FeatureKind::rank: break;
      }
    }
    const int rank = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_rank));
    log.append(1 + static_cast<int>(i % 10), "s" + std::to_string(i / 12), "u" + std::to_string(rng() % n_users),
               "i" + std::to_string(rng() % n_items), rank, unit(rng) < 0.3, values);
  }
  return log;
}

inline SimulationConfig small_simulation(int sessions, std::uint64_t seed = 0) {
  SimulationConfig config;
  config.n_sessions = sessions;
  config.n_items = 120;
  config.n_users = 200;
  config.seed = seed;
  return config;
}

}  // namespace linpal::fixtures
