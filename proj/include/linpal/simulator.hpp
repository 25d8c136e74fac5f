#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "linpal/core.hpp"
#include "linpal/error.hpp"
#include "linpal/log.hpp"
#include "linpal/model.hpp"

namespace linpal {

enum class GridLayout { row_major, column_major };

/// Position-based click simulator configuration. The default propensity grid
/// is a 3x4 result-grid heatmap read in row-major order (ranks 1-12).
struct SimulationConfig {
  int n_items = 500;
  int n_users = 1000;
  int n_sessions = 100'000;
  int slate_size = 12;
  int days = 45;
  std::vector<double> propensity_grid = {1.00, 0.57, 0.40, 0.31, 0.23, 0.18, 0.16, 0.13, 0.11, 0.10, 0.09, 0.08};
  GridLayout grid_layout = GridLayout::row_major;
  int grid_columns = 4;
  double base_examination = 0.5;
  double logging_policy_noise = 0.5;
  double confounding_strength = 0.8;
  // r(u, i) = sigmoid(relevance_intercept + quality_weight q_i + affinity_weight [theme match])
  double relevance_intercept = -1.0;
  double quality_weight = 1.0;
  double affinity_weight = 0.5;
  // Scales the item-level noise in price, rating, review volume and visual quality.
  double feature_noise = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) fail(ErrorKind::config, what);
    };
    require(n_items >= 1, "n_items must be >= 1");
    require(n_users >= 1, "n_users must be >= 1");
    require(n_sessions >= 0, "n_sessions must be >= 0");
    require(slate_size >= 1 && slate_size <= n_items, "slate_size must be in [1, n_items]");
    require(days >= 1, "days must be >= 1");
    require(!propensity_grid.empty(), "propensity_grid must not be empty");
    for (double p : propensity_grid) require(p > 0.0 && p <= 1.0, "propensity_grid values must lie in (0, 1]");
    require(grid_columns >= 1, "grid_columns must be >= 1");
    require(grid_layout == GridLayout::row_major || propensity_grid.size() % grid_columns == 0,
            "column_major layout needs a grid size divisible by grid_columns");
    require(base_examination >= 0.0 && base_examination <= 1.0, "base_examination must lie in [0, 1]");
    require(logging_policy_noise >= 0.0 && std::isfinite(logging_policy_noise), "logging_policy_noise must be >= 0");
    require(confounding_strength >= 0.0 && confounding_strength <= 1.0, "confounding_strength must lie in [0, 1]");
    require(feature_noise >= 0.0 && std::isfinite(feature_noise), "feature_noise must be >= 0");
    require(std::isfinite(relevance_intercept) && std::isfinite(quality_weight) && std::isfinite(affinity_weight),
            "relevance parameters must be finite");
  }

  /// Grid value for a linear rank, before scaling by base_examination.
  double propensity(int rank) const {
    const int n = static_cast<int>(propensity_grid.size());
    if (rank <= n) {
      int cell = rank - 1;
      if (grid_layout == GridLayout::column_major) {
        const int rows = n / grid_columns;
        cell = (cell % rows) * grid_columns + cell / rows;
      }
      return propensity_grid[cell];
    }
    const double last = propensity(n);
    const double ratio = n >= 2 ? last / propensity(n - 1) : 1.0;
    return last * std::pow(ratio, rank - n);
  }

  double examination(int rank) const { return std::min(1.0, base_examination * propensity(rank)); }
};

/// Latent relevance per observed (user, item) pair and quality per item.
struct GroundTruth {
  std::unordered_map<std::string, double> relevance;  // key: user '\t' item
  std::unordered_map<std::string, double> item_quality;

  static std::string key(const std::string& user_id, const std::string& item_id) {
    return user_id + '\t' + item_id;
  }

  double relevance_for(const std::string& user_id, const std::string& item_id) const {
    auto it = relevance.find(key(user_id, item_id));
    if (it == relevance.end()) {
      fail(ErrorKind::io, "ground truth has no relevance for user '" + user_id + "' item '" + item_id + "'");
    }
    return it->second;
  }
};

/// Schema of the simulator's log plus the prior-derived columns.
inline FeatureSchema simulator_schema() {
  return FeatureSchema({
      {"rank", FeatureKind::rank, 1},
      {"price", FeatureKind::heavy_tailed, 64},
      {"rating", FeatureKind::proportion, 21},
      {"review_volume", FeatureKind::heavy_tailed, 64},
      {"visual_quality", FeatureKind::proportion, 21},
      {"similarity", FeatureKind::similarity, 11},
      {"theme", FeatureKind::categorical, 4},
      {"device", FeatureKind::categorical, 3},
      {"coec", FeatureKind::heavy_tailed, 64},
      {"ucoec", FeatureKind::heavy_tailed, 64},
      {"user_activity", FeatureKind::heavy_tailed, 64},
  });
}

struct Simulation {
  ImpressionLog log;
  GroundTruth truth;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Generates a click log under the position-based model
/// P(click | u, i, k) = examination(k) * r(u, i). Each session shows a slate of
/// distinct items ordered by confounding_strength * q + noise, so better items
/// tend to sit higher. Deterministic given the seed; session s draws from its
/// own stream seeded by splitmix64(seed ^ s).
inline Simulation generate(const SimulationConfig& config) {
  config.validate();
  constexpr int kThemes = 4;
  constexpr int kDevices = 3;

  std::mt19937_64 rng(detail::splitmix64(config.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> theme_dist(0, kThemes - 1);

  struct Item {
    std::string id;
    double quality;
    int theme;
    double price, rating, review_volume, visual_quality;
  };
  std::vector<Item> items(config.n_items);
  for (int i = 0; i < config.n_items; ++i) {
    Item& item = items[i];
    item.id = "i" + std::to_string(i);
    item.quality = normal(rng);
    item.theme = theme_dist(rng);
    const double noise = config.feature_noise;
    item.price = std::exp(3.5 + 0.25 * item.quality + 0.5 * noise * normal(rng));
    item.rating = detail::logistic(0.8 * item.quality + 0.8 * noise * normal(rng));
    item.review_volume = std::exp(2.0 + 0.5 * item.quality + 1.0 * noise * normal(rng));
    item.visual_quality = detail::logistic(0.4 * item.quality + 1.0 * noise * normal(rng));
  }

  struct User {
    std::string id;
    int theme;
    int device;
  };
  std::vector<User> users(config.n_users);
  std::vector<double> activity(config.n_users);
  for (int u = 0; u < config.n_users; ++u) {
    users[u] = {"u" + std::to_string(u), theme_dist(rng), static_cast<int>(rng() % kDevices)};
    activity[u] = std::exp(1.0 * normal(rng));  // heavy-tailed session frequency
  }
  std::discrete_distribution<int> pick_user(activity.begin(), activity.end());

  auto relevance = [&](const User& user, const Item& item) {
    return detail::logistic(config.relevance_intercept + config.quality_weight * item.quality +
                            config.affinity_weight * (user.theme == item.theme ? 1.0 : 0.0));
  };

  Simulation out{ImpressionLog(simulator_schema()), {}};
  out.log.reserve(static_cast<std::size_t>(config.n_sessions) * config.slate_size);
  for (const Item& item : items) out.truth.item_quality[item.id] = item.quality;

  std::vector<int> slate;
  std::unordered_set<int> chosen;
  std::vector<std::pair<double, int>> order;
  std::vector<double> values(7);
  for (int s = 0; s < config.n_sessions; ++s) {
    std::mt19937_64 session_rng(detail::splitmix64(config.seed ^ static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const User& user = users[pick_user(session_rng)];
    const int device = uniform(session_rng) < 0.7 ? user.device : static_cast<int>(session_rng() % kDevices);
    const int day = 1 + static_cast<int>(static_cast<std::int64_t>(s) * config.days / std::max(1, config.n_sessions));
    const std::string session_id = "s" + std::to_string(s);

    // Floyd's sampling of slate_size distinct items.
    slate.clear();
    chosen.clear();
    for (int j = config.n_items - config.slate_size; j < config.n_items; ++j) {
      const int t = std::uniform_int_distribution<int>(0, j)(session_rng);
      const int pick = chosen.insert(t).second ? t : j;
      if (pick == j) chosen.insert(j);
      slate.push_back(pick);
    }
    order.clear();
    for (int item : slate) {
      order.emplace_back(config.confounding_strength * items[item].quality +
                             config.logging_policy_noise * noise(session_rng),
                         item);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });

    for (int slot = 0; slot < config.slate_size; ++slot) {
      const Item& item = items[order[slot].second];
      const int rank = slot + 1;
      const double r = relevance(user, item);
      const bool clicked = uniform(session_rng) < config.examination(rank) * r;
      const double match = user.theme == item.theme ? 0.6 : -0.4;
      const double similarity = std::clamp(match + 0.3 * noise(session_rng), -1.0, 1.0);
      values = {item.price, item.rating, item.review_volume, item.visual_quality, similarity,
                static_cast<double>(item.theme), static_cast<double>(device)};
      out.log.append(day, session_id, user.id, item.id, rank, clicked, values);
      out.truth.relevance.try_emplace(GroundTruth::key(user.id, item.id), r);
    }
  }
  return out;
}

/// Bernoulli(r(u, i)) label per impression, independent of rank.
inline std::vector<std::uint8_t> relevance_labels(const GroundTruth& truth, const ImpressionLog& log,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0x5eedULL));
  std::vector<std::uint8_t> out(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double r = truth.relevance_for(log.users().value(i), log.items().value(i));
    out[i] = std::bernoulli_distribution(std::clamp(r, 0.0, 1.0))(rng) ? 1 : 0;
  }
  return out;
}

}  // namespace linpal
