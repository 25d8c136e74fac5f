#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "linpal/error.hpp"
#include "linpal/log.hpp"

namespace linpal {

/// Additive smoothing (clicks + alpha) / (denominator + beta), shared by the
/// position baselines and COEC.
struct Smoothing {
  double alpha = 1.0;
  double beta = 20.0;

  bool operator==(const Smoothing&) const = default;
};

/// Expected CTR per display rank (the COEC denominator).
struct PositionPropensityTable {
  std::map<std::uint32_t, double> expected_ctr;
  Smoothing smoothing;
  std::uint32_t overflow_rank = 51;

  /// Ranks above the overflow slot share it; ranks never observed inherit the
  /// overflow slot's value.
  double lookup(std::int64_t rank) const {
    const std::uint32_t slot =
        rank >= static_cast<std::int64_t>(overflow_rank) ? overflow_rank : static_cast<std::uint32_t>(rank);
    if (auto it = expected_ctr.find(slot); it != expected_ctr.end()) return it->second;
    auto overflow = expected_ctr.find(overflow_rank);
    return overflow == expected_ctr.end() ? 0.0 : overflow->second;
  }

  bool operator==(const PositionPropensityTable&) const = default;
};

inline PositionPropensityTable fit_position_ctr(const ImpressionLog& log, Smoothing smoothing = {},
                                                std::uint32_t max_rank = 50) {
  if (log.empty()) fail(ErrorKind::empty_input, "cannot fit position CTR on an empty log");
  if (!(smoothing.beta > 0.0) || smoothing.alpha < 0.0) {
    fail(ErrorKind::config, "position CTR smoothing needs alpha >= 0 and beta > 0");
  }
  const std::uint32_t overflow = max_rank + 1;
  std::vector<double> clicks(overflow + 1, 0.0);
  std::vector<double> shown(overflow + 1, 0.0);
  const auto ranks = log.ranks();
  const auto clicked = log.clicks();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const std::size_t slot = ranks[i] > static_cast<int>(max_rank) ? overflow : static_cast<std::size_t>(ranks[i]);
    shown[slot] += 1.0;
    clicks[slot] += clicked[i];
  }
  PositionPropensityTable table;
  table.smoothing = smoothing;
  table.overflow_rank = overflow;
  for (std::uint32_t k = 1; k <= overflow; ++k) {
    if (shown[k] > 0.0 || k == overflow) {
      table.expected_ctr[k] = (clicks[k] + smoothing.alpha) / (shown[k] + smoothing.beta);
    }
  }
  return table;
}

inline double global_ctr(const ImpressionLog& log) {
  if (log.empty()) fail(ErrorKind::empty_input, "cannot compute global CTR on an empty log");
  double clicks = 0.0;
  for (auto c : log.clicks()) clicks += c;
  return clicks / static_cast<double>(log.size());
}

struct ItemAccumulator {
  double clicks = 0.0;
  double expected_clicks = 0.0;
  std::uint64_t impressions = 0;

  ItemAccumulator& operator+=(const ItemAccumulator& other) {
    clicks += other.clicks;
    expected_clicks += other.expected_clicks;
    impressions += other.impressions;
    return *this;
  }

  bool operator==(const ItemAccumulator&) const = default;
};

inline double smoothed_ratio(double numerator, double denominator, Smoothing smoothing) {
  const double den = denominator + smoothing.beta;
  if (!(den > 0.0)) fail(ErrorKind::division_hazard, "COEC denominator is zero");
  return (numerator + smoothing.alpha) / den;
}

/// COEC for one item over a log: (clicks + alpha) / (sum of expected CTR at the
/// logged ranks + beta).
inline double coec(std::string_view item_id, const ImpressionLog& log, const PositionPropensityTable& positions,
                   Smoothing smoothing) {
  ItemAccumulator acc;
  const auto ranks = log.ranks();
  const auto clicked = log.clicks();
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.items().value(i) != item_id) continue;
    acc.clicks += clicked[i];
    acc.expected_clicks += positions.lookup(ranks[i]);
  }
  return smoothed_ratio(acc.clicks, acc.expected_clicks, smoothing);
}

/// Per-item COEC plus the other training-window aggregates the featurizer needs.
struct PriorTable {
  std::map<std::string, double> coec;
  std::map<std::string, ItemAccumulator> items;
  std::map<std::string, std::uint64_t> user_impressions;
  double global_ctr = 0.0;
  Smoothing smoothing;

  /// Items unseen in training get the smoothed estimator's prior alpha/beta.
  double coec_for(const std::string& item_id) const {
    if (auto it = coec.find(item_id); it != coec.end()) return it->second;
    return smoothing.beta > 0.0 ? smoothing.alpha / smoothing.beta : 0.0;
  }

  double user_activity(const std::string& user_id) const {
    auto it = user_impressions.find(user_id);
    return it == user_impressions.end() ? 0.0 : static_cast<double>(it->second);
  }

  bool operator==(const PriorTable&) const = default;
};

inline double ucoec(double item_coec, double global) {
  if (!(global > 0.0)) fail(ErrorKind::division_hazard, "global CTR is zero");
  return item_coec / global;
}

inline double ucoec(const std::string& item_id, const PriorTable& priors) {
  return ucoec(priors.coec_for(item_id), priors.global_ctr);
}

inline PriorTable fit_prior_table(const ImpressionLog& log, const PositionPropensityTable& positions,
                                  Smoothing smoothing) {
  if (log.empty()) fail(ErrorKind::empty_input, "cannot fit priors on an empty log");
  std::vector<ItemAccumulator> per_item(log.items().dictionary().size());
  std::vector<std::uint64_t> per_user(log.users().dictionary().size(), 0);
  const auto ranks = log.ranks();
  const auto clicked = log.clicks();
  double clicks = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    ItemAccumulator& acc = per_item[log.items().code(i)];
    acc.clicks += clicked[i];
    acc.expected_clicks += positions.lookup(ranks[i]);
    acc.impressions += 1;
    per_user[log.users().code(i)] += 1;
    clicks += clicked[i];
  }
  PriorTable table;
  table.smoothing = smoothing;
  table.global_ctr = clicks / static_cast<double>(log.size());
  const auto items = log.items().dictionary();
  for (std::size_t c = 0; c < items.size(); ++c) {
    if (per_item[c].impressions == 0) continue;
    table.items[items[c]] = per_item[c];
    table.coec[items[c]] = smoothed_ratio(per_item[c].clicks, per_item[c].expected_clicks, smoothing);
  }
  const auto users = log.users().dictionary();
  for (std::size_t c = 0; c < users.size(); ++c) {
    if (per_user[c] > 0) table.user_impressions[users[c]] = per_user[c];
  }
  return table;
}

/// Everything scoring needs from the training window.
struct Priors {
  PositionPropensityTable position;
  PriorTable items;

  bool operator==(const Priors&) const = default;
};

inline Priors fit_priors(const ImpressionLog& log, Smoothing smoothing = {}, std::uint32_t max_rank = 50) {
  Priors priors;
  priors.position = fit_position_ctr(log, smoothing, max_rank);
  priors.items = fit_prior_table(log, priors.position, smoothing);
  return priors;
}

}  // namespace linpal
