#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linpal/error.hpp"
#include "linpal/featurizer.hpp"
#include "linpal/log.hpp"
#include "linpal/model.hpp"
#include "linpal/scorer.hpp"

namespace linpal {

/// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie).
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::usage, "scores and labels differ in length");
  std::int64_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) fail(ErrorKind::numeric, "NaN score at index " + std::to_string(i));
    positives += labels[i] != 0;
  }
  const std::int64_t n = static_cast<std::int64_t>(scores.size());
  const std::int64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) fail(ErrorKind::degenerate_label, "AUC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum, with tied groups sharing their mean rank.
  std::int64_t rank_sum_x2 = 0;
  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin + 1;
    while (end < order.size() && scores[order[end]] == scores[order[begin]]) ++end;
    const auto mid_rank_x2 = static_cast<std::int64_t>(begin + 1 + end);
    for (std::size_t i = begin; i < end; ++i) {
      if (labels[order[i]] != 0) rank_sum_x2 += mid_rank_x2;
    }
    begin = end;
  }
  const std::int64_t u_x2 = rank_sum_x2 - positives * (positives + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

/// AUC of predictions at the observed rank against observed clicks.
inline double standard_auc(const LinearModel& model, const ImpressionLog& test) {
  const auto scores = logits(model, featurize_batch(test, model.priors, model.hash_config));
  return auc(scores, test.clicks());
}

enum class RelevanceMode { truth, stratified };

inline std::string_view to_string(RelevanceMode mode) {
  return mode == RelevanceMode::truth ? "truth" : "stratified";
}

inline RelevanceMode parse_relevance_mode(std::string_view text) {
  if (text == "truth") return RelevanceMode::truth;
  if (text == "stratified") return RelevanceMode::stratified;
  fail(ErrorKind::usage, "unknown relevance mode '" + std::string(text) + "'");
}

/// Truth mode: AUC of do(K=1) scores against position-free relevance labels.
inline double relevance_auc(const LinearModel& model, const ImpressionLog& test,
                            std::span<const std::uint8_t> relevance_labels) {
  const auto scores = logits(model, featurize_batch(test, model.priors, model.hash_config, kReferenceRank));
  return auc(scores, relevance_labels);
}

/// Stratified mode: AUC of do(K=1) scores against clicks among rows logged at
/// one rank, where position is constant.
inline double relevance_auc_stratified(const LinearModel& model, const ImpressionLog& test, int stratum_rank) {
  const auto ranks = test.ranks();
  const ImpressionLog stratum = test.filter([&](std::size_t i) { return ranks[i] == stratum_rank; });
  if (stratum.empty()) fail(ErrorKind::stratum, "no test rows at rank " + std::to_string(stratum_rank));
  const auto scores = logits(model, featurize_batch(stratum, model.priors, model.hash_config, kReferenceRank));
  return auc(scores, stratum.clicks());
}

/// AUC of -rank against clicks: how much of the click signal rank alone explains.
inline double propensity_auc(const ImpressionLog& log) {
  std::vector<double> scores(log.size());
  const auto ranks = log.ranks();
  for (std::size_t i = 0; i < log.size(); ++i) scores[i] = -static_cast<double>(ranks[i]);
  return auc(scores, log.clicks());
}

struct EvaluationReport {
  double standard_auc = 0.0;
  double relevance_auc = 0.0;
  RelevanceMode relevance_mode = RelevanceMode::truth;
  double propensity_auc = 0.0;
  std::size_t n_test = 0;
};

}  // namespace linpal
