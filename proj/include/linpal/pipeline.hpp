#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linpal/error.hpp"
#include "linpal/featurizer.hpp"
#include "linpal/log.hpp"
#include "linpal/metrics.hpp"
#include "linpal/model.hpp"
#include "linpal/scorer.hpp"
#include "linpal/stats.hpp"
#include "linpal/trainer.hpp"

namespace linpal {

struct TrainOptions {
  TrainConfig train;
  Smoothing smoothing;
  HashConfig hash;
  int split_day = 35;
};

struct TrainOutcome {
  LinearModel model;
  FitReport report;
  double seconds = 0.0;
  std::size_t train_rows = 0;
};

inline std::size_t active_weight_count(const LinearModel& model, double threshold = 1e-8) {
  std::size_t n = 0;
  for (const auto& [id, w] : model.weights) n += std::abs(w) > threshold;
  return n;
}

/// Priors and featurized training rows for days <= split_day.
struct TrainingWindow {
  Priors priors;
  Dataset dataset;
};

inline TrainingWindow prepare_training_window(const ImpressionLog& log, const TrainOptions& options) {
  const auto days = log.days();
  const ImpressionLog train = log.filter([&](std::size_t i) { return days[i] <= options.split_day; });
  if (train.empty()) {
    fail(ErrorKind::empty_train, "no rows on or before split day " + std::to_string(options.split_day));
  }
  options.hash.validate(log.schema());
  TrainingWindow window;
  window.priors = fit_priors(train, options.smoothing, options.hash.max_rank);
  window.dataset = make_dataset(train, window.priors, options.hash);
  return window;
}

inline TrainOutcome fit_window(const TrainingWindow& window, const TrainConfig& config, int split_day) {
  const auto start = std::chrono::steady_clock::now();
  TrainOutcome out;
  out.model = fit(window.dataset, config, &out.report);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.model.priors = window.priors;
  out.model.split_day = split_day;
  out.train_rows = window.dataset.size();
  return out;
}

/// Fits priors and the model on rows with day <= split_day only.
inline TrainOutcome train_model(const ImpressionLog& log, const TrainOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const TrainingWindow window = prepare_training_window(log, options);
  TrainOutcome out = fit_window(window, options.train, options.split_day);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline ImpressionLog test_window(const ImpressionLog& log, int split_day) {
  const auto days = log.days();
  return log.filter([&](std::size_t i) { return days[i] > split_day; });
}

/// Where relevance labels come from: simulator ground truth, or clicks within
/// one rank stratum.
struct RelevanceSource {
  RelevanceMode mode = RelevanceMode::truth;
  std::vector<std::uint8_t> labels;  // truth mode, one per test row
  int stratum_rank = 1;              // stratified mode
};

/// Test rows featurized once (observed rank and do(K=1)) so several models
/// sharing the same priors can be scored cheaply.
struct EvaluationSet {
  FeatureBatch observed;
  std::vector<std::uint8_t> clicks;
  FeatureBatch counterfactual;
  std::vector<std::uint8_t> relevance;
  RelevanceMode mode = RelevanceMode::truth;
  double propensity_auc = std::nan("");
  std::size_t n_test = 0;
};

inline EvaluationSet make_evaluation_set(const ImpressionLog& test, const Priors& priors, const HashConfig& cfg,
                                         const RelevanceSource& source) {
  if (test.empty()) fail(ErrorKind::empty_input, "test window is empty");
  EvaluationSet set;
  set.mode = source.mode;
  set.n_test = test.size();
  set.observed = featurize_batch(test, priors, cfg);
  set.clicks.assign(test.clicks().begin(), test.clicks().end());
  set.propensity_auc = propensity_auc(test);
  if (source.mode == RelevanceMode::truth) {
    if (source.labels.size() != test.size()) {
      fail(ErrorKind::usage, "relevance labels do not match the test window size");
    }
    set.counterfactual = featurize_batch(test, priors, cfg, kReferenceRank);
    set.relevance = source.labels;
  } else {
    const auto ranks = test.ranks();
    const ImpressionLog stratum = test.filter([&](std::size_t i) { return ranks[i] == source.stratum_rank; });
    if (stratum.empty()) fail(ErrorKind::stratum, "no test rows at rank " + std::to_string(source.stratum_rank));
    set.counterfactual = featurize_batch(stratum, priors, cfg, kReferenceRank);
    set.relevance.assign(stratum.clicks().begin(), stratum.clicks().end());
  }
  return set;
}

inline EvaluationReport evaluate(const LinearModel& model, const EvaluationSet& set) {
  EvaluationReport report;
  report.standard_auc = auc(logits(model, set.observed), set.clicks);
  report.relevance_auc = auc(logits(model, set.counterfactual), set.relevance);
  report.relevance_mode = set.mode;
  report.propensity_auc = set.propensity_auc;
  report.n_test = set.n_test;
  return report;
}

inline EvaluationReport evaluate(const LinearModel& model, const ImpressionLog& test, const RelevanceSource& source) {
  return evaluate(model, make_evaluation_set(test, model.priors, model.hash_config, source));
}

// ---------------------------------------------------------------------------
// Regularization sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  double c = 0.0;
  double standard_auc = std::nan("");
  double relevance_auc = std::nan("");
  double train_seconds = 0.0;
  std::size_t active_weights = 0;
  std::optional<std::string> error;
};

struct SweepResult {
  RelevanceMode mode = RelevanceMode::truth;
  std::vector<SweepRow> rows;
};

/// One fit + evaluation per C. A failing cell is recorded and the sweep goes on.
inline SweepResult sweep(const TrainingWindow& train, const EvaluationSet& test, std::span<const double> c_grid,
                         TrainConfig base = {}, int split_day = 35) {
  if (c_grid.empty()) fail(ErrorKind::usage, "C grid is empty");
  SweepResult result;
  result.mode = test.mode;
  for (double c : c_grid) {
    SweepRow row;
    row.c = c;
    try {
      TrainConfig config = base;
      config.c_value = c;
      const TrainOutcome outcome = fit_window(train, config, split_day);
      const EvaluationReport report = evaluate(outcome.model, test);
      row.standard_auc = report.standard_auc;
      row.relevance_auc = report.relevance_auc;
      row.train_seconds = outcome.seconds;
      row.active_weights = active_weight_count(outcome.model);
    } catch (const Error& e) {
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace linpal
