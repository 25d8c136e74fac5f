// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "linpal/io.hpp"
#include "linpal/linpal.hpp"

using namespace linpal;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %2d  %-34s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), pattern, args...);
  return buffer;
}

// One shared default-config run feeds criteria 5, 6, 8 and 9.
const Simulation& default_simulation() {
  static const Simulation sim = [] {
    SimulationConfig config;
    config.seed = 0;
    return generate(config);
  }();
  return sim;
}

void hash_roundtrip() {
  const auto start = Clock::now();
  const HashConfig cfg;
  std::size_t mismatches = 0;
  for (std::uint32_t f = 0; f < 8; ++f)
    for (std::uint32_t b = 0; b < 64; ++b)
      for (std::uint32_t k = 0; k <= 51; ++k) {
        mismatches += !(unhash_interaction(hash_interaction(f, b, k, cfg), cfg) == InteractionKey{f, b, k});
      }
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100'000; ++i) {
    const auto f = static_cast<std::uint32_t>(rng() % 4096);
    const auto b = static_cast<std::uint32_t>(rng() % 64);
    const auto k = static_cast<std::uint32_t>(rng() % 52);
    mismatches += !(unhash_interaction(hash_interaction(f, b, k, cfg), cfg) == InteractionKey{f, b, k});
  }
  const double secs = seconds_since(start);
  report(1, "hash roundtrip", mismatches == 0 && secs < 1.0,
         fmt("mismatches=%zu time=%.3fs (limit 1s)", mismatches, secs));
}

ImpressionLog random_log(const FeatureSchema& schema, std::size_t rows, std::uint64_t seed) {
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
        case FeatureKind::heavy_tailed: values[j] = std::exp(9.0 * unit(rng)) - 1.0; break;
        case FeatureKind::rank: break;
      }
    }
    log.append(1 + static_cast<int>(rng() % 45), "s" + std::to_string(i / 10), "u" + std::to_string(rng() % 50),
               "i" + std::to_string(rng() % 80), 1 + static_cast<int>(rng() % 70), unit(rng) < 0.3, values);
  }
  return log;
}

void gradient_check() {
  const auto start = Clock::now();
  const ImpressionLog log = random_log(simulator_schema(), 500, 2);
  const Dataset data = make_dataset(log, fit_priors(log), HashConfig{});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 0.3);
  LinearModel m;
  m.schema = data.schema;
  m.c_value = 0.5;
  m.intercept = normal(rng);
  for (InteractionId id : data.features.ids()) m.weights.try_emplace(id, normal(rng));

  const Gradient g = gradient(m, data);
  std::vector<InteractionId> ids;
  for (const auto& [id, v] : g.weights) ids.push_back(id);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::min<std::size_t>(100, ids.size()));
  double worst = 0.0;
  const double h = 1e-5;
  for (InteractionId id : ids) {
    LinearModel plus = m, minus = m;
    plus.weights[id] += h;
    minus.weights[id] -= h;
    const double numeric = (objective(plus, data) - objective(minus, data)) / (2.0 * h);
    const double analytic = g.weights.at(id);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-12));
  }
  const double secs = seconds_since(start);
  report(2, "gradient vs finite differences", ids.size() == 100 && worst < 1e-5 && secs < 10.0,
         fmt("coords=%zu max_rel_err=%.3g time=%.2fs (limits 1e-5, 10s)", ids.size(), worst, secs));
}

void featurizer_equivalence() {
  const ImpressionLog log = random_log(simulator_schema(), 10'000, 4);
  const Priors priors = fit_priors(log);
  const bool same = featurize_batch(log, priors, HashConfig{}) == featurize_string_reference(log, priors, HashConfig{});
  report(3, "fast featurizer == string reference", same, "rows=10000 bit-identical=" + std::string(same ? "yes" : "no"));
}

void auc_oracle() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int instance = 0; instance < 200; ++instance) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 12);
      y[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (y[i] && !y[j]) {
          pairs += 1.0;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    worst = std::max(worst, std::abs(auc(s, y) - wins / pairs));
  }
  report(4, "AUC vs brute force", worst <= 1e-12, fmt("instances=200 max_abs_diff=%.3g (limit 1e-12)", worst));
}

void calibration() {
  const auto start = Clock::now();
  const Simulation& sim = default_simulation();
  const double p = propensity_auc(sim.log);
  const double secs = seconds_since(start);
  report(5, "default propensity AUC", p >= 0.78 && p <= 0.84 && secs < 60.0,
         fmt("propensity_auc=%.4f (target [0.78, 0.84]) time=%.1fs", p, secs));
}

void regularization_tradeoff() {
  const auto start = Clock::now();
  const Simulation& sim = default_simulation();
  TrainOptions options;
  const TrainingWindow window = prepare_training_window(sim.log, options);
  const ImpressionLog test = test_window(sim.log, options.split_day);
  RelevanceSource source;
  source.labels = relevance_labels(sim.truth, test, 7);
  const EvaluationSet set = make_evaluation_set(test, window.priors, options.hash, source);
  const std::vector<double> grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0};
  const SweepResult result = sweep(window, set, grid, TrainConfig{}, options.split_day);

  std::string table;
  bool all_ok = true;
  std::size_t best_rel = 0, best_std = 0;
  double best_rel_strong = -1.0;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const SweepRow& row = result.rows[i];
    if (row.error) {
      all_ok = false;
      continue;
    }
    table += fmt(" C=%g:std=%.4f,rel=%.4f", row.c, row.standard_auc, row.relevance_auc);
    if (row.relevance_auc > result.rows[best_rel].relevance_auc) best_rel = i;
    if (row.standard_auc > result.rows[best_std].standard_auc) best_std = i;
    if (row.c <= 1e-4) best_rel_strong = std::max(best_rel_strong, row.relevance_auc);
  }
  const double secs = seconds_since(start);
  const double gap = best_rel_strong - result.rows.back().relevance_auc;
  const int steps = static_cast<int>(best_std) - static_cast<int>(best_rel);
  const double peak = result.rows[best_rel].relevance_auc;
  const bool a = gap >= 0.03, b = steps >= 2, c = peak >= 0.60;
  std::printf("      sweep (train rows %zu, test rows %zu):%s\n", window.dataset.size(), test.size(), table.c_str());
  report(6, "regularization trade-off", all_ok && a && b && c && secs < 900.0,
         fmt("(a) rel gap=%.4f [>=0.03 %s] (b) std argmax C=%g vs rel argmax C=%g, %d steps [>=2 %s] "
             "(c) rel peak=%.4f [>=0.60 %s] time=%.0fs",
             gap, a ? "ok" : "no", grid[best_std], grid[best_rel], steps, b ? "ok" : "no", peak, c ? "ok" : "no",
             secs));
}

void counterfactual_properties() {
  const Simulation sim = generate([] {
    SimulationConfig config;
    config.n_sessions = 3000;
    config.seed = 11;
    return config;
  }());
  TrainOptions options;
  options.train.c_value = 1.0;
  const LinearModel model = train_model(sim.log, options).model;
  const ImpressionLog test = test_window(sim.log, options.split_day);

  std::size_t rank_violations = 0, order_violations = 0;
  double worst_sum = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    Impression imp = test.row(i);
    const double base = counterfactual_score(model, imp);
    for (int k : {1, 2, 7, 12, 51, 400}) {
      imp.rank = k;
      rank_violations += counterfactual_score(model, imp) != base;
    }
    const Explanation e = explain(model, test.row(i), 1'000'000);
    double sum = e.intercept;
    for (const Contribution& t : e.terms) sum += t.weight;
    worst_sum = std::max(worst_sum, std::abs(sum - e.logit));
  }
  const std::size_t slate = 12;
  for (std::size_t s = 0; s + slate <= test.size(); s += slate) {
    std::vector<Impression> candidates;
    for (std::size_t j = 0; j < slate; ++j) candidates.push_back(test.row(s + j));
    const auto base = rerank(model, candidates);
    for (double shift : {-5.0, 3.0}) {
      LinearModel shifted = model;
      shifted.intercept += shift;
      const auto moved = rerank(shifted, candidates);
      for (std::size_t j = 0; j < slate; ++j) order_violations += moved[j].item_id != base[j].item_id;
    }
  }
  report(7, "counterfactual scoring properties",
         rank_violations == 0 && order_violations == 0 && worst_sum <= 1e-12,
         fmt("rank-dependence=%zu rerank-shift-changes=%zu explain max|sum-logit|=%.3g (limit 1e-12)",
             rank_violations, order_violations, worst_sum));
}

void featurizer_speed() {
  const Simulation& sim = default_simulation();
  const ImpressionLog log = sim.log.filter([](std::size_t i) { return i < 1'000'000; });
  const Priors priors = fit_priors(log);
  auto best_of = [](int reps, const std::function<FeatureBatch()>& run, FeatureBatch& out) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
      const auto start = Clock::now();
      out = run();
      best = std::min(best, seconds_since(start));
    }
    return best;
  };
  FeatureBatch fast, slow;
  const double t_fast = best_of(3, [&] { return featurize_batch(log, priors, HashConfig{}); }, fast);
  const double t_slow = best_of(2, [&] { return featurize_string_reference(log, priors, HashConfig{}); }, slow);
  const double speedup = t_slow / t_fast;
  report(8, "featurizer throughput", speedup >= 5.0 && fast == slow,
         fmt("rows=%zu fast=%.3fs reference=%.3fs speedup=%.1fx (target >=5x; 43x reported elsewhere "
             "is not reproducible here)",
             log.size(), t_fast, t_slow, speedup));
}

void coec_sanity() {
  const Simulation& sim = default_simulation();
  const Priors priors = fit_priors(sim.log, Smoothing{1.0, 20.0});
  std::vector<std::pair<double, double>> by_quality;  // (quality, coec)
  for (const auto& [item, quality] : sim.truth.item_quality) {
    by_quality.emplace_back(quality, priors.items.coec_for(item));
  }
  std::sort(by_quality.begin(), by_quality.end());
  const std::size_t decile = by_quality.size() / 10;
  double bottom = 0.0, top = 0.0;
  for (std::size_t i = 0; i < decile; ++i) {
    bottom += by_quality[i].second;
    top += by_quality[by_quality.size() - 1 - i].second;
  }
  bottom /= static_cast<double>(decile);
  top /= static_cast<double>(decile);
  report(9, "COEC tracks item quality", top > 1.0 && bottom < 1.0,
         fmt("top-decile mean=%.3f (>1) bottom-decile mean=%.3f (<1)", top, bottom));
}

struct RunArtifacts {
  std::string log, model, report;
};

RunArtifacts pipeline_run() {
  SimulationConfig config;
  config.n_sessions = 4000;
  config.seed = 21;
  const Simulation sim = generate(config);
  TrainOptions options;
  options.train.c_value = 1e-3;
  const LinearModel model = train_model(sim.log, options).model;
  const ImpressionLog test = test_window(sim.log, options.split_day);
  RelevanceSource source;
  source.labels = relevance_labels(sim.truth, test, 21);
  const EvaluationReport r = evaluate(model, test, source);

  RunArtifacts out;
  std::ostringstream log_text, model_text, report_text;
  io::write_log(log_text, sim.log);
  io::write_model(model_text, model);
  report_text << io::format_double(r.standard_auc) << ' ' << io::format_double(r.relevance_auc) << ' '
              << io::format_double(r.propensity_auc) << ' ' << r.n_test << '\n';
  for (std::size_t i = 0; i < test.size(); ++i) report_text << io::format_double(counterfactual_score(model, test.row(i))) << '\n';
  out.log = log_text.str();
  out.model = model_text.str();
  out.report = report_text.str();
  return out;
}

void determinism() {
  const RunArtifacts first = pipeline_run();
  const RunArtifacts second = pipeline_run();
  const bool log_same = first.log == second.log;
  const bool model_same = first.model == second.model;
  const bool report_same = first.report == second.report;
  report(10, "byte-identical reruns", log_same && model_same && report_same,
         fmt("log=%s model=%s report=%s", log_same ? "same" : "DIFF", model_same ? "same" : "DIFF",
             report_same ? "same" : "DIFF"));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> checks{
      hash_roundtrip,  gradient_check, featurizer_equivalence, auc_oracle,  calibration,
      regularization_tradeoff, counterfactual_properties, featurizer_speed, coec_sanity, determinism};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      std::printf("FAIL      unexpected error: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
