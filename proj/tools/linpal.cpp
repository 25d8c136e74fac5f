#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "linpal/linpal.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace linpal;

namespace {

constexpr const char* kDefaultGrid = "1e-6,1e-5,1e-4,1e-3,1e-2,0.1,1.0";

struct Options {
  std::uint64_t seed = 0;
  double c = 1e-5;
  int split_day = 35;
  std::string grid = kDefaultGrid;
  std::string mode;
  int rank_stratum = 1;
  std::string out;

  std::string config_path;
  std::string log_path;
  std::string schema_path;
  std::string model_path;
  std::string truth_path;
  std::size_t row = 0;
  std::size_t top = 10;
  std::string session;
  std::size_t rows = 1'000'000;
  int repetitions = 3;
  std::optional<std::uint64_t> seed_override;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json to_json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  for (auto part : io::split(text, ',')) {
    const std::string_view token = io::trim(part);
    if (token.empty()) fail(ErrorKind::usage, "empty entry in --grid");
    const double c = io::parse_double(token, "--grid");
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::usage, "--grid values must be positive and finite");
    if (std::find(grid.begin(), grid.end(), c) != grid.end()) {
      std::cerr << "warning: duplicate C value " << io::format_double(c) << " ignored\n";
      continue;
    }
    grid.push_back(c);
  }
  if (grid.empty()) fail(ErrorKind::usage, "--grid is empty");
  return grid;
}

RelevanceSource relevance_source(const Options& opt, const ImpressionLog& test) {
  RelevanceSource source;
  std::string mode = opt.mode;
  if (mode.empty()) mode = opt.truth_path.empty() ? "stratified" : "truth";
  source.mode = parse_relevance_mode(mode);
  source.stratum_rank = opt.rank_stratum;
  if (source.mode == RelevanceMode::truth) {
    if (opt.truth_path.empty()) fail(ErrorKind::usage, "--mode truth needs --truth");
    source.labels = relevance_labels(io::read_truth(opt.truth_path), test, opt.seed);
  }
  return source;
}

json report_json(const EvaluationReport& r, const LinearModel& model) {
  return json{{"standard_auc", to_json_number(r.standard_auc)},
              {"relevance_auc", to_json_number(r.relevance_auc)},
              {"relevance_mode", std::string(to_string(r.relevance_mode))},
              {"propensity_auc", to_json_number(r.propensity_auc)},
              {"n_test", r.n_test},
              {"c_value", model.c_value},
              {"split_day", model.split_day}};
}

int cmd_simulate(const Options& opt) {
  if (opt.out.empty()) fail(ErrorKind::usage, "--out directory is required");
  std::map<std::string, std::string> values;
  if (!opt.config_path.empty()) {
    std::ifstream in = io::open_input(opt.config_path);
    values = io::parse_key_values(in);
  }
  SimulationConfig config = io::simulation_config_from(values);
  if (opt.seed_override) config.seed = *opt.seed_override;

  const auto start = std::chrono::steady_clock::now();
  const Simulation sim = generate(config);
  const fs::path dir(opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
  io::write_log(dir / "impressions.csv", sim.log);
  io::write_truth(dir / "truth.tsv", sim.truth);
  io::write_schema(dir / "schema.tsv", sim.log.schema());
  {
    std::ofstream out = io::open_output(dir / "config.txt");
    io::write_simulation_config(out, config);
  }
  std::printf("simulated %zu impressions (%d sessions) in %.2f s; propensity_auc %.4f\n", sim.log.size(),
              config.n_sessions, seconds_since(start), sim.log.empty() ? 0.5 : propensity_auc(sim.log));
  return 0;
}

ImpressionLog load_log(const Options& opt) {
  if (opt.log_path.empty()) fail(ErrorKind::usage, "--log is required");
  if (opt.schema_path.empty()) fail(ErrorKind::usage, "--schema is required");
  return io::read_log(opt.log_path, io::read_schema(opt.schema_path));
}

int cmd_train(const Options& opt) {
  if (opt.out.empty()) fail(ErrorKind::usage, "--out model path is required");
  const ImpressionLog log = load_log(opt);
  TrainOptions options;
  options.train.c_value = opt.c;
  options.train.seed = opt.seed;
  options.split_day = opt.split_day;
  const TrainOutcome outcome = train_model(log, options);
  io::write_model(opt.out, outcome.model);
  std::printf("trained on %zu rows in %.3f s; %zu active weights; %d iterations%s\n", outcome.train_rows,
              outcome.seconds, active_weight_count(outcome.model), outcome.report.iterations,
              outcome.report.converged ? "" : " (iteration limit reached)");
  return 0;
}

int cmd_evaluate(const Options& opt) {
  if (opt.model_path.empty()) fail(ErrorKind::usage, "--model is required");
  if (opt.log_path.empty()) fail(ErrorKind::usage, "--log is required");
  const LinearModel model = io::read_model(opt.model_path);
  const ImpressionLog log = io::read_log(opt.log_path, model.schema);
  const ImpressionLog test = test_window(log, model.split_day);
  if (test.empty()) fail(ErrorKind::empty_input, "no rows after split day " + std::to_string(model.split_day));
  const EvaluationReport report = evaluate(model, test, relevance_source(opt, test));
  const json doc = report_json(report, model);
  if (!opt.out.empty()) {
    std::ofstream out = io::open_output(opt.out);
    out << doc.dump(2) << '\n';
  }
  std::printf("standard_auc   %.4f\nrelevance_auc  %.4f (%s)\npropensity_auc %.4f\nn_test         %zu\n",
              report.standard_auc, report.relevance_auc, std::string(to_string(report.relevance_mode)).c_str(),
              report.propensity_auc, report.n_test);
  return 0;
}

int cmd_sweep(const Options& opt) {
  const std::vector<double> grid = parse_grid(opt.grid);
  const ImpressionLog log = load_log(opt);
  TrainOptions options;
  options.split_day = opt.split_day;
  options.train.seed = opt.seed;
  const TrainingWindow window = prepare_training_window(log, options);
  const ImpressionLog test = test_window(log, opt.split_day);
  const EvaluationSet set = make_evaluation_set(test, window.priors, options.hash, relevance_source(opt, test));
  const SweepResult result = sweep(window, set, grid, options.train, opt.split_day);

  std::optional<std::ofstream> out;
  if (!opt.out.empty()) out = io::open_output(opt.out);
  std::printf("%-10s %-14s %-14s %-10s %s\n", "C", "standard_auc", "relevance_auc", "seconds", "active");
  for (const SweepRow& row : result.rows) {
    json line{{"c", row.c},
              {"standard_auc", to_json_number(row.standard_auc)},
              {"relevance_auc", to_json_number(row.relevance_auc)},
              {"relevance_mode", std::string(to_string(result.mode))},
              {"train_seconds", row.train_seconds},
              {"active_weights", row.active_weights},
              {"error", row.error ? json(*row.error) : json(nullptr)}};
    if (out) *out << line.dump() << '\n';
    if (row.error) {
      std::printf("%-10g failed: %s\n", row.c, row.error->c_str());
    } else {
      std::printf("%-10g %-14.4f %-14.4f %-10.2f %zu\n", row.c, row.standard_auc, row.relevance_auc,
                  row.train_seconds, row.active_weights);
    }
  }
  std::printf("relevance mode: %s\n", std::string(to_string(result.mode)).c_str());
  return 0;
}

int cmd_explain(const Options& opt) {
  if (opt.model_path.empty()) fail(ErrorKind::usage, "--model is required");
  if (opt.log_path.empty()) fail(ErrorKind::usage, "--log is required");
  const LinearModel model = io::read_model(opt.model_path);
  const ImpressionLog log = io::read_log(opt.log_path, model.schema);
  if (opt.row >= log.size()) {
    fail(ErrorKind::usage, "--row " + std::to_string(opt.row) + " is out of range (log has " +
                               std::to_string(log.size()) + " rows)");
  }
  const Impression imp = log.row(opt.row);
  const Explanation e = explain(model, imp, opt.top);
  std::printf("session %s  user %s  item %s  rank %d  clicked %d\n", imp.session_id.c_str(), imp.user_id.c_str(),
              imp.item_id.c_str(), imp.rank, imp.clicked ? 1 : 0);
  std::printf("logit %.6f  probability %.6f  intercept %.6f\n", e.logit, sigmoid(e.logit), e.intercept);
  std::printf("%-16s %5s %5s %12s  %s\n", "feature", "bin", "rank", "weight", "id");
  for (const Contribution& c : e.terms) {
    std::printf("%-16s %5u %5u %12.6f  %llu\n", c.feature.c_str(), c.bin, c.rank, c.weight,
                static_cast<unsigned long long>(c.id));
  }
  return 0;
}

int cmd_score(const Options& opt) {
  if (opt.model_path.empty()) fail(ErrorKind::usage, "--model is required");
  if (opt.log_path.empty()) fail(ErrorKind::usage, "--log is required");
  const LinearModel model = io::read_model(opt.model_path);
  const ImpressionLog log = io::read_log(opt.log_path, model.schema);

  // Group rows by session, keeping first-appearance order.
  std::vector<std::uint32_t> order;
  std::map<std::uint32_t, std::vector<Impression>> by_session;
  const auto sessions = log.sessions().codes();
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!opt.session.empty() && log.sessions().value(i) != opt.session) continue;
    auto [it, inserted] = by_session.try_emplace(sessions[i]);
    if (inserted) order.push_back(sessions[i]);
    it->second.push_back(log.row(i));
  }
  if (!opt.session.empty() && order.empty()) fail(ErrorKind::usage, "session '" + opt.session + "' not in log");

  std::optional<std::ofstream> file;
  if (!opt.out.empty()) file = io::open_output(opt.out);
  std::ostream& out = file ? static_cast<std::ostream&>(*file) : std::cout;
  // One item_id<TAB>score block per session; blocks get a "# session" line
  // unless a single session was requested.
  for (std::uint32_t code : order) {
    const auto& candidates = by_session.at(code);
    if (opt.session.empty()) out << "# session " << candidates.front().session_id << '\n';
    for (const ScoredItem& item : rerank(model, candidates)) {
      out << item.item_id << '\t' << io::format_double(item.score) << '\n';
    }
  }
  return 0;
}

int cmd_bench(const Options& opt) {
  if (opt.repetitions < 1) fail(ErrorKind::usage, "--reps must be >= 1");
  if (opt.rows == 0) {
    std::printf("rows 0: nothing to featurize; equivalence PASS\n");
    return 0;
  }
  SimulationConfig config;
  config.seed = opt.seed;
  config.n_sessions = static_cast<int>((opt.rows + config.slate_size - 1) / config.slate_size);
  const Simulation sim = generate(config);
  const ImpressionLog log = sim.log.filter([&](std::size_t i) { return i < opt.rows; });
  const HashConfig cfg;
  const Priors priors = fit_priors(log, Smoothing{}, cfg.max_rank);

  double fast = 1e300;
  double slow = 1e300;
  FeatureBatch a, b;
  for (int r = 0; r < opt.repetitions; ++r) {
    auto start = std::chrono::steady_clock::now();
    a = featurize_batch(log, priors, cfg);
    fast = std::min(fast, seconds_since(start));
    start = std::chrono::steady_clock::now();
    b = featurize_string_reference(log, priors, cfg);
    slow = std::min(slow, seconds_since(start));
  }
  const bool equal = a == b;
  const double n = static_cast<double>(log.size());
  std::printf("rows %zu, best of %d\n", log.size(), opt.repetitions);
  std::printf("featurize_batch            %8.3f s  %12.0f rows/s\n", fast, n / fast);
  std::printf("featurize_string_reference %8.3f s  %12.0f rows/s\n", slow, n / slow);
  std::printf("speedup %.1fx; equivalence %s\n", slow / fast, equal ? "PASS" : "FAIL");
  if (!equal) fail(ErrorKind::numeric, "featurize_batch and the string reference disagree");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-bias aware linear ranking: simulate, train, evaluate, sweep, explain, score, bench"};
  app.require_subcommand(1);
  Options opt;

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic click log");
  simulate->add_option("--config", opt.config_path, "key=value simulation config (defaults if omitted)");
  simulate->add_option("--seed", opt.seed_override, "override the config seed");
  simulate->add_option("--out", opt.out, "output directory")->required();

  auto* train = app.add_subcommand("train", "fit priors and weights on days <= split day");
  train->add_option("--log", opt.log_path, "impression log CSV")->required();
  train->add_option("--schema", opt.schema_path, "feature schema TSV")->required();
  train->add_option("--c", opt.c, "inverse regularization strength")->capture_default_str();
  train->add_option("--split-day", opt.split_day, "last training day")->capture_default_str();
  train->add_option("--seed", opt.seed, "seed (recorded; the solver is deterministic)");
  train->add_option("--out", opt.out, "model file")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "metrics on days after the model's split day");
  evaluate_cmd->add_option("--model", opt.model_path)->required();
  evaluate_cmd->add_option("--log", opt.log_path)->required();
  evaluate_cmd->add_option("--truth", opt.truth_path, "ground-truth relevance TSV from simulate");
  evaluate_cmd->add_option("--mode", opt.mode, "relevance mode")->check(CLI::IsMember({"truth", "stratified"}));
  evaluate_cmd->add_option("--rank-stratum", opt.rank_stratum, "rank used by stratified mode")
      ->capture_default_str();
  evaluate_cmd->add_option("--seed", opt.seed, "seed for relevance label draws")->capture_default_str();
  evaluate_cmd->add_option("--out", opt.out, "JSON report path");

  auto* sweep_cmd = app.add_subcommand("sweep", "train and evaluate over a grid of C values");
  sweep_cmd->add_option("--log", opt.log_path)->required();
  sweep_cmd->add_option("--schema", opt.schema_path)->required();
  sweep_cmd->add_option("--truth", opt.truth_path);
  sweep_cmd->add_option("--grid", opt.grid, "comma-separated C values")->capture_default_str();
  sweep_cmd->add_option("--split-day", opt.split_day)->capture_default_str();
  sweep_cmd->add_option("--mode", opt.mode)->check(CLI::IsMember({"truth", "stratified"}));
  sweep_cmd->add_option("--rank-stratum", opt.rank_stratum)->capture_default_str();
  sweep_cmd->add_option("--seed", opt.seed)->capture_default_str();
  sweep_cmd->add_option("--out", opt.out, "JSON lines results path");

  auto* explain_cmd = app.add_subcommand("explain", "per-term weights for one impression");
  explain_cmd->add_option("--model", opt.model_path)->required();
  explain_cmd->add_option("--log", opt.log_path)->required();
  explain_cmd->add_option("--row", opt.row, "0-based row index in the log")->required();
  explain_cmd->add_option("--top", opt.top, "number of terms")->capture_default_str();

  auto* score_cmd = app.add_subcommand("score", "rerank sessions by do(K=1) score");
  score_cmd->add_option("--model", opt.model_path)->required();
  score_cmd->add_option("--log", opt.log_path)->required();
  score_cmd->add_option("--session", opt.session, "only this session");
  score_cmd->add_option("--out", opt.out, "output file (stdout if omitted)");

  auto* bench = app.add_subcommand("bench", "integer kernel vs string reference featurization");
  bench->add_option("--rows", opt.rows)->capture_default_str();
  bench->add_option("--reps", opt.repetitions)->capture_default_str();
  bench->add_option("--seed", opt.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(opt);
    if (*train) return cmd_train(opt);
    if (*evaluate_cmd) return cmd_evaluate(opt);
    if (*sweep_cmd) return cmd_sweep(opt);
    if (*explain_cmd) return cmd_explain(opt);
    if (*score_cmd) return cmd_score(opt);
    if (*bench) return cmd_bench(opt);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.kind() == ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
