#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "linpal/core.hpp"
#include "linpal/error.hpp"
#include "linpal/log.hpp"
#include "linpal/model.hpp"
#include "linpal/simulator.hpp"
#include "linpal/stats.hpp"

namespace linpal::io {

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view text, std::string_view context) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::io, std::string(context) + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view text, std::string_view context) {
  text = trim(text);
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::io, std::string(context) + ": cannot parse integer '" + std::string(text) + "'");
  }
  return value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// ---------------------------------------------------------------------------
// Schema file: name<TAB>kind<TAB>max_bins per line
// ---------------------------------------------------------------------------

inline FeatureSchema parse_schema(std::istream& in) {
  std::vector<FeatureSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    const std::string context = "schema line " + std::to_string(line_no);
    if (fields.size() != 3) fail(ErrorKind::schema, context + ": expected name<TAB>kind<TAB>max_bins");
    specs.push_back({std::string(trim(fields[0])), parse_feature_kind(trim(fields[1])),
                     parse_int<std::uint32_t>(fields[2], context)});
  }
  return FeatureSchema(std::move(specs));
}

inline void write_schema(std::ostream& out, const FeatureSchema& schema) {
  for (const auto& spec : schema.specs()) {
    out << spec.name << '\t' << to_string(spec.kind) << '\t' << spec.max_bins << '\n';
  }
}

inline FeatureSchema read_schema(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_schema(in);
}

inline void write_schema(const std::filesystem::path& path, const FeatureSchema& schema) {
  auto out = open_output(path);
  write_schema(out, schema);
}

// ---------------------------------------------------------------------------
// Impression log CSV: day,session_id,user_id,item_id,rank,clicked,<raw columns>
// ---------------------------------------------------------------------------

inline constexpr std::string_view kLogFixedColumns[] = {"day", "session_id", "user_id", "item_id", "rank", "clicked"};

inline void write_log(std::ostream& out, const ImpressionLog& log) {
  const FeatureSchema& schema = log.schema();
  for (std::size_t c = 0; c < std::size(kLogFixedColumns); ++c) out << (c ? "," : "") << kLogFixedColumns[c];
  for (std::size_t j : schema.raw_columns()) out << ',' << schema[j].name;
  out << '\n';
  const std::size_t raw = schema.raw_columns().size();
  for (std::size_t i = 0; i < log.size(); ++i) {
    out << log.days()[i] << ',' << log.sessions().value(i) << ',' << log.users().value(i) << ','
        << log.items().value(i) << ',' << log.ranks()[i] << ',' << static_cast<int>(log.clicks()[i]);
    for (std::size_t j = 0; j < raw; ++j) out << ',' << format_double(log.raw_column(j)[i]);
    out << '\n';
  }
}

inline ImpressionLog parse_log(std::istream& in, const FeatureSchema& schema) {
  ImpressionLog log(schema);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::io, "impression log is empty (no header)");
  strip_cr(line);
  const auto header = split(line, ',');
  const auto raw = schema.raw_columns();
  bool header_ok = header.size() == std::size(kLogFixedColumns) + raw.size();
  for (std::size_t c = 0; header_ok && c < header.size(); ++c) {
    const std::string_view expected =
        c < std::size(kLogFixedColumns) ? kLogFixedColumns[c] : std::string_view(schema[raw[c - 6]].name);
    header_ok = trim(header[c]) == expected;
  }
  if (!header_ok) fail(ErrorKind::schema, "impression log header does not match the schema: " + line);

  std::vector<double> values(raw.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    const std::string context = "log line " + std::to_string(line_no);
    if (fields.size() != header.size()) fail(ErrorKind::io, context + ": wrong number of columns");
    for (std::size_t j = 0; j < raw.size(); ++j) values[j] = parse_double(fields[6 + j], context);
    const int clicked = parse_int<int>(fields[5], context);
    if (clicked != 0 && clicked != 1) fail(ErrorKind::io, context + ": clicked must be 0 or 1");
    try {
      log.append(parse_int<int>(fields[0], context), fields[1], fields[2], fields[3], parse_int<int>(fields[4], context),
                 clicked == 1, values);
    } catch (const Error& e) {
      fail(e.kind(), context + ": " + e.what());
    }
  }
  return log;
}

inline ImpressionLog read_log(const std::filesystem::path& path, const FeatureSchema& schema) {
  auto in = open_input(path);
  return parse_log(in, schema);
}

inline void write_log(const std::filesystem::path& path, const ImpressionLog& log) {
  auto out = open_output(path);
  write_log(out, log);
}

// ---------------------------------------------------------------------------
// Ground truth sidecar: user_id<TAB>item_id<TAB>r, sorted
// ---------------------------------------------------------------------------

inline void write_truth(std::ostream& out, const GroundTruth& truth) {
  std::vector<std::pair<std::string, double>> rows(truth.relevance.begin(), truth.relevance.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [key, r] : rows) out << key << '\t' << format_double(r) << '\n';
}

inline GroundTruth parse_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    const std::string context = "truth line " + std::to_string(line_no);
    if (fields.size() != 3) fail(ErrorKind::io, context + ": expected user_id<TAB>item_id<TAB>r");
    const double r = parse_double(fields[2], context);
    if (!(r >= 0.0 && r <= 1.0)) fail(ErrorKind::io, context + ": relevance outside [0, 1]");
    truth.relevance[GroundTruth::key(std::string(fields[0]), std::string(fields[1]))] = r;
  }
  return truth;
}

inline void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  auto out = open_output(path);
  write_truth(out, truth);
}

inline GroundTruth read_truth(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_truth(in);
}

// ---------------------------------------------------------------------------
// key=value config files
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    out[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
  }
  return out;
}

inline SimulationConfig simulation_config_from(const std::map<std::string, std::string>& values) {
  SimulationConfig config;
  for (const auto& [key, value] : values) {
    const std::string context = "config key '" + key + "'";
    if (key == "n_items") config.n_items = parse_int<int>(value, context);
    else if (key == "n_users") config.n_users = parse_int<int>(value, context);
    else if (key == "n_sessions") config.n_sessions = parse_int<int>(value, context);
    else if (key == "slate_size") config.slate_size = parse_int<int>(value, context);
    else if (key == "days") config.days = parse_int<int>(value, context);
    else if (key == "grid_columns") config.grid_columns = parse_int<int>(value, context);
    else if (key == "base_examination") config.base_examination = parse_double(value, context);
    else if (key == "logging_policy_noise") config.logging_policy_noise = parse_double(value, context);
    else if (key == "confounding_strength") config.confounding_strength = parse_double(value, context);
    else if (key == "relevance_intercept") config.relevance_intercept = parse_double(value, context);
    else if (key == "quality_weight") config.quality_weight = parse_double(value, context);
    else if (key == "affinity_weight") config.affinity_weight = parse_double(value, context);
    else if (key == "feature_noise") config.feature_noise = parse_double(value, context);
    else if (key == "seed") config.seed = parse_int<std::uint64_t>(value, context);
    else if (key == "grid_layout") {
      if (value == "row_major") config.grid_layout = GridLayout::row_major;
      else if (value == "column_major") config.grid_layout = GridLayout::column_major;
      else fail(ErrorKind::config, context + ": expected row_major or column_major");
    } else if (key == "propensity_grid") {
      config.propensity_grid.clear();
      for (auto part : split(value, ',')) config.propensity_grid.push_back(parse_double(part, context));
    } else {
      fail(ErrorKind::config, "unknown config key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

inline void write_simulation_config(std::ostream& out, const SimulationConfig& config) {
  out << "n_items=" << config.n_items << '\n'
      << "n_users=" << config.n_users << '\n'
      << "n_sessions=" << config.n_sessions << '\n'
      << "slate_size=" << config.slate_size << '\n'
      << "days=" << config.days << '\n'
      << "propensity_grid=";
  for (std::size_t i = 0; i < config.propensity_grid.size(); ++i) {
    out << (i ? "," : "") << format_double(config.propensity_grid[i]);
  }
  out << '\n'
      << "grid_layout=" << (config.grid_layout == GridLayout::row_major ? "row_major" : "column_major") << '\n'
      << "grid_columns=" << config.grid_columns << '\n'
      << "base_examination=" << format_double(config.base_examination) << '\n'
      << "logging_policy_noise=" << format_double(config.logging_policy_noise) << '\n'
      << "confounding_strength=" << format_double(config.confounding_strength) << '\n'
      << "relevance_intercept=" << format_double(config.relevance_intercept) << '\n'
      << "quality_weight=" << format_double(config.quality_weight) << '\n'
      << "affinity_weight=" << format_double(config.affinity_weight) << '\n'
      << "feature_noise=" << format_double(config.feature_noise) << '\n'
      << "seed=" << config.seed << '\n';
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline constexpr int kModelVersion = 1;

/// Versioned text format: header lines, schema, priors, then one
/// id<TAB>weight line per weight with |w| > 1e-12, sorted by id.
inline void write_model(std::ostream& out, const LinearModel& model) {
  const auto& cfg = model.hash_config;
  const auto& priors = model.priors;
  out << "version\t" << kModelVersion << '\n'
      << "c_value\t" << format_double(model.c_value) << '\n'
      << "split_day\t" << model.split_day << '\n'
      << "M\t" << cfg.rank_multiplier << '\n'
      << "B_max\t" << cfg.max_bins_per_feature << '\n'
      << "K_max\t" << cfg.max_rank << '\n'
      << "intercept\t" << format_double(model.intercept) << '\n'
      << "smoothing\t" << format_double(priors.items.smoothing.alpha) << '\t'
      << format_double(priors.items.smoothing.beta) << '\n'
      << "global_ctr\t" << format_double(priors.items.global_ctr) << '\n';
  out << "schema\t" << model.schema.size() << '\n';
  for (const auto& spec : model.schema.specs()) {
    out << "feature\t" << spec.name << '\t' << to_string(spec.kind) << '\t' << spec.max_bins << '\n';
  }
  out << "position_ctr\t" << priors.position.expected_ctr.size() << '\t' << priors.position.overflow_rank << '\t'
      << format_double(priors.position.smoothing.alpha) << '\t' << format_double(priors.position.smoothing.beta)
      << '\n';
  for (const auto& [rank, ctr] : priors.position.expected_ctr) {
    out << "position\t" << rank << '\t' << format_double(ctr) << '\n';
  }
  out << "coec_items\t" << priors.items.coec.size() << '\n';
  for (const auto& [item, value] : priors.items.coec) {
    const ItemAccumulator& acc = priors.items.items.at(item);
    out << "coec\t" << item << '\t' << format_double(value) << '\t' << format_double(acc.clicks) << '\t'
        << format_double(acc.expected_clicks) << '\t' << acc.impressions << '\n';
  }
  out << "users\t" << priors.items.user_impressions.size() << '\n';
  for (const auto& [user, count] : priors.items.user_impressions) out << "user\t" << user << '\t' << count << '\n';

  std::vector<std::pair<InteractionId, double>> weights;
  for (const auto& [id, w] : model.weights) {
    if (std::abs(w) > 1e-12) weights.emplace_back(id, w);
  }
  std::sort(weights.begin(), weights.end());
  out << "weights\t" << weights.size() << '\n';
  for (const auto& [id, w] : weights) out << id << '\t' << format_double(w) << '\n';
}

inline LinearModel parse_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](std::string_view tag, std::size_t arity) {
    if (!std::getline(in, line)) fail(ErrorKind::io, "model file truncated before '" + std::string(tag) + "'");
    ++line_no;
    strip_cr(line);
    auto fields = split(line, '\t');
    if (fields.size() != arity + 1 || (!tag.empty() && fields[0] != tag)) {
      fail(ErrorKind::io, "model line " + std::to_string(line_no) + ": expected '" + std::string(tag) + "' with " +
                              std::to_string(arity) + " field(s)");
    }
    return fields;
  };
  auto ctx = [&] { return "model line " + std::to_string(line_no); };

  LinearModel model;
  {
    auto f = next("version", 1);
    if (parse_int<int>(f[1], ctx()) != kModelVersion) fail(ErrorKind::io, "unsupported model file version");
  }
  { auto f = next("c_value", 1); model.c_value = parse_double(f[1], ctx()); }
  { auto f = next("split_day", 1); model.split_day = parse_int<int>(f[1], ctx()); }
  { auto f = next("M", 1); model.hash_config.rank_multiplier = parse_int<std::uint64_t>(f[1], ctx()); }
  { auto f = next("B_max", 1); model.hash_config.max_bins_per_feature = parse_int<std::uint32_t>(f[1], ctx()); }
  { auto f = next("K_max", 1); model.hash_config.max_rank = parse_int<std::uint32_t>(f[1], ctx()); }
  { auto f = next("intercept", 1); model.intercept = parse_double(f[1], ctx()); }
  {
    auto f = next("smoothing", 2);
    model.priors.items.smoothing = {parse_double(f[1], ctx()), parse_double(f[2], ctx())};
  }
  { auto f = next("global_ctr", 1); model.priors.items.global_ctr = parse_double(f[1], ctx()); }
  {
    auto f = next("schema", 1);
    const auto count = parse_int<std::size_t>(f[1], ctx());
    std::vector<FeatureSpec> specs;
    for (std::size_t i = 0; i < count; ++i) {
      auto g = next("feature", 3);
      specs.push_back({std::string(g[1]), parse_feature_kind(g[2]), parse_int<std::uint32_t>(g[3], ctx())});
    }
    model.schema = FeatureSchema(std::move(specs));
  }
  {
    auto f = next("position_ctr", 4);
    const auto count = parse_int<std::size_t>(f[1], ctx());
    model.priors.position.overflow_rank = parse_int<std::uint32_t>(f[2], ctx());
    model.priors.position.smoothing = {parse_double(f[3], ctx()), parse_double(f[4], ctx())};
    for (std::size_t i = 0; i < count; ++i) {
      auto g = next("position", 2);
      model.priors.position.expected_ctr[parse_int<std::uint32_t>(g[1], ctx())] = parse_double(g[2], ctx());
    }
  }
  {
    auto f = next("coec_items", 1);
    const auto count = parse_int<std::size_t>(f[1], ctx());
    for (std::size_t i = 0; i < count; ++i) {
      auto g = next("coec", 5);
      const std::string item(g[1]);
      model.priors.items.coec[item] = parse_double(g[2], ctx());
      model.priors.items.items[item] = {parse_double(g[3], ctx()), parse_double(g[4], ctx()),
                                        parse_int<std::uint64_t>(g[5], ctx())};
    }
  }
  {
    auto f = next("users", 1);
    const auto count = parse_int<std::size_t>(f[1], ctx());
    for (std::size_t i = 0; i < count; ++i) {
      auto g = next("user", 2);
      model.priors.items.user_impressions[std::string(g[1])] = parse_int<std::uint64_t>(g[2], ctx());
    }
  }
  {
    auto f = next("weights", 1);
    const auto count = parse_int<std::size_t>(f[1], ctx());
    model.weights.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto g = next("", 1);
      const auto id = parse_int<InteractionId>(g[0], ctx());
      const double w = parse_double(g[1], ctx());
      if (!std::isfinite(w)) fail(ErrorKind::io, ctx() + ": non-finite weight");
      unhash_interaction(id, model.hash_config, model.schema);
      model.weights[id] = w;
    }
  }
  model.hash_config.validate(model.schema);
  return model;
}

inline void write_model(const std::filesystem::path& path, const LinearModel& model) {
  auto out = open_output(path);
  write_model(out, model);
}

inline LinearModel read_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_model(in);
}

}  // namespace linpal::io
