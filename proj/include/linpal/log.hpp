#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "linpal/core.hpp"
#include "linpal/error.hpp"

namespace linpal {

/// One logged (user, item, rank, click) event. raw_features holds one value per
/// entry of FeatureSchema::raw_columns(), in schema order; the rank and the
/// prior-derived columns are not stored here.
struct Impression {
  int day = 1;
  std::string session_id;
  std::string user_id;
  std::string item_id;
  int rank = 1;
  bool clicked = false;
  std::vector<double> raw_features;

  bool operator==(const Impression&) const = default;
};

/// Throws a domain error if `value` is outside the kind's domain.
inline void check_feature_domain(double value, FeatureKind kind, std::string_view name) {
  auto reject = [&](const char* why) {
    fail(ErrorKind::domain, "feature '" + std::string(name) + "' value " + std::to_string(value) + " " + why);
  };
  if (!std::isfinite(value)) reject("is not finite");
  switch (kind) {
    case FeatureKind::categorical:
      if (value < 0 || value != std::floor(value)) reject("is not a non-negative integer");
      break;
    case FeatureKind::proportion:
      if (value < 0.0 || value > 1.0) reject("is outside [0, 1]");
      break;
    case FeatureKind::similarity:
      if (value < -1.0 || value > 1.0) reject("is outside [-1, 1]");
      break;
    case FeatureKind::heavy_tailed:
    case FeatureKind::rank:
      break;
  }
}

/// Dictionary-encoded string column.
class IdColumn {
 public:
  std::uint32_t push(std::string_view value) {
    auto it = index_.find(std::string(value));
    std::uint32_t code;
    if (it == index_.end()) {
      code = static_cast<std::uint32_t>(dictionary_.size());
      dictionary_.emplace_back(value);
      index_.emplace(dictionary_.back(), code);
    } else {
      code = it->second;
    }
    codes_.push_back(code);
    return code;
  }

  std::size_t size() const { return codes_.size(); }
  std::uint32_t code(std::size_t row) const { return codes_[row]; }
  std::span<const std::uint32_t> codes() const { return codes_; }
  const std::string& value(std::size_t row) const { return dictionary_[codes_[row]]; }
  std::span<const std::string> dictionary() const { return dictionary_; }

  void reserve(std::size_t n) { codes_.reserve(n); }

 private:
  std::vector<std::uint32_t> codes_;
  std::vector<std::string> dictionary_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Columnar impression log bound to a schema.
class ImpressionLog {
 public:
  ImpressionLog() = default;
  explicit ImpressionLog(FeatureSchema schema)
      : schema_(std::move(schema)), features_(schema_.raw_columns().size()) {}

  const FeatureSchema& schema() const { return schema_; }
  std::size_t size() const { return days_.size(); }
  bool empty() const { return days_.empty(); }

  void reserve(std::size_t n) {
    days_.reserve(n);
    ranks_.reserve(n);
    clicks_.reserve(n);
    sessions_.reserve(n);
    users_.reserve(n);
    items_.reserve(n);
    for (auto& column : features_) column.reserve(n);
  }

  void append(int day, std::string_view session_id, std::string_view user_id, std::string_view item_id, int rank,
              bool clicked, std::span<const double> raw_features) {
    if (day < 1) fail(ErrorKind::domain, "day must be >= 1, got " + std::to_string(day));
    if (rank < 1) fail(ErrorKind::domain, "rank must be >= 1, got " + std::to_string(rank));
    const auto raw = schema_.raw_columns();
    if (raw_features.size() != raw.size()) {
      fail(ErrorKind::schema, "impression carries " + std::to_string(raw_features.size()) +
                                  " feature values, schema expects " + std::to_string(raw.size()));
    }
    for (std::size_t j = 0; j < raw.size(); ++j) {
      const FeatureSpec& spec = schema_[raw[j]];
      check_feature_domain(raw_features[j], spec.kind, spec.name);
    }
    days_.push_back(day);
    ranks_.push_back(rank);
    clicks_.push_back(clicked ? 1 : 0);
    sessions_.push(session_id);
    users_.push(user_id);
    items_.push(item_id);
    for (std::size_t j = 0; j < raw.size(); ++j) features_[j].push_back(raw_features[j]);
  }

  void append(const Impression& imp) {
    append(imp.day, imp.session_id, imp.user_id, imp.item_id, imp.rank, imp.clicked, imp.raw_features);
  }

  Impression row(std::size_t i) const {
    Impression out;
    out.day = days_[i];
    out.session_id = sessions_.value(i);
    out.user_id = users_.value(i);
    out.item_id = items_.value(i);
    out.rank = ranks_[i];
    out.clicked = clicks_[i] != 0;
    out.raw_features.reserve(features_.size());
    for (const auto& column : features_) out.raw_features.push_back(column[i]);
    return out;
  }

  std::span<const int> days() const { return days_; }
  std::span<const int> ranks() const { return ranks_; }
  std::span<const std::uint8_t> clicks() const { return clicks_; }
  const IdColumn& sessions() const { return sessions_; }
  const IdColumn& users() const { return users_; }
  const IdColumn& items() const { return items_; }

  /// j-th raw column (position within schema().raw_columns()).
  std::span<const double> raw_column(std::size_t j) const { return features_[j]; }

  template <typename Predicate>
  ImpressionLog filter(Predicate keep) const {
    ImpressionLog out(schema_);
    std::vector<double> values(features_.size());
    for (std::size_t i = 0; i < size(); ++i) {
      if (!keep(i)) continue;
      for (std::size_t j = 0; j < features_.size(); ++j) values[j] = features_[j][i];
      out.append(days_[i], sessions_.value(i), users_.value(i), items_.value(i), ranks_[i], clicks_[i] != 0, values);
    }
    return out;
  }

 private:
  FeatureSchema schema_;
  std::vector<int> days_;
  std::vector<int> ranks_;
  std::vector<std::uint8_t> clicks_;
  IdColumn sessions_;
  IdColumn users_;
  IdColumn items_;
  std::vector<std::vector<double>> features_;
};

struct TemporalSplit {
  ImpressionLog train;
  ImpressionLog test;
};

/// Rows with day <= split_day train, the rest test.
inline TemporalSplit split_by_day(const ImpressionLog& log, int split_day) {
  const auto days = log.days();
  return {log.filter([&](std::size_t i) { return days[i] <= split_day; }),
          log.filter([&](std::size_t i) { return days[i] > split_day; })};
}

}  // namespace linpal
