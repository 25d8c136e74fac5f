#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "linpal/core.hpp"
#include "linpal/error.hpp"
#include "linpal/log.hpp"
#include "linpal/stats.hpp"

namespace linpal {

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

/// Type-aware binning:
///   categorical   v
///   proportion    floor(20 v)            v in [0, 1]
///   similarity    floor(5 (v + 1))       v in [-1, 1]
///   heavy_tailed  floor(2 ln(1 + max(0, v)))
inline std::uint32_t quantize(double value, FeatureKind kind) {
  check_feature_domain(value, kind, to_string(kind));
  double bin = 0.0;
  switch (kind) {
    case FeatureKind::categorical: bin = value; break;
    case FeatureKind::proportion: bin = std::floor(value * 20.0); break;
    case FeatureKind::similarity: bin = std::floor((value + 1.0) * 5.0); break;
    case FeatureKind::heavy_tailed: bin = std::floor(std::log1p(std::max(0.0, value)) * 2.0); break;
    case FeatureKind::rank: fail(ErrorKind::domain, "rank is one-hot encoded, not quantized");
  }
  if (bin > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    fail(ErrorKind::domain, "value " + std::to_string(value) + " quantizes beyond the integer range");
  }
  return static_cast<std::uint32_t>(bin);
}

/// quantize() plus the schema's max_bins bound.
inline std::uint32_t quantize(double value, const FeatureSpec& spec) {
  const std::uint32_t bin = quantize(value, spec.kind);
  if (bin >= spec.max_bins) {
    fail(ErrorKind::schema, "feature '" + spec.name + "' value " + std::to_string(value) + " falls in bin " +
                                std::to_string(bin) + " >= max_bins " + std::to_string(spec.max_bins));
  }
  return bin;
}

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

/// Fixed-width rows of interaction ids stored contiguously. Each row is a
/// SparseFeatureVector: 1 rank id, then per non-rank feature a base id and a
/// crossed id, all strictly increasing.
class FeatureBatch {
 public:
  FeatureBatch() = default;
  FeatureBatch(std::size_t width, std::size_t rows) : width_(width), ids_(width * rows) {}

  std::size_t width() const { return width_; }
  std::size_t rows() const { return width_ == 0 ? 0 : ids_.size() / width_; }
  bool empty() const { return ids_.empty(); }

  std::span<const InteractionId> row(std::size_t i) const { return {ids_.data() + i * width_, width_}; }
  std::span<InteractionId> row(std::size_t i) { return {ids_.data() + i * width_, width_}; }
  SparseFeatureVector vector(std::size_t i) const {
    auto r = row(i);
    return {{r.begin(), r.end()}};
  }
  std::span<const InteractionId> ids() const { return ids_; }

  bool operator==(const FeatureBatch&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<InteractionId> ids_;
};

inline std::size_t feature_vector_width(const FeatureSchema& schema) { return 1 + 2 * schema.non_rank_count(); }

namespace detail {

inline double derived_value(DerivedFeature which, const std::string& user_id, const std::string& item_id,
                            const Priors& priors) {
  switch (which) {
    case DerivedFeature::coec: return priors.items.coec_for(item_id);
    case DerivedFeature::ucoec: return ucoec(priors.items.coec_for(item_id), priors.items.global_ctr);
    case DerivedFeature::user_activity: return priors.items.user_activity(user_id);
    case DerivedFeature::none: break;
  }
  fail(ErrorKind::schema, "not a derived feature");
}

inline std::uint32_t checked_rank(std::int64_t rank, const HashConfig& cfg) {
  if (rank < 1) fail(ErrorKind::domain, "rank must be >= 1, got " + std::to_string(rank));
  return cfg.clamp_rank(rank);
}

}  // namespace detail

/// Featurizes one impression. `rank_override` replaces the logged rank (used
/// by the do(K=1) scorer).
inline SparseFeatureVector featurize(const Impression& impression, const Priors& priors, const FeatureSchema& schema,
                                     const HashConfig& cfg, std::optional<int> rank_override = std::nullopt) {
  if (impression.raw_features.size() != schema.raw_columns().size()) {
    fail(ErrorKind::schema, "impression carries " + std::to_string(impression.raw_features.size()) +
                                " feature values, schema expects " + std::to_string(schema.raw_columns().size()));
  }
  const std::uint32_t rank = detail::checked_rank(rank_override.value_or(impression.rank), cfg);
  SparseFeatureVector out;
  out.ids.reserve(feature_vector_width(schema));
  std::size_t raw = 0;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto feature = static_cast<std::uint32_t>(f);
    if (f == schema.rank_index()) {
      out.ids.push_back(hash_interaction(feature, 0, rank, cfg));
      continue;
    }
    const DerivedFeature derived = schema.derived(f);
    const double value = derived == DerivedFeature::none
                             ? impression.raw_features[raw++]
                             : detail::derived_value(derived, impression.user_id, impression.item_id, priors);
    const std::uint32_t bin = quantize(value, schema[f]);
    out.ids.push_back(hash_interaction(feature, bin, 0, cfg));
    out.ids.push_back(hash_interaction(feature, bin, rank, cfg));
  }
  return out;
}

/// Columnar featurization: each feature column is quantized in one pass, then
/// rows are assembled from precomputed (feature, bin) cells by adding the rank.
/// Aborts on the lowest failing row index. `rank_override` as in featurize().
inline FeatureBatch featurize_batch(const ImpressionLog& log, const Priors& priors, const HashConfig& cfg,
                                    std::optional<int> rank_override = std::nullopt) {
  const FeatureSchema& schema = log.schema();
  cfg.validate(schema);
  const std::size_t n = log.size();
  const std::size_t width = feature_vector_width(schema);
  FeatureBatch out(width, n);
  if (n == 0) return out;

  std::size_t first_bad = n;
  std::string first_message;
  ErrorKind first_kind = ErrorKind::domain;
  auto record = [&](std::size_t row, const Error& error) {
    if (row < first_bad) {
      first_bad = row;
      first_message = error.what();
      first_kind = error.kind();
    }
  };

  const std::uint64_t m = cfg.rank_multiplier;
  std::vector<std::uint32_t> ranks(n);
  {
    const auto logged = log.ranks();
    if (rank_override) {
      std::fill(ranks.begin(), ranks.end(), detail::checked_rank(*rank_override, cfg));
    } else {
      for (std::size_t i = 0; i < n; ++i) ranks[i] = cfg.clamp_rank(logged[i]);
    }
  }

  // cells[c][i] = (f * B_max + bin) * M for the c-th non-rank feature of row i.
  std::vector<std::vector<std::uint64_t>> cells;
  cells.reserve(schema.non_rank_count());
  std::size_t raw = 0;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (f == schema.rank_index()) continue;
    const FeatureSpec& spec = schema[f];
    const std::uint64_t feature_base = static_cast<std::uint64_t>(f) * cfg.max_bins_per_feature;
    std::vector<std::uint64_t> column(n);
    const DerivedFeature derived = schema.derived(f);
    if (derived == DerivedFeature::none) {
      const auto values = log.raw_column(raw++);
      for (std::size_t i = 0; i < n; ++i) {
        try {
          column[i] = (feature_base + quantize(values[i], spec)) * m;
        } catch (const Error& e) {
          record(i, e);
          break;
        }
      }
    } else {
      // Derived values depend only on the item or user, so bin each distinct
      // key once and gather by dictionary code.
      const IdColumn& keys = derived == DerivedFeature::user_activity ? log.users() : log.items();
      const auto dictionary = keys.dictionary();
      std::vector<std::uint64_t> per_key(dictionary.size());
      std::vector<std::optional<Error>> errors(dictionary.size());
      for (std::size_t c = 0; c < dictionary.size(); ++c) {
        try {
          const double value = derived == DerivedFeature::user_activity
                                   ? priors.items.user_activity(dictionary[c])
                                   : detail::derived_value(derived, {}, dictionary[c], priors);
          per_key[c] = (feature_base + quantize(value, spec)) * m;
        } catch (const Error& e) {
          errors[c] = e;
        }
      }
      const auto codes = keys.codes();
      for (std::size_t i = 0; i < n; ++i) {
        if (errors[codes[i]]) {
          record(i, *errors[codes[i]]);
          break;
        }
        column[i] = per_key[codes[i]];
      }
    }
    cells.push_back(std::move(column));
  }
  if (first_bad < n) fail(first_kind, "row " + std::to_string(first_bad) + ": " + first_message);

  const std::size_t rank_slot = 2 * schema.rank_index();
  const std::uint64_t rank_cell = static_cast<std::uint64_t>(schema.rank_index()) * cfg.max_bins_per_feature * m;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    const std::uint64_t k = ranks[i];
    std::size_t pos = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (pos == rank_slot) row[pos++] = rank_cell + k;
      const std::uint64_t cell = cells[c][i];
      row[pos++] = cell;
      row[pos++] = cell + k;
    }
    if (pos == rank_slot) row[pos++] = rank_cell + k;
  }
  return out;
}

/// String-keyed reference featurizer: every interaction is spelled out as text
/// ("price_Bin5_x_Rank12"), interned in a vocabulary, and each vocabulary entry
/// is re-encoded into the integer id space by parsing its key. Produces the
/// same vectors as featurize_batch; kept as the benchmark baseline and oracle.
inline FeatureBatch featurize_string_reference(const ImpressionLog& log, const Priors& priors,
                                               const HashConfig& cfg) {
  const FeatureSchema& schema = log.schema();
  cfg.validate(schema);
  const std::size_t n = log.size();
  const std::size_t width = feature_vector_width(schema);
  FeatureBatch out(width, n);

  std::unordered_map<std::string, std::size_t> feature_by_name;
  for (std::size_t f = 0; f < schema.size(); ++f) feature_by_name[schema[f].name] = f;
  const std::string& rank_name = schema[schema.rank_index()].name;

  std::unordered_map<std::string, InteractionId> vocabulary;
  auto intern = [&](const std::string& key) -> InteractionId {
    auto it = vocabulary.find(key);
    if (it != vocabulary.end()) return it->second;
    // key = <feature name>_Bin<b>[_x_Rank<k>]
    const std::size_t bin_at = key.rfind("_Bin");
    const std::size_t rank_at = key.find("_x_Rank", bin_at);
    const std::size_t feature = feature_by_name.at(key.substr(0, bin_at));
    std::uint64_t bin = 0;
    std::uint64_t rank = 0;
    const char* bin_begin = key.data() + bin_at + 4;
    const char* bin_end = rank_at == std::string::npos ? key.data() + key.size() : key.data() + rank_at;
    std::from_chars(bin_begin, bin_end, bin);
    if (rank_at != std::string::npos) std::from_chars(key.data() + rank_at + 7, key.data() + key.size(), rank);
    const InteractionId id = (feature * cfg.max_bins_per_feature + bin) * cfg.rank_multiplier + rank;
    vocabulary.emplace(key, id);
    return id;
  };

  Impression row;
  std::vector<InteractionId> ids;
  ids.reserve(width);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      row = log.row(i);
      const std::uint32_t rank = detail::checked_rank(row.rank, cfg);
      const std::string rank_text = std::to_string(rank);
      ids.clear();
      std::size_t raw = 0;
      for (std::size_t f = 0; f < schema.size(); ++f) {
        if (f == schema.rank_index()) {
          ids.push_back(intern(rank_name + "_Bin0_x_Rank" + rank_text));
          continue;
        }
        const DerivedFeature derived = schema.derived(f);
        const double value = derived == DerivedFeature::none
                                 ? row.raw_features[raw++]
                                 : detail::derived_value(derived, row.user_id, row.item_id, priors);
        const std::string base = schema[f].name + "_Bin" + std::to_string(quantize(value, schema[f]));
        ids.push_back(intern(base));
        ids.push_back(intern(base + "_x_Rank" + rank_text));
      }
    } catch (const Error& e) {
      fail(e.kind(), "row " + std::to_string(i) + ": " + e.what());
    }
    std::sort(ids.begin(), ids.end());
    std::copy(ids.begin(), ids.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace linpal
