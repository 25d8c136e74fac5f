#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "linpal/error.hpp"

namespace linpal {

// ---------------------------------------------------------------------------
// Feature schema
// ---------------------------------------------------------------------------

enum class FeatureKind { categorical, proportion, similarity, heavy_tailed, rank };

inline std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::proportion: return "proportion";
    case FeatureKind::similarity: return "similarity";
    case FeatureKind::heavy_tailed: return "heavy_tailed";
    case FeatureKind::rank: return "rank";
  }
  return "unknown";
}

inline FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "categorical") return FeatureKind::categorical;
  if (text == "proportion") return FeatureKind::proportion;
  if (text == "similarity") return FeatureKind::similarity;
  if (text == "heavy_tailed") return FeatureKind::heavy_tailed;
  if (text == "rank") return FeatureKind::rank;
  fail(ErrorKind::schema, "unknown feature kind '" + std::string(text) + "'");
}

// Columns whose values are computed from the fitted priors instead of being
// read from the log.
enum class DerivedFeature { none, coec, ucoec, user_activity };

inline DerivedFeature derived_feature_for(std::string_view name) {
  if (name == "coec") return DerivedFeature::coec;
  if (name == "ucoec") return DerivedFeature::ucoec;
  if (name == "user_activity") return DerivedFeature::user_activity;
  return DerivedFeature::none;
}

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::categorical;
  std::uint32_t max_bins = 1;

  bool operator==(const FeatureSpec&) const = default;
};

/// Ordered feature declarations. Exactly one entry has kind `rank`; the
/// position of an entry is the feature index used in interaction ids.
class FeatureSchema {
 public:
  FeatureSchema() = default;

  explicit FeatureSchema(std::vector<FeatureSpec> specs) : specs_(std::move(specs)) {
    std::unordered_set<std::string> names;
    std::optional<std::size_t> rank;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const FeatureSpec& spec = specs_[i];
      if (spec.name.empty()) fail(ErrorKind::schema, "feature " + std::to_string(i) + " has an empty name");
      if (!names.insert(spec.name).second) fail(ErrorKind::schema, "duplicate feature name '" + spec.name + "'");
      if (spec.max_bins < 1) fail(ErrorKind::schema, "feature '" + spec.name + "' has max_bins < 1");
      if (spec.kind == FeatureKind::rank) {
        if (rank) fail(ErrorKind::schema, "schema declares more than one rank feature");
        rank = i;
      }
      if (derived_feature_for(spec.name) != DerivedFeature::none && spec.kind != FeatureKind::heavy_tailed) {
        fail(ErrorKind::schema, "derived feature '" + spec.name + "' must be heavy_tailed");
      }
    }
    if (!rank) fail(ErrorKind::schema, "schema declares no rank feature");
    rank_index_ = *rank;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      if (i != rank_index_ && derived_feature_for(specs_[i].name) == DerivedFeature::none) {
        raw_columns_.push_back(i);
      }
    }
  }

  std::span<const FeatureSpec> specs() const { return specs_; }
  const FeatureSpec& operator[](std::size_t i) const { return specs_[i]; }
  std::size_t size() const { return specs_.size(); }
  bool empty() const { return specs_.empty(); }
  std::size_t rank_index() const { return rank_index_; }

  /// Number of non-rank features (each yields one base id and one crossed id).
  std::size_t non_rank_count() const { return specs_.empty() ? 0 : specs_.size() - 1; }

  /// Schema indices of the columns carried by an impression log, in order.
  std::span<const std::size_t> raw_columns() const { return raw_columns_; }

  DerivedFeature derived(std::size_t i) const { return derived_feature_for(specs_[i].name); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      if (specs_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::uint32_t largest_bin_count() const {
    std::uint32_t out = 0;
    for (const auto& spec : specs_) out = std::max(out, spec.max_bins);
    return out;
  }

  bool operator==(const FeatureSchema& other) const { return specs_ == other.specs_; }

 private:
  std::vector<FeatureSpec> specs_;
  std::vector<std::size_t> raw_columns_;
  std::size_t rank_index_ = 0;
};

// ---------------------------------------------------------------------------
// Interaction ids
// ---------------------------------------------------------------------------

using InteractionId = std::uint64_t;

struct HashConfig {
  std::uint64_t rank_multiplier = 10'000;
  std::uint32_t max_bins_per_feature = 64;
  std::uint32_t max_rank = 50;

  /// Slot shared by every rank above max_rank.
  std::uint32_t overflow_rank() const { return max_rank + 1; }

  std::uint32_t clamp_rank(std::int64_t rank) const {
    if (rank > static_cast<std::int64_t>(max_rank)) return overflow_rank();
    return static_cast<std::uint32_t>(rank);
  }

  void validate() const {
    if (max_bins_per_feature < 1) fail(ErrorKind::config, "max_bins_per_feature must be >= 1");
    if (rank_multiplier <= static_cast<std::uint64_t>(max_rank) + 1) {
      fail(ErrorKind::config, "rank multiplier M=" + std::to_string(rank_multiplier) +
                                  " must exceed K_max+1=" + std::to_string(max_rank + 1));
    }
  }

  void validate(const FeatureSchema& schema) const {
    validate();
    for (const auto& spec : schema.specs()) {
      if (spec.max_bins > max_bins_per_feature) {
        fail(ErrorKind::config, "feature '" + spec.name + "' has max_bins " + std::to_string(spec.max_bins) +
                                    " above B_max " + std::to_string(max_bins_per_feature));
      }
    }
    const auto limit = std::numeric_limits<InteractionId>::max() / rank_multiplier / max_bins_per_feature;
    if (schema.size() >= limit) fail(ErrorKind::config, "id space overflows 64 bits for this schema");
  }

  bool operator==(const HashConfig&) const = default;
};

struct InteractionKey {
  std::uint32_t feature = 0;
  std::uint32_t bin = 0;
  std::uint32_t rank = 0;

  bool operator==(const InteractionKey&) const = default;
};

/// id = ((feature * B_max + bin) * M) + rank. Rank 0 is the "no rank" slot used
/// by base (uncrossed) features.
inline InteractionId hash_interaction(std::uint32_t feature, std::uint32_t bin, std::uint32_t rank,
                                      const HashConfig& cfg) {
  if (bin >= cfg.max_bins_per_feature) {
    fail(ErrorKind::encoding, "bin " + std::to_string(bin) + " >= B_max " + std::to_string(cfg.max_bins_per_feature));
  }
  if (rank > cfg.overflow_rank()) {
    fail(ErrorKind::encoding, "rank " + std::to_string(rank) + " > K_max+1 " + std::to_string(cfg.overflow_rank()));
  }
  return (static_cast<InteractionId>(feature) * cfg.max_bins_per_feature + bin) * cfg.rank_multiplier + rank;
}

inline InteractionId hash_interaction(std::uint32_t feature, std::uint32_t bin, std::uint32_t rank,
                                      const HashConfig& cfg, const FeatureSchema& schema) {
  if (feature >= schema.size()) {
    fail(ErrorKind::encoding, "feature index " + std::to_string(feature) + " outside schema of size " +
                                  std::to_string(schema.size()));
  }
  return hash_interaction(feature, bin, rank, cfg);
}

/// Inverse of hash_interaction: rank = id mod M, then bin/feature by div/mod B_max.
inline InteractionKey unhash_interaction(InteractionId id, const HashConfig& cfg) {
  const InteractionId rank = id % cfg.rank_multiplier;
  const InteractionId cell = id / cfg.rank_multiplier;
  if (rank > cfg.overflow_rank()) {
    fail(ErrorKind::decoding, "id " + std::to_string(id) + " decodes to rank " + std::to_string(rank) +
                                  " beyond K_max+1");
  }
  const InteractionId feature = cell / cfg.max_bins_per_feature;
  if (feature > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorKind::decoding, "id " + std::to_string(id) + " decodes to an out-of-range feature index");
  }
  return {static_cast<std::uint32_t>(feature), static_cast<std::uint32_t>(cell % cfg.max_bins_per_feature),
          static_cast<std::uint32_t>(rank)};
}

/// Decodes and checks the key against the schema: feature in range, bin below
/// the feature's max_bins, rank ids only on the rank feature with bin 0 and
/// rank >= 1.
inline InteractionKey unhash_interaction(InteractionId id, const HashConfig& cfg, const FeatureSchema& schema) {
  const InteractionKey key = unhash_interaction(id, cfg);
  if (key.feature >= schema.size()) {
    fail(ErrorKind::decoding, "id " + std::to_string(id) + " decodes to feature " + std::to_string(key.feature) +
                                  " outside schema of size " + std::to_string(schema.size()));
  }
  if (key.feature == schema.rank_index()) {
    if (key.bin != 0 || key.rank == 0) {
      fail(ErrorKind::decoding, "id " + std::to_string(id) + " is not a valid rank one-hot id");
    }
  } else if (key.bin >= schema[key.feature].max_bins) {
    fail(ErrorKind::decoding, "id " + std::to_string(id) + " decodes to bin " + std::to_string(key.bin) +
                                  " beyond max_bins of '" + schema[key.feature].name + "'");
  }
  return key;
}

/// Strictly increasing interaction ids, each with implicit value 1.
struct SparseFeatureVector {
  std::vector<InteractionId> ids;

  bool operator==(const SparseFeatureVector&) const = default;
};

}  // namespace linpal
