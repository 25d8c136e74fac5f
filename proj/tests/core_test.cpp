#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "linpal/core.hpp"
#include "linpal/model.hpp"
#include "support.hpp"

using namespace linpal;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::usage;
}

LinearModel model_for(const FeatureSchema& schema) {
  LinearModel m;
  m.schema = schema;
  return m;
}

}  // namespace

TEST(Hash, SingleFeatureExample) {
  const HashConfig cfg;
  EXPECT_EQ(hash_interaction(0, 5, 12, cfg), 50012u);
  EXPECT_EQ(hash_interaction(0, 0, 0, cfg), 0u);
}

TEST(Hash, MultiFeatureLayout) {
  const HashConfig cfg;  // M = 10000, B_max = 64
  EXPECT_EQ(hash_interaction(1, 5, 12, cfg), 690012u);
  EXPECT_EQ(hash_interaction(1, 5, 12, cfg), (1u * 64 + 5) * 10000 + 12);
}

TEST(Unhash, Examples) {
  const HashConfig cfg;
  EXPECT_EQ(unhash_interaction(50012, cfg), (InteractionKey{0, 5, 12}));
  EXPECT_EQ(unhash_interaction(0, cfg), (InteractionKey{0, 0, 0}));
  EXPECT_EQ(unhash_interaction(690012, cfg), (InteractionKey{1, 5, 12}));
}

TEST(Hash, RoundtripExhaustiveWideRanks) {
  HashConfig cfg;
  cfg.max_rank = 198;  // ranks 0..199 are valid
  for (std::uint32_t f = 0; f < 8; ++f)
    for (std::uint32_t b = 0; b < 64; ++b)
      for (std::uint32_t k = 0; k < 200; ++k) {
        ASSERT_EQ(unhash_interaction(hash_interaction(f, b, k, cfg), cfg), (InteractionKey{f, b, k}));
      }
}

TEST(Hash, InjectiveOnRandomTriples) {
  const HashConfig cfg;
  std::mt19937_64 rng(11);
  std::set<InteractionId> seen;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> triples;
  for (int i = 0; i < 20000; ++i) {
    const auto f = static_cast<std::uint32_t>(rng() % 1000);
    const auto b = static_cast<std::uint32_t>(rng() % 64);
    const auto k = static_cast<std::uint32_t>(rng() % 52);
    if (!triples.emplace(f, b, k).second) continue;
    EXPECT_TRUE(seen.insert(hash_interaction(f, b, k, cfg)).second);
  }
}

TEST(Hash, RejectsOutOfRangeInputs) {
  const HashConfig cfg;
  EXPECT_EQ(kind_of([&] { hash_interaction(0, 64, 1, cfg); }), ErrorKind::encoding);
  EXPECT_EQ(kind_of([&] { hash_interaction(0, 1, 52, cfg); }), ErrorKind::encoding);
  const FeatureSchema schema = fixtures::small_schema();
  EXPECT_EQ(kind_of([&] { hash_interaction(5, 0, 1, cfg, schema); }), ErrorKind::encoding);
}

TEST(Unhash, RejectsRankBeyondOverflow) {
  const HashConfig cfg;
  EXPECT_EQ(kind_of([&] { unhash_interaction(52, cfg); }), ErrorKind::decoding);
  EXPECT_EQ(kind_of([&] { unhash_interaction(9999, cfg); }), ErrorKind::decoding);
}

TEST(Unhash, SchemaAwareChecks) {
  const HashConfig cfg;
  const FeatureSchema schema = fixtures::small_schema();  // rank at 0, theme (4 bins) at 4
  EXPECT_EQ(kind_of([&] { unhash_interaction(hash_interaction(9, 0, 1, cfg), cfg, schema); }), ErrorKind::decoding);
  EXPECT_EQ(kind_of([&] { unhash_interaction(hash_interaction(0, 3, 1, cfg), cfg, schema); }), ErrorKind::decoding);
  EXPECT_EQ(kind_of([&] { unhash_interaction(hash_interaction(0, 0, 0, cfg), cfg, schema); }), ErrorKind::decoding);
  EXPECT_EQ(kind_of([&] { unhash_interaction(hash_interaction(4, 4, 0, cfg), cfg, schema); }), ErrorKind::decoding);
  EXPECT_EQ(unhash_interaction(hash_interaction(4, 3, 7, cfg), cfg, schema), (InteractionKey{4, 3, 7}));
}

TEST(HashConfig, Validation) {
  HashConfig cfg;
  cfg.rank_multiplier = 51;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::config);
  cfg = HashConfig{};
  cfg.max_bins_per_feature = 10;
  EXPECT_EQ(kind_of([&] { cfg.validate(fixtures::small_schema()); }), ErrorKind::config);
  EXPECT_EQ(HashConfig{}.clamp_rank(51), 51u);
  EXPECT_EQ(HashConfig{}.clamp_rank(500), 51u);
}

TEST(Schema, Validation) {
  EXPECT_EQ(kind_of([] { FeatureSchema({{"a", FeatureKind::proportion, 21}}); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([] {
              FeatureSchema({{"rank", FeatureKind::rank, 1}, {"r2", FeatureKind::rank, 1}});
            }),
            ErrorKind::schema);
  EXPECT_EQ(kind_of([] {
              FeatureSchema({{"rank", FeatureKind::rank, 1}, {"x", FeatureKind::proportion, 21},
                             {"x", FeatureKind::categorical, 3}});
            }),
            ErrorKind::schema);
  EXPECT_EQ(kind_of([] { FeatureSchema({{"rank", FeatureKind::rank, 1}, {"x", FeatureKind::categorical, 0}}); }),
            ErrorKind::schema);
  EXPECT_EQ(kind_of([] { FeatureSchema({{"rank", FeatureKind::rank, 1}, {"coec", FeatureKind::proportion, 21}}); }),
            ErrorKind::schema);
}

TEST(Schema, RawColumnsSkipRankAndPriors) {
  const FeatureSchema schema = fixtures::schema_with_priors();
  EXPECT_EQ(schema.rank_index(), 1u);
  EXPECT_EQ(schema.non_rank_count(), 5u);
  ASSERT_EQ(schema.raw_columns().size(), 2u);
  EXPECT_EQ(schema.raw_columns()[0], 0u);
  EXPECT_EQ(schema.raw_columns()[1], 2u);
  EXPECT_EQ(schema.derived(3), DerivedFeature::coec);
  EXPECT_EQ(schema.derived(4), DerivedFeature::ucoec);
  EXPECT_EQ(schema.derived(5), DerivedFeature::user_activity);
}

TEST(FeatureKind, TextRoundtrip) {
  for (auto kind : {FeatureKind::categorical, FeatureKind::proportion, FeatureKind::similarity,
                    FeatureKind::heavy_tailed, FeatureKind::rank}) {
    EXPECT_EQ(parse_feature_kind(to_string(kind)), kind);
  }
  EXPECT_EQ(kind_of([] { parse_feature_kind("ordinal"); }), ErrorKind::schema);
}

TEST(Logit, Examples) {
  const FeatureSchema schema = fixtures::small_schema();
  LinearModel m = model_for(schema);
  const HashConfig cfg;
  EXPECT_EQ(logit(m, SparseFeatureVector{}), 0.0);

  const InteractionId a = hash_interaction(1, 3, 0, cfg);
  const InteractionId b = hash_interaction(2, 7, 4, cfg);
  m.intercept = 0.2;
  m.weights[a] = 1.3;
  EXPECT_DOUBLE_EQ(logit(m, SparseFeatureVector{{a}}), 1.5);

  m.intercept = 0.0;
  m.weights[a] = 0.5;
  m.weights[b] = -0.25;
  EXPECT_EQ(logit(m, SparseFeatureVector{{a, b}}), 0.25);
  // Ids absent from the table contribute nothing.
  EXPECT_EQ(logit(m, SparseFeatureVector{{a, b, hash_interaction(3, 2, 0, cfg)}}), 0.25);
}

TEST(Logit, MalformedIdIsInvalidFeature) {
  const LinearModel m = model_for(fixtures::small_schema());
  EXPECT_EQ(kind_of([&] { logit(m, SparseFeatureVector{{9999}}); }), ErrorKind::invalid_feature);
  EXPECT_EQ(kind_of([&] { logit(m, SparseFeatureVector{{hash_interaction(30, 0, 0, HashConfig{})}}); }),
            ErrorKind::invalid_feature);
}

TEST(PredictProba, Examples) {
  LinearModel m = model_for(fixtures::small_schema());
  EXPECT_EQ(predict_proba(m, {}), 0.5);
  m.intercept = std::log(3.0);
  EXPECT_NEAR(predict_proba(m, {}), 0.75, 1e-15);
  m.intercept = 800.0;
  EXPECT_EQ(predict_proba(m, {}), 1.0);
  m.intercept = -800.0;
  EXPECT_GE(predict_proba(m, {}), 0.0);
}

TEST(Sigmoid, StrictlyIncreasingAndSymmetric) {
  double prev = sigmoid(-30.0);
  for (double z = -29.5; z <= 30.0; z += 0.5) {
    const double s = sigmoid(z);
    EXPECT_GT(s, prev);
    EXPECT_NEAR(s + sigmoid(-z), 1.0, 1e-15);
    prev = s;
  }
}

TEST(Logit, InterceptShiftMovesEveryLogitEqually) {
  const FeatureSchema schema = fixtures::small_schema();
  const HashConfig cfg;
  LinearModel m = model_for(schema);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<SparseFeatureVector> vectors;
  for (int i = 0; i < 20; ++i) {
    const InteractionId id = hash_interaction(1, static_cast<std::uint32_t>(i), 0, cfg);
    m.weights[id] = normal(rng);
    vectors.push_back({{id}});
  }
  LinearModel shifted = m;
  shifted.intercept += 0.75;
  for (const auto& v : vectors) EXPECT_DOUBLE_EQ(logit(shifted, v) - logit(m, v), 0.75);
}
