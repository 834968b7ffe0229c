#include <gtest/gtest.h>

#include "windcast/run_config.hpp"

using namespace windcast;

namespace {

ErrorKind kind_of(const json& j) {
  try {
    run_config_from_json(j);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return ErrorKind::contract;
}

}  // namespace

TEST(RunConfig, DefaultsRoundTrip) {
  const RunConfig c;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfig, PartialDocumentKeepsDefaults) {
  const auto c = run_config_from_json(json{{"seed", 9}, {"forecaster", {{"hidden1", 12}}}, {"experiment", {{"variants", {"M2", "M4"}}}}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.forecaster.hidden1, 12);
  EXPECT_EQ(c.forecaster.batch_size, ForecasterConfig{}.batch_size);
  EXPECT_EQ(c.experiment.variants, (std::vector<ModelVariant>{ModelVariant::M2, ModelVariant::M4}));
  EXPECT_EQ(to_json(run_config_from_json(to_json(c))), to_json(c));
}

TEST(RunConfig, UnknownKeysRejected) {
  EXPECT_EQ(kind_of(json{{"sed", 1}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"synth", {{"n_record", 10}}}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"data", {{"columns", {{"speed", "ws"}}}}}}), ErrorKind::usage);
}

TEST(RunConfig, WrongTypesRejected) {
  EXPECT_EQ(kind_of(json{{"seed", "one"}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json::array()), ErrorKind::usage);
}

TEST(RunConfig, InvalidValuesRejected) {
  EXPECT_EQ(kind_of(json{{"run_id", "a/b"}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"jobs", 0}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"experiment", {{"seeds", 0}}}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"experiment", {{"bs_grid", {64}}}}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"forecaster", {{"num_layers", 3}}}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"search", {{"population", 4}}}}), ErrorKind::usage);
  EXPECT_EQ(kind_of(json{{"experiment", {{"variants", {"M5"}}}}}), ErrorKind::usage);
}
