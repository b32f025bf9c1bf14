#include <gtest/gtest.h>

#include <algorithm>

#include "jcsp/model.hpp"
#include "jcsp/model_json.hpp"
#include "jcsp/validation.hpp"

using namespace jcsp;

namespace {

LqnModel minimal_model() {
  LqnModel m;
  m.name = "minimal";
  m.processors.push_back({"p0", Scheduling::InfiniteServer, 1, true});
  m.processors.push_back({"p1", Scheduling::ProcessorSharing, 1, false});
  Task ref{"client", "p0", 1, TaskKind::Reference, std::nullopt};
  Task srv{"server", "p1", 1, TaskKind::Ordinary, std::nullopt};
  m.tasks = {ref, srv};
  m.entries.push_back({"client.e", "client", EntryKind::Ordinary, std::nullopt, "think"});
  m.entries.push_back({"server.e", "server", EntryKind::Ordinary, std::nullopt, "work"});
  m.activities.push_back({"think", "client.e", PhaseType::exponential(1.0), {"c1"}});
  m.activities.push_back({"work", "server.e", PhaseType::exponential(0.5), {}});
  m.calls.push_back({"c1", "think", "server.e", CallKind::Synchronous, 1.0});
  return m;
}

bool has_diag(const std::vector<Diagnostic>& ds, const std::string& needle) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) {
    return d.message.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST(Validate, MinimalModelIsClean) {
  EXPECT_TRUE(validate_model(minimal_model()).empty());
}

TEST(Validate, ValidationModelIsClean) {
  auto m = make_validation_model({});
  EXPECT_TRUE(validate_model(m).empty());
  ASSERT_TRUE(m.find_task("cache")->cache_spec.has_value());
  EXPECT_EQ(m.find_task("cache")->cache_spec->items, 3);
  EXPECT_EQ(m.find_task("cache")->cache_spec->total_capacity(), 1);
}

TEST(Validate, OrBranchProbabilitiesMustSumToOne) {
  auto m = minimal_model();
  m.activities.push_back({"alt1", "server.e", PhaseType::exponential(0.1), {}});
  m.activities.push_back({"alt2", "server.e", PhaseType::exponential(0.2), {}});
  m.precedences.push_back({{"work"}, {"alt1", "alt2"}, PrecedenceKind::OrBranch, {0.5, 0.4}});
  EXPECT_TRUE(has_diag(validate_model(m), "sum to 1"));
}

TEST(Validate, LayeringCycleDetected) {
  auto m = minimal_model();
  // add a second server that calls back into the first
  m.processors.push_back({"p2", Scheduling::ProcessorSharing, 1, false});
  m.tasks.push_back({"server2", "p2", 1, TaskKind::Ordinary, std::nullopt});
  m.entries.push_back({"server2.e", "server2", EntryKind::Ordinary, std::nullopt, "work2"});
  m.activities.push_back({"work2", "server2.e", PhaseType::exponential(0.1), {"c3"}});
  m.calls.push_back({"c2", "work", "server2.e", CallKind::Synchronous, 1.0});
  m.calls.push_back({"c3", "work2", "server.e", CallKind::Synchronous, 1.0});
  EXPECT_TRUE(has_diag(validate_model(m), "layering cycle"));
}

TEST(Validate, CacheAccessNeedsExactlyTwoSuccessors) {
  auto m = make_validation_model({});
  m.activities.push_back({"third", "cache.fetch", PhaseType::exponential(0.1), {}});
  m.precedences[0].to.push_back("third");
  EXPECT_TRUE(has_diag(validate_model(m), "exactly two successors"));
}

TEST(Validate, CacheSpecPresenceTiedToKind) {
  auto m = minimal_model();
  m.tasks[1].cache_spec = CacheTaskSpec{};
  EXPECT_TRUE(has_diag(validate_model(m), "cache-spec must be present exactly when"));
}

TEST(Validate, DanglingReferencesReported) {
  auto m = minimal_model();
  m.tasks[1].host_processor = "nope";
  m.calls[0].to_entry = "missing.e";
  auto ds = validate_model(m);
  EXPECT_TRUE(has_diag(ds, "dangling host-processor"));
  EXPECT_TRUE(has_diag(ds, "dangling to-entry"));
}

TEST(Validate, ReferenceTaskMustNotReceiveCalls) {
  auto m = minimal_model();
  m.activities[1].calls_out.push_back("c2");
  m.calls.push_back({"c2", "work", "client.e", CallKind::Synchronous, 1.0});
  auto ds = validate_model(m);
  EXPECT_TRUE(has_diag(ds, "reference tasks must not receive calls"));
}

TEST(RoundTrip, MinimalModel) {
  auto m = minimal_model();
  auto m2 = load_model(save_model(m));
  EXPECT_EQ(save_model(m), save_model(m2));
}

TEST(RoundTrip, CacheModelPreservesCacheFields) {
  ValidationModelParams p;
  p.users = 3;
  p.tokens = 2;
  p.eta = 1.0;
  auto m = make_validation_model(p);
  auto m2 = load_model(save_model(m));
  EXPECT_EQ(save_model(m), save_model(m2));
  const auto& cs = *m2.find_task("cache")->cache_spec;
  EXPECT_EQ(cs.items, 3);
  EXPECT_EQ(cs.lists.size(), 1u);
  EXPECT_DOUBLE_EQ(cs.popularity.eta, 1.0);
}

TEST(RoundTrip, BranchProbabilitiesFullPrecision) {
  auto m = minimal_model();
  m.activities.push_back({"alt1", "server.e", PhaseType::exponential(0.1), {}});
  m.activities.push_back({"alt2", "server.e", PhaseType::exponential(0.2), {}});
  m.precedences.push_back(
      {{"work"}, {"alt1", "alt2"}, PrecedenceKind::OrBranch, {0.123456789012345, 0.876543210987655}});
  auto m2 = load_model(save_model(m));
  EXPECT_EQ(m2.precedences[0].branch_probabilities[0], 0.123456789012345);
}

TEST(LoadModel, RejectsInvalidDocuments) {
  EXPECT_THROW(load_model("not json at all {"), ModelError);
  EXPECT_THROW(load_model("{\"schema\": \"other/9\"}"), ModelError);
  // invariant violation: or-branch probabilities summing to 0.9
  auto m = minimal_model();
  m.activities.push_back({"alt1", "server.e", PhaseType::exponential(0.1), {}});
  m.activities.push_back({"alt2", "server.e", PhaseType::exponential(0.2), {}});
  m.precedences.push_back({{"work"}, {"alt1", "alt2"}, PrecedenceKind::OrBranch, {0.5, 0.4}});
  EXPECT_THROW(load_model(save_model(m)), ModelError);
}
