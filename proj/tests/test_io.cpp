#include <doctest.h>

#include <cmath>
#include <sstream>

#include "quickstop/fixtures.hpp"
#include "quickstop/io.hpp"
#include "support.hpp"

#ifndef QUICKSTOP_FIXTURES
#define QUICKSTOP_FIXTURES "fixtures"
#endif

using namespace quickstop;
using quickstop::testing::class_trace;
using quickstop::testing::classes;
using quickstop::testing::random_classes;

namespace {

io::PolicyArtifact sample_policy() {
  io::PolicyArtifact a;
  a.policy = make_policy(fixtures::weibo_model(), CostConfig{10.0, 12.0, 0.3, 0.4}, SolverConfig{1e-2});
  a.scorer = EdgeScorer::linear((VectorXd(4) << 0.1, -2.5, 1.0 / 3.0, 7.0).finished(), -0.2, 2);
  a.provenance.seed = 42;
  a.provenance.data_hash = io::fnv1a_hex("abc");
  a.provenance.command = "solve";
  return a;
}

}  // namespace

TEST_CASE("double formatting round-trips") {
  RandomStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(30)) - 15);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("fnv1a reference values") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("trace JSON round-trip") {
  RandomStream rng(2);
  std::vector<Trace> traces;
  for (int i = 0; i < 50; ++i) {
    Trace t = class_trace("t" + std::to_string(i), i % 2 ? Hypothesis::News : Hypothesis::Misinformation,
                          random_classes(4, 1 + static_cast<int>(rng.below(20)), rng));
    if (i % 3 == 0) t.true_classes = t.classes();
    if (i % 5 == 0) t.label.reset();
    traces.push_back(t);
  }
  Trace f;
  f.id = "feat";
  f.label = Hypothesis::News;
  f.events = FeatureEvents{{(VectorXd(2) << 0.1, 1e-300).finished(), (VectorXd(1) << -3.25).finished()},
                           {(VectorXd(2) << 2.0, 0.7).finished(), (VectorXd(1) << 1.0 / 7.0).finished()}};
  traces.push_back(f);

  std::ostringstream out;
  io::write_traces(out, traces);
  std::istringstream in(out.str());
  CHECK(io::read_traces(in) == traces);
}

TEST_CASE("trace JSON validation") {
  using io::json;
  CHECK_THROWS_AS(io::trace_from_json(json::parse(R"({"trace_id":"a","label":0,"events":[]})")),
                  DataError);
  CHECK_THROWS_AS(io::trace_from_json(json::parse(R"({"trace_id":"a","label":2,"events":[{"class":0}]})")),
                  DataError);
  CHECK_THROWS_AS(io::trace_from_json(json::parse(
                      R"({"trace_id":"a","events":[{"class":0},{"src_features":[1],"dst_features":[1]}]})")),
                  DataError);
  CHECK_THROWS_AS(io::trace_from_json(json::parse(
                      R"({"trace_id":"a","events":[{"src_features":[1],"dst_features":[1]},{"src_features":[1,2],"dst_features":[1]}]})")),
                  DataError);
  CHECK_THROWS_AS(io::trace_from_json(json::parse(R"({"label":0,"events":[{"class":0}]})")), DataError);
  const Trace t = io::trace_from_json(json::parse(R"({"trace_id":"a","label":null,"events":[{"class":2}]})"));
  CHECK_FALSE(t.label);
  CHECK(t.classes() == classes({2}));
}

TEST_CASE("malformed JSONL reports the line") {
  std::istringstream in(
      "{\"trace_id\":\"a\",\"label\":0,\"events\":[{\"class\":0}]}\n"
      "\n"
      "{\"trace_id\":\"b\",\"label\":0,\"events\":[{\"class\":0}\n");
  try {
    io::read_traces(in);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
  }
}

TEST_CASE("model artifact round-trip") {
  io::ModelArtifact a;
  a.model = fixtures::weibo_model();
  a.quantizer = Quantizer({0.2, 0.5, 0.9});
  a.provenance.command = "train";
  const auto back = io::model_from_json(io::json::parse(io::to_json(a).dump()));
  CHECK(back == a);
  CHECK_FALSE(back.provenance.seed);
}

TEST_CASE("policy artifact round-trip") {
  const auto a = sample_policy();
  const auto back = io::policy_from_json(io::json::parse(io::to_json(a).dump()));
  CHECK(back == a);
  CHECK(back.policy.thresholds.value_function == a.policy.thresholds.value_function);
  CHECK(back.policy.thresholds.iterations == a.policy.thresholds.iterations);
}

TEST_CASE("policy artifact validation") {
  const auto good = io::to_json(sample_policy());

  auto wrong_version = good;
  wrong_version["format_version"] = 99;
  CHECK_THROWS_AS(io::policy_from_json(wrong_version), DataError);

  auto wrong_kind = good;
  wrong_kind["kind"] = "quickstop-model";
  CHECK_THROWS_AS(io::policy_from_json(wrong_kind), DataError);

  auto bad_bracket = good;
  bad_bracket["thresholds"]["lower"][1] = 0.9;
  CHECK_THROWS_AS(io::policy_from_json(bad_bracket), DataError);

  auto bad_rows = good;
  bad_rows["model"]["alpha0"][0][0] = 0.5;
  CHECK_THROWS_AS(io::policy_from_json(bad_rows), DataError);

  auto bad_shape = good;
  bad_shape["value_function"].erase(0);
  CHECK_THROWS_AS(io::policy_from_json(bad_shape), DataError);

  auto missing = good;
  missing.erase("costs");
  CHECK_THROWS_AS(io::policy_from_json(missing), DataError);

  CHECK_THROWS_AS(io::model_from_json(good), DataError);
}

TEST_CASE("shipped fixtures agree with the built-in tables") {
  const std::string dir = QUICKSTOP_FIXTURES;
  const auto model = io::model_from_json(io::read_json_file(dir + "/weibo_model.json"));
  CHECK((model.model.alpha0() - fixtures::weibo_model().alpha0()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((model.model.alpha1() - fixtures::weibo_model().alpha1()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(model.quantizer == Quantizer());

  const auto raw = io::read_json_file(dir + "/weibo_transitions.json");
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(raw.at("news")[r][c].get<double>() == fixtures::weibo_news_raw()(r, c));
      CHECK(raw.at("misinformation")[r][c].get<double>() == fixtures::weibo_misinformation_raw()(r, c));
    }
  }

  const auto spread = io::read_json_file(dir + "/synthetic_spread_probs.json");
  const MatrixXd table = SyntheticConfig::default_spread_probs();
  for (int c = 0; c < 4; ++c) {
    CHECK(spread.at("news")[c].get<double>() == table(0, c));
    CHECK(spread.at("misinformation")[c].get<double>() == table(1, c));
  }
}

TEST_CASE("metrics JSON writes undefined times as null") {
  MetricsReport m;
  m.mean_detection_time_news = std::nan("");
  const auto j = io::to_json(m);
  CHECK(j.at("mean_detection_time_news").is_null());
  CHECK(j.at("accuracy").is_number());
  CHECK(io::metrics_columns().size() == 14);
}
