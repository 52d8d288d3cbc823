// Apache License, Version 2.0, refer to LICENSE.txt

#include <sstream>

#include "doctest.h"
#include "support/helpers.hpp"
#include "topicfb/cli.hpp"
#include "topicfb/error.hpp"

using namespace topicfb;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("feedback_count") != std::string::npos);
  CHECK(run_cli({"fit", "--help"}).code == 0);

  const auto none = run_cli({});
  CHECK(none.code == 2);
  const auto bad = run_cli({"fit", "--nope"});
  CHECK(bad.code == 2);
  const auto err = Json::parse(bad.err);
  CHECK(err["error"]["kind"] == "usage");
  CHECK(err["exit_code"] == 2);
  CHECK(run_cli({"fit", "--posts", "x.csv"}).code == 2);  // no --out
  CHECK(run_cli({"evaluate", "--posts", "x.csv", "--out", "o", "--level", "1.5"}).code == 2);
  CHECK(run_cli({"fit", "--posts", "x.csv", "--out", "o", "--features", "zap"}).code == 2);
  CHECK(run_cli({"fit", "--posts", "/nonexistent/x.csv", "--out", "o"}).code == 3);
}

TEST_CASE("run config json") {
  RunConfig c;
  c.seed = 42;
  c.hyper.beta_g = 3.0;
  c.features = parse_features("prop,feedback", FeedbackFunctionKind::LogCount);
  c.ingest.day_origin = 100;
  const auto back = run_config_from_json(to_json(c));
  CHECK(back.seed == 42);
  CHECK(back.hyper.beta_g == 3.0);
  CHECK(back.features == c.features);
  CHECK(back.ingest.day_origin == 100);
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(run_config_from_json(Json{{"bogus", 1}}), UsageError);
  CHECK_THROWS_AS(run_config_from_json(Json{{"seed", "x"}}), UsageError);
  CHECK(run_config_from_json(Json{{"bootstrap", 9}}, back).seed == 42);
}

TEST_CASE("pipeline is deterministic and precedence holds") {
  testing::TempDir dir("cli");
  auto path = [&](const std::string& name) { return (dir / name).string(); };
  REQUIRE(run_cli({"synth", "--preset", "paper-c1", "--users", "16", "--seed", "4", "--out",
                   path("posts.csv"), "--truth", path("truth.json")})
              .code == 0);
  const std::vector<std::string> common{"--posts", path("posts.csv"), "--mode", "generic",
                                        "--feedback-fn", "n", "--day-origin", "1451606400",
                                        "--bootstrap", "4", "--seed", "11"};
  auto evaluate = [&](const std::string& tag, const std::string& threads) {
    std::vector<std::string> args{"evaluate", "--out", path("eval" + tag + ".json"),
                                  "--ensemble", path("ens" + tag + ".json"), "--threads",
                                  threads};
    args.insert(args.end(), common.begin(), common.end());
    return run_cli(args);
  };
  REQUIRE(evaluate("1", "1").code == 0);
  REQUIRE(evaluate("2", "2").code == 0);
  CHECK(testing::read_file(path("eval1.json")) == testing::read_file(path("eval2.json")));
  CHECK(testing::read_file(path("ens1.json")) == testing::read_file(path("ens2.json")));

  const auto s = run_cli({"susceptibility", "--ensemble", path("ens1.json"), "--truth",
                          path("truth.json"), "--out", path("s.csv"), "--summary",
                          path("s.json")});
  REQUIRE(s.code == 0);
  CHECK(Json::parse(s.out).contains("detection_accuracy"));
  const auto summary = read_json(path("s.json"));
  CHECK(summary["meta"]["config"]["seed"] == 11);
  CHECK(summary["meta"]["config"]["feedback_fn"] == "n");
  CHECK(summary["susceptibility"]["users"] == 16);

  REQUIRE(run_cli({"trends", "--ensemble", path("ens1.json"), "--out", path("t.csv")}).code == 0);
  REQUIRE(run_cli({"report", "--evaluation", path("eval1.json"), "--susceptibility",
                   path("s.csv"), "--truth", path("truth.json"), "--out", path("r.json")})
              .code == 0);
  const auto report = read_json(path("r.json"));
  CHECK(report["susceptibility"]["users"] == 16);
  CHECK(report["evaluation"]["configs"].size() == 1);

  // A config file overrides defaults; flags override the file.
  testing::write_file(path("cfg.json"), "{\"beta_u\": 0.5, \"seed\": 3}");
  std::vector<std::string> fit{"fit", "--config", path("cfg.json"), "--seed", "8",
                               "--out", path("p.json"), "--posts", path("posts.csv"),
                               "--mode", "generic", "--feedback-fn", "n"};
  REQUIRE(run_cli(fit).code == 0);
  const auto p = read_json(path("p.json"));
  CHECK(p["meta"]["config"]["beta_u"] == 0.5);
  CHECK(p["meta"]["seed"] == 8);
  const auto first = testing::read_file(path("p.json"));
  REQUIRE(run_cli(fit).code == 0);
  CHECK(testing::read_file(path("p.json")) == first);

  // Mismatched data is a data error.
  REQUIRE(run_cli({"synth", "--users", "17", "--out", path("other.csv")}).code == 0);
  const auto mismatch = run_cli({"susceptibility", "--ensemble", path("ens1.json"), "--posts",
                                 path("other.csv"), "--out", path("x.csv")});
  CHECK(mismatch.code == 3);
}
