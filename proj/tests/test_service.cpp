#include <catch_amalgamated.hpp>

#include <chrono>
#include <thread>

#include "partid/server.hpp"
#include "partid/service.hpp"

using namespace partid;
using json = nlohmann::json;
using Catch::Matchers::WithinAbs;

namespace {

service::Response call(json (*handler)(const json&), const json& body) {
  return service::handle(body.dump(), handler);
}

const json kPaperRegion = {{"mean", 0.544}, {"rate", 0.014}, {"assumption", {{"type", "agnostic"}}}};

}  // namespace

TEST_CASE("region endpoint", "[service][region]") {
  const auto r = call(&service::region, kPaperRegion);
  REQUIRE(r.status == 200);
  CHECK_THAT(r.body["lo"].get<double>(), WithinAbs(0.007616, 1e-12));
  CHECK_THAT(r.body["hi"].get<double>(), WithinAbs(0.993616, 1e-12));
  CHECK_THAT(r.body["mmr_predictor"].get<double>(), WithinAbs(0.500616, 1e-12));
  CHECK(r.body["schema_version"] == "1");

  json bad = kPaperRegion;
  bad["rate"] = 1.4;
  const auto e = call(&service::region, bad);
  CHECK(e.status == 400);
  CHECK(e.body["error"]["code"] == "validation_error");
  CHECK(e.body["error"]["detail"] == "/rate");
  CHECK(e.body["schema_version"] == "1");

  const auto infeasible = call(&service::region, {{"mean", 0.05}, {"rate", 0.5},
                                                  {"assumption", {{"type", "bounded_variation"}, {"delta0", 0.2}, {"delta1", 0.3}}}});
  CHECK(infeasible.status == 422);
  CHECK(infeasible.body["error"]["code"] == "infeasible_assumption");

  const auto undefined = call(&service::region, {{"rate", 0.0}, {"assumption", {{"type", "mar"}}}});
  CHECK(undefined.status == 422);
  CHECK(undefined.body["error"]["code"] == "undefined_mar");

  json unknown = kPaperRegion;
  unknown["colour"] = "red";
  const auto u = call(&service::region, unknown);
  CHECK(u.status == 400);
  CHECK(u.body["error"]["detail"] == "/colour");

  CHECK(service::handle("{not json", &service::region).status == 400);
  CHECK(call(&service::region, json::array()).status == 400);
}

TEST_CASE("region endpoint with an outcome scale", "[service][region]") {
  const auto r = call(&service::region, {{"mean", 7.0}, {"rate", 0.5}, {"scale", {{"lo", 0.0}, {"hi", 10.0}}}});
  REQUIRE(r.status == 200);
  CHECK_THAT(r.body["lo"].get<double>(), WithinAbs(0.35, 1e-12));
  CHECK_THAT(r.body["original"]["lo"].get<double>(), WithinAbs(3.5, 1e-12));
  CHECK_THAT(r.body["original"]["hi"].get<double>(), WithinAbs(8.5, 1e-12));
  CHECK(call(&service::region, {{"mean", 11.0}, {"rate", 0.5}, {"scale", {{"lo", 0.0}, {"hi", 10.0}}}}).status == 400);
}

TEST_CASE("decide endpoint", "[service][decide]") {
  const json body = {{"welfare", {{10, 0}, {4, 4}}}, {"prior", {0.9, 0.1}}};
  const auto r = call(&service::decide, body);
  REQUIRE(r.status == 200);
  CHECK(r.body["results"]["bayes"]["chosen"] == 0);
  CHECK(r.body["results"]["maximin"]["chosen"] == 1);
  CHECK(r.body["results"]["minimax_regret"]["chosen"] == 0);
  CHECK(r.body["results"]["minimax_regret"]["scores"] == json({4.0, 6.0}));
  CHECK(r.body["regret"] == json({{0.0, 4.0}, {6.0, 0.0}}));

  const auto only = call(&service::decide, {{"welfare", {{1, 2}, {2, 1}}}, {"criteria", {"maximin"}}});
  REQUIRE(only.status == 200);
  CHECK(only.body["results"].size() == 1);
  CHECK(only.body["results"]["maximin"]["optimal_set"] == json({0, 1}));

  CHECK(call(&service::decide, {{"welfare", {{1, 2}, {2}}}}).status == 400);
  CHECK(call(&service::decide, {{"welfare", {{1, 2}}}, {"criteria", {"bayes"}}}).status == 400);
  CHECK(call(&service::decide, {{"welfare", {{1, 2}}}, {"prior", {0.5, 0.6}}}).status == 400);
  CHECK(call(&service::decide, {{"welfare", {{1, 2}}}, {"criteria", {"hurwicz"}}}).status == 400);
}

TEST_CASE("treatment endpoint", "[service][treatment]") {
  const json problem = {
      {"stratum_label", "all"},
      {"arms",
       {{{"label", "a"}, {"share", 0.2}, {"observed_mean", 0.5},
         {"assumption", {{"type", "restriction_set"}, {"gamma", {{"lo", 0.125}, {"hi", 1.0}}}}}},
        {{"label", "b"}, {"share", 0.8}, {"observed_mean", 0.5},
         {"assumption", {{"type", "restriction_set"}, {"gamma", {{"lo", 0.0}, {"hi", 0.5}}}}}}}}};
  const auto r = call(&service::treatment, problem);
  REQUIRE(r.status == 200);
  CHECK_THAT(r.body["regions"][0]["lo"].get<double>(), WithinAbs(0.2, 1e-12));
  CHECK_THAT(r.body["regions"][0]["hi"].get<double>(), WithinAbs(0.9, 1e-12));
  CHECK_THAT(r.body["regions"][1]["lo"].get<double>(), WithinAbs(0.4, 1e-12));
  CHECK_THAT(r.body["regions"][1]["hi"].get<double>(), WithinAbs(0.5, 1e-12));
  CHECK(r.body["minimax_regret"]["chosen_label"] == "a");
  CHECK(r.body["maximin"]["chosen_label"] == "b");
  CHECK(r.body["chosen"] == "a");

  json maximin = problem;
  maximin["criterion"] = "maximin";
  const auto m = call(&service::treatment, maximin);
  CHECK(m.body["chosen"] == "b");
  CHECK_FALSE(m.body.contains("minimax_regret"));

  json single = problem;
  single["arms"].erase(1);
  const auto s = call(&service::treatment, single);
  CHECK(s.status == 400);
  CHECK(s.body["error"]["detail"] == "/arms");

  json bad_arm = problem;
  bad_arm["arms"][1]["share"] = 0.7;
  CHECK(call(&service::treatment, bad_arm).status == 400);

  json infeasible = problem;
  infeasible["arms"][1]["assumption"] = {{"type", "bounded_variation"}, {"delta0", 0.6}, {"delta1", 0.7}};
  const auto i = call(&service::treatment, infeasible);
  CHECK(i.status == 422);
  CHECK(i.body["error"]["message"].get<std::string>().find("arm 'b'") != std::string::npos);
}

TEST_CASE("sweep endpoint", "[service][sweep]") {
  const auto r = call(&service::sweep, {{"mean", 0.544}, {"rate", 0.014},
                                        {"grid", {{"start", 0}, {"stop", 0.5}, {"step", 0.05}}}});
  REQUIRE(r.status == 200);
  REQUIRE(r.body["rows"].size() == 11);
  CHECK(r.body["rows"][0]["width"] == 0.0);
  const auto mixed = call(&service::sweep, {{"mean", 0.05}, {"rate", 0.5}, {"deltas", {{0, 0}, {0.2, 0.3}}}});
  REQUIRE(mixed.status == 200);
  CHECK(mixed.body["rows"][1]["feasible"] == false);
  CHECK(mixed.body["rows"][1]["lo"].is_null());
  CHECK(call(&service::sweep, {{"mean", 0.5}, {"rate", 0.5}}).status == 400);
  CHECK(call(&service::sweep, {{"mean", 0.5}, {"rate", 0.5}, {"deltas", {{0.3, 0.2}}}}).status == 400);
}

TEST_CASE("poll-audit endpoint", "[service][poll]") {
  const json body = {{"poll_id", "may2024"}, {"candidate", "biden"}, {"respondent_share", 0.544},
                     {"response_rate", 0.014}, {"as_of", "2024-05-01"}};
  const auto r = call(&service::poll_audit, body);
  REQUIRE(r.status == 200);
  CHECK(r.body["agnostic_reported"]["lo"] == 0.007);
  CHECK(r.body["agnostic_reported"]["hi"] == 0.994);
  CHECK(r.body["mar_point"] == 0.544);
  CHECK_THAT(r.body["mmr_prediction"]["max_regret"].get<double>(), WithinAbs(0.243049, 1e-12));
  REQUIRE(r.body["regions"].size() == 2);

  json percent = body;
  percent["response_rate"] = 1.4;
  const auto e = call(&service::poll_audit, percent);
  CHECK(e.status == 400);
  CHECK(e.body["error"]["message"].get<std::string>().find("divide by 100") != std::string::npos);
}

TEST_CASE("simulate endpoint", "[service][simulate]") {
  const json cfg = {{"mechanism", {{"type", "mcar"}, {"observe_prob", 0.5}}},
                    {"sample_sizes", {100}},
                    {"replications", 5},
                    {"seed", 1}};
  const auto r = call(&service::simulate, cfg);
  REQUIRE(r.status == 200);
  CHECK(r.body["cells"].size() == 2);
  CHECK(r.body["true_mean"] == 0.5);
  CHECK(call(&service::simulate, cfg).body == r.body);

  json big = cfg;
  big["sample_sizes"] = {1000000};
  big["replications"] = 101;
  const auto cap = call(&service::simulate, big);
  CHECK(cap.status == 422);
  CHECK(cap.body["error"]["code"] == "limit_exceeded");

  json unknown = cfg;
  unknown["mechanism"] = {{"type", "selection"}};
  CHECK(call(&service::simulate, unknown).status == 400);
  json small = cfg;
  small["sample_sizes"] = {5};
  CHECK(call(&service::simulate, small).status == 400);
}

TEST_CASE("status mapping", "[service]") {
  CHECK(service::http_status(ErrorCode::validation) == 400);
  CHECK(service::http_status(ErrorCode::infeasible_assumption) == 422);
  CHECK(service::http_status(ErrorCode::undefined_mar) == 422);
  CHECK(service::http_status(ErrorCode::limit_exceeded) == 422);
  const auto internal = service::handle("{}", [](const json&) -> json { throw std::logic_error("boom"); });
  CHECK(internal.status == 500);
  CHECK(internal.body["error"]["code"] == "internal_error");
}

TEST_CASE("HTTP routes", "[service][http]") {
  httplib::Server srv;
  server::register_routes(srv);
  const int port = srv.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  const auto health = cli.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  const auto region = cli.Post("/v1/region", kPaperRegion.dump(), "application/json");
  REQUIRE(region);
  CHECK(region->status == 200);
  const json body = json::parse(region->body);
  CHECK(body == service::region(kPaperRegion));
  // Repeating a request gives the same answer.
  const auto again = cli.Post("/v1/region", kPaperRegion.dump(), "application/json");
  CHECK(again->body == region->body);

  json bad = kPaperRegion;
  bad["rate"] = 1.4;
  CHECK(cli.Post("/v1/region", bad.dump(), "application/json")->status == 400);
  const json infeasible = {{"mean", 0.05}, {"rate", 0.5},
                           {"assumption", {{"type", "bounded_variation"}, {"delta0", 0.2}, {"delta1", 0.3}}}};
  const auto i = cli.Post("/v1/region", infeasible.dump(), "application/json");
  CHECK(i->status == 422);
  CHECK(json::parse(i->body)["error"]["code"] == "infeasible_assumption");
  CHECK(cli.Post("/v1/decide", R"({"welfare": [[1, 0], [0, 1]]})", "application/json")->status == 200);
  CHECK(cli.Post("/v1/sweep", R"({"mean": 0.5, "rate": 0.5, "deltas": [[0, 0]]})", "application/json")->status == 200);
  CHECK(cli.Get("/v1/nothing")->status == 404);

  srv.stop();
  worker.join();
}
